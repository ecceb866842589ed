use promise_mc::explorer::{reach, Bounds, EngineKind, Outcome, ReachOptions};
use promise_mc::lang::parse;

#[test]
fn debug_eg1() {
    let src = std::fs::read_to_string(format!(
        "{}/corpus/eg1.wmm",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    let prog = parse(&src).unwrap();
    let b = Bounds {
        loop_unroll: 1,
        promise_bound: 4,
        essential_bound: Some(4),
        cert_depth: 16,
        max_steps: 20_000_000,
    };
    let v = reach(EngineKind::Ps2, &prog, None, &b, &ReachOptions::default()).unwrap();
    println!("outcome {:?} states {}", v.outcome, v.stats.states);
    if v.outcome == Outcome::Reachable {
        for t in v.trace.unwrap() {
            println!("  {}", t.detail);
        }
    }
}
