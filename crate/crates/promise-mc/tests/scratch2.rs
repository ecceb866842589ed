use promise_mc::lang::flat::{compile, ProcId};
use promise_mc::lang::parse;
use promise_mc::ps2::{
    machine_successors, CertCache, ConsistencyMode, Exec, StepConfig,
};

#[test]
fn debug_promise_first() {
    let src = std::fs::read_to_string(format!(
        "{}/corpus/lbd.wmm",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    let prog = parse(&src).unwrap();
    let flat = compile(&prog);
    let cfg = StepConfig {
        loop_bound: Some(1),
        promise_bound: 1,
        reservation_bound: 1,
        promising: vec![true, true],
        cert_depth: 16,
        consistency: ConsistencyMode::Stepper,
    };
    let mut cache = CertCache::default();
    let mut cur = Exec::initial(&flat, Some(1));
    let script = [
        "p2: promise x=1 after[0] adj",
        "p1: read x[1]",
        "p1: write y New { after: 0, adjacent: true }",
        "p2: read y[1]",
        "p2: write x FulfilLower { promise: 1 }",
    ];
    for want in script {
        let succs = machine_successors(&flat, &cfg, &cur, &mut cache);
        println!("--- looking for `{want}` among {}:", succs.len());
        let mut found = None;
        for (d, e, _) in &succs {
            let r = d.render(&flat);
            if r == want {
                found = Some(e.clone());
            }
        }
        match found {
            Some(e) => {
                println!("  ok; pcs={:?}", e.ms.pcs);
                cur = e;
            }
            None => {
                for (d, _, _) in &succs {
                    println!("  have: {}", d.render(&flat));
                }
                panic!("missing step: {want}");
            }
        }
    }
    println!("final promise-free: {}", !cur.ms.memory.has_any_promise());
    println!("final pcs: {:?}", cur.ms.pcs);
}
