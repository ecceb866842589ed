//! Engine-level checks on the shipped litmus corpus.

use promise_mc::explorer::{
    cross_check, reach, Bounds, EngineKind, Outcome, ReachOptions, WitnessReq,
};
use promise_mc::lang::parse;

fn load(name: &str) -> promise_mc::lang::Program {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse(&src).unwrap()
}

fn bounds(l: u32, pb: u32, k: Option<u32>) -> Bounds {
    Bounds {
        loop_unroll: l,
        promise_bound: pb,
        essential_bound: k,
        cert_depth: 16,
        max_steps: 20_000_000,
    }
}

#[test]
fn lbd_promise_free_unreachable() {
    let prog = load("lbd.wmm");
    let v = reach(
        EngineKind::Ps2,
        &prog,
        None,
        &bounds(1, 0, None),
        &ReachOptions::default(),
    )
    .unwrap();
    assert_eq!(v.outcome, Outcome::UnreachableWithinBounds);
}

#[test]
fn lbd_reachable_with_promises_k3() {
    let prog = load("lbd.wmm");
    let v = reach(
        EngineKind::Ps2,
        &prog,
        None,
        &bounds(1, 1, Some(3)),
        &ReachOptions::default(),
    )
    .unwrap();
    assert_eq!(v.outcome, Outcome::Reachable);
    let trace = v.trace.unwrap();
    assert!(trace.iter().any(|t| t.rule == "promise"));
    // K = 2 is not enough: a promise plus two view switches are needed.
    let v2 = reach(
        EngineKind::Ps2,
        &prog,
        None,
        &bounds(1, 1, Some(2)),
        &ReachOptions::default(),
    )
    .unwrap();
    assert_eq!(v2.outcome, Outcome::UnreachableWithinBounds);
}

#[test]
fn lbd_lohow_agrees() {
    let prog = load("lbd.wmm");
    let rep = cross_check(&prog, None, &bounds(1, 1, None), &ReachOptions::default()).unwrap();
    assert!(rep.agree, "{rep:?}");
    assert_eq!(rep.ps2, Outcome::Reachable);
    let rep0 = cross_check(&prog, None, &bounds(1, 0, None), &ReachOptions::default()).unwrap();
    assert!(rep0.agree, "{rep0:?}");
    assert_eq!(rep0.ps2, Outcome::UnreachableWithinBounds);
}

#[test]
fn sb_reachable_promise_free_both_engines() {
    let prog = load("sb.wmm");
    let rep = cross_check(&prog, None, &bounds(1, 0, None), &ReachOptions::default()).unwrap();
    assert!(rep.agree, "{rep:?}");
    assert_eq!(rep.ps2, Outcome::Reachable);
}

#[test]
fn mp_rlx_reachable_mp_ra_unreachable() {
    let mp = load("mp.wmm");
    let v = reach(
        EngineKind::Ps2,
        &mp,
        None,
        &bounds(1, 0, None),
        &ReachOptions::default(),
    )
    .unwrap();
    assert_eq!(v.outcome, Outcome::Reachable);

    let mp_ra = load("mp_ra.wmm");
    let v = reach(
        EngineKind::Ps2,
        &mp_ra,
        None,
        &bounds(1, 1, Some(4)),
        &ReachOptions::default(),
    )
    .unwrap();
    assert_eq!(v.outcome, Outcome::UnreachableWithinBounds);
    // The LoHoW engine rejects ra programs.
    assert!(reach(
        EngineKind::Lohow,
        &mp_ra,
        None,
        &bounds(1, 0, None),
        &ReachOptions::default()
    )
    .is_err());
}

#[test]
fn eg1_unreachable_ps2() {
    let prog = load("eg1.wmm");
    let v = reach(
        EngineKind::Ps2,
        &prog,
        None,
        &bounds(1, 4, Some(4)),
        &ReachOptions::default(),
    )
    .unwrap();
    assert_eq!(v.outcome, Outcome::UnreachableWithinBounds);
}

#[test]
fn eg2_reachable_ps2_with_reservation_witness() {
    let prog = load("eg2.wmm");
    let v = reach(
        EngineKind::Ps2,
        &prog,
        None,
        &bounds(2, 1, None),
        &ReachOptions {
            reservations: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(v.outcome, Outcome::Reachable);
    let trace = v.trace.unwrap();
    assert!(trace.iter().any(|t| t.rule == "promise"));

    // A witness that also makes and cancels a reservation exists.
    let opts = ReachOptions {
        reservations: true,
        witness: WitnessReq {
            promises: 1,
            reserves: 1,
            cancels: 1,
        },
        ..Default::default()
    };
    let v2 = reach(EngineKind::Ps2, &prog, None, &bounds(2, 1, None), &opts).unwrap();
    assert_eq!(v2.outcome, Outcome::Reachable);
    let t2 = v2.trace.unwrap();
    assert!(t2.iter().any(|t| t.rule == "promise"));
    assert!(t2.iter().any(|t| t.rule == "reserve"));
    assert!(t2.iter().any(|t| t.rule == "cancel"));
}
