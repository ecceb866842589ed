//! The PS 2.0 transition relation: process steps, the machine relation, and
//! the consistency (certification) check against the capped memory.

use super::memory::{Elem, ElemKind, Memory};
use super::state::{Exec, MachineState, STUCK_PC};
use super::time::Ts;
use super::view::View;
use crate::lang::flat::{advance_silent, FlatOp, FlatProgram, LocId, ProcId, SilentResult};
use crate::lang::{Mode, Value};
use std::collections::HashMap;

/// When the consistency check runs and which processes it covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsistencyMode {
    /// After every machine step, certify the stepping process.
    Stepper,
    /// After every machine step, certify every process holding promises.
    All,
    /// Never (promise-free explorations need no certification).
    Off,
}

/// Parameters of the step relation.
#[derive(Debug, Clone)]
pub struct StepConfig {
    /// Loop unrolling bound; `None` means unbounded with silent-cycle cutting.
    pub loop_bound: Option<u32>,
    /// Maximum simultaneous outstanding promised messages (machine-wide).
    pub promise_bound: u32,
    /// Maximum simultaneous outstanding reservations (machine-wide).
    pub reservation_bound: u32,
    /// Which processes may promise and reserve.
    pub promising: Vec<bool>,
    /// Certification step budget.
    pub cert_depth: u32,
    pub consistency: ConsistencyMode,
}

impl StepConfig {
    pub fn promise_free(n_procs: usize, loop_bound: Option<u32>) -> StepConfig {
        StepConfig {
            loop_bound,
            promise_bound: 0,
            reservation_bound: 0,
            promising: vec![false; n_procs],
            cert_depth: 16,
            consistency: ConsistencyMode::Off,
        }
    }
}

/// How a write commits its message.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WriteKind {
    /// Fresh message via additive insertion.
    New { after: usize, adjacent: bool },
    /// Fulfil an outstanding promise in place (lowering insertion).
    FulfilLower { promise: usize },
    /// Split an outstanding promise and fulfil its left part.
    FulfilSplit { promise: usize },
}

/// Structural step descriptor. Indices refer to the per-location element
/// order of the *pre* state, so a descriptor replays against any state with
/// the same element structure (canonical or raw).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PsStep {
    Read {
        proc: ProcId,
        loc: LocId,
        msg: usize,
    },
    Write {
        proc: ProcId,
        loc: LocId,
        kind: WriteKind,
    },
    /// RMW; `write` is `None` for a failed CAS (plain read).
    Update {
        proc: ProcId,
        loc: LocId,
        read: usize,
        write: Option<WriteKind>,
    },
    Fence {
        proc: ProcId,
    },
    Promise {
        proc: ProcId,
        loc: LocId,
        val: Value,
        after: usize,
        adjacent: bool,
    },
    Reserve {
        proc: ProcId,
        loc: LocId,
        after_msg: usize,
    },
    CancelRes {
        proc: ProcId,
        loc: LocId,
        res: usize,
    },
}

impl PsStep {
    pub fn proc(&self) -> ProcId {
        match self {
            PsStep::Read { proc, .. }
            | PsStep::Write { proc, .. }
            | PsStep::Update { proc, .. }
            | PsStep::Fence { proc }
            | PsStep::Promise { proc, .. }
            | PsStep::Reserve { proc, .. }
            | PsStep::CancelRes { proc, .. } => *proc,
        }
    }

    pub fn rule_name(&self) -> &'static str {
        match self {
            PsStep::Read { .. } => "read",
            PsStep::Write {
                kind: WriteKind::New { .. },
                ..
            } => "write",
            PsStep::Write {
                kind: WriteKind::FulfilLower { .. },
                ..
            } => "fulfil",
            PsStep::Write {
                kind: WriteKind::FulfilSplit { .. },
                ..
            } => "fulfil-split",
            PsStep::Update { write: None, .. } => "cas-fail",
            PsStep::Update { .. } => "update",
            PsStep::Fence { .. } => "sc-fence",
            PsStep::Promise { .. } => "promise",
            PsStep::Reserve { .. } => "reserve",
            PsStep::CancelRes { .. } => "cancel",
        }
    }

    pub fn render(&self, prog: &FlatProgram) -> String {
        let pn = |p: &ProcId| prog.proc_name(*p).to_string();
        match self {
            PsStep::Read { proc, loc, msg } => {
                format!("{}: read {}[{}]", pn(proc), prog.loc_name(*loc), msg)
            }
            PsStep::Write { proc, loc, kind } => {
                format!("{}: write {} {:?}", pn(proc), prog.loc_name(*loc), kind)
            }
            PsStep::Update {
                proc,
                loc,
                read,
                write,
            } => format!(
                "{}: rmw {}[{}] {:?}",
                pn(proc),
                prog.loc_name(*loc),
                read,
                write
            ),
            PsStep::Fence { proc } => format!("{}: sc-fence", pn(proc)),
            PsStep::Promise {
                proc,
                loc,
                val,
                after,
                adjacent,
            } => format!(
                "{}: promise {}={} after[{}]{}",
                pn(proc),
                prog.loc_name(*loc),
                val,
                after,
                if *adjacent { " adj" } else { "" }
            ),
            PsStep::Reserve {
                proc,
                loc,
                after_msg,
            } => format!(
                "{}: reserve {} after[{}]",
                pn(proc),
                prog.loc_name(*loc),
                after_msg
            ),
            PsStep::CancelRes { proc, loc, res } => {
                format!("{}: cancel {}[{}]", pn(proc), prog.loc_name(*loc), res)
            }
        }
    }
}

/// Outcome metadata used for bounding and witness filters.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepMeta {
    /// Promise, reservation, or view-altering read.
    pub essential: bool,
    pub promise: bool,
    pub reserve: bool,
    pub cancel: bool,
}

/// Enumerate every process-level step descriptor available to `p`.
/// `cert` selects certification mode: promises and reservations are then
/// disabled (they belong to the standard phase).
pub fn enumerate_steps(
    prog: &FlatProgram,
    cfg: &StepConfig,
    exec: &Exec,
    p: ProcId,
    cert: bool,
) -> Vec<PsStep> {
    let ms = &exec.ms;
    let mut out = Vec::new();
    let pc = ms.pcs[p.0];
    let ops = &prog.procs[p.0].ops;

    if pc != STUCK_PC && pc < ops.len() {
        match &ops[pc] {
            FlatOp::Read(_, l, _) => {
                for (i, e) in ms.memory.elems(*l).iter().enumerate() {
                    if e.is_msg() && ms.views[p.0].get(*l) <= &e.to {
                        out.push(PsStep::Read {
                            proc: p,
                            loc: *l,
                            msg: i,
                        });
                    }
                }
            }
            FlatOp::Write(l, mode, _) => {
                enumerate_writes(prog, ms, p, *l, *mode, None, &mut out);
            }
            FlatOp::Cas { loc, mode_r, .. } | FlatOp::Fadd { loc, mode_r, .. } => {
                for (i, e) in ms.memory.elems(*loc).iter().enumerate() {
                    if e.is_msg() && ms.views[p.0].get(*loc) <= &e.to {
                        enumerate_update_writes(prog, ms, p, *loc, i, *mode_r, &ops[pc], &mut out);
                    }
                }
            }
            FlatOp::Fence => out.push(PsStep::Fence { proc: p }),
            FlatOp::Goal => {}
            _ => debug_assert!(false, "state not in silent normal form"),
        }
    }

    // Promise / reserve / cancel steps do not consume the instruction.
    if !cert && cfg.promising.get(p.0).copied().unwrap_or(false) {
        if (ms.memory.promise_count() as u32) < cfg.promise_bound {
            for l in 0..prog.n_locs() {
                let l = LocId(l);
                for v in 0..=prog.value_max {
                    for pl in ms.memory.write_placements(l, ms.views[p.0].get(l)) {
                        out.push(PsStep::Promise {
                            proc: p,
                            loc: l,
                            val: v,
                            after: pl.after,
                            adjacent: pl.adjacent,
                        });
                    }
                }
            }
        }
        if (ms.memory.reservation_count() as u32) < cfg.reservation_bound {
            for l in 0..prog.n_locs() {
                let l = LocId(l);
                for pl in ms.memory.reservation_placements(l, ms.views[p.0].get(l)) {
                    out.push(PsStep::Reserve {
                        proc: p,
                        loc: l,
                        after_msg: pl.after,
                    });
                }
            }
        }
    }
    // Cancelling is allowed in both phases.
    if cfg.promising.get(p.0).copied().unwrap_or(false) || cert {
        for l in 0..prog.n_locs() {
            let l = LocId(l);
            for (i, e) in ms.memory.elems(l).iter().enumerate() {
                if e.is_res() && e.promised_by == Some(p) && &e.frm >= ms.views[p.0].get(l) {
                    out.push(PsStep::CancelRes {
                        proc: p,
                        loc: l,
                        res: i,
                    });
                }
            }
        }
    }
    out
}

fn enumerate_writes(
    prog: &FlatProgram,
    ms: &MachineState,
    p: ProcId,
    l: LocId,
    mode: Mode,
    _addend: Option<()>,
    out: &mut Vec<PsStep>,
) {
    let view = ms.views[p.0].get(l);
    // A release write requires an empty promise set on the location and can
    // never fulfil.
    if mode == Mode::Ra && ms.memory.has_promise_on(p, l) {
        return;
    }
    for pl in ms.memory.write_placements(l, view) {
        out.push(PsStep::Write {
            proc: p,
            loc: l,
            kind: WriteKind::New {
                after: pl.after,
                adjacent: pl.adjacent,
            },
        });
    }
    if mode == Mode::Rlx {
        for (i, e) in ms.memory.elems(l).iter().enumerate() {
            if e.is_promise_of(p) && view < &e.to {
                out.push(PsStep::Write {
                    proc: p,
                    loc: l,
                    kind: WriteKind::FulfilLower { promise: i },
                });
                // A split point exists whenever the interval has room above
                // the view.
                if Ts::mid(&ts_max(&e.frm, view), &e.to) > *view {
                    out.push(PsStep::Write {
                        proc: p,
                        loc: l,
                        kind: WriteKind::FulfilSplit { promise: i },
                    });
                }
            }
        }
    }
}

fn enumerate_update_writes(
    prog: &FlatProgram,
    ms: &MachineState,
    p: ProcId,
    l: LocId,
    read_idx: usize,
    _mode_r: Mode,
    op: &FlatOp,
    out: &mut Vec<PsStep>,
) {
    let _ = prog;
    let mode_w = match op {
        FlatOp::Cas { mode_w, .. } | FlatOp::Fadd { mode_w, .. } => *mode_w,
        _ => unreachable!(),
    };
    // A failed CAS acts as a plain read; emit it unconditionally for CAS and
    // let apply() sort out whether the expectation matches.
    if matches!(op, FlatOp::Cas { .. }) {
        out.push(PsStep::Update {
            proc: p,
            loc: l,
            read: read_idx,
            write: None,
        });
    }
    if mode_w == Mode::Ra && ms.memory.has_promise_on(p, l) {
        return;
    }
    let read_to = ms.memory.elems(l)[read_idx].to.clone();
    if ms.memory.slot_after(l, read_idx).is_some() {
        out.push(PsStep::Update {
            proc: p,
            loc: l,
            read: read_idx,
            write: Some(WriteKind::New {
                after: read_idx,
                adjacent: true,
            }),
        });
    }
    if mode_w == Mode::Rlx {
        for (i, e) in ms.memory.elems(l).iter().enumerate() {
            // The update's write must start exactly at the read's `to`.
            if e.is_promise_of(p) && e.frm == read_to {
                out.push(PsStep::Update {
                    proc: p,
                    loc: l,
                    read: read_idx,
                    write: Some(WriteKind::FulfilLower { promise: i }),
                });
                out.push(PsStep::Update {
                    proc: p,
                    loc: l,
                    read: read_idx,
                    write: Some(WriteKind::FulfilSplit { promise: i }),
                });
            }
        }
    }
}

fn ts_max(a: &Ts, b: &Ts) -> Ts {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Apply a step descriptor. Returns the successor and metadata, or `None`
/// when the descriptor is not enabled in this state (replay then diverged or
/// a value went out of domain).
pub fn apply_step(
    prog: &FlatProgram,
    cfg: &StepConfig,
    exec: &Exec,
    step: &PsStep,
    cert: bool,
) -> Option<(Exec, StepMeta)> {
    let ms = &exec.ms;
    let p = step.proc();
    let mut meta = StepMeta::default();
    let loop_bound = if cert { None } else { cfg.loop_bound };

    // Helper: commit register/label effects of the instruction at `p` and
    // advance the silent suffix. `keep_on_stuck` keeps the successor with a
    // stuck pc (memory was already mutated); otherwise the step is dropped.
    let advance = |pcs: &mut Vec<usize>,
                   regs: Vec<Value>,
                   counters: Vec<u32>,
                   keep_on_stuck: bool|
     -> Option<(Vec<Value>, Vec<u32>)> {
        match advance_silent(prog, p, pcs[p.0] + 1, regs.clone(), counters.clone(), loop_bound) {
            SilentResult::At {
                pc,
                regs,
                loop_counters,
            } => {
                pcs[p.0] = pc;
                Some((regs, loop_counters))
            }
            SilentResult::Stuck => {
                if keep_on_stuck {
                    pcs[p.0] = STUCK_PC;
                    Some((regs, counters))
                } else {
                    None
                }
            }
        }
    };

    let pc = ms.pcs[p.0];
    let op = if pc != STUCK_PC && pc < prog.procs[p.0].ops.len() {
        Some(&prog.procs[p.0].ops[pc])
    } else {
        None
    };

    match step {
        PsStep::Read { loc, msg, .. } => {
            let FlatOp::Read(r, l, mode) = op? else {
                return None;
            };
            if l != loc {
                return None;
            }
            let e = ms.memory.elems(*loc).get(*msg)?;
            if !e.is_msg() || ms.views[p.0].get(*loc) > &e.to {
                return None;
            }
            let mut regs = ms.regs.clone();
            regs[r.0] = e.val().unwrap();
            let mut view = ms.views[p.0].clone();
            view.set(*loc, e.to.clone());
            if *mode == Mode::Ra {
                if let ElemKind::Msg { view: Some(k), .. } = &e.kind {
                    view = view.join(k);
                }
            }
            meta.essential = view != ms.views[p.0];
            let mut pcs = ms.pcs.clone();
            let (regs, counters) = advance(&mut pcs, regs, exec.loop_counters.clone(), false)?;
            let mut views = ms.views.clone();
            views[p.0] = view;
            Some((
                Exec {
                    ms: MachineState {
                        pcs,
                        regs,
                        views,
                        memory: ms.memory.clone(),
                        global: ms.global.clone(),
                    },
                    loop_counters: counters,
                },
                meta,
            ))
        }
        PsStep::Write { loc, kind, .. } => {
            let FlatOp::Write(l, mode, e) = op? else {
                return None;
            };
            if l != loc {
                return None;
            }
            let v = prog.in_domain(e.eval(&ms.regs))?;
            let (memory, to) = commit_write(prog, ms, p, *loc, *mode, v, kind)?;
            let mut view = ms.views[p.0].clone();
            view.set(*loc, to.clone());
            let mut memory = memory;
            if *mode == Mode::Ra {
                attach_release_view(&mut memory, *loc, &to, &view);
            }
            let mut pcs = ms.pcs.clone();
            let (regs, counters) =
                advance(&mut pcs, ms.regs.clone(), exec.loop_counters.clone(), true)?;
            let mut views = ms.views.clone();
            views[p.0] = view;
            Some((
                Exec {
                    ms: MachineState {
                        pcs,
                        regs,
                        views,
                        memory,
                        global: ms.global.clone(),
                    },
                    loop_counters: counters,
                },
                meta,
            ))
        }
        PsStep::Update {
            loc, read, write, ..
        } => {
            let (reg, l, mode_r, mode_w) = match op? {
                FlatOp::Cas {
                    reg,
                    loc,
                    mode_r,
                    mode_w,
                    ..
                }
                | FlatOp::Fadd {
                    reg,
                    loc,
                    mode_r,
                    mode_w,
                    ..
                } => (*reg, *loc, *mode_r, *mode_w),
                _ => return None,
            };
            if l != *loc {
                return None;
            }
            let e = ms.memory.elems(*loc).get(*read)?.clone();
            if !e.is_msg() || ms.views[p.0].get(*loc) > &e.to {
                return None;
            }
            let v_r = e.val().unwrap();
            // Read part of the view update.
            let mut view = ms.views[p.0].clone();
            view.set(*loc, e.to.clone());
            if mode_r == Mode::Ra {
                if let ElemKind::Msg { view: Some(k), .. } = &e.kind {
                    view = view.join(k);
                }
            }
            let read_altering = view != ms.views[p.0];

            let mut regs = ms.regs.clone();
            // Value computation.
            let v_w = match op? {
                FlatOp::Fadd { addend, .. } => {
                    let add = addend.eval(&ms.regs);
                    if write.is_none() {
                        return None; // FADD always writes
                    }
                    prog.in_domain(v_r as i128 + add)?
                }
                FlatOp::Cas {
                    expected, desired, ..
                } => {
                    let exp = expected.eval(&ms.regs);
                    let matches = exp == v_r as i128;
                    match write {
                        None => {
                            if matches {
                                return None; // matching CAS must write
                            }
                            0 // unused
                        }
                        Some(_) => {
                            if !matches {
                                return None;
                            }
                            prog.in_domain(desired.eval(&ms.regs))?
                        }
                    }
                }
                _ => unreachable!(),
            };
            regs[reg.0] = v_r;

            match write {
                None => {
                    // Failed CAS: plain read.
                    meta.essential = read_altering;
                    let mut pcs = ms.pcs.clone();
                    let (regs, counters) =
                        advance(&mut pcs, regs, exec.loop_counters.clone(), false)?;
                    let mut views = ms.views.clone();
                    views[p.0] = view;
                    Some((
                        Exec {
                            ms: MachineState {
                                pcs,
                                regs,
                                views,
                                memory: ms.memory.clone(),
                                global: ms.global.clone(),
                            },
                            loop_counters: counters,
                        },
                        meta,
                    ))
                }
                Some(kind) => {
                    if mode_w == Mode::Ra && ms.memory.has_promise_on(p, *loc) {
                        return None;
                    }
                    // The new message must start exactly at the read's `to`.
                    let (memory, to) = commit_update_write(ms, p, *loc, v_w, &e.to, kind)?;
                    meta.essential = read_altering;
                    view.set(*loc, to.clone());
                    let mut memory = memory;
                    if mode_w == Mode::Ra {
                        attach_release_view(&mut memory, *loc, &to, &view);
                    }
                    let mut pcs = ms.pcs.clone();
                    let (regs, counters) =
                        advance(&mut pcs, regs, exec.loop_counters.clone(), true)?;
                    let mut views = ms.views.clone();
                    views[p.0] = view;
                    Some((
                        Exec {
                            ms: MachineState {
                                pcs,
                                regs,
                                views,
                                memory,
                                global: ms.global.clone(),
                            },
                            loop_counters: counters,
                        },
                        meta,
                    ))
                }
            }
        }
        PsStep::Fence { .. } => {
            if !matches!(op?, FlatOp::Fence) {
                return None;
            }
            let view = ms.views[p.0].join(&ms.global);
            let global = ms.global.join(&ms.views[p.0]);
            let mut pcs = ms.pcs.clone();
            let (regs, counters) =
                advance(&mut pcs, ms.regs.clone(), exec.loop_counters.clone(), true)?;
            let mut views = ms.views.clone();
            views[p.0] = view;
            Some((
                Exec {
                    ms: MachineState {
                        pcs,
                        regs,
                        views,
                        memory: ms.memory.clone(),
                        global,
                    },
                    loop_counters: counters,
                },
                meta,
            ))
        }
        PsStep::Promise {
            loc,
            val,
            after,
            adjacent,
            ..
        } => {
            if cert {
                return None;
            }
            let pl = ms
                .memory
                .write_placements(*loc, ms.views[p.0].get(*loc))
                .into_iter()
                .find(|pl| pl.after == *after && pl.adjacent == *adjacent)?;
            let elem = Elem {
                frm: pl.frm,
                to: pl.to,
                kind: ElemKind::Msg {
                    val: *val,
                    view: None,
                },
                promised_by: Some(p),
            };
            let memory = ms.memory.insert_additive(*loc, elem).ok()?;
            meta.essential = true;
            meta.promise = true;
            Some((
                Exec {
                    ms: MachineState {
                        memory,
                        ..ms.clone()
                    },
                    loop_counters: exec.loop_counters.clone(),
                },
                meta,
            ))
        }
        PsStep::Reserve { loc, after_msg, .. } => {
            if cert {
                return None;
            }
            let pl = ms
                .memory
                .reservation_placements(*loc, ms.views[p.0].get(*loc))
                .into_iter()
                .find(|pl| pl.after == *after_msg)?;
            let elem = Elem {
                frm: pl.frm,
                to: pl.to,
                kind: ElemKind::Res,
                promised_by: Some(p),
            };
            let memory = ms.memory.insert_additive(*loc, elem).ok()?;
            meta.essential = true;
            meta.reserve = true;
            Some((
                Exec {
                    ms: MachineState {
                        memory,
                        ..ms.clone()
                    },
                    loop_counters: exec.loop_counters.clone(),
                },
                meta,
            ))
        }
        PsStep::CancelRes { loc, res, .. } => {
            let e = ms.memory.elems(*loc).get(*res)?.clone();
            if !e.is_res() || e.promised_by != Some(p) {
                return None;
            }
            let memory = ms.memory.cancel(*loc, &e).ok()?;
            meta.cancel = true;
            Some((
                Exec {
                    ms: MachineState {
                        memory,
                        ..ms.clone()
                    },
                    loop_counters: exec.loop_counters.clone(),
                },
                meta,
            ))
        }
    }
}

/// Commit a plain write per its kind; returns the updated memory and the
/// message's `to` timestamp.
fn commit_write(
    prog: &FlatProgram,
    ms: &MachineState,
    p: ProcId,
    l: LocId,
    mode: Mode,
    v: Value,
    kind: &WriteKind,
) -> Option<(Memory, Ts)> {
    let _ = prog;
    let view = ms.views[p.0].get(l);
    match kind {
        WriteKind::New { after, adjacent } => {
            let pl = ms
                .memory
                .write_placements(l, view)
                .into_iter()
                .find(|pl| pl.after == *after && pl.adjacent == *adjacent)?;
            let elem = Elem {
                frm: pl.frm,
                to: pl.to.clone(),
                kind: ElemKind::Msg { val: v, view: None },
                promised_by: None,
            };
            let memory = ms.memory.insert_additive(l, elem).ok()?;
            Some((memory, pl.to))
        }
        WriteKind::FulfilLower { promise } => {
            if mode == Mode::Ra {
                return None;
            }
            let e = ms.memory.elems(l).get(*promise)?.clone();
            if !e.is_promise_of(p) || e.val() != Some(v) || view >= &e.to {
                return None;
            }
            let lowered = Elem {
                frm: e.frm.clone(),
                to: e.to.clone(),
                kind: ElemKind::Msg { val: v, view: None },
                promised_by: None,
            };
            let memory = ms.memory.insert_lower(l, lowered).ok()?;
            Some((memory, e.to))
        }
        WriteKind::FulfilSplit { promise } => {
            if mode == Mode::Ra {
                return None;
            }
            let e = ms.memory.elems(l).get(*promise)?.clone();
            if !e.is_promise_of(p) {
                return None;
            }
            let lo = ts_max(&e.frm, view);
            if lo >= e.to {
                return None;
            }
            let s = Ts::mid(&lo, &e.to);
            if &s <= view {
                return None;
            }
            let part = Elem {
                frm: e.frm.clone(),
                to: s.clone(),
                kind: ElemKind::Msg { val: v, view: None },
                promised_by: None,
            };
            let memory = ms.memory.insert_split(l, part).ok()?;
            Some((memory, s))
        }
    }
}

/// Commit an update's write, which must start exactly at `read_to`.
fn commit_update_write(
    ms: &MachineState,
    p: ProcId,
    l: LocId,
    v: Value,
    read_to: &Ts,
    kind: &WriteKind,
) -> Option<(Memory, Ts)> {
    match kind {
        WriteKind::New { after, .. } => {
            let (frm, to) = ms.memory.slot_after(l, *after)?;
            if &frm != read_to {
                return None;
            }
            let elem = Elem {
                frm,
                to: to.clone(),
                kind: ElemKind::Msg { val: v, view: None },
                promised_by: None,
            };
            let memory = ms.memory.insert_additive(l, elem).ok()?;
            Some((memory, to))
        }
        WriteKind::FulfilLower { promise } => {
            let e = ms.memory.elems(l).get(*promise)?.clone();
            if !e.is_promise_of(p) || e.val() != Some(v) || &e.frm != read_to {
                return None;
            }
            let lowered = Elem {
                frm: e.frm.clone(),
                to: e.to.clone(),
                kind: ElemKind::Msg { val: v, view: None },
                promised_by: None,
            };
            let memory = ms.memory.insert_lower(l, lowered).ok()?;
            Some((memory, e.to))
        }
        WriteKind::FulfilSplit { promise } => {
            let e = ms.memory.elems(l).get(*promise)?.clone();
            if !e.is_promise_of(p) || &e.frm != read_to {
                return None;
            }
            let s = Ts::mid(&e.frm, &e.to);
            let part = Elem {
                frm: e.frm.clone(),
                to: s.clone(),
                kind: ElemKind::Msg { val: v, view: None },
                promised_by: None,
            };
            let memory = ms.memory.insert_split(l, part).ok()?;
            Some((memory, s))
        }
    }
}

/// Attach the writer's updated view to the message ending at `to` (release
/// writes carry their view).
fn attach_release_view(memory: &mut Memory, l: LocId, to: &Ts, view: &View) {
    for e in &mut memory.locs[l.0] {
        if e.is_msg() && &e.to == to {
            if let ElemKind::Msg { view: v, .. } = &mut e.kind {
                *v = Some(view.clone());
            }
        }
    }
}

/// All process-level successors of `p`, already applied.
pub fn proc_successors(
    prog: &FlatProgram,
    cfg: &StepConfig,
    exec: &Exec,
    p: ProcId,
    cert: bool,
) -> Vec<(PsStep, Exec, StepMeta)> {
    enumerate_steps(prog, cfg, exec, p, cert)
        .into_iter()
        .filter_map(|d| apply_step(prog, cfg, exec, &d, cert).map(|(e, m)| (d, e, m)))
        .collect()
}

/// Certification: can `p` fulfil all its promised messages, running alone
/// from the capped memory, within `cert_depth` steps? Returns the witnessing
/// step sequence on success.
pub fn certify(
    prog: &FlatProgram,
    cfg: &StepConfig,
    ms: &MachineState,
    p: ProcId,
) -> Option<Vec<PsStep>> {
    if !ms.memory.locs.iter().flatten().any(|e| e.is_promise_of(p)) {
        return Some(Vec::new());
    }
    let start = Exec {
        ms: MachineState {
            memory: ms.memory.capped(p),
            ..ms.clone()
        },
        loop_counters: vec![0; prog.n_loops],
    };
    // BFS bounded by cert_depth; dedupe on the raw state (certification
    // memories stay small).
    let mut seen: HashMap<Exec, ()> = HashMap::new();
    let mut frontier: Vec<(Exec, Vec<PsStep>)> = vec![(start.clone(), Vec::new())];
    seen.insert(start, ());
    for _ in 0..cfg.cert_depth {
        let mut next = Vec::new();
        for (ex, trace) in &frontier {
            for (d, succ, _) in proc_successors(prog, cfg, ex, p, true) {
                if !succ.ms.memory.locs.iter().flatten().any(|e| e.is_promise_of(p)) {
                    let mut t = trace.clone();
                    t.push(d);
                    return Some(t);
                }
                if !seen.contains_key(&succ) {
                    seen.insert(succ.clone(), ());
                    let mut t = trace.clone();
                    t.push(d);
                    next.push((succ, t));
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        frontier = next;
    }
    None
}

/// A memoizing wrapper around [`certify`], keyed on the canonical
/// projection of the process configuration.
#[derive(Default)]
pub struct CertCache {
    map: HashMap<super::canon_key::CertKey, bool>,
    pub hits: u64,
    pub misses: u64,
}

impl CertCache {
    pub fn check(
        &mut self,
        key: super::canon_key::CertKey,
        prog: &FlatProgram,
        cfg: &StepConfig,
        ms: &MachineState,
        p: ProcId,
    ) -> bool {
        if let Some(v) = self.map.get(&key) {
            self.hits += 1;
            return *v;
        }
        self.misses += 1;
        let v = certify(prog, cfg, ms, p).is_some();
        self.map.insert(key, v);
        v
    }
}

/// Machine-level successors: the union over processes of the lifted process
/// steps, filtered by the configured consistency discipline.
pub fn machine_successors(
    prog: &FlatProgram,
    cfg: &StepConfig,
    exec: &Exec,
    cache: &mut CertCache,
) -> Vec<(PsStep, Exec, StepMeta)> {
    let mut out = Vec::new();
    for p in 0..prog.n_procs() {
        let p = ProcId(p);
        for (d, succ, meta) in proc_successors(prog, cfg, exec, p, false) {
            let ok = match cfg.consistency {
                ConsistencyMode::Off => true,
                ConsistencyMode::Stepper => {
                    let key = super::canon_key::cert_key(prog, &succ.ms, p);
                    cache.check(key, prog, cfg, &succ.ms, p)
                }
                ConsistencyMode::All => (0..prog.n_procs()).all(|q| {
                    let q = ProcId(q);
                    let key = super::canon_key::cert_key(prog, &succ.ms, q);
                    cache.check(key, prog, cfg, &succ.ms, q)
                }),
            };
            if ok {
                out.push((d, succ, meta));
            }
        }
    }
    out
}
