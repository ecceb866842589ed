//! The two-phase LoHoW transition relation.

use super::state::{LhExec, LoHoWState, Phase, TwoPhaseState};
use super::word::{HWord, InsRule, MemType, MtKind, PtrSet, Sym};
use crate::lang::flat::{advance_silent, FlatOp, FlatProgram, LocId, ProcId, SilentResult};
use crate::lang::Value;
use crate::ps2::state::STUCK_PC;

#[derive(Debug, Clone)]
pub struct LhConfig {
    pub loop_bound: Option<u32>,
    /// Bound on simultaneous promise memory types (the K of K-LoHoW).
    pub promise_bound: u32,
    /// Bound on simultaneous reservation tags.
    pub reservation_bound: u32,
    pub cert_depth: u32,
    pub promising: Vec<bool>,
}

/// Insertion form of a write-like step; positions are flat 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InsForm {
    N { at: usize },
    E { at: usize },
    Sp { at: usize },
    Fp { at: usize },
    Sr { at: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LhOp {
    Read {
        loc: LocId,
        pos: usize,
    },
    Write {
        loc: LocId,
        form: InsForm,
    },
    /// RMW; `form = None` is a failed CAS (plain read).
    Update {
        loc: LocId,
        read_pos: usize,
        form: Option<InsForm>,
    },
    Promise {
        loc: LocId,
        val: Value,
        form: InsForm,
    },
    Make {
        loc: LocId,
        pos: usize,
    },
    CancelR {
        loc: LocId,
        pos: usize,
    },
    Fence,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LhStep {
    /// A process rule of the active process in the current phase.
    Op(LhOp),
    /// Lose one empty type or redundant word in the active component.
    Loss { loc: LocId, idx: usize },
    /// Standard -> certification: snapshot the standard state.
    EnterCert,
    /// Certification -> standard once the active process is promise-free;
    /// any process may become active.
    ExitCert { next: ProcId },
}

impl LhStep {
    pub fn rule_name(&self) -> &'static str {
        match self {
            LhStep::Op(LhOp::Read { .. }) => "read",
            LhStep::Op(LhOp::Write { form, .. }) => match form {
                InsForm::N { .. } => "write-n",
                InsForm::E { .. } => "write-e",
                InsForm::Sp { .. } => "write-sp",
                InsForm::Fp { .. } => "write-fp",
                InsForm::Sr { .. } => "write-sr",
            },
            LhStep::Op(LhOp::Update { form: None, .. }) => "cas-fail",
            LhStep::Op(LhOp::Update { .. }) => "update",
            LhStep::Op(LhOp::Promise { .. }) => "promise",
            LhStep::Op(LhOp::Make { .. }) => "reserve",
            LhStep::Op(LhOp::CancelR { .. }) => "cancel",
            LhStep::Op(LhOp::Fence) => "sc-fence",
            LhStep::Loss { .. } => "loss",
            LhStep::EnterCert => "enter-cert",
            LhStep::ExitCert { .. } => "exit-cert",
        }
    }

    pub fn render(&self, prog: &FlatProgram, active: ProcId) -> String {
        let pn = prog.proc_name(active);
        match self {
            LhStep::Op(op) => format!("{pn}: {op:?}"),
            LhStep::Loss { loc, idx } => {
                format!("loss {}[{}]", prog.loc_name(*loc), idx)
            }
            LhStep::EnterCert => format!("{pn}: enter certification"),
            LhStep::ExitCert { next } => {
                format!("{pn}: certified; activate {}", prog.proc_name(*next))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LhMeta {
    pub promise: bool,
    pub reserve: bool,
    pub cancel: bool,
}

fn active_state(ex: &LhExec) -> &LoHoWState {
    match ex.tp.phase {
        Phase::Std => &ex.tp.std_st,
        Phase::Cert => &ex.tp.cert_st,
    }
}

/// Total reservation tags in a state.
fn tag_count(st: &LoHoWState) -> usize {
    st.words
        .iter()
        .flat_map(|w| w.types())
        .filter(|(_, t)| t.reserved_by.is_some())
        .count()
}

/// Enumerate every step descriptor available in `ex`.
pub fn enumerate_steps(prog: &FlatProgram, cfg: &LhConfig, ex: &LhExec) -> Vec<LhStep> {
    let p = ex.tp.active;
    let cert = ex.tp.phase == Phase::Cert;
    let st = active_state(ex);
    let mut out = Vec::new();

    if !cert {
        out.push(LhStep::EnterCert);
    } else if !st.has_promise_of(p) {
        for q in 0..prog.n_procs() {
            out.push(LhStep::ExitCert { next: ProcId(q) });
        }
    }

    // Losses on the active component.
    for (li, w) in st.words.iter().enumerate() {
        for idx in 0..w.one_step_losses().len() {
            out.push(LhStep::Loss {
                loc: LocId(li),
                idx,
            });
        }
    }

    if cert && ex.cert_steps >= cfg.cert_depth {
        return out;
    }

    let pc = st.pcs[p.0];
    if pc != STUCK_PC && pc < prog.procs[p.0].ops.len() {
        match &prog.procs[p.0].ops[pc] {
            FlatOp::Read(_, l, _) => {
                let hw = &st.words[l.0];
                let pp = hw.ptr(p.0).expect("well-formed");
                for (pos, _) in hw.types() {
                    if pos >= pp {
                        out.push(LhStep::Op(LhOp::Read { loc: *l, pos }));
                    }
                }
            }
            FlatOp::Write(l, _, _) => {
                for form in write_forms(st, p, *l, cert) {
                    out.push(LhStep::Op(LhOp::Write { loc: *l, form }));
                }
            }
            FlatOp::Cas { loc, .. } | FlatOp::Fadd { loc, .. } => {
                for (read_pos, form) in update_forms(prog, st, p, *loc, cert) {
                    out.push(LhStep::Op(LhOp::Update {
                        loc: *loc,
                        read_pos,
                        form,
                    }));
                }
                if matches!(&prog.procs[p.0].ops[pc], FlatOp::Cas { .. }) {
                    // Failed CAS: a plain read anywhere at or right of the pointer.
                    let hw = &st.words[loc.0];
                    let pp = hw.ptr(p.0).expect("well-formed");
                    for (pos, _) in hw.types() {
                        if pos >= pp {
                            out.push(LhStep::Op(LhOp::Update {
                                loc: *loc,
                                read_pos: pos,
                                form: None,
                            }));
                        }
                    }
                }
            }
            FlatOp::Fence => out.push(LhStep::Op(LhOp::Fence)),
            FlatOp::Goal => {}
            _ => debug_assert!(false, "state not in silent normal form"),
        }
    }

    // Promises and reservations: standard phase only.
    if !cert && cfg.promising.get(p.0).copied().unwrap_or(false) {
        let total_prm: usize = st.promise_count();
        if (total_prm as u32) < cfg.promise_bound {
            for l in 0..prog.n_locs() {
                let hw = &st.words[l];
                let pp = hw.ptr(p.0).expect("well-formed");
                for v in 0..=prog.value_max {
                    for wi in 0..hw.words.len() {
                        let at = hw.last_pos(wi);
                        if at < pp {
                            continue;
                        }
                        out.push(LhStep::Op(LhOp::Promise {
                            loc: LocId(l),
                            val: v,
                            form: InsForm::N { at },
                        }));
                        if hw.words[wi].last.reserved_by.is_none() {
                            out.push(LhStep::Op(LhOp::Promise {
                                loc: LocId(l),
                                val: v,
                                form: InsForm::E { at },
                            }));
                        }
                    }
                }
            }
        }
        if (tag_count(st) as u32) < cfg.reservation_bound {
            for l in 0..prog.n_locs() {
                let hw = &st.words[l];
                let pp = hw.ptr(p.0).expect("well-formed");
                for wi in 0..hw.words.len() {
                    let at = hw.last_pos(wi);
                    if at >= pp && hw.words[wi].last.reserved_by.is_none() {
                        out.push(LhStep::Op(LhOp::Make {
                            loc: LocId(l),
                            pos: at,
                        }));
                    }
                }
            }
        }
    }
    // Cancelling is allowed in both phases.
    if cfg.promising.get(p.0).copied().unwrap_or(false) || cert {
        for l in 0..prog.n_locs() {
            let hw = &st.words[l.min(prog.n_locs() - 1)];
            let pp = hw.ptr(p.0).expect("well-formed");
            for wi in 0..hw.words.len() {
                let at = hw.last_pos(wi);
                if at >= pp && hw.words[wi].last.reserved_by == Some(p) {
                    out.push(LhStep::Op(LhOp::CancelR {
                        loc: LocId(l),
                        pos: at,
                    }));
                }
            }
        }
    }
    out
}

/// Write insertion forms available to `p` on `l`.
fn write_forms(st: &LoHoWState, p: ProcId, l: LocId, cert: bool) -> Vec<InsForm> {
    let hw = &st.words[l.0];
    let pp = hw.ptr(p.0).expect("well-formed");
    let mut out = Vec::new();
    if !cert {
        for wi in 0..hw.words.len() {
            let at = hw.last_pos(wi);
            if at < pp {
                continue;
            }
            out.push(InsForm::N { at });
            if hw.words[wi].last.reserved_by.is_none() {
                out.push(InsForm::E { at });
            }
        }
    } else {
        // Certification writes go only at the very end of the word...
        let at = hw.flat_len();
        out.push(InsForm::N { at });
        if hw.words.last().unwrap().last.reserved_by.is_none() {
            out.push(InsForm::E { at });
        }
        // ... or into a slot the process itself reserved.
        for wi in 0..hw.words.len() {
            let at = hw.last_pos(wi);
            if at >= pp && hw.words[wi].last.reserved_by == Some(p) {
                out.push(InsForm::Sr { at });
            }
        }
    }
    // Promise fulfilment (full or splitting), in both phases, strictly right
    // of the pointer.
    for (pos, t) in hw.types() {
        if pos > pp && t.kind == MtKind::Prm && t.owner == p {
            out.push(InsForm::Sp { at: pos });
            out.push(InsForm::Fp { at: pos });
        }
    }
    out
}

/// Update (RMW) forms: (read position, write form); the written type must be
/// interval-adjacent to the read type.
fn update_forms(
    prog: &FlatProgram,
    st: &LoHoWState,
    p: ProcId,
    l: LocId,
    cert: bool,
) -> Vec<(usize, Option<InsForm>)> {
    let _ = prog;
    let hw = &st.words[l.0];
    let pp = hw.ptr(p.0).expect("well-formed");
    let mut out = Vec::new();
    for wi in 0..hw.words.len() {
        let at = hw.last_pos(wi);
        if at < pp {
            continue;
        }
        let last = &hw.words[wi].last;
        if last.reserved_by.is_none() {
            // Append adjacent to the last symbol (std: any word; cert: only
            // the final one).
            if !cert || at == hw.flat_len() {
                out.push((at, Some(InsForm::E { at })));
            }
        } else if cert && last.reserved_by == Some(p) {
            // Split the reservation: read the tagged type, write into the slot.
            out.push((at, Some(InsForm::Sr { at })));
        }
    }
    // Fulfil a promise adjacent to the read type (both phases).
    for (pos, t) in hw.types() {
        if pos < pp {
            continue;
        }
        if let Some(next) = next_type_pos(hw, pos) {
            if let Some(Sym::Type(nt)) = hw.sym_at(next) {
                if nt.kind == MtKind::Prm && nt.owner == p && next > pp {
                    let _ = t;
                    out.push((pos, Some(InsForm::Sp { at: next })));
                    out.push((pos, Some(InsForm::Fp { at: next })));
                }
            }
        }
    }
    out
}

/// The next memory-type position interval-adjacent to `pos` (same simple
/// word, skipping the `#`).
fn next_type_pos(hw: &HWord, pos: usize) -> Option<usize> {
    match hw.sym_at(pos)? {
        Sym::Type(_) => match hw.sym_at(pos + 1) {
            Some(Sym::Type(_)) => Some(pos + 1),
            Some(Sym::Hash) => match hw.sym_at(pos + 2) {
                Some(Sym::Type(_)) => Some(pos + 2),
                _ => None,
            },
            None => None,
        },
        Sym::Hash => None,
    }
}

/// Apply a step; `None` when the descriptor is not enabled.
pub fn apply_step(
    prog: &FlatProgram,
    cfg: &LhConfig,
    ex: &LhExec,
    step: &LhStep,
) -> Option<(LhExec, LhMeta)> {
    let p = ex.tp.active;
    let cert = ex.tp.phase == Phase::Cert;
    let mut meta = LhMeta::default();

    match step {
        LhStep::EnterCert => {
            if cert {
                return None;
            }
            let mut cert_st = ex.tp.std_st.clone();
            for w in &mut cert_st.words {
                let last = &w.words.last().unwrap().last;
                if let Some(q) = last.reserved_by {
                    if q != p {
                        let marker = MemType::msg(last.val, q, PtrSet::empty());
                        w.words
                            .push(super::word::SimpleWord::singleton(marker));
                    }
                }
            }
            Some((
                LhExec {
                    tp: TwoPhaseState {
                        phase: Phase::Cert,
                        active: p,
                        std_st: ex.tp.std_st.clone(),
                        cert_st,
                    },
                    counters_std: ex.counters_std.clone(),
                    counters_cert: ex.counters_std.clone(),
                    cert_steps: 0,
                },
                meta,
            ))
        }
        LhStep::ExitCert { next } => {
            if !cert || ex.tp.cert_st.has_promise_of(p) {
                return None;
            }
            Some((
                LhExec {
                    tp: TwoPhaseState {
                        phase: Phase::Std,
                        active: *next,
                        std_st: ex.tp.std_st.clone(),
                        cert_st: ex.tp.cert_st.clone(),
                    },
                    counters_std: ex.counters_std.clone(),
                    counters_cert: ex.counters_cert.clone(),
                    cert_steps: 0,
                },
                meta,
            ))
        }
        LhStep::Loss { loc, idx } => {
            let st = active_state(ex);
            let losses = st.words[loc.0].one_step_losses();
            let hw = losses.get(*idx)?.clone();
            let mut st2 = st.clone();
            st2.words[loc.0] = hw;
            Some((replace_active(ex, st2, None), meta))
        }
        LhStep::Op(op) => {
            if cert && ex.cert_steps >= cfg.cert_depth {
                return None;
            }
            let st = active_state(ex);
            let pc = st.pcs[p.0];
            let flat_op = if pc != STUCK_PC && pc < prog.procs[p.0].ops.len() {
                Some(&prog.procs[p.0].ops[pc])
            } else {
                None
            };
            let loop_bound = if cert { None } else { cfg.loop_bound };
            let counters = match ex.tp.phase {
                Phase::Std => ex.counters_std.clone(),
                Phase::Cert => ex.counters_cert.clone(),
            };

            // Advance the silent suffix after an instruction-consuming op.
            let advance = |st: &mut LoHoWState,
                           counters: Vec<u32>,
                           keep_on_stuck: bool|
             -> Option<Vec<u32>> {
                match advance_silent(
                    prog,
                    p,
                    st.pcs[p.0] + 1,
                    st.regs.clone(),
                    counters.clone(),
                    loop_bound,
                ) {
                    SilentResult::At {
                        pc,
                        regs,
                        loop_counters,
                    } => {
                        st.pcs[p.0] = pc;
                        st.regs = regs;
                        Some(loop_counters)
                    }
                    SilentResult::Stuck => {
                        if keep_on_stuck {
                            st.pcs[p.0] = STUCK_PC;
                            Some(counters)
                        } else {
                            None
                        }
                    }
                }
            };

            let (st2, counters2) = match op {
                LhOp::Read { loc, pos } => {
                    let FlatOp::Read(r, l, _) = flat_op? else {
                        return None;
                    };
                    if l != loc {
                        return None;
                    }
                    let hw = &st.words[loc.0];
                    let pp = hw.ptr(p.0).ok()?;
                    if *pos < pp {
                        return None;
                    }
                    let Sym::Type(t) = hw.sym_at(*pos)? else {
                        return None;
                    };
                    let v = t.val;
                    let hw2 = hw.move_ptr(p.0, *pos).ok()?;
                    let mut st2 = st.clone();
                    st2.words[loc.0] = hw2;
                    st2.regs[r.0] = v;
                    let c = advance(&mut st2, counters, false)?;
                    (st2, c)
                }
                LhOp::Write { loc, form } => {
                    let FlatOp::Write(l, _, e) = flat_op? else {
                        return None;
                    };
                    if l != loc {
                        return None;
                    }
                    let v = prog.in_domain(e.eval(&st.regs))?;
                    let hw2 = apply_write_form(&st.words[loc.0], p, v, *form, cert)?;
                    let mut st2 = st.clone();
                    st2.words[loc.0] = hw2;
                    let c = advance(&mut st2, counters, true)?;
                    (st2, c)
                }
                LhOp::Update {
                    loc,
                    read_pos,
                    form,
                } => {
                    let (reg, v_r, v_w_opt) = match flat_op? {
                        FlatOp::Fadd {
                            reg, loc: l, addend, ..
                        } => {
                            if l != loc {
                                return None;
                            }
                            let hw = &st.words[loc.0];
                            let Sym::Type(t) = hw.sym_at(*read_pos)? else {
                                return None;
                            };
                            if form.is_none() {
                                return None; // FADD always writes
                            }
                            let v_w =
                                prog.in_domain(t.val as i128 + addend.eval(&st.regs))?;
                            (*reg, t.val, Some(v_w))
                        }
                        FlatOp::Cas {
                            reg,
                            loc: l,
                            expected,
                            desired,
                            ..
                        } => {
                            if l != loc {
                                return None;
                            }
                            let hw = &st.words[loc.0];
                            let Sym::Type(t) = hw.sym_at(*read_pos)? else {
                                return None;
                            };
                            let matches = expected.eval(&st.regs) == t.val as i128;
                            match form {
                                None => {
                                    if matches {
                                        return None;
                                    }
                                    (*reg, t.val, None)
                                }
                                Some(_) => {
                                    if !matches {
                                        return None;
                                    }
                                    let v_w = prog.in_domain(desired.eval(&st.regs))?;
                                    (*reg, t.val, Some(v_w))
                                }
                            }
                        }
                        _ => return None,
                    };
                    let hw = &st.words[loc.0];
                    let pp = hw.ptr(p.0).ok()?;
                    if *read_pos < pp {
                        return None;
                    }
                    match (form, v_w_opt) {
                        (None, None) => {
                            // Failed CAS: plain read.
                            let hw2 = hw.move_ptr(p.0, *read_pos).ok()?;
                            let mut st2 = st.clone();
                            st2.words[loc.0] = hw2;
                            st2.regs[reg.0] = v_r;
                            let c = advance(&mut st2, counters, false)?;
                            (st2, c)
                        }
                        (Some(form), Some(v_w)) => {
                            // Adjacency: the written type must directly follow
                            // the read type.
                            let ok = match form {
                                InsForm::E { at } | InsForm::Sr { at } => at == read_pos,
                                InsForm::Sp { at } | InsForm::Fp { at } => {
                                    next_type_pos(hw, *read_pos) == Some(*at)
                                }
                                InsForm::N { .. } => false,
                            };
                            if !ok {
                                return None;
                            }
                            if cert {
                                if let InsForm::E { at } = form {
                                    if *at != hw.flat_len() {
                                        return None;
                                    }
                                }
                            }
                            let hw2 = apply_write_form(hw, p, v_w, *form, cert)?;
                            let mut st2 = st.clone();
                            st2.words[loc.0] = hw2;
                            st2.regs[reg.0] = v_r;
                            let c = advance(&mut st2, counters, true)?;
                            (st2, c)
                        }
                        _ => return None,
                    }
                }
                LhOp::Promise { loc, val, form } => {
                    if cert || !cfg.promising.get(p.0).copied().unwrap_or(false) {
                        return None;
                    }
                    if (st.promise_count() as u32) >= cfg.promise_bound {
                        return None;
                    }
                    let hw = &st.words[loc.0];
                    let pp = hw.ptr(p.0).ok()?;
                    let ty = MemType::prm(*val, p);
                    let hw2 = match form {
                        InsForm::N { at } if *at >= pp => {
                            hw.insert(*at, ty, InsRule::N, false).ok()?
                        }
                        InsForm::E { at } if *at >= pp => {
                            hw.insert(*at, ty, InsRule::E, false).ok()?
                        }
                        _ => return None,
                    };
                    meta.promise = true;
                    let mut st2 = st.clone();
                    st2.words[loc.0] = hw2;
                    (st2, counters)
                }
                LhOp::Make { loc, pos } => {
                    if cert || !cfg.promising.get(p.0).copied().unwrap_or(false) {
                        return None;
                    }
                    if (tag_count(st) as u32) >= cfg.reservation_bound {
                        return None;
                    }
                    let hw = &st.words[loc.0];
                    let pp = hw.ptr(p.0).ok()?;
                    if *pos < pp {
                        return None;
                    }
                    let hw2 = hw.make_reservation(p, *pos).ok()?;
                    meta.reserve = true;
                    let mut st2 = st.clone();
                    st2.words[loc.0] = hw2;
                    (st2, counters)
                }
                LhOp::CancelR { loc, pos } => {
                    if !(cfg.promising.get(p.0).copied().unwrap_or(false) || cert) {
                        return None;
                    }
                    let hw = &st.words[loc.0];
                    let pp = hw.ptr(p.0).ok()?;
                    if *pos < pp {
                        return None;
                    }
                    let hw2 = hw.cancel_reservation(p, *pos).ok()?;
                    meta.cancel = true;
                    let mut st2 = st.clone();
                    st2.words[loc.0] = hw2;
                    (st2, counters)
                }
                LhOp::Fence => {
                    if !matches!(flat_op?, FlatOp::Fence) {
                        return None;
                    }
                    let g = super::word::g_index(prog.n_procs());
                    let mut st2 = st.clone();
                    for li in 0..prog.n_locs() {
                        let hw = &st2.words[li];
                        let pp = hw.ptr(p.0).ok()?;
                        let pg = hw.ptr(g).ok()?;
                        let i = pp.max(pg);
                        let hw2 = hw.move_ptr(p.0, i).ok()?.move_ptr(g, i).ok()?;
                        st2.words[li] = hw2;
                    }
                    let c = advance(&mut st2, counters, true)?;
                    (st2, c)
                }
            };

            #[cfg(debug_assertions)]
            {
                for w in &st2.words {
                    debug_assert!(w.well_formed(prog.n_procs()), "Inv1 violated: {w}");
                }
                // The certification snapshot may end in a cap marker owned by
                // the reserving process, which sits beyond that process's
                // pointer; Inv2 is only claimed for the active process there.
                let check: Vec<usize> = if cert {
                    vec![p.0]
                } else {
                    (0..prog.n_procs()).collect()
                };
                for q in check {
                    for w in &st2.words {
                        debug_assert!(w.inv2(ProcId(q)), "Inv2 violated for p{q}: {w}");
                    }
                }
            }

            Some((replace_active(ex, st2, Some(counters2)), meta))
        }
    }
}

/// Build the successor execution with the active component replaced.
fn replace_active(ex: &LhExec, st: LoHoWState, counters: Option<Vec<u32>>) -> LhExec {
    match ex.tp.phase {
        Phase::Std => LhExec {
            tp: TwoPhaseState {
                phase: Phase::Std,
                active: ex.tp.active,
                std_st: st,
                cert_st: ex.tp.cert_st.clone(),
            },
            counters_std: counters.unwrap_or_else(|| ex.counters_std.clone()),
            counters_cert: ex.counters_cert.clone(),
            cert_steps: ex.cert_steps,
        },
        Phase::Cert => LhExec {
            tp: TwoPhaseState {
                phase: Phase::Cert,
                active: ex.tp.active,
                std_st: ex.tp.std_st.clone(),
                cert_st: st,
            },
            counters_std: ex.counters_std.clone(),
            counters_cert: counters.unwrap_or_else(|| ex.counters_cert.clone()),
            cert_steps: ex.cert_steps + 1,
        },
    }
}

fn apply_write_form(
    hw: &HWord,
    p: ProcId,
    v: Value,
    form: InsForm,
    cert: bool,
) -> Option<HWord> {
    let pp = hw.ptr(p.0).ok()?;
    match form {
        InsForm::N { at } => {
            if at < pp || (cert && at != hw.flat_len()) {
                return None;
            }
            hw.insert(at, MemType::msg(v, p, PtrSet::empty()), InsRule::N, true)
                .ok()
        }
        InsForm::E { at } => {
            if at < pp || (cert && at != hw.flat_len()) {
                return None;
            }
            hw.insert(at, MemType::msg(v, p, PtrSet::empty()), InsRule::E, true)
                .ok()
        }
        InsForm::Sp { at } => {
            if at <= pp {
                return None;
            }
            hw.insert(at, MemType::msg(v, p, PtrSet::empty()), InsRule::SP, true)
                .ok()
        }
        InsForm::Fp { at } => {
            if at <= pp {
                return None;
            }
            // Fulfilment keeps the promised value: the write must agree.
            match hw.sym_at(at)? {
                Sym::Type(t) if t.kind == MtKind::Prm && t.owner == p && t.val == v => {}
                _ => return None,
            }
            hw.insert(at, MemType::msg(v, p, PtrSet::empty()), InsRule::FP, true)
                .ok()
        }
        InsForm::Sr { at } => {
            if !cert || at < pp {
                return None;
            }
            hw.insert(at, MemType::msg(v, p, PtrSet::empty()), InsRule::SR, true)
                .ok()
        }
    }
}

/// All successors of `ex`, applied.
pub fn successors(
    prog: &FlatProgram,
    cfg: &LhConfig,
    ex: &LhExec,
) -> Vec<(LhStep, LhExec, LhMeta)> {
    enumerate_steps(prog, cfg, ex)
        .into_iter()
        .filter_map(|d| apply_step(prog, cfg, ex, &d).map(|(e, m)| (d, e, m)))
        .collect()
}
