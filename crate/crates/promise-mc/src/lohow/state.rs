//! LoHoW states and the two-phase machine state.

use super::word::HWord;
use crate::lang::flat::{FlatProgram, ProcId};
use crate::lang::Value;

/// Per-process control and registers plus one higher-order word per location.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LoHoWState {
    pub pcs: Vec<usize>,
    pub regs: Vec<Value>,
    pub words: Vec<HWord>,
}

impl LoHoWState {
    pub fn well_formed(&self, n_procs: usize) -> bool {
        self.words.iter().all(|w| w.well_formed(n_procs))
    }

    pub fn promise_free(&self) -> bool {
        self.words.iter().all(|w| w.promise_count() == 0)
    }

    pub fn has_promise_of(&self, p: ProcId) -> bool {
        self.words.iter().any(|w| w.has_promise_of(p))
    }

    pub fn promise_count(&self) -> usize {
        self.words.iter().map(|w| w.promise_count()).sum()
    }

    /// One line per location in the stable dump format.
    pub fn dump(&self, prog: &FlatProgram) -> String {
        let names: Vec<&str> = prog.procs.iter().map(|p| p.name.as_str()).collect();
        prog.locations
            .iter()
            .zip(&self.words)
            .map(|(l, w)| format!("{}: {}", l, w.dump(&names)))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Std,
    Cert,
}

/// The two-phase machine state: in the standard phase `std_st` evolves and
/// `cert_st` is the snapshot taken at the last phase entry; in the
/// certification phase only `cert_st` evolves.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TwoPhaseState {
    pub phase: Phase,
    pub active: ProcId,
    pub std_st: LoHoWState,
    pub cert_st: LoHoWState,
}

/// Execution state for the explorer: the two-phase state plus loop counters
/// for each component and the certification step budget used so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LhExec {
    pub tp: TwoPhaseState,
    pub counters_std: Vec<u32>,
    pub counters_cert: Vec<u32>,
    pub cert_steps: u32,
}

impl LhExec {
    /// Initial two-phase states: `(std, p, init, init)` for each process,
    /// with every pc advanced to its first non-silent instruction.
    pub fn initials(prog: &FlatProgram, loop_bound: Option<u32>) -> Vec<LhExec> {
        use crate::lang::flat::{advance_silent, SilentResult};
        use crate::ps2::state::STUCK_PC;
        let mut regs = prog.init_regs();
        let mut counters = vec![0u32; prog.n_loops];
        let mut pcs = Vec::with_capacity(prog.n_procs());
        for p in 0..prog.n_procs() {
            match advance_silent(prog, ProcId(p), 0, regs.clone(), counters.clone(), loop_bound) {
                SilentResult::At {
                    pc,
                    regs: r,
                    loop_counters,
                } => {
                    pcs.push(pc);
                    regs = r;
                    counters = loop_counters;
                }
                SilentResult::Stuck => pcs.push(STUCK_PC),
            }
        }
        let st = LoHoWState {
            pcs,
            regs,
            words: (0..prog.n_locs())
                .map(|_| HWord::initial(prog.n_procs()))
                .collect(),
        };
        (0..prog.n_procs())
            .map(|p| LhExec {
                tp: TwoPhaseState {
                    phase: Phase::Std,
                    active: ProcId(p),
                    std_st: st.clone(),
                    cert_st: st.clone(),
                },
                counters_std: counters.clone(),
                counters_cert: counters.clone(),
                cert_steps: 0,
            })
            .collect()
    }
}
