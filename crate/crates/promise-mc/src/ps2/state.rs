//! Machine states.

use super::memory::Memory;
use super::view::View;
use crate::lang::flat::FlatProgram;
use crate::lang::Value;

/// Sentinel pc for a process that can never take another step (failed
/// assume, loop bound, or domain overflow inside a silent suffix).
pub const STUCK_PC: usize = usize::MAX;

/// A PS 2.0 machine state. Promise sets are stored inside the memory
/// elements (`promised_by`), which keeps the "every promise is in memory"
/// invariant structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MachineState {
    /// Per-process program counter into the flat form; `ops.len()` means the
    /// process terminated, [`STUCK_PC`] that it is permanently stuck.
    pub pcs: Vec<usize>,
    /// All registers of the program (union over processes).
    pub regs: Vec<Value>,
    /// Per-process views.
    pub views: Vec<View>,
    pub memory: Memory,
    /// Global view used by SC fences.
    pub global: View,
}

impl MachineState {
    pub fn terminated(&self, p: usize, prog: &FlatProgram) -> bool {
        self.pcs[p] != STUCK_PC && self.pcs[p] >= prog.procs[p].ops.len()
    }

    /// Machine state invariant: every view entry is 0 or the `to` of some
    /// message on that location.
    pub fn views_in_memory(&self) -> bool {
        let check_view = |v: &View| {
            v.0.iter().enumerate().all(|(li, t)| {
                t.is_zero()
                    || self.memory.locs[li]
                        .iter()
                        .any(|e| e.is_msg() && &e.to == t)
            })
        };
        self.views.iter().all(check_view) && check_view(&self.global)
    }
}

/// Execution state carried by the explorer: the machine state plus the
/// per-loop unrolling counters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exec {
    pub ms: MachineState,
    pub loop_counters: Vec<u32>,
}

impl Exec {
    /// The initial execution state with every process advanced to its first
    /// non-silent instruction.
    pub fn initial(prog: &FlatProgram, loop_bound: Option<u32>) -> Exec {
        use crate::lang::flat::{advance_silent, ProcId, SilentResult};
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
        Exec {
            ms: MachineState {
                pcs,
                regs,
                views: vec![View::init(prog.n_locs()); prog.n_procs()],
                memory: Memory::init(prog.n_locs()),
                global: View::init(prog.n_locs()),
            },
            loop_counters: counters,
        }
    }
}
