//! The LoHoW semantics: memory types, simple and higher-order words, the
//! five insertion rules, reservations, losses, and the two-phase machine.
//! Relaxed accesses only.

pub mod state;
pub mod step;
pub mod word;

pub use state::{LhExec, LoHoWState, Phase, TwoPhaseState};
pub use step::{apply_step, enumerate_steps, successors, InsForm, LhConfig, LhMeta, LhOp, LhStep};
pub use word::{g_index, HWord, InsRule, MemType, MtKind, PtrSet, SimpleWord, Sym, WordError};
