//! The PS 2.0 operational semantics: timestamps, views, the
//! message/reservation memory with its four insertion modes, process and
//! machine transitions, capped memory, and the consistency check.

pub mod canon_key;
pub mod memory;
pub mod state;
pub mod step;
pub mod time;
pub mod view;

pub use canon_key::{canonicalize, CanonMachine, CertKey};
pub use memory::{Elem, ElemKind, InsertError, InsertMode, Memory, Placement};
pub use state::{Exec, MachineState, STUCK_PC};
pub use step::{
    apply_step, certify, enumerate_steps, machine_successors, proc_successors, CertCache,
    ConsistencyMode, PsStep, StepConfig, StepMeta, WriteKind,
};
pub use time::Ts;
pub use view::View;
