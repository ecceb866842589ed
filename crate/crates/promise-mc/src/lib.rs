//! Bounded reachability checking for concurrent programs under the
//! promising semantics (PS 2.0).
//!
//! Three interchangeable engines decide whether a set of `goal` labels is
//! reachable in a finite-data concurrent program:
//!
//! * [`explorer`] over the direct [`ps2`] operational semantics,
//! * [`explorer`] over the [`lohow`] word-based semantics (relaxed accesses
//!   only), with a [`wsts`] backward-coverability procedure for the
//!   bounded-promise fragment, and
//! * a source-to-source translation ([`s2s`]) into a context-bounded
//!   sequentially consistent program executed by [`scexec`].
//!
//! The [`lang`] module provides the `.wmm` front end; [`cli`] wires
//! everything into the `promise-mc` binary.

pub mod explorer;
pub mod lang;
pub mod lohow;
pub mod ps2;

pub mod cli;
pub mod gen;
pub mod report;
pub mod s2s;
pub mod scexec;
pub mod wsts;

mod book;
