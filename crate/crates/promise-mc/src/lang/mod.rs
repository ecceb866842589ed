//! Front end: parsing, validation, pretty-printing, and the compiled flat
//! form of the concurrent input language.

pub mod ast;
pub mod flat;
pub mod parse;
pub mod pretty;
pub mod validate;

pub use ast::{Mode, Program, Value, DEFAULT_VALUE_MAX};
pub use flat::{compile, FlatProgram, LocId, ProcId, RegId};
pub use parse::{parse, ParseError};
pub use pretty::pretty_print;
pub use validate::{validate, ValidationReport};
