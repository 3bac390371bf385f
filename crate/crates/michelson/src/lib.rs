//! A Michelson subset: concrete syntax, static stack typing and a
//! gas-metered interpreter whose emitted transfers are deferred to the caller.

pub mod address;
pub mod binary;
pub mod contracts;
pub mod gas;
pub mod interp;
pub mod syntax;
pub mod testkit;
pub mod typecheck;
pub mod types;
pub mod value;

pub use address::{AddrKind, Address};
pub use interp::{run_script, trace_run, ContractTypes, ExecEnv, ExecError, ExecErrorKind, ExecResult, TraceStep};
pub use syntax::{expand_macros, parse_program, render_program, Data, Instr, ParseError, RawProgram, SyntaxError};
pub use typecheck::{check_data, parse_data, typecheck_program, DataError, Op, TypeError, TypedProgram};
pub use types::Ty;
pub use value::{InternalOp, Value};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
}

/// Parses, expands and typechecks a program.
pub fn load(src: &str) -> Result<TypedProgram, LoadError> {
    let raw = parse_program(src)?;
    Ok(typecheck_program(&expand_macros(&raw)?)?)
}
