//! Concrete syntax: lexing, the generic expression tree, program sections,
//! data literals, macro expansion and canonical rendering.

mod lexer;
mod node;
mod program;

use thiserror::Error;

pub use lexer::Pos;
pub use node::{parse_expr, parse_toplevel, quote, Node, NodeKind};
pub use program::{
    block_node_count, expand_instrs, expand_macros, parse_program, render_program, Cmp, Data, Instr, Macro,
    RawProgram, CORE_OPCODES,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: String,
    pub found: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, expected: impl Into<String>, found: impl Into<String>) -> SyntaxError {
        SyntaxError { pos, expected: expected.into(), found: found.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("duplicate `{0}` section")]
    DuplicateSection(String),
    #[error("missing `{0}` section")]
    MissingSection(&'static str),
    #[error("unknown macro `{0}`")]
    UnknownMacro(String),
}
