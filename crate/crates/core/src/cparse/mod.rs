//! Parser for the Ghidra-flavoured C subset that decompiled FMU step
//! functions are rendered in.
//!
//! Component-struct accesses of the form `*(double *)(param_1 + 0x10)` are
//! kept as [`CodeExpr::Deref`] nodes rather than desugared pointer math.

mod ast;
pub mod interp;
mod lexer;
mod parser;
mod print;

use std::fmt;

pub use ast::*;
pub use parser::{parse_c_expr, parse_c_stmts, parse_c_unit};
pub use print::{print_expr, print_stmts, print_unit};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    pub(crate) fn new<const N: usize>(
        line: u32,
        column: u32,
        expected: [&str; N],
        found: &str,
    ) -> Self {
        ParseError {
            line,
            column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.to_string(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.line,
            self.column,
            self.expected.join(" or "),
            self.found
        )
    }
}

impl std::error::Error for ParseError {}
