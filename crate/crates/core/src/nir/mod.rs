//! NIR: a small structural RTL dialect with unsigned values, one clock and an
//! implicit reset that loads register `init` values at cycle 0.

mod ast;
mod diag;
pub mod flatten;
mod parser;
mod printer;
mod scope;
mod validate;

pub use ast::*;
pub use diag::{DiagCode, Diagnostic, Site};
pub use flatten::{flatten, FlatNetlist};
pub use parser::{parse_circuit, parse_int, ParseError, Pos};
pub use printer::{print_circuit, print_expr};
pub use scope::{binary_width, ModuleScope, Resolved, SignalScope};
pub use validate::validate_circuit;
