//! Surface language: parsing, printing and type checking into the Simple AST.

pub mod ast;
mod error;
mod lexer;
mod parser;
mod pretty;
pub mod simple;
mod typecheck;

pub use ast::{Decl, Expr, ExprKind, Span, SurfaceProgram, TypeExpr};
pub use error::FrontendError;
pub use parser::{parse, parse_expr};
pub use pretty::{print_expr, print_program, print_type};
pub use simple::{SBinding, SOp, SOutput, SType, SVar, SimpleProgram};
pub use typecheck::typecheck;

/// Parses and type checks a source text.
pub fn compile_source(src: &str) -> Result<SimpleProgram, FrontendError> {
    typecheck(&parse(src)?)
}
