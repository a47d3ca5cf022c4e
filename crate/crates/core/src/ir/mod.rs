//! The EIN intermediate representation: indexed expressions, operators and
//! the SSA programs that embed them.

mod check;
mod expr;
mod print;
mod program;
mod subst;

pub use check::{check_wellformed, shape_of, Binders, IrError};
pub use expr::{freshen_binders, BinaryOp, EinOp, Expr, Index, IndexVar, ParamId, ParamKind, UnaryOp, VarGen};
pub use print::{pretty, sexpr, sexpr_expr, var_name, Style};
pub use program::{Assign, Domain, EinApp, InputDecl, InputKind, OutputDecl, Prim, Program, Rhs, Ty, Var};
pub use subst::{substitute, Replacement};
