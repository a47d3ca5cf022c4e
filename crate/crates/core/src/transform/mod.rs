//! HighIR transformations: fusion, normalization and index reduction.

mod fuse;
mod normal_form;
mod normalize;
mod reduce;
pub mod rewrite;

use thiserror::Error;

use crate::ir::{sexpr_expr, IrError, Program, Rhs};

pub use fuse::{dedupe_params, fuse, fuse_ops, should_fuse};
pub use normal_form::{first_violation, is_normal};
pub use normalize::{fuel_for, normalize, Tracer};
pub use reduce::{reduce_indices, sum_chain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("rewriting did not terminate within {fuel} steps in {pass}")]
    FuelExhausted { pass: &'static str, fuel: usize },
    #[error("{stmt} is not in normal form after rewriting: {term}")]
    NotNormal { stmt: String, term: String },
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Fuses, normalizes and reduces every operator of `prog`.
pub fn transform_high(prog: &mut Program, mut tracer: Option<&mut Tracer<'_>>) -> Result<(), TransformError> {
    fuse(prog)?;
    for s in &mut prog.stmts {
        let Rhs::Ein(app) = &mut s.rhs else { continue };
        if app.op.is_field_valued() {
            continue;
        }
        let op = normalize(&app.op, tracer.as_deref_mut())?;
        let mut op = reduce_indices(&op, tracer.as_deref_mut())?;
        if let Some(bad) = first_violation(&op.body) {
            return Err(TransformError::NotNormal { stmt: s.lhs.to_string(), term: sexpr_expr(bad) });
        }
        let kept = op.prune_params();
        app.args = kept.iter().map(|&k| app.args[k]).collect();
        app.op = op;
        fuse::dedupe_params(app);
    }
    prog.remove_dead();
    prog.validate()?;
    Ok(())
}

#[cfg(test)]
mod tests;
