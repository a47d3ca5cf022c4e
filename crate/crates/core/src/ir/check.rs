//! Well-formedness of EIN operators and the shape (free-index list) of subexpressions.

use thiserror::Error;

use super::expr::{EinOp, Expr, Index, IndexVar, ParamId, ParamKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrError {
    #[error("index variable {0:?} is not bound")]
    UnboundIndex(IndexVar),
    #[error("parameter {0} is not declared")]
    UnboundParam(ParamId),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("epsilon used with wrong dimension: {0}")]
    EpsilonDimMismatch(String),
    #[error("parameter {param} is used with {found} indices but its replacement has {expected}")]
    ArityMismatch { param: ParamId, expected: usize, found: usize },
    #[error("index variable {0:?} bound twice")]
    DuplicateIndex(IndexVar),
    #[error("malformed expression: {0}")]
    Malformed(String),
}

/// Binding context: index map first, then enclosing summations outermost first.
pub type Binders = Vec<(IndexVar, usize)>;

/// Checks scoping of parameters and indices plus shape consistency.
pub fn check_wellformed(op: &EinOp) -> Result<(), IrError> {
    let mut ctx: Binders = Vec::new();
    for &(v, b) in &op.index_map {
        if ctx.iter().any(|&(w, _)| w == v) {
            return Err(IrError::DuplicateIndex(v));
        }
        if b == 0 {
            return Err(IrError::ShapeMismatch(format!("index {v:?} has bound 0")));
        }
        ctx.push((v, b));
    }
    Checker { op }.expr(&op.body, &mut ctx, false)
}

struct Checker<'a> {
    op: &'a EinOp,
}

impl Checker<'_> {
    fn param(&self, p: ParamId) -> Result<&ParamKind, IrError> {
        self.op.params.get(p).ok_or(IrError::UnboundParam(p))
    }

    fn index(&self, ix: Index, bound: Option<usize>, ctx: &Binders, what: &str) -> Result<(), IrError> {
        match ix {
            Index::Var(v) => {
                let &(_, b) = ctx.iter().rev().find(|&&(w, _)| w == v).ok_or(IrError::UnboundIndex(v))?;
                match bound {
                    Some(expected) if expected != b => Err(IrError::ShapeMismatch(format!(
                        "{what}: index {v:?} ranges over {b} but the slot has size {expected}"
                    ))),
                    _ => Ok(()),
                }
            }
            Index::Const(c) => match bound {
                Some(expected) if c >= expected => Err(IrError::ShapeMismatch(format!(
                    "{what}: constant index {c} out of range {expected}"
                ))),
                _ => Ok(()),
            },
        }
    }

    fn indices(&self, ixs: &[Index], shape: &[usize], ctx: &Binders, what: &str) -> Result<(), IrError> {
        if ixs.len() != shape.len() {
            return Err(IrError::ShapeMismatch(format!(
                "{what}: {} indices for a value of order {}",
                ixs.len(),
                shape.len()
            )));
        }
        for (&ix, &b) in ixs.iter().zip(shape) {
            self.index(ix, Some(b), ctx, what)?;
        }
        Ok(())
    }

    fn epsilon(&self, ixs: &[Index], dim: usize, ctx: &Binders) -> Result<(), IrError> {
        for &ix in ixs {
            match ix {
                Index::Var(v) => {
                    let &(_, b) = ctx.iter().rev().find(|&&(w, _)| w == v).ok_or(IrError::UnboundIndex(v))?;
                    if b != dim {
                        return Err(IrError::EpsilonDimMismatch(format!("index {v:?} ranges over {b}, expected {dim}")));
                    }
                }
                Index::Const(c) if c >= dim => {
                    return Err(IrError::EpsilonDimMismatch(format!("constant {c} in a {dim}-dimensional epsilon")));
                }
                Index::Const(_) => {}
            }
        }
        Ok(())
    }

    /// Spatial dimension of the first field leaf in `e`, if any.
    fn field_dim(&self, e: &Expr) -> Option<usize> {
        let mut dim = None;
        e.visit(&mut |n| {
            if dim.is_some() {
                return;
            }
            match n {
                Expr::Field { param, .. } => {
                    if let Some(ParamKind::Field { dim: d, .. }) = self.op.params.get(*param) {
                        dim = Some(*d);
                    }
                }
                Expr::Conv { image, .. } => {
                    if let Some(ParamKind::Image { dim: d, .. }) = self.op.params.get(*image) {
                        dim = Some(*d);
                    }
                }
                _ => {}
            }
        });
        dim
    }

    fn expr(&self, e: &Expr, ctx: &mut Binders, under_probe: bool) -> Result<(), IrError> {
        match e {
            Expr::Const(_) => Ok(()),
            Expr::Tensor { param, indices } => match self.param(*param)? {
                ParamKind::Tensor(shape) => self.indices(indices, shape, ctx, "tensor"),
                other => Err(IrError::ShapeMismatch(format!("parameter {param} is {other}, used as a tensor"))),
            },
            Expr::Field { param, indices } => match self.param(*param)? {
                ParamKind::Field { shape, .. } => self.indices(indices, shape, ctx, "field"),
                other => Err(IrError::ShapeMismatch(format!("parameter {param} is {other}, used as a field"))),
            },
            Expr::Delta(a, b) => {
                self.index(*a, None, ctx, "delta")?;
                self.index(*b, None, ctx, "delta")
            }
            Expr::Epsilon2(a, b) => self.epsilon(&[*a, *b], 2, ctx),
            Expr::Epsilon3(a, b, c) => self.epsilon(&[*a, *b, *c], 3, ctx),
            Expr::Unary(_, x) | Expr::Lift(x) => self.expr(x, ctx, under_probe),
            Expr::Binary(_, a, b) => {
                self.expr(a, ctx, under_probe)?;
                self.expr(b, ctx, under_probe)
            }
            Expr::Sum { var, bound, body } => {
                if ctx.iter().any(|&(w, _)| w == *var) {
                    return Err(IrError::DuplicateIndex(*var));
                }
                if *bound == 0 {
                    return Err(IrError::ShapeMismatch(format!("summation over {var:?} has bound 0")));
                }
                ctx.push((*var, *bound));
                let r = self.expr(body, ctx, under_probe);
                ctx.pop();
                r
            }
            Expr::Probe { field, pos } => {
                if under_probe {
                    return Err(IrError::Malformed("nested probe".into()));
                }
                if !field.is_field_valued() {
                    return Err(IrError::Malformed("probe of a tensor-valued expression".into()));
                }
                let dim = self.field_dim(field);
                match (self.param(*pos)?, dim) {
                    (ParamKind::Tensor(s), Some(d)) if s.as_slice() != [d] => {
                        return Err(IrError::ShapeMismatch(format!("probe position {s:?} for a {d}-dimensional field")))
                    }
                    (ParamKind::Tensor(_), _) => {}
                    (other, _) => {
                        return Err(IrError::ShapeMismatch(format!("probe position parameter is {other}")));
                    }
                }
                self.expr(field, ctx, true)
            }
            Expr::Conv { image, comps, kernel, derivs } => {
                let ParamKind::Image { dim, shape } = self.param(*image)? else {
                    return Err(IrError::ShapeMismatch(format!("parameter {image} is not an image")));
                };
                if !matches!(self.param(*kernel)?, ParamKind::Kernel(_)) {
                    return Err(IrError::ShapeMismatch(format!("parameter {kernel} is not a kernel")));
                }
                self.indices(comps, shape, ctx, "convolution")?;
                for &d in derivs {
                    self.index(d, Some(*dim), ctx, "kernel derivative")?;
                }
                Ok(())
            }
            Expr::Partial { axis, body } => {
                let dim = self.field_dim(body);
                self.index(*axis, dim, ctx, "partial derivative")?;
                self.expr(body, ctx, under_probe)
            }
            Expr::Voxel { image, base, offsets, comps, .. } => {
                let ParamKind::Image { dim, shape } = self.param(*image)? else {
                    return Err(IrError::ShapeMismatch(format!("parameter {image} is not an image")));
                };
                if self.param(*base)? != &ParamKind::Tensor(vec![*dim]) || offsets.len() != *dim {
                    return Err(IrError::ShapeMismatch("voxel base/offsets do not match image dimension".into()));
                }
                for &o in offsets {
                    self.index(o, None, ctx, "voxel offset")?;
                }
                self.indices(comps, shape, ctx, "voxel")
            }
            Expr::KernelWeight { kernel, frac, axis, derivs, offset, .. } => {
                if !matches!(self.param(*kernel)?, ParamKind::Kernel(_)) {
                    return Err(IrError::ShapeMismatch(format!("parameter {kernel} is not a kernel")));
                }
                let ParamKind::Tensor(s) = self.param(*frac)? else {
                    return Err(IrError::ShapeMismatch("kernel weight fraction must be a tensor".into()));
                };
                if s.len() != 1 || *axis >= s[0] {
                    return Err(IrError::ShapeMismatch("kernel weight axis outside the fraction vector".into()));
                }
                for &d in derivs {
                    self.index(d, Some(s[0]), ctx, "kernel weight derivative")?;
                }
                self.index(*offset, None, ctx, "kernel weight offset")
            }
        }
    }
}

/// Free index variables of `e`, with bounds, in the order of their binding
/// sites in `ctx` (index map first, then enclosing sums outermost first).
pub fn shape_of(e: &Expr, ctx: &[(IndexVar, usize)]) -> Vec<(IndexVar, usize)> {
    let free = e.free_vars();
    ctx.iter().filter(|(v, _)| free.contains(v)).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: u32) -> Index {
        Index::Var(IndexVar(n))
    }

    fn vec3() -> ParamKind {
        ParamKind::Tensor(vec![3])
    }

    #[test]
    fn dot_product_is_wellformed() {
        let body = Expr::sum(IndexVar(0), 3, Expr::mul(Expr::tensor(0, vec![v(0)]), Expr::tensor(1, vec![v(0)])));
        let op = EinOp::new(vec![vec3(), vec3()], body, vec![]);
        assert_eq!(check_wellformed(&op), Ok(()));
    }

    #[test]
    fn unbound_index_is_reported() {
        let op = EinOp::new(vec![vec3()], Expr::tensor(0, vec![v(1)]), vec![(IndexVar(0), 3)]);
        assert_eq!(check_wellformed(&op), Err(IrError::UnboundIndex(IndexVar(1))));
    }

    #[test]
    fn cross_product_is_wellformed() {
        let body = Expr::sums(
            &[(IndexVar(1), 3), (IndexVar(2), 3)],
            Expr::product(vec![
                Expr::Epsilon3(v(0), v(1), v(2)),
                Expr::tensor(0, vec![v(1)]),
                Expr::tensor(1, vec![v(2)]),
            ]),
        );
        let op = EinOp::new(vec![vec3(), vec3()], body, vec![(IndexVar(0), 3)]);
        assert_eq!(check_wellformed(&op), Ok(()));
    }

    #[test]
    fn epsilon3_needs_three_dimensions() {
        let body = Expr::Epsilon3(v(0), v(1), Index::Const(0));
        let op = EinOp::new(vec![], body, vec![(IndexVar(0), 2), (IndexVar(1), 2)]);
        assert!(matches!(check_wellformed(&op), Err(IrError::EpsilonDimMismatch(_))));
    }

    #[test]
    fn unbound_param_and_shape_mismatch() {
        let op = EinOp::new(vec![vec3()], Expr::tensor(1, vec![v(0)]), vec![(IndexVar(0), 3)]);
        assert_eq!(check_wellformed(&op), Err(IrError::UnboundParam(1)));
        let op = EinOp::new(vec![vec3()], Expr::tensor(0, vec![v(0)]), vec![(IndexVar(0), 2)]);
        assert!(matches!(check_wellformed(&op), Err(IrError::ShapeMismatch(_))));
        let op = EinOp::new(vec![vec3()], Expr::tensor(0, vec![Index::Const(3)]), vec![]);
        assert!(matches!(check_wellformed(&op), Err(IrError::ShapeMismatch(_))));
    }

    #[test]
    fn shape_follows_binding_order() {
        let (i, j, k) = (IndexVar(0), IndexVar(1), IndexVar(2));
        let ctx = vec![(i, 4), (j, 5)];
        let t = Expr::tensor(0, vec![Index::Var(j), Index::Var(i)]);
        assert_eq!(shape_of(&t, &ctx), vec![(i, 4), (j, 5)]);
        let s = Expr::sum(k, 6, Expr::tensor(0, vec![Index::Var(i), Index::Var(k)]));
        assert_eq!(shape_of(&s, &ctx), vec![(i, 4)]);
        assert_eq!(shape_of(&Expr::Const(5.0), &ctx), vec![]);
    }
}
