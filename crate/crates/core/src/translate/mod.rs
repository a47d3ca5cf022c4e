//! Generic EIN operators and translation of the Simple AST into HighIR.

use thiserror::Error;

use crate::frontend::{SOp, SType, SimpleProgram};
use crate::ir::{
    Assign, EinApp, EinOp, Expr, Index, IndexVar, OutputDecl, ParamKind, Prim, Program, Rhs, Ty, UnaryOp, Var, VarGen,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranslateError {
    #[error("generic operator `{op}` does not support operands {args}")]
    UnsupportedShape { op: &'static str, args: String },
}

/// The generic operators; each is instantiated at concrete operand kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generic {
    Add,
    Sub,
    Neg,
    Scale,
    Div,
    Dot,
    Outer,
    Cross,
    Norm,
    Trace,
    Transpose,
    Math(UnaryOp),
    Grad,
    Curl,
    Divergence,
    Probe,
    Slice,
    Conv,
}

impl Generic {
    pub fn name(self) -> &'static str {
        match self {
            Generic::Add => "add",
            Generic::Sub => "sub",
            Generic::Neg => "neg",
            Generic::Scale => "scale",
            Generic::Div => "div",
            Generic::Dot => "dot",
            Generic::Outer => "outer",
            Generic::Cross => "cross",
            Generic::Norm => "norm",
            Generic::Trace => "trace",
            Generic::Transpose => "transpose",
            Generic::Math(_) => "math",
            Generic::Grad => "grad",
            Generic::Curl => "curl",
            Generic::Divergence => "divergence",
            Generic::Probe => "probe",
            Generic::Slice => "slice",
            Generic::Conv => "conv",
        }
    }
}

fn is_field(k: &ParamKind) -> bool {
    matches!(k, ParamKind::Field { .. })
}

struct Builder<'a> {
    args: &'a [ParamKind],
    field_result: bool,
    gen: VarGen,
}

impl Builder<'_> {
    fn vars(&mut self, shape: &[usize]) -> Vec<(IndexVar, usize)> {
        shape.iter().map(|&b| (self.gen.fresh(), b)).collect()
    }

    /// Leaf for argument `p`; tensors inside field-valued operators are lifted.
    fn leaf(&self, p: usize, ix: &[(IndexVar, usize)]) -> Expr {
        self.leaf_ix(p, ix.iter().map(|&(v, _)| Index::Var(v)).collect())
    }

    fn leaf_ix(&self, p: usize, ix: Vec<Index>) -> Expr {
        match &self.args[p] {
            ParamKind::Field { .. } => Expr::field(p, ix),
            _ if self.field_result => Expr::lift(Expr::tensor(p, ix)),
            _ => Expr::tensor(p, ix),
        }
    }

    fn dim(&self, p: usize) -> usize {
        match &self.args[p] {
            ParamKind::Field { dim, .. } | ParamKind::Image { dim, .. } => *dim,
            _ => 0,
        }
    }
}

fn v(x: IndexVar) -> Index {
    Index::Var(x)
}

/// Instantiates a generic operator for the given operand kinds.
pub fn instantiate(g: Generic, args: &[ParamKind], extra: &[usize]) -> Result<EinOp, TranslateError> {
    let unsupported = || TranslateError::UnsupportedShape {
        op: g.name(),
        args: args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", "),
    };
    let field_result = args.iter().any(is_field) || g == Generic::Conv;
    let mut b = Builder { args, field_result, gen: VarGen::starting_at(0) };
    let sh = |p: usize| args.get(p).map(|a| a.shape().to_vec()).unwrap_or_default();
    let arity = match g {
        Generic::Add | Generic::Sub | Generic::Scale | Generic::Div | Generic::Dot | Generic::Outer | Generic::Cross
        | Generic::Probe | Generic::Conv => 2,
        _ => 1,
    };
    if args.len() != arity {
        return Err(unsupported());
    }
    let (body, map) = match g {
        Generic::Add | Generic::Sub => {
            if sh(0) != sh(1) {
                return Err(unsupported());
            }
            let m = b.vars(&sh(0));
            let body = if g == Generic::Add {
                Expr::add(b.leaf(0, &m), b.leaf(1, &m))
            } else {
                Expr::sub(b.leaf(0, &m), b.leaf(1, &m))
            };
            (body, m)
        }
        Generic::Neg => {
            let m = b.vars(&sh(0));
            (Expr::neg(b.leaf(0, &m)), m)
        }
        Generic::Scale => {
            if !sh(0).is_empty() {
                return Err(unsupported());
            }
            let m = b.vars(&sh(1));
            (Expr::mul(b.leaf(0, &[]), b.leaf(1, &m)), m)
        }
        Generic::Div => {
            if !sh(1).is_empty() {
                return Err(unsupported());
            }
            let m = b.vars(&sh(0));
            (Expr::div(b.leaf(0, &m), b.leaf(1, &[])), m)
        }
        Generic::Dot => {
            let (sa, sb) = (sh(0), sh(1));
            if sa.is_empty() || sb.is_empty() || sa.last() != sb.first() {
                return Err(unsupported());
            }
            let ma = b.vars(&sa[..sa.len() - 1]);
            let k = b.gen.fresh();
            let mb = b.vars(&sb[1..]);
            let mut ia: Vec<(IndexVar, usize)> = ma.clone();
            ia.push((k, sb[0]));
            let mut ib = vec![(k, sb[0])];
            ib.extend(&mb);
            let body = Expr::sum(k, sb[0], Expr::mul(b.leaf(0, &ia), b.leaf(1, &ib)));
            let mut m = ma;
            m.extend(mb);
            (body, m)
        }
        Generic::Outer => {
            let ma = b.vars(&sh(0));
            let mb = b.vars(&sh(1));
            let body = Expr::mul(b.leaf(0, &ma), b.leaf(1, &mb));
            let mut m = ma;
            m.extend(mb);
            (body, m)
        }
        Generic::Cross => match (sh(0).as_slice(), sh(1).as_slice()) {
            ([3], [3]) => {
                let i = b.gen.fresh();
                let (j, k) = (b.gen.fresh(), b.gen.fresh());
                let body = Expr::sums(
                    &[(j, 3), (k, 3)],
                    Expr::product(vec![Expr::Epsilon3(v(i), v(j), v(k)), b.leaf(0, &[(j, 3)]), b.leaf(1, &[(k, 3)])]),
                );
                (body, vec![(i, 3)])
            }
            ([2], [2]) => {
                let (j, k) = (b.gen.fresh(), b.gen.fresh());
                let body = Expr::sums(
                    &[(j, 2), (k, 2)],
                    Expr::product(vec![Expr::Epsilon2(v(j), v(k)), b.leaf(0, &[(j, 2)]), b.leaf(1, &[(k, 2)])]),
                );
                (body, vec![])
            }
            _ => return Err(unsupported()),
        },
        Generic::Norm => {
            let s = b.vars(&sh(0));
            let body = Expr::unary(UnaryOp::Sqrt, Expr::sums(&s, Expr::mul(b.leaf(0, &s), b.leaf(0, &s))));
            (body, vec![])
        }
        Generic::Trace => match sh(0).as_slice() {
            [n, m] if n == m => {
                let i = b.gen.fresh();
                (Expr::sum(i, *n, b.leaf_ix(0, vec![v(i), v(i)])), vec![])
            }
            _ => return Err(unsupported()),
        },
        Generic::Transpose => match *sh(0).as_slice() {
            [n, m] => {
                let (i, j) = (b.gen.fresh(), b.gen.fresh());
                (b.leaf_ix(0, vec![v(j), v(i)]), vec![(i, m), (j, n)])
            }
            _ => return Err(unsupported()),
        },
        Generic::Math(op) => {
            if !sh(0).is_empty() {
                return Err(unsupported());
            }
            (Expr::unary(op, b.leaf(0, &[])), vec![])
        }
        Generic::Grad => {
            if !is_field(&args[0]) {
                return Err(unsupported());
            }
            let i = b.gen.fresh();
            let d = b.dim(0);
            let m = b.vars(&sh(0));
            let mut map = vec![(i, d)];
            map.extend(&m);
            (Expr::partial(v(i), b.leaf(0, &m)), map)
        }
        Generic::Curl => {
            let d = b.dim(0);
            if !is_field(&args[0]) || sh(0) != [d] {
                return Err(unsupported());
            }
            match d {
                3 => {
                    let (i, j, k) = (b.gen.fresh(), b.gen.fresh(), b.gen.fresh());
                    let body = Expr::sums(
                        &[(j, 3), (k, 3)],
                        Expr::mul(Expr::Epsilon3(v(i), v(j), v(k)), Expr::partial(v(j), b.leaf(0, &[(k, 3)]))),
                    );
                    (body, vec![(i, 3)])
                }
                2 => {
                    let (j, k) = (b.gen.fresh(), b.gen.fresh());
                    let body = Expr::sums(
                        &[(j, 2), (k, 2)],
                        Expr::mul(Expr::Epsilon2(v(j), v(k)), Expr::partial(v(j), b.leaf(0, &[(k, 2)]))),
                    );
                    (body, vec![])
                }
                _ => return Err(unsupported()),
            }
        }
        Generic::Divergence => {
            let d = b.dim(0);
            if !is_field(&args[0]) || sh(0) != [d] {
                return Err(unsupported());
            }
            let i = b.gen.fresh();
            (Expr::sum(i, d, Expr::partial(v(i), b.leaf(0, &[(i, d)]))), vec![])
        }
        Generic::Probe => {
            if !is_field(&args[0]) || args[1] != ParamKind::Tensor(vec![b.dim(0)]) {
                return Err(unsupported());
            }
            b.field_result = false;
            let m = b.vars(&sh(0));
            (Expr::probe(b.leaf(0, &m), 1), m)
        }
        Generic::Slice => {
            let s = sh(0);
            if extra.len() > s.len() || extra.iter().zip(&s).any(|(&c, &n)| c >= n) {
                return Err(unsupported());
            }
            let m = b.vars(&s[extra.len()..]);
            let mut ix: Vec<Index> = extra.iter().map(|&c| Index::Const(c)).collect();
            ix.extend(m.iter().map(|&(x, _)| v(x)));
            (b.leaf_ix(0, ix), m)
        }
        Generic::Conv => {
            let (ParamKind::Image { shape, .. }, ParamKind::Kernel(_)) = (&args[0], &args[1]) else {
                return Err(unsupported());
            };
            let m = b.vars(shape);
            (Expr::Conv { image: 0, comps: m.iter().map(|&(x, _)| v(x)).collect(), kernel: 1, derivs: vec![] }, m)
        }
    };
    Ok(EinOp::new(args.to_vec(), body, map))
}

/// `λ()⟨δ_ij⟩_{i≤n, j≤n}`.
pub fn identity(n: usize) -> EinOp {
    let (i, j) = (IndexVar(0), IndexVar(1));
    EinOp::new(vec![], Expr::Delta(v(i), v(j)), vec![(i, n), (j, n)])
}

pub fn ty_of(t: &SType) -> Ty {
    match t {
        SType::Tensor(s) => Ty::Tensor(s.clone()),
        SType::Field { k, dim, shape } => Ty::Field { k: *k, dim: *dim, shape: shape.clone() },
        SType::Image { dim, shape } => Ty::Image { dim: *dim, shape: shape.clone() },
        SType::Kernel(k) => Ty::Kernel(*k),
    }
}

/// Converts every Simple AST binding into one SSA assignment.
pub fn translate_program(sp: &SimpleProgram) -> Result<Program, TranslateError> {
    let mut stmts = Vec::with_capacity(sp.bindings.len());
    for b in &sp.bindings {
        let var = |s: crate::frontend::SVar| Var(s.0 as u32);
        let kinds = |ops: &[crate::frontend::SVar]| ops.iter().map(|&o| ty_of(sp.ty(o)).param_kind()).collect::<Vec<_>>();
        let ein = |g: Generic, ops: &[crate::frontend::SVar], extra: &[usize]| -> Result<Rhs, TranslateError> {
            let op = instantiate(g, &kinds(ops), extra)?;
            Ok(Rhs::Ein(EinApp { op, args: ops.iter().map(|&o| var(o)).collect() }))
        };
        let rhs = match &b.op {
            SOp::LoadImage(i) => Rhs::Prim(Prim::LoadImage { input: *i }),
            SOp::LoadKernel(k) => Rhs::Prim(Prim::LoadKernel(*k)),
            SOp::Const { shape, data } => Rhs::Prim(Prim::ConstTensor { shape: shape.clone(), data: data.clone() }),
            SOp::TensorInput(i) => Rhs::Prim(Prim::TensorInput { input: *i }),
            SOp::Position => Rhs::Prim(Prim::Position),
            SOp::Identity(n) => Rhs::Ein(EinApp { op: identity(*n), args: vec![] }),
            SOp::Conv(a, k) => ein(Generic::Conv, &[*a, *k], &[])?,
            SOp::Add(a, c) => ein(Generic::Add, &[*a, *c], &[])?,
            SOp::Sub(a, c) => ein(Generic::Sub, &[*a, *c], &[])?,
            SOp::Neg(a) => ein(Generic::Neg, &[*a], &[])?,
            SOp::Scale(s, a) => ein(Generic::Scale, &[*s, *a], &[])?,
            SOp::Div(a, s) => ein(Generic::Div, &[*a, *s], &[])?,
            SOp::Dot(a, c) => ein(Generic::Dot, &[*a, *c], &[])?,
            SOp::Outer(a, c) => ein(Generic::Outer, &[*a, *c], &[])?,
            SOp::Cross(a, c) => ein(Generic::Cross, &[*a, *c], &[])?,
            SOp::Norm(a) => ein(Generic::Norm, &[*a], &[])?,
            SOp::Trace(a) => ein(Generic::Trace, &[*a], &[])?,
            SOp::Transpose(a) => ein(Generic::Transpose, &[*a], &[])?,
            SOp::Math(op, a) => ein(Generic::Math(*op), &[*a], &[])?,
            SOp::Pow(a, n) => ein(Generic::Math(UnaryOp::Pow(*n)), &[*a], &[])?,
            SOp::Grad(a) => ein(Generic::Grad, &[*a], &[])?,
            SOp::Curl(a) => ein(Generic::Curl, &[*a], &[])?,
            SOp::Divergence(a) => ein(Generic::Divergence, &[*a], &[])?,
            SOp::Probe(f, x) => ein(Generic::Probe, &[*f, *x], &[])?,
            SOp::Slice(a, ix) => ein(Generic::Slice, &[*a], ix)?,
        };
        stmts.push(Assign { lhs: var(b.var), ty: ty_of(&b.ty), rhs, name: b.name.clone() });
    }
    Ok(Program {
        inputs: sp.inputs.clone(),
        pos_dim: sp.pos_dim,
        stmts,
        outputs: sp
            .outputs
            .iter()
            .map(|o| OutputDecl { name: o.name.clone(), var: Var(o.var.0 as u32), shape: o.shape.clone() })
            .collect(),
        domain: sp.domain.clone(),
        next_var: sp.bindings.len() as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{check_wellformed, pretty, Style};

    fn t(s: &[usize]) -> ParamKind {
        ParamKind::Tensor(s.to_vec())
    }

    #[test]
    fn encodings_print_as_expected() {
        let dot = instantiate(Generic::Dot, &[t(&[3]), t(&[3])], &[]).unwrap();
        assert_eq!(pretty(&dot, Style::Unicode), "λ(T0,T1)⟨Σ_{i≤3}(T0_{i}·T1_{i})⟩_{}");
        let cross = instantiate(Generic::Cross, &[t(&[3]), t(&[3])], &[]).unwrap();
        assert_eq!(pretty(&cross, Style::Unicode), "λ(T0,T1)⟨Σ_{j≤3}(Σ_{k≤3}((ε_{i,j,k}·T0_{j})·T1_{k}))⟩_{i≤3}");
        let tr = instantiate(Generic::Transpose, &[t(&[2, 3])], &[]).unwrap();
        assert_eq!(pretty(&tr, Style::Unicode), "λ(T0)⟨T0_{j,i}⟩_{i≤3,j≤2}");
    }

    #[test]
    fn every_instance_is_wellformed() {
        let f3 = ParamKind::Field { k: 2, dim: 3, shape: vec![3] };
        let s3 = ParamKind::Field { k: 2, dim: 3, shape: vec![] };
        let cases: Vec<(Generic, Vec<ParamKind>)> = vec![
            (Generic::Add, vec![f3.clone(), t(&[3])]),
            (Generic::Dot, vec![t(&[2, 3]), t(&[3, 2])]),
            (Generic::Outer, vec![t(&[2]), t(&[3])]),
            (Generic::Norm, vec![t(&[2, 2])]),
            (Generic::Trace, vec![t(&[3, 3])]),
            (Generic::Grad, vec![f3.clone()]),
            (Generic::Curl, vec![f3.clone()]),
            (Generic::Divergence, vec![f3.clone()]),
            (Generic::Scale, vec![s3.clone(), f3.clone()]),
            (Generic::Div, vec![f3.clone(), s3.clone()]),
            (Generic::Probe, vec![f3.clone(), t(&[3])]),
            (Generic::Conv, vec![ParamKind::Image { dim: 3, shape: vec![3] }, ParamKind::Kernel(crate::runtime::KernelKind::Ctmr)]),
        ];
        for (g, args) in cases {
            let op = instantiate(g, &args, &[]).unwrap();
            check_wellformed(&op).unwrap_or_else(|e| panic!("{g:?}: {e}"));
        }
        assert!(instantiate(Generic::Cross, &[t(&[2]), t(&[3])], &[]).is_err());
    }
}
