//! Type checking and flattening of the surface program into the Simple AST.

use std::collections::HashMap;

use super::ast::*;
use super::error::FrontendError;
use super::simple::*;
use crate::ir::{Domain, InputDecl, InputKind};
use crate::runtime::KernelKind;

struct Checker {
    bindings: Vec<SBinding>,
    env: HashMap<String, (SVar, SType)>,
    inputs: Vec<InputDecl>,
    pos_dim: usize,
    pos: Option<SVar>,
    kernels: HashMap<KernelKind, SVar>,
}

fn to_stype(t: &TypeExpr) -> SType {
    match t {
        TypeExpr::Tensor(s) => SType::Tensor(s.clone()),
        TypeExpr::Field { k, dim, shape } => SType::Field { k: *k, dim: *dim, shape: shape.clone() },
        TypeExpr::Image { dim, shape } => SType::Image { dim: *dim, shape: shape.clone() },
    }
}

fn check_surface_type(t: &TypeExpr, span: Span) -> Result<(), FrontendError> {
    let (dim, shape) = match t {
        TypeExpr::Tensor(s) => (None, s),
        TypeExpr::Field { dim, shape, .. } | TypeExpr::Image { dim, shape } => (Some(*dim), shape),
    };
    if let Some(d) = dim {
        if !(1..=3).contains(&d) {
            return Err(FrontendError::dim(span, format!("dimension {d} is outside 1..3")));
        }
    }
    if shape.iter().any(|&n| n < 2) {
        return Err(FrontendError::shape(span, "tensor dimensions must be at least 2"));
    }
    Ok(())
}

/// Constant value of a literal expression (numbers, negation, nested brackets).
fn literal(e: &Expr) -> Option<(Vec<usize>, Vec<f64>)> {
    match &e.kind {
        ExprKind::Num(v, _) => Some((vec![], vec![*v])),
        ExprKind::Neg(x) => literal(x).map(|(s, d)| (s, d.into_iter().map(|v| -v).collect())),
        ExprKind::TensorLit(items) => {
            let parts: Vec<_> = items.iter().map(literal).collect::<Option<_>>()?;
            let inner = parts[0].0.clone();
            if parts.iter().any(|(s, _)| *s != inner) {
                return None;
            }
            let mut shape = vec![parts.len()];
            shape.extend(inner);
            Some((shape, parts.into_iter().flat_map(|(_, d)| d).collect()))
        }
        _ => None,
    }
}

fn show(s: &[usize]) -> String {
    format!("[{}]", s.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","))
}

impl Checker {
    fn emit(&mut self, ty: SType, op: SOp, name: Option<String>) -> (SVar, SType) {
        let var = SVar(self.bindings.len());
        self.bindings.push(SBinding { var, ty: ty.clone(), op, name });
        (var, ty)
    }

    fn kernel(&mut self, k: KernelKind) -> (SVar, SType) {
        if let Some(&v) = self.kernels.get(&k) {
            return (v, SType::Kernel(k));
        }
        let r = self.emit(SType::Kernel(k), SOp::LoadKernel(k), None);
        self.kernels.insert(k, r.0);
        r
    }

    /// Result type of a pointwise combination of two operands with equal shapes.
    fn lifted(&self, a: &SType, b: &SType, shape: Vec<usize>, span: Span) -> Result<SType, FrontendError> {
        match (a, b) {
            (SType::Field { k: k1, dim: d1, .. }, SType::Field { k: k2, dim: d2, .. }) => {
                if d1 != d2 {
                    return Err(FrontendError::dim(span, format!("fields of dimension {d1} and {d2}")));
                }
                Ok(SType::Field { k: (*k1).min(*k2), dim: *d1, shape })
            }
            (SType::Field { k, dim, .. }, SType::Tensor(_)) | (SType::Tensor(_), SType::Field { k, dim, .. }) => {
                Ok(SType::Field { k: *k, dim: *dim, shape })
            }
            (SType::Tensor(_), SType::Tensor(_)) => Ok(SType::Tensor(shape)),
            _ => Err(FrontendError::invalid(span, "images and kernels only appear in convolutions")),
        }
    }

    fn with_shape(t: &SType, shape: Vec<usize>) -> SType {
        match t {
            SType::Field { k, dim, .. } => SType::Field { k: *k, dim: *dim, shape },
            _ => SType::Tensor(shape),
        }
    }

    fn value_operand(t: &SType, span: Span) -> Result<(), FrontendError> {
        match t {
            SType::Tensor(_) | SType::Field { .. } => Ok(()),
            _ => Err(FrontendError::invalid(span, "images and kernels only appear in convolutions")),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<(SVar, SType), FrontendError> {
        let span = e.span;
        match &e.kind {
            ExprKind::Num(..) | ExprKind::TensorLit(_) => {
                let (shape, data) =
                    literal(e).ok_or_else(|| FrontendError::shape(span, "tensor literals must be rectangular and constant"))?;
                Ok(self.emit(SType::Tensor(shape.clone()), SOp::Const { shape, data }, None))
            }
            ExprKind::Neg(x) => {
                if let Some((shape, data)) = literal(e) {
                    return Ok(self.emit(SType::Tensor(shape.clone()), SOp::Const { shape, data }, None));
                }
                let (v, t) = self.expr(x)?;
                Self::value_operand(&t, span)?;
                Ok(self.emit(t, SOp::Neg(v), None))
            }
            ExprKind::Ident(name) => {
                if let Some((v, t)) = self.env.get(name) {
                    return Ok((*v, t.clone()));
                }
                if name == "pos" {
                    let r = match self.pos {
                        Some(v) => (v, SType::Tensor(vec![self.pos_dim])),
                        None => {
                            let r = self.emit(SType::Tensor(vec![self.pos_dim]), SOp::Position, Some("pos".into()));
                            self.pos = Some(r.0);
                            r
                        }
                    };
                    return Ok(r);
                }
                if let Ok(k) = name.parse::<KernelKind>() {
                    return Ok(self.kernel(k));
                }
                Err(FrontendError::unknown(span, name))
            }
            ExprKind::Binary(op, a, b) => self.binary(*op, a, b, span),
            ExprKind::Diff(op, x) => {
                let (v, t) = self.expr(x)?;
                let SType::Field { k, dim, shape } = &t else {
                    return Err(FrontendError::invalid(span, format!("cannot differentiate a value of type {t}")));
                };
                if *k == 0 {
                    return Err(FrontendError::continuity(span, format!("cannot differentiate {t}")));
                }
                let (k, dim) = (*k - 1, *dim);
                match op {
                    DiffOp::Grad | DiffOp::Outer => {
                        let mut s = vec![dim];
                        s.extend(shape);
                        Ok(self.emit(SType::Field { k, dim, shape: s }, SOp::Grad(v), None))
                    }
                    DiffOp::Curl => {
                        if shape != &[dim] || dim == 1 {
                            return Err(FrontendError::shape(span, format!("curl needs a 2D or 3D vector field, got {t}")));
                        }
                        let s = if dim == 3 { vec![3] } else { vec![] };
                        Ok(self.emit(SType::Field { k, dim, shape: s }, SOp::Curl(v), None))
                    }
                    DiffOp::Div => {
                        if shape != &[dim] {
                            return Err(FrontendError::shape(span, format!("divergence needs a vector field, got {t}")));
                        }
                        Ok(self.emit(SType::Field { k, dim, shape: vec![] }, SOp::Divergence(v), None))
                    }
                }
            }
            ExprKind::Call(f, args) => {
                let (v, t) = self.expr(&args[0])?;
                Self::value_operand(&t, span)?;
                match f {
                    Func::Math(op) => {
                        if !t.shape().is_empty() {
                            return Err(FrontendError::shape(span, format!("{} needs a scalar, got {t}", op.name())));
                        }
                        Ok(self.emit(t, SOp::Math(*op, v), None))
                    }
                    Func::Trace => match t.shape() {
                        [n, m] if n == m => Ok(self.emit(Self::with_shape(&t, vec![]), SOp::Trace(v), None)),
                        _ => Err(FrontendError::shape(span, format!("trace needs a square matrix, got {t}"))),
                    },
                    Func::Transpose => match *t.shape() {
                        [n, m] => Ok(self.emit(Self::with_shape(&t, vec![m, n]), SOp::Transpose(v), None)),
                        _ => Err(FrontendError::shape(span, format!("transpose needs a matrix, got {t}"))),
                    },
                }
            }
            ExprKind::Pow(x, n) => {
                let (v, t) = self.expr(x)?;
                Self::value_operand(&t, span)?;
                if !t.shape().is_empty() {
                    return Err(FrontendError::shape(span, format!("pow needs a scalar, got {t}")));
                }
                Ok(self.emit(t, SOp::Pow(v, *n), None))
            }
            ExprKind::Norm(x) => {
                let (v, t) = self.expr(x)?;
                Self::value_operand(&t, span)?;
                Ok(self.emit(Self::with_shape(&t, vec![]), SOp::Norm(v), None))
            }
            ExprKind::Identity(arg) => {
                let n = match arg {
                    IdentityArg::Size(n) => *n,
                    IdentityArg::Like(name) => {
                        let (_, t) = self.env.get(name).ok_or_else(|| FrontendError::unknown(span, name))?;
                        match t.shape() {
                            [n, m] if n == m => *n,
                            _ => return Err(FrontendError::shape(span, format!("identity[{name}] needs a square matrix, got {t}"))),
                        }
                    }
                };
                if n < 2 {
                    return Err(FrontendError::shape(span, "identity size must be at least 2"));
                }
                Ok(self.emit(SType::Tensor(vec![n, n]), SOp::Identity(n), None))
            }
            ExprKind::Probe(f, x) => {
                let (fv, ft) = self.expr(f)?;
                let SType::Field { dim, shape, .. } = &ft else {
                    return Err(FrontendError::invalid(span, format!("only fields can be probed, got {ft}")));
                };
                let (dim, shape) = (*dim, shape.clone());
                let (xv, xt) = self.expr(x)?;
                if xt != SType::Tensor(vec![dim]) {
                    return Err(FrontendError::dim(span, format!("probing a {dim}-dimensional field at a {xt}")));
                }
                Ok(self.emit(SType::Tensor(shape), SOp::Probe(fv, xv), None))
            }
            ExprKind::Index(x, ix) => {
                let (v, t) = self.expr(x)?;
                Self::value_operand(&t, span)?;
                let shape = t.shape();
                if ix.len() > shape.len() || ix.iter().zip(shape).any(|(&i, &n)| i >= n) {
                    return Err(FrontendError::shape(span, format!("index {ix:?} out of range for {t}")));
                }
                Ok(self.emit(Self::with_shape(&t, shape[ix.len()..].to_vec()), SOp::Slice(v, ix.clone()), None))
            }
        }
    }

    fn binary(&mut self, op: BinOp, a: &Expr, b: &Expr, span: Span) -> Result<(SVar, SType), FrontendError> {
        let (av, at) = self.expr(a)?;
        let (bv, bt) = self.expr(b)?;
        if op == BinOp::Conv {
            let (img, kern) = match (&at, &bt) {
                (SType::Image { .. }, SType::Kernel(_)) => ((av, at.clone()), bt.clone()),
                (SType::Kernel(_), SType::Image { .. }) => ((bv, bt.clone()), at.clone()),
                _ => return Err(FrontendError::invalid(span, format!("cannot convolve {at} with {bt}"))),
            };
            let (SType::Image { dim, shape }, SType::Kernel(kk)) = (&img.1, &kern) else { unreachable!() };
            let kv = if img.0 == av { bv } else { av };
            let ty = SType::Field { k: kk.continuity(), dim: *dim, shape: shape.clone() };
            return Ok(self.emit(ty, SOp::Conv(img.0, kv), None));
        }
        Self::value_operand(&at, span)?;
        Self::value_operand(&bt, span)?;
        let (sa, sb) = (at.shape().to_vec(), bt.shape().to_vec());
        let mismatch = |what: &str| FrontendError::shape(span, format!("{what} of {} and {}", show(&sa), show(&sb)));
        match op {
            BinOp::Add | BinOp::Sub => {
                if sa != sb {
                    return Err(mismatch("adding values"));
                }
                let t = self.lifted(&at, &bt, sa, span)?;
                let sop = if op == BinOp::Add { SOp::Add(av, bv) } else { SOp::Sub(av, bv) };
                Ok(self.emit(t, sop, None))
            }
            BinOp::Mul => {
                if sa.is_empty() {
                    let t = self.lifted(&at, &bt, sb, span)?;
                    Ok(self.emit(t, SOp::Scale(av, bv), None))
                } else if sb.is_empty() {
                    let t = self.lifted(&at, &bt, sa, span)?;
                    Ok(self.emit(t, SOp::Scale(bv, av), None))
                } else {
                    Err(mismatch("`*` needs a scalar operand; use • or ⊗ for products"))
                }
            }
            BinOp::Div => {
                if !sb.is_empty() {
                    return Err(mismatch("dividing"));
                }
                let t = self.lifted(&at, &bt, sa, span)?;
                Ok(self.emit(t, SOp::Div(av, bv), None))
            }
            BinOp::Dot => {
                if sa.is_empty() || sb.is_empty() || sa.last() != sb.first() {
                    return Err(mismatch("inner product"));
                }
                let mut s = sa[..sa.len() - 1].to_vec();
                s.extend(&sb[1..]);
                let t = self.lifted(&at, &bt, s, span)?;
                Ok(self.emit(t, SOp::Dot(av, bv), None))
            }
            BinOp::Outer => {
                if sa.is_empty() || sb.is_empty() {
                    return Err(mismatch("outer product"));
                }
                let mut s = sa.clone();
                s.extend(&sb);
                let t = self.lifted(&at, &bt, s, span)?;
                Ok(self.emit(t, SOp::Outer(av, bv), None))
            }
            BinOp::Cross => {
                let s = match (sa.as_slice(), sb.as_slice()) {
                    ([3], [3]) => vec![3],
                    ([2], [2]) => vec![],
                    _ => return Err(mismatch("cross product")),
                };
                let t = self.lifted(&at, &bt, s, span)?;
                Ok(self.emit(t, SOp::Cross(av, bv), None))
            }
            BinOp::Conv => unreachable!(),
        }
    }

    fn bind(&mut self, name: &str, v: (SVar, SType), span: Span) -> Result<(), FrontendError> {
        if self.env.contains_key(name) || name == "pos" {
            return Err(FrontendError::invalid(span, format!("`{name}` is already defined")));
        }
        if let Some(b) = self.bindings.get_mut(v.0 .0) {
            b.name.get_or_insert_with(|| name.to_string());
        }
        self.env.insert(name.to_string(), v);
        Ok(())
    }

    /// Checks a declared type against the inferred one; returns the type the name gets.
    fn declared(&self, decl: &TypeExpr, got: &SType, span: Span) -> Result<SType, FrontendError> {
        let want = to_stype(decl);
        match (&want, got) {
            (SType::Field { k: kw, dim: dw, shape: sw }, SType::Field { k: kg, dim: dg, shape: sg }) => {
                if dw != dg {
                    return Err(FrontendError::dim(span, format!("declared {want}, found {got}")));
                }
                if sw != sg {
                    return Err(FrontendError::shape(span, format!("declared {want}, found {got}")));
                }
                if kw > kg {
                    return Err(FrontendError::continuity(span, format!("declared {want}, but the value is only {got}")));
                }
                Ok(want)
            }
            (SType::Tensor(sw), SType::Tensor(sg)) if sw == sg => Ok(want),
            _ => Err(FrontendError::shape(span, format!("declared {want}, found {got}"))),
        }
    }
}

fn domain_of(d: &DomainSpec) -> Domain {
    match d {
        DomainSpec::Grid { lo, hi, counts } => Domain::Grid { lo: lo.clone(), hi: hi.clone(), counts: counts.clone() },
        DomainSpec::Points(f) => Domain::Points(f.clone()),
    }
}

/// Dimension of the reserved `pos` variable: the grid's dimension, else the first image's.
fn position_dim(p: &SurfaceProgram) -> usize {
    for d in &p.decls {
        if let Decl::Output { domain: Some(DomainSpec::Grid { lo, .. }), .. } = d {
            return lo.len();
        }
    }
    for d in &p.decls {
        if let Decl::Input { ty: TypeExpr::Image { dim, .. }, .. } = d {
            return *dim;
        }
    }
    1
}

pub fn typecheck(p: &SurfaceProgram) -> Result<SimpleProgram, FrontendError> {
    let mut c = Checker {
        bindings: Vec::new(),
        env: HashMap::new(),
        inputs: Vec::new(),
        pos_dim: position_dim(p),
        pos: None,
        kernels: HashMap::new(),
    };
    let mut outputs = Vec::new();
    let mut domain: Option<(Domain, Span)> = None;
    for d in &p.decls {
        match d {
            Decl::Input { ty, name, default, span } => {
                check_surface_type(ty, *span)?;
                let idx = c.inputs.len();
                let (kind, op, st) = match ty {
                    TypeExpr::Image { dim, shape } => (
                        InputKind::Image { dim: *dim, shape: shape.clone() },
                        SOp::LoadImage(idx),
                        SType::Image { dim: *dim, shape: shape.clone() },
                    ),
                    TypeExpr::Tensor(shape) => {
                        let default = match default {
                            Some(e) => {
                                let (s, data) = literal(e)
                                    .ok_or_else(|| FrontendError::shape(e.span, "input defaults must be constant literals"))?;
                                if &s != shape {
                                    return Err(FrontendError::shape(e.span, format!("default has shape {}", show(&s))));
                                }
                                Some(data)
                            }
                            None => None,
                        };
                        (InputKind::Tensor { shape: shape.clone(), default }, SOp::TensorInput(idx), SType::Tensor(shape.clone()))
                    }
                    TypeExpr::Field { .. } => {
                        return Err(FrontendError::invalid(*span, "fields are defined by convolution, not read as inputs"))
                    }
                };
                if default.is_some() && matches!(ty, TypeExpr::Image { .. }) {
                    return Err(FrontendError::invalid(*span, "images cannot have defaults"));
                }
                if c.env.contains_key(name) {
                    return Err(FrontendError::invalid(*span, format!("`{name}` is already defined")));
                }
                c.inputs.push(InputDecl { name: name.clone(), kind });
                let r = c.emit(st, op, Some(name.clone()));
                c.bind(name, r, *span)?;
            }
            Decl::Let { ty, name, value, span } => {
                check_surface_type(ty, *span)?;
                if matches!(ty, TypeExpr::Image { .. }) {
                    return Err(FrontendError::invalid(*span, "images can only be inputs"));
                }
                let (v, got) = c.expr(value)?;
                let t = c.declared(ty, &got, *span)?;
                c.bind(name, (v, t), *span)?;
            }
            Decl::Output { ty, name, value, domain: dom, span } => {
                check_surface_type(ty, *span)?;
                let TypeExpr::Tensor(shape) = ty else {
                    return Err(FrontendError::invalid(*span, "outputs must be tensors"));
                };
                let (v, got) = c.expr(value)?;
                c.declared(ty, &got, *span)?;
                if let Some(dspec) = dom {
                    let dd = domain_of(dspec);
                    match &domain {
                        Some((prev, _)) if prev != &dd => {
                            return Err(FrontendError::invalid(*span, "all outputs must share one domain"))
                        }
                        _ => domain = Some((dd, *span)),
                    }
                }
                if outputs.iter().any(|o: &SOutput| &o.name == name) || c.env.contains_key(name) {
                    return Err(FrontendError::invalid(*span, format!("`{name}` is already defined")));
                }
                outputs.push(SOutput { name: name.clone(), var: v, shape: shape.clone() });
            }
        }
    }
    if outputs.is_empty() {
        return Err(FrontendError::invalid(Span { line: 1, col: 1 }, "program has no outputs"));
    }
    if let Some((Domain::Grid { lo, hi, counts }, span)) = &domain {
        if lo.len() != hi.len() || lo.len() != counts.len() || counts.iter().any(|&n| n == 0) {
            return Err(FrontendError::dim(*span, "grid bounds and counts must have equal lengths and positive counts"));
        }
    }
    Ok(SimpleProgram { inputs: c.inputs, pos_dim: c.pos_dim, bindings: c.bindings, outputs, domain: domain.map(|d| d.0) })
}
