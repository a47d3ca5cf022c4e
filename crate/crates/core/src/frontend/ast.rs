//! Surface syntax tree.

use crate::ir::UnaryOp;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TypeExpr {
    Tensor(Vec<usize>),
    Field { k: u32, dim: usize, shape: Vec<usize> },
    Image { dim: usize, shape: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Grid { lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize> },
    Points(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Input { ty: TypeExpr, name: String, default: Option<Expr>, span: Span },
    Let { ty: TypeExpr, name: String, value: Expr, span: Span },
    Output { ty: TypeExpr, name: String, value: Expr, domain: Option<DomainSpec>, span: Span },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Dot,
    Outer,
    Cross,
    Conv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffOp {
    Grad,
    Curl,
    Div,
    Outer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Math(UnaryOp),
    Trace,
    Transpose,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IdentityArg {
    Size(usize),
    Like(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    /// Number literal; the flag records whether it was written as a real.
    Num(f64, bool),
    Ident(String),
    TensorLit(Vec<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Diff(DiffOp, Box<Expr>),
    Call(Func, Vec<Expr>),
    Pow(Box<Expr>, i32),
    Norm(Box<Expr>),
    Identity(IdentityArg),
    Probe(Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Vec<usize>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Same tree with every span reset; used to compare trees structurally.
    pub fn strip_spans(&self) -> Expr {
        let b = |e: &Expr| Box::new(e.strip_spans());
        let kind = match &self.kind {
            ExprKind::TensorLit(es) => ExprKind::TensorLit(es.iter().map(Expr::strip_spans).collect()),
            ExprKind::Neg(e) => ExprKind::Neg(b(e)),
            ExprKind::Binary(op, x, y) => ExprKind::Binary(*op, b(x), b(y)),
            ExprKind::Diff(op, e) => ExprKind::Diff(*op, b(e)),
            ExprKind::Call(f, es) => ExprKind::Call(*f, es.iter().map(Expr::strip_spans).collect()),
            ExprKind::Pow(e, n) => ExprKind::Pow(b(e), *n),
            ExprKind::Norm(e) => ExprKind::Norm(b(e)),
            ExprKind::Probe(f, x) => ExprKind::Probe(b(f), b(x)),
            ExprKind::Index(e, ix) => ExprKind::Index(b(e), ix.clone()),
            other => other.clone(),
        };
        Expr { kind, span: Span::default() }
    }
}

impl Decl {
    pub fn strip_spans(&self) -> Decl {
        match self {
            Decl::Input { ty, name, default, .. } => Decl::Input {
                ty: ty.clone(),
                name: name.clone(),
                default: default.as_ref().map(Expr::strip_spans),
                span: Span::default(),
            },
            Decl::Let { ty, name, value, .. } => {
                Decl::Let { ty: ty.clone(), name: name.clone(), value: value.strip_spans(), span: Span::default() }
            }
            Decl::Output { ty, name, value, domain, .. } => Decl::Output {
                ty: ty.clone(),
                name: name.clone(),
                value: value.strip_spans(),
                domain: domain.clone(),
                span: Span::default(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceProgram {
    pub decls: Vec<Decl>,
}

impl SurfaceProgram {
    pub fn strip_spans(&self) -> SurfaceProgram {
        SurfaceProgram { decls: self.decls.iter().map(Decl::strip_spans).collect() }
    }
}
