//! Monomorphic Simple AST: let-bindings whose operations apply to variables only.

use std::fmt;

use crate::ir::{Domain, InputDecl, UnaryOp};
use crate::runtime::KernelKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SVar(pub usize);

impl fmt::Display for SVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SType {
    Tensor(Vec<usize>),
    Field { k: u32, dim: usize, shape: Vec<usize> },
    Image { dim: usize, shape: Vec<usize> },
    Kernel(KernelKind),
}

impl SType {
    pub fn shape(&self) -> &[usize] {
        match self {
            SType::Tensor(s) | SType::Field { shape: s, .. } | SType::Image { shape: s, .. } => s,
            SType::Kernel(_) => &[],
        }
    }

    pub fn is_field(&self) -> bool {
        matches!(self, SType::Field { .. })
    }
}

impl fmt::Display for SType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims = |s: &[usize]| s.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        match self {
            SType::Tensor(s) => write!(f, "tensor[{}]", dims(s)),
            SType::Field { k, dim, shape } => write!(f, "field#{k}({dim})[{}]", dims(shape)),
            SType::Image { dim, shape } => write!(f, "image({dim})[{}]", dims(shape)),
            SType::Kernel(k) => write!(f, "kernel {k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SOp {
    LoadImage(usize),
    LoadKernel(KernelKind),
    Const { shape: Vec<usize>, data: Vec<f64> },
    TensorInput(usize),
    Position,
    Conv(SVar, SVar),
    Add(SVar, SVar),
    Sub(SVar, SVar),
    Neg(SVar),
    /// Scalar times anything (scalar first).
    Scale(SVar, SVar),
    /// Anything divided by a scalar.
    Div(SVar, SVar),
    Dot(SVar, SVar),
    Outer(SVar, SVar),
    Cross(SVar, SVar),
    Norm(SVar),
    Trace(SVar),
    Transpose(SVar),
    Identity(usize),
    Math(UnaryOp, SVar),
    Pow(SVar, i32),
    Grad(SVar),
    Curl(SVar),
    Divergence(SVar),
    Probe(SVar, SVar),
    Slice(SVar, Vec<usize>),
}

impl SOp {
    pub fn operands(&self) -> Vec<SVar> {
        match self {
            SOp::Conv(a, b)
            | SOp::Add(a, b)
            | SOp::Sub(a, b)
            | SOp::Scale(a, b)
            | SOp::Div(a, b)
            | SOp::Dot(a, b)
            | SOp::Outer(a, b)
            | SOp::Cross(a, b)
            | SOp::Probe(a, b) => vec![*a, *b],
            SOp::Neg(a)
            | SOp::Norm(a)
            | SOp::Trace(a)
            | SOp::Transpose(a)
            | SOp::Math(_, a)
            | SOp::Pow(a, _)
            | SOp::Grad(a)
            | SOp::Curl(a)
            | SOp::Divergence(a)
            | SOp::Slice(a, _) => vec![*a],
            _ => vec![],
        }
    }

    fn name(&self) -> String {
        match self {
            SOp::LoadImage(i) => format!("load-image {i}"),
            SOp::LoadKernel(k) => format!("kernel {k}"),
            SOp::Const { shape, data } => format!("const {shape:?} {data:?}"),
            SOp::TensorInput(i) => format!("tensor-input {i}"),
            SOp::Position => "position".into(),
            SOp::Conv(..) => "conv".into(),
            SOp::Add(..) => "add".into(),
            SOp::Sub(..) => "sub".into(),
            SOp::Neg(_) => "neg".into(),
            SOp::Scale(..) => "scale".into(),
            SOp::Div(..) => "div".into(),
            SOp::Dot(..) => "dot".into(),
            SOp::Outer(..) => "outer".into(),
            SOp::Cross(..) => "cross".into(),
            SOp::Norm(_) => "norm".into(),
            SOp::Trace(_) => "trace".into(),
            SOp::Transpose(_) => "transpose".into(),
            SOp::Identity(n) => format!("identity {n}"),
            SOp::Math(op, _) => op.name(),
            SOp::Pow(_, n) => format!("pow {n}"),
            SOp::Grad(_) => "grad".into(),
            SOp::Curl(_) => "curl".into(),
            SOp::Divergence(_) => "divergence".into(),
            SOp::Probe(..) => "probe".into(),
            SOp::Slice(_, ix) => format!("slice {ix:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SBinding {
    pub var: SVar,
    pub ty: SType,
    pub op: SOp,
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SOutput {
    pub name: String,
    pub var: SVar,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimpleProgram {
    pub inputs: Vec<InputDecl>,
    pub pos_dim: usize,
    pub bindings: Vec<SBinding>,
    pub outputs: Vec<SOutput>,
    pub domain: Option<Domain>,
}

impl SimpleProgram {
    pub fn ty(&self, v: SVar) -> &SType {
        &self.bindings[v.0].ty
    }

    pub fn sexpr(&self) -> String {
        let mut out = String::from("(simple\n");
        for b in &self.bindings {
            let args: Vec<String> = b.op.operands().iter().map(|v| v.to_string()).collect();
            let name = b.name.as_ref().map(|n| format!(" ; {n}")).unwrap_or_default();
            let sep = if args.is_empty() { "" } else { " " };
            out += &format!("  (let {} {} ({}{sep}{})){name}\n", b.var, b.ty, b.op.name(), args.join(" "));
        }
        for o in &self.outputs {
            out += &format!("  (output {} {})\n", o.name, o.var);
        }
        out.push(')');
        out
    }
}
