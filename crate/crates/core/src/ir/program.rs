//! SSA programs whose right-hand sides are EIN applications or primitives.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::check::{check_wellformed, IrError};
use super::expr::{EinOp, ParamKind};
use super::print::sexpr;
use crate::runtime::kernel::KernelKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl std::fmt::Display for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Tensor(Vec<usize>),
    Field { k: u32, dim: usize, shape: Vec<usize> },
    Image { dim: usize, shape: Vec<usize> },
    Kernel(KernelKind),
}

impl Ty {
    pub fn param_kind(&self) -> ParamKind {
        match self {
            Ty::Tensor(s) => ParamKind::Tensor(s.clone()),
            Ty::Field { k, dim, shape } => ParamKind::Field { k: *k, dim: *dim, shape: shape.clone() },
            Ty::Image { dim, shape } => ParamKind::Image { dim: *dim, shape: shape.clone() },
            Ty::Kernel(k) => ParamKind::Kernel(*k),
        }
    }

    pub fn is_field(&self) -> bool {
        matches!(self, Ty::Field { .. })
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            Ty::Tensor(s) | Ty::Field { shape: s, .. } | Ty::Image { shape: s, .. } => s,
            Ty::Kernel(_) => &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Prim {
    LoadImage { input: usize },
    LoadKernel(KernelKind),
    ConstTensor { shape: Vec<usize>, data: Vec<f64> },
    TensorInput { input: usize },
    /// The world-space position currently being evaluated.
    Position,
    /// World-to-image matrix `A` of an image (`x = A p + b`).
    TransformMatrix { image: Var },
    WorldToImage { image: Var, pos: Var },
    Floor(Var),
}

impl Prim {
    pub fn operands(&self) -> Vec<Var> {
        match self {
            Prim::TransformMatrix { image } => vec![*image],
            Prim::WorldToImage { image, pos } => vec![*image, *pos],
            Prim::Floor(v) => vec![*v],
            _ => vec![],
        }
    }

    fn map_operands(&self, f: &impl Fn(Var) -> Var) -> Prim {
        match self {
            Prim::TransformMatrix { image } => Prim::TransformMatrix { image: f(*image) },
            Prim::WorldToImage { image, pos } => Prim::WorldToImage { image: f(*image), pos: f(*pos) },
            Prim::Floor(v) => Prim::Floor(f(*v)),
            other => other.clone(),
        }
    }

    pub fn sexpr(&self) -> String {
        match self {
            Prim::LoadImage { input } => format!("(load-image {input})"),
            Prim::LoadKernel(k) => format!("(load-kernel {k})"),
            Prim::ConstTensor { shape, data } => format!("(const-tensor {shape:?} {data:?})"),
            Prim::TensorInput { input } => format!("(tensor-input {input})"),
            Prim::Position => "(position)".into(),
            Prim::TransformMatrix { image } => format!("(transform-matrix {image})"),
            Prim::WorldToImage { image, pos } => format!("(world-to-image {image} {pos})"),
            Prim::Floor(v) => format!("(floor {v})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EinApp {
    pub op: EinOp,
    pub args: Vec<Var>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Ein(EinApp),
    Prim(Prim),
}

impl Rhs {
    pub fn operands(&self) -> Vec<Var> {
        match self {
            Rhs::Ein(app) => app.args.clone(),
            Rhs::Prim(p) => p.operands(),
        }
    }

    pub fn map_operands(&self, f: &impl Fn(Var) -> Var) -> Rhs {
        match self {
            Rhs::Ein(app) => Rhs::Ein(EinApp { op: app.op.clone(), args: app.args.iter().map(|&a| f(a)).collect() }),
            Rhs::Prim(p) => Rhs::Prim(p.map_operands(f)),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Rhs::Ein(app) => app.op.node_count(),
            Rhs::Prim(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assign {
    pub lhs: Var,
    pub ty: Ty,
    pub rhs: Rhs,
    /// Source-level name, kept for diagnostics and dumps.
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InputKind {
    Image { dim: usize, shape: Vec<usize> },
    Tensor { shape: Vec<usize>, default: Option<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDecl {
    pub name: String,
    pub kind: InputKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputDecl {
    pub name: String,
    pub var: Var,
    pub shape: Vec<usize>,
}

/// Where an output is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Grid { lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize> },
    Points(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub inputs: Vec<InputDecl>,
    /// Dimension of the world-space position stream.
    pub pos_dim: usize,
    pub stmts: Vec<Assign>,
    pub outputs: Vec<OutputDecl>,
    pub domain: Option<Domain>,
    pub next_var: u32,
}

impl Program {
    pub fn fresh_var(&mut self) -> Var {
        let v = Var(self.next_var);
        self.next_var += 1;
        v
    }

    pub fn def_index(&self) -> HashMap<Var, usize> {
        self.stmts.iter().enumerate().map(|(i, s)| (s.lhs, i)).collect()
    }

    pub fn stmt(&self, v: Var) -> Option<&Assign> {
        self.stmts.iter().find(|s| s.lhs == v)
    }

    /// Total IR size: EIN body nodes plus one per primitive.
    pub fn node_count(&self) -> usize {
        self.stmts.iter().map(|s| s.rhs.node_count()).sum()
    }

    pub fn ein_count(&self) -> usize {
        self.stmts.iter().filter(|s| matches!(s.rhs, Rhs::Ein(_))).count()
    }

    /// Number of uses of each variable (arguments and outputs).
    pub fn use_counts(&self) -> HashMap<Var, usize> {
        let mut uses = HashMap::new();
        for s in &self.stmts {
            for a in s.rhs.operands() {
                *uses.entry(a).or_insert(0) += 1;
            }
        }
        for o in &self.outputs {
            *uses.entry(o.var).or_insert(0) += 1;
        }
        uses
    }

    /// Removes assignments not reachable from the outputs.
    pub fn remove_dead(&mut self) {
        let mut live: HashSet<Var> = self.outputs.iter().map(|o| o.var).collect();
        for s in self.stmts.iter().rev() {
            if live.contains(&s.lhs) {
                live.extend(s.rhs.operands());
            }
        }
        self.stmts.retain(|s| live.contains(&s.lhs));
    }

    /// Redirects every use of `from` to `to`.
    pub fn replace_uses(&mut self, from: Var, to: Var) {
        let f = |v: Var| if v == from { to } else { v };
        for s in &mut self.stmts {
            s.rhs = s.rhs.map_operands(&f);
        }
        for o in &mut self.outputs {
            o.var = f(o.var);
        }
    }

    /// Checks single assignment, definition before use, EIN arity and argument kinds,
    /// and well-formedness of every operator.
    pub fn validate(&self) -> Result<(), IrError> {
        let mut defined: HashMap<Var, &Ty> = HashMap::new();
        for s in &self.stmts {
            for a in s.rhs.operands() {
                if !defined.contains_key(&a) {
                    return Err(IrError::Malformed(format!("{a} used before definition in {}", s.lhs)));
                }
            }
            if let Rhs::Ein(app) = &s.rhs {
                if app.args.len() != app.op.params.len() {
                    return Err(IrError::Malformed(format!(
                        "{}: {} arguments for {} parameters",
                        s.lhs,
                        app.args.len(),
                        app.op.params.len()
                    )));
                }
                for (a, p) in app.args.iter().zip(&app.op.params) {
                    if &defined[a].param_kind() != p && !same_kind_modulo_continuity(&defined[a].param_kind(), p) {
                        return Err(IrError::ShapeMismatch(format!(
                            "{}: argument {a} has type {} but the parameter is {p}",
                            s.lhs,
                            defined[a].param_kind()
                        )));
                    }
                }
                check_wellformed(&app.op)?;
                if app.op.shape() != s.ty.shape() {
                    return Err(IrError::ShapeMismatch(format!(
                        "{}: operator shape {:?} but declared {:?}",
                        s.lhs,
                        app.op.shape(),
                        s.ty.shape()
                    )));
                }
            }
            if defined.insert(s.lhs, &s.ty).is_some() {
                return Err(IrError::Malformed(format!("{} assigned twice", s.lhs)));
            }
        }
        for o in &self.outputs {
            if !defined.contains_key(&o.var) {
                return Err(IrError::Malformed(format!("output {} refers to undefined {}", o.name, o.var)));
            }
        }
        Ok(())
    }

    pub fn sexpr(&self) -> String {
        let mut out = String::from("(program\n");
        for (i, inp) in self.inputs.iter().enumerate() {
            let kind = match &inp.kind {
                InputKind::Image { dim, shape } => format!("(image {dim} {shape:?})"),
                InputKind::Tensor { shape, .. } => format!("(tensor {shape:?})"),
            };
            let _ = writeln!(out, "  (input {i} {} {kind})", inp.name);
        }
        for s in &self.stmts {
            let rhs = match &s.rhs {
                Rhs::Ein(app) => {
                    let args: Vec<String> = app.args.iter().map(|a| a.to_string()).collect();
                    format!("{} (args {})", sexpr(&app.op), args.join(" "))
                }
                Rhs::Prim(p) => p.sexpr(),
            };
            let _ = writeln!(out, "  (let {} {} {rhs})", s.lhs, s.ty.param_kind());
        }
        for o in &self.outputs {
            let _ = writeln!(out, "  (output {} {})", o.name, o.var);
        }
        out.push(')');
        out
    }
}

fn same_kind_modulo_continuity(a: &ParamKind, b: &ParamKind) -> bool {
    match (a, b) {
        (ParamKind::Field { dim: d1, shape: s1, .. }, ParamKind::Field { dim: d2, shape: s2, .. }) => d1 == d2 && s1 == s2,
        _ => false,
    }
}
