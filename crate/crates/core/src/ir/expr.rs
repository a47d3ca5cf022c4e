//! EIN expressions and operators.

use std::collections::BTreeSet;
use std::fmt;

use crate::runtime::kernel::KernelKind;

/// Index variable; printed as `i`, `j`, `k`, ... by the pretty printer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexVar(pub u32);

/// A single index: a variable or a 0-based constant position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Index {
    Var(IndexVar),
    Const(usize),
}

impl Index {
    pub fn var(self) -> Option<IndexVar> {
        match self {
            Index::Var(v) => Some(v),
            Index::Const(_) => None,
        }
    }
}

impl From<IndexVar> for Index {
    fn from(v: IndexVar) -> Self {
        Index::Var(v)
    }
}

pub type ParamId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Exp,
    Pow(i32),
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
}

impl UnaryOp {
    pub fn name(self) -> String {
        match self {
            UnaryOp::Neg => "neg".into(),
            UnaryOp::Sqrt => "sqrt".into(),
            UnaryOp::Exp => "exp".into(),
            UnaryOp::Pow(n) => format!("pow{n}"),
            UnaryOp::Sin => "sin".into(),
            UnaryOp::Cos => "cos".into(),
            UnaryOp::Tan => "tan".into(),
            UnaryOp::Asin => "asin".into(),
            UnaryOp::Acos => "acos".into(),
            UnaryOp::Atan => "atan".into(),
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            UnaryOp::Neg => -x,
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Pow(n) => x.powi(n),
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Tan => x.tan(),
            UnaryOp::Asin => x.asin(),
            UnaryOp::Acos => x.acos(),
            UnaryOp::Atan => x.atan(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
        }
    }
}

/// Indexed expression tree. Every node denotes one scalar component (or one
/// scalar field component) for a given valuation of its free index variables.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Tensor { param: ParamId, indices: Vec<Index> },
    Field { param: ParamId, indices: Vec<Index> },
    Delta(Index, Index),
    Epsilon2(Index, Index),
    Epsilon3(Index, Index, Index),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Sum { var: IndexVar, bound: usize, body: Box<Expr> },
    /// Probe of a field expression at the world position held in tensor parameter `pos`.
    Probe { field: Box<Expr>, pos: ParamId },
    Lift(Box<Expr>),
    /// `V_comps ⊛ H^derivs`; derivative indices range over world axes.
    Conv { image: ParamId, comps: Vec<Index>, kernel: ParamId, derivs: Vec<Index> },
    Partial { axis: Index, body: Box<Expr> },
    /// Mid-level voxel load `V[base_a + offsets_a + shift, comps]`.
    Voxel { image: ParamId, base: ParamId, offsets: Vec<Index>, comps: Vec<Index>, shift: i64 },
    /// Mid-level kernel weight `h^(c)(frac_axis - (offset + shift))` where `c`
    /// counts the occurrences of `axis` in `derivs` (image-space axes).
    KernelWeight { kernel: ParamId, frac: ParamId, axis: usize, derivs: Vec<Index>, offset: Index, shift: i64 },
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn tensor(param: ParamId, indices: Vec<Index>) -> Expr {
        Expr::Tensor { param, indices }
    }

    pub fn field(param: ParamId, indices: Vec<Index>) -> Expr {
        Expr::Field { param, indices }
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::unary(UnaryOp::Neg, e)
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Div, a, b)
    }

    /// Left-nested product of the given factors; `1` when empty.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut it = factors.into_iter();
        match it.next() {
            None => Expr::Const(1.0),
            Some(first) => it.fold(first, Expr::mul),
        }
    }

    pub fn sum(var: IndexVar, bound: usize, body: Expr) -> Expr {
        Expr::Sum { var, bound, body: Box::new(body) }
    }

    /// Nested summation, outermost binder first.
    pub fn sums(binders: &[(IndexVar, usize)], body: Expr) -> Expr {
        binders.iter().rev().fold(body, |acc, &(v, b)| Expr::sum(v, b, acc))
    }

    pub fn probe(field: Expr, pos: ParamId) -> Expr {
        Expr::Probe { field: Box::new(field), pos }
    }

    pub fn lift(e: Expr) -> Expr {
        Expr::Lift(Box::new(e))
    }

    pub fn partial(axis: Index, body: Expr) -> Expr {
        Expr::Partial { axis, body: Box::new(body) }
    }

    pub fn is_const(&self, v: f64) -> bool {
        matches!(self, Expr::Const(c) if *c == v)
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Unary(_, e) | Expr::Lift(e) => vec![e],
            Expr::Sum { body, .. } | Expr::Partial { body, .. } => vec![body],
            Expr::Probe { field, .. } => vec![field],
            Expr::Binary(_, a, b) => vec![a, b],
            _ => vec![],
        }
    }

    /// Rebuilds this node with `f` applied to each direct child.
    pub fn map_children(&self, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
        match self {
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(f(e))),
            Expr::Lift(e) => Expr::Lift(Box::new(f(e))),
            Expr::Sum { var, bound, body } => Expr::Sum { var: *var, bound: *bound, body: Box::new(f(body)) },
            Expr::Partial { axis, body } => Expr::Partial { axis: *axis, body: Box::new(f(body)) },
            Expr::Probe { field, pos } => Expr::Probe { field: Box::new(f(field)), pos: *pos },
            Expr::Binary(op, a, b) => {
                let a = f(a);
                let b = f(b);
                Expr::Binary(*op, Box::new(a), Box::new(b))
            }
            leaf => leaf.clone(),
        }
    }

    /// Node count used for IR-size measurements: one per tree node, one per summation binder.
    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Indices mentioned directly by this node (not by its children).
    pub fn own_indices(&self) -> Vec<Index> {
        match self {
            Expr::Tensor { indices, .. } | Expr::Field { indices, .. } => indices.clone(),
            Expr::Delta(a, b) | Expr::Epsilon2(a, b) => vec![*a, *b],
            Expr::Epsilon3(a, b, c) => vec![*a, *b, *c],
            Expr::Conv { comps, derivs, .. } => comps.iter().chain(derivs).copied().collect(),
            Expr::Partial { axis, .. } => vec![*axis],
            Expr::Voxel { offsets, comps, .. } => offsets.iter().chain(comps).copied().collect(),
            Expr::KernelWeight { derivs, offset, .. } => derivs.iter().chain(std::iter::once(offset)).copied().collect(),
            _ => vec![],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<IndexVar> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<IndexVar>, out: &mut BTreeSet<IndexVar>) {
        for ix in self.own_indices() {
            if let Index::Var(v) = ix {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        }
        if let Expr::Sum { var, body, .. } = self {
            bound.push(*var);
            body.collect_free(bound, out);
            bound.pop();
        } else {
            for c in self.children() {
                c.collect_free(bound, out);
            }
        }
    }

    pub fn mentions_var(&self, v: IndexVar) -> bool {
        self.free_vars().contains(&v)
    }

    /// Largest index variable occurring anywhere (free or bound).
    pub fn max_var(&self) -> Option<IndexVar> {
        let mut best = self.own_indices().into_iter().filter_map(Index::var).max();
        if let Expr::Sum { var, .. } = self {
            best = best.max(Some(*var));
        }
        for c in self.children() {
            best = best.max(c.max_var());
        }
        best
    }

    /// Parameters referenced anywhere in the tree, in ascending order.
    pub fn params(&self) -> BTreeSet<ParamId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            Expr::Tensor { param, .. } | Expr::Field { param, .. } => {
                out.insert(*param);
            }
            Expr::Probe { pos, .. } => {
                out.insert(*pos);
            }
            Expr::Conv { image, kernel, .. } => {
                out.insert(*image);
                out.insert(*kernel);
            }
            Expr::Voxel { image, base, .. } => {
                out.insert(*image);
                out.insert(*base);
            }
            Expr::KernelWeight { kernel, frac, .. } => {
                out.insert(*kernel);
                out.insert(*frac);
            }
            _ => {}
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn any(&self, pred: &impl Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().iter().any(|c| c.any(pred))
    }

    /// Renames parameter ids through `map`.
    pub fn remap_params<F: Fn(ParamId) -> ParamId + ?Sized>(&self, map: &F) -> Expr {
        match self {
            Expr::Tensor { param, indices } => Expr::Tensor { param: map(*param), indices: indices.clone() },
            Expr::Field { param, indices } => Expr::Field { param: map(*param), indices: indices.clone() },
            Expr::Probe { field, pos } => Expr::Probe { field: Box::new(field.remap_params(map)), pos: map(*pos) },
            Expr::Conv { image, comps, kernel, derivs } => Expr::Conv {
                image: map(*image),
                comps: comps.clone(),
                kernel: map(*kernel),
                derivs: derivs.clone(),
            },
            Expr::Voxel { image, base, offsets, comps, shift } => Expr::Voxel {
                image: map(*image),
                base: map(*base),
                offsets: offsets.clone(),
                comps: comps.clone(),
                shift: *shift,
            },
            Expr::KernelWeight { kernel, frac, axis, derivs, offset, shift } => Expr::KernelWeight {
                kernel: map(*kernel),
                frac: map(*frac),
                axis: *axis,
                derivs: derivs.clone(),
                offset: *offset,
                shift: *shift,
            },
            other => other.map_children(|c| c.remap_params(map)),
        }
    }

    /// Applies `f` to every index occurrence (binders untouched).
    pub fn map_indices(&self, f: &impl Fn(Index) -> Index) -> Expr {
        let m = |v: &Vec<Index>| v.iter().map(|&i| f(i)).collect::<Vec<_>>();
        match self {
            Expr::Tensor { param, indices } => Expr::Tensor { param: *param, indices: m(indices) },
            Expr::Field { param, indices } => Expr::Field { param: *param, indices: m(indices) },
            Expr::Delta(a, b) => Expr::Delta(f(*a), f(*b)),
            Expr::Epsilon2(a, b) => Expr::Epsilon2(f(*a), f(*b)),
            Expr::Epsilon3(a, b, c) => Expr::Epsilon3(f(*a), f(*b), f(*c)),
            Expr::Conv { image, comps, kernel, derivs } => Expr::Conv {
                image: *image,
                comps: m(comps),
                kernel: *kernel,
                derivs: m(derivs),
            },
            Expr::Partial { axis, body } => Expr::Partial { axis: f(*axis), body: Box::new(body.map_indices(f)) },
            Expr::Voxel { image, base, offsets, comps, shift } => Expr::Voxel {
                image: *image,
                base: *base,
                offsets: m(offsets),
                comps: m(comps),
                shift: *shift,
            },
            Expr::KernelWeight { kernel, frac, axis, derivs, offset, shift } => Expr::KernelWeight {
                kernel: *kernel,
                frac: *frac,
                axis: *axis,
                derivs: m(derivs),
                offset: f(*offset),
                shift: *shift,
            },
            other => other.map_children(|c| c.map_indices(f)),
        }
    }

    /// Replaces free occurrences of `from` by `to`. Binders are assumed distinct
    /// from `to` (callers freshen binders before substituting).
    pub fn subst_var(&self, from: IndexVar, to: Index) -> Expr {
        match self {
            Expr::Sum { var, .. } if *var == from => self.clone(),
            Expr::Sum { var, bound, body } => Expr::Sum { var: *var, bound: *bound, body: Box::new(body.subst_var(from, to)) },
            _ => {
                let here = self.map_own_indices(&|i| if i == Index::Var(from) { to } else { i });
                here.map_children(|c| c.subst_var(from, to))
            }
        }
    }

    fn map_own_indices(&self, f: &impl Fn(Index) -> Index) -> Expr {
        match self {
            Expr::Partial { axis, body } => Expr::Partial { axis: f(*axis), body: body.clone() },
            Expr::Unary(..) | Expr::Binary(..) | Expr::Sum { .. } | Expr::Probe { .. } | Expr::Lift(_) => self.clone(),
            leaf => leaf.map_indices(f),
        }
    }

    /// True when the expression denotes a field (has field structure not under a probe).
    pub fn is_field_valued(&self) -> bool {
        match self {
            Expr::Field { .. } | Expr::Conv { .. } | Expr::Lift(_) | Expr::Partial { .. } => true,
            Expr::Probe { .. } => false,
            _ => self.children().iter().any(|c| c.is_field_valued()),
        }
    }

    pub fn contains_probe(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Probe { .. }))
    }
}

/// Declared kind of an operator parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Tensor(Vec<usize>),
    Field { k: u32, dim: usize, shape: Vec<usize> },
    Image { dim: usize, shape: Vec<usize> },
    Kernel(KernelKind),
}

impl ParamKind {
    pub fn shape(&self) -> &[usize] {
        match self {
            ParamKind::Tensor(s) | ParamKind::Field { shape: s, .. } | ParamKind::Image { shape: s, .. } => s,
            ParamKind::Kernel(_) => &[],
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims = |s: &[usize]| s.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        match self {
            ParamKind::Tensor(s) => write!(f, "tensor[{}]", dims(s)),
            ParamKind::Field { k, dim, shape } => write!(f, "field#{k}({dim})[{}]", dims(shape)),
            ParamKind::Image { dim, shape } => write!(f, "image({dim})[{}]", dims(shape)),
            ParamKind::Kernel(k) => write!(f, "kernel {k}"),
        }
    }
}

/// `λ(params)⟨body⟩_{index_map}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EinOp {
    pub params: Vec<ParamKind>,
    pub body: Expr,
    pub index_map: Vec<(IndexVar, usize)>,
}

impl EinOp {
    pub fn new(params: Vec<ParamKind>, body: Expr, index_map: Vec<(IndexVar, usize)>) -> Self {
        EinOp { params, body, index_map }
    }

    /// Result shape: the bounds of the index map in order.
    pub fn shape(&self) -> Vec<usize> {
        self.index_map.iter().map(|&(_, b)| b).collect()
    }

    pub fn node_count(&self) -> usize {
        self.body.node_count()
    }

    /// A variable generator that will not collide with anything in this operator.
    pub fn var_gen(&self) -> VarGen {
        let m = self.index_map.iter().map(|&(v, _)| v).max().max(self.body.max_var());
        VarGen { next: m.map_or(0, |v| v.0 + 1) }
    }

    /// Drops parameters the body no longer references; returns the kept old ids.
    pub fn prune_params(&mut self) -> Vec<ParamId> {
        let used = self.body.params();
        let kept: Vec<ParamId> = (0..self.params.len()).filter(|p| used.contains(p)).collect();
        let mut remap = vec![usize::MAX; self.params.len()];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new;
        }
        self.body = self.body.remap_params(&|p| remap[p]);
        self.params = kept.iter().map(|&p| self.params[p].clone()).collect();
        kept
    }

    pub fn is_field_valued(&self) -> bool {
        self.body.is_field_valued()
    }
}

/// Fresh index-variable supply.
#[derive(Clone, Debug)]
pub struct VarGen {
    next: u32,
}

impl VarGen {
    pub fn starting_at(next: u32) -> Self {
        VarGen { next }
    }

    pub fn fresh(&mut self) -> IndexVar {
        let v = IndexVar(self.next);
        self.next += 1;
        v
    }

    pub fn reserve(&mut self, e: &Expr) {
        if let Some(v) = e.max_var() {
            self.next = self.next.max(v.0 + 1);
        }
    }
}

/// Renames every summation binder in `e` to a fresh variable.
pub fn freshen_binders(e: &Expr, gen: &mut VarGen) -> Expr {
    match e {
        Expr::Sum { var, bound, body } => {
            let nv = gen.fresh();
            let body = body.subst_var(*var, Index::Var(nv));
            Expr::Sum { var: nv, bound: *bound, body: Box::new(freshen_binders(&body, gen)) }
        }
        other => other.map_children(|c| freshen_binders(c, gen)),
    }
}
