//! Reference interpreter for EIN operators and SSA programs.
//!
//! Tensor-level expressions are evaluated by enumerating index valuations.
//! Field-level expressions are evaluated as truncated Taylor jets in the
//! world-space offset from the probe point, so derivatives are exact.

mod jet;
mod series;

use std::sync::Arc;

use thiserror::Error;

pub use jet::Jet;
pub use series::{div_series, pow_series, taylor};

use crate::ir::{BinaryOp, EinOp, Expr, Index, IndexVar, Prim, Program, Rhs, UnaryOp, Var};
use crate::runtime::image::flat_component;
use crate::runtime::{Border, Image, KernelKind};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("probe at {0:?} needs samples outside the image")]
    OutOfDomain(Vec<f64>),
    #[error("{0}")]
    Malformed(String),
    #[error("input {0} is not bound")]
    MissingInput(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    pub fn scalar(v: T) -> Self {
        Tensor { shape: vec![], data: vec![v] }
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[flat_component(&self.shape, idx)]
    }
}

/// A field: the field-valued operator that defines it and its arguments.
#[derive(Clone, Debug)]
pub struct FieldDef<T> {
    pub op: EinOp,
    pub args: Vec<Value<T>>,
}

#[derive(Clone, Debug)]
pub enum Value<T> {
    Tensor(Tensor<T>),
    Image(Arc<Image<T>>),
    Kernel(KernelKind),
    Field(Arc<FieldDef<T>>),
}

impl<T: Scalar> Value<T> {
    pub fn tensor(&self) -> Result<&Tensor<T>, EvalError> {
        match self {
            Value::Tensor(t) => Ok(t),
            _ => Err(EvalError::Malformed("expected a tensor value".into())),
        }
    }

    fn image(&self) -> Result<&Image<T>, EvalError> {
        match self {
            Value::Image(i) => Ok(i),
            _ => Err(EvalError::Malformed("expected an image value".into())),
        }
    }

    fn kernel(&self) -> Result<KernelKind, EvalError> {
        match self {
            Value::Kernel(k) => Ok(*k),
            _ => Err(EvalError::Malformed("expected a kernel value".into())),
        }
    }
}

/// Bound program input, in declaration order.
#[derive(Clone, Debug)]
pub enum InputValue<T> {
    Image(Arc<Image<T>>),
    Tensor(Vec<T>),
}

#[derive(Clone, Debug, Default)]
struct Valuation(Vec<Option<usize>>);

impl Valuation {
    fn set(&mut self, v: IndexVar, x: usize) -> Option<usize> {
        let i = v.0 as usize;
        if self.0.len() <= i {
            self.0.resize(i + 1, None);
        }
        std::mem::replace(&mut self.0[i], Some(x))
    }

    fn restore(&mut self, v: IndexVar, old: Option<usize>) {
        self.0[v.0 as usize] = old;
    }

    fn get(&self, ix: Index) -> Result<usize, EvalError> {
        match ix {
            Index::Const(c) => Ok(c),
            Index::Var(v) => self
                .0
                .get(v.0 as usize)
                .copied()
                .flatten()
                .ok_or_else(|| EvalError::Malformed(format!("unbound index {v:?}"))),
        }
    }

    fn all(&self, ixs: &[Index]) -> Result<Vec<usize>, EvalError> {
        ixs.iter().map(|&i| self.get(i)).collect()
    }
}

pub fn apply_unary<T: Scalar>(op: UnaryOp, x: T) -> T {
    match op {
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

pub fn levi_civita(ixs: &[usize]) -> f64 {
    let mut sign = 1.0;
    for a in 0..ixs.len() {
        for b in a + 1..ixs.len() {
            if ixs[a] == ixs[b] {
                return 0.0;
            }
            if ixs[a] > ixs[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Evaluation settings shared by the interpreters.
#[derive(Clone, Copy, Debug, Default)]
pub struct EvalOptions {
    pub border: Border,
}

struct Ctx<'a, T> {
    args: &'a [Value<T>],
    opts: EvalOptions,
}

impl<T: Scalar> Ctx<'_, T> {
    fn scalar(&self, e: &Expr, val: &mut Valuation) -> Result<T, EvalError> {
        Ok(match e {
            Expr::Const(c) => T::lit(*c),
            Expr::Tensor { param, indices } => self.args[*param].tensor()?.get(&val.all(indices)?),
            Expr::Delta(a, b) => {
                if val.get(*a)? == val.get(*b)? {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Expr::Epsilon2(a, b) => T::lit(levi_civita(&val.all(&[*a, *b])?)),
            Expr::Epsilon3(a, b, c) => T::lit(levi_civita(&val.all(&[*a, *b, *c])?)),
            Expr::Unary(op, x) => apply_unary(*op, self.scalar(x, val)?),
            Expr::Binary(op, a, b) => {
                let (x, y) = (self.scalar(a, val)?, self.scalar(b, val)?);
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => x / y,
                }
            }
            Expr::Sum { var, bound, body } => {
                let mut acc = T::zero();
                for x in 0..*bound {
                    let old = val.set(*var, x);
                    let r = self.scalar(body, val);
                    val.restore(*var, old);
                    acc += r?;
                }
                acc
            }
            Expr::Probe { field, pos } => {
                let p = &self.args[*pos].tensor()?.data;
                self.jet(field, val, p, 0)?.value()
            }
            Expr::Voxel { image, base, offsets, comps, shift } => {
                let img = self.args[*image].image()?;
                let n = &self.args[*base].tensor()?.data;
                let off = val.all(offsets)?;
                let idx: Vec<i64> = (0..img.dim())
                    .map(|a| n[a].to_i64().unwrap_or(i64::MIN / 2) + off[a] as i64 + shift)
                    .collect();
                let comp = flat_component(&img.shape, &val.all(comps)?);
                img.voxel(&idx, comp, self.opts.border)
                    .ok_or_else(|| EvalError::OutOfDomain(idx.iter().map(|&v| v as f64).collect()))?
            }
            Expr::KernelWeight { kernel, frac, axis, derivs, offset, shift } => {
                let k = self.args[*kernel].kernel()?;
                let f = self.args[*frac].tensor()?.data[*axis];
                let order = val.all(derivs)?.iter().filter(|&&j| j == *axis).count() as u32;
                let t = f - T::lit((val.get(*offset)? as i64 + shift) as f64);
                k.kernel().eval_piecewise(order, t)
            }
            Expr::Field { .. } | Expr::Conv { .. } | Expr::Partial { .. } | Expr::Lift(_) => {
                return Err(EvalError::Malformed("field expression outside a probe".into()))
            }
        })
    }

    /// Jet of order `k` of the field expression `e` at world point `p`.
    fn jet(&self, e: &Expr, val: &mut Valuation, p: &[T], k: u32) -> Result<Jet<T>, EvalError> {
        Ok(match e {
            Expr::Const(_) | Expr::Tensor { .. } | Expr::Delta(..) | Expr::Epsilon2(..) | Expr::Epsilon3(..) => {
                Jet::constant(k, self.scalar(e, val)?)
            }
            Expr::Lift(x) => Jet::constant(k, self.scalar(x, val)?),
            Expr::Unary(op, x) => {
                let u = self.jet(x, val, p, k)?;
                u.compose(&taylor(*op, u.value(), k as usize + 1))
            }
            Expr::Binary(op, a, b) => {
                let (x, y) = (self.jet(a, val, p, k)?, self.jet(b, val, p, k)?);
                match op {
                    BinaryOp::Add => x.add(&y),
                    BinaryOp::Sub => x.sub(&y),
                    BinaryOp::Mul => x.mul(&y),
                    BinaryOp::Div => x.div(&y),
                }
            }
            Expr::Sum { var, bound, body } => {
                let mut acc = Jet::constant(k, T::zero());
                for x in 0..*bound {
                    let old = val.set(*var, x);
                    let r = self.jet(body, val, p, k);
                    val.restore(*var, old);
                    acc = acc.add(&r?);
                }
                acc
            }
            Expr::Partial { axis, body } => {
                let a = val.get(*axis)?;
                self.jet(body, val, p, k + 1)?.derivative(a)
            }
            Expr::Field { param, indices } => {
                let Value::Field(def) = &self.args[*param] else {
                    return Err(EvalError::Malformed("field parameter bound to a non-field".into()));
                };
                let mut inner = Valuation::default();
                for (&(v, _), &ix) in def.op.index_map.iter().zip(indices) {
                    inner.set(v, val.get(ix)?);
                }
                Ctx { args: &def.args, opts: self.opts }.jet(&def.op.body, &mut inner, p, k)?
            }
            Expr::Conv { image, comps, kernel, derivs } => {
                let img = self.args[*image].image()?;
                let kern = self.args[*kernel].kernel()?;
                let comp = flat_component(&img.shape, &val.all(comps)?);
                let derivs = val.all(derivs)?;
                let mut j = conv_jet(img, kern, comp, p, k + derivs.len() as u32, self.opts.border)?;
                for &a in &derivs {
                    j = j.derivative(a);
                }
                j
            }
            Expr::Probe { .. } | Expr::Voxel { .. } | Expr::KernelWeight { .. } => {
                return Err(EvalError::Malformed("unexpected node in a field expression".into()))
            }
        })
    }
}

/// World-space Taylor jet of one component of `V ⊛ H` at `p`.
fn conv_jet<T: Scalar>(img: &Image<T>, kind: KernelKind, comp: usize, p: &[T], k: u32, border: Border) -> Result<Jet<T>, EvalError> {
    let d = img.dim();
    let kern = kind.kernel();
    let s = kern.support() as i64;
    let width = (2 * s) as usize;
    let x = img.world_to_image(p);
    let n: Vec<i64> = x.iter().map(|v| v.floor().to_i64().unwrap_or(i64::MIN / 2)).collect();
    let f: Vec<T> = x.iter().zip(&n).map(|(&v, &m)| v - T::lit(m as f64)).collect();
    // w[a][o][i]: o-th kernel derivative for stencil offset i along axis a.
    let w: Vec<Vec<Vec<T>>> = (0..d)
        .map(|a| {
            (0..=k)
                .map(|o| (0..width).map(|i| kern.eval_piecewise(o, f[a] - T::lit((i as i64 + 1 - s) as f64))).collect())
                .collect()
        })
        .collect();
    let mut samples = Vec::with_capacity(width.pow(d as u32));
    for st in 0..width.pow(d as u32) {
        let mut c = st;
        let mut idx = vec![0i64; d];
        let mut loc = vec![0usize; d];
        for a in 0..d {
            loc[a] = c % width;
            c /= width;
            idx[a] = n[a] + loc[a] as i64 + 1 - s;
        }
        let v = img
            .voxel(&idx, comp, border)
            .ok_or_else(|| EvalError::OutOfDomain(p.iter().map(|v| v.as_f64()).collect()))?;
        samples.push((loc, v));
    }
    // Image-space Taylor coefficients D^γ F / γ!, then substitute δx = A δp.
    let lin: Vec<Jet<T>> = (0..d)
        .map(|r| {
            (0..d).fold(Jet::constant(k, T::zero()), |acc, c| acc.add(&Jet::variable(k, c, T::zero()).scale(img.a[r * d + c])))
        })
        .collect();
    let mut out = Jet::constant(k, T::zero());
    let mut gamma = [0u32; 3];
    loop {
        let total: u32 = gamma.iter().sum();
        if total <= k {
            let mut dv = T::zero();
            for (loc, v) in &samples {
                let mut wt = *v;
                for a in 0..d {
                    wt *= w[a][gamma[a] as usize][loc[a]];
                }
                dv += wt;
            }
            let fact = gamma.iter().fold(T::one(), |acc, &g| acc * (1..=g).fold(T::one(), |f, i| f * T::lit(i as f64)));
            let mut term = Jet::constant(k, dv / fact);
            for a in 0..d {
                for _ in 0..gamma[a] {
                    term = term.mul(&lin[a]);
                }
            }
            out = out.add(&term);
        }
        // Next multi-index in [0, k]^d.
        let mut a = 0;
        loop {
            if a == d {
                return Ok(out);
            }
            gamma[a] += 1;
            if gamma[a] <= k {
                break;
            }
            gamma[a] = 0;
            a += 1;
        }
    }
}

/// Evaluates a tensor-valued operator on concrete arguments. Field-valued
/// operators become [`Value::Field`].
pub fn eval_op<T: Scalar>(op: &EinOp, args: &[Value<T>], opts: EvalOptions) -> Result<Value<T>, EvalError> {
    if op.is_field_valued() {
        return Ok(Value::Field(Arc::new(FieldDef { op: op.clone(), args: args.to_vec() })));
    }
    let ctx = Ctx { args, opts };
    let shape = op.shape();
    let total: usize = shape.iter().product();
    let mut data = Vec::with_capacity(total);
    let mut val = Valuation::default();
    for flat in 0..total {
        let mut rem = flat;
        for &(v, b) in op.index_map.iter().rev() {
            val.set(v, rem % b);
            rem /= b;
        }
        data.push(ctx.scalar(&op.body, &mut val)?);
    }
    Ok(Value::Tensor(Tensor::new(shape, data)))
}

/// Component `comps` of the derivative `∂^derivs` of a field at world point `p`.
pub fn probe_field<T: Scalar>(
    def: &FieldDef<T>,
    comps: &[usize],
    derivs: &[usize],
    p: &[T],
    opts: EvalOptions,
) -> Result<T, EvalError> {
    let mut val = Valuation::default();
    for (&(v, _), &c) in def.op.index_map.iter().zip(comps) {
        val.set(v, c);
    }
    let ctx = Ctx { args: &def.args, opts };
    let mut j = ctx.jet(&def.op.body, &mut val, p, derivs.len() as u32)?;
    for &a in derivs {
        j = j.derivative(a);
    }
    Ok(j.value())
}

/// Evaluates every statement of `prog` at world point `p` and returns the
/// flattened value of each output.
pub fn eval_program<T: Scalar>(
    prog: &Program,
    inputs: &[InputValue<T>],
    p: &[T],
    opts: EvalOptions,
) -> Result<Vec<Vec<T>>, EvalError> {
    let env = eval_env(prog, inputs, p, opts)?;
    prog.outputs
        .iter()
        .map(|o| match env.get(&o.var) {
            Some(Value::Tensor(t)) => Ok(t.data.clone()),
            _ => Err(EvalError::Malformed(format!("output {} is not a tensor", o.name))),
        })
        .collect()
}

/// All SSA values of `prog` at world point `p`.
pub fn eval_env<T: Scalar>(
    prog: &Program,
    inputs: &[InputValue<T>],
    p: &[T],
    opts: EvalOptions,
) -> Result<std::collections::HashMap<Var, Value<T>>, EvalError> {
    let mut env: std::collections::HashMap<Var, Value<T>> = std::collections::HashMap::new();
    for s in &prog.stmts {
        let v = match &s.rhs {
            Rhs::Ein(app) => {
                let args: Vec<Value<T>> = app.args.iter().map(|a| env[a].clone()).collect();
                eval_op(&app.op, &args, opts)?
            }
            Rhs::Prim(prim) => eval_prim(prim, &env, prog, inputs, p)?,
        };
        env.insert(s.lhs, v);
    }
    Ok(env)
}

fn eval_prim<T: Scalar>(
    prim: &Prim,
    env: &std::collections::HashMap<Var, Value<T>>,
    prog: &Program,
    inputs: &[InputValue<T>],
    p: &[T],
) -> Result<Value<T>, EvalError> {
    let input = |i: usize| {
        inputs
            .get(i)
            .ok_or_else(|| EvalError::MissingInput(prog.inputs.get(i).map_or_else(|| i.to_string(), |d| d.name.clone())))
    };
    Ok(match prim {
        Prim::LoadImage { input: i } => match input(*i)? {
            InputValue::Image(img) => Value::Image(img.clone()),
            _ => return Err(EvalError::Malformed(format!("input {i} is not an image"))),
        },
        Prim::LoadKernel(k) => Value::Kernel(*k),
        Prim::ConstTensor { shape, data } => Value::Tensor(Tensor::new(shape.clone(), data.iter().map(|&v| T::lit(v)).collect())),
        Prim::TensorInput { input: i } => match input(*i)? {
            InputValue::Tensor(data) => {
                let shape = match &prog.inputs[*i].kind {
                    crate::ir::InputKind::Tensor { shape, .. } => shape.clone(),
                    _ => return Err(EvalError::Malformed(format!("input {i} is not a tensor"))),
                };
                Value::Tensor(Tensor::new(shape, data.clone()))
            }
            _ => return Err(EvalError::Malformed(format!("input {i} is not a tensor"))),
        },
        Prim::Position => Value::Tensor(Tensor::new(vec![p.len()], p.to_vec())),
        Prim::TransformMatrix { image } => {
            let img = env[image].image()?;
            Value::Tensor(Tensor::new(vec![img.dim(), img.dim()], img.a.clone()))
        }
        Prim::WorldToImage { image, pos } => {
            let img = env[image].image()?;
            let x = img.world_to_image(&env[pos].tensor()?.data);
            Value::Tensor(Tensor::new(vec![x.len()], x))
        }
        Prim::Floor(v) => {
            let t = env[v].tensor()?;
            Value::Tensor(Tensor::new(t.shape.clone(), t.data.iter().map(|x| x.floor()).collect()))
        }
    })
}
