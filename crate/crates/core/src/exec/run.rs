use std::collections::HashMap;

use thiserror::Error;

use crate::eval::InputValue;
use crate::ir::{BinaryOp, InputKind};
use crate::lowering::{LowOp, ScalarProgram};
use crate::runtime::{Border, Kernel, KernelKind};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("position {index} {point:?}: stencil leaves the image")]
    OutOfDomain { index: usize, point: Vec<f64> },
    #[error("position {index}: division by zero in {location}")]
    DivideByZero { index: usize, location: String },
    #[error("input binding: {0}")]
    Binding(String),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub border: Border,
    /// Let division by zero produce IEEE infinities/NaN instead of an error.
    pub ieee: bool,
}

/// Checks that every declared input is bound to a value of the declared kind.
pub fn check_bindings<T: Scalar>(prog: &ScalarProgram, inputs: &[InputValue<T>]) -> Result<(), ExecError> {
    if inputs.len() != prog.inputs.len() {
        return Err(ExecError::Binding(format!("{} inputs declared, {} bound", prog.inputs.len(), inputs.len())));
    }
    for (decl, val) in prog.inputs.iter().zip(inputs) {
        match (&decl.kind, val) {
            (InputKind::Image { dim, shape }, InputValue::Image(img)) => {
                let ncomp: usize = shape.iter().product();
                if img.dim() != *dim || img.ncomp() != ncomp {
                    return Err(ExecError::Binding(format!(
                        "{}: declared image({dim}){shape:?}, got a {}-D image with {} components",
                        decl.name,
                        img.dim(),
                        img.ncomp()
                    )));
                }
            }
            (InputKind::Tensor { shape, .. }, InputValue::Tensor(v)) => {
                if v.len() != shape.iter().product::<usize>() {
                    return Err(ExecError::Binding(format!("{}: expected {} values, got {}", decl.name, shape.iter().product::<usize>(), v.len())));
                }
            }
            _ => return Err(ExecError::Binding(format!("{}: wrong kind of value", decl.name))),
        }
    }
    Ok(())
}

/// Evaluates the program at one position; returns one flat vector per output.
pub fn run_point<T: Scalar>(
    prog: &ScalarProgram,
    inputs: &[InputValue<T>],
    kernels: &HashMap<KernelKind, Kernel>,
    index: usize,
    p: &[T],
    opts: RunOptions,
) -> Result<Vec<Vec<T>>, ExecError> {
    let mut r: Vec<T> = Vec::with_capacity(prog.instrs.len());
    let image = |i: usize| match &inputs[i] {
        InputValue::Image(img) => img,
        _ => unreachable!("bindings checked"),
    };
    for ins in &prog.instrs {
        let v = match &ins.op {
            LowOp::Const(b) => T::lit(f64::from_bits(*b)),
            LowOp::Pos(i) => p[*i],
            LowOp::Input { input, index } => match &inputs[*input] {
                InputValue::Tensor(t) => t[*index],
                _ => unreachable!("bindings checked"),
            },
            LowOp::ImageA { input, i, j } => {
                let img = image(*input);
                img.a[i * img.dim() + j]
            }
            LowOp::ImageB { input, i } => image(*input).b[*i],
            LowOp::Floor(x) => r[*x as usize].floor(),
            LowOp::Load { input, base, offsets, comp } => {
                let img = image(*input);
                let idx: Vec<i64> = base
                    .iter()
                    .zip(offsets)
                    .map(|(&b, &o)| r[b as usize].to_i64().unwrap_or(i64::MIN / 2) + o)
                    .collect();
                img.voxel(&idx, *comp, opts.border).ok_or_else(|| ExecError::OutOfDomain {
                    index,
                    point: p.iter().map(|v| v.as_f64()).collect(),
                })?
            }
            LowOp::Kernel { kind, order, arg } => kernels[kind].eval_piecewise(*order, r[*arg as usize]),
            LowOp::Unary(op, x) => crate::eval::apply_unary(*op, r[*x as usize]),
            LowOp::Binary(op, a, b) => {
                let (x, y) = (r[*a as usize], r[*b as usize]);
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == T::zero() && !opts.ieee {
                            return Err(ExecError::DivideByZero { index, location: prog.groups[ins.group as usize].clone() });
                        }
                        x / y
                    }
                }
            }
        };
        r.push(v);
    }
    Ok(prog.outputs.iter().map(|o| o.regs.iter().map(|&x| r[x as usize]).collect()).collect())
}

/// Evaluates the program at every position, in order.
pub fn run<T: Scalar>(
    prog: &ScalarProgram,
    inputs: &[InputValue<T>],
    positions: &[Vec<T>],
    opts: RunOptions,
) -> Result<Vec<Vec<Vec<T>>>, ExecError> {
    check_bindings(prog, inputs)?;
    let kernels: HashMap<KernelKind, Kernel> = KernelKind::ALL.iter().map(|&k| (k, k.kernel())).collect();
    positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.len() != prog.pos_dim {
                return Err(ExecError::Binding(format!("position {i} has {} coordinates, expected {}", p.len(), prog.pos_dim)));
            }
            run_point(prog, inputs, &kernels, i, p, opts)
        })
        .collect()
}
