//! Rewriting of probes and derivatives into normal form: probes sit directly on
//! convolutions, derivatives are absorbed into kernels, no lifts remain.

use crate::ir::{BinaryOp, EinOp, Expr, UnaryOp};

use super::rewrite::{fold, rewrite_once, Order, Step};
use super::TransformError;

/// Observer called after every rule application with (rule, before, after).
pub type Tracer<'b> = dyn FnMut(&str, &Expr, &Expr) + 'b;

/// True when `e` varies with position (contains field data).
fn varies(e: &Expr) -> bool {
    e.any(&|n| matches!(n, Expr::Field { .. } | Expr::Conv { .. }))
}

/// Probe of `e` at `pos`, dropping it for lifted and tensor-valued terms.
fn probe_at(e: &Expr, pos: usize) -> Expr {
    match e {
        Expr::Lift(x) => (**x).clone(),
        x if !x.is_field_valued() => x.clone(),
        x => Expr::probe(x.clone(), pos),
    }
}

fn probe_rule(e: &Expr) -> Option<(&'static str, Expr)> {
    let Expr::Probe { field, pos } = e else { return None };
    let pos = *pos;
    let r = match &**field {
        Expr::Lift(x) => ("probe-lift", (**x).clone()),
        Expr::Unary(op, x) => ("probe-unary", Expr::unary(*op, probe_at(x, pos))),
        Expr::Binary(op, a, b) => ("probe-binary", Expr::binary(*op, probe_at(a, pos), probe_at(b, pos))),
        Expr::Sum { var, bound, body } => ("probe-sum", Expr::sum(*var, *bound, probe_at(body, pos))),
        x if !x.is_field_valued() => ("probe-const", x.clone()),
        _ => return None,
    };
    Some(r)
}

fn pow(e: Expr, n: i32) -> Expr {
    Expr::unary(UnaryOp::Pow(n), e)
}

fn chain(op: UnaryOp, x: &Expr, dx: Expr) -> Expr {
    let one = || Expr::Const(1.0);
    let x = x.clone();
    match op {
        UnaryOp::Neg => Expr::neg(dx),
        UnaryOp::Exp => Expr::mul(Expr::unary(UnaryOp::Exp, x), dx),
        UnaryOp::Sqrt => Expr::div(dx, Expr::mul(Expr::Const(2.0), Expr::unary(UnaryOp::Sqrt, x))),
        UnaryOp::Pow(n) => {
            let inner = match n - 1 {
                0 => one(),
                1 => x,
                m => pow(x, m),
            };
            Expr::mul(Expr::mul(Expr::Const(n as f64), inner), dx)
        }
        UnaryOp::Sin => Expr::mul(Expr::unary(UnaryOp::Cos, x), dx),
        UnaryOp::Cos => Expr::neg(Expr::mul(Expr::unary(UnaryOp::Sin, x), dx)),
        UnaryOp::Tan => Expr::div(dx, pow(Expr::unary(UnaryOp::Cos, x), 2)),
        UnaryOp::Asin => Expr::div(dx, Expr::unary(UnaryOp::Sqrt, Expr::sub(one(), pow(x, 2)))),
        UnaryOp::Acos => Expr::neg(Expr::div(dx, Expr::unary(UnaryOp::Sqrt, Expr::sub(one(), pow(x, 2))))),
        UnaryOp::Atan => Expr::div(dx, Expr::add(one(), pow(x, 2))),
    }
}

fn deriv_rule(e: &Expr) -> Option<(&'static str, Expr)> {
    let Expr::Partial { axis, body } = e else { return None };
    let d = |x: &Expr| Expr::partial(*axis, x.clone());
    let r = match &**body {
        Expr::Binary(op @ (BinaryOp::Add | BinaryOp::Sub), a, b) => ("deriv-linear", Expr::binary(*op, d(a), d(b))),
        Expr::Binary(BinaryOp::Mul, a, b) => {
            let r = match (varies(a), varies(b)) {
                (false, false) => Expr::Const(0.0),
                (false, true) => Expr::mul((**a).clone(), d(b)),
                (true, false) => Expr::mul(d(a), (**b).clone()),
                (true, true) => Expr::add(Expr::mul(d(a), (**b).clone()), Expr::mul((**a).clone(), d(b))),
            };
            ("deriv-product", r)
        }
        Expr::Binary(BinaryOp::Div, a, b) => {
            let r = if varies(b) {
                Expr::div(
                    Expr::sub(Expr::mul(d(a), (**b).clone()), Expr::mul((**a).clone(), d(b))),
                    pow((**b).clone(), 2),
                )
            } else {
                Expr::div(d(a), (**b).clone())
            };
            ("deriv-quotient", r)
        }
        Expr::Unary(op, x) => ("deriv-chain", chain(*op, x, d(x))),
        Expr::Sum { var, bound, body } => ("deriv-sum", Expr::sum(*var, *bound, d(body))),
        Expr::Conv { image, comps, kernel, derivs } => {
            let mut derivs = derivs.clone();
            derivs.push(*axis);
            ("deriv-conv", Expr::Conv { image: *image, comps: comps.clone(), kernel: *kernel, derivs })
        }
        Expr::Partial { .. } | Expr::Field { .. } => return None,
        x if !varies(x) => ("deriv-const", Expr::Const(0.0)),
        _ => return None,
    };
    Some(r)
}

/// Fuel for a body of `n` nodes.
pub fn fuel_for(n: usize) -> usize {
    10 * n.max(4) * n.max(4)
}

/// Rewrites `op` to normal form. Probe distribution is tried first, then
/// derivative push-down (innermost first); constants are folded after each step.
pub fn normalize(op: &EinOp, mut tracer: Option<&mut Tracer<'_>>) -> Result<EinOp, TransformError> {
    let fuel = fuel_for(op.node_count());
    let mut body = fold(&op.body);
    let mut used = 0;
    loop {
        let step: Option<Step> = rewrite_once(&body, &probe_rule, Order::Pre)
            .or_else(|| rewrite_once(&body, &deriv_rule, Order::Post));
        let Some(step) = step else { break };
        used += 1;
        if used > fuel {
            return Err(TransformError::FuelExhausted { pass: "normalize", fuel });
        }
        if let Some(t) = tracer.as_mut() {
            t(step.rule, &step.before, &step.after);
        }
        body = fold(&step.tree);
    }
    Ok(EinOp::new(op.params.clone(), body, op.index_map.clone()))
}
