//! Index reductions: δ elimination, ε-ε contraction, antisymmetry, and
//! splitting or dropping of summations.

use std::cell::RefCell;

use crate::ir::{BinaryOp, EinOp, Expr, Index, IndexVar, UnaryOp, VarGen};

use super::normalize::{fuel_for, Tracer};
use super::rewrite::{factors, fold, rewrite_once, Order};
use super::TransformError;

/// Peels nested summations: binders outermost first, then the innermost body.
pub fn sum_chain(e: &Expr) -> (Vec<(IndexVar, usize)>, &Expr) {
    let mut binders = Vec::new();
    let mut cur = e;
    while let Expr::Sum { var, bound, body } = cur {
        binders.push((*var, *bound));
        cur = body;
    }
    (binders, cur)
}

fn has_epsilon(e: &Expr) -> bool {
    e.any(&|n| matches!(n, Expr::Epsilon2(..) | Expr::Epsilon3(..)))
}

fn swap_vars(e: &Expr, a: IndexVar, b: IndexVar) -> Expr {
    e.map_indices(&|i| match i {
        Index::Var(v) if v == a => Index::Var(b),
        Index::Var(v) if v == b => Index::Var(a),
        other => other,
    })
}

/// Canonical form for symmetry comparisons: derivative lists sorted and the
/// operands of commutative operations ordered.
fn canon(e: &Expr) -> Expr {
    match e {
        Expr::Conv { image, comps, kernel, derivs } => {
            let mut derivs = derivs.clone();
            derivs.sort();
            Expr::Conv { image: *image, comps: comps.clone(), kernel: *kernel, derivs }
        }
        Expr::Binary(BinaryOp::Mul, ..) => {
            let mut fs: Vec<Expr> = factors(e).iter().map(canon).collect();
            fs.sort_by_key(|f| format!("{f:?}"));
            Expr::product(fs)
        }
        Expr::Binary(BinaryOp::Add, a, b) => {
            let (a, b) = (canon(a), canon(b));
            if format!("{a:?}") <= format!("{b:?}") {
                Expr::add(a, b)
            } else {
                Expr::add(b, a)
            }
        }
        other => other.map_children(canon),
    }
}

fn eps_indices(e: &Expr) -> Option<Vec<Index>> {
    match e {
        Expr::Epsilon2(a, b) => Some(vec![*a, *b]),
        Expr::Epsilon3(a, b, c) => Some(vec![*a, *b, *c]),
        _ => None,
    }
}

/// Rotates an ε so that `i` comes first; returns the remaining indices and the sign.
fn rotate(ix: &[Index], i: Index) -> Option<(Vec<Index>, f64)> {
    let t = ix.iter().position(|&x| x == i)?;
    if ix.iter().filter(|&&x| x == i).count() != 1 {
        return None;
    }
    match ix.len() {
        2 => Some((vec![ix[1 - t]], if t == 0 { 1.0 } else { -1.0 })),
        3 => Some((vec![ix[(t + 1) % 3], ix[(t + 2) % 3]], 1.0)),
        _ => None,
    }
}

fn delta_elim(var: IndexVar, bound: usize, body: &Expr) -> Option<Expr> {
    let fs = factors(body);
    for (n, f) in fs.iter().enumerate() {
        let Expr::Delta(a, b) = f else { continue };
        let other = match (*a, *b) {
            (Index::Var(v), o) if v == var && o != Index::Var(var) => o,
            (o, Index::Var(v)) if v == var && o != Index::Var(var) => o,
            _ => continue,
        };
        if let Index::Const(c) = other {
            if c >= bound {
                return Some(Expr::Const(0.0));
            }
        }
        let rest: Vec<Expr> = fs.iter().enumerate().filter(|&(m, _)| m != n).map(|(_, g)| g.clone()).collect();
        return Some(Expr::product(rest).subst_var(var, other));
    }
    None
}

fn eps_eps(e: &Expr) -> Option<Expr> {
    let (binders, body) = sum_chain(e);
    let fs = factors(body);
    for (bi, &(i, _)) in binders.iter().enumerate() {
        let iv = Index::Var(i);
        let hits: Vec<usize> = (0..fs.len())
            .filter(|&n| eps_indices(&fs[n]).is_some_and(|ix| ix.contains(&iv)))
            .collect();
        if hits.len() != 2 {
            continue;
        }
        let (p, q) = (hits[0], hits[1]);
        let (ip, iq) = (eps_indices(&fs[p]).unwrap(), eps_indices(&fs[q]).unwrap());
        if ip.len() != iq.len() {
            continue;
        }
        let others: Vec<Expr> = fs.iter().enumerate().filter(|&(m, _)| m != p && m != q).map(|(_, g)| g.clone()).collect();
        if others.iter().any(|g| g.mentions_var(i)) {
            continue;
        }
        let (Some((jk, s1)), Some((lm, s2))) = (rotate(&ip, iv), rotate(&iq, iv)) else { continue };
        let contracted = if jk.len() == 1 {
            Expr::Delta(jk[0], lm[0])
        } else {
            Expr::sub(
                Expr::mul(Expr::Delta(jk[0], lm[0]), Expr::Delta(jk[1], lm[1])),
                Expr::mul(Expr::Delta(jk[0], lm[1]), Expr::Delta(jk[1], lm[0])),
            )
        };
        let sign = s1 * s2;
        let mut prod = others;
        if sign < 0.0 {
            prod.insert(0, Expr::Const(-1.0));
        }
        prod.push(contracted);
        let mut rest = binders.clone();
        rest.remove(bi);
        return Some(Expr::sums(&rest, Expr::product(prod)));
    }
    None
}

fn antisymmetric(e: &Expr) -> bool {
    let (binders, body) = sum_chain(e);
    let fs = factors(body);
    let bound = |v: IndexVar| binders.iter().any(|&(w, _)| w == v);
    for (n, f) in fs.iter().enumerate() {
        let Some(ix) = eps_indices(f) else { continue };
        let rest = Expr::product(fs.iter().enumerate().filter(|&(m, _)| m != n).map(|(_, g)| g.clone()).collect());
        let c = canon(&rest);
        for x in 0..ix.len() {
            for y in x + 1..ix.len() {
                let (Index::Var(a), Index::Var(b)) = (ix[x], ix[y]) else { continue };
                if a == b || !bound(a) || !bound(b) {
                    continue;
                }
                if canon(&swap_vars(&rest, a, b)) == c {
                    return true;
                }
            }
        }
    }
    false
}

/// Moves a summation out of a product when both sides carry ε.
fn float_sum(e: &Expr) -> Option<Expr> {
    let Expr::Binary(BinaryOp::Mul, a, b) = e else { return None };
    if !has_epsilon(a) || !has_epsilon(b) {
        return None;
    }
    if let Expr::Sum { var, bound, body } = &**a {
        if !b.mentions_var(*var) {
            return Some(Expr::sum(*var, *bound, Expr::mul((**body).clone(), (**b).clone())));
        }
    }
    if let Expr::Sum { var, bound, body } = &**b {
        if !a.mentions_var(*var) {
            return Some(Expr::sum(*var, *bound, Expr::mul((**a).clone(), (**body).clone())));
        }
    }
    None
}

/// Distributes a product over a sum or difference built only from δs and
/// constants (the result of ε-ε contraction). Other sums are left intact.
fn distribute_delta(e: &Expr) -> Option<Expr> {
    if !matches!(e, Expr::Binary(BinaryOp::Mul, ..)) {
        return None;
    }
    let fs = factors(e);
    let n = fs.iter().position(|f| {
        matches!(f, Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..))
            && f.any(&|g| matches!(g, Expr::Delta(..)))
            && !f.any(&|g| g.children().is_empty() && !matches!(g, Expr::Delta(..) | Expr::Const(_)))
    })?;
    let Expr::Binary(op, x, y) = &fs[n] else { return None };
    let with = |t: &Expr| {
        let mut g = fs.clone();
        g[n] = t.clone();
        Expr::product(g)
    };
    Some(Expr::binary(*op, with(x), with(y)))
}

fn freshen_sum(e: &Expr, gen: &RefCell<VarGen>) -> Expr {
    crate::ir::freshen_binders(e, &mut gen.borrow_mut())
}

/// Rewrites `op` with the index-reduction rules to a fixpoint.
pub fn reduce_indices(op: &EinOp, mut tracer: Option<&mut Tracer<'_>>) -> Result<EinOp, TransformError> {
    let fuel = fuel_for(op.node_count());
    let gen = RefCell::new(op.var_gen());
    let rule = |e: &Expr| -> Option<(&'static str, Expr)> {
        if let Some(r) = float_sum(e) {
            return Some(("sum-float", r));
        }
        if let Some(r) = distribute_delta(e) {
            return Some(("delta-distribute", r));
        }
        let Expr::Sum { var, bound, body } = e else { return None };
        let (var, bound) = (*var, *bound);
        match &**body {
            Expr::Binary(op @ (BinaryOp::Add | BinaryOp::Sub), x, y) => {
                let right = freshen_sum(&Expr::sum(var, bound, (**y).clone()), &gen);
                return Some(("sum-split", Expr::binary(*op, Expr::sum(var, bound, (**x).clone()), right)));
            }
            Expr::Unary(UnaryOp::Neg, x) => return Some(("sum-split", Expr::neg(Expr::sum(var, bound, (**x).clone())))),
            _ => {}
        }
        if !body.mentions_var(var) {
            return Some(("sum-const", Expr::mul(Expr::Const(bound as f64), (**body).clone())));
        }
        if let Some(r) = delta_elim(var, bound, body) {
            return Some(("delta-elim", r));
        }
        if let Some(r) = eps_eps(e) {
            return Some(("eps-eps", r));
        }
        if antisymmetric(e) {
            return Some(("antisymmetry", Expr::Const(0.0)));
        }
        None
    };
    let mut body = fold(&op.body);
    let mut used = 0;
    while let Some(step) = rewrite_once(&body, &rule, Order::Pre) {
        used += 1;
        if used > fuel {
            return Err(TransformError::FuelExhausted { pass: "reduce", fuel });
        }
        if let Some(t) = tracer.as_mut() {
            t(step.rule, &step.before, &step.after);
        }
        body = fold(&step.tree);
    }
    Ok(EinOp::new(op.params.clone(), body, op.index_map.clone()))
}
