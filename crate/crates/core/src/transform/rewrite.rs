//! Single-step rewriting helpers and constant folding shared by the HighIR passes.

use crate::ir::{BinaryOp, Expr, Index, UnaryOp};

pub type RuleFn<'a> = dyn Fn(&Expr) -> Option<(&'static str, Expr)> + 'a;

/// A rule application: rule name, rewritten subterm before and after, new tree.
pub struct Step {
    pub rule: &'static str,
    pub before: Expr,
    pub after: Expr,
    pub tree: Expr,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Try the node before its children.
    Pre,
    /// Try the children before the node (innermost first).
    Post,
}

/// Applies `rule` at the first matching position in `e` (left to right).
pub fn rewrite_once(e: &Expr, rule: &RuleFn<'_>, order: Order) -> Option<Step> {
    if order == Order::Pre {
        if let Some((name, after)) = rule(e) {
            return Some(Step { rule: name, before: e.clone(), after: after.clone(), tree: after });
        }
    }
    let kids = e.children();
    for (i, c) in kids.iter().enumerate() {
        if let Some(step) = rewrite_once(c, rule, order) {
            let mut k = 0;
            let sub = step.tree.clone();
            let tree = e.map_children(|orig| {
                let r = if k == i { sub.clone() } else { orig.clone() };
                k += 1;
                r
            });
            return Some(Step { tree, ..step });
        }
    }
    if order == Order::Post {
        if let Some((name, after)) = rule(e) {
            return Some(Step { rule: name, before: e.clone(), after: after.clone(), tree: after });
        }
    }
    None
}

fn finite(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

fn perm_sign(ixs: &[usize]) -> f64 {
    let mut s = 1.0;
    for a in 0..ixs.len() {
        for b in a + 1..ixs.len() {
            if ixs[a] == ixs[b] {
                return 0.0;
            }
            if ixs[a] > ixs[b] {
                s = -s;
            }
        }
    }
    s
}

fn has_repeat(ixs: &[Index]) -> bool {
    (0..ixs.len()).any(|a| (a + 1..ixs.len()).any(|b| ixs[a] == ixs[b]))
}

fn all_const(ixs: &[Index]) -> Option<Vec<usize>> {
    ixs.iter()
        .map(|i| match i {
            Index::Const(c) => Some(*c),
            Index::Var(_) => None,
        })
        .collect()
}

/// One local folding step at the root of `e` (children assumed folded).
fn fold_node(e: Expr) -> Expr {
    match e {
        Expr::Binary(op, a, b) => {
            if let (Expr::Const(x), Expr::Const(y)) = (&*a, &*b) {
                if let Some(c) = finite(op.apply(*x, *y)) {
                    return c;
                }
            }
            match op {
                BinaryOp::Mul if a.is_const(0.0) || b.is_const(0.0) => Expr::Const(0.0),
                BinaryOp::Mul if a.is_const(1.0) => *b,
                BinaryOp::Mul if b.is_const(1.0) => *a,
                BinaryOp::Add if a.is_const(0.0) => *b,
                BinaryOp::Add | BinaryOp::Sub if b.is_const(0.0) => *a,
                BinaryOp::Sub if a.is_const(0.0) => fold_node(Expr::neg(*b)),
                BinaryOp::Div if a.is_const(0.0) && !b.is_const(0.0) => Expr::Const(0.0),
                BinaryOp::Div if b.is_const(1.0) => *a,
                _ => Expr::Binary(op, a, b),
            }
        }
        Expr::Unary(UnaryOp::Neg, x) => match *x {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Unary(UnaryOp::Neg, y) => *y,
            other => Expr::neg(other),
        },
        Expr::Unary(op, x) => match *x {
            Expr::Const(c) => finite(op.apply(c)).unwrap_or_else(|| Expr::unary(op, Expr::Const(c))),
            other => Expr::unary(op, other),
        },
        Expr::Sum { body, .. } if body.is_const(0.0) => Expr::Const(0.0),
        Expr::Lift(x) => match *x {
            Expr::Const(c) => Expr::Const(c),
            other => Expr::lift(other),
        },
        Expr::Probe { field, pos } => match *field {
            Expr::Const(c) => Expr::Const(c),
            other => Expr::Probe { field: Box::new(other), pos },
        },
        Expr::Partial { body, .. } if matches!(*body, Expr::Const(_)) => Expr::Const(0.0),
        Expr::Delta(a, b) if a == b => Expr::Const(1.0),
        Expr::Delta(Index::Const(a), Index::Const(b)) => Expr::Const(if a == b { 1.0 } else { 0.0 }),
        Expr::Epsilon2(a, b) => {
            let ix = [a, b];
            if has_repeat(&ix) {
                Expr::Const(0.0)
            } else if let Some(c) = all_const(&ix) {
                Expr::Const(perm_sign(&c))
            } else {
                Expr::Epsilon2(a, b)
            }
        }
        Expr::Epsilon3(a, b, c) => {
            let ix = [a, b, c];
            if has_repeat(&ix) {
                Expr::Const(0.0)
            } else if let Some(cs) = all_const(&ix) {
                Expr::Const(perm_sign(&cs))
            } else {
                Expr::Epsilon3(a, b, c)
            }
        }
        other => other,
    }
}

/// Bottom-up constant folding: arithmetic on literals, the zero/one laws,
/// constant δ/ε, and probes/derivatives/lifts of constants.
pub fn fold(e: &Expr) -> Expr {
    fold_node(e.map_children(fold))
}

/// Flattens a left/right nested product into its factors.
pub fn factors(e: &Expr) -> Vec<Expr> {
    match e {
        Expr::Binary(BinaryOp::Mul, a, b) => {
            let mut f = factors(a);
            f.extend(factors(b));
            f
        }
        other => vec![other.clone()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::IndexVar;

    #[test]
    fn folding_laws() {
        let t = Expr::tensor(0, vec![Index::Var(IndexVar(0))]);
        assert_eq!(fold(&Expr::mul(Expr::Const(1.0), t.clone())), t);
        assert_eq!(fold(&Expr::mul(t.clone(), Expr::add(Expr::Const(0.0), Expr::Const(0.0)))), Expr::Const(0.0));
        assert_eq!(fold(&Expr::sub(Expr::Const(0.0), t.clone())), Expr::neg(t.clone()));
        assert_eq!(fold(&Expr::Epsilon3(Index::Const(1), Index::Const(0), Index::Const(2))), Expr::Const(-1.0));
        assert_eq!(fold(&Expr::lift(Expr::Const(2.0))), Expr::Const(2.0));
        assert_eq!(fold(&Expr::div(t.clone(), Expr::Const(0.0))), Expr::div(t, Expr::Const(0.0)));
    }
}
