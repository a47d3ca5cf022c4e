use std::collections::BTreeSet;

use crate::ir::{shape_of, Assign, EinApp, EinOp, Expr, Index, IndexVar, ParamId, ParamKind, Program, Rhs, Ty, Var};

struct Candidate {
    expr: Expr,
    shape: Vec<(IndexVar, usize)>,
}

/// Largest proper subterm that does not depend on at least one index in scope.
fn best_candidate(op: &EinOp) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    let mut ctx: Vec<(IndexVar, usize)> = op.index_map.clone();
    walk(&op.body, &mut ctx, true, &mut best);
    best
}

fn walk(e: &Expr, ctx: &mut Vec<(IndexVar, usize)>, root: bool, best: &mut Option<Candidate>) {
    if !root && !e.children().is_empty() {
        let shape = shape_of(e, ctx);
        let closed = shape.len() < ctx.len();
        let bigger = best.as_ref().is_none_or(|b| e.node_count() > b.expr.node_count());
        if closed && bigger {
            *best = Some(Candidate { expr: e.clone(), shape });
        }
    }
    match e {
        Expr::Probe { .. } => {}
        Expr::Sum { var, bound, body } => {
            ctx.push((*var, *bound));
            walk(body, ctx, false, best);
            ctx.pop();
        }
        other => {
            for c in other.children() {
                walk(c, ctx, false, best);
            }
        }
    }
}

/// Replaces every occurrence of `target` whose free indices have the same bounds.
fn replace(e: &Expr, target: &Expr, shape: &[(IndexVar, usize)], leaf: &Expr, ctx: &mut Vec<(IndexVar, usize)>) -> Expr {
    if e == target {
        let here = shape_of(e, ctx);
        if here.len() == shape.len() && here.iter().all(|x| shape.contains(x)) {
            return leaf.clone();
        }
    }
    match e {
        Expr::Probe { .. } => e.clone(),
        Expr::Sum { var, bound, body } => {
            ctx.push((*var, *bound));
            let b = replace(body, target, shape, leaf, ctx);
            ctx.pop();
            Expr::sum(*var, *bound, b)
        }
        other => other.map_children(|c| replace(c, target, shape, leaf, ctx)),
    }
}

/// One Split step on `app`: returns the extracted operator (whose result is
/// bound to `fresh`) and the rewritten host, or `None` if nothing is splittable.
pub fn split_op(app: &EinApp, fresh: Var) -> Option<(EinApp, EinApp)> {
    let cand = best_candidate(&app.op)?;
    let used: BTreeSet<ParamId> = cand.expr.params();
    let order: Vec<ParamId> = used.into_iter().collect();
    let remap = |p: ParamId| order.iter().position(|&q| q == p).unwrap();
    let body = cand.expr.remap_params(&remap);
    let params: Vec<ParamKind> = order.iter().map(|&p| app.op.params[p].clone()).collect();
    let args: Vec<Var> = order.iter().map(|&p| app.args[p]).collect();
    let extracted = EinApp { op: EinOp::new(params, body, cand.shape.clone()), args };

    let t = app.op.params.len();
    let leaf = Expr::tensor(t, cand.shape.iter().map(|&(v, _)| Index::Var(v)).collect());
    let mut ctx = app.op.index_map.clone();
    let body = replace(&app.op.body, &cand.expr, &cand.shape, &leaf, &mut ctx);
    let mut params = app.op.params.clone();
    params.push(ParamKind::Tensor(cand.shape.iter().map(|&(_, b)| b).collect()));
    let mut host = EinApp { op: EinOp::new(params, body, app.op.index_map.clone()), args: app.args.clone() };
    host.args.push(fresh);
    let kept = host.op.prune_params();
    host.args = kept.iter().map(|&k| host.args[k]).collect();
    Some((extracted, host))
}

/// Splits operators larger than `budget` until all fit or nothing is splittable.
/// Returns the number of extractions.
pub fn split(prog: &mut Program, budget: usize) -> usize {
    let mut count = 0;
    let mut i = 0;
    while i < prog.stmts.len() {
        let step = match &prog.stmts[i].rhs {
            Rhs::Ein(app) if app.op.node_count() > budget => split_op(app, Var(prog.next_var)),
            _ => None,
        };
        match step {
            Some((extracted, host)) => {
                let v = prog.fresh_var();
                let shape = extracted.op.shape();
                prog.stmts[i].rhs = Rhs::Ein(host);
                prog.stmts.insert(i, Assign { lhs: v, ty: Ty::Tensor(shape), rhs: Rhs::Ein(extracted), name: None });
                count += 1;
            }
            None => i += 1,
        }
    }
    count
}
