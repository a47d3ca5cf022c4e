//! Inlining of EIN producers into their consumers.
//!
//! Field-valued producers and producers containing probes are always inlined
//! (except into probe-position slots, and never so that a probe ends up under
//! another probe). Tensor-only producers are inlined only into slots that sit
//! inside a lifted (field) context.

use std::collections::HashMap;

use crate::ir::{
    substitute, EinApp, EinOp, Expr, IndexVar, IrError, ParamId, Program, Replacement, Rhs, VarGen,
};

/// True when `p` is used as a probe position somewhere in `e`.
fn used_as_position(e: &Expr, p: ParamId) -> bool {
    e.any(&|n| matches!(n, Expr::Probe { pos, .. } if *pos == p))
}

/// True when a tensor/field leaf of `p` occurs under `wrapper`.
fn occurs_under(e: &Expr, p: ParamId, wrapper: &impl Fn(&Expr) -> bool, inside: bool) -> bool {
    match e {
        Expr::Tensor { param, .. } | Expr::Field { param, .. } => inside && *param == p,
        _ => {
            let inside = inside || wrapper(e);
            e.children().iter().any(|c| occurs_under(c, p, wrapper, inside))
        }
    }
}

fn under_probe(e: &Expr, p: ParamId) -> bool {
    occurs_under(e, p, &|n| matches!(n, Expr::Probe { .. }), false)
}

fn under_lift(e: &Expr, p: ParamId) -> bool {
    occurs_under(e, p, &|n| matches!(n, Expr::Lift(_)), false)
}

/// Whether producer `prod` may be inlined at parameter `p` of `cons`.
pub fn should_fuse(cons: &EinOp, p: ParamId, prod: &EinOp) -> bool {
    if used_as_position(&cons.body, p) {
        return false;
    }
    if prod.body.contains_probe() {
        return !under_probe(&cons.body, p) && !under_lift(&cons.body, p);
    }
    prod.is_field_valued() || under_lift(&cons.body, p)
}

/// Inlines `producer` at parameter `param` of `consumer`. The producer's
/// parameters are appended after the consumer's; unused parameters are pruned.
pub fn fuse_ops(consumer: &EinApp, param: ParamId, producer: &EinApp) -> Result<EinApp, IrError> {
    let base = consumer.op.params.len();
    let map = move |q: ParamId| q + base;
    let vars: Vec<IndexVar> = producer.op.index_map.iter().map(|&(v, _)| v).collect();
    let mut gen = consumer.op.var_gen();
    let pg = producer.op.var_gen();
    gen = VarGen::starting_at(next_of(&gen).max(next_of(&pg)));
    let repl = Replacement { body: &producer.op.body, vars: &vars, param_map: &map };
    let mut body = substitute(&consumer.op.body, param, &repl, &mut gen)?;
    // A tensor leaf replaced by a lifted body must stay lifted, so `Lift(Lift(x))` collapses.
    body = collapse_lifts(&body);
    let mut params = consumer.op.params.clone();
    params.extend(producer.op.params.iter().cloned());
    let mut args = consumer.args.clone();
    args.extend(producer.args.iter().copied());
    let mut op = EinOp::new(params, body, consumer.op.index_map.clone());
    let kept = op.prune_params();
    let args = kept.iter().map(|&k| args[k]).collect();
    let mut app = EinApp { op, args };
    dedupe_params(&mut app);
    Ok(app)
}

fn next_of(g: &VarGen) -> u32 {
    let mut g = g.clone();
    g.fresh().0
}

fn collapse_lifts(e: &Expr) -> Expr {
    match e {
        Expr::Lift(x) => match &**x {
            Expr::Lift(y) => collapse_lifts(&Expr::Lift(y.clone())),
            other if other.is_field_valued() => collapse_lifts(other),
            other => Expr::lift(collapse_lifts(other)),
        },
        other => other.map_children(collapse_lifts),
    }
}

/// Merges parameters bound to the same argument variable.
pub fn dedupe_params(app: &mut EinApp) {
    let mut first: HashMap<(crate::ir::Var, String), ParamId> = HashMap::new();
    let mut remap: Vec<ParamId> = (0..app.args.len()).collect();
    for (i, (&a, k)) in app.args.iter().zip(&app.op.params).enumerate() {
        let key = (a, k.to_string());
        match first.get(&key) {
            Some(&j) => remap[i] = j,
            None => {
                first.insert(key, i);
            }
        }
    }
    if remap.iter().enumerate().all(|(i, &j)| i == j) {
        return;
    }
    app.op.body = app.op.body.remap_params(&|p| remap[p]);
    let kept = app.op.prune_params();
    app.args = kept.iter().map(|&k| app.args[k]).collect();
}

/// Runs fusion over a whole program, in statement order, then drops dead code.
/// Returns the number of inlinings performed.
pub fn fuse(prog: &mut Program) -> Result<usize, IrError> {
    let mut count = 0;
    for i in 0..prog.stmts.len() {
        loop {
            let Rhs::Ein(cons) = &prog.stmts[i].rhs else { break };
            let defs = prog.def_index();
            let mut target = None;
            for (p, a) in cons.args.iter().enumerate() {
                let Some(&j) = defs.get(a) else { continue };
                if let Rhs::Ein(prod) = &prog.stmts[j].rhs {
                    if should_fuse(&cons.op, p, &prod.op) {
                        target = Some((p, prod.clone()));
                        break;
                    }
                }
            }
            let Some((p, prod)) = target else { break };
            let fused = fuse_ops(cons, p, &prod)?;
            prog.stmts[i].rhs = Rhs::Ein(fused);
            count += 1;
        }
    }
    prog.remove_dead();
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile_source;
    use crate::ir::pretty;
    use crate::ir::Style;
    use crate::translate::{instantiate, Generic};
    use crate::ir::{ParamKind, Var};

    #[test]
    fn trace_of_outer_is_dot() {
        let t3 = ParamKind::Tensor(vec![3]);
        let outer = instantiate(Generic::Outer, &[t3.clone(), t3.clone()], &[]).unwrap();
        let trace = instantiate(Generic::Trace, &[ParamKind::Tensor(vec![3, 3])], &[]).unwrap();
        let cons = EinApp { op: trace, args: vec![Var(2)] };
        let prod = EinApp { op: outer, args: vec![Var(0), Var(1)] };
        let f = fuse_ops(&cons, 0, &prod).unwrap();
        assert_eq!(f.args, vec![Var(0), Var(1)]);
        assert_eq!(pretty(&f.op, Style::Unicode), "λ(T0,T1)⟨Σ_{i≤3}(T0_{i}·T1_{i})⟩_{}");
    }

    #[test]
    fn same_argument_twice_is_deduped() {
        let t3 = ParamKind::Tensor(vec![3]);
        let dot = instantiate(Generic::Dot, &[t3.clone(), t3.clone()], &[]).unwrap();
        let mut app = EinApp { op: dot, args: vec![Var(4), Var(4)] };
        dedupe_params(&mut app);
        assert_eq!(app.args, vec![Var(4)]);
        assert_eq!(app.op.params.len(), 1);
    }

    #[test]
    fn fields_disappear_from_program() {
        let src = "input image(3)[] img; field#2(3)[] F = img ⊛ bspln3; \
                   field#1(3)[3] G = ∇F; output tensor[] out = |G(pos)| over grid([0,0,0],[1,1,1],[2,2,2]);";
        let mut prog = crate::translate::translate_program(&compile_source(src).unwrap()).unwrap();
        fuse(&mut prog).unwrap();
        prog.validate().unwrap();
        for s in &prog.stmts {
            assert!(!s.ty.is_field(), "{}", prog.sexpr());
        }
        assert_eq!(prog.ein_count(), 1);
    }
}
