use crate::ir::{Assign, EinApp, EinOp, Expr, Index, IndexVar, ParamKind, Program, Rhs, Ty, Var};

fn has_const(ixs: &[Index]) -> bool {
    ixs.iter().any(|i| matches!(i, Index::Const(_)))
}

/// First probe in `e` with a constant component or derivative index.
fn sliceable(e: &Expr) -> Option<&Expr> {
    match e {
        Expr::Probe { field, .. } => match &**field {
            Expr::Conv { comps, derivs, .. } if has_const(comps) || has_const(derivs) => Some(e),
            _ => None,
        },
        other => other.children().into_iter().find_map(sliceable),
    }
}

fn replace(e: &Expr, target: &Expr, with: &Expr) -> Expr {
    if e == target {
        with.clone()
    } else {
        e.map_children(|c| replace(c, target, with))
    }
}

/// Replaces every probe carrying a constant component or derivative index by
/// a slice of the unsliced probe, computed in its own assignment.
pub fn slice(prog: &mut Program) {
    let mut out: Vec<Assign> = Vec::with_capacity(prog.stmts.len());
    let stmts = std::mem::take(&mut prog.stmts);
    for mut s in stmts {
        if let Rhs::Ein(app) = &mut s.rhs {
            while let Some(probe) = sliceable(&app.op.body).cloned() {
                let Expr::Probe { field, pos } = &probe else { unreachable!() };
                let Expr::Conv { image, comps, kernel, derivs } = &**field else { unreachable!() };
                let ParamKind::Image { dim, shape } = app.op.params[*image].clone() else { break };
                let mut vars = (0u32..).map(IndexVar);
                let gamma: Vec<(IndexVar, usize)> = shape.iter().map(|&b| (vars.next().unwrap(), b)).collect();
                let delta: Vec<(IndexVar, usize)> = derivs.iter().map(|_| (vars.next().unwrap(), dim)).collect();
                let ix = |v: &[(IndexVar, usize)]| v.iter().map(|&(x, _)| Index::Var(x)).collect::<Vec<_>>();
                let body = Expr::probe(
                    Expr::Conv { image: 0, comps: ix(&gamma), kernel: 1, derivs: ix(&delta) },
                    2,
                );
                let params = vec![app.op.params[*image].clone(), app.op.params[*kernel].clone(), app.op.params[*pos].clone()];
                let full_shape: Vec<usize> = gamma.iter().chain(&delta).map(|&(_, b)| b).collect();
                let op = EinOp::new(params, body, gamma.iter().chain(&delta).copied().collect());
                let t = Var(prog.next_var);
                prog.next_var += 1;
                out.push(Assign {
                    lhs: t,
                    ty: Ty::Tensor(full_shape.clone()),
                    rhs: Rhs::Ein(EinApp { op, args: vec![app.args[*image], app.args[*kernel], app.args[*pos]] }),
                    name: None,
                });
                let p = app.op.params.len();
                app.op.params.push(ParamKind::Tensor(full_shape));
                app.args.push(t);
                let leaf = Expr::tensor(p, comps.iter().chain(derivs).copied().collect());
                app.op.body = replace(&app.op.body, &probe, &leaf);
            }
            let kept = app.op.prune_params();
            app.args = kept.iter().map(|&k| app.args[k]).collect();
        }
        out.push(s);
    }
    prog.stmts = out;
}
