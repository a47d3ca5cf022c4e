use std::collections::HashMap;

use crate::ir::{sexpr, EinOp, Expr, Index, IndexVar, Program, Rhs};
use crate::transform::dedupe_params;

/// Renames index variables to `0, 1, 2, ...` in order of first appearance
/// (index map first, then a pre-order walk of the body).
pub fn canonical_op(op: &EinOp) -> EinOp {
    let mut names: HashMap<IndexVar, IndexVar> = HashMap::new();
    let mut note = |v: IndexVar, names: &mut HashMap<IndexVar, IndexVar>| {
        let n = IndexVar(names.len() as u32);
        *names.entry(v).or_insert(n)
    };
    let index_map: Vec<(IndexVar, usize)> = op.index_map.iter().map(|&(v, b)| (note(v, &mut names), b)).collect();
    fn walk(e: &Expr, names: &mut HashMap<IndexVar, IndexVar>, note: &mut impl FnMut(IndexVar, &mut HashMap<IndexVar, IndexVar>) -> IndexVar) {
        if let Expr::Sum { var, .. } = e {
            note(*var, names);
        }
        for i in e.own_indices() {
            if let Index::Var(v) = i {
                note(v, names);
            }
        }
        for c in e.children() {
            walk(c, names, note);
        }
    }
    walk(&op.body, &mut names, &mut note);
    let body = rename(&op.body, &names);
    EinOp::new(op.params.clone(), body, index_map)
}

fn rename(e: &Expr, names: &HashMap<IndexVar, IndexVar>) -> Expr {
    let f = |i: Index| match i {
        Index::Var(v) => Index::Var(names[&v]),
        c => c,
    };
    match e {
        Expr::Sum { var, bound, body } => Expr::sum(names[var], *bound, rename(body, names)),
        Expr::Partial { axis, body } => Expr::partial(f(*axis), rename(body, names)),
        other if other.children().is_empty() => other.map_indices(&f),
        other => other.map_children(|c| rename(c, names)),
    }
}

/// Merges assignments with structurally identical right-hand sides (after
/// canonical index renaming), redirects uses and drops dead code.
pub fn value_number(prog: &mut Program) {
    let mut seen: HashMap<String, crate::ir::Var> = HashMap::new();
    let mut i = 0;
    while i < prog.stmts.len() {
        if let Rhs::Ein(app) = &mut prog.stmts[i].rhs {
            dedupe_params(app);
        }
        let key = match &prog.stmts[i].rhs {
            Rhs::Ein(app) => {
                let args: Vec<String> = app.args.iter().map(|a| a.to_string()).collect();
                format!("{} {}", sexpr(&canonical_op(&app.op)), args.join(" "))
            }
            Rhs::Prim(p) => p.sexpr(),
        };
        let key = format!("{:?} {key}", prog.stmts[i].ty);
        let lhs = prog.stmts[i].lhs;
        match seen.get(&key) {
            Some(&prev) => {
                prog.stmts.remove(i);
                prog.replace_uses(lhs, prev);
            }
            None => {
                seen.insert(key, lhs);
                i += 1;
            }
        }
    }
    prog.remove_dead();
}
