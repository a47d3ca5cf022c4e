use std::collections::HashMap;

use super::check::IrError;
use super::expr::{freshen_binders, Expr, Index, IndexVar, ParamId, VarGen};

/// The body of an operator being inlined at the occurrences of one parameter.
pub struct Replacement<'a> {
    pub body: &'a Expr,
    /// Positional free variables of `body` (the replacement's index map).
    pub vars: &'a [IndexVar],
    /// Where the replacement's parameters live in the host.
    pub param_map: &'a dyn Fn(ParamId) -> ParamId,
}

/// Capture-avoiding substitution of `repl` for every `T_α` / `F_α` occurrence of
/// `param` in `host`. The replacement's summation binders are renamed fresh
/// and its free variables are renamed positionally to `α`.
pub fn substitute(host: &Expr, param: ParamId, repl: &Replacement<'_>, gen: &mut VarGen) -> Result<Expr, IrError> {
    match host {
        Expr::Tensor { param: p, indices } | Expr::Field { param: p, indices } if *p == param => {
            if indices.len() != repl.vars.len() {
                return Err(IrError::ArityMismatch { param, expected: repl.vars.len(), found: indices.len() });
            }
            let body = freshen_binders(&repl.body.remap_params(repl.param_map), gen);
            let map: HashMap<IndexVar, Index> = repl.vars.iter().copied().zip(indices.iter().copied()).collect();
            Ok(body.map_indices(&|ix| match ix {
                Index::Var(v) => map.get(&v).copied().unwrap_or(ix),
                c => c,
            }))
        }
        other => {
            let mut err = None;
            let out = other.map_children(|c| match substitute(c, param, repl, gen) {
                Ok(e) => e,
                Err(e) => {
                    err.get_or_insert(e);
                    c.clone()
                }
            });
            err.map_or(Ok(out), Err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::BinaryOp;

    fn var(n: u32) -> Index {
        Index::Var(IndexVar(n))
    }

    #[test]
    fn positional_renaming() {
        // host: U_i * V_i ; V := A_j + B_j over j
        let host = Expr::mul(Expr::tensor(0, vec![var(0)]), Expr::tensor(1, vec![var(0)]));
        let repl_body = Expr::add(Expr::tensor(0, vec![var(5)]), Expr::tensor(1, vec![var(5)]));
        let map = |p: ParamId| p + 2;
        let r = Replacement { body: &repl_body, vars: &[IndexVar(5)], param_map: &map };
        let mut gen = VarGen::starting_at(10);
        let out = substitute(&host, 1, &r, &mut gen).unwrap();
        let expected = Expr::mul(
            Expr::tensor(0, vec![var(0)]),
            Expr::binary(BinaryOp::Add, Expr::tensor(2, vec![var(0)]), Expr::tensor(3, vec![var(0)])),
        );
        assert_eq!(out, expected);
    }

    #[test]
    fn constant_indices_and_swaps() {
        // host T_{0,i}; T := A_j * B_k over (j,k)
        let host = Expr::tensor(0, vec![Index::Const(0), var(0)]);
        let repl_body = Expr::mul(Expr::tensor(0, vec![var(1)]), Expr::tensor(1, vec![var(2)]));
        let map = |p: ParamId| p + 1;
        let r = Replacement { body: &repl_body, vars: &[IndexVar(1), IndexVar(2)], param_map: &map };
        let out = substitute(&host, 0, &r, &mut VarGen::starting_at(3)).unwrap();
        assert_eq!(out, Expr::mul(Expr::tensor(1, vec![Index::Const(0)]), Expr::tensor(2, vec![var(0)])));

        // simultaneous renaming: T_{j,i} with T := X_{a} Y_{b} over (a,b) = (i,j)
        let host = Expr::tensor(0, vec![var(1), var(0)]);
        let repl_body = Expr::mul(Expr::tensor(0, vec![var(0)]), Expr::tensor(1, vec![var(1)]));
        let id = |p: ParamId| p + 1;
        let r = Replacement { body: &repl_body, vars: &[IndexVar(0), IndexVar(1)], param_map: &id };
        let out = substitute(&host, 0, &r, &mut VarGen::starting_at(2)).unwrap();
        assert_eq!(out, Expr::mul(Expr::tensor(1, vec![var(1)]), Expr::tensor(2, vec![var(0)])));
    }

    #[test]
    fn inner_binders_are_freshened() {
        let i = IndexVar(0);
        let host = Expr::sum(i, 3, Expr::tensor(0, vec![Index::Var(i)]));
        // T := Σ_i C_i D_i  (scalar) -- arity 0 would mismatch; use T_i := Σ_i' C_i' D_i'
        let inner = Expr::sum(i, 3, Expr::mul(Expr::tensor(0, vec![Index::Var(i)]), Expr::tensor(1, vec![Index::Var(i)])));
        let map = |p: ParamId| p + 1;
        let r = Replacement { body: &inner, vars: &[IndexVar(9)], param_map: &map };
        let mut gen = VarGen::starting_at(10);
        let out = substitute(&host, 0, &r, &mut gen).unwrap();
        let Expr::Sum { var: outer, body, .. } = &out else { panic!() };
        let Expr::Sum { var: fresh, body: inner_body, .. } = body.as_ref() else { panic!() };
        assert_eq!(*outer, i);
        assert_ne!(*fresh, i);
        assert_eq!(
            inner_body.as_ref(),
            &Expr::mul(Expr::tensor(1, vec![Index::Var(*fresh)]), Expr::tensor(2, vec![Index::Var(*fresh)]))
        );
    }

    #[test]
    fn arity_mismatch() {
        let host = Expr::tensor(0, vec![var(0)]);
        let body = Expr::Const(1.0);
        let map = |p: ParamId| p;
        let r = Replacement { body: &body, vars: &[], param_map: &map };
        assert!(matches!(
            substitute(&host, 0, &r, &mut VarGen::starting_at(1)),
            Err(IrError::ArityMismatch { expected: 0, found: 1, .. })
        ));
    }
}
