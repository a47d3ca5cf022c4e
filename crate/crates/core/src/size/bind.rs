use crate::ir::{EinOp, Expr};
use crate::transform::rewrite::factors;

/// `Σ_v (a · b)` with `a` free of `v` becomes `a · Σ_v b`. Applied bottom-up,
/// nested sums over index-disjoint factors become products of sums.
fn bind(e: &Expr) -> Expr {
    let e = e.map_children(bind);
    let Expr::Sum { var, bound, body } = &e else { return e };
    let fs = factors(body);
    if fs.len() < 2 {
        return e;
    }
    let (dep, indep): (Vec<Expr>, Vec<Expr>) = fs.into_iter().partition(|f| f.mentions_var(*var));
    if indep.is_empty() || dep.is_empty() {
        return e;
    }
    let inner = bind(&Expr::sum(*var, *bound, Expr::product(dep)));
    Expr::product(indep.into_iter().chain(std::iter::once(inner)).collect())
}

pub fn summation_bind(op: &EinOp) -> EinOp {
    EinOp::new(op.params.clone(), bind(&op.body), op.index_map.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Index, IndexVar, ParamKind};

    fn t(p: usize, v: u32) -> Expr {
        Expr::tensor(p, vec![Index::Var(IndexVar(v))])
    }

    #[test]
    fn hoists_invariant_factor() {
        // Σ_j T_i e_j  →  T_i Σ_j e_j
        let body = Expr::sum(IndexVar(1), 3, Expr::mul(t(0, 0), t(1, 1)));
        let op = EinOp::new(vec![ParamKind::Tensor(vec![3]); 2], body, vec![(IndexVar(0), 3)]);
        let out = summation_bind(&op);
        assert_eq!(out.body, Expr::mul(t(0, 0), Expr::sum(IndexVar(1), 3, t(1, 1))));
    }

    #[test]
    fn factors_independent_sums() {
        // Σ_j Σ_k a_j c_j b_k d_k → (Σ_j a_j c_j)(Σ_k b_k d_k)
        let (j, k) = (0, 1);
        let body = Expr::sum(
            IndexVar(j),
            3,
            Expr::sum(IndexVar(k), 3, Expr::product(vec![t(0, j), t(1, j), t(2, k), t(3, k)])),
        );
        let op = EinOp::new(vec![ParamKind::Tensor(vec![3]); 4], body, vec![]);
        let out = summation_bind(&op);
        let sk = Expr::sum(IndexVar(k), 3, Expr::mul(t(2, k), t(3, k)));
        let sj = Expr::sum(IndexVar(j), 3, Expr::mul(t(0, j), t(1, j)));
        assert_eq!(out.body, Expr::mul(sk, sj));
    }

    #[test]
    fn dependent_factors_unchanged() {
        let body = Expr::sum(IndexVar(0), 3, Expr::mul(t(0, 0), t(1, 0)));
        let op = EinOp::new(vec![ParamKind::Tensor(vec![3]); 2], body.clone(), vec![]);
        assert_eq!(summation_bind(&op).body, body);
    }
}
