//! Probes of convolutions become explicit stencil sums over voxels and
//! kernel weights, with the world-derivative Jacobian applied.

use std::collections::HashMap;

use crate::ir::{Assign, EinApp, EinOp, Expr, Index, IndexVar, ParamKind, Prim, Program, Rhs, Ty, Var, VarGen};

use super::LowerError;

/// Per (image, position) reconstruction inputs: floor, fraction and, per
/// derivative order, the Jacobian factor tensor.
struct Recon {
    n: Var,
    f: Var,
    jac: HashMap<usize, Var>,
}

struct Builder<'a> {
    prog: &'a mut Program,
    pending: Vec<Assign>,
    recon: HashMap<(Var, Var), Recon>,
}

impl Builder<'_> {
    fn push(&mut self, ty: Ty, rhs: Rhs) -> Var {
        let v = self.prog.fresh_var();
        self.pending.push(Assign { lhs: v, ty, rhs, name: None });
        v
    }

    fn recon(&mut self, img: Var, pos: Var, dim: usize, order: usize) -> (Var, Var, Option<Var>) {
        if !self.recon.contains_key(&(img, pos)) {
            let x = self.push(Ty::Tensor(vec![dim]), Rhs::Prim(Prim::WorldToImage { image: img, pos }));
            let n = self.push(Ty::Tensor(vec![dim]), Rhs::Prim(Prim::Floor(x)));
            let i = IndexVar(0);
            let frac = EinOp::new(
                vec![ParamKind::Tensor(vec![dim]); 2],
                Expr::sub(Expr::tensor(0, vec![Index::Var(i)]), Expr::tensor(1, vec![Index::Var(i)])),
                vec![(i, dim)],
            );
            let f = self.push(Ty::Tensor(vec![dim]), Rhs::Ein(EinApp { op: frac, args: vec![x, n] }));
            self.recon.insert((img, pos), Recon { n, f, jac: HashMap::new() });
        }
        if order > 0 && !self.recon[&(img, pos)].jac.contains_key(&order) {
            let a = match self.recon[&(img, pos)].jac.get(&1) {
                Some(&a) => a,
                None => {
                    let a = self.push(Ty::Tensor(vec![dim, dim]), Rhs::Prim(Prim::TransformMatrix { image: img }));
                    self.recon.get_mut(&(img, pos)).unwrap().jac.insert(1, a);
                    a
                }
            };
            if order > 1 {
                let op = jacobian_product(dim, order);
                let j = self.push(Ty::Tensor(op.shape()), Rhs::Ein(EinApp { op, args: vec![a] }));
                self.recon.get_mut(&(img, pos)).unwrap().jac.insert(order, j);
            }
        }
        let r = &self.recon[&(img, pos)];
        (r.n, r.f, r.jac.get(&order).copied())
    }
}

/// `λ(A)⟨Π_m A_{j_m β_m}⟩_{j_1…j_r β_1…β_r}`: the chain-rule factor of an order-`r` derivative.
fn jacobian_product(dim: usize, order: usize) -> EinOp {
    let js: Vec<IndexVar> = (0..order as u32).map(IndexVar).collect();
    let bs: Vec<IndexVar> = (order as u32..2 * order as u32).map(IndexVar).collect();
    let body = Expr::product(
        js.iter().zip(&bs).map(|(&j, &b)| Expr::tensor(0, vec![Index::Var(j), Index::Var(b)])).collect(),
    );
    let map = js.iter().chain(&bs).map(|&v| (v, dim)).collect();
    EinOp::new(vec![ParamKind::Tensor(vec![dim, dim])], body, map)
}

fn first_probe(e: &Expr) -> Option<&Expr> {
    match e {
        Expr::Probe { .. } => Some(e),
        other => other.children().into_iter().find_map(first_probe),
    }
}

fn replace(e: &Expr, target: &Expr, with: &Expr) -> Expr {
    if e == target {
        with.clone()
    } else {
        e.map_children(|c| replace(c, target, with))
    }
}

/// `Σ_{j…} J_{j… β…} Σ_{o…} Π_a h^(c_a)(f_a − (o_a + 1 − s)) V[n + o + 1 − s, comps]`
/// where `J` is `A` for first derivatives and the product of `A` factors above.
#[allow(clippy::too_many_arguments)]
pub fn recon_expr(
    image: usize,
    kernel: usize,
    comps: &[Index],
    derivs: &[Index],
    dim: usize,
    support: usize,
    params: (usize, usize, Option<usize>),
    gen: &mut VarGen,
) -> Expr {
    let (pn, pf, pa) = params;
    let shift = 1 - support as i64;
    let js: Vec<IndexVar> = derivs.iter().map(|_| gen.fresh()).collect();
    let os: Vec<IndexVar> = (0..dim).map(|_| gen.fresh()).collect();
    let jix: Vec<Index> = js.iter().map(|&j| Index::Var(j)).collect();
    let mut factors: Vec<Expr> = (0..dim)
        .map(|a| Expr::KernelWeight {
            kernel,
            frac: pf,
            axis: a,
            derivs: jix.clone(),
            offset: Index::Var(os[a]),
            shift,
        })
        .collect();
    factors.push(Expr::Voxel {
        image,
        base: pn,
        offsets: os.iter().map(|&o| Index::Var(o)).collect(),
        comps: comps.to_vec(),
        shift,
    });
    let stencil = Expr::sums(&os.iter().map(|&o| (o, 2 * support)).collect::<Vec<_>>(), Expr::product(factors));
    if derivs.is_empty() {
        return stencil;
    }
    let pa = pa.expect("Jacobian parameter for derivatives");
    let jac = Expr::tensor(pa, jix.iter().chain(derivs).copied().collect());
    Expr::sums(&js.iter().map(|&j| (j, dim)).collect::<Vec<_>>(), Expr::mul(jac, stencil))
}

/// Expands every probe of the program into MidIR reconstruction arithmetic.
pub fn lower_high_to_mid(prog: &mut Program) -> Result<(), LowerError> {
    let stmts = std::mem::take(&mut prog.stmts);
    let mut b = Builder { prog, pending: Vec::new(), recon: HashMap::new() };
    let mut out = Vec::with_capacity(stmts.len());
    for mut s in stmts {
        if let Rhs::Ein(app) = &mut s.rhs {
            while let Some(probe) = first_probe(&app.op.body).cloned() {
                let Expr::Probe { field, pos } = &probe else { unreachable!() };
                let Expr::Conv { image, comps, kernel, derivs } = &**field else {
                    return Err(LowerError::NotNormal(s.lhs.to_string()));
                };
                let ParamKind::Image { dim, .. } = app.op.params[*image] else {
                    return Err(LowerError::NotNormal(s.lhs.to_string()));
                };
                let ParamKind::Kernel(kind) = app.op.params[*kernel] else {
                    return Err(LowerError::NotNormal(s.lhs.to_string()));
                };
                if derivs.len() as u32 > kind.continuity() {
                    return Err(LowerError::ContinuityExceeded { kernel: kind, order: derivs.len() as u32 });
                }
                let (n, f, a) = b.recon(app.args[*image], app.args[*pos], dim, derivs.len());
                let base = app.op.params.len();
                app.op.params.push(ParamKind::Tensor(vec![dim]));
                app.op.params.push(ParamKind::Tensor(vec![dim]));
                app.args.push(n);
                app.args.push(f);
                let pa = a.map(|a| {
                    app.op.params.push(ParamKind::Tensor(vec![dim; 2 * derivs.len()]));
                    app.args.push(a);
                    base + 2
                });
                let mut gen = app.op.var_gen();
                let e = recon_expr(*image, *kernel, comps, derivs, dim, kind.support(), (base, base + 1, pa), &mut gen);
                app.op.body = replace(&app.op.body, &probe, &e);
            }
            let kept = app.op.prune_params();
            app.args = kept.iter().map(|&k| app.args[k]).collect();
            crate::transform::dedupe_params(app);
        }
        out.append(&mut b.pending);
        out.push(s);
    }
    b.prog.stmts = out;
    Ok(())
}
