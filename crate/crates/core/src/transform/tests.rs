use super::*;
use crate::frontend::compile_source;
use crate::ir::{EinApp, Expr, ParamKind, Var};
use crate::testutil::assert_same;
use crate::translate::{instantiate, translate_program, Generic};

fn program(src: &str) -> Program {
    translate_program(&compile_source(src).unwrap()).unwrap()
}

fn transformed(src: &str) -> (Program, Program) {
    let before = program(src);
    let mut after = before.clone();
    transform_high(&mut after, None).unwrap_or_else(|e| panic!("{e}\n{}", before.sexpr()));
    (before, after)
}

const GRID3: &str = "over grid([0,0,0],[1,1,1],[2,2,2])";

fn scalar_src(ty: &str, expr: &str) -> String {
    format!(
        "input image(3)[] a; input image(3)[] b; field#2(3)[] F = a ⊛ bspln3; field#2(3)[] G = b ⊛ bspln3; \
         output tensor{ty} out = {expr} {GRID3};"
    )
}

#[test]
fn semantics_preserved_on_scalar_expressions() {
    let cases = [
        ("[]", "F(pos)"),
        ("[]", "|∇F(pos)|"),
        ("[]", "exp(F)(pos)"),
        ("[3]", "(∇(F*G))(pos)"),
        ("[3]", "(∇(F/(G*G+2.0)))(pos)"),
        ("[3]", "(∇sqrt(F*F+1.0))(pos)"),
        ("[3]", "(∇atan(F))(pos)"),
        ("[3]", "(∇sin(F) + ∇cos(G))(pos)"),
        ("[3]", "(∇tan(F*0.25))(pos)"),
        ("[3]", "(∇asin(F*0.3) - ∇acos(G*0.3))(pos)"),
        ("[3]", "(∇pow(F,3))(pos)"),
        ("[]", "trace(∇⊗∇F)(pos)"),
        ("[]", "(∇F • ∇G)(pos)"),
        ("[3]", "(∇F × ∇G)(pos)"),
        ("[]", "((∇F × ∇G) • (∇F × ∇G))(pos)"),
        ("[]", "(-∇(|∇F|) • ∇F/|∇F|)(pos)"),
    ];
    for (n, (ty, c)) in cases.iter().enumerate() {
        let (a, b) = transformed(&scalar_src(ty, c));
        for s in &b.stmts {
            if let Rhs::Ein(app) = &s.rhs {
                assert!(is_normal(&app.op.body), "{c}: {}", b.sexpr());
            }
        }
        assert_same(&a, &b, 100 + n as u64, 5, 1e-10);
    }
}

#[test]
fn vector_field_programs() {
    let src = format!(
        "input image(3)[3] v; field#2(3)[3] V = v ⊛ bspln3; \
         output tensor[] h = (V • (∇×V))(pos) {GRID3}; output tensor[3,3] j = (∇⊗V)(pos) {GRID3};"
    );
    let (a, b) = transformed(&src);
    assert_same(&a, &b, 7, 5, 1e-10);
}

fn single_op(p: &Program) -> &crate::ir::EinOp {
    let eins: Vec<_> = p
        .stmts
        .iter()
        .filter_map(|s| match &s.rhs {
            Rhs::Ein(app) => Some(&app.op),
            _ => None,
        })
        .collect();
    assert_eq!(eins.len(), 1, "{}", p.sexpr());
    eins[0]
}

#[test]
fn curl_of_gradient_is_zero() {
    let src = format!("input image(3)[] a; field#2(3)[] F = a ⊛ bspln3; output tensor[3] z = (∇×(∇F))(pos) {GRID3};");
    let (_, b) = transformed(&src);
    assert_eq!(single_op(&b).body, Expr::Const(0.0));
}

#[test]
fn divergence_of_curl_is_zero() {
    let src = format!("input image(3)[3] v; field#2(3)[3] V = v ⊛ bspln3; output tensor[] z = (∇•(∇×V))(pos) {GRID3};");
    let (_, b) = transformed(&src);
    assert_eq!(single_op(&b).body, Expr::Const(0.0));
}

#[test]
fn gradient_dot_itself_fuses() {
    let src = format!(
        "input image(3)[] a; field#2(3)[] F = a ⊛ bspln3; field#1(3)[3] t1 = ∇F; field#1(3)[] t2 = t1 • t1; \
         output tensor[] o = t2(pos) {GRID3};"
    );
    let before = program(&src);
    let mut fused = before.clone();
    fuse(&mut fused).unwrap();
    assert_eq!(fused.ein_count(), 1);
    assert_same(&before, &fused, 3, 5, 1e-12);
}

#[test]
fn tensor_only_producers_stay_separate() {
    let src = "input tensor[3] u; input tensor[3] v; tensor[3,3] t = u ⊗ v; output tensor[] o = trace(t);";
    let mut p = program(src);
    let n = p.ein_count();
    fuse(&mut p).unwrap();
    assert_eq!(p.ein_count(), n);
}

fn cross_dot_cross() -> EinApp {
    let t3 = ParamKind::Tensor(vec![3]);
    let cross = instantiate(Generic::Cross, &[t3.clone(), t3.clone()], &[]).unwrap();
    let dot = instantiate(Generic::Dot, &[t3.clone(), t3.clone()], &[]).unwrap();
    let d = EinApp { op: dot, args: vec![Var(4), Var(5)] };
    let ab = EinApp { op: cross.clone(), args: vec![Var(0), Var(1)] };
    let cd = EinApp { op: cross, args: vec![Var(2), Var(3)] };
    let d = fuse_ops(&d, 0, &ab).unwrap();
    let p = d.args.iter().position(|&a| a == Var(5)).unwrap();
    fuse_ops(&d, p, &cd).unwrap()
}

#[test]
fn cross_dot_cross_loses_epsilons() {
    let app = cross_dot_cross();
    let red = reduce_indices(&app.op, None).unwrap();
    assert!(!red.body.any(&|e| matches!(e, Expr::Epsilon3(..))), "{}", crate::ir::sexpr(&red));
    assert!(!red.body.any(&|e| matches!(e, Expr::Delta(..))), "{}", crate::ir::sexpr(&red));
}

#[test]
fn tracer_sees_every_rule() {
    let src = format!("input image(3)[] a; field#2(3)[] F = a ⊛ bspln3; output tensor[] o = exp(F)(pos) {GRID3};");
    let mut p = program(&src);
    let mut names = Vec::new();
    let mut t = |rule: &str, _: &Expr, _: &Expr| names.push(rule.to_string());
    transform_high(&mut p, Some(&mut t)).unwrap();
    assert!(names.contains(&"probe-unary".to_string()), "{names:?}");
}

#[test]
fn derivative_rules_move_indices_into_kernels() {
    let src = format!("input image(3)[] a; field#2(3)[] F = a ⊛ bspln3; output tensor[3,3] o = (∇⊗∇F)(pos) {GRID3};");
    let (_, b) = transformed(&src);
    let op = single_op(&b);
    let mut derivs = None;
    op.body.visit(&mut |e| {
        if let Expr::Conv { derivs: d, .. } = e {
            derivs = Some(d.len());
        }
    });
    assert_eq!(derivs, Some(2));
}

