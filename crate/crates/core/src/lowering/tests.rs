use std::sync::Arc;

use crate::eval::{eval_program, EvalOptions, InputValue};
use crate::exec::{run, RunOptions};
use crate::lowering::LowOp;
use crate::pipeline::{compile, Artifacts};
use crate::runtime::{oracle_probe, Border, Image, KernelKind};
use crate::size::PassConfig;
use crate::testutil::{inputs_for, rng, shared_point};

fn build(src: &str) -> Artifacts {
    compile(src, &PassConfig::default()).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

fn loads(a: &Artifacts) -> usize {
    a.low.count(|op| matches!(op, LowOp::Load { .. }))
}

#[test]
fn tent_1d_example() {
    let a = build("input image(1)[] v; field#0(1)[] F = v ⊛ tent; output tensor[] out = F(pos);");
    let img = Image::new(vec![4], vec![], vec![1.0, 2.0, 4.0, 8.0]).unwrap();
    let inputs = vec![InputValue::Image(Arc::new(img))];
    let out = run(&a.low, &inputs, &[vec![1.5], vec![2.0]], RunOptions::default()).unwrap();
    assert_eq!(out[0][0], vec![3.0]);
    assert_eq!(out[1][0], vec![4.0]);
    let mid = eval_program(&a.mid, &inputs, &[1.5], EvalOptions::default()).unwrap();
    assert_eq!(mid[0], vec![3.0]);
    assert_eq!(loads(&a), 2);
}

#[test]
fn ctmr_3d_probe_loads_64() {
    let a = build("input image(3)[] v; field#1(3)[] F = v ⊛ ctmr; output tensor[] out = F(pos);");
    assert_eq!(loads(&a), 64);
    assert_eq!(a.low.count(|op| matches!(op, LowOp::Kernel { .. })), 12);
}

#[test]
fn gradient_shares_loads_with_value() {
    let a = build(
        "input image(3)[] v; field#1(3)[] F = v ⊛ ctmr; output tensor[] f = F(pos); output tensor[3] g = ∇F(pos);",
    );
    assert_eq!(loads(&a), 64);
}

#[test]
fn dot_unrolls_to_three_products() {
    let a = build("input tensor[3] u; input tensor[3] v; output tensor[] d = u • v;");
    let mul = a.low.count(|op| matches!(op, LowOp::Binary(crate::ir::BinaryOp::Mul, ..)));
    let add = a.low.count(|op| matches!(op, LowOp::Binary(crate::ir::BinaryOp::Add, ..)));
    assert_eq!((mul, add), (3, 2));
    let out = run(&a.low, &[InputValue::Tensor(vec![1.0, 2.0, 3.0]), InputValue::Tensor(vec![4.0, 5.0, 6.0])], &[vec![0.0]], RunOptions::default());
    assert_eq!(out.unwrap()[0][0], vec![32.0]);
}

#[test]
fn transpose_is_pure_data_movement() {
    let a = build("input tensor[2,2] m; output tensor[2,2] t = transpose(m);");
    assert!(a.low.instrs.iter().all(|i| matches!(i.op, LowOp::Input { .. })));
    assert_eq!(a.low.node_count(), 4);
    let out = run(&a.low, &[InputValue::Tensor(vec![1.0, 2.0, 3.0, 4.0])], &[vec![0.0]], RunOptions::default()).unwrap();
    assert_eq!(out[0][0], vec![1.0, 3.0, 2.0, 4.0]);
}

#[test]
fn scalar_code_matches_reference_and_oracle() {
    for (n, kind) in KernelKind::ALL.into_iter().enumerate() {
        let d = 2 + n % 2;
        let deriv = if kind.continuity() >= 1 { "∇" } else { "" };
        let shape = if deriv.is_empty() { "[]".to_string() } else { format!("[{d}]") };
        let src = format!(
            "input image({d})[] v; field#{k}({d})[] F = v ⊛ {kind}; output tensor{shape} out = {deriv}F(pos);",
            k = kind.continuity()
        );
        let a = build(&src);
        let mut r = rng(40 + n as u64);
        let inputs = inputs_for(&a.high, &mut r);
        let InputValue::Image(img) = &inputs[0] else { unreachable!() };
        for _ in 0..10 {
            let p = shared_point(&inputs, d, &mut r);
            let high = eval_program(&a.high, &inputs, &p, EvalOptions::default()).unwrap();
            let mid = eval_program(&a.mid_opt, &inputs, &p, EvalOptions::default()).unwrap();
            let low = run(&a.low, &inputs, &[p.clone()], RunOptions::default()).unwrap();
            let oracle = if deriv.is_empty() {
                oracle_probe(img, &kind.kernel(), &[], &p, Border::Error).unwrap()
            } else {
                (0..d).map(|j| oracle_probe(img, &kind.kernel(), &[j], &p, Border::Error).unwrap()[0]).collect()
            };
            for (((h, m), l), o) in high[0].iter().zip(&mid[0]).zip(&low[0][0]).zip(&oracle) {
                for x in [h, m, l] {
                    assert!((x - o).abs() <= 1e-10 * (1.0 + o.abs()), "{kind}: {x} vs {o}");
                }
            }
        }
    }
}

#[test]
fn out_of_domain_is_reported_with_index() {
    let a = build("input image(1)[] v; field#0(1)[] F = v ⊛ tent; output tensor[] out = F(pos);");
    let img = Image::new(vec![4], vec![], vec![1.0, 2.0, 4.0, 8.0]).unwrap();
    let inputs = vec![InputValue::Image(Arc::new(img))];
    let err = run(&a.low, &inputs, &[vec![1.0], vec![3.5]], RunOptions::default()).unwrap_err();
    assert!(matches!(err, crate::exec::ExecError::OutOfDomain { index: 1, .. }), "{err}");
    let clamp = RunOptions { border: Border::Clamp, ..Default::default() };
    assert_eq!(run(&a.low, &inputs, &[vec![3.5]], clamp).unwrap()[0][0], vec![8.0]);
}

#[test]
fn division_by_zero_is_an_error_unless_ieee() {
    let a = build("input tensor[] x; input tensor[] y; output tensor[] q = x / y;");
    let inputs = [InputValue::Tensor(vec![1.0f64]), InputValue::Tensor(vec![0.0])];
    let err = run(&a.low, &inputs, &[vec![0.0]], RunOptions::default()).unwrap_err();
    assert!(matches!(err, crate::exec::ExecError::DivideByZero { .. }), "{err}");
    let ieee = RunOptions { ieee: true, ..Default::default() };
    assert!(run(&a.low, &inputs, &[vec![0.0]], ieee).unwrap()[0][0][0].is_infinite());
}

#[test]
fn second_derivative_of_ctmr_is_rejected() {
    let src = "input image(2)[] v; field#1(2)[] F = v ⊛ ctmr; output tensor[2,2] h = ∇⊗∇F(pos);";
    assert!(compile(src, &PassConfig::default()).is_err());
}
