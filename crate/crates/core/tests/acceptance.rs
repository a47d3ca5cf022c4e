//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{close, interior_point, random_image, random_inputs, random_points, random_transform, rng};
use ein_core::eval::{eval_op, EvalOptions, InputValue, Value};
use ein_core::exec::{emit_c, emit_c_driver, run, RunOptions};
use ein_core::ir::{EinApp, EinOp, Expr, Index, IndexVar, ParamKind, Rhs, Var};
use ein_core::lowering::{LowOp, LowerError, ScalarProgram};
use ein_core::pipeline::{compile, compile_with_report, Artifacts, PipelineError};
use ein_core::runtime::{oracle_probe, Border, KernelKind};
use ein_core::size::{canonical_op, PassConfig};
use ein_core::transform::{fuse_ops, is_normal, reduce_indices};
use ein_core::translate::{instantiate, Generic};
use ein_core::Tensor64;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn build(src: &str) -> Result<Artifacts, String> {
    compile(src, &PassConfig::default()).map_err(|e| format!("{e}\n{src}"))
}

fn eval_at(low: &ScalarProgram, inputs: &[InputValue<f64>], p: &[f64]) -> Result<Vec<f64>, String> {
    let out = run(low, inputs, &[p.to_vec()], RunOptions::default()).map_err(|e| e.to_string())?;
    Ok(out.into_iter().next().unwrap().into_iter().flatten().collect())
}

fn bare_probe_src(d: usize, kind: KernelKind, shape: &[usize]) -> String {
    let sh = format!("{shape:?}").replace(' ', "");
    format!("input image({d}){sh} v; field#{k}({d}){sh} F = v ⊛ {kind}; output tensor{sh} out = F(pos);", k = kind.continuity())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut cache = std::collections::HashMap::new();
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let kind = KernelKind::ALL[trial % KernelKind::ALL.len()];
        let d = r.gen_range(1..=3usize);
        let shape: Vec<usize> = if r.gen_bool(0.3) { vec![2] } else { vec![] };
        let key = (d, kind, shape.clone());
        if !cache.contains_key(&key) {
            cache.insert(key.clone(), build(&bare_probe_src(d, kind, &shape))?);
        }
        let art = &cache[&key];
        let s = kind.support();
        let sizes: Vec<usize> = (0..d).map(|_| r.gen_range(2 * s..=8)).collect();
        let img = random_image(&sizes, &shape, random_transform(d, &mut r), &mut r);
        let p = interior_point(&img, s, &mut r);
        let expect = oracle_probe(&img, &kind.kernel(), &[], &p, Border::Error).map_err(|e| e.to_string())?;
        let got = eval_at(&art.low, &[InputValue::Image(Arc::new(img))], &p)?;
        for (g, e) in got.iter().zip(&expect) {
            worst = worst.max((g - e).abs() / e.abs().max(1.0));
            check(close(*g, *e, 1e-10), || format!("trial {trial} ({kind}, d={d}): {g} vs oracle {e}"))?;
        }
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(10), || format!("took {t:?}"))?;
    Ok(format!("200 trials, max rel err {worst:.1e}, {t:.2?}"))
}

fn derivative_correctness() -> Outcome {
    let start = Instant::now();
    let h = 1e-4;
    let mut r = rng(2);
    let mut checked = 0;
    let mut worst = 0.0f64;
    for kind in [KernelKind::Ctmr, KernelKind::Bspln3] {
        for d in [2usize, 3] {
            let k = kind.continuity();
            let hess = if k >= 2 { format!(" output tensor[{d},{d}] h = ∇⊗∇F(pos);") } else { String::new() };
            let src = format!(
                "input image({d})[] v; field#{k}({d})[] F = v ⊛ {kind}; output tensor[] f = F(pos); output tensor[{d}] g = ∇F(pos);{hess}"
            );
            let art = build(&src)?;
            for _trial in 0..2 {
                let img = random_image(&vec![10; d], &[], random_transform(d, &mut r), &mut r);
                let inputs = [InputValue::Image(Arc::new(img.clone()))];
                for _ in 0..50 {
                    let p = interior_point(&img, kind.support() + 1, &mut r);
                    let all = run(&art.low, &inputs, &[p.clone()], RunOptions::default()).map_err(|e| e.to_string())?;
                    let f = |q: &[f64]| -> Result<f64, String> {
                        Ok(run(&art.low, &inputs, &[q.to_vec()], RunOptions::default()).map_err(|e| e.to_string())?[0][0][0])
                    };
                    let shifted = |steps: &[(usize, f64)]| {
                        let mut q = p.clone();
                        for &(a, s) in steps {
                            q[a] += s;
                        }
                        q
                    };
                    for i in 0..d {
                        let fd = (f(&shifted(&[(i, h)]))? - f(&shifted(&[(i, -h)]))?) / (2.0 * h);
                        let an = all[0][1][i];
                        worst = worst.max((fd - an).abs() / an.abs().max(1.0));
                        check(close(fd, an, 1e-5), || format!("{kind} d={d} ∂{i}F at {p:?}: {an} vs fd {fd}"))?;
                        if k >= 2 {
                            for j in 0..d {
                                let fd = (f(&shifted(&[(i, h), (j, h)]))? - f(&shifted(&[(i, h), (j, -h)]))?
                                    - f(&shifted(&[(i, -h), (j, h)]))?
                                    + f(&shifted(&[(i, -h), (j, -h)]))?)
                                    / (4.0 * h * h);
                                let an = all[0][2][i * d + j];
                                worst = worst.max((fd - an).abs() / an.abs().max(1.0));
                                check(close(fd, an, 1e-5), || format!("{kind} d={d} ∂{i}∂{j}F at {p:?}: {an} vs fd {fd}"))?;
                            }
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(10), || format!("took {t:?}"))?;
    Ok(format!("{checked} gradient components (+Hessians for bspln3), max rel err {worst:.1e}, {t:.2?}"))
}

fn output_body(art: &Artifacts) -> Result<Expr, String> {
    let o = &art.high_norm.outputs[0];
    match &art.high_norm.stmt(o.var).map(|s| &s.rhs) {
        Some(Rhs::Ein(app)) => Ok(app.op.body.clone()),
        _ => Err("output is not an EIN operator".into()),
    }
}

fn random_vec3(r: &mut impl Rng) -> Vec<f64> {
    (0..3).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn tensor(v: Vec<f64>) -> Value<f64> {
    Value::Tensor(Tensor64::new(vec![v.len()], v))
}

fn scalar_of(v: Value<f64>) -> f64 {
    match v {
        Value::Tensor(t) => t.data[0],
        _ => f64::NAN,
    }
}

fn symbolic_identities() -> Outcome {
    let curl_grad = build("input image(3)[] v; field#2(3)[] F = v ⊛ bspln3; output tensor[3] z = (∇×(∇F))(pos);")?;
    check(output_body(&curl_grad)? == Expr::Const(0.0), || "∇×∇F did not reduce to 0".into())?;
    let div_curl = build("input image(3)[3] v; field#2(3)[3] V = v ⊛ bspln3; output tensor[] z = (∇•(∇×V))(pos);")?;
    check(output_body(&div_curl)? == Expr::Const(0.0), || "∇•∇×V did not reduce to 0".into())?;

    let t3 = ParamKind::Tensor(vec![3]);
    let outer = instantiate(Generic::Outer, &[t3.clone(), t3.clone()], &[]).unwrap();
    let trace = instantiate(Generic::Trace, &[ParamKind::Tensor(vec![3, 3])], &[]).unwrap();
    let dot = instantiate(Generic::Dot, &[t3.clone(), t3.clone()], &[]).unwrap();
    let tr = fuse_ops(&EinApp { op: trace, args: vec![Var(2)] }, 0, &EinApp { op: outer, args: vec![Var(0), Var(1)] })
        .map_err(|e| e.to_string())?;
    let tr = reduce_indices(&tr.op, None).map_err(|e| e.to_string())?;
    check(canonical_op(&tr) == canonical_op(&dot), || format!("trace(u⊗v) is {}", ein_core::ir::sexpr(&tr)))?;
    let mut r = rng(3);
    for _ in 0..100 {
        let (u, v) = (random_vec3(&mut r), random_vec3(&mut r));
        let dense = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        let got = scalar_of(eval_op(&tr, &[tensor(u), tensor(v)], EvalOptions::default()).map_err(|e| e.to_string())?);
        check(got == dense, || format!("trace(u⊗v) = {got}, dense dot {dense}"))?;
    }

    let cross = instantiate(Generic::Cross, &[t3.clone(), t3.clone()], &[]).unwrap();
    let d = EinApp { op: dot, args: vec![Var(4), Var(5)] };
    let d = fuse_ops(&d, 0, &EinApp { op: cross.clone(), args: vec![Var(0), Var(1)] }).map_err(|e| e.to_string())?;
    let slot = d.args.iter().position(|&a| a == Var(5)).unwrap();
    let d = fuse_ops(&d, slot, &EinApp { op: cross, args: vec![Var(2), Var(3)] }).map_err(|e| e.to_string())?;
    let red = reduce_indices(&d.op, None).map_err(|e| e.to_string())?;
    check(!red.body.any(&|e| matches!(e, Expr::Epsilon2(..) | Expr::Epsilon3(..))), || {
        format!("ε left in {}", ein_core::ir::sexpr(&red))
    })?;
    let order: Vec<usize> = d.args.iter().map(|v| v.0 as usize).collect();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q: Vec<Vec<f64>> = (0..4).map(|_| random_vec3(&mut r)).collect();
        let dt = |x: &[f64], y: &[f64]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
        let expect = dt(&q[0], &q[2]) * dt(&q[1], &q[3]) - dt(&q[0], &q[3]) * dt(&q[1], &q[2]);
        let args: Vec<Value<f64>> = order.iter().map(|&k| tensor(q[k].clone())).collect();
        let got = scalar_of(eval_op(&red, &args, EvalOptions::default()).map_err(|e| e.to_string())?);
        worst = worst.max((got - expect).abs());
        check(close(got, expect, 1e-12), || format!("(a×b)•(c×d) = {got}, expected {expect}"))?;
    }
    Ok(format!("curl∘grad = div∘curl = ⟨0⟩; trace(u⊗v) ≡ dot; (a×b)•(c×d) ε-free, max err {worst:.1e}"))
}

fn epsilon_epsilon() -> Outcome {
    let v = |n: u32| IndexVar(n);
    let ix = |n: u32| Index::Var(IndexVar(n));
    let body = Expr::sum(v(0), 3, Expr::mul(Expr::Epsilon3(ix(0), ix(1), ix(2)), Expr::Epsilon3(ix(0), ix(3), ix(4))));
    let op = EinOp::new(vec![], body, vec![(v(1), 3), (v(2), 3), (v(3), 3), (v(4), 3)]);
    let red = reduce_indices(&op, None).map_err(|e| e.to_string())?;
    check(!red.body.any(&|e| matches!(e, Expr::Epsilon3(..))), || format!("ε left in {}", ein_core::ir::sexpr(&red)))?;
    let Value::Tensor(t) = eval_op::<f64>(&red, &[], EvalOptions::default()).map_err(|e| e.to_string())? else {
        return Err("not a tensor".into());
    };
    let delta = |a: usize, b: usize| f64::from(u8::from(a == b));
    let mut n = 0;
    for j in 0..3 {
        for k in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    let lhs: f64 = (0..3)
                        .map(|i| ein_core::eval::levi_civita(&[i, j, k]) * ein_core::eval::levi_civita(&[i, l, m]))
                        .sum();
                    let rhs = delta(j, l) * delta(k, m) - delta(j, m) * delta(k, l);
                    check(lhs == rhs, || format!("enumeration ({j},{k},{l},{m}): {lhs} vs {rhs}"))?;
                    let red_v = t.get(&[j, k, l, m]);
                    check(red_v == rhs, || format!("reduced operator ({j},{k},{l},{m}): {red_v} vs {rhs}"))?;
                    n += 1;
                }
            }
        }
    }
    Ok(format!("{n} combinations by enumeration and by the reduced operator {}", ein_core::ir::sexpr(&red)))
}

fn normal_form() -> Outcome {
    let mut ops = 0;
    for (name, src) in common::corpus() {
        let art = build(&src)?;
        for s in &art.high_norm.stmts {
            if let Rhs::Ein(app) = &s.rhs {
                check(!app.op.body.any(&|e| matches!(e, Expr::Partial { .. })), || format!("{name}: ∂ left in {}", s.lhs))?;
                check(is_normal(&app.op.body), || format!("{name}: {} not in normal form", s.lhs))?;
                ops += 1;
            }
        }
    }
    Ok(format!("{ops} operators across {} programs", common::corpus().len()))
}

fn size_management() -> Outcome {
    let src = common::source("stress");
    let start = Instant::now();
    let (rep, res) = compile_with_report(&src, &PassConfig::default(), None);
    let t = start.elapsed();
    res.map_err(|e| format!("all passes: {e}"))?;
    let with = rep.size("low").unwrap();
    check(with <= 100_000, || format!("raw LowIR {with} exceeds the budget"))?;
    check(t < Duration::from_secs(60), || format!("took {t:?}"))?;
    let no_split = PassConfig { enable_split: false, ..Default::default() };
    let over = matches!(compile(&src, &no_split), Err(PipelineError::Lower(LowerError::BudgetExceeded { .. })));
    let unbounded = PassConfig { node_budget: usize::MAX, ..no_split };
    let (rep2, res2) = compile_with_report(&src, &unbounded, None);
    res2.map_err(|e| format!("--no-split: {e}"))?;
    let without = rep2.size("low").unwrap();
    check(with < without, || format!("raw LowIR with split {with} ≥ without {without}"))?;
    check(over || without >= 2 * with, || format!("--no-split gives {without}, less than twice {with}"))?;
    Ok(format!(
        "raw LowIR {with} with split vs {without} without ({:.2}×), --no-split over budget: {over}, {t:.2?}",
        without as f64 / with as f64
    ))
}

fn configs() -> Vec<PassConfig> {
    (0..16u32)
        .map(|m| PassConfig {
            enable_split: m & 1 == 0,
            enable_slice: m & 2 == 0,
            enable_shift: m & 4 == 0,
            enable_vn: m & 8 == 0,
            ..Default::default()
        })
        .collect()
}

fn pass_soundness() -> Outcome {
    let mut compared = 0;
    let mut skipped = 0;
    for (n, (name, src)) in common::corpus().into_iter().enumerate() {
        let base = build(&src)?;
        let mut r = rng(70 + n as u64);
        let inputs = random_inputs(&base.low.inputs, base.low.pos_dim, &mut r);
        let pts = random_points(&inputs, base.low.pos_dim, 50, &mut r);
        let expect = run(&base.low, &inputs, &pts, RunOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        for cfg in configs().into_iter().skip(1) {
            let Ok(art) = compile(&src, &cfg) else {
                skipped += 1;
                continue;
            };
            let got = run(&art.low, &inputs, &pts, RunOptions::default()).map_err(|e| format!("{name}: {e}"))?;
            for (x, y) in got.iter().flatten().flatten().zip(expect.iter().flatten().flatten()) {
                check(close(*x, *y, 1e-10), || format!("{name} {cfg:?}: {x} vs default {y}"))?;
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} (program, toggle subset) pairs agree at 50 points; {skipped} subsets did not compile"))
}

fn redundancy_elimination() -> Outcome {
    let mut lines = Vec::new();
    for (d, kind) in [(3usize, KernelKind::Bspln3), (2, KernelKind::Bspln5)] {
        let src = format!(
            "input image({d})[] v; field#{k}({d})[] F = v ⊛ {kind}; output tensor[{d},{d}] h = ∇⊗∇F(pos);",
            k = kind.continuity()
        );
        let art = build(&src)?;
        let s = kind.support();
        let loads = art.low.count(|op| matches!(op, LowOp::Load { .. }));
        let expect = (2 * s).pow(d as u32);
        check(loads == expect, || format!("{kind} d={d}: {loads} loads, expected {expect}"))?;
        let kernels = art.low.count(|op| matches!(op, LowOp::Kernel { .. }));
        check(kernels == d * 3 * 2 * s, || format!("{kind} d={d}: {kernels} kernel evaluations"))?;
        let regs = &art.low.outputs[0].regs;
        check(regs[1] == regs[d], || format!("{kind} d={d}: H01 and H10 use different instructions"))?;
        lines.push(format!("{kind} d={d}: {loads} loads, {kernels} kernel evals"));
    }
    Ok(format!("{}; H01 ≡ H10", lines.join(", ")))
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

fn c_emission() -> Outcome {
    if !have_cc() {
        return Ok("SKIPPED: no C compiler found".into());
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let corpus = common::corpus();
    for (n, (name, src)) in corpus.iter().enumerate() {
        let art = build(src)?;
        let mut r = rng(90 + n as u64);
        let inputs = random_inputs(&art.low.inputs, art.low.pos_dim, &mut r);
        let pts = random_points(&inputs, art.low.pos_dim, 20, &mut r);
        let expect: Vec<f64> = run(&art.low, &inputs, &pts, RunOptions::default())
            .map_err(|e| e.to_string())?
            .into_iter()
            .flat_map(|per| per.into_iter().flatten())
            .collect();
        let cname = name.replace('-', "_");
        let unit = dir.path().join(format!("{cname}.c"));
        let main = dir.path().join(format!("{cname}_main.c"));
        let exe = dir.path().join(&cname);
        std::fs::write(&unit, emit_c(&art.low, &cname, Border::Error)).map_err(|e| e.to_string())?;
        std::fs::write(&main, emit_c_driver(&art.low, &cname, &inputs, &pts)).map_err(|e| e.to_string())?;
        let cc = Command::new("cc")
            .args(["-std=c99", "-O1", "-Wall", "-Wextra", "-Werror", "-pedantic", "-o"])
            .arg(&exe)
            .arg(&unit)
            .arg(&main)
            .arg("-lm")
            .output()
            .map_err(|e| e.to_string())?;
        check(cc.status.success() && cc.stderr.is_empty(), || format!("{name}: {}", String::from_utf8_lossy(&cc.stderr)))?;
        let out = Command::new(&exe).output().map_err(|e| e.to_string())?;
        let got: Vec<f64> = String::from_utf8_lossy(&out.stdout).lines().map(|l| l.parse().unwrap_or(f64::NAN)).collect();
        check(got.len() == expect.len(), || format!("{name}: {} values, expected {}", got.len(), expect.len()))?;
        for (g, e) in got.iter().zip(&expect) {
            worst = worst.max((g - e).abs() / e.abs().max(1.0));
            check(close(*g, *e, 1e-12), || format!("{name}: C {g} vs run {e}"))?;
        }
    }
    Ok(format!("{} programs compile warning-free, max rel diff {worst:.1e}", corpus.len()))
}

fn kernel_properties() -> Outcome {
    let mut r = rng(10);
    for kind in [KernelKind::Tent, KernelKind::Bspln3] {
        let k = kind.kernel();
        for _ in 0..1000 {
            let t: f64 = r.gen_range(-5.0..5.0);
            let sum: f64 = (-6..=6).map(|i| k.eval(0, t - i as f64).unwrap()).sum();
            check((sum - 1.0).abs() <= 1e-12, || format!("{kind}: Σ h(t−i) = {sum} at t = {t}"))?;
        }
    }
    let c = KernelKind::Ctmr.kernel();
    check(c.eval(0, 0.0f64).unwrap() == 1.0, || "ctmr h(0) ≠ 1".into())?;
    for t in [-2.0, -1.0, 1.0, 2.0f64] {
        let v = c.eval(0, t).unwrap();
        check(v == 0.0, || format!("ctmr h({t}) = {v}"))?;
    }
    Ok("partition of unity (tent, bspln3) at 1000 points; ctmr interpolates exactly".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("derivative correctness", derivative_correctness),
        ("symbolic identities", symbolic_identities),
        ("ε-ε identity", epsilon_epsilon),
        ("normal form", normal_form),
        ("size management", size_management),
        ("pass soundness", pass_soundness),
        ("redundancy elimination", redundancy_elimination),
        ("C emission fidelity", c_emission),
        ("kernel properties", kernel_properties),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match f() {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{:.2?}]", n + 1, t.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{:.2?}]", n + 1, t.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
