use std::process::Command;

use crate::exec::{emit_c, emit_c_driver, run, RunOptions};
use crate::pipeline::compile;
use crate::runtime::Border;
use crate::size::PassConfig;
use crate::testutil::{inputs_for, rng, shared_point};

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

/// Compiles the emitted unit plus a driver and returns the printed values.
fn compile_and_run(src: &str, seed: u64, npts: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    if !have_cc() {
        return None;
    }
    let a = compile(src, &PassConfig::default()).unwrap();
    let mut r = rng(seed);
    let inputs = inputs_for(&a.high, &mut r);
    let pts: Vec<Vec<f64>> = (0..npts).map(|_| shared_point(&inputs, a.low.pos_dim, &mut r)).collect();
    let expect: Vec<f64> = run(&a.low, &inputs, &pts, RunOptions::default())
        .unwrap()
        .into_iter()
        .flat_map(|per| per.into_iter().flatten())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("prog.c"), emit_c(&a.low, "prog", Border::Error)).unwrap();
    std::fs::write(dir.path().join("main.c"), emit_c_driver(&a.low, "prog", &inputs, &pts)).unwrap();
    let exe = dir.path().join("prog");
    let cc = Command::new("cc")
        .args(["-std=c99", "-O1", "-Wall", "-Wextra", "-Werror", "-pedantic", "-o"])
        .arg(&exe)
        .arg(dir.path().join("prog.c"))
        .arg(dir.path().join("main.c"))
        .arg("-lm")
        .output()
        .unwrap();
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let out = Command::new(&exe).output().unwrap();
    let got = String::from_utf8(out.stdout).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    Some((expect, got))
}

#[test]
fn emitted_dot_has_three_multiplies() {
    let a = compile("input tensor[3] u; input tensor[3] v; output tensor[] d = u • v;", &PassConfig::default()).unwrap();
    let c = emit_c(&a.low, "dot", Border::Error);
    assert_eq!(c.matches(" * r").count(), 3, "{c}");
    assert_eq!(c.matches(" + r").count(), 2, "{c}");
}

#[test]
fn emitted_tent_probe_has_floor_and_two_loads() {
    let a = compile("input image(1)[] v; field#0(1)[] F = v ⊛ tent; output tensor[] out = F(pos);", &PassConfig::default()).unwrap();
    let c = emit_c(&a.low, "probe", Border::Error);
    assert!(c.contains("floor(r"));
    assert_eq!(c.matches("ein_load(img_v").count(), 2);
}

#[test]
fn emitted_c_matches_interpreter() {
    let srcs = [
        "input image(3)[] v; field#2(3)[] F = v ⊛ bspln3; output tensor[3,3] h = ∇⊗∇F(pos);",
        "input image(2)[2] v; field#1(2)[2] F = v ⊛ ctmr; output tensor[2,2] j = ∇⊗F(pos); output tensor[] n = |F(pos)|;",
    ];
    for (n, s) in srcs.iter().enumerate() {
        let Some((expect, got)) = compile_and_run(s, n as u64, 5) else { return };
        assert_eq!(expect.len(), got.len());
        for (e, g) in expect.iter().zip(&got) {
            assert!((e - g).abs() <= 1e-12 * (1.0 + e.abs()), "{e} vs {g}");
        }
    }
}
