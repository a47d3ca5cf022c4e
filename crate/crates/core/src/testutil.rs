//! Deterministic inputs for unit tests.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{eval_program, EvalOptions, InputValue};
use crate::ir::{InputKind, Program};
use crate::runtime::image::invert;
use crate::runtime::Image;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A mildly sheared world-to-image map `(A, b)`.
pub fn random_transform(dim: usize, r: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            a[i * dim + j] = if i == j { r.gen_range(0.8..1.25) } else { r.gen_range(-0.15..0.15) };
        }
    }
    let b = (0..dim).map(|_| r.gen_range(-0.5..0.5)).collect();
    (a, b)
}

/// Random voxel data of `n` samples per axis under the transform `t`.
pub fn random_image_with(dim: usize, shape: &[usize], n: usize, t: (Vec<f64>, Vec<f64>), r: &mut ChaCha8Rng) -> Image<f64> {
    let sizes = vec![n; dim];
    let ncomp: usize = shape.iter().product();
    let data = (0..ncomp * n.pow(dim as u32)).map(|_| r.gen_range(-1.0..1.0)).collect();
    Image::new(sizes, shape.to_vec(), data).unwrap().with_transform(t.0, t.1).unwrap()
}

/// A world point whose image-space position lies at least `margin` voxels inside.
pub fn interior_point(img: &Image<f64>, margin: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    let d = img.dim();
    let x: Vec<f64> = img.sizes.iter().map(|&n| r.gen_range(margin..(n as f64 - 1.0 - margin))).collect();
    let ainv = invert(&img.a, d).unwrap();
    (0..d)
        .map(|i| (0..d).map(|j| ainv[i * d + j] * (x[j] - img.b[j])).sum())
        .collect()
}

/// Random inputs; all images share one grid and transform.
pub fn inputs_for(prog: &Program, r: &mut ChaCha8Rng) -> Vec<InputValue<f64>> {
    let t = random_transform(prog.pos_dim, r);
    prog.inputs
        .iter()
        .map(|inp| match &inp.kind {
            InputKind::Image { dim, shape } => {
                InputValue::Image(Arc::new(random_image_with(*dim, shape, 12, t.clone(), r)))
            }
            InputKind::Tensor { shape, default } => InputValue::Tensor(default.clone().unwrap_or_else(|| {
                (0..shape.iter().product::<usize>()).map(|_| r.gen_range(-1.0..1.0)).collect()
            })),
        })
        .collect()
}

/// A probe position well inside the (shared) image grid.
pub fn shared_point(inputs: &[InputValue<f64>], pos_dim: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let first = inputs.iter().find_map(|i| match i {
        InputValue::Image(img) => Some(&**img),
        _ => None,
    });
    match first {
        Some(img) => interior_point(img, 3.5, r),
        None => (0..pos_dim).map(|_| r.gen_range(-1.0..1.0)).collect(),
    }
}

/// Evaluates both programs on the same random inputs and positions and
/// asserts agreement to a relative tolerance.
pub fn assert_same(a: &Program, b: &Program, seed: u64, trials: usize, tol: f64) {
    let mut r = rng(seed);
    let inputs = inputs_for(a, &mut r);
    for _ in 0..trials {
        let p = shared_point(&inputs, a.pos_dim, &mut r);
        let x = eval_program(a, &inputs, &p, EvalOptions::default()).unwrap();
        let y = eval_program(b, &inputs, &p, EvalOptions::default()).unwrap();
        for (u, v) in x.iter().flatten().zip(y.iter().flatten()) {
            assert!((u - v).abs() <= tol * (1.0 + u.abs()), "{u} vs {v} at {p:?}\n{}\n{}", a.sexpr(), b.sexpr());
        }
    }
}
