#![allow(dead_code)]

use std::path::PathBuf;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// `(name, source)` for every shipped program, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ddr"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(format!("{name}.ddr"))).unwrap()
}

use std::sync::Arc;

use ein_core::eval::InputValue;
use ein_core::ir::InputKind;
use ein_core::runtime::image::invert;
use ein_core::runtime::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A sheared, scaled world-to-image map `(A, b)`.
pub fn random_transform(dim: usize, r: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            a[i * dim + j] = if i == j { r.gen_range(0.8..1.25) } else { r.gen_range(-0.15..0.15) };
        }
    }
    (a, (0..dim).map(|_| r.gen_range(-0.5..0.5)).collect())
}

pub fn random_image(sizes: &[usize], shape: &[usize], t: (Vec<f64>, Vec<f64>), r: &mut ChaCha8Rng) -> Image<f64> {
    let n: usize = sizes.iter().product::<usize>() * shape.iter().product::<usize>();
    let data = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    Image::new(sizes.to_vec(), shape.to_vec(), data).unwrap().with_transform(t.0, t.1).unwrap()
}

/// World point whose image position has every stencil of half-width `s` inside.
pub fn interior_point(img: &Image<f64>, s: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let d = img.dim();
    let x: Vec<f64> = img.sizes.iter().map(|&n| r.gen_range((s as f64 - 1.0)..(n - s) as f64)).collect();
    let ainv = invert(&img.a, d).unwrap();
    (0..d).map(|i| (0..d).map(|j| ainv[i * d + j] * (x[j] - img.b[j])).sum()).collect()
}

/// Random bindings for every input: 12^d images sharing one transform.
pub fn random_inputs(inputs: &[ein_core::ir::InputDecl], pos_dim: usize, r: &mut ChaCha8Rng) -> Vec<InputValue<f64>> {
    let t = random_transform(pos_dim, r);
    inputs
        .iter()
        .map(|inp| match &inp.kind {
            InputKind::Image { dim, shape } => InputValue::Image(Arc::new(random_image(&vec![12; *dim], shape, t.clone(), r))),
            InputKind::Tensor { shape, default } => InputValue::Tensor(
                default.clone().unwrap_or_else(|| (0..shape.iter().product::<usize>()).map(|_| r.gen_range(-1.0..1.0)).collect()),
            ),
        })
        .collect()
}

/// Points safely inside the first image (or anywhere if there is none).
pub fn random_points(inputs: &[InputValue<f64>], pos_dim: usize, n: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let img = inputs.iter().find_map(|i| match i {
        InputValue::Image(img) => Some(img.clone()),
        _ => None,
    });
    (0..n)
        .map(|_| match &img {
            Some(img) => interior_point(img, 4, r),
            None => (0..pos_dim).map(|_| r.gen_range(-1.0..1.0)).collect(),
        })
        .collect()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
