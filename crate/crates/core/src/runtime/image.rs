//! Sampled images with an affine world-to-image transform.

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("image data has {found} values, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("image dimension must be 1, 2 or 3 (got {0})")]
    BadDimension(usize),
    #[error("world-to-image matrix is singular")]
    Singular,
}

/// How out-of-range stencil samples are handled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Border {
    #[default]
    Error,
    Clamp,
}

/// `d`-dimensional image of tensor-valued samples. Components are stored
/// fastest, then axis 0, axis 1, ...
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    pub sizes: Vec<usize>,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
    /// Row-major `d x d` world-to-image matrix.
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> Image<T> {
    /// Image with the identity transform.
    pub fn new(sizes: Vec<usize>, shape: Vec<usize>, data: Vec<T>) -> Result<Self, ImageError> {
        let d = sizes.len();
        if !(1..=3).contains(&d) {
            return Err(ImageError::BadDimension(d));
        }
        let expected = sizes.iter().product::<usize>() * shape.iter().product::<usize>();
        if data.len() != expected {
            return Err(ImageError::SizeMismatch { expected, found: data.len() });
        }
        let mut a = vec![T::zero(); d * d];
        for i in 0..d {
            a[i * d + i] = T::one();
        }
        Ok(Image { sizes, shape, data, a, b: vec![T::zero(); d] })
    }

    pub fn with_transform(mut self, a: Vec<T>, b: Vec<T>) -> Result<Self, ImageError> {
        let d = self.dim();
        if a.len() != d * d || b.len() != d {
            return Err(ImageError::SizeMismatch { expected: d * d + d, found: a.len() + b.len() });
        }
        let af: Vec<f64> = a.iter().map(|v| v.as_f64()).collect();
        if invert(&af, d).is_none() {
            return Err(ImageError::Singular);
        }
        self.a = a;
        self.b = b;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn ncomp(&self) -> usize {
        self.shape.iter().product()
    }

    /// `x = A p + b`.
    pub fn world_to_image(&self, p: &[T]) -> Vec<T> {
        let d = self.dim();
        (0..d)
            .map(|r| (0..d).fold(self.b[r], |acc, c| acc + self.a[r * d + c] * p[c]))
            .collect()
    }

    /// Sample at integer position `idx`, component `comp` (flat, row-major over the shape).
    pub fn voxel(&self, idx: &[i64], comp: usize, border: Border) -> Option<T> {
        let mut flat = 0usize;
        for a in (0..self.dim()).rev() {
            let n = self.sizes[a] as i64;
            let mut i = idx[a];
            if i < 0 || i >= n {
                match border {
                    Border::Error => return None,
                    Border::Clamp => i = i.clamp(0, n - 1),
                }
            }
            flat = flat * self.sizes[a] + i as usize;
        }
        Some(self.data[flat * self.ncomp() + comp])
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Image<U> {
        Image {
            sizes: self.sizes.clone(),
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
            a: self.a.iter().map(|&v| f(v)).collect(),
            b: self.b.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Flat component index of `comps` within `shape` (row-major).
pub fn flat_component(shape: &[usize], comps: &[usize]) -> usize {
    comps.iter().zip(shape).fold(0, |acc, (&c, &n)| acc * n + c)
}

/// Inverse of a row-major `d x d` matrix by Gauss-Jordan elimination.
pub fn invert(m: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        inv[i * d + i] = 1.0;
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&x, &y| a[x * d + col].abs().total_cmp(&a[y * d + col].abs()))?;
        if a[piv * d + col].abs() < 1e-300 {
            return None;
        }
        for k in 0..d {
            a.swap(col * d + k, piv * d + k);
            inv.swap(col * d + k, piv * d + k);
        }
        let p = a[col * d + col];
        for k in 0..d {
            a[col * d + k] /= p;
            inv[col * d + k] /= p;
        }
        for r in 0..d {
            if r != col {
                let f = a[r * d + col];
                for k in 0..d {
                    a[r * d + k] -= f * a[col * d + k];
                    inv[r * d + k] -= f * inv[col * d + k];
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn voxel_layout_components_fastest() {
        let data: Vec<f64> = (0..12).map(f64::from).collect();
        let img = Image::new(vec![3, 2], vec![2], data).unwrap();
        assert_eq!(img.voxel(&[1, 0], 1, Border::Error), Some(3.0));
        assert_eq!(img.voxel(&[0, 1], 0, Border::Error), Some(6.0));
        assert_eq!(img.voxel(&[3, 0], 0, Border::Error), None);
        assert_eq!(img.voxel(&[3, -1], 0, Border::Clamp), Some(4.0));
    }

    #[test]
    fn invert_roundtrip() {
        let m = [2.0, 1.0, 0.0, 0.0, 3.0, 1.0, 1.0, 0.0, 1.0];
        let inv = invert(&m, 3).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| m[r * 3 + k] * inv[k * 3 + c]).sum();
                assert!((v - if r == c { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2).is_none());
    }

    #[test]
    fn size_mismatch() {
        assert!(matches!(Image::<f64>::new(vec![2], vec![], vec![1.0]), Err(ImageError::SizeMismatch { .. })));
    }
}
