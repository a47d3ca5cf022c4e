//! Separable reconstruction kernels stored as piecewise polynomials.
//!
//! A kernel `h` with half-support `s` is zero outside `[-s, s)` and is a
//! polynomial on every unit interval `[m, m+1)`. Derivatives of any order are
//! taken piecewise; [`Kernel::eval`] refuses orders above the kernel's
//! continuity, [`Kernel::eval_piecewise`] does not.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel {kernel} supports derivatives up to order {max}, requested {requested}")]
    DerivativeOrderExceeded { kernel: KernelKind, max: u32, requested: u32 },
    #[error("unknown kernel `{0}`")]
    Unknown(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KernelKind {
    /// Linear interpolation, C0, s = 1.
    Tent,
    /// Catmull-Rom cubic, C1, s = 2.
    Ctmr,
    /// Uniform cubic B-spline, C2, s = 2.
    Bspln3,
    /// Uniform quintic B-spline, C4, s = 3.
    Bspln5,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [KernelKind::Tent, KernelKind::Ctmr, KernelKind::Bspln3, KernelKind::Bspln5];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Tent => "tent",
            KernelKind::Ctmr => "ctmr",
            KernelKind::Bspln3 => "bspln3",
            KernelKind::Bspln5 => "bspln5",
        }
    }

    /// Half-width `s`; the stencil along one axis has `2s` samples.
    pub fn support(self) -> usize {
        match self {
            KernelKind::Tent => 1,
            KernelKind::Ctmr | KernelKind::Bspln3 => 2,
            KernelKind::Bspln5 => 3,
        }
    }

    /// Number of times a field reconstructed with this kernel can be differentiated.
    pub fn continuity(self) -> u32 {
        match self {
            KernelKind::Tent => 0,
            KernelKind::Ctmr => 1,
            KernelKind::Bspln3 => 2,
            KernelKind::Bspln5 => 4,
        }
    }

    pub fn kernel(self) -> Kernel {
        Kernel::new(self)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| KernelError::Unknown(s.to_string()))
    }
}

/// One polynomial piece, valid on `[start, start + 1)`; `coeffs[j]` multiplies `t^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub start: i64,
    pub coeffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub pieces: Vec<Piece>,
}

impl Kernel {
    pub fn new(kind: KernelKind) -> Self {
        let pieces = match kind {
            KernelKind::Tent => vec![
                Piece { start: -1, coeffs: vec![1.0, 1.0] },
                Piece { start: 0, coeffs: vec![1.0, -1.0] },
            ],
            KernelKind::Ctmr => vec![
                Piece { start: -2, coeffs: vec![2.0, 4.0, 2.5, 0.5] },
                Piece { start: -1, coeffs: vec![1.0, 0.0, -2.5, -1.5] },
                Piece { start: 0, coeffs: vec![1.0, 0.0, -2.5, 1.5] },
                Piece { start: 1, coeffs: vec![2.0, -4.0, 2.5, -0.5] },
            ],
            KernelKind::Bspln3 => bspline_pieces(3),
            KernelKind::Bspln5 => bspline_pieces(5),
        };
        Kernel { kind, pieces }
    }

    pub fn support(&self) -> usize {
        self.kind.support()
    }

    /// Value of the `order`-th derivative at `t`, checked against the kernel's continuity.
    pub fn eval<T: Scalar>(&self, order: u32, t: T) -> Result<T, KernelError> {
        if order > self.kind.continuity() {
            return Err(KernelError::DerivativeOrderExceeded {
                kernel: self.kind,
                max: self.kind.continuity(),
                requested: order,
            });
        }
        Ok(self.eval_piecewise(order, t))
    }

    /// Piecewise derivative of any order; zero outside `[-s, s)`.
    pub fn eval_piecewise<T: Scalar>(&self, order: u32, t: T) -> T {
        let m = t.floor().to_i64().unwrap_or(i64::MAX);
        match self.pieces.iter().find(|p| p.start == m) {
            Some(p) => horner(&derivative_coeffs(&p.coeffs, order), t),
            None => T::zero(),
        }
    }

    /// Coefficients of the `order`-th derivative of every piece.
    pub fn derivative_pieces(&self, order: u32) -> Vec<Piece> {
        self.pieces
            .iter()
            .map(|p| Piece { start: p.start, coeffs: derivative_coeffs(&p.coeffs, order) })
            .collect()
    }
}

pub(crate) fn derivative_coeffs(coeffs: &[f64], order: u32) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    for _ in 0..order {
        if c.len() <= 1 {
            return vec![0.0];
        }
        c = c.iter().enumerate().skip(1).map(|(j, v)| v * j as f64).collect();
    }
    c
}

fn horner<T: Scalar>(coeffs: &[f64], t: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * t + T::lit(c))
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Expands the centred uniform B-spline of odd degree `n` into per-interval
/// polynomials using its truncated-power form
/// `B(t) = 1/n! Σ_k (-1)^k C(n+1,k) (t + s - k)_+^n` with `s = (n+1)/2`.
fn bspline_pieces(n: u64) -> Vec<Piece> {
    let s = (n as i64 + 1) / 2;
    let fact: f64 = (1..=n).map(|v| v as f64).product();
    (-s..s)
        .map(|m| {
            let mut coeffs = vec![0.0; n as usize + 1];
            for k in 0..=(m + s) {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let w = sign * binomial(n + 1, k as u64) / fact;
                let c = (s - k) as f64;
                for (j, slot) in coeffs.iter_mut().enumerate() {
                    *slot += w * binomial(n, j as u64) * c.powi((n as usize - j) as i32);
                }
            }
            Piece { start: m, coeffs }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct truncated-power evaluation, independent of the expanded pieces.
    fn bspline_direct(n: u64, order: u32, t: f64) -> f64 {
        let s = (n as f64 + 1.0) / 2.0;
        let fact: f64 = (1..=n).map(|v| v as f64).product();
        let mut acc = 0.0;
        for k in 0..=(n + 1) {
            let x = t + s - k as f64;
            if x > 0.0 && (order as u64) <= n {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let falling: f64 = (0..order as u64).map(|i| (n - i) as f64).product();
                acc += sign * binomial(n + 1, k) * falling * x.powi((n - order as u64) as i32);
            }
        }
        acc / fact
    }

    #[test]
    fn tent_values() {
        let k = KernelKind::Tent.kernel();
        assert_eq!(k.eval(0, 0.5).unwrap(), 0.5);
        assert_eq!(k.eval(0, -0.25).unwrap(), 0.75);
        assert_eq!(k.eval(0, 1.0).unwrap(), 0.0);
        assert_eq!(k.eval_piecewise(1, 0.5), -1.0);
        assert_eq!(k.eval_piecewise(1, -0.5), 1.0);
    }

    #[test]
    fn ctmr_interpolates() {
        let k = KernelKind::Ctmr.kernel();
        assert_eq!(k.eval(0, 0.0f64).unwrap(), 1.0);
        for t in [-2.0, -1.0, 1.0, 2.0f64] {
            assert_eq!(k.eval(0, t).unwrap(), 0.0, "t = {t}");
        }
    }

    #[test]
    fn bspline_pieces_match_truncated_powers() {
        for (n, kind) in [(3, KernelKind::Bspln3), (5, KernelKind::Bspln5)] {
            let k = kind.kernel();
            for step in 0..97 {
                let t = -3.2 + step as f64 * 0.0661;
                for order in 0..=n as u32 {
                    let a = k.eval_piecewise(order, t);
                    let b = bspline_direct(n, order, t);
                    assert!((a - b).abs() < 1e-12, "{kind} r={order} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn order_above_continuity_is_rejected() {
        let k = KernelKind::Ctmr.kernel();
        assert!(matches!(k.eval(2, 0.3f64), Err(KernelError::DerivativeOrderExceeded { .. })));
        assert!(k.eval(1, 0.3f64).is_ok());
    }

    #[test]
    fn bspln3_partition_of_unity_at_03() {
        let k = KernelKind::Bspln3.kernel();
        let sum: f64 = (-2..=2).map(|i| k.eval_piecewise(0, 0.3 - i as f64)).sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for kind in KernelKind::ALL {
            let k = kind.kernel();
            for r in 0..kind.continuity() {
                for step in 0..40 {
                    let t = -2.9 + step as f64 * 0.1437;
                    if (t - t.round()).abs() < 1e-3 {
                        continue;
                    }
                    let fd = (k.eval_piecewise(r, t + h) - k.eval_piecewise(r, t - h)) / (2.0 * h);
                    let an = k.eval_piecewise(r + 1, t);
                    assert!((fd - an).abs() < 1e-6, "{kind} r={r} t={t}: {fd} vs {an}");
                }
            }
        }
    }
}
