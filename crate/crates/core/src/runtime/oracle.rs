//! Brute-force probe of `V ⊛ H` written directly from the reconstruction sum.

use thiserror::Error;

use super::image::{Border, Image};
use super::kernel::Kernel;
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("probe at {0:?} needs samples outside the image")]
    OutOfDomain(Vec<f64>),
}

/// All components of `∂^β (V ⊛ H)` at world point `p`, where `derivs` lists
/// world axes (with repetition). Returns `ncomp` values in component order.
/// Kernel derivatives are taken piecewise, so orders above the kernel's
/// continuity are allowed here.
pub fn oracle_probe<T: Scalar>(
    img: &Image<T>,
    kernel: &Kernel,
    derivs: &[usize],
    p: &[T],
    border: Border,
) -> Result<Vec<T>, ProbeError> {
    let d = img.dim();
    let s = kernel.support() as i64;
    let x = img.world_to_image(p);
    let n: Vec<i64> = x.iter().map(|v| v.floor().to_i64().unwrap()).collect();
    let f: Vec<T> = x.iter().zip(&n).map(|(&v, &k)| v - T::lit(k as f64)).collect();

    let ncomp = img.ncomp();
    let mut out = vec![T::zero(); ncomp];
    let r = derivs.len();
    // Every assignment of image axes j_1..j_r to the world derivative axes.
    for code in 0..d.pow(r as u32) {
        let mut js = Vec::with_capacity(r);
        let mut c = code;
        for _ in 0..r {
            js.push(c % d);
            c /= d;
        }
        let mut jac = T::one();
        for (q, &j) in js.iter().enumerate() {
            jac *= img.a[j * d + derivs[q]];
        }
        if jac == T::zero() {
            continue;
        }
        let orders: Vec<u32> = (0..d).map(|a| js.iter().filter(|&&j| j == a).count() as u32).collect();
        let width = (2 * s) as usize;
        for st in 0..width.pow(d as u32) {
            let mut idx = vec![0i64; d];
            let mut w = jac;
            let mut c = st;
            for a in 0..d {
                let i = (c % width) as i64 + 1 - s;
                c /= width;
                idx[a] = n[a] + i;
                w *= kernel.eval_piecewise(orders[a], f[a] - T::lit(i as f64));
            }
            for (comp, o) in out.iter_mut().enumerate() {
                let v = img
                    .voxel(&idx, comp, border)
                    .ok_or_else(|| ProbeError::OutOfDomain(p.iter().map(|v| v.as_f64()).collect()))?;
                *o += w * v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::kernel::KernelKind;

    fn ramp() -> Image<f64> {
        Image::new(vec![4], vec![], vec![1.0, 2.0, 4.0, 8.0]).unwrap()
    }

    #[test]
    fn tent_1d_values() {
        let h = KernelKind::Tent.kernel();
        assert_eq!(oracle_probe(&ramp(), &h, &[], &[1.5], Border::Error).unwrap(), vec![3.0]);
        assert_eq!(oracle_probe(&ramp(), &h, &[], &[2.0], Border::Error).unwrap(), vec![4.0]);
    }

    #[test]
    fn tent_1d_derivative_is_slope() {
        let h = KernelKind::Tent.kernel();
        assert_eq!(oracle_probe(&ramp(), &h, &[0], &[1.5], Border::Error).unwrap(), vec![2.0]);
    }

    #[test]
    fn out_of_domain_and_clamp() {
        let h = KernelKind::Ctmr.kernel();
        assert!(matches!(
            oracle_probe(&ramp(), &h, &[], &[0.5], Border::Error),
            Err(ProbeError::OutOfDomain(_))
        ));
        assert!(oracle_probe(&ramp(), &h, &[], &[0.5], Border::Clamp).is_ok());
    }
}
