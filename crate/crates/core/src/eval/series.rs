//! Univariate Taylor coefficients of the elementary functions.

use crate::ir::UnaryOp;
use crate::Scalar;

/// Generalized binomial coefficient `a (a-1) ... (a-k+1) / k!`.
fn gbinom<T: Scalar>(a: T, k: usize) -> T {
    let mut r = T::one();
    for i in 0..k {
        r = r * (a - T::lit(i as f64)) / T::lit((i + 1) as f64);
    }
    r
}

/// First `n` coefficients of `s(t)^a` for a series with `s_0 != 0`.
pub fn pow_series<T: Scalar>(s: &[T], a: T, n: usize) -> Vec<T> {
    let mut q = Vec::with_capacity(n);
    if n == 0 {
        return q;
    }
    q.push(s[0].powf(a));
    for k in 1..n {
        let mut acc = T::zero();
        for j in 1..=k.min(s.len() - 1) {
            acc += (a * T::lit(j as f64) - T::lit((k - j) as f64)) * s[j] * q[k - j];
        }
        q.push(acc / (T::lit(k as f64) * s[0]));
    }
    q
}

/// First `n` coefficients of `a(t) / b(t)`.
pub fn div_series<T: Scalar>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut q: Vec<T> = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = a.get(k).copied().unwrap_or_else(T::zero);
        for j in 1..=k.min(b.len().saturating_sub(1)) {
            acc -= b[j] * q[k - j];
        }
        q.push(acc / b[0]);
    }
    q
}

fn integrate<T: Scalar>(c0: T, d: &[T], n: usize) -> Vec<T> {
    let mut out = vec![c0];
    for k in 1..n {
        out.push(d[k - 1] / T::lit(k as f64));
    }
    out
}

/// Coefficients `f^(k)(u0) / k!` for `k < n`.
pub fn taylor<T: Scalar>(op: UnaryOp, u0: T, n: usize) -> Vec<T> {
    let fact = |k: usize| (1..=k).fold(T::one(), |acc, i| acc * T::lit(i as f64));
    let half_pi = T::FRAC_PI_2();
    match op {
        UnaryOp::Neg => (0..n).map(|k| match k {
            0 => -u0,
            1 => -T::one(),
            _ => T::zero(),
        })
        .collect(),
        UnaryOp::Exp => (0..n).map(|k| u0.exp() / fact(k)).collect(),
        UnaryOp::Sin => (0..n).map(|k| (u0 + half_pi * T::lit(k as f64)).sin() / fact(k)).collect(),
        UnaryOp::Cos => (0..n).map(|k| (u0 + half_pi * T::lit(k as f64)).cos() / fact(k)).collect(),
        UnaryOp::Tan => div_series(&taylor(UnaryOp::Sin, u0, n), &taylor(UnaryOp::Cos, u0, n), n),
        UnaryOp::Pow(p) => {
            let a = T::lit(p as f64);
            (0..n)
                .map(|k| if p >= 0 && k > p as usize { T::zero() } else { gbinom(a, k) * u0.powi(p - k as i32) })
                .collect()
        }
        UnaryOp::Sqrt => {
            let a = T::lit(0.5);
            (0..n).map(|k| gbinom(a, k) * u0.powf(a - T::lit(k as f64))).collect()
        }
        UnaryOp::Asin | UnaryOp::Acos => {
            let q = [T::one() - u0 * u0, -(u0 + u0), -T::one()];
            let d = pow_series(&q, T::lit(-0.5), n.saturating_sub(1));
            let mut s = integrate(u0.asin(), &d, n);
            if op == UnaryOp::Acos {
                s = s.into_iter().map(|c| -c).collect();
                s[0] = u0.acos();
            }
            s.truncate(n);
            s
        }
        UnaryOp::Atan => {
            let q = [T::one() + u0 * u0, u0 + u0, T::one()];
            let d = pow_series(&q, -T::one(), n.saturating_sub(1));
            let mut s = integrate(u0.atan(), &d, n);
            s.truncate(n);
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Finite-difference oracle for the first three coefficients.
    fn fd(op: UnaryOp, x: f64) -> [f64; 3] {
        let h = 1e-4;
        let f = |t: f64| op.apply(t);
        [f(x), (f(x + h) - f(x - h)) / (2.0 * h), (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h) / 2.0]
    }

    #[test]
    fn matches_finite_differences() {
        let ops = [
            UnaryOp::Neg,
            UnaryOp::Exp,
            UnaryOp::Sin,
            UnaryOp::Cos,
            UnaryOp::Tan,
            UnaryOp::Pow(3),
            UnaryOp::Pow(-2),
            UnaryOp::Sqrt,
            UnaryOp::Asin,
            UnaryOp::Acos,
            UnaryOp::Atan,
        ];
        for op in ops {
            for x in [0.3, 0.7] {
                let t = taylor::<f64>(op, x, 3);
                let r = fd(op, x);
                for k in 0..3 {
                    assert!((t[k] - r[k]).abs() < 1e-5 * (1.0 + r[k].abs()), "{op:?} k={k}: {} vs {}", t[k], r[k]);
                }
            }
        }
    }

    #[test]
    fn pow_at_zero_is_polynomial() {
        assert_eq!(taylor::<f64>(UnaryOp::Pow(2), 0.0, 4), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn atan_series_at_zero() {
        // atan t = t - t^3/3 + t^5/5
        let s = taylor::<f64>(UnaryOp::Atan, 0.0, 6);
        let want = [0.0, 1.0, 0.0, -1.0 / 3.0, 0.0, 0.2];
        for k in 0..6 {
            assert!((s[k] - want[k]).abs() < 1e-14);
        }
    }
}
