//! Truncated multivariate Taylor polynomials in up to three variables.

use std::collections::BTreeMap;

use crate::Scalar;

pub type Mono = [u8; 3];

fn degree(m: &Mono) -> u32 {
    m.iter().map(|&e| e as u32).sum()
}

/// `Σ_m c_m δ^m` for multi-indices `m` of total degree at most `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    pub order: u32,
    pub terms: BTreeMap<Mono, T>,
}

impl<T: Scalar> Jet<T> {
    pub fn constant(order: u32, v: T) -> Self {
        let mut terms = BTreeMap::new();
        if v != T::zero() {
            terms.insert([0; 3], v);
        }
        Jet { order, terms }
    }

    /// `v0 + δ_axis`.
    pub fn variable(order: u32, axis: usize, v0: T) -> Self {
        let mut j = Jet::constant(order, v0);
        if order >= 1 {
            let mut m = [0; 3];
            m[axis] = 1;
            j.terms.insert(m, T::one());
        }
        j
    }

    pub fn value(&self) -> T {
        self.coeff(&[0; 3])
    }

    pub fn coeff(&self, m: &Mono) -> T {
        self.terms.get(m).copied().unwrap_or_else(T::zero)
    }

    pub fn truncate(mut self, order: u32) -> Self {
        if order < self.order {
            self.order = order;
            self.terms.retain(|m, _| degree(m) <= order);
        }
        self
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    fn zip(&self, o: &Self, f: impl Fn(T, T) -> T) -> Self {
        let order = self.order.min(o.order);
        let mut terms = BTreeMap::new();
        for m in self.terms.keys().chain(o.terms.keys()) {
            if degree(m) <= order && !terms.contains_key(m) {
                terms.insert(*m, f(self.coeff(m), o.coeff(m)));
            }
        }
        Jet { order, terms }
    }

    pub fn scale(&self, s: T) -> Self {
        Jet { order: self.order, terms: self.terms.iter().map(|(m, &c)| (*m, c * s)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let order = self.order.min(o.order);
        let mut terms: BTreeMap<Mono, T> = BTreeMap::new();
        for (m1, &c1) in &self.terms {
            let d1 = degree(m1);
            if d1 > order {
                continue;
            }
            for (m2, &c2) in &o.terms {
                if d1 + degree(m2) > order {
                    continue;
                }
                let m = [m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2]];
                *terms.entry(m).or_insert_with(T::zero) += c1 * c2;
            }
        }
        Jet { order, terms }
    }

    /// `Σ_k coeffs[k] (self - self_0)^k`, the composition `f ∘ self` given the
    /// Taylor coefficients of `f` at `self_0`.
    pub fn compose(&self, coeffs: &[T]) -> Self {
        let mut h = self.clone();
        h.terms.remove(&[0; 3]);
        let mut acc = Jet::constant(self.order, *coeffs.last().unwrap());
        for &c in coeffs.iter().rev().skip(1) {
            acc = acc.mul(&h).add(&Jet::constant(self.order, c));
        }
        acc
    }

    pub fn recip(&self) -> Self {
        let u0 = self.value();
        let n = self.order as usize + 1;
        let coeffs: Vec<T> = (0..n)
            .map(|k| {
                let s = if k % 2 == 0 { T::one() } else { -T::one() };
                s / u0.powi(k as i32 + 1)
            })
            .collect();
        self.compose(&coeffs)
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }

    /// Partial derivative in variable `axis`; the order drops by one.
    pub fn derivative(&self, axis: usize) -> Self {
        let order = self.order.saturating_sub(1);
        let mut terms = BTreeMap::new();
        for (m, &c) in &self.terms {
            if m[axis] == 0 {
                continue;
            }
            let mut n = *m;
            n[axis] -= 1;
            if degree(&n) <= order {
                terms.insert(n, c * T::lit(m[axis] as f64));
            }
        }
        Jet { order, terms }
    }
}
