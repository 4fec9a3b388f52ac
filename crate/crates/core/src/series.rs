//! Truncated power series `Σ_{j ≤ K} c_j (z − center)^j`.
//!
//! Residues of the moment integrands are single coefficients of products and
//! quotients of such series, so this is all the symbolic machinery needed.

use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedSeries {
    center: f64,
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    pub fn new(center: f64, coeffs: Vec<f64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a series needs at least one coefficient"
        );
        Self { center, coeffs }
    }

    pub fn constant(center: f64, value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    /// The series of `z` itself: `center + (z − center)`.
    pub fn identity(center: f64, order: usize) -> Self {
        let mut s = Self::constant(center, center, order);
        if order >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    /// Expansion of `1/z` about a nonzero center.
    pub fn reciprocal_of_z(center: f64, order: usize) -> Self {
        assert!(center != 0.0, "1/z has no expansion at the origin");
        let r = -1.0 / center;
        let mut c = -r; // 1/center
        let coeffs = (0..=order)
            .map(|_| {
                let v = c;
                c *= r;
                v
            })
            .collect();
        Self { center, coeffs }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `(z − center)^j`, zero beyond the truncation order.
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, 0.0);
        Self {
            center: self.center,
            coeffs,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Term-wise derivative; the result has one order less.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(self.center, 0.0, 0);
        }
        Self {
            center: self.center,
            coeffs: self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| (k + 1) as f64 * c)
                .collect(),
        }
    }

    /// `1/self`; `None` when the constant term vanishes.
    pub fn recip(&self) -> Option<Self> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 {
            return None;
        }
        let k = self.order();
        let mut out = vec![0.0; k + 1];
        out[0] = 1.0 / c0;
        for n in 1..=k {
            let acc: f64 = (1..=n).map(|i| self.coeffs[i] * out[n - i]).sum();
            out[n] = -acc / c0;
        }
        Some(Self {
            center: self.center,
            coeffs: out,
        })
    }

    pub fn div(&self, other: &Self) -> Option<Self> {
        other.recip().map(|r| self * &r)
    }

    /// Integer power; negative exponents need a nonzero constant term.
    pub fn powi(&self, e: i32) -> Option<Self> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc = Self::constant(self.center, 1.0, self.order());
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        Some(acc)
    }

    fn check_center(&self, other: &Self) {
        debug_assert!(
            self.center == other.center,
            "series expanded about different centers"
        );
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn add(self, rhs: Self) -> TruncatedSeries {
        self.check_center(rhs);
        let k = self.order().min(rhs.order());
        TruncatedSeries {
            center: self.center,
            coeffs: (0..=k).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect(),
        }
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn sub(self, rhs: Self) -> TruncatedSeries {
        self + &(-rhs)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn mul(self, rhs: Self) -> TruncatedSeries {
        self.check_center(rhs);
        let k = self.order().min(rhs.order());
        let coeffs = (0..=k)
            .map(|n| (0..=n).map(|i| self.coeffs[i] * rhs.coeffs[n - i]).sum())
            .collect();
        TruncatedSeries {
            center: self.center,
            coeffs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(c: Vec<f64>) -> TruncatedSeries {
        TruncatedSeries::new(0.5, c)
    }

    fn close(a: &TruncatedSeries, b: &TruncatedSeries, tol: f64) -> bool {
        a.coeffs
            .iter()
            .zip(&b.coeffs)
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
    }

    #[test]
    fn reciprocal_of_z_matches_geometric_series() {
        let s = TruncatedSeries::reciprocal_of_z(2.0, 3);
        assert_eq!(s.coeffs(), &[0.5, -0.25, 0.125, -0.0625]);
        let z = TruncatedSeries::identity(2.0, 3);
        let one = &s * &z;
        assert!((one.coeff(0) - 1.0).abs() < 1e-15);
        assert!(one.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn geometric_reciprocal() {
        // 1/(1 - x) = 1 + x + x² + ...
        let s = series(vec![1.0, -1.0, 0.0, 0.0]);
        assert_eq!(s.recip().unwrap().coeffs(), &[1.0, 1.0, 1.0, 1.0]);
        assert!(series(vec![0.0, 1.0]).recip().is_none());
    }

    #[test]
    fn powers_of_binomial() {
        let s = series(vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(s.powi(3).unwrap().coeffs(), &[1.0, 3.0, 3.0, 1.0]);
        // (1 + x)^-2 = 1 - 2x + 3x² - 4x³
        assert_eq!(s.powi(-2).unwrap().coeffs(), &[1.0, -2.0, 3.0, -4.0]);
    }

    #[test]
    fn derivative_drops_one_order() {
        let s = series(vec![5.0, 1.0, 2.0, 3.0]);
        assert_eq!(s.derivative().coeffs(), &[1.0, 4.0, 9.0]);
    }

    fn coeff_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 6)
    }

    proptest! {
        #[test]
        fn ring_axioms(a in coeff_vec(), b in coeff_vec(), c in coeff_vec()) {
            let (a, b, c) = (series(a), series(b), series(c));
            prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-12));
            prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-12));
            prop_assert!(close(&(&a * &b), &(&b * &a), 1e-12));
            prop_assert!(close(&(&(&a + &b) - &b), &a, 1e-12));
        }

        #[test]
        fn division_inverts_multiplication(mut a in coeff_vec(), b in coeff_vec()) {
            a[0] = a[0].signum() * (a[0].abs() + 0.5);
            let (a, b) = (series(a), series(b));
            let q = (&b * &a).div(&a).unwrap();
            prop_assert!(close(&q, &b, 1e-9));
        }
    }
}
