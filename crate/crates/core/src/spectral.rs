//! Sample covariance spectra and their Stieltjes transforms.
//!
//! For a sample covariance `S_n` with eigenpairs `(λ_i, v_i)` and a reference
//! vector `a`, three transforms drive everything downstream:
//!
//! * `m_n(z)  = (1/p) Σ 1/(λ_i − z)` over all `p` eigenvalues (zeros included),
//! * `u_n(z)  = −(1 − c_n)/z + c_n m_n(z)`, the companion transform,
//! * `s_n(z)  = Σ w_i/(λ_i − z)` with `w_i = (aᵀv_i)²`.
//!
//! Between consecutive distinct nonzero eigenvalues the companion transform
//! increases strictly from `−∞` to `+∞`, and it tends to `−∞` as `z → 0⁺`
//! because its `−1/z` coefficient is `(n − ψ)/n > 0`. Each interval
//! `(λ_{i+1}, λ_i)` and `(0, λ_ψ)` therefore holds exactly one zero `η_i`.

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex64, ComplexFloat};
use serde::Serialize;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Relative threshold below which eigenvalues are treated as exact zeros.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Relative gap below which neighbouring eigenvalues are merged into one atom.
pub const MERGE_TOLERANCE: f64 = 1e-10;
/// Highest derivative order the jets support.
pub const MAX_JET_ORDER: usize = 12;

const POLE_CLEARANCE: f64 = 1e-9;
const BISECTION_WIDTH: f64 = 1e-10;
const NEWTON_STEPS: usize = 40;

/// `S_n = (1/(n−1)) Σ (x_i − x̄)(x_i − x̄)ᵀ`.
pub fn sample_covariance(x: &DataMatrix) -> DMatrix<f64> {
    let y = x.centered();
    let s = y.tr_mul(&y) / (x.n() as f64 - 1.0);
    (&s + s.transpose()) * 0.5
}

/// A distinct nonzero eigenvalue with its multiplicity and summed projection weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub value: f64,
    pub multiplicity: usize,
    pub weight: f64,
}

/// Eigenvalues of a sample covariance matrix together with the squared
/// projections of a reference vector onto the eigenvectors.
#[derive(Debug, Clone, Serialize)]
pub struct SampleSpectrum {
    /// Nonzero eigenvalues, descending.
    lambdas: Vec<f64>,
    /// `(aᵀv_i)²` for each nonzero eigenvalue.
    weights: Vec<f64>,
    /// Total projection weight on the null space.
    null_weight: f64,
    p: usize,
    n: usize,
    ref_vector: DVector<f64>,
    atoms: Vec<Atom>,
}

impl SampleSpectrum {
    /// Decomposes a covariance matrix built from `n` observations; `a` must be a unit vector.
    pub fn decompose(s: &DMatrix<f64>, a: &DVector<f64>, n: usize) -> Result<Self> {
        check_unit(a)?;
        Self::decompose_with_vector(s, a, n)
    }

    /// Like [`decompose`](Self::decompose) but accepts a reference vector of
    /// any length; the weights then sum to `‖v‖²`.
    pub fn decompose_with_vector(s: &DMatrix<f64>, v: &DVector<f64>, n: usize) -> Result<Self> {
        let p = s.nrows();
        if s.ncols() != p || v.len() != p {
            return Err(Error::InvalidDimension(format!(
                "covariance is {}x{}, vector has length {}",
                s.nrows(),
                s.ncols(),
                v.len()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidInput("need n >= 2".into()));
        }
        let scale = linalg::max_abs(s).max(1.0);
        if linalg::asymmetry(s) > 1e-10 * scale {
            return Err(Error::InvalidInput(
                "covariance matrix is not symmetric".into(),
            ));
        }
        let eig = linalg::sym_eigen(s)?;
        let weights: Vec<f64> = eig
            .vectors
            .column_iter()
            .map(|col| col.dot(v).powi(2))
            .collect();
        Self::assemble(eig.values, weights, v.norm_squared(), p, n, v.clone())
    }

    /// Builds the spectrum of the sample covariance of `x` directly from the
    /// data; `a` must be a unit vector.
    pub fn from_data(x: &DataMatrix, a: &DVector<f64>) -> Result<Self> {
        check_unit(a)?;
        Self::from_data_with_vector(x, a)
    }

    /// Data route for arbitrary reference vectors. When `p > n` the nonzero
    /// spectrum is taken from the `n x n` Gram matrix of the centred data.
    pub fn from_data_with_vector(x: &DataMatrix, v: &DVector<f64>) -> Result<Self> {
        let (n, p) = (x.n(), x.p());
        if v.len() != p {
            return Err(Error::InvalidDimension(format!(
                "vector has length {}, data has {p} columns",
                v.len()
            )));
        }
        if p <= n {
            return Self::decompose_with_vector(&sample_covariance(x), v, n);
        }
        let y = x.centered();
        let denom = n as f64 - 1.0;
        let gram = {
            let g = (&y * y.transpose()) / denom;
            (&g + g.transpose()) * 0.5
        };
        let eig = linalg::sym_eigen(&gram)?;
        let top = eig.values.first().copied().unwrap_or(0.0);
        if !(top > 0.0) {
            return Err(Error::DegenerateSpectrum(
                "sample covariance is zero".into(),
            ));
        }
        let proj = &y * v;
        let mut values = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (k, &mu) in eig.values.iter().enumerate() {
            if mu <= RANK_TOLERANCE * top {
                break;
            }
            let c = eig.vectors.column(k).dot(&proj) / (denom * mu).sqrt();
            values.push(mu);
            weights.push(c * c);
        }
        Self::assemble(values, weights, v.norm_squared(), p, n, v.clone())
    }

    /// Shared tail of the constructors. `values`/`weights` may include
    /// eigenvalues below the rank threshold; those move to the null space.
    fn assemble(
        values: Vec<f64>,
        weights: Vec<f64>,
        total_weight: f64,
        p: usize,
        n: usize,
        ref_vector: DVector<f64>,
    ) -> Result<Self> {
        let top = values.first().copied().unwrap_or(0.0);
        if !(top > 0.0) {
            return Err(Error::DegenerateSpectrum(
                "sample covariance is zero".into(),
            ));
        }
        let cutoff = RANK_TOLERANCE * top;
        let mut lambdas = Vec::new();
        let mut kept = Vec::new();
        for (lam, w) in values.into_iter().zip(weights) {
            if lam > cutoff {
                lambdas.push(lam);
                kept.push(w);
            }
        }
        let null_weight = (total_weight - kept.iter().sum::<f64>()).max(0.0);
        let atoms = merge_atoms(&lambdas, &kept);
        Ok(Self {
            lambdas,
            weights: kept,
            null_weight,
            p,
            n,
            ref_vector,
            atoms,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Aspect ratio `p/n`.
    pub fn cn(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// Number of nonzero eigenvalues.
    pub fn psi(&self) -> usize {
        self.lambdas.len()
    }

    /// All `p` eigenvalues, descending, with the null space as trailing zeros.
    pub fn lambdas(&self) -> Vec<f64> {
        let mut all = self.lambdas.clone();
        all.resize(self.p, 0.0);
        all
    }

    pub fn nonzero_lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Weights paired with [`nonzero_lambdas`](Self::nonzero_lambdas).
    pub fn nonzero_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn null_weight(&self) -> f64 {
        self.null_weight
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.null_weight
    }

    pub fn ref_vector(&self) -> &DVector<f64> {
        &self.ref_vector
    }

    /// Distinct nonzero eigenvalues, descending.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Largest eigenvalue.
    pub fn top(&self) -> f64 {
        self.lambdas[0]
    }

    /// `aᵀ S_n a = Σ λ_i w_i`.
    pub fn quadratic(&self) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| l * w)
            .sum()
    }

    /// Same spectrum with every weight multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= factor);
        out.null_weight *= factor;
        out.atoms.iter_mut().for_each(|a| a.weight *= factor);
        out.ref_vector *= factor.sqrt();
        out
    }

    /// The same eigenvalues with weight `1/p` on every eigenvector, so that the
    /// weighted spectral measure is the plain ESD of `S_n`.
    pub fn uniform(&self) -> Self {
        let p = self.p as f64;
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w = 1.0 / p);
        out.null_weight = (self.p - self.psi()) as f64 / p;
        out.atoms
            .iter_mut()
            .for_each(|a| a.weight = a.multiplicity as f64 / p);
        out.ref_vector = DVector::from_element(self.p, 1.0 / p.sqrt());
        out
    }

    /// Coefficient of the `−1/z` term of `u_n`: `(n − ψ)/n`.
    fn pole_at_zero(&self) -> f64 {
        (self.n - self.psi()) as f64 / self.n as f64
    }

    fn check_point(&self, z: Complex64) -> Result<()> {
        if z.norm() <= POLE_CLEARANCE {
            return Err(Error::Pole {
                z: z.re,
                lambda: 0.0,
            });
        }
        for a in &self.atoms {
            if (z - a.value).norm() <= POLE_CLEARANCE {
                return Err(Error::Pole {
                    z: z.re,
                    lambda: a.value,
                });
            }
        }
        Ok(())
    }

    /// Taylor coefficients of `m_n`, `u_n` and `s_n` at `z`, orders `0..=order`.
    pub fn taylor<T>(&self, z: T, order: usize) -> Result<Taylor<T>>
    where
        T: ComplexFloat<Real = f64> + From<f64> + Into<Complex64>,
    {
        if order > MAX_JET_ORDER {
            return Err(Error::UnsupportedOrder {
                requested: order,
                max: MAX_JET_ORDER,
            });
        }
        self.check_point(z.into())?;
        Ok(self.taylor_unchecked(z, order))
    }

    fn taylor_unchecked<T>(&self, z: T, order: usize) -> Taylor<T>
    where
        T: ComplexFloat<Real = f64> + From<f64>,
    {
        let zero = lift::<T>(0.0);
        let mut sum_m = vec![zero; order + 1];
        let mut s = vec![zero; order + 1];
        for a in &self.atoms {
            let inv = (lift::<T>(a.value) - z).recip();
            let mut pw = inv;
            for k in 0..=order {
                sum_m[k] = sum_m[k] + pw * lift::<T>(a.multiplicity as f64);
                s[k] = s[k] + pw * lift::<T>(a.weight);
                pw = pw * inv;
            }
        }
        // 1/(0 − z) expanded about z: coefficient k is −(−1)^k / z^{k+1} = −(−1/z)^k / z.
        let null_dim = (self.p - self.psi()) as f64;
        let zinv = z.recip();
        let mut neg_pow = zinv; // (−1)^k / z^{k+1}
        let (p, n) = (self.p as f64, self.n as f64);
        let c0 = self.pole_at_zero();
        let mut m = vec![zero; order + 1];
        let mut u = vec![zero; order + 1];
        for k in 0..=order {
            let null_term = -neg_pow;
            m[k] = (sum_m[k] + null_term * lift::<T>(null_dim)) / lift::<T>(p);
            s[k] = s[k] + null_term * lift::<T>(self.null_weight);
            u[k] = null_term * lift::<T>(c0) + sum_m[k] / lift::<T>(n);
            neg_pow = -(neg_pow * zinv);
        }
        Taylor { m, u, s }
    }

    /// Derivative jets of the three transforms at `z`.
    pub fn jet<T>(&self, z: T, order: usize) -> Result<StieltjesJet<T>>
    where
        T: ComplexFloat<Real = f64> + From<f64> + Into<Complex64>,
    {
        let t = self.taylor(z, order)?;
        let mut fact = 1.0;
        let mut m = t.m;
        let mut um = t.u;
        let mut s = t.s;
        for k in 0..=order {
            if k > 0 {
                fact *= k as f64;
            }
            m[k] = m[k] * lift::<T>(fact);
            um[k] = um[k] * lift::<T>(fact);
            s[k] = s[k] * lift::<T>(fact);
        }
        Ok(StieltjesJet {
            point: z,
            order,
            m,
            um,
            s,
        })
    }

    /// `(u_n(x), u_n'(x))` at a real point, for root finding.
    pub fn companion(&self, x: f64) -> (f64, f64) {
        let c0 = self.pole_at_zero();
        let mut u = -c0 / x;
        let mut du = c0 / (x * x);
        let inv_n = 1.0 / self.n as f64;
        for a in &self.atoms {
            let r = 1.0 / (a.value - x);
            let m = a.multiplicity as f64 * inv_n;
            u += m * r;
            du += m * r * r;
        }
        (u, du)
    }

    /// Sample VESD as `(eigenvalue, weight)` pairs, including a zero atom for the null space.
    pub fn vesd(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.atoms.iter().map(|a| (a.value, a.weight)).collect();
        if self.p > self.psi() {
            out.push((0.0, self.null_weight));
        }
        out
    }
}

fn lift<T: From<f64>>(x: f64) -> T {
    T::from(x)
}

fn check_unit(a: &DVector<f64>) -> Result<()> {
    let norm = a.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "reference vector must have unit norm, got {norm}"
        )));
    }
    Ok(())
}

fn merge_atoms(lambdas: &[f64], weights: &[f64]) -> Vec<Atom> {
    let Some(&top) = lambdas.first() else {
        return Vec::new();
    };
    let tol = MERGE_TOLERANCE * top;
    let mut atoms: Vec<Atom> = Vec::new();
    for (&value, &weight) in lambdas.iter().zip(weights) {
        match atoms.last_mut() {
            Some(last) if last.value - value <= tol => {
                last.multiplicity += 1;
                last.weight += weight;
            }
            _ => atoms.push(Atom {
                value,
                multiplicity: 1,
                weight,
            }),
        }
    }
    atoms
}

/// Taylor coefficients (not derivatives) of the transforms at a point.
#[derive(Debug, Clone)]
pub struct Taylor<T> {
    pub m: Vec<T>,
    pub u: Vec<T>,
    pub s: Vec<T>,
}

/// Derivatives `f^{(0..=order)}(z)` of `m_n`, `u_n` and `s_n`.
#[derive(Debug, Clone)]
pub struct StieltjesJet<T> {
    pub point: T,
    pub order: usize,
    pub m: Vec<T>,
    pub um: Vec<T>,
    pub s: Vec<T>,
}

/// Zeros of the companion transform, descending.
#[derive(Debug, Clone, Serialize)]
pub struct EtaZeros {
    pub etas: Vec<f64>,
}

impl EtaZeros {
    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }
}

/// Locates the zero of `u_n` inside every interlacing interval.
pub fn find_eta_zeros(spec: &SampleSpectrum) -> Result<EtaZeros> {
    let atoms = spec.atoms();
    if atoms.is_empty() {
        return Err(Error::DegenerateSpectrum("no nonzero eigenvalues".into()));
    }
    let floor = 1e-12 * spec.top();
    let mut etas = Vec::with_capacity(atoms.len());
    for (i, hi) in atoms.iter().enumerate() {
        let lo = atoms.get(i + 1).map_or(floor, |a| a.value);
        etas.push(refine_root(spec, lo, hi.value, i + 1 == atoms.len())?);
    }
    Ok(EtaZeros { etas })
}

fn refine_root(spec: &SampleSpectrum, lo0: f64, hi0: f64, last: bool) -> Result<f64> {
    let f = |x: f64| spec.companion(x).0;
    let pad = (1e-10 * (hi0 - lo0)).max(4.0 * f64::EPSILON * hi0);
    // The lower end of the last interval is a real evaluation point, not a pole.
    let probe_lo = if last { lo0 } else { lo0 + pad };
    let probe_hi = hi0 - pad;
    if !(f(probe_lo) < 0.0 && f(probe_hi) > 0.0) {
        return Err(Error::Bracket { lo: lo0, hi: hi0 });
    }
    let (mut lo, mut hi) = (probe_lo, probe_hi);
    let width = BISECTION_WIDTH * spec.top().max(1.0);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..NEWTON_STEPS {
        let (u, du) = spec.companion(x);
        if u == 0.0 {
            return Ok(x);
        }
        if u < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let step = u / du;
        let next = x - step;
        if next > lo && next < hi {
            x = next;
            if step.abs() <= 2.0 * f64::EPSILON * x {
                return Ok(x);
            }
        } else {
            x = 0.5 * (lo + hi);
        }
    }
    // Ill-conditioned roots: finish by bisection down to adjacent floats.
    loop {
        let u = f(x);
        if u == 0.0 {
            return Ok(x);
        }
        if u < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Pick the endpoint with the smaller residual.
            return Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi });
        }
        x = mid;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag_spectrum(lams: &[f64], a: &[f64], n: usize) -> SampleSpectrum {
        let s = DMatrix::from_diagonal(&DVector::from_row_slice(lams));
        SampleSpectrum::decompose(&s, &DVector::from_row_slice(a), n).unwrap()
    }

    fn random_data(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(DMatrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0))).unwrap()
    }

    fn unit(p: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0)).normalize()
    }

    #[test]
    fn covariance_two_points() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let s = sample_covariance(&x);
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn covariance_identical_rows_vanishes() {
        let x = DataMatrix::from_rows(&vec![vec![3.0, -1.0, 2.0]; 4]).unwrap();
        assert!(sample_covariance(&x).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariance_matches_entrywise_sum() {
        let rows = [[1.0, 2.0], [3.0, 4.0], [5.0, 0.0]];
        let x =
            DataMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        let s = sample_covariance(&x);
        let mean = [3.0, 2.0];
        for i in 0..2 {
            for j in 0..2 {
                let direct: f64 = rows
                    .iter()
                    .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                    .sum::<f64>()
                    / 2.0;
                assert!((s[(i, j)] - direct).abs() < 1e-14);
            }
        }
        // By hand: var(x1) = 4, var(x2) = 4, cov = -2.
        assert!((s[(0, 0)] - 4.0).abs() < 1e-14);
        assert!((s[(0, 1)] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn covariance_rank_is_bounded() {
        let x = random_data(4, 7, 1);
        let s = sample_covariance(&x);
        let spec = SampleSpectrum::decompose(&s, &unit(7, 2), 4).unwrap();
        assert_eq!(spec.psi(), 3);
        assert!(linalg::asymmetry(&s) < 1e-12);
    }

    #[test]
    fn identity_spectrum() {
        let spec = diag_spectrum(&[1.0, 1.0], &[1.0, 0.0], 10);
        assert_eq!(spec.lambdas(), vec![1.0, 1.0]);
        assert!((spec.total_weight() - 1.0).abs() < 1e-12);
        assert_eq!(spec.atoms().len(), 1);
        assert_eq!(spec.atoms()[0].multiplicity, 2);
    }

    #[test]
    fn axis_aligned_weights() {
        let spec = diag_spectrum(&[3.0, 1.0], &[0.0, 1.0], 10);
        assert_eq!(spec.lambdas(), vec![3.0, 1.0]);
        assert!(spec.nonzero_weights()[0].abs() < 1e-15);
        assert!((spec.nonzero_weights()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decompose_rejects_bad_inputs() {
        let s = DMatrix::<f64>::identity(2, 2);
        let err =
            SampleSpectrum::decompose(&s, &DVector::from_row_slice(&[1.0, 1.0]), 5).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let err =
            SampleSpectrum::decompose(&asym, &DVector::from_row_slice(&[1.0, 0.0]), 5).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn eigenpairs_reconstruct_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let s = &b * b.transpose();
        let eig = linalg::sym_eigen(&s).unwrap();
        let mut back = DMatrix::zeros(4, 4);
        for (i, lam) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(i);
            back += *lam * v * v.transpose();
            let resid = (&s * v - *lam * v).norm();
            assert!(resid <= 1e-8 * eig.values[0].max(1.0));
        }
        assert!((back - &s).norm() < 1e-8 * eig.values[0]);
        let spec = SampleSpectrum::decompose(&s, &unit(4, 3), 9).unwrap();
        assert!((spec.total_weight() - 1.0).abs() < 1e-10);
        assert!(spec.nonzero_weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn gram_route_matches_covariance_route() {
        let x = random_data(6, 11, 4);
        let a = unit(11, 5);
        let direct = SampleSpectrum::decompose(&sample_covariance(&x), &a, 6).unwrap();
        let gram = SampleSpectrum::from_data(&x, &a).unwrap();
        assert_eq!(direct.psi(), 5);
        assert_eq!(gram.psi(), 5);
        for (l, r) in direct.nonzero_lambdas().iter().zip(gram.nonzero_lambdas()) {
            assert!((l - r).abs() < 1e-12);
        }
        for (l, r) in direct.nonzero_weights().iter().zip(gram.nonzero_weights()) {
            assert!((l - r).abs() < 1e-12);
        }
        assert!((direct.null_weight() - gram.null_weight()).abs() < 1e-12);
    }

    #[test]
    fn constant_data_is_degenerate() {
        let x = DataMatrix::from_rows(&vec![vec![1.0, 2.0, 3.0]; 3]).unwrap();
        let err = SampleSpectrum::from_data(&x, &unit(3, 1)).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum(_)));
    }

    #[test]
    fn jet_simple_values() {
        let spec = diag_spectrum(&[1.0, 1.0], &[1.0, 0.0], 10);
        let j = spec.jet(2.0, 0).unwrap();
        assert!((j.m[0] + 1.0).abs() < 1e-15);
        let spec = diag_spectrum(&[2.0, 1.0], &[1.0, 0.0], 10);
        let j = spec.jet(3.0, 0).unwrap();
        assert!((j.s[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn jet_matches_closed_forms() {
        let x = random_data(5, 8, 11);
        let spec = SampleSpectrum::from_data(&x, &unit(8, 12)).unwrap();
        let lams = spec.lambdas();
        let z = 0.37;
        let jet = spec.jet(z, 6).unwrap();
        let cn = spec.cn();
        let mut fact = 1.0;
        for k in 0..=6 {
            if k > 0 {
                fact *= k as f64;
            }
            let m: f64 = fact / 8.0
                * lams
                    .iter()
                    .map(|l| (l - z).powi(-(k as i32 + 1)))
                    .sum::<f64>();
            assert!(
                (jet.m[k] - m).abs() <= 1e-10 * m.abs().max(1.0),
                "order {k}"
            );
        }
        let um0 = -(1.0 - cn) / z + cn * jet.m[0];
        assert!((jet.um[0] - um0).abs() <= 1e-12 * um0.abs().max(1.0));
    }

    #[test]
    fn jet_derivative_matches_finite_difference() {
        let x = random_data(7, 5, 21);
        let spec = SampleSpectrum::from_data(&x, &unit(5, 22)).unwrap();
        let z = spec.top() * 1.3;
        let h = 1e-6;
        for order in 0..4 {
            let j = spec.jet(z, order + 1).unwrap();
            let jp = spec.jet(z + h, order).unwrap();
            let jm = spec.jet(z - h, order).unwrap();
            for (d, lo, hi) in [
                (&j.m, &jm.m, &jp.m),
                (&j.um, &jm.um, &jp.um),
                (&j.s, &jm.s, &jp.s),
            ] {
                let fd = (hi[order] - lo[order]) / (2.0 * h);
                assert!(
                    (fd - d[order + 1]).abs() <= 1e-5 * d[order + 1].abs().max(1e-8),
                    "order {order}"
                );
            }
        }
    }

    #[test]
    fn jet_rejects_poles_and_high_orders() {
        let spec = diag_spectrum(&[2.0, 1.0], &[1.0, 0.0], 10);
        assert!(matches!(spec.jet(2.0, 1), Err(Error::Pole { .. })));
        assert!(matches!(
            spec.jet(2.5, 13),
            Err(Error::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn complex_jet_agrees_with_real_on_axis() {
        let x = random_data(6, 4, 31);
        let spec = SampleSpectrum::from_data(&x, &unit(4, 32)).unwrap();
        let z = spec.top() + 0.5;
        let r = spec.jet(z, 3).unwrap();
        let c = spec.jet(Complex64::new(z, 0.0), 3).unwrap();
        for k in 0..=3 {
            assert!((r.um[k] - c.um[k].re).abs() < 1e-12 * r.um[k].abs().max(1.0));
        }
    }

    #[test]
    fn single_eigenvalue_root_is_half() {
        // p = 1, n = 2: u(z) = -0.5/z + 0.5/(λ - z), root λ/2.
        let spec = diag_spectrum(&[3.0], &[1.0], 2);
        let etas = find_eta_zeros(&spec).unwrap();
        assert_eq!(etas.len(), 1);
        assert!((etas.etas[0] - 1.5).abs() < 1e-12);
    }

    fn bisect_oracle(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn two_eigenvalue_roots_match_bisection() {
        let spec = diag_spectrum(&[3.0, 1.0], &[1.0, 0.0], 5);
        let f = |z: f64| -0.6 / z + 0.2 * (1.0 / (3.0 - z) + 1.0 / (1.0 - z));
        let etas = find_eta_zeros(&spec).unwrap();
        let r1 = bisect_oracle(f, 1.0 + 1e-14, 3.0 - 1e-14);
        let r2 = bisect_oracle(f, 1e-14, 1.0 - 1e-14);
        assert!((etas.etas[0] - r1).abs() < 1e-12);
        assert!((etas.etas[1] - r2).abs() < 1e-12);
    }

    #[test]
    fn wide_data_has_psi_roots() {
        // p = 4, n = 2: one nonzero eigenvalue, one root in (0, λ1).
        let x = random_data(2, 4, 41);
        let spec = SampleSpectrum::from_data(&x, &unit(4, 42)).unwrap();
        assert_eq!(spec.psi(), 1);
        let etas = find_eta_zeros(&spec).unwrap();
        assert_eq!(etas.len(), 1);
        assert!(etas.etas[0] > 0.0 && etas.etas[0] < spec.top());
    }

    #[test]
    fn companion_sign_pattern_around_poles() {
        let x = random_data(12, 20, 51);
        let spec = SampleSpectrum::from_data(&x, &unit(20, 52)).unwrap();
        for a in spec.atoms() {
            let eps = 1e-9 * a.value;
            assert!(spec.companion(a.value + eps).0 < 0.0);
            assert!(spec.companion(a.value - eps).0 > 0.0);
        }
        assert!(spec.companion(1e-12 * spec.top()).0 < 0.0);
    }

    #[test]
    fn merged_ties_reduce_root_count() {
        let spec = diag_spectrum(&[2.0, 2.0, 1.0], &[0.6, 0.8, 0.0], 10);
        assert_eq!(spec.atoms().len(), 2);
        assert!((spec.atoms()[0].weight - 1.0).abs() < 1e-12);
        let etas = find_eta_zeros(&spec).unwrap();
        assert_eq!(etas.len(), 2);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(40))]
        #[test]
        fn roots_interlace_and_vanish(n in 3usize..30, p in 2usize..30, seed in 0u64..1000) {
            let x = random_data(n, p, seed);
            let spec = SampleSpectrum::from_data(&x, &unit(p, seed + 1)).unwrap();
            let etas = find_eta_zeros(&spec).unwrap();
            let atoms = spec.atoms();
            proptest::prop_assert_eq!(etas.len(), atoms.len());
            for (i, eta) in etas.etas.iter().enumerate() {
                proptest::prop_assert!(*eta < atoms[i].value);
                let lower = atoms.get(i + 1).map_or(0.0, |a| a.value);
                proptest::prop_assert!(*eta > lower);
                proptest::prop_assert!(spec.companion(*eta).0.abs() < 1e-11);
            }
        }

        #[test]
        fn weights_sum_to_one(n in 2usize..20, p in 1usize..25, seed in 0u64..1000) {
            let x = random_data(n, p, seed);
            let spec = SampleSpectrum::from_data(&x, &unit(p, seed + 7)).unwrap();
            proptest::prop_assert!((spec.total_weight() - 1.0).abs() < 1e-10);
            proptest::prop_assert_eq!(spec.psi(), p.min(n - 1));
        }
    }
}
