//! Numerical contour integration, used to cross-check the residue sums.
//!
//! The transforms here are evaluated directly from the full eigenvalue list
//! (zeros included) and the definition `u = −(1 − c)/z + c·m`, independent of
//! the atom bookkeeping in [`SampleSpectrum::taylor`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::residue::ResidueKind;
use crate::spectral::{find_eta_zeros, SampleSpectrum};

/// Default number of trapezoidal nodes on a circle.
pub const DEFAULT_NODES: usize = 2048;

/// `(1/2πi) ∮ f(z) dz` around the circle `|z − center| = radius`, trapezoidal rule.
pub fn circle_integral(
    f: impl Fn(Complex64) -> Complex64,
    center: f64,
    radius: f64,
    nodes: usize,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..nodes {
        let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
        acc += f(center + radius * e) * e;
    }
    acc * radius / nodes as f64
}

/// Transforms evaluated pointwise from eigenvalues and weights.
#[derive(Debug, Clone)]
pub struct DirectTransforms {
    lambdas: Vec<f64>,
    weights: Vec<f64>,
    null_weight: f64,
    c: f64,
}

impl DirectTransforms {
    pub fn new(spec: &SampleSpectrum) -> Self {
        Self {
            lambdas: spec.lambdas(),
            weights: spec.nonzero_weights().to_vec(),
            null_weight: spec.null_weight(),
            c: spec.cn(),
        }
    }

    /// `(u(z), u'(z), s(z))`.
    pub fn eval(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let p = self.lambdas.len() as f64;
        let mut m = Complex64::new(0.0, 0.0);
        let mut dm = Complex64::new(0.0, 0.0);
        for &l in &self.lambdas {
            let r = 1.0 / (l - z);
            m += r;
            dm += r * r;
        }
        m /= p;
        dm /= p;
        let u = -(1.0 - self.c) / z + self.c * m;
        let du = (1.0 - self.c) / (z * z) + self.c * dm;
        let mut s = -self.null_weight / z;
        for (&l, &w) in self.lambdas.iter().zip(&self.weights) {
            s += w / (l - z);
        }
        (u, du, s)
    }

    /// The moment integrand of the given kind.
    pub fn integrand(&self, kind: ResidueKind, j: usize, z: Complex64) -> Complex64 {
        let (u, du, s) = self.eval(z);
        match kind {
            ResidueKind::KnownA | ResidueKind::SrC1 => z * s * du / u.powi(j as i32 + 1),
            ResidueKind::SrC2 => z * du / u.powi(j as i32 + 1),
            ResidueKind::Mcc => (s - 1.0) * du / (z * u.powi(j as i32 + 3)),
        }
    }
}

/// Every finite singularity of the moment integrands: `0`, the distinct
/// nonzero eigenvalues and the zeros of `u`.
pub fn singularities(spec: &SampleSpectrum) -> Result<Vec<f64>> {
    let mut pts = vec![0.0];
    pts.extend(spec.atoms().iter().map(|a| a.value));
    pts.extend(find_eta_zeros(spec)?.etas);
    Ok(pts)
}

/// Half the distance from `pole` to the nearest other singularity.
pub fn safe_radius(points: &[f64], pole: f64) -> f64 {
    0.5 * points
        .iter()
        .filter(|&&q| q != pole)
        .map(|q| (q - pole).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Contour estimate of the residue of a moment integrand at `pole`.
///
/// Errors with [`Error::Geometry`] when another singularity lies within
/// twice the radius.
pub fn contour_oracle(
    spec: &SampleSpectrum,
    kind: ResidueKind,
    j: usize,
    pole: f64,
    radius: f64,
    nodes: usize,
) -> Result<f64> {
    let pts = singularities(spec)?;
    if let Some(&other) = pts
        .iter()
        .find(|&&q| q != pole && (q - pole).abs() <= 2.0 * radius)
    {
        return Err(Error::Geometry {
            center: pole,
            radius,
            other,
        });
    }
    let t = DirectTransforms::new(spec);
    Ok(circle_integral(|z| t.integrand(kind, j, z), pole, radius, nodes).re)
}
