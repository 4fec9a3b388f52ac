//! Moment estimators for the vector spectral distribution, computed as exact
//! residue sums.
//!
//! Every estimator is a contour integral of a meromorphic function built from
//! `u = u_n` (the companion transform) and a weighted transform `s`. Its
//! poles sit at the nonzero sample eigenvalues and at the zeros `η_i` of `u`.
//! At a simple zero `η` write `u(z) = (z − η) h(z)` with `h(η) = u'(η) ≠ 0`;
//! then for an integrand `N(z)/u(z)^q` with `N` analytic at `η`,
//!
//! ```text
//! Res(N/u^q, η) = [(z − η)^{q−1}] N(z) h(z)^{−q}
//! ```
//!
//! which is one coefficient of a product of truncated Taylor series.
//!
//! | kind     | integrand              | `q`   | numerator `N`         |
//! |----------|------------------------|-------|-----------------------|
//! | known-a  | `z s u' / u^{j+1}`     | `j+1` | `z · s · u'`          |
//! | sr-c1    | same as known-a        | `j+1` | `z · s · u'`          |
//! | sr-c2    | `z u' / u^{j+1}`       | `j+1` | `z · u'`              |
//! | mcc      | `(s−1) u' / (z u^{j+3})` | `j+3` | `(s − 1) · u' · z⁻¹` |
//!
//! The eigenvalue poles only matter for the known-a integrand at `j = 1`,
//! where a distinct eigenvalue `λ` of multiplicity `m` and weight `W`
//! contributes `−n λ W / m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;
use crate::spectral::{find_eta_zeros, EtaZeros, SampleSpectrum, Taylor, MAX_JET_ORDER};

/// Largest number of moments the estimators accept.
pub const MAX_MOMENTS: usize = 8;

const DEGENERATE_DERIVATIVE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidueKind {
    KnownA,
    SrC1,
    SrC2,
    Mcc,
}

impl ResidueKind {
    /// Order of the zero of `u` in the denominator.
    fn denominator_power(self, j: usize) -> usize {
        match self {
            ResidueKind::Mcc => j + 3,
            _ => j + 1,
        }
    }

    /// Highest Taylor order of `u` needed for moment `j`.
    pub fn jet_order(self, j: usize) -> usize {
        self.denominator_power(j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentKind {
    KnownA,
    Sharpe,
    Mcc,
}

/// Residue contributions behind one moment estimate, before the sign and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTerms {
    pub j: usize,
    /// Sum of residues at the nonzero eigenvalues.
    pub lambda_residues: f64,
    /// Sum of residues at the zeros of the companion transform.
    pub eta_residues: f64,
    /// Sharpe-ratio correction term (zero for the other kinds).
    pub correction: f64,
}

/// Estimated moments `α̂_1..α̂_k` of a vector spectral distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub kind: MomentKind,
    /// Estimates straight from the residue sums.
    pub raw: Vec<f64>,
    /// Current values: equal to `raw` unless truncated.
    pub values: Vec<f64>,
    pub truncated: bool,
    pub breakdown: Vec<MomentTerms>,
}

impl MomentVector {
    pub fn from_values(kind: MomentKind, values: Vec<f64>) -> Self {
        Self {
            kind,
            raw: values.clone(),
            values,
            truncated: false,
            breakdown: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Number of raw estimates below zero.
    pub fn negative_count(&self) -> usize {
        self.raw.iter().filter(|&&v| v < 0.0).count()
    }
}

/// Residue at one zero of the companion transform.
pub fn residue_at_eta(spec: &SampleSpectrum, eta: f64, j: usize, kind: ResidueKind) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidInput("moment order starts at 1".into()));
    }
    let order = kind.jet_order(j);
    if order > MAX_JET_ORDER {
        return Err(Error::UnsupportedOrder {
            requested: order,
            max: MAX_JET_ORDER,
        });
    }
    let taylor = spec.taylor(eta, order)?;
    residue_from_taylor(&taylor, eta, j, kind)
}

fn residue_from_taylor(t: &Taylor<f64>, eta: f64, j: usize, kind: ResidueKind) -> Result<f64> {
    let q = kind.denominator_power(j);
    // Coefficient index of the residue in N h^{-q}.
    let target = q - 1;
    debug_assert!(t.u.len() > q);
    let u = TruncatedSeries::new(eta, t.u[..=q].to_vec());
    // h = u/(z − η); the constant term u(η) is zero up to rounding.
    let h = TruncatedSeries::new(eta, t.u[1..=q].to_vec());
    let h0 = h.coeff(0);
    if h0.abs() < DEGENERATE_DERIVATIVE {
        return Err(Error::DegenerateRoot {
            eta,
            derivative: h0,
        });
    }
    let du = u.derivative();
    let s = TruncatedSeries::new(eta, t.s[..=target].to_vec());
    let numerator = match kind {
        ResidueKind::KnownA | ResidueKind::SrC1 => {
            let z = TruncatedSeries::identity(eta, target);
            &(&z * &s) * &du
        }
        ResidueKind::SrC2 => &TruncatedSeries::identity(eta, target) * &du,
        ResidueKind::Mcc => {
            let shifted = &s - &TruncatedSeries::constant(eta, 1.0, target);
            &(&shifted * &du) * &TruncatedSeries::reciprocal_of_z(eta, target)
        }
    };
    let inv = h.powi(-(q as i32)).expect("h(η) checked nonzero");
    Ok((&numerator * &inv).coeff(target))
}

/// Holds the zeros of `u` and the Taylor data at each zero, so that every
/// moment order and residue kind reuses one set of jets.
#[derive(Debug, Clone)]
pub struct ResidueEngine<'a> {
    spec: &'a SampleSpectrum,
    etas: EtaZeros,
    jets: Vec<Taylor<f64>>,
    order: usize,
}

impl<'a> ResidueEngine<'a> {
    /// Prepares jets good for moments up to `k` of the given kinds.
    pub fn new(spec: &'a SampleSpectrum, k: usize, kinds: &[ResidueKind]) -> Result<Self> {
        check_k(k)?;
        let order = kinds
            .iter()
            .map(|kind| kind.jet_order(k))
            .max()
            .unwrap_or(k + 1);
        let etas = find_eta_zeros(spec)?;
        let jets = etas
            .etas
            .iter()
            .map(|&eta| spec.taylor(eta, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            etas,
            jets,
            order,
        })
    }

    pub fn etas(&self) -> &EtaZeros {
        &self.etas
    }

    pub fn residue(&self, i: usize, j: usize, kind: ResidueKind) -> Result<f64> {
        if kind.jet_order(j) > self.order {
            return Err(Error::UnsupportedOrder {
                requested: kind.jet_order(j),
                max: self.order,
            });
        }
        residue_from_taylor(&self.jets[i], self.etas.etas[i], j, kind)
    }

    /// `Σ_i Res(f, η_i)`.
    pub fn eta_sum(&self, j: usize, kind: ResidueKind) -> Result<f64> {
        (0..self.etas.len()).map(|i| self.residue(i, j, kind)).sum()
    }

    /// `Σ Res(z s u'/u^{j+1}, λ)` over the nonzero eigenvalues.
    pub fn lambda_sum(&self, j: usize) -> f64 {
        if j != 1 {
            return 0.0;
        }
        let n = self.spec.n() as f64;
        self.spec
            .atoms()
            .iter()
            .map(|a| -n * a.value * a.weight / a.multiplicity as f64)
            .sum()
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_MOMENTS {
        return Err(Error::InvalidInput(format!(
            "moment count must be in 1..={MAX_MOMENTS}, got {k}"
        )));
    }
    Ok(())
}

fn sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `α̂_j = (−1)^j [Σ Res(f_j, λ_i) + Σ Res(f_j, η_i)]` with `f_j = z s u'/u^{j+1}`.
pub fn estimate_moments_known_a(spec: &SampleSpectrum, k: usize) -> Result<MomentVector> {
    let engine = ResidueEngine::new(spec, k, &[ResidueKind::KnownA])?;
    known_a_with(&engine, k)
}

pub fn known_a_with(engine: &ResidueEngine<'_>, k: usize) -> Result<MomentVector> {
    let mut values = Vec::with_capacity(k);
    let mut breakdown = Vec::with_capacity(k);
    for j in 1..=k {
        let lambda_residues = engine.lambda_sum(j);
        let eta_residues = engine.eta_sum(j, ResidueKind::KnownA)?;
        values.push(sign(j) * (lambda_residues + eta_residues));
        breakdown.push(MomentTerms {
            j,
            lambda_residues,
            eta_residues,
            correction: 0.0,
        });
    }
    Ok(MomentVector {
        kind: MomentKind::KnownA,
        raw: values.clone(),
        values,
        truncated: false,
        breakdown,
    })
}

/// Sharpe-ratio moments. `spec_xbar` carries the weights `(x̄ᵀv_i)²` of the
/// unnormalised sample mean; the result is `(−1)^j κ̂⁻¹ [C₁ + C₂]`, where `C₁`
/// is the known-a residue sum for those weights and `C₂ = Σ Res(z u'/u^{j+1}, η_i)`.
pub fn estimate_moments_sharpe(
    spec_xbar: &SampleSpectrum,
    kappa_mu: f64,
    k: usize,
) -> Result<MomentVector> {
    sharpe_moments(spec_xbar, kappa_mu, k, true)
}

pub(crate) fn sharpe_moments(
    spec: &SampleSpectrum,
    kappa: f64,
    k: usize,
    correct: bool,
) -> Result<MomentVector> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidScale(kappa));
    }
    let engine = ResidueEngine::new(spec, k, &[ResidueKind::SrC1, ResidueKind::SrC2])?;
    let mut values = Vec::with_capacity(k);
    let mut breakdown = Vec::with_capacity(k);
    for j in 1..=k {
        let lambda_residues = engine.lambda_sum(j);
        let eta_residues = engine.eta_sum(j, ResidueKind::SrC1)?;
        let correction = if correct {
            engine.eta_sum(j, ResidueKind::SrC2)?
        } else {
            0.0
        };
        values.push(sign(j) * (lambda_residues + eta_residues + correction) / kappa);
        breakdown.push(MomentTerms {
            j,
            lambda_residues,
            eta_residues,
            correction,
        });
    }
    Ok(MomentVector {
        kind: MomentKind::Sharpe,
        raw: values.clone(),
        values,
        truncated: false,
        breakdown,
    })
}

/// Multiple-correlation moments. `spec_sxy` carries the weights
/// `(s_xyᵀv_i)²/s_yy`; the result is `(−1)^j κ̂_σ⁻¹ Σ Res((s − 1) u'/(z u^{j+3}), η_i)`.
pub fn estimate_moments_mcc(
    spec_sxy: &SampleSpectrum,
    kappa_sigma: f64,
    k: usize,
) -> Result<MomentVector> {
    if !(kappa_sigma > 0.0) {
        return Err(Error::InvalidScale(kappa_sigma));
    }
    let engine = ResidueEngine::new(spec_sxy, k, &[ResidueKind::Mcc])?;
    let mut values = Vec::with_capacity(k);
    let mut breakdown = Vec::with_capacity(k);
    for j in 1..=k {
        let eta_residues = engine.eta_sum(j, ResidueKind::Mcc)?;
        values.push(sign(j) * eta_residues / kappa_sigma);
        breakdown.push(MomentTerms {
            j,
            lambda_residues: 0.0,
            eta_residues,
            correction: 0.0,
        });
    }
    Ok(MomentVector {
        kind: MomentKind::Mcc,
        raw: values.clone(),
        values,
        truncated: false,
        breakdown,
    })
}

/// Clamps moments into the range allowed by `α₁^j ≤ α_j` and `a₀^j < α_j < b₀^j`.
///
/// The lower bound for `j ≥ 2` is `α₁^j − δ`, floored at `a₀^j` so that it
/// stays positive when `α₁` sits near `a₀` and `δ` is not small next to `a₀^j`.
pub fn truncate_moments(m: &MomentVector, a0: f64, b0: f64, delta: f64) -> MomentVector {
    let mut out = m.clone();
    if let Some(first) = out.values.first_mut() {
        *first = first.max(a0).min(b0);
    }
    let first = out.values.first().copied().unwrap_or(0.0);
    for (idx, v) in out.values.iter_mut().enumerate().skip(1) {
        let j = (idx + 1) as i32;
        let lower = (first.powi(j) - delta).max(a0.powi(j));
        *v = v.max(lower).min(b0.powi(j));
    }
    out.truncated = true;
    out
}
