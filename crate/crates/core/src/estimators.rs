//! End-to-end estimators: `τ = aᵀΣ⁻¹a` for a known vector, the squared
//! optimal Sharpe ratio `θ = μᵀΣ⁻¹μ`, and the squared multiple correlation
//! `ρ² = σ_xyᵀΣ_xx⁻¹σ_xy/σ_yy`.
//!
//! Each pipeline computes a spectrum, residue-based moments, optionally
//! truncated moments, a VESD estimate from the moment program, and finally
//! `κ̂ ∫ x⁻¹ dF̂`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::recovery::{solve_moment_lp, Functional, VesdEstimate, VesdGrid};
use crate::residue::{
    estimate_moments_known_a, estimate_moments_mcc, estimate_moments_sharpe, truncate_moments,
    MomentVector, MAX_MOMENTS,
};
use crate::spectral::{find_eta_zeros, SampleSpectrum};

/// Scale estimates below this are treated as a missing signal.
pub const ZERO_SIGNAL_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportInterval {
    /// A fixed working interval `(a0, b0)`.
    Fixed { a0: f64, b0: f64 },
    /// `[0.8 η_ψ, 1.2 λ₁]` from the sample spectrum. A crude data-driven
    /// choice; it can miss the population support.
    Heuristic,
    /// `[0.8 d_min, 1.2 d_max]`, the extreme atoms of a moment-program
    /// estimate of the population ESD.
    Spectral,
}

impl Default for SupportInterval {
    fn default() -> Self {
        SupportInterval::Fixed { a0: 0.3, b0: 5.0 }
    }
}

/// Tuning of the moment program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Number of moments matched.
    pub k: usize,
    /// Grid step; defaults to `1/p` and is capped at `1/max(n, p)`.
    pub h: Option<f64>,
    /// Truncation slack `δ`.
    pub delta: f64,
    pub interval: SupportInterval,
    /// Truncate moments and weight the program rows by them.
    pub stabilized: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            k: 4,
            h: None,
            delta: 0.01,
            interval: SupportInterval::default(),
            stabilized: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_MOMENTS {
            return Err(Error::InvalidInput(format!(
                "k must be in 1..={MAX_MOMENTS}, got {}",
                self.k
            )));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if let Some(h) = self.h {
            if !(h > 0.0) {
                return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
            }
        }
        if let SupportInterval::Fixed { a0, b0 } = self.interval {
            if !(a0 > 0.0 && b0 > a0) {
                return Err(Error::InvalidInput(format!(
                    "interval must satisfy 0 < a0 < b0, got ({a0}, {b0})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Tau,
    Sharpe,
    Mcc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub p: usize,
    pub psi: usize,
    pub cn: f64,
    /// Raw moment estimates below zero.
    pub negative_moments: usize,
    pub lp_residual: f64,
    pub lp_iterations: usize,
    /// Working interval actually used.
    pub a0: f64,
    pub b0: f64,
    /// Estimate before any range clamp.
    pub raw_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub target: Target,
    pub estimate: f64,
    pub kappa: f64,
    /// Raw and (when stabilised) truncated moments.
    pub moments: MomentVector,
    pub vesd: VesdEstimate,
    pub diagnostics: Diagnostics,
}

impl EstimatorReport {
    /// A short human-readable summary.
    pub fn summary(&self) -> String {
        let name = match self.target {
            Target::Tau => "tau",
            Target::Sharpe => "theta",
            Target::Mcc => "rho^2",
        };
        let d = &self.diagnostics;
        let mut out = format!(
            "{name} = {:.6}  (kappa = {:.6}, n = {}, p = {}, psi = {})\n",
            self.estimate, self.kappa, d.n, d.p, d.psi
        );
        out += &format!("raw moments:       {:?}\n", self.moments.raw);
        if self.moments.truncated {
            out += &format!("truncated moments: {:?}\n", self.moments.values);
        }
        out += &format!(
            "negative moments: {}  lp residual: {:.3e}  interval: [{}, {}]\n",
            d.negative_moments, d.lp_residual, d.a0, d.b0
        );
        if self.estimate != d.raw_estimate {
            out += &format!("unclamped estimate: {:.6}\n", d.raw_estimate);
        }
        out
    }
}

fn working_interval(spec: &SampleSpectrum, cfg: &EstimatorConfig) -> Result<(f64, f64)> {
    match cfg.interval {
        SupportInterval::Fixed { a0, b0 } => Ok((a0, b0)),
        SupportInterval::Heuristic => {
            let etas = find_eta_zeros(spec)?;
            let low = etas.etas.last().copied().unwrap_or(spec.top());
            Ok((0.8 * low, 1.2 * spec.top()))
        }
        SupportInterval::Spectral => spectral_interval(spec, cfg.k),
    }
}

/// Working interval read off an estimate of the population ESD.
///
/// The ESD is the weighted spectral measure with equal weights, so its
/// moments come from the known-vector estimator applied to
/// [`SampleSpectrum::uniform`]. The program runs on `[α̂₁/10, λ₁]`.
pub fn spectral_interval(spec: &SampleSpectrum, k: usize) -> Result<(f64, f64)> {
    let esd = spec.uniform();
    let moments = estimate_moments_known_a(&esd, k)?;
    let mean = moments.raw[0];
    if !(mean > 0.0) {
        return Err(Error::DegenerateSpectrum(format!(
            "estimated mean eigenvalue {mean} is not positive"
        )));
    }
    let (lo, hi) = (0.1 * mean, spec.top());
    if !(hi > lo) {
        return Err(Error::DegenerateSpectrum(
            "largest eigenvalue below the pilot lower bound".into(),
        ));
    }
    let grid = VesdGrid::for_sample(lo, hi, None, spec.n(), spec.p())?;
    let truncated = truncate_moments(&moments, lo, hi, 0.01);
    let fit = solve_moment_lp(&grid, &truncated, true)?;
    let atoms = fit.atoms();
    let (Some(first), Some(last)) = (atoms.first(), atoms.last()) else {
        return Err(Error::DegenerateSpectrum("empty spectrum estimate".into()));
    };
    Ok((0.8 * first.0, 1.2 * last.0))
}

/// Shared tail: truncation, moment program and plug-in.
fn finish(
    target: Target,
    spec: &SampleSpectrum,
    moments: MomentVector,
    kappa: f64,
    cfg: &EstimatorConfig,
) -> Result<EstimatorReport> {
    let (a0, b0) = working_interval(spec, cfg)?;
    let grid = VesdGrid::for_sample(a0, b0, cfg.h, spec.n(), spec.p())?;
    let moments = if cfg.stabilized {
        truncate_moments(&moments, a0, b0, cfg.delta)
    } else {
        moments
    };
    let vesd = solve_moment_lp(&grid, &moments, cfg.stabilized)?;
    let raw_estimate = kappa * vesd.plugin(Functional::Inverse);
    let estimate = match target {
        Target::Mcc => raw_estimate.clamp(0.0, 1.0),
        _ => raw_estimate,
    };
    Ok(EstimatorReport {
        target,
        estimate,
        kappa,
        diagnostics: Diagnostics {
            n: spec.n(),
            p: spec.p(),
            psi: spec.psi(),
            cn: spec.cn(),
            negative_moments: moments.negative_count(),
            lp_residual: vesd.residual,
            lp_iterations: vesd.lp_iterations,
            a0,
            b0,
            raw_estimate,
        },
        moments,
        vesd,
    })
}

/// Estimates `aᵀΣ⁻¹a` for a unit vector `a`.
pub fn estimate_tau_known_a(
    x: &DataMatrix,
    a: &DVector<f64>,
    cfg: &EstimatorConfig,
) -> Result<EstimatorReport> {
    cfg.validate()?;
    let spec = SampleSpectrum::from_data(x, a)?;
    let moments = estimate_moments_known_a(&spec, cfg.k)?;
    finish(Target::Tau, &spec, moments, 1.0, cfg)
}

/// Estimates `aᵀΣ⁻¹a` for any nonzero `a` as `‖a‖² τ(a/‖a‖)`.
pub fn estimate_tau(
    x: &DataMatrix,
    a: &DVector<f64>,
    cfg: &EstimatorConfig,
) -> Result<EstimatorReport> {
    let norm2 = a.norm_squared();
    if !(norm2 > 0.0) || !norm2.is_finite() {
        return Err(Error::InvalidInput(
            "reference vector must be nonzero".into(),
        ));
    }
    let mut report = estimate_tau_known_a(x, &(a / norm2.sqrt()), cfg)?;
    report.kappa = norm2;
    report.estimate *= norm2;
    report.diagnostics.raw_estimate *= norm2;
    Ok(report)
}

/// `|(1/(n(n−1))) Σ_{i≠j} x_iᵀx_j|`.
pub fn kappa_mu_hat(x: &DataMatrix) -> f64 {
    let m = x.as_matrix();
    let n = x.n() as f64;
    let total = m.row_sum();
    let squares: f64 = m.row_iter().map(|r| r.norm_squared()).sum();
    ((total.norm_squared() - squares) / (n * (n - 1.0))).abs()
}

/// Squared optimal Sharpe ratio `μᵀΣ⁻¹μ`.
pub fn estimate_sharpe(x: &DataMatrix, cfg: &EstimatorConfig) -> Result<EstimatorReport> {
    cfg.validate()?;
    let kappa = kappa_mu_hat(x);
    if kappa < ZERO_SIGNAL_THRESHOLD {
        return Err(Error::ZeroSignal {
            what: "kappa_mu",
            value: kappa,
        });
    }
    let xbar = x.column_means();
    let spec = SampleSpectrum::from_data_with_vector(x, &xbar)?;
    let moments = estimate_moments_sharpe(&spec, kappa, cfg.k)?;
    finish(Target::Sharpe, &spec, moments, kappa, cfg)
}

struct ResponseStats {
    s_yy: f64,
    s_xy: DVector<f64>,
    kappa: f64,
}

fn response_stats(x: &DataMatrix, y: &DVector<f64>) -> Result<ResponseStats> {
    let n = x.n();
    if y.len() != n {
        return Err(Error::InvalidDimension(format!(
            "response has {} entries, data has {n} rows",
            y.len()
        )));
    }
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 observations, got {n}"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "response has non-finite entries".into(),
        ));
    }
    let nf = n as f64;
    let yc = y.add_scalar(-y.mean());
    let s_yy = yc.norm_squared() / (nf - 1.0);
    if !(s_yy > 0.0) {
        return Err(Error::ConstantResponse);
    }
    let xc = x.centered();
    let cross = xc.tr_mul(&yc);
    let diag: f64 = xc
        .row_iter()
        .zip(yc.iter())
        .map(|(r, &v)| v * v * r.norm_squared())
        .sum();
    let kappa = ((cross.norm_squared() - diag) / (nf * (nf - 1.0) * s_yy)).abs();
    Ok(ResponseStats {
        s_yy,
        s_xy: cross / (nf - 1.0),
        kappa,
    })
}

/// `|(1/(n(n−1))) Σ_{i≠j} (y_i − ȳ)(y_j − ȳ)(x_i − x̄)ᵀ(x_j − x̄)| / s_yy`.
pub fn kappa_sigma_hat(x: &DataMatrix, y: &DVector<f64>) -> Result<f64> {
    Ok(response_stats(x, y)?.kappa)
}

/// Squared multiple correlation of `y` on `x`. The reported estimate is
/// clamped to `[0, 1]`; the unclamped value is in the diagnostics.
pub fn estimate_mcc(
    x: &DataMatrix,
    y: &DVector<f64>,
    cfg: &EstimatorConfig,
) -> Result<EstimatorReport> {
    cfg.validate()?;
    let stats = response_stats(x, y)?;
    if stats.kappa < ZERO_SIGNAL_THRESHOLD {
        return Err(Error::ZeroSignal {
            what: "kappa_sigma",
            value: stats.kappa,
        });
    }
    let v = &stats.s_xy / stats.s_yy.sqrt();
    let spec = SampleSpectrum::from_data_with_vector(x, &v)?;
    let moments = estimate_moments_mcc(&spec, stats.kappa, cfg.k)?;
    finish(Target::Mcc, &spec, moments, stats.kappa, cfg)
}

/// `aᵀS⁺a` with `S⁺` the Moore–Penrose pseudoinverse of the sample covariance.
pub fn pseudoinverse_quadratic(x: &DataMatrix, a: &DVector<f64>) -> Result<f64> {
    let spec = SampleSpectrum::from_data_with_vector(x, a)?;
    Ok(pinv_form(&spec))
}

fn pinv_form(spec: &SampleSpectrum) -> f64 {
    spec.nonzero_lambdas()
        .iter()
        .zip(spec.nonzero_weights())
        .map(|(l, w)| w / l)
        .sum()
}

/// In-sample `R² = s_xyᵀ S_xx⁺ s_xy / s_yy`, which is identically 1 when `p > n`.
pub fn pseudo_r2_degenerate(x: &DataMatrix, y: &DVector<f64>) -> Result<f64> {
    if x.p() <= x.n() {
        return Err(Error::WrongRegime { p: x.p(), n: x.n() });
    }
    let stats = response_stats(x, y)?;
    let spec = SampleSpectrum::from_data_with_vector(x, &stats.s_xy)?;
    Ok(pinv_form(&spec) / stats.s_yy)
}
