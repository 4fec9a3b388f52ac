//! Simulation designs and the replication harness.
//!
//! A [`ScenarioConfig`] fixes the data model, covariance, vector, dimensions,
//! estimator tuning and seed of one cell. Replication `r` of a cell draws its
//! data from a ChaCha8 stream seeded with the cell seed and stream id `r`, so
//! results do not depend on how replications are scheduled across threads.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_mcc, estimate_sharpe, estimate_tau, EstimatorConfig, EstimatorReport, SupportInterval,
    Target,
};
use crate::linalg;
use crate::recovery::wasserstein1;
use crate::residue::MAX_MOMENTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// `z` with i.i.d. standard normal entries.
    GaussianIid,
    /// `z = ξ u / √(d + 1)` with `ξ ~ Gamma(d, 1)` and `u` uniform on the sphere.
    EllipticalGamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovCase {
    /// `diag(2.5 + 2i/p)`.
    Case1,
    /// Tridiagonal, 2.5 on the diagonal and 0.8 beside it.
    Case2,
    /// `diag(3, …, 3, 1.5, …, 1.5)`, half each.
    Case3,
    /// Toeplitz `2 · 0.3^{|i−j|}`.
    Case4,
    /// Toeplitz `r^{|i−j|}`.
    Ar1 {
        r: f64,
    },
    Custom(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorSetting {
    /// First half `√0.8/√p`, second half `√1.2/√p`.
    Dense1,
    /// First eight entries `1/√8`.
    Sparse1,
    /// Every entry `1/√p`.
    Dense2,
    /// `(0.6, 0.8, 0, …)`.
    Sparse2,
    Custom(Vec<f64>),
}

pub fn make_covariance(case: &CovCase, p: usize) -> Result<DMatrix<f64>> {
    if p < 2 {
        return Err(Error::InvalidDimension(format!("need p >= 2, got {p}")));
    }
    let pf = p as f64;
    let m = match case {
        CovCase::Case1 => DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                2.5 + 2.0 * (i + 1) as f64 / pf
            } else {
                0.0
            }
        }),
        CovCase::Case2 => DMatrix::from_fn(p, p, |i, j| match i.abs_diff(j) {
            0 => 2.5,
            1 => 0.8,
            _ => 0.0,
        }),
        CovCase::Case3 => {
            if p % 2 != 0 {
                return Err(Error::InvalidDimension(format!(
                    "case3 needs even p, got {p}"
                )));
            }
            DMatrix::from_fn(p, p, |i, j| match (i == j, i < p / 2) {
                (true, true) => 3.0,
                (true, false) => 1.5,
                _ => 0.0,
            })
        }
        CovCase::Case4 => DMatrix::from_fn(p, p, |i, j| 2.0 * 0.3f64.powi(i.abs_diff(j) as i32)),
        CovCase::Ar1 { r } => {
            if !(r.abs() < 1.0) {
                return Err(Error::InvalidCovariance(format!(
                    "ar1 needs |r| < 1, got {r}"
                )));
            }
            DMatrix::from_fn(p, p, |i, j| r.powi(i.abs_diff(j) as i32))
        }
        CovCase::Custom(rows) => {
            if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                return Err(Error::InvalidDimension(format!(
                    "custom covariance must be {p}x{p}"
                )));
            }
            let m = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
            if linalg::asymmetry(&m) > 1e-12 * linalg::max_abs(&m).max(1.0) {
                return Err(Error::InvalidCovariance(
                    "custom covariance is not symmetric".into(),
                ));
            }
            m
        }
    };
    Ok(m)
}

pub fn make_vector(setting: &VectorSetting, p: usize) -> Result<DVector<f64>> {
    let pf = p as f64;
    let v = match setting {
        VectorSetting::Dense1 => {
            if p % 2 != 0 {
                return Err(Error::InvalidDimension(format!(
                    "dense1 needs even p, got {p}"
                )));
            }
            DVector::from_fn(p, |i, _| {
                if i < p / 2 {
                    (0.8 / pf).sqrt()
                } else {
                    (1.2 / pf).sqrt()
                }
            })
        }
        VectorSetting::Sparse1 => {
            if p < 8 {
                return Err(Error::InvalidDimension(format!(
                    "sparse1 needs p >= 8, got {p}"
                )));
            }
            DVector::from_fn(p, |i, _| if i < 8 { 1.0 / 8f64.sqrt() } else { 0.0 })
        }
        VectorSetting::Dense2 => DVector::from_element(p, 1.0 / pf.sqrt()),
        VectorSetting::Sparse2 => {
            if p < 2 {
                return Err(Error::InvalidDimension(format!(
                    "sparse2 needs p >= 2, got {p}"
                )));
            }
            DVector::from_fn(p, |i, _| match i {
                0 => 0.6,
                1 => 0.8,
                _ => 0.0,
            })
        }
        VectorSetting::Custom(values) => {
            if values.len() != p {
                return Err(Error::InvalidDimension(format!(
                    "custom vector has {} entries, expected {p}",
                    values.len()
                )));
            }
            DVector::from_column_slice(values)
        }
    };
    Ok(v)
}

/// `Σ^{1/2}`, kept diagonal when `Σ` is.
#[derive(Debug, Clone)]
pub enum CovarianceRoot {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl CovarianceRoot {
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let off_diagonal = sigma
            .iter()
            .enumerate()
            .any(|(idx, v)| idx % (sigma.nrows() + 1) != 0 && *v != 0.0);
        if off_diagonal {
            return Ok(Self::Dense(linalg::sym_sqrt(sigma)?));
        }
        let d = sigma.diagonal();
        if let Some(bad) = d.iter().find(|v| **v < 0.0) {
            return Err(Error::InvalidCovariance(format!("negative variance {bad}")));
        }
        Ok(Self::Diagonal(d.map(f64::sqrt)))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(d) => d.len(),
            Self::Dense(m) => m.nrows(),
        }
    }

    /// Rows `z_iᵀ Σ^{1/2}`.
    fn apply(&self, mut z: DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Self::Diagonal(d) => {
                for (j, mut col) in z.column_iter_mut().enumerate() {
                    col *= d[j];
                }
                z
            }
            Self::Dense(r) => z * r,
        }
    }
}

/// Latent draws, one row per observation.
fn draw_latent<R: Rng>(model: Model, n: usize, d: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let mut z = DMatrix::zeros(n, d);
    let gamma = match model {
        Model::GaussianIid => None,
        Model::EllipticalGamma => Some(
            Gamma::new(d as f64, 1.0)
                .map_err(|e| Error::InvalidInput(format!("gamma law: {e}")))?,
        ),
    };
    let mut row = vec![0.0; d];
    for i in 0..n {
        row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let scale = match &gamma {
            None => 1.0,
            Some(g) => {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                let xi: f64 = rng.sample(g);
                xi / (norm * (d as f64 + 1.0).sqrt())
            }
        };
        for (j, v) in row.iter().enumerate() {
            z[(i, j)] = v * scale;
        }
    }
    Ok(z)
}

/// `x_i = μ + Σ^{1/2} z_i` for `i = 1..n`.
pub fn generate_with_root<R: Rng>(
    model: Model,
    root: &CovarianceRoot,
    mu: Option<&DVector<f64>>,
    n: usize,
    rng: &mut R,
) -> Result<DataMatrix> {
    let d = root.dim();
    let z = draw_latent(model, n, d, rng)?;
    let mut x = root.apply(z);
    if let Some(mu) = mu {
        if mu.len() != d {
            return Err(Error::InvalidDimension(
                "mean vector length differs from covariance".into(),
            ));
        }
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col.add_scalar_mut(mu[j]);
        }
    }
    DataMatrix::new(x)
}

/// Draws `n` observations with a fresh ChaCha8 stream seeded by `seed`.
pub fn generate_sample(
    model: Model,
    sigma: &DMatrix<f64>,
    mu: Option<&DVector<f64>>,
    n: usize,
    seed: u64,
) -> Result<DataMatrix> {
    let root = CovarianceRoot::new(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_with_root(model, &root, mu, n, &mut rng)
}

/// The replication stream `rep` of a cell seeded with `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn default_reps() -> usize {
    300
}
fn default_k() -> usize {
    4
}
fn default_delta() -> f64 {
    0.01
}
fn default_true() -> bool {
    true
}
fn default_model() -> Model {
    Model::GaussianIid
}

/// One simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_model")]
    pub model: Model,
    pub cov_case: CovCase,
    pub vector_setting: VectorSetting,
    pub n: usize,
    /// Aspect ratio; `p = round(cn · n)`.
    pub cn: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub interval: SupportInterval,
    #[serde(default)]
    pub seed: u64,
    pub target: Target,
    #[serde(default = "default_true")]
    pub stabilized: bool,
}

impl ScenarioConfig {
    pub fn p(&self) -> usize {
        (self.cn * self.n as f64).round() as usize
    }

    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            k: self.k,
            h: self.h,
            delta: self.delta,
            interval: self.interval,
            stabilized: self.stabilized,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cn > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cn must be positive, got {}",
                self.cn
            )));
        }
        if self.n < 3 {
            return Err(Error::InvalidInput(format!(
                "n must be at least 3, got {}",
                self.n
            )));
        }
        if self.p() < 2 {
            return Err(Error::InvalidDimension(format!(
                "p = round(cn n) = {} is below 2",
                self.p()
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        if self.k == 0 || self.k > MAX_MOMENTS {
            return Err(Error::InvalidInput(format!(
                "k must be in 1..={MAX_MOMENTS}, got {}",
                self.k
            )));
        }
        if let Some(h) = self.h {
            let cap = 1.0 / self.n.max(self.p()) as f64;
            if h > cap {
                return Err(Error::InvalidInput(format!(
                    "h = {h} exceeds 1/max(n, p) = {cap}"
                )));
            }
        }
        self.estimator().validate()
    }

    pub fn cell_id(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        let tag = |v: &serde_json::Value| match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Object(m) => m.keys().next().cloned().unwrap_or_default(),
            other => other.to_string(),
        };
        let model = tag(&serde_json::to_value(self.model).unwrap_or_default());
        let case = tag(&serde_json::to_value(&self.cov_case).unwrap_or_default());
        let vector = tag(&serde_json::to_value(&self.vector_setting).unwrap_or_default());
        let target = tag(&serde_json::to_value(self.target).unwrap_or_default());
        format!("{target}/{model}/{case}/{vector}/cn{}/n{}", self.cn, self.n)
    }
}

/// Population quantities of a cell, computed directly from `Σ` and the vector.
#[derive(Debug, Clone)]
pub struct Population {
    pub p: usize,
    pub root: CovarianceRoot,
    /// Mean of the generated rows (`μ` for the Sharpe design, zero otherwise).
    pub mean: Option<DVector<f64>>,
    pub truth: f64,
    /// Vector spectral distribution of `Σ` along the normalised vector.
    pub vesd: Vec<(f64, f64)>,
    /// `aᵀΣʲa / ‖a‖²` for `j = 1..k`.
    pub moments: Vec<f64>,
}

/// `(eigenvalue, (aᵀu)²)` pairs of `Σ` for a unit vector `a`, ties merged.
pub fn population_vesd(sigma: &DMatrix<f64>, a: &DVector<f64>) -> Result<Vec<(f64, f64)>> {
    let eig = linalg::sym_eigen(sigma)?;
    let mut atoms: Vec<(f64, f64)> = eig
        .values
        .iter()
        .zip(eig.vectors.column_iter())
        .map(|(&l, v)| (l, v.dot(a).powi(2)))
        .collect();
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (l, w) in atoms {
        match merged.last_mut() {
            Some(last) if (l - last.0).abs() <= 1e-12 * l.abs().max(1.0) => last.1 += w,
            _ => merged.push((l, w)),
        }
    }
    let total: f64 = merged.iter().map(|x| x.1).sum();
    merged.iter_mut().for_each(|x| x.1 /= total);
    Ok(merged)
}

impl Population {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let p = cfg.p();
        let sigma = make_covariance(&cfg.cov_case, p)?;
        let v = make_vector(&cfg.vector_setting, p)?;
        let norm2 = v.norm_squared();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidInput("scenario vector is zero".into()));
        }
        let quad = linalg::spd_quadratic(&sigma, &v)?;
        let unit = &v / norm2.sqrt();
        let vesd = population_vesd(&sigma, &unit)?;
        let mut moments = Vec::with_capacity(cfg.k);
        let mut w = unit.clone();
        for _ in 0..cfg.k {
            w = &sigma * w;
            moments.push(unit.dot(&w));
        }
        let (root, mean, truth) = match cfg.target {
            Target::Tau => (CovarianceRoot::new(&sigma)?, None, quad),
            Target::Sharpe => (CovarianceRoot::new(&sigma)?, Some(v), quad),
            Target::Mcc => {
                // Joint covariance of (y, x) with σ_yy = 1.
                if quad >= 1.0 {
                    return Err(Error::InvalidCovariance(format!(
                        "joint covariance of (y, x) is not positive definite (σ_xyᵀΣ⁻¹σ_xy = {quad})"
                    )));
                }
                let joint = DMatrix::from_fn(p + 1, p + 1, |i, j| match (i, j) {
                    (0, 0) => 1.0,
                    (0, j) => v[j - 1],
                    (i, 0) => v[i - 1],
                    (i, j) => sigma[(i - 1, j - 1)],
                });
                (CovarianceRoot::new(&joint)?, None, quad)
            }
        };
        Ok(Self {
            p,
            root,
            mean,
            truth,
            vesd,
            moments,
        })
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub estimate: Option<f64>,
    pub raw_moments: Option<Vec<f64>>,
    pub negative_moments: usize,
    pub lp_residual: Option<f64>,
    /// `W₁` between the recovered and the population VESD.
    pub w1: Option<f64>,
    pub error: Option<String>,
}

/// Aggregate over the replications of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVarianceRow {
    pub cell: String,
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    pub failed: usize,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub variance: f64,
    pub negative_moments: usize,
    pub mean_lp_residual: f64,
    pub mean_w1: f64,
    /// Set when fewer than two replications succeeded; the variance is then 0.
    pub variance_undefined: bool,
    pub wall_time_s: f64,
}

impl BiasVarianceRow {
    /// Column names of [`csv_record`](Self::csv_record). Wall time is left out
    /// so that tables are reproducible byte for byte.
    pub const CSV_HEADER: [&'static str; 13] = [
        "cell",
        "n",
        "p",
        "reps",
        "failed",
        "truth",
        "mean_estimate",
        "bias",
        "variance",
        "negative_moments",
        "mean_lp_residual",
        "mean_w1",
        "variance_undefined",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.cell.clone(),
            self.n.to_string(),
            self.p.to_string(),
            self.reps.to_string(),
            self.failed.to_string(),
            format!("{:?}", self.truth),
            format!("{:?}", self.mean_estimate),
            format!("{:?}", self.bias),
            format!("{:?}", self.variance),
            self.negative_moments.to_string(),
            format!("{:?}", self.mean_lp_residual),
            format!("{:?}", self.mean_w1),
            self.variance_undefined.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: ScenarioConfig,
    pub row: BiasVarianceRow,
    pub population_moments: Vec<f64>,
    pub log: Vec<RepRecord>,
}

/// Runs the estimator on one draw.
pub fn run_one(cfg: &ScenarioConfig, pop: &Population, rep: usize) -> Result<EstimatorReport> {
    let mut rng = replication_rng(cfg.seed, rep as u64);
    let data = generate_with_root(cfg.model, &pop.root, pop.mean.as_ref(), cfg.n, &mut rng)?;
    let est = cfg.estimator();
    match cfg.target {
        Target::Tau => {
            let a = make_vector(&cfg.vector_setting, pop.p)?;
            estimate_tau(&data, &a, &est)
        }
        Target::Sharpe => estimate_sharpe(&data, &est),
        Target::Mcc => {
            let (x, y) = data.split_column(0)?;
            estimate_mcc(&x, &y, &est)
        }
    }
}

fn record(pop: &Population, rep: usize, outcome: Result<EstimatorReport>) -> RepRecord {
    match outcome {
        Ok(r) => RepRecord {
            rep,
            estimate: Some(r.estimate),
            negative_moments: r.moments.negative_count(),
            raw_moments: Some(r.moments.raw.clone()),
            lp_residual: Some(r.vesd.residual),
            w1: wasserstein1(&r.vesd.atoms(), &pop.vesd).ok(),
            error: None,
        },
        Err(e) => RepRecord {
            rep,
            estimate: None,
            raw_moments: None,
            negative_moments: 0,
            lp_residual: None,
            w1: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every replication of a cell, on `jobs` threads when given.
pub fn run_replications(cfg: &ScenarioConfig, jobs: Option<usize>) -> Result<CellResult> {
    cfg.validate()?;
    let start = Instant::now();
    let pop = Population::new(cfg)?;
    let work = || -> Vec<RepRecord> {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| record(&pop, rep, run_one(cfg, &pop, rep)))
            .collect()
    };
    let log = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let row = aggregate(cfg, &pop, &log, start.elapsed().as_secs_f64())?;
    Ok(CellResult {
        config: cfg.clone(),
        row,
        population_moments: pop.moments.clone(),
        log,
    })
}

/// Deterministic reduction in replication order.
pub fn aggregate(
    cfg: &ScenarioConfig,
    pop: &Population,
    log: &[RepRecord],
    wall_time_s: f64,
) -> Result<BiasVarianceRow> {
    let failed = log.iter().filter(|r| r.estimate.is_none()).count();
    if failed * 10 > log.len() {
        return Err(Error::CellAborted {
            cell: cfg.cell_id(),
            failed,
            reps: log.len(),
        });
    }
    let est: Vec<f64> = log.iter().filter_map(|r| r.estimate).collect();
    let m = est.len() as f64;
    let mean = est.iter().sum::<f64>() / m;
    let variance_undefined = est.len() < 2;
    let variance = if variance_undefined {
        0.0
    } else {
        est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    };
    let residuals: Vec<f64> = log.iter().filter_map(|r| r.lp_residual).collect();
    let w1: Vec<f64> = log.iter().filter_map(|r| r.w1).collect();
    let avg = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(BiasVarianceRow {
        cell: cfg.cell_id(),
        n: cfg.n,
        p: pop.p,
        reps: log.len(),
        failed,
        truth: pop.truth,
        mean_estimate: mean,
        bias: mean - pop.truth,
        variance,
        negative_moments: log.iter().map(|r| r.negative_moments).sum(),
        mean_lp_residual: avg(&residuals),
        mean_w1: avg(&w1),
        variance_undefined,
        wall_time_s,
    })
}

/// A scalar or a list, for grid expansion in batch files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// A scenario whose axes may list several values; it expands to their
/// Cartesian product in the order cases, settings, cn, n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTemplate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_model")]
    pub model: Model,
    pub cov_case: OneOrMany<CovCase>,
    pub vector_setting: OneOrMany<VectorSetting>,
    pub n: OneOrMany<usize>,
    pub cn: OneOrMany<f64>,
    #[serde(default)]
    pub reps: Option<usize>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub interval: SupportInterval,
    pub target: Target,
    #[serde(default = "default_true")]
    pub stabilized: bool,
}

/// A batch of scenarios sharing a base seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub scenarios: Vec<ScenarioTemplate>,
}

impl BatchConfig {
    /// Expands templates into cells. Cell `i` gets seed `seed + i`.
    pub fn expand(&self) -> Result<Vec<ScenarioConfig>> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidInput("batch has no scenarios".into()));
        }
        let mut cells = Vec::new();
        for t in &self.scenarios {
            for case in t.cov_case.values() {
                for setting in t.vector_setting.values() {
                    for cn in t.cn.values() {
                        for n in t.n.values() {
                            let mut cfg = ScenarioConfig {
                                name: None,
                                model: t.model,
                                cov_case: case.clone(),
                                vector_setting: setting.clone(),
                                n,
                                cn,
                                reps: t.reps.unwrap_or(self.reps),
                                k: t.k,
                                h: t.h,
                                delta: t.delta,
                                interval: t.interval,
                                seed: self.seed.wrapping_add(cells.len() as u64),
                                target: t.target,
                                stabilized: t.stabilized,
                            };
                            if let Some(prefix) = &t.name {
                                cfg.name = Some(format!("{prefix}/{}", cfg.cell_id()));
                            }
                            cfg.validate()?;
                            cells.push(cfg);
                        }
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::InvalidInput("batch expands to no cells".into()));
        }
        Ok(cells)
    }
}
