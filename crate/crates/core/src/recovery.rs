//! Recovery of a discrete vector spectral distribution from moment estimates.
//!
//! The distribution is approximated on an equally spaced grid `d_1 < … < d_t`
//! of `[a0, b0]` by weights `q ≥ 0` with `Σ q = 1` that minimise the ℓ1
//! moment mismatch `Σ_j |(Mq)_j − α_j|`, where `M[j][i] = d_i^j`. The
//! stabilised variant divides row `j` by a positive truncated moment, so the
//! objective becomes `Σ_j |(Mq)_j / α_j − 1|`.
//!
//! ```
//! use vesd::recovery::{solve_moment_lp, VesdGrid, Functional};
//! use vesd::residue::{MomentKind, MomentVector};
//!
//! let grid = VesdGrid::new(1.0, 3.0, 0.5).unwrap();
//! // Moments of a point mass at 2.
//! let m = MomentVector::from_values(MomentKind::KnownA, vec![2.0, 4.0, 8.0]);
//! let est = solve_moment_lp(&grid, &m, false).unwrap();
//! assert!(est.residual < 1e-9);
//! assert!((est.plugin(Functional::Inverse) - 0.5).abs() < 1e-9);
//! ```

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::residue::MomentVector;
use crate::simplex::{self, LinearProgram, SimplexOptions};

/// Equally spaced grid `d_i = a0 + (i − 1) h`, `i = 1..t`, `t = ⌊(b0 − a0)/h⌋ + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesdGrid {
    pub a0: f64,
    pub b0: f64,
    pub h: f64,
    points: Vec<f64>,
}

impl VesdGrid {
    pub fn new(a0: f64, b0: f64, h: f64) -> Result<Self> {
        if !(a0 > 0.0 && b0 > a0 && b0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "support interval must satisfy 0 < a0 < b0, got ({a0}, {b0})"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grid step must be positive, got {h}"
            )));
        }
        // The small slack keeps (b0 − a0)/h = 47.0000000001 style ratios from losing a point.
        let t = ((b0 - a0) / h + 1e-9).floor() as usize + 1;
        let points = (0..t).map(|i| a0 + i as f64 * h).collect();
        Ok(Self { a0, b0, h, points })
    }

    /// Grid with step `h` (default `1/p`) capped at `1/max(n, p)`.
    pub fn for_sample(a0: f64, b0: f64, h: Option<f64>, n: usize, p: usize) -> Result<Self> {
        let cap = 1.0 / n.max(p) as f64;
        let h = h.unwrap_or(1.0 / p as f64).min(cap);
        Self::new(a0, b0, h)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `k x t` matrix of powers `d_i^j`, `j = 1..k`.
pub fn moment_matrix(grid: &VesdGrid, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, grid.len(), |j, i| grid.points[i].powi(j as i32 + 1))
}

/// A discrete distribution on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesdEstimate {
    pub grid: VesdGrid,
    pub q: Vec<f64>,
    /// ℓ1 objective at `q`, recomputed from the weights.
    pub residual: f64,
    pub stabilized: bool,
    pub lp_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    Inverse,
    Identity,
    Power(i32),
}

impl Functional {
    fn apply(self, x: f64) -> f64 {
        match self {
            Functional::Inverse => 1.0 / x,
            Functional::Identity => x,
            Functional::Power(j) => x.powi(j),
        }
    }
}

impl VesdEstimate {
    /// `Σ q_i g(d_i)`.
    pub fn plugin(&self, g: Functional) -> f64 {
        self.grid
            .points
            .iter()
            .zip(&self.q)
            .map(|(&d, &q)| q * g.apply(d))
            .sum()
    }

    /// Support points with positive weight, as `(location, mass)` pairs.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.grid
            .points
            .iter()
            .zip(&self.q)
            .filter(|(_, &q)| q > 0.0)
            .map(|(&d, &q)| (d, q))
            .collect()
    }

    /// Two-column CSV of grid points and weights.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["d", "q"])?;
        for (d, q) in self.grid.points.iter().zip(&self.q) {
            w.write_record([format!("{d:?}"), format!("{q:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Step CDF evaluated at every grid point.
    pub fn write_cdf<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "cdf"])?;
        let mut acc = 0.0;
        for (d, q) in self.grid.points.iter().zip(&self.q) {
            acc += q;
            w.write_record([format!("{d:?}"), format!("{:?}", acc.min(1.0))])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn lp_residual(m: &DMatrix<f64>, q: &[f64], targets: &[f64], scales: &[f64]) -> f64 {
    (0..m.nrows())
        .map(|j| {
            let row: f64 = m.row(j).iter().zip(q).map(|(a, b)| a * b).sum();
            ((row - targets[j]) / scales[j]).abs()
        })
        .sum()
}

/// Re-solves the moment rows on the support of `q` by least squares with the
/// mass row enforced, dropping points whose weight turns negative. Returns
/// the new weights, or `None` if the support empties.
fn polish_support(
    m: &DMatrix<f64>,
    q: &[f64],
    targets: &[f64],
    scales: &[f64],
) -> Option<Vec<f64>> {
    let mut support: Vec<usize> = (0..q.len()).filter(|&i| q[i] > 0.0).collect();
    let k = m.nrows();
    if support.len() > k + 1 {
        return None;
    }
    let mass_weight = 1e3 * scales.iter().map(|s| 1.0 / s.abs()).fold(1.0, f64::max);
    let b = DVector::from_fn(k + 1, |j, _| {
        if j < k {
            targets[j] / scales[j]
        } else {
            mass_weight
        }
    });
    while !support.is_empty() {
        let a = DMatrix::from_fn(k + 1, support.len(), |j, c| {
            if j < k {
                m[(j, support[c])] / scales[j]
            } else {
                mass_weight
            }
        });
        let w = a.svd(true, true).solve(&b, 1e-14).ok()?;
        match (0..w.len())
            .filter(|&c| !(w[c] >= 0.0))
            .min_by(|&x, &y| w[x].total_cmp(&w[y]))
        {
            Some(c) => {
                support.remove(c);
            }
            None => {
                let total: f64 = w.iter().sum();
                let mut out = vec![0.0; q.len()];
                for (c, &i) in support.iter().enumerate() {
                    out[i] = w[c] / total;
                }
                return Some(out);
            }
        }
    }
    None
}

/// Solves the moment-matching program. With `weighted`, row `j` is divided by
/// `α_j`, which must then be strictly positive (use truncated moments).
pub fn solve_moment_lp(
    grid: &VesdGrid,
    moments: &MomentVector,
    weighted: bool,
) -> Result<VesdEstimate> {
    solve_moment_lp_with(grid, moments, weighted, &SimplexOptions::default())
}

pub fn solve_moment_lp_with(
    grid: &VesdGrid,
    moments: &MomentVector,
    weighted: bool,
    opts: &SimplexOptions,
) -> Result<VesdEstimate> {
    let alpha = &moments.values;
    let k = alpha.len();
    if k == 0 {
        return Err(Error::InvalidInput("no moments to match".into()));
    }
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "moment estimates must be finite".into(),
        ));
    }
    if weighted && alpha.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "weighted objective needs positive moments, got {alpha:?}"
        )));
    }
    let t = grid.len();
    let m = moment_matrix(grid, k);
    let scales: Vec<f64> = if weighted {
        alpha.clone()
    } else {
        vec![1.0; k]
    };

    // Columns: q (t), r⁺ (k), r⁻ (k). Rows: k moment rows, then Σq = 1.
    let cols = t + 2 * k;
    let mut a = DMatrix::zeros(k + 1, cols);
    for j in 0..k {
        for i in 0..t {
            a[(j, i)] = m[(j, i)] / scales[j];
        }
        a[(j, t + j)] = -1.0;
        a[(j, t + k + j)] = 1.0;
    }
    for i in 0..t {
        a[(k, i)] = 1.0;
    }
    let mut b: Vec<f64> = (0..k).map(|j| alpha[j] / scales[j]).collect();
    b.push(1.0);
    let mut c = vec![0.0; cols];
    c[t..].iter_mut().for_each(|v| *v = 1.0);

    let lp = LinearProgram::new(a, b, c)?;
    let sol = simplex::solve(&lp, opts)?;

    let mut q = sol.x[..t].to_vec();
    let total: f64 = q.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("moment program returned zero mass".into()));
    }
    q.iter_mut().for_each(|v| *v /= total);

    let mut residual = lp_residual(&m, &q, alpha, &scales);
    if let Some(polished) = polish_support(&m, &q, alpha, &scales) {
        let r = lp_residual(&m, &polished, alpha, &scales);
        if r < residual {
            q = polished;
            residual = r;
        }
    }
    let uniform = vec![1.0 / t as f64; t];
    let witness = lp_residual(&m, &uniform, alpha, &scales);
    if residual > witness * (1.0 + 1e-9) + 1e-9 {
        return Err(Error::Numerical(format!(
            "moment program objective {residual} exceeds the uniform witness {witness}"
        )));
    }
    Ok(VesdEstimate {
        grid: grid.clone(),
        q,
        residual,
        stabilized: weighted,
        lp_iterations: sol.iterations,
    })
}

/// `∫ |F_A − F_B| dx` for two discrete distributions given as `(location, mass)` pairs.
pub fn wasserstein1(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64> {
    for dist in [a, b] {
        let total: f64 = dist.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 || dist.iter().any(|p| p.1 < 0.0 || !p.0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "distribution must have nonnegative masses summing to 1, got total {total}"
            )));
        }
    }
    // Signed masses: +A, −B. The running sum is F_A − F_B.
    let mut events: Vec<(f64, f64)> = a
        .iter()
        .copied()
        .chain(b.iter().map(|&(x, w)| (x, -w)))
        .collect();
    events.sort_by(|l, r| l.0.total_cmp(&r.0));
    let mut diff = 0.0;
    let mut area = 0.0;
    for pair in events.windows(2) {
        diff += pair[0].1;
        area += diff.abs() * (pair[1].0 - pair[0].0);
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::MomentKind;

    fn moments(values: Vec<f64>) -> MomentVector {
        MomentVector::from_values(MomentKind::KnownA, values)
    }

    #[test]
    fn grid_size_and_cap() {
        let g = VesdGrid::new(0.3, 5.0, 0.1).unwrap();
        assert_eq!(g.len(), 48);
        assert!((g.points()[47] - 5.0).abs() < 1e-12);
        let g = VesdGrid::for_sample(0.3, 5.0, Some(0.5), 100, 50).unwrap();
        assert_eq!(g.h, 0.01);
        assert!(VesdGrid::new(0.0, 1.0, 0.1).is_err());
        assert!(VesdGrid::new(1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn moment_matrix_examples() {
        let g = VesdGrid::new(1.0, 2.0, 1.0).unwrap();
        let m = moment_matrix(&g, 2);
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0]);
        assert_eq!(m.row(1).iter().copied().collect::<Vec<_>>(), vec![1.0, 4.0]);
    }

    #[test]
    fn point_mass_recovered() {
        let g = VesdGrid::new(0.5, 3.0, 0.25).unwrap();
        let est = solve_moment_lp(&g, &moments(vec![2.0, 4.0, 8.0, 16.0]), false).unwrap();
        assert!(est.residual < 1e-9);
        let idx = g.points().iter().position(|&d| d == 2.0).unwrap();
        assert!((est.q[idx] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weighted_with_unit_targets_matches_naive() {
        let g = VesdGrid::new(0.3, 5.0, 0.05).unwrap();
        let ones = moments(vec![1.0; 4]);
        let naive = solve_moment_lp(&g, &ones, false).unwrap();
        let weighted = solve_moment_lp(&g, &ones, true).unwrap();
        assert!((naive.residual - weighted.residual).abs() < 1e-10);
        assert!(weighted.stabilized);
    }

    #[test]
    fn weighted_rejects_nonpositive_targets() {
        let g = VesdGrid::new(0.3, 5.0, 0.1).unwrap();
        assert!(solve_moment_lp(&g, &moments(vec![1.0, -0.1]), true).is_err());
        assert!(solve_moment_lp(&g, &moments(vec![1.0, f64::NAN]), false).is_err());
    }

    #[test]
    fn plugin_examples() {
        let g = VesdGrid::new(1.0, 2.0, 1.0).unwrap();
        let est = VesdEstimate {
            grid: g,
            q: vec![0.5, 0.5],
            residual: 0.0,
            stabilized: false,
            lp_iterations: 0,
        };
        assert_eq!(est.plugin(Functional::Inverse), 0.75);
        assert_eq!(est.plugin(Functional::Identity), 1.5);
        assert_eq!(est.plugin(Functional::Power(2)), 2.5);
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein1(&[(1.0, 1.0)], &[(2.0, 1.0)]).unwrap(), 1.0);
        assert_eq!(
            wasserstein1(&[(1.0, 0.5), (3.0, 0.5)], &[(1.0, 0.5), (3.0, 0.5)]).unwrap(),
            0.0
        );
        assert_eq!(
            wasserstein1(&[(1.0, 0.5), (3.0, 0.5)], &[(2.0, 1.0)]).unwrap(),
            1.0
        );
        assert!(wasserstein1(&[(1.0, 0.5)], &[(2.0, 1.0)]).is_err());
    }

    #[test]
    fn csv_outputs() {
        let g = VesdGrid::new(1.0, 2.0, 1.0).unwrap();
        let est = VesdEstimate {
            grid: g,
            q: vec![0.25, 0.75],
            residual: 0.0,
            stabilized: true,
            lp_iterations: 0,
        };
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "d,q\n1.0,0.25\n2.0,0.75\n");
        let mut buf = Vec::new();
        est.write_cdf(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,cdf\n1.0,0.25\n2.0,1.0\n"
        );
    }

    proptest::proptest! {
        #[test]
        fn never_worse_than_uniform_and_tau_in_range(
            vals in proptest::collection::vec(0.1f64..30.0, 1..5),
        ) {
            let g = VesdGrid::new(0.3, 5.0, 0.1).unwrap();
            let est = solve_moment_lp(&g, &moments(vals.clone()), false).unwrap();
            let total: f64 = est.q.iter().sum();
            proptest::prop_assert!((total - 1.0).abs() < 1e-9);
            proptest::prop_assert!(est.q.iter().all(|&v| v >= 0.0));
            let tau = est.plugin(Functional::Inverse);
            proptest::prop_assert!(tau >= 1.0 / 5.0 - 1e-12 && tau <= 1.0 / 0.3 + 1e-12);
        }

        #[test]
        fn wasserstein_is_symmetric(
            xs in proptest::collection::vec((0.0f64..5.0, 0.01f64..1.0), 1..6),
            ys in proptest::collection::vec((0.0f64..5.0, 0.01f64..1.0), 1..6),
        ) {
            let norm = |v: Vec<(f64, f64)>| {
                let s: f64 = v.iter().map(|p| p.1).sum();
                v.into_iter().map(|(x, w)| (x, w / s)).collect::<Vec<_>>()
            };
            let (a, b) = (norm(xs), norm(ys));
            let ab = wasserstein1(&a, &b).unwrap();
            let ba = wasserstein1(&b, &a).unwrap();
            proptest::prop_assert!((ab - ba).abs() < 1e-12);
            proptest::prop_assert!(wasserstein1(&a, &a).unwrap() < 1e-12);
        }
    }
}
