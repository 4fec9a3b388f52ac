//! Bounded-variable revised simplex for small row counts.
//!
//! Solves `min cᵀx` subject to `Ax = b`, `0 ≤ x ≤ u` (entries of `u` may be
//! infinite). Entering columns are priced by the largest reduced cost; after a
//! run of degenerate pivots pricing switches to Bland's smallest-index rule
//! until the objective moves again, so the method cannot cycle. Ties always go
//! to the smallest index, which keeps pivots deterministic. The basis inverse
//! is refactorised from scratch at every iteration; with a handful of rows
//! this costs less than pricing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LinearProgram {
    a: DMatrix<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.nrows() != b.len() || a.ncols() != c.len() {
            return Err(Error::InvalidInput(format!(
                "constraint matrix is {}x{} but b has {} and c has {} entries",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidInput("linear program has no rows".into()));
        }
        if a.iter().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "linear program has non-finite data".into(),
            ));
        }
        let upper = vec![f64::INFINITY; c.len()];
        Ok(Self { a, b, c, upper })
    }

    pub fn with_upper_bounds(mut self, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != self.c.len() || upper.iter().any(|u| u.is_nan() || *u < 0.0) {
            return Err(Error::InvalidInput(
                "upper bounds must be nonnegative, one per column".into(),
            ));
        }
        self.upper = upper;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of `Ax = b`.
    pub fn infeasibility(&self, x: &[f64]) -> f64 {
        let ax = &self.a * DVector::from_column_slice(x);
        ax.iter()
            .zip(&self.b)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Relative tolerance for reduced costs and phase-one feasibility.
    pub tolerance: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            tolerance: 1e-11,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Column indices of the final basis (artificial columns are `≥ cols`).
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Basic,
    Lower,
    Upper,
}

const PIVOT_TOLERANCE: f64 = 1e-11;
/// Consecutive degenerate pivots tolerated before falling back to Bland.
const DEGENERATE_RUN: usize = 50;

struct Tableau<'a> {
    lp: &'a LinearProgram,
    /// Signs of the artificial columns, one per row.
    art_sign: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    x: Vec<f64>,
    iterations: usize,
    degenerate_run: usize,
}

enum Step {
    Optimal,
    Moved,
}

impl<'a> Tableau<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let (m, n) = (lp.rows(), lp.cols());
        let art_sign: Vec<f64> =
            lp.b.iter()
                .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
                .collect();
        let mut upper = lp.upper.clone();
        upper.extend(std::iter::repeat(f64::INFINITY).take(m));
        let mut status = vec![Status::Lower; n + m];
        status[n..].iter_mut().for_each(|s| *s = Status::Basic);
        Self {
            lp,
            art_sign,
            upper,
            status,
            basis: (n..n + m).collect(),
            x: vec![0.0; n + m],
            iterations: 0,
            degenerate_run: 0,
        }
    }

    fn column(&self, j: usize) -> DVector<f64> {
        let n = self.lp.cols();
        if j < n {
            self.lp.a.column(j).into_owned()
        } else {
            let mut e = DVector::zeros(self.lp.rows());
            e[j - n] = self.art_sign[j - n];
            e
        }
    }

    fn dot_column(&self, y: &DVector<f64>, j: usize) -> (f64, f64) {
        let n = self.lp.cols();
        if j < n {
            let col = self.lp.a.column(j);
            let dot = col.dot(y);
            let mag = col.iter().zip(y.iter()).map(|(a, y)| (a * y).abs()).sum();
            (dot, mag)
        } else {
            let v = self.art_sign[j - n] * y[j - n];
            (v, v.abs())
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::Upper => self.upper[j],
            _ => 0.0,
        }
    }

    /// One iteration with the given cost vector (indexed over all columns).
    fn step(&mut self, cost: &[f64], tol: f64) -> Result<Step> {
        let m = self.lp.rows();
        let basis_matrix = DMatrix::from_fn(m, m, |i, k| self.column(self.basis[k])[i]);
        let lu = basis_matrix.clone().lu();
        let lu_t = basis_matrix.transpose().lu();

        let mut rhs = DVector::from_column_slice(&self.lp.b);
        for j in 0..self.status.len() {
            if self.status[j] == Status::Upper {
                rhs -= self.column(j) * self.upper[j];
            }
        }
        let mut x_b = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular simplex basis".into()))?;
        // One round of iterative refinement; bases can be Vandermonde-like.
        let correction = lu
            .solve(&(&rhs - &basis_matrix * &x_b))
            .ok_or_else(|| Error::Numerical("singular simplex basis".into()))?;
        x_b += correction;
        for (pos, &var) in self.basis.iter().enumerate() {
            self.x[var] = x_b[pos];
        }
        for j in 0..self.status.len() {
            if self.status[j] != Status::Basic {
                self.x[j] = self.nonbasic_value(j);
            }
        }

        let c_b = DVector::from_iterator(m, self.basis.iter().map(|&v| cost[v]));
        let y = lu_t
            .solve(&c_b)
            .ok_or_else(|| Error::Numerical("singular simplex basis".into()))?;

        let bland = self.degenerate_run >= DEGENERATE_RUN;
        let mut entering = None;
        let mut best_violation = 0.0;
        for j in 0..self.status.len() {
            if self.status[j] == Status::Basic || self.upper[j] == 0.0 {
                continue;
            }
            let (dot, mag) = self.dot_column(&y, j);
            let d = cost[j] - dot;
            let thresh = tol * (1.0 + cost[j].abs() + mag);
            let dir = match self.status[j] {
                Status::Lower if d < -thresh => 1.0,
                Status::Upper if d > thresh => -1.0,
                _ => continue,
            };
            if bland {
                entering = Some((j, dir));
                break;
            }
            if d.abs() > best_violation {
                best_violation = d.abs();
                entering = Some((j, dir));
            }
        }
        let Some((e, dir)) = entering else {
            return Ok(Step::Optimal);
        };

        let w = lu
            .solve(&self.column(e))
            .ok_or_else(|| Error::Numerical("singular simplex basis".into()))?;
        let mut best = self.upper[e];
        let mut leaving: Option<(usize, Status)> = None;
        for pos in 0..m {
            let delta = dir * w[pos];
            let var = self.basis[pos];
            let (limit, bound) = if delta > PIVOT_TOLERANCE {
                ((x_b[pos] / delta).max(0.0), Status::Lower)
            } else if delta < -PIVOT_TOLERANCE && self.upper[var].is_finite() {
                (
                    ((self.upper[var] - x_b[pos]) / -delta).max(0.0),
                    Status::Upper,
                )
            } else {
                continue;
            };
            let better = match leaving {
                None => limit < best || (limit == best && best.is_finite()),
                Some((cur, _)) => limit < best || (limit == best && var < self.basis[cur]),
            };
            if better {
                best = limit;
                leaving = Some((pos, bound));
            }
        }
        if best.is_infinite() {
            return Err(Error::Unbounded { column: e });
        }
        if best > 0.0 {
            self.degenerate_run = 0;
        } else {
            self.degenerate_run += 1;
        }
        match leaving {
            None => {
                self.status[e] = if dir > 0.0 {
                    Status::Upper
                } else {
                    Status::Lower
                };
            }
            Some((pos, bound)) => {
                let out = self.basis[pos];
                self.status[out] = bound;
                self.status[e] = Status::Basic;
                self.basis[pos] = e;
            }
        }
        self.iterations += 1;
        Ok(Step::Moved)
    }

    fn run(&mut self, cost: &[f64], opts: &SimplexOptions) -> Result<()> {
        loop {
            if self.iterations >= opts.max_iterations {
                let n = self.lp.cols();
                let incumbent = self.x[..n].to_vec();
                return Err(Error::SolverStall {
                    iterations: self.iterations,
                    objective: self.lp.objective(&incumbent),
                    incumbent,
                });
            }
            if let Step::Optimal = self.step(cost, opts.tolerance)? {
                return Ok(());
            }
        }
    }
}

/// Two-phase solve: phase one drives artificial variables out, phase two
/// optimises the real objective with artificials pinned at zero.
pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    let (m, n) = (lp.rows(), lp.cols());
    let mut t = Tableau::new(lp);

    let mut phase_one = vec![0.0; n + m];
    phase_one[n..].iter_mut().for_each(|c| *c = 1.0);
    t.run(&phase_one, opts)?;
    let residual: f64 = t.x[n..].iter().sum();
    let scale = 1.0 + lp.b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if residual > 1e-9 * scale {
        return Err(Error::Infeasible { residual });
    }
    t.upper[n..].iter_mut().for_each(|u| *u = 0.0);

    let mut phase_two = lp.c.clone();
    phase_two.extend(std::iter::repeat(0.0).take(m));
    t.run(&phase_two, opts)?;

    let x: Vec<f64> = t.x[..n].iter().map(|v| v.max(0.0)).collect();
    Ok(LpSolution {
        objective: lp.objective(&x),
        x,
        iterations: t.iterations,
        basis: t.basis.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(rows: usize, a: &[f64], b: &[f64], c: &[f64]) -> LinearProgram {
        let cols = c.len();
        LinearProgram::new(
            DMatrix::from_row_slice(rows, cols, a),
            b.to_vec(),
            c.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn textbook_two_variable() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), value 36.
        let p = lp(
            3,
            &[
                1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 1.0, 0.0, 3.0, 2.0, 0.0, 0.0, 1.0,
            ],
            &[4.0, 12.0, 18.0],
            &[-3.0, -5.0, 0.0, 0.0, 0.0],
        );
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert!((s.objective + 36.0).abs() < 1e-10);
        assert!((s.x[0] - 2.0).abs() < 1e-10 && (s.x[1] - 6.0).abs() < 1e-10);
    }

    #[test]
    fn beale_example_does_not_cycle() {
        let p = lp(
            3,
            &[
                1.0, 0.0, 0.0, 0.25, -8.0, -1.0, 9.0, //
                0.0, 1.0, 0.0, 0.5, -12.0, -0.5, 3.0, //
                0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0,
            ],
            &[0.0, 0.0, 1.0],
            &[0.0, 0.0, 0.0, -0.75, 20.0, -0.5, 6.0],
        );
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert!((s.objective + 1.25).abs() < 1e-10);
    }

    #[test]
    fn upper_bounds_flip() {
        // min −x − y, x + y + s = 10, x ≤ 3, y ≤ 4.
        let p = lp(1, &[1.0, 1.0, 1.0], &[10.0], &[-1.0, -1.0, 0.0])
            .with_upper_bounds(vec![3.0, 4.0, f64::INFINITY])
            .unwrap();
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(s.x[0], 3.0);
        assert_eq!(s.x[1], 4.0);
        assert!((s.x[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // −x − y = −2 twice, min x.
        let p = lp(2, &[-1.0, -1.0, -1.0, -1.0], &[-2.0, -2.0], &[1.0, 0.0]);
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert!(s.objective.abs() < 1e-12);
        assert!((s.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = lp(1, &[1.0, 1.0], &[-1.0], &[0.0, 0.0]);
        assert!(matches!(
            solve(&p, &SimplexOptions::default()),
            Err(Error::Infeasible { .. })
        ));
        let p = lp(1, &[1.0, -1.0], &[1.0], &[0.0, -1.0]);
        assert!(matches!(
            solve(&p, &SimplexOptions::default()),
            Err(Error::Unbounded { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_incumbent() {
        let p = lp(
            3,
            &[
                1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 1.0, 0.0, 3.0, 2.0, 0.0, 0.0, 1.0,
            ],
            &[4.0, 12.0, 18.0],
            &[-3.0, -5.0, 0.0, 0.0, 0.0],
        );
        let opts = SimplexOptions {
            max_iterations: 1,
            ..Default::default()
        };
        match solve(&p, &opts) {
            Err(Error::SolverStall { incumbent, .. }) => assert_eq!(incumbent.len(), 5),
            other => panic!("expected stall, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn beats_any_feasible_point(
            a in prop::collection::vec(-2.0f64..2.0, 3 * 7),
            x0 in prop::collection::vec(0.0f64..1.0, 7),
            c in prop::collection::vec(0.0f64..3.0, 7),
        ) {
            let a = DMatrix::from_row_slice(3, 7, &a);
            let b: Vec<f64> = (&a * DVector::from_column_slice(&x0)).iter().copied().collect();
            let p = LinearProgram::new(a, b, c.clone()).unwrap();
            let s = solve(&p, &SimplexOptions::default()).unwrap();
            prop_assert!(s.x.iter().all(|&v| v >= 0.0));
            prop_assert!(p.infeasibility(&s.x) < 1e-8);
            prop_assert!(s.objective <= p.objective(&x0) + 1e-9);
        }
    }
}
