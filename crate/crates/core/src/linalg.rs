//! Thin dense linear-algebra helpers. Symmetric eigendecompositions go through
//! faer, which is several times faster than nalgebra's QL iteration at the
//! sizes the simulation harness uses.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
pub(crate) struct SymEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
}

pub(crate) fn sym_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let fa = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let evd = fa
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::DegenerateSpectrum(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    // faer returns ascending order.
    let values: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok(SymEigen { values, vectors })
}

pub(crate) fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Symmetric square root of a positive semidefinite matrix.
pub(crate) fn sym_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(a)?;
    let scale = eig.values.first().copied().unwrap_or(0.0).abs().max(1.0);
    if let Some(neg) = eig.values.iter().find(|&&v| v < -1e-10 * scale) {
        return Err(Error::InvalidCovariance(format!(
            "matrix is not positive semidefinite (eigenvalue {neg:e})"
        )));
    }
    let roots: Vec<f64> = eig.values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut scaled = eig.vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= roots[j];
    }
    Ok(&scaled * eig.vectors.transpose())
}

/// `aᵀ B⁻¹ a` for symmetric positive definite `B`.
pub(crate) fn spd_quadratic(b: &DMatrix<f64>, a: &DVector<f64>) -> Result<f64> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidCovariance("matrix is not positive definite".into()))?;
    Ok(a.dot(&chol.solve(a)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_descending_and_reconstructs() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let e = sym_eigen(&a).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let d = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let back = &e.vectors * d * e.vectors.transpose();
        assert!((back - a).abs().max() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 2.0]);
        let r = sym_sqrt(&a).unwrap();
        assert!((&r * &r - &a).abs().max() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(sym_sqrt(&bad), Err(Error::InvalidCovariance(_))));
    }
}
