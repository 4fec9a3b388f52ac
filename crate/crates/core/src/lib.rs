//! Estimation of precision-matrix quadratic forms `aᵀΣ⁻¹a` when the dimension
//! exceeds the sample size.
//!
//! The pipeline recovers the vector spectral distribution of `Σ` seen from `a`
//! (eigenvalue `λ_i` of `Σ` carrying mass `(aᵀu_i)²`) from residue-based moment
//! estimators and an ℓ1 moment-matching linear program, then integrates `1/x`
//! against the recovered distribution.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use vesd::spectral::{find_eta_zeros, SampleSpectrum};
//!
//! let s = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
//! let a = DVector::from_vec(vec![0.0, 1.0]);
//! let spec = SampleSpectrum::decompose(&s, &a, 5).unwrap();
//! let etas = find_eta_zeros(&spec).unwrap();
//! assert_eq!(etas.len(), 2);
//! assert!(etas.etas[0] < 3.0 && etas.etas[0] > 1.0);
//! ```

pub mod contour;
pub mod data;
pub mod error;
pub mod estimators;
mod linalg;
pub mod recovery;
pub mod residue;
pub mod series;
pub mod sim;
pub mod simplex;
pub mod spectral;

pub use data::DataMatrix;
pub use error::{Error, ErrorClass, Result};
pub use residue::{MomentKind, MomentVector, ResidueKind};
pub use series::TruncatedSeries;
pub use spectral::{EtaZeros, SampleSpectrum, StieltjesJet};
