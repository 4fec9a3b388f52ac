use std::fmt;

/// Coarse failure classes, used by the command-line front end to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorClass {
    Input,
    NumericalDegeneracy,
    SolverStall,
    ZeroSignal,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 2,
            ErrorClass::NumericalDegeneracy => 3,
            ErrorClass::SolverStall => 4,
            ErrorClass::ZeroSignal => 5,
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorClass::Input => "input",
            ErrorClass::NumericalDegeneracy => "numerical-degeneracy",
            ErrorClass::SolverStall => "solver-stall",
            ErrorClass::ZeroSignal => "zero-signal",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("scale factor must be positive, got {0}")]
    InvalidScale(f64),

    #[error("evaluation point {z} collides with eigenvalue {lambda}")]
    Pole { z: f64, lambda: f64 },

    #[error("derivative order {requested} exceeds supported maximum {max}")]
    UnsupportedOrder { requested: usize, max: usize },

    #[error("no sign change of the companion transform on ({lo}, {hi})")]
    Bracket { lo: f64, hi: f64 },

    #[error("degenerate root at {eta}: derivative {derivative:e}")]
    DegenerateRoot { eta: f64, derivative: f64 },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("contour of radius {radius} around {center} reaches the pole at {other}")]
    Geometry {
        center: f64,
        radius: f64,
        other: f64,
    },

    #[error("simplex stalled after {iterations} iterations (incumbent objective {objective})")]
    SolverStall {
        iterations: usize,
        objective: f64,
        incumbent: Vec<f64>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("linear program is infeasible (phase-one residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("linear program is unbounded along column {column}")]
    Unbounded { column: usize },

    #[error("zero signal: {what} = {value:e} is below the detection threshold")]
    ZeroSignal { what: &'static str, value: f64 },

    #[error("constant response: sample variance of y is zero")]
    ConstantResponse,

    #[error("pseudo-R² is only degenerate for p > n (got p = {p}, n = {n})")]
    WrongRegime { p: usize, n: usize },

    #[error("too many failed replications in cell {cell}: {failed} of {reps}")]
    CellAborted {
        cell: String,
        failed: usize,
        reps: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidInput(_)
            | InvalidDimension(_)
            | InvalidCovariance(_)
            | InvalidScale(_)
            | ConstantResponse
            | WrongRegime { .. }
            | Parse(_)
            | Io(_)
            | Json(_)
            | UnsupportedOrder { .. }
            | Geometry { .. } => ErrorClass::Input,
            Pole { .. }
            | Bracket { .. }
            | DegenerateRoot { .. }
            | DegenerateSpectrum(_)
            | CellAborted { .. }
            | Numerical(_)
            | Infeasible { .. }
            | Unbounded { .. } => ErrorClass::NumericalDegeneracy,
            SolverStall { .. } => ErrorClass::SolverStall,
            ZeroSignal { .. } => ErrorClass::ZeroSignal,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
