use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("operator on {found:?} does not match space {expected:?}")]
    SpaceMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("factor index {index} out of range for {factors} factors")]
    FactorIndex { index: usize, factors: usize },

    #[error("matrix is {rows}x{cols}, expected {expected}x{expected}")]
    Shape {
        rows: usize,
        cols: usize,
        expected: usize,
    },

    #[error("vector length {0} is not a perfect square")]
    NotPerfectSquare(usize),

    #[error("hamiltonian is not Hermitian (max deviation {0:.3e})")]
    NonHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid model parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("singular matrix (condition number {0:.3e})")]
    Singular(f64),

    #[error("step size underflow at t = {t}: h = {h:.3e} (stiff system?)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("no convergence within the time grid (last distance {0:.3e})")]
    GridExhausted(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
