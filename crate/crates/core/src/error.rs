use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite sample at node {node}")]
    NonFinite { node: usize },

    #[error("fields are sampled on different grids")]
    GridMismatch,

    #[error("singular log-derivative at node {node} (y = {position}): {reason}")]
    Singularity {
        node: usize,
        position: f64,
        reason: String,
    },

    #[error("regularity violated: w = omega + int u^2 changes sign or nearly vanishes near y = {position} (min |w| = {min_abs}, max |w| = {max_abs})")]
    Regularity {
        position: f64,
        min_abs: f64,
        max_abs: f64,
    },

    #[error("degenerate energy: E = {energy} coincides with factorization energy {epsilon}")]
    DegenerateEnergy { energy: f64, epsilon: f64 },

    #[error("seed residual {residual:e} exceeds tolerance {tolerance:e}")]
    SeedResidual { residual: f64, tolerance: f64 },

    #[error("singular time t = {t}: 4t + c1 = {denominator}")]
    SingularTime { t: f64, denominator: f64 },

    #[error("state is not normalizable on the grid: {0}")]
    NotNormalizable(String),

    #[error("tridiagonal solve broke down at row {row}")]
    SolverBreakdown { row: usize },

    #[error("boundary leak {leak:e} exceeds threshold {threshold:e} at t = {t}; domain too small")]
    Leak { t: f64, leak: f64, threshold: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
