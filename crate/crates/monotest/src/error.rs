use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("moment order must be odd, got {0}")]
    EvenMomentOrder(usize),
    #[error("moment order {0} exceeds the supported cap of {1} (double precision is meaningless beyond it)")]
    MomentOrderCap(usize, usize),
    #[error("quadrature node {0} is negative; the mean shift is too small")]
    NegativeNode(f64),
    #[error("three-term recurrence breakdown: moment matrix is numerically singular")]
    RecurrenceBreakdown,
    #[error("no feasible atom set found after {rounds} grid enlargements (last residual {residual:.3e})")]
    GridInfeasible { rounds: usize, residual: f64 },
    #[error("no mean shift <= {cap} admits a nonnegative quadrature rule for order {ell}")]
    MuSearchExhausted { ell: usize, cap: u64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("resource guard exceeded: {0}")]
    ResourceGuard(String),
    #[error("matrix is rank deficient")]
    RankDeficient,
    #[error("optimizer did not converge to the requested tolerance ({0})")]
    OptimizerFailed(String),
    #[error("cover list overflow: {got} representatives exceeds the 2^(h^2) = {cap} bound")]
    CoverOverflow { got: usize, cap: usize },
    #[error("coordinate-sum envelope violated between cover and remove points: {0}")]
    PartitionViolation(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
