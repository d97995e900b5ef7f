use thiserror::Error;

/// Errors surfaced by the solver suite.
#[derive(Debug, Error)]
pub enum QvarError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate market: theta_l = 0 and phi = 0 leave the dual state deterministic")]
    DegenerateMarket,

    #[error("integrand returned a non-finite value at w = {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("root bracketing failed: {0}")]
    BracketFailure(String),

    #[error("budget level {target} outside the attainable range of this wealth form")]
    BudgetOutOfRange { target: f64 },

    #[error("envelope case mismatch: {0}")]
    CaseMismatch(String),

    #[error("gradient descent diverged: y = {y} left ({lo}, {hi})")]
    DescentDiverged { y: f64, lo: f64, hi: f64 },

    #[error("constraint level unreachable on the multiplier grid (max h = {max_h}); enlarge the lambda range")]
    LambdaGridExhausted { max_h: f64 },

    #[error("training aborted: non-finite loss at step {step}")]
    NanLoss { step: usize },

    #[error("optimizer hit the boundary of the trained region: {0}")]
    TrainedRangeBoundary(String),

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QvarError>;
