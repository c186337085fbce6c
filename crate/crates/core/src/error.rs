use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("outside analyticity radius: amplitude {amplitude} exceeds guard {radius}")]
    OutsideAnalyticityRadius { amplitude: f64, radius: f64 },

    #[error("field is not in V: nonzero coefficient at (l={l}, j={j})")]
    NotInV { l: i64, j: usize },

    #[error("field is not in W: nonzero coefficient at (l={l}, j={j})")]
    NotInW { l: i64, j: usize },

    #[error("{stage}: iteration is not a contraction (rate {rate:.3e}); {condition}")]
    NonContraction {
        stage: &'static str,
        rate: f64,
        condition: &'static str,
    },

    #[error("{stage}: no convergence after {iterations} iterations (last step {last_step:.3e})")]
    NoConvergence {
        stage: &'static str,
        iterations: usize,
        last_step: f64,
    },

    #[error("no critical circle found from {seeds} seeds")]
    NoCriticalCircle { seeds: usize },

    #[error("degenerate circle: Hessian gap {gap:.3e} below threshold {threshold:.3e}")]
    DegenerateCircle { gap: f64, threshold: f64 },

    #[error("truncation too small: need {required}, have {available}")]
    TruncationOverflow { required: usize, available: usize },

    #[error("truncation too small for k={k}: eigenvalue argmin at boundary j={j}")]
    TruncationTooSmall { k: i64, j: usize },

    #[error("mean-value hypothesis violated: <a_3> = 0")]
    MeanValueHypothesis,

    #[error("<,>_eps is not a scalar product: |eps|*max|a_0| = {bound}")]
    NotScalarProduct { bound: f64 },

    #[error("resonant linearization at (k={k}, j={j}): eigenvalue {value:.3e}")]
    ResonantLinearization { k: i64, j: usize, value: f64 },

    #[error("f_lj is not monotone on the window for (l={l}, j={j})")]
    Monotonicity { l: usize, j: usize },

    #[error("density fit needs at least {need} windows, got {got}")]
    InsufficientWindows { got: usize, need: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}
