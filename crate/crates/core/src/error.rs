use thiserror::Error;

/// Everything that can go wrong while building or evaluating an instance.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("matrix is not Hermitian (relative residual {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (residual {0:.3e})")]
    NonUnitary(f64),

    #[error("negative eigenvalue {0:.3e} below cutoff")]
    NegativeEigenvalue(f64),

    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),

    #[error("charge `{label}` is degenerate (spectral gap {gap:.3e} <= {tol:.1e})")]
    DegenerateCharge { label: String, gap: f64, tol: f64 },

    #[error("charges are linearly dependent (Gram min eigenvalue {0:.3e})")]
    LinearlyDependent(f64),

    #[error("empty charge set")]
    EmptyChargeSet,

    #[error("index {index} out of range (< {bound}) for {what}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("unitary does not conserve charge `{label}` (commutator norm {residual:.3e})")]
    NotConserving { label: String, residual: f64 },

    #[error("operation requires a commuting charge set")]
    NotCommuting,

    #[error("ambiguous eigenbasis matching between charge 0 and charge {0}")]
    AmbiguousBasisMatch(usize),

    #[error("exponent spectral radius {0:.3e} exceeds overflow guard")]
    Overflow(f64),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("state is singular (min eigenvalue {0:.3e})")]
    SingularState(f64),

    #[error("{what} count {count} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        count: u128,
        cap: u128,
    },

    #[error("non-finite stochastic value on a trajectory with weight {0:.3e}")]
    NonfiniteValue(f64),

    #[error("pure-state branch requested on a mixed state (purity {0:.12})")]
    MixedState(f64),

    #[error("postselection probability {0:.3e} too small")]
    ZeroPostselection(f64),

    #[error("extrapolation did not converge: {0}")]
    NonconvergentExtrapolation(String),

    #[error("projector family is not complete and orthogonal (residual {0:.3e})")]
    IncompleteProjectors(f64),

    #[error("spectra of the two marginals differ (max gap {0:.3e}); no purification exists")]
    SpectrumMismatch(f64),

    #[error("distribution sums to 1 only within {0:.3e}")]
    Normalization(f64),

    /// An earlier error re-reported where the original value is shared.
    #[error("{0}")]
    Reported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(expected: impl ToString, got: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
