use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by model validation and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("chain is reducible or periodic: no power P^t with t <= {max_power} is strictly positive (P^{max_power} vanishes at ({row}, {col}))")]
    NotPrimitive {
        max_power: usize,
        row: usize,
        col: usize,
    },

    #[error("Dobrushin coefficient is {rho}; supply a power P^m of the transition matrix whose coefficient is below 1")]
    NotContracting { rho: f64 },

    #[error("minorization fails: every column of P has a zero entry, so delta_m = 0")]
    MinorizationFailure,

    #[error("path length {0} is too short (need n >= 2)")]
    PathTooShort(usize),

    #[error("unknown or unsupported initial law: {0}")]
    InvalidInitial(String),

    #[error("horizon mismatch: path has {path} states but kernel horizon is {kernel}")]
    HorizonMismatch { path: usize, kernel: usize },

    #[error("ties are not allowed: value at positions {first} and {second} coincide")]
    Ties { first: usize, second: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no regeneration observed in {0} steps; use a longer trace")]
    NoRegeneration(usize),

    #[error("need at least 2 complete blocks, found {0}")]
    TooFewBlocks(usize),

    #[error("Orlicz bracket not found in [{lo}, {hi}]")]
    OrliczBracket { lo: f64, hi: f64 },

    #[error("quadrature did not reach relative tolerance {0}")]
    Quadrature(f64),

    #[error("degenerate quantile: {0}")]
    DegenerateQuantile(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid-model",
            Error::NotPrimitive { .. } => "not-primitive",
            Error::NotContracting { .. } => "not-contracting",
            Error::MinorizationFailure => "minorization-failure",
            Error::PathTooShort(_) => "path-too-short",
            Error::InvalidInitial(_) => "invalid-initial",
            Error::HorizonMismatch { .. } => "horizon-mismatch",
            Error::Ties { .. } => "ties",
            Error::InvalidInput(_) => "invalid-input",
            Error::Unsupported(_) => "unsupported",
            Error::NoRegeneration(_) => "no-regeneration",
            Error::TooFewBlocks(_) => "too-few-blocks",
            Error::OrliczBracket { .. } => "orlicz-bracket",
            Error::Quadrature(_) => "quadrature",
            Error::DegenerateQuantile(_) => "degenerate-quantile",
        }
    }
}
