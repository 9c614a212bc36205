use thiserror::Error;

/// Errors raised by the numerical engine.
///
/// Variants fall into three families that the CLI maps onto exit codes:
/// domain/parameter problems, range problems (asking for a time or clock
/// value past the singularity), and numerical failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown profile `{0}`")]
    UnknownProfile(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    #[error("excluded parameter value: {0}")]
    ExcludedParameter(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("series failed to converge after {terms} terms")]
    NonConvergence { terms: usize },

    #[error("quadrature depth exhausted: best estimate {value} with error {error}")]
    DepthExhausted { value: f64, error: f64 },

    #[error("integrand is not finite at {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("local expansion fit failed: {0}")]
    FitFailure(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("time step {dt} violates the CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("blow-up guard tripped at t = {t}")]
    BlowupGuard { t: f64 },

    #[error("insufficient frame spacing: {0}")]
    FrameSpacing(String),
}

impl Error {
    /// Coarse classification used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_)
            | Error::UnknownProfile(_)
            | Error::Parameter(_)
            | Error::Pole(_)
            | Error::ExcludedParameter(_)
            | Error::UnsupportedRegime(_) => ErrorKind::Domain,
            Error::OutOfRange(_) => ErrorKind::Range,
            _ => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Domain,
    Range,
    Numerical,
}

pub type Result<T> = std::result::Result<T, Error>;
