use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("argument {value} lies outside the domain [0, {cap}]")]
    OutOfDomain { value: f64, cap: f64 },

    #[error("value {value} lies outside the range ({low}, {high}]")]
    OutOfRange { value: f64, low: f64, high: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("integrand is singular: {0}")]
    SingularIntegrand(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("operation does not support this domain: {0}")]
    Unsupported(String),

    #[error("domain is not contained in the sampling box")]
    Containment,

    #[error("grid cell {cell} is coarser than {limit}")]
    Resolution { cell: f64, limit: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("accuracy target {target:e} not reached, achieved {achieved:e}")]
    Accuracy { target: f64, achieved: f64 },

    #[error("no sign change of the fitted slope on [{low}, {high}]")]
    NoBracket { low: f64, high: f64 },

    #[error("coefficient cutoff too small: tail energy {tail:e}")]
    CutoffTooSmall { tail: f64 },

    #[error("boundary is not a closed curve: {0}")]
    Topology(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for errors caused by asking an engine about a shape it cannot handle.
    pub fn is_engine_mismatch(&self) -> bool {
        matches!(self, Error::Unsupported(_) | Error::Containment)
    }

    /// True for errors raised when a numerical target could not be met.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Accuracy { .. }
                | Error::CutoffTooSmall { .. }
                | Error::NoBracket { .. }
                | Error::SingularIntegrand(_)
                | Error::InsufficientData(_)
                | Error::Resolution { .. }
        )
    }
}
