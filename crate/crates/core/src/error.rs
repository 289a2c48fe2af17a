use alloc::string::String;
use core::fmt;

/// Failure modes shared by every module of the toolkit.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain { what: &'static str, detail: String },
    /// An objective or kernel produced a non-finite value.
    NonFinite { what: &'static str, at: f64 },
    /// Closed loop is not strictly stable.
    Unstable { a_cl: f64 },
    /// No admissible point exists (empty feasible set, priced-out type, ...).
    Infeasible { what: &'static str, detail: String },
    /// The fitted degradation model contradicts its assumptions.
    Calibration { detail: String },
    /// Every optimizer restart ended outside the admissible region.
    Optimization { detail: String },
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { what, detail: detail.into() }
    }

    pub(crate) fn infeasible(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Infeasible { what, detail: detail.into() }
    }

    /// True for errors caused by bad inputs rather than a numerical failure.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, detail } => write!(f, "{what}: {detail}"),
            Error::NonFinite { what, at } => {
                write!(f, "{what}: non-finite value at abscissa {at}")
            }
            Error::Unstable { a_cl } => {
                write!(f, "closed loop is unstable: lifted transition a_cl = {a_cl}")
            }
            Error::Infeasible { what, detail } => write!(f, "{what} is infeasible: {detail}"),
            Error::Calibration { detail } => write!(f, "fit_linear_degradation: {detail}"),
            Error::Optimization { detail } => write!(f, "optimization failed: {detail}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
