use std::path::PathBuf;

use thiserror::Error;

use crate::integrator::Formulation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("complex field evaluation overflows at t = {re} + {im}i")]
    Overflow { re: f64, im: f64 },

    #[error("{what}: requested tolerance {requested:e} not met (estimate {achieved:e})")]
    ToleranceNotMet {
        what: &'static str,
        requested: f64,
        achieved: f64,
    },

    #[error("step budget of {max_steps} exceeded at t = {t} for k = {k:?}")]
    StepBudgetExceeded {
        k: [f64; 3],
        t: f64,
        max_steps: usize,
    },

    #[error("step size underflow (h = {h:e}) at t = {t} for k = {k:?}")]
    StepSizeUnderflow { k: [f64; 3], t: f64, h: f64 },

    #[error("{formulation:?} formulation failed: {source}")]
    Formulation {
        formulation: Formulation,
        #[source]
        source: Box<Error>,
    },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("no turning points found in the search region")]
    NoRootsFound,

    #[error("seed budget exhausted after {0} Newton iterations")]
    SeedBudgetExhausted(usize),

    #[error("grid is not symmetric about zero along the mirrored axis")]
    GridNotSymmetric,

    #[error("radial band [{r_min}, {r_max}] does not fit inside the grid")]
    BandOutsideGrid { r_min: f64, r_max: f64 },

    #[error("profile has no azimuthal mode above the noise floor")]
    FlatProfile,

    #[error("profile too short: {0} samples")]
    ProfileTooShort(usize),

    #[error("{failed} of {total} grid nodes failed (first: {first})")]
    Aggregate {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("adaptive quadrature over kz did not converge: {0}")]
    QuadratureFailure(String),

    #[error("malformed {format} data: {reason}")]
    Parse {
        format: &'static str,
        reason: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Parse {
            format,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
