use thiserror::Error;

/// Errors raised by map construction, evaluation and the estimators built on top.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("root finding did not converge after {iterations} iterations (bracket [{lo}, {hi}], target {target})")]
    NumericFailure {
        iterations: usize,
        lo: f64,
        hi: f64,
        target: f64,
    },

    #[error("derivative undefined at breakpoint {point}: left {left}, right {right}")]
    Breakpoint { point: f64, left: f64, right: f64 },

    #[error("operation `{op}` is not supported for the {variant} variant")]
    Unsupported {
        op: &'static str,
        variant: &'static str,
    },

    #[error("resource cap exceeded: {what} would reach {requested}, cap is {cap}")]
    ResourceCap {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("generators do not commute: defect {defect:e} at x = {x}")]
    NotCommuting { defect: f64, x: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("orbit failed at step {step}: {source}")]
    Orbit {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::Orbit { .. } => e,
            e => Error::Orbit {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Strips orbit-step wrappers and returns the underlying error.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Orbit { source, .. } => source.root_cause(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
