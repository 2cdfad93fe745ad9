use thiserror::Error;

/// Failures raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("no sign change of the readout polynomial on (0, 1) for N = {n}, q = {q}")]
    RootNotBracketed { n: u32, q: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("all sample times are equal")]
    DegenerateTimes,
    #[error("cannot merge simulation results produced by different configurations")]
    ConfigMismatch,
    #[error("nothing to merge")]
    EmptyMerge,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason })
    }
}
