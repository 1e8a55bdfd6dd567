use thiserror::Error;

/// Errors raised by the library.
///
/// Probabilistic failures of a learner (`Soundness`, `LearnerFailure`,
/// `EstimationFailure`, `NonTermination`) are recoverable at the trial
/// level: the harness records them as unsuccessful trials.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),
    #[error("oracle contract violated: {0}")]
    Contract(String),
    #[error("estimate saw no example inside the region after {draws} draws")]
    EstimationFailure { draws: u64 },
    #[error("no termination within {cap} steps")]
    NonTermination { cap: u64 },
    #[error("candidate set became empty; the target was deleted")]
    Soundness,
    #[error("learner failure: {0}")]
    LearnerFailure(String),
    #[error("malformed state encoding: {0}")]
    Decode(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
