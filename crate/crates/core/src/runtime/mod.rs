//! Streams, subroutines, statistical queries and memory accounting.

pub mod bits;
pub mod learner;
pub mod sq;
pub mod stream;
pub mod subroutines;

/// Step cap used by the convenience `learn_*` entry points. Rejection
/// watchdogs bound every learner well below it.
pub const DEFAULT_STEP_CAP: u64 = 1 << 40;
