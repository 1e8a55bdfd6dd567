//! Bounded-memory PAC learning under the uniform distribution.
//!
//! Hypothesis classes are viewed as bipartite graphs between hypotheses
//! and examples. A learner keeps a small description of the surviving
//! candidate set and shrinks it with two subroutines, Is-close and
//! Estimate, each of which needs only a few counters of memory.

pub mod class;
pub mod classes;
pub mod domain;
pub mod classfile;
pub mod error;
pub mod experiment;
pub mod general;
pub mod graph;
pub mod oracle;
pub mod rational;
pub mod runtime;

pub use class::{ExampleSubset, HypothesisClass, HypothesisSubset};
pub use domain::{DomainSpec, Literal, Point};
pub use error::{Error, Result};
pub use rational::Rational;

// The guide's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/separability.md")]
    mod separability {}
    #[doc = include_str!("../../../book/src/subroutines.md")]
    mod subroutines {}
    #[doc = include_str!("../../../book/src/learners.md")]
    mod learners {}
    #[doc = include_str!("../../../book/src/memory.md")]
    mod memory {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
