//! The concrete hypothesis families and their efficient learners.

pub mod decision_list;
pub mod equal_piece;
pub mod threshold;
