//! Monotone boolean policies and their linear secret sharing matrices.

mod matrix;
mod policy;

pub use matrix::{AccessStructure, Row, ShareVector, Shares};
pub use policy::PolicyNode;
