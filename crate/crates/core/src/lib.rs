//! Matching correlated Erdős–Rényi graph pairs when every anonymized vertex
//! comes with a shortlist of candidate labels.
//!
//! The crate covers sampling graph pairs and ambiguity sets, the
//! typicality matching strategy, and calculators for the exponents and
//! finite-n conditions that govern when matching succeeds. A Monte Carlo
//! [`harness`] ties them together.

pub mod ambiguity;
pub mod cli;
pub mod error;
pub mod graphgen;
pub mod harness;
pub mod matcher;
pub mod model;
pub mod theory;
pub mod typicality;

pub use error::{Error, Result};
