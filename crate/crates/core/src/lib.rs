//! Approximate arithmetic circuit synthesis with a guaranteed worst-case
//! absolute error bound.
//!
//! Candidate circuits are evolved with Cartesian Genetic Programming; every
//! candidate that could replace the current best is checked with a SAT-based
//! approximation miter under a per-candidate conflict budget, and the budget
//! itself is adapted to the progress of the search.

pub mod cgp;
pub mod error;
pub mod genlib;
pub mod harness;
pub mod netlist;
pub mod oracle;
pub mod search;
pub mod verify;

pub use error::{Error, Result};
