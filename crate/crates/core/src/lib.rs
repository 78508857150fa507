//! Active-set spatial feature learning for spectral image classification.
//!
//! A multiclass logistic classifier with a group-lasso penalty is grown one
//! feature at a time: random spatial filters (morphological, texture,
//! attribute, band ratios) are generated on the fly, and a candidate enters
//! the model only if it violates the optimality conditions of the current
//! fit. In hierarchical mode, accepted features become inputs for further
//! filtering.

pub mod active_set;
pub mod cli;
pub mod error;
pub mod eval;
pub mod filters;
pub mod glasso;
pub mod io;
pub mod model;
pub mod report;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
