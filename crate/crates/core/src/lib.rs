//! Measure algebra, tail decompositions and numerical class tests for
//! long-tailed and subexponential distributions.

pub mod classify;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod families;
pub mod hfunc;
pub mod lattice;
pub mod lemmas;
pub mod measure;
pub mod montecarlo;
pub mod output;
pub mod probe;
pub mod quad;
pub mod suite;
pub mod theorems;

pub use error::{Error, Result};
