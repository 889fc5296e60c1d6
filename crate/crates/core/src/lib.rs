//! Solitary waves of one-dimensional nonlinear Dirac models (generalized
//! massive Thirring and Gross–Neveu), their conserved functionals, and the
//! spectra of their linearizations.

pub mod cli;
pub mod config;
pub mod error;
pub mod functionals;
pub mod jordan;
pub mod linop;
pub mod model;
pub mod par;
pub mod profile;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
