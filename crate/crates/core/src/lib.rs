//! Numerical laboratory for quantitative convergence to the circular law.
//!
//! Samples i.i.d. matrices and Weyl polynomials, measures ball and quadrant
//! discrepancy against the uniform law on the unit disk with certified
//! brackets, evaluates logarithmic potentials, and checks the closed forms
//! for the mean Ginibre spectrum and the limiting singular-value law.

pub mod discrepancy;
pub mod ensembles;
pub mod error;
pub mod ginibre_exact;
pub mod harness;
pub mod limitlaw;
pub mod matrix;
pub mod potentials;
pub mod quadrature;
pub mod reference;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
pub use matrix::CMatrix;
