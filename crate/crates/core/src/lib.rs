//! Numerical laboratory for the regression structure of weak record
//! sequences from discrete parent distributions.
//!
//! A weak record sequence (W_n) tracks values that are at least as large as
//! everything seen before in an iid stream. Its conditional means under the
//! one-step transition are governed by an upper-triangular operator A; affine
//! regression at gap s corresponds to reduction operators built from A. The
//! crate constructs the parent laws for which the regression is exactly
//! affine, applies and verifies the operator identities, certifies spectral
//! verdicts (eigenvalues, kernel vectors, injectivity of the reduction), and
//! cross-validates everything by Monte Carlo simulation.

pub mod cli;
pub mod dd;
pub mod operator;
pub mod pmf;
pub mod simulate;
pub mod spectral;
pub mod verify;
