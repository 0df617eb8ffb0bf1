//! Nonlinear Fourier transform toolkit for the focusing Zakharov-Shabat
//! problem.
//!
//! The pipeline for detecting eigenvalues from the continuous spectrum:
//!
//! 1. [`scattering::scatter_grid`] computes `a(ω)`, `b(ω)` on a real grid;
//! 2. [`phase::allpass_phase`] removes the eigenvalue-free factor `A[b]`
//!    (rebuilt from `|b|` with a Hilbert transform) and unwraps the phase of
//!    the remaining all-pass product;
//! 3. [`eigenfit::fit`] fits a sum of `arccot` terms to that phase by
//!    gradient descent over the eigenvalue positions.
//!
//! [`baselines`] holds Fourier collocation and grid-seeded Newton-Raphson
//! for comparison, and [`cli`] the command-line front end.

pub mod baselines;
pub mod cli;
pub mod eigenfit;
pub mod error;
pub mod phase;
pub mod scattering;
pub mod signals;

pub use error::{Error, Result};
pub use num_complex::Complex64;
