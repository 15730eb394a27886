//! Numerical laboratory for the gentle measurement principle.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex Hermitian operators, Jacobi eigensolver, trace norm,
//!   partial trace and the JSON matrix schema.
//! - [`sqt`]: the stretched quantum theory (state set, qubit effect cone, the
//!   `rho_kl` family and the constants `q(tau)`, `eps(tau)`, `theta`).
//! - [`gentle`]: the gentle-measurement channel, lemma verifier, disturbance
//!   bounds, eta functions and simultaneous measurements.
//! - [`boxes`]: two-input two-output no-signalling boxes and the CHSH functional.
//! - [`info`]: entropies, Fano-type bounds, accessible information grids and the
//!   classical-general decomposition checks.
//! - [`vandam`]: the nested van Dam protocol, exactly and by Monte Carlo.
//!
//! Randomised sweeps draw from [`sample::substream`] and fan out through
//! [`exec::Execution`], which uses rayon when the `parallel` feature is enabled
//! and degrades to a plain loop otherwise. Results never depend on the thread count.

#![forbid(unsafe_code)]
// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxes;
pub mod error;
pub mod exec;
pub mod gentle;
pub mod info;
pub mod linalg;
pub mod sample;
pub mod sqt;
pub mod vandam;

pub use error::{Error, Result};
pub use exec::Execution;
pub use linalg::{ComplexMatrix, HermitianOperator, Spectrum, C64};
