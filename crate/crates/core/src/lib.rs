//! Schur-Weyl compression of identical-qubit ensembles.
//!
//! An ensemble of `N` identically prepared qubits lives in the `N + 1` dimensional
//! symmetric subspace, so it can be stored in `ceil(log2(N + 1))` qubits without
//! losing any information about single-copy observables. This crate simulates the
//! three-into-two qubit compression circuit (both the fully unitary version and the
//! measurement/feed-forward variant), collective spin-3/2 measurements on the
//! compressed pair, and the Monte-Carlo estimation experiments that compare the
//! compressed register against direct measurement and a "2+1" maximum-likelihood
//! baseline.
//!
//! Module map:
//!
//! * [`qstate`]: dense state vectors, unitaries, circuits, projective measurement.
//! * [`schur`]: the three-qubit transform, feed-forward corrections and the general
//!   `N`-copy symmetric codec.
//! * [`collective`]: spin-3/2 operators, measurement basis changes, sampling and the
//!   dark-port leakage model.
//! * [`estimation`]: estimators, trial ensembles, variance sweeps, Haar-averaged
//!   variance and the 2+1 MLE baseline.
//! * [`report`] and [`cli`]: tabular CSV/JSON output and the command-line harness.

pub mod cli;
pub mod collective;
pub mod error;
pub mod estimation;
pub mod qstate;
pub mod report;
pub mod rng;
pub mod schur;

pub use error::{Error, Result};
pub use num_complex::Complex64;
