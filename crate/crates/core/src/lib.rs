//! Core numerics for estimating the shift of a symmetric periodic signal
//! observed in Gaussian white noise, worked entirely in the equivalent
//! Fourier sequence model.
//!
//! The crate is split along the natural seams of the problem:
//!
//! * [`signal`] — signal spectra, function classes, Fisher information and
//!   the stochastic simulators for the full and local sequence models;
//! * [`weights`] — projection / Pinsker / corrected weight sequences, the
//!   bandwidth equation, the second-order risk functional and the
//!   assumption checkers;
//! * [`estimators`] — the weighted contrast function, its maximizer, the
//!   plug-in and linearized estimators and their closed-form risks;
//! * [`experiments`] — seeded Monte Carlo risk evaluation, Gaussian priors
//!   on the coefficients, block Fisher information and Van Trees lower
//!   bounds.
//!
//! Everything here is pure computation over `f64` vectors. The crate is
//! `no_std` (with `alloc`); IO, configuration and thread-pool dispatch live
//! in the companion `shift-lab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(all(feature = "std", not(test)))]
extern crate std;

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod rng;
pub mod signal;
pub mod weights;

pub use error::{Error, Result};
