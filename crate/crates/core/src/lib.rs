//! Coherence of quantum measurements.
//!
//! The crate works with POVMs on a finite-dimensional Hilbert space with a fixed
//! incoherent (computational) basis and provides:
//!
//! * closed-form monotones built from the off-diagonal matrix `Ω` ([`monotones::c_linf`],
//!   [`monotones::c_l1`]) and a bracketing estimator for distance-based monotones
//!   such as the relative-entropy one ([`monotones::c_s_estimate`]);
//! * the robustness of measurement coherence as a semidefinite program with
//!   certified primal/dual bounds ([`robustness::robustness`]);
//! * Kraus channels, strictly incoherent operation (SIO) detection and the dual
//!   (Heisenberg-picture) action on measurements ([`channels`]);
//! * detector tomography from a fixed probe family ([`tomography`]) and a
//!   shot-noise simulation of single-qubit measurement sweeps ([`experiment`]).
//!
//! The crate is `no_std` compatible (with `alloc`) when the default `std`
//! feature is disabled. File formats and the command-line tool live in the
//! companion `povm-coherence-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod prelude;

pub mod builtins;
pub mod channels;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod monotones;
pub mod povm;
pub mod robustness;
pub mod seed;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{GeneralMatrix, HermitianMatrix, C64};
pub use povm::{DensityMatrix, OutcomeDistribution, Povm};

/// Default absolute tolerance used when validating measurements.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
