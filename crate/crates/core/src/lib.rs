//! Gaussian phase-space model of angular-displacement estimation with an
//! orbital-angular-momentum coherent state fed through an SU(1,1)-SU(2)
//! hybrid interferometer (parametric amplifier in, 50:50 beam splitter out),
//! read out by balanced homodyne detection on port A.
//!
//! The crate is `no_std` and only needs `alloc`. It is organised bottom-up:
//!
//! - [`phase_space`]: Gaussian states as first and second quadrature moments,
//!   the symplectic elements of the interferometer and the photon-loss channel.
//! - [`interferometer`]: experiment configuration, the lossless and lossy
//!   pipelines and photon-number bookkeeping.
//! - [`metrology`]: closed-form homodyne statistics, error-propagation
//!   sensitivity, shot-noise / Heisenberg / quantum Cramér-Rao limits,
//!   optimal operating points and the maximum tolerable loss. The
//!   [`metrology::engine`] submodule re-derives the same statistics by pushing
//!   states through the phase-space pipelines.
//! - [`roots`]: bracketing root finder used by the loss-threshold search.
//!
//! Quadratures follow `X = a + a†`, `P = i(a† - a)`, so the vacuum has unit
//! variance in each quadrature and phase-space vectors are ordered
//! `(x1, p1, x2, p2, ...)`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod interferometer;
pub mod metrology;
pub mod phase_space;
pub mod roots;

pub use crate::interferometer::{build_lossless, build_lossy, mean_photon_number, ConfigError, ExperimentConfig, Pipeline, Stage};
pub use crate::metrology::{MetrologyError, SensitivityReport};
pub use crate::phase_space::{Element, GaussianState, LossChannel, PhaseSpaceError, SymplecticOp};
