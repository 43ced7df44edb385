//! File formats, parameter sweeps, figure datasets and the Fock-space
//! validation oracle around [`oamsense_core`].
//!
//! - [`config`]: the key-value experiment file format.
//! - [`sweep`]: 1- and 2-axis grids evaluated in parallel, written as CSV.
//! - [`figures`]: built-in sweeps with fixed parameters.
//! - [`fock`]: a dense truncated two-mode Fock simulation used as an
//!   independent check on the phase-space engine.
//! - [`validate`]: oracle, engine and closed forms compared on a grid.

pub mod config;
pub mod figures;
pub mod fock;
pub mod sweep;
pub mod validate;

use oamsense_core::metrology::{MetrologyError, OptimumSearch};
use oamsense_core::ExperimentConfig;

use crate::sweep::{Flag, Quantity};

/// Every quantity at a single configuration, in [`Quantity::ALL`] order.
pub fn evaluate_all(c: &ExperimentConfig, search: &OptimumSearch) -> Result<Vec<(Quantity, f64, Flag)>, MetrologyError> {
    Quantity::ALL.iter().map(|&q| q.evaluate(c, search).map(|(v, f)| (q, v, f))).collect()
}
