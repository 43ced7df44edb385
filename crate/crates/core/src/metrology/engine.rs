//! Homodyne statistics recomputed from the phase-space pipelines, with
//! slopes taken by central finite differences. Shares no formulas with the
//! closed forms in the parent module.

use crate::interferometer::{build, build_lossless, build_lossy, post_opa_state, ExperimentConfig, Pipeline};

use super::{MetrologyError, DIVERGENCE_SLOPE, NEGATIVE_VARIANCE_TOLERANCE};

/// Step used for the central difference in `phi`.
pub const FD_STEP: f64 = 1e-5;

/// `<X_A>` and `<X_A^2>` read off a propagated state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneMoments {
    pub mean: f64,
    pub second: f64,
}

impl HomodyneMoments {
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }

    pub fn fluctuation(&self) -> Result<f64, MetrologyError> {
        let var = self.variance();
        if var < -NEGATIVE_VARIANCE_TOLERANCE * self.second.abs().max(1.0) {
            return Err(MetrologyError::NegativeVariance(var));
        }
        Ok(libm::sqrt(var.max(0.0)))
    }
}

fn port_a(pipeline: &Pipeline) -> Result<HomodyneMoments, MetrologyError> {
    let (mean, second) = pipeline.run()?.x_moments(0)?;
    Ok(HomodyneMoments { mean, second })
}

/// Moments from the lossless pipeline when `T = 1`, the lossy one otherwise.
pub fn moments(c: &ExperimentConfig) -> Result<HomodyneMoments, MetrologyError> {
    port_a(&build(c)?)
}

pub fn lossless_moments(c: &ExperimentConfig) -> Result<HomodyneMoments, MetrologyError> {
    port_a(&build_lossless(c)?)
}

/// Always runs the 8-dimensional system+environment pipeline, even at `T = 1`.
pub fn lossy_moments(c: &ExperimentConfig) -> Result<HomodyneMoments, MetrologyError> {
    port_a(&build_lossy(c)?)
}

/// Central-difference `d<X_A>/dphi` of the propagated mean.
pub fn signal_slope(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let up = moments(&c.with_phi(c.phi + FD_STEP))?.mean;
    let down = moments(&c.with_phi(c.phi - FD_STEP))?.mean;
    Ok((up - down) / (2.0 * FD_STEP))
}

/// Error-propagation sensitivity `Delta X / |d<X>/dphi|` entirely from the
/// propagated states.
pub fn sensitivity(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let slope = signal_slope(c)?;
    if slope.abs() < DIVERGENCE_SLOPE {
        return Err(MetrologyError::Divergent { slope });
    }
    Ok(moments(c)?.fluctuation()? / slope.abs())
}

/// Total photon number right after the OPA.
pub fn photon_number(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    Ok(post_opa_state(c)?.total_photon_number())
}
