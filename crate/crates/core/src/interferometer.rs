//! The hybrid interferometer: configuration, element pipelines, photon number.
//!
//! Lossless path: coherent amplitude into port A, OPA, Dove-prism rotation on
//! arm A, 50:50 beam splitter. The lossy path runs on system + environment
//! modes and inserts virtual beam splitters between the rotation and the
//! output beam splitter, then discards the environment.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::phase_space::{GaussianState, PhaseSpaceError, SymplecticOp};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} must be finite")]
    NonFinite { field: &'static str },
    #[error("{field} must be non-negative, got {value}")]
    Negative { field: &'static str, value: f64 },
    #[error("ell must be a positive integer")]
    ZeroEll,
    #[error("transmissivity must lie in [0, 1], got {0}")]
    Transmissivity(f64),
}

/// Full parameter set for one evaluation of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// OPA squeezing factor.
    pub g: f64,
    /// OAM quantum number.
    pub ell: u32,
    /// Coherent amplitude `|alpha|`.
    pub alpha_mag: f64,
    /// Amplitude angle of the input coherent state (radians).
    pub theta: f64,
    /// Angular displacement between the Dove prisms (radians).
    pub phi: f64,
    /// Transmissivity shared by both arms.
    pub transmissivity: f64,
}

impl ExperimentConfig {
    /// Lossless configuration with `theta = phi = 0`.
    pub fn new(g: f64, ell: u32, alpha_mag: f64) -> Self {
        Self { g, ell, alpha_mag, theta: 0.0, phi: 0.0, transmissivity: 1.0 }
    }

    pub fn from_alpha_sq(g: f64, ell: u32, alpha_sq: f64) -> Self {
        Self::new(g, ell, libm::sqrt(alpha_sq))
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_transmissivity(mut self, transmissivity: f64) -> Self {
        self.transmissivity = transmissivity;
        self
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha_mag * self.alpha_mag
    }

    /// Relative phase `2 ell phi` imprinted by the rotated Dove prism.
    pub fn oam_phase(&self) -> f64 {
        2.0 * f64::from(self.ell) * self.phi
    }

    pub fn is_lossless(&self) -> bool {
        self.transmissivity == 1.0
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, value) in [
            ("g", self.g),
            ("alpha_mag", self.alpha_mag),
            ("theta", self.theta),
            ("phi", self.phi),
            ("transmissivity", self.transmissivity),
        ] {
            if !value.is_finite() {
                return Err(ConfigError::NonFinite { field });
            }
        }
        if self.g < 0.0 {
            return Err(ConfigError::Negative { field: "g", value: self.g });
        }
        if self.alpha_mag < 0.0 {
            return Err(ConfigError::Negative { field: "alpha_mag", value: self.alpha_mag });
        }
        if self.ell == 0 {
            return Err(ConfigError::ZeroEll);
        }
        if !(0.0..=1.0).contains(&self.transmissivity) {
            return Err(ConfigError::Transmissivity(self.transmissivity));
        }
        Ok(())
    }
}

/// One step of a [`Pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Displace { mode: usize, magnitude: f64, angle: f64 },
    Transform(SymplecticOp),
    TraceOut(Vec<usize>),
}

/// Ordered element sequence applied to a vacuum input.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    input_modes: usize,
    stages: Vec<Stage>,
}

impl Pipeline {
    pub fn input_modes(&self) -> usize {
        self.input_modes
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn is_lossy(&self) -> bool {
        self.input_modes > 2
    }

    /// Pushes vacuum through every stage.
    pub fn run(&self) -> Result<GaussianState, PhaseSpaceError> {
        self.run_from(GaussianState::vacuum(self.input_modes))
    }

    pub fn run_from(&self, input: GaussianState) -> Result<GaussianState, PhaseSpaceError> {
        self.stages.iter().try_fold(input, |state, stage| match stage {
            Stage::Displace { mode, magnitude, angle } => state.displace(*mode, *magnitude, *angle),
            Stage::Transform(op) => op.apply(&state),
            Stage::TraceOut(modes) => state.trace_out(modes),
        })
    }
}

fn input_stage(config: &ExperimentConfig) -> Stage {
    Stage::Displace { mode: 0, magnitude: config.alpha_mag, angle: config.theta }
}

/// `[displace A, OPA(g), AD(ell, phi), BS]` on two modes.
pub fn build_lossless(config: &ExperimentConfig) -> Result<Pipeline, ConfigError> {
    config.validate()?;
    Ok(Pipeline {
        input_modes: 2,
        stages: vec![
            input_stage(config),
            Stage::Transform(SymplecticOp::opa(config.g)),
            Stage::Transform(SymplecticOp::angular_displacement(config.ell, config.phi)),
            Stage::Transform(SymplecticOp::beam_splitter()),
        ],
    })
}

/// `[displace A, OPA+I, AD+I, VBS(T), BS+I, trace out environment]` on
/// two system and two environment modes.
pub fn build_lossy(config: &ExperimentConfig) -> Result<Pipeline, ConfigError> {
    config.validate()?;
    let extend =
        |op: SymplecticOp| op.extend_with_environment().expect("two-mode elements always extend to the 8x8 system+environment space");
    let vbs = SymplecticOp::virtual_beam_splitter(config.transmissivity).map_err(|_| ConfigError::Transmissivity(config.transmissivity))?;
    Ok(Pipeline {
        input_modes: 4,
        stages: vec![
            input_stage(config),
            Stage::Transform(extend(SymplecticOp::opa(config.g))),
            Stage::Transform(extend(SymplecticOp::angular_displacement(config.ell, config.phi))),
            Stage::Transform(vbs),
            Stage::Transform(extend(SymplecticOp::beam_splitter())),
            Stage::TraceOut(vec![2, 3]),
        ],
    })
}

/// Lossless pipeline when `T = 1`, lossy pipeline otherwise.
pub fn build(config: &ExperimentConfig) -> Result<Pipeline, ConfigError> {
    if config.is_lossless() {
        build_lossless(config)
    } else {
        build_lossy(config)
    }
}

/// State right after the OPA, where the probe photon number is defined.
pub fn post_opa_state(config: &ExperimentConfig) -> Result<GaussianState, ConfigError> {
    config.validate()?;
    let pipeline = Pipeline { input_modes: 2, stages: vec![input_stage(config), Stage::Transform(SymplecticOp::opa(config.g))] };
    Ok(pipeline.run().expect("two-mode stages on a two-mode vacuum"))
}

/// Mean photon number inside the interferometer,
/// `N = cosh(2g) |alpha|^2 + 2 sinh^2 g`.
pub fn mean_photon_number(config: &ExperimentConfig) -> f64 {
    let s = libm::sinh(config.g);
    libm::cosh(2.0 * config.g) * config.alpha_sq() + 2.0 * s * s
}
