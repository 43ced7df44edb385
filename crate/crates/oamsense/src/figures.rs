//! Built-in datasets with fixed parameters.

use std::f64::consts::{FRAC_PI_2, PI};

use clap::ValueEnum;
use oamsense_core::metrology::{self, OptimumSearch};
use oamsense_core::ExperimentConfig;

use crate::sweep::{Axis, Param, Quantity, SweepError, SweepResult, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    /// Homodyne signal over (phi, theta); g=1, ell=3, |alpha|^2=10.
    Fig2,
    /// Sensitivity vs phi at theta=pi/2 with SNL, HL and QCRB columns; g=2, ell=1, |alpha|^2=100.
    Fig3,
    /// Optimal sensitivity and QCRB vs g for |alpha|^2 in {1, 10, 100}; ell=1.
    Fig4,
    /// Lossy sensitivity vs phi at 38% loss with the lossless SNL; g=2, ell=1, |alpha|^2=100.
    Fig6,
    /// Maximum tolerable loss at g=2, ell=1, |alpha|^2=100 (single row).
    Fig7,
    /// Maximum tolerable loss vs g in [0.5, 4] for |alpha|^2 in {10, 100, 1000}; ell=1.
    Fig8,
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
        }
    }

    /// The sweep behind the figure.
    pub fn spec(self) -> SweepSpec {
        let axis = |p, start, stop, n| Axis::linspace(p, start, stop, n).expect("built-in axis");
        let list = |p, v: &[f64]| Axis::list(p, v).expect("built-in axis");
        match self {
            FigureId::Fig2 => SweepSpec::new(
                ExperimentConfig::from_alpha_sq(1.0, 3, 10.0),
                vec![axis(Param::Phi, 0.0, PI, 181), axis(Param::Theta, 0.0, 2.0 * PI, 73)],
                Quantity::Signal,
            ),
            FigureId::Fig3 => SweepSpec::new(
                ExperimentConfig::from_alpha_sq(2.0, 1, 100.0).with_theta(FRAC_PI_2),
                vec![axis(Param::Phi, 0.0, PI, 721)],
                Quantity::Sensitivity,
            )
            .with_extra(&[Quantity::Snl, Quantity::Hl, Quantity::Qcrb]),
            FigureId::Fig4 => SweepSpec::new(
                ExperimentConfig::from_alpha_sq(0.0, 1, 1.0),
                vec![list(Param::AlphaSq, &[1.0, 10.0, 100.0]), axis(Param::G, 0.0, 3.0, 61)],
                Quantity::OptimalSensitivity,
            )
            .with_extra(&[Quantity::Qcrb]),
            FigureId::Fig6 => SweepSpec::new(
                ExperimentConfig::from_alpha_sq(2.0, 1, 100.0).with_theta(FRAC_PI_2).with_transmissivity(0.62),
                vec![axis(Param::Phi, 0.0, PI, 721)],
                Quantity::SensitivityLossy,
            )
            .with_extra(&[Quantity::Snl]),
            FigureId::Fig7 => {
                SweepSpec::new(ExperimentConfig::from_alpha_sq(2.0, 1, 100.0), vec![list(Param::G, &[2.0])], Quantity::MaxLoss)
            }
            FigureId::Fig8 => SweepSpec::new(
                ExperimentConfig::from_alpha_sq(0.5, 1, 10.0),
                vec![list(Param::AlphaSq, &[10.0, 100.0, 1000.0]), axis(Param::G, 0.5, 4.0, 36)],
                Quantity::MaxLoss,
            ),
        }
    }
}

/// Evaluates the figure's sweep and tags it with the figure id.
pub fn reproduce(id: FigureId, search: &OptimumSearch) -> Result<SweepResult, SweepError> {
    let spec = id.spec();
    let mut result = spec.run(search)?;
    result.metadata.insert(0, ("figure".to_string(), id.name().to_string()));
    if id == FigureId::Fig7 {
        let m = metrology::max_allowable_loss(spec.base.g, spec.base.ell, spec.base.alpha_mag)
            .map_err(|source| SweepError::Eval { coords: "g=2".into(), source })?;
        result.push_metadata("threshold_transmissivity", m.transmissivity);
        result.push_metadata("bisection_iterations", m.iterations);
    }
    Ok(result)
}
