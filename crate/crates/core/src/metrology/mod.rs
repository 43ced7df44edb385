//! Balanced homodyne statistics on output port A and the sensitivity figures
//! built from them.
//!
//! Everything here is a closed-form expression in the configuration. The
//! [`engine`] submodule recomputes the same homodyne moments by propagating
//! Gaussian states, and the two routes are cross-checked in the tests.
//!
//! Sign and convention summary (`psi = 2 ell phi`):
//!
//! - `<X> = sqrt2 |alpha| [cos(theta + psi) cosh g + cos(theta) sinh g]`
//! - `Var X = cosh 2g + sinh 2g cos psi`, independent of `theta` and `|alpha|`
//! - `dphi = Delta X / |d<X>/dphi|`, optimal at `psi = pi`, `theta = +-pi/2`
//! - loss of transmissivity `T` in both arms: `<X>_L = sqrt(T) <X>`,
//!   `<X^2>_L = T <X^2> + 1 - T`

pub mod engine;

use core::f64::consts::{PI, SQRT_2};

use thiserror::Error;

use crate::interferometer::{mean_photon_number, ConfigError, ExperimentConfig};
use crate::phase_space::PhaseSpaceError;
use crate::roots::{bisect, RootError};

/// Slope magnitude below which the error-propagation sensitivity is
/// reported as divergent.
pub const DIVERGENCE_SLOPE: f64 = 1e-12;

/// Most negative variance tolerated (and clamped to zero) before the
/// moments are declared inconsistent.
pub const NEGATIVE_VARIANCE_TOLERANCE: f64 = 1e-9;

/// Bracket width on `T` at which the loss-threshold bisection stops.
pub const MAX_LOSS_T_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MetrologyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    PhaseSpace(#[from] PhaseSpaceError),
    #[error("signal slope {slope:e} vanishes, sensitivity diverges")]
    Divergent { slope: f64 },
    #[error("transmissivity is zero, every signal photon is lost")]
    TotalLoss,
    #[error("negative quadrature variance {0:e}")]
    NegativeVariance(f64),
    #[error("homodyne signal is identically zero")]
    ZeroSignal,
    #[error("mean photon number is zero")]
    ZeroPhotonNumber,
    #[error("quantum Cramér-Rao bound undefined for g = |alpha| = 0")]
    DegenerateQcrb,
    #[error("optimal lossy sensitivity is not monotone in T near T = {0}")]
    NonMonotone(f64),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// `<X_A>` for the lossless interferometer.
pub fn homodyne_mean(c: &ExperimentConfig) -> f64 {
    SQRT_2 * c.alpha_mag * (libm::cos(c.theta + c.oam_phase()) * libm::cosh(c.g) + libm::cos(c.theta) * libm::sinh(c.g))
}

/// `<X_A^2>` for the lossless interferometer.
pub fn homodyne_second_moment(c: &ExperimentConfig) -> f64 {
    let (g, a2, th, psi) = (c.g, c.alpha_sq(), c.theta, c.oam_phase());
    let (ch, sh) = (libm::cosh(g), libm::sinh(g));
    libm::cos(2.0 * th + 2.0 * psi) * ch * ch * a2
        + libm::cos(2.0 * th) * sh * sh * a2
        + (libm::cosh(2.0 * g) + libm::cos(psi) * libm::sinh(2.0 * g)) * (a2 + 1.0)
        + libm::cos(2.0 * th + psi) * libm::sinh(2.0 * g) * a2
}

/// `cosh 2g + sinh 2g cos(2 ell phi)`: the lossless quadrature variance.
pub fn quadrature_variance(c: &ExperimentConfig) -> f64 {
    libm::cosh(2.0 * c.g) + libm::sinh(2.0 * c.g) * libm::cos(c.oam_phase())
}

fn fluctuation_from_moments(mean: f64, second: f64) -> Result<f64, MetrologyError> {
    let var = second - mean * mean;
    if var < -NEGATIVE_VARIANCE_TOLERANCE * second.abs().max(1.0) {
        return Err(MetrologyError::NegativeVariance(var));
    }
    Ok(libm::sqrt(var.max(0.0)))
}

/// `Delta X_A = sqrt(<X^2> - <X>^2)` from the lossless moment formulas.
pub fn quadrature_fluctuation(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    fluctuation_from_moments(homodyne_mean(c), homodyne_second_moment(c))
}

/// Analytic `d<X_A>/dphi` (lossless).
pub fn signal_slope(c: &ExperimentConfig) -> f64 {
    -2.0 * SQRT_2 * f64::from(c.ell) * c.alpha_mag * libm::cosh(c.g) * libm::sin(c.theta + c.oam_phase())
}

/// Lossless error-propagation sensitivity
/// `sqrt(cosh 2g + sinh 2g cos psi) / (2 sqrt2 ell cosh g |alpha sin(theta + psi)|)`.
pub fn sensitivity(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let slope = signal_slope(c);
    if slope.abs() < DIVERGENCE_SLOPE {
        return Err(MetrologyError::Divergent { slope });
    }
    let denom = 2.0 * SQRT_2 * f64::from(c.ell) * libm::cosh(c.g) * (c.alpha_mag * libm::sin(c.theta + c.oam_phase())).abs();
    Ok(libm::sqrt(quadrature_variance(c)) / denom)
}

fn check_transmissivity(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let t = c.transmissivity;
    if !(0.0..=1.0).contains(&t) {
        return Err(ConfigError::Transmissivity(t).into());
    }
    if t == 0.0 {
        return Err(MetrologyError::TotalLoss);
    }
    Ok(t)
}

/// `<X_A>_L = sqrt(T) <X_A>`.
pub fn homodyne_mean_lossy(c: &ExperimentConfig) -> f64 {
    libm::sqrt(c.transmissivity) * homodyne_mean(c)
}

/// `<X_A^2>_L = T <X_A^2> + (1 - T)`.
pub fn homodyne_second_moment_lossy(c: &ExperimentConfig) -> f64 {
    c.transmissivity * homodyne_second_moment(c) + (1.0 - c.transmissivity)
}

pub fn quadrature_fluctuation_lossy(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    fluctuation_from_moments(homodyne_mean_lossy(c), homodyne_second_moment_lossy(c))
}

/// Lossy sensitivity in the published form
/// `sqrt(T [cosh 2g + sinh 2g cos psi - 1] + 1) / (2 sqrt2 T ell cosh g |alpha sin(theta + psi)|)`.
///
/// The denominator carries `T`, whereas error propagation from the lossy
/// moments gives `sqrt(T)` (see [`sensitivity_lossy_propagated`]). This form
/// is the one the loss-threshold search ([`max_allowable_loss`]) is built on.
pub fn sensitivity_lossy(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let t = check_transmissivity(c)?;
    let slope = t * signal_slope(c);
    if slope.abs() < DIVERGENCE_SLOPE {
        return Err(MetrologyError::Divergent { slope });
    }
    let num = libm::sqrt(t * (quadrature_variance(c) - 1.0) + 1.0);
    let denom = 2.0 * SQRT_2 * t * f64::from(c.ell) * libm::cosh(c.g) * (c.alpha_mag * libm::sin(c.theta + c.oam_phase())).abs();
    Ok(num / denom)
}

/// Lossy sensitivity from error propagation of the lossy moments:
/// `sqrt(T [Var X - 1] + 1) / (sqrt(T) |d<X>/dphi|)`.
pub fn sensitivity_lossy_propagated(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let t = check_transmissivity(c)?;
    let slope = libm::sqrt(t) * signal_slope(c);
    if slope.abs() < DIVERGENCE_SLOPE {
        return Err(MetrologyError::Divergent { slope });
    }
    Ok(libm::sqrt(t * (quadrature_variance(c) - 1.0) + 1.0) / slope.abs())
}

/// Fringe visibility `(max - min) / (|max| + |min|)` of a sampled signal.
/// `None` when the samples are all zero.
pub fn visibility_of(samples: &[f64]) -> Option<f64> {
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    for &s in samples {
        max = max.max(s);
        min = min.min(s);
    }
    let denom = max.abs() + min.abs();
    if samples.is_empty() || denom == 0.0 || !denom.is_finite() {
        return None;
    }
    Some((max - min) / denom)
}

fn phi_samples(n: usize) -> impl Iterator<Item = f64> {
    // Half-step offset keeps samples off the exact extrema and zero crossings.
    (0..n).map(move |i| 2.0 * PI * (i as f64 + 0.5) / n as f64)
}

/// Visibility of the homodyne signal over `phi in [0, 2 pi)` at the
/// configured `theta` (and transmissivity).
pub fn visibility(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    check_transmissivity(c).map_err(|e| match e {
        MetrologyError::TotalLoss => MetrologyError::ZeroSignal,
        other => other,
    })?;
    if c.alpha_mag == 0.0 {
        return Err(MetrologyError::ZeroSignal);
    }
    let n = 256 * c.ell as usize;
    let samples: alloc::vec::Vec<f64> = phi_samples(n).map(|phi| homodyne_mean_lossy(&c.with_phi(phi))).collect();
    visibility_of(&samples).ok_or(MetrologyError::ZeroSignal)
}

/// Number of local maxima of the signal over one full turn `phi in [0, 2 pi)`,
/// counted on a periodic grid of `samples` points.
pub fn count_signal_maxima(c: &ExperimentConfig, samples: usize) -> usize {
    let s: alloc::vec::Vec<f64> = phi_samples(samples).map(|phi| homodyne_mean_lossy(&c.with_phi(phi))).collect();
    let n = s.len();
    (0..n)
        .filter(|&i| {
            let prev = s[(i + n - 1) % n];
            let next = s[(i + 1) % n];
            s[i] > prev && s[i] >= next
        })
        .count()
}

/// Sign changes of `d<X>/dphi` over one full turn, on a periodic grid.
pub fn count_slope_sign_changes(c: &ExperimentConfig, samples: usize) -> usize {
    let s: alloc::vec::Vec<f64> = phi_samples(samples).map(|phi| signal_slope(&c.with_phi(phi))).collect();
    let n = s.len();
    (0..n).filter(|&i| (s[i] > 0.0) != (s[(i + 1) % n] > 0.0)).count()
}

fn photon_number_checked(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let n = mean_photon_number(c);
    if n <= 0.0 {
        return Err(MetrologyError::ZeroPhotonNumber);
    }
    Ok(n)
}

/// Shot-noise limit `1 / (2 ell sqrt N)`.
pub fn snl(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let n = photon_number_checked(c)?;
    Ok(1.0 / (2.0 * f64::from(c.ell) * libm::sqrt(n)))
}

/// Heisenberg limit `1 / (2 ell N)`.
pub fn hl(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let n = photon_number_checked(c)?;
    Ok(1.0 / (2.0 * f64::from(c.ell) * n))
}

/// Quantum Cramér-Rao bound
/// `1 / (2 ell sqrt(sinh^2 2g + |alpha|^2 [1 + 2 cosh 2g + cosh 4g]))`.
pub fn qcrb(c: &ExperimentConfig) -> Result<f64, MetrologyError> {
    let s2 = libm::sinh(2.0 * c.g);
    let bracket = s2 * s2 + c.alpha_sq() * (1.0 + 2.0 * libm::cosh(2.0 * c.g) + libm::cosh(4.0 * c.g));
    if bracket <= 0.0 {
        return Err(MetrologyError::DegenerateQcrb);
    }
    Ok(1.0 / (2.0 * f64::from(c.ell) * libm::sqrt(bracket)))
}

/// A `(phi, theta)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub phi: f64,
    pub theta: f64,
}

/// Optimal setting: `2 ell phi = pi` puts the variance at its squeezed
/// minimum `e^{-2g}` and `theta = pi/2` then satisfies the phase-matching
/// condition `theta + 2 ell phi = k pi + pi/2`. It depends on neither `g`
/// nor `|alpha|`, and holds with or without loss.
pub fn optimal_operating_point(ell: u32) -> OperatingPoint {
    OperatingPoint { phi: PI / (2.0 * f64::from(ell)), theta: PI / 2.0 }
}

/// Sensitivity at [`optimal_operating_point`]; the lossy form is used when
/// `transmissivity < 1`.
pub fn optimal_sensitivity(g: f64, ell: u32, alpha_mag: f64, transmissivity: f64) -> Result<f64, MetrologyError> {
    let p = optimal_operating_point(ell);
    let c = ExperimentConfig::new(g, ell, alpha_mag).with_phi(p.phi).with_theta(p.theta).with_transmissivity(transmissivity);
    c.validate()?;
    if c.is_lossless() {
        sensitivity(&c)
    } else {
        sensitivity_lossy(&c)
    }
}

/// Large-`g`, large-`|alpha|` approximation of the optimum,
/// `1 / (4 ell cosh g sqrt(cosh 2g) |alpha|)`.
pub fn optimal_sensitivity_asymptotic(g: f64, ell: u32, alpha_mag: f64) -> f64 {
    1.0 / (4.0 * f64::from(ell) * libm::cosh(g) * libm::sqrt(libm::cosh(2.0 * g)) * alpha_mag)
}

/// Coherent-seeded SU(1,1) interferometer without OAM,
/// `1 / (sqrt(N_opa (N_opa + 2)) |alpha|)` with `N_opa = 2 sinh^2 g`.
pub fn su11_sensitivity(g: f64, alpha_mag: f64) -> f64 {
    let s = libm::sinh(g);
    let n_opa = 2.0 * s * s;
    1.0 / (libm::sqrt(n_opa * (n_opa + 2.0)) * alpha_mag)
}

/// Brute-force `(phi, theta)` grid search for the best sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimumSearch {
    /// Points per axis: `phi` covers one signal period `[0, pi/ell)`,
    /// `theta` covers `[0, 2 pi)`.
    pub grid: usize,
}

impl Default for OptimumSearch {
    fn default() -> Self {
        Self { grid: 256 }
    }
}

/// Result of an [`OptimumSearch`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    /// Best point overall (analytic candidate or grid point).
    pub point: OperatingPoint,
    pub sensitivity: f64,
    /// Best point found on the grid alone.
    pub grid_point: OperatingPoint,
    pub grid_sensitivity: f64,
}

impl OptimumSearch {
    pub fn new(grid: usize) -> Self {
        Self { grid }
    }

    /// Minimises the sensitivity of `base` (lossy form when `T < 1`) over the
    /// grid and the analytic candidate. Divergent points are skipped.
    pub fn minimize(&self, base: &ExperimentConfig) -> Result<Optimum, MetrologyError> {
        base.validate()?;
        if base.transmissivity == 0.0 {
            return Err(MetrologyError::TotalLoss);
        }
        if base.alpha_mag == 0.0 {
            return Err(MetrologyError::ZeroSignal);
        }
        let eval = |c: &ExperimentConfig| if c.is_lossless() { sensitivity(c) } else { sensitivity_lossy(c) };
        let n = self.grid.max(1);
        let period = PI / f64::from(base.ell);
        let mut best = (f64::INFINITY, OperatingPoint { phi: f64::NAN, theta: f64::NAN });
        for i in 0..n {
            let phi = period * i as f64 / n as f64;
            for j in 0..n {
                let theta = 2.0 * PI * j as f64 / n as f64;
                if let Ok(v) = eval(&base.with_phi(phi).with_theta(theta)) {
                    if v < best.0 {
                        best = (v, OperatingPoint { phi, theta });
                    }
                }
            }
        }
        let candidate = optimal_operating_point(base.ell);
        let analytic = eval(&base.with_phi(candidate.phi).with_theta(candidate.theta))?;
        let (point, value) = if analytic <= best.0 { (candidate, analytic) } else { (best.1, best.0) };
        Ok(Optimum { point, sensitivity: value, grid_point: best.1, grid_sensitivity: best.0 })
    }
}

/// Loss tolerance of the protocol at one `(g, ell, |alpha|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxLoss {
    /// Largest loss fraction `1 - T` still beating the lossless shot-noise limit.
    pub loss: f64,
    pub transmissivity: f64,
    /// `false` when even the lossless optimum fails to beat the shot-noise
    /// limit; `loss` is then 0.
    pub sub_snl: bool,
    pub iterations: u32,
}

/// Largest loss `1 - T` for which the optimal lossy sensitivity still beats
/// the *lossless* shot-noise limit, found by bisection on `T`.
pub fn max_allowable_loss(g: f64, ell: u32, alpha_mag: f64) -> Result<MaxLoss, MetrologyError> {
    let base = ExperimentConfig::new(g, ell, alpha_mag);
    base.validate()?;
    if alpha_mag == 0.0 {
        return Err(MetrologyError::ZeroSignal);
    }
    let target = snl(&base)?;
    let excess = |t: f64| -> f64 {
        if t <= 0.0 {
            return f64::INFINITY;
        }
        optimal_sensitivity(g, ell, alpha_mag, t).map_or(f64::INFINITY, |s| s - target)
    };
    if excess(1.0) > 0.0 {
        return Ok(MaxLoss { loss: 0.0, transmissivity: 1.0, sub_snl: false, iterations: 0 });
    }
    // The bisection needs a single crossing: the optimum must not increase with T.
    const PROBES: usize = 256;
    let mut prev = excess(1.0 / PROBES as f64);
    for k in 2..=PROBES {
        let t = k as f64 / PROBES as f64;
        let cur = excess(t);
        if cur > prev + 1e-12 * (prev.abs() + target) {
            return Err(MetrologyError::NonMonotone(t));
        }
        prev = cur;
    }
    let bracket = bisect(excess, 0.0, 1.0, MAX_LOSS_T_TOLERANCE)?;
    let t = bracket.midpoint();
    Ok(MaxLoss { loss: 1.0 - t, transmissivity: t, sub_snl: true, iterations: bracket.iterations })
}

/// Homodyne statistics and metrology limits at one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    pub signal_mean: f64,
    pub fluctuation: f64,
    /// `f64::INFINITY` when the signal slope vanishes (see `divergent`).
    pub sensitivity: f64,
    pub divergent: bool,
    pub snl: f64,
    pub hl: f64,
    pub qcrb: f64,
    pub visibility: f64,
}

impl SensitivityReport {
    /// Evaluates every quantity, using the lossy formulas when `T < 1`.
    pub fn evaluate(c: &ExperimentConfig) -> Result<Self, MetrologyError> {
        c.validate()?;
        let (signal_mean, fluctuation, sens) = if c.is_lossless() {
            (homodyne_mean(c), quadrature_fluctuation(c)?, sensitivity(c))
        } else {
            (homodyne_mean_lossy(c), quadrature_fluctuation_lossy(c)?, sensitivity_lossy(c))
        };
        let (sensitivity, divergent) = match sens {
            Ok(v) => (v, false),
            Err(MetrologyError::Divergent { .. }) => (f64::INFINITY, true),
            Err(e) => return Err(e),
        };
        Ok(Self { signal_mean, fluctuation, sensitivity, divergent, snl: snl(c)?, hl: hl(c)?, qcrb: qcrb(c)?, visibility: visibility(c)? })
    }
}

#[cfg(test)]
mod tests;
