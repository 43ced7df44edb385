//! Cross-checks between the Fock oracle, the phase-space engine and the
//! closed-form homodyne statistics.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use clap::ValueEnum;
use oamsense_core::metrology::{self, engine, MetrologyError};
use oamsense_core::{mean_photon_number, ExperimentConfig};
use rayon::prelude::*;
use thiserror::Error;

use crate::fock::{FockError, OracleOptions, OracleReport, PropagatorCache, CUTOFF_STEP};
use crate::sweep::TOOL;

pub const ORACLE_TOLERANCE: f64 = 1e-5;
/// Relative (to `max(1, |value|)`) tolerance for engine-vs-closed-form checks.
pub const ENGINE_TOLERANCE: f64 = 1e-9;
pub const LOSS_TRANSMISSIVITIES: [f64; 3] = [0.25, 0.62, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 100 points: g in {0, 0.3}, |alpha|^2 = 4, ell in {1, 3}, 5 x 5 (theta, phi).
    Quick,
    /// 1728 points: g in {0, 0.25, 0.5}, |alpha|^2 in {0, 1, 4}, ell in {1, 2, 3}, 8 x 8 (theta, phi).
    Full,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Quick => "quick",
            Preset::Full => "full",
        }
    }

    pub fn grid(self) -> Vec<ExperimentConfig> {
        let (gs, alpha_sqs, ells, n): (&[f64], &[f64], &[u32], usize) = match self {
            Preset::Quick => (&[0.0, 0.3], &[4.0], &[1, 3], 5),
            Preset::Full => (&[0.0, 0.25, 0.5], &[0.0, 1.0, 4.0], &[1, 2, 3], 8),
        };
        let mut out = Vec::new();
        for &g in gs {
            for &a2 in alpha_sqs {
                for &ell in ells {
                    for i in 0..n {
                        for j in 0..n {
                            let theta = 2.0 * PI * i as f64 / n as f64;
                            let phi = PI * j as f64 / n as f64;
                            out.push(ExperimentConfig::from_alpha_sq(g, ell, a2).with_theta(theta).with_phi(phi));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    OracleMean,
    OracleSecondMoment,
    OraclePhotonNumber,
    OracleEngineMean,
    OracleEngineSecondMoment,
    OracleEnginePhotonNumber,
    EngineMean,
    EngineSecondMoment,
    LossyMean,
    LossyVariance,
}

impl Check {
    pub const ALL: [Check; 10] = [
        Check::OracleMean,
        Check::OracleSecondMoment,
        Check::OraclePhotonNumber,
        Check::OracleEngineMean,
        Check::OracleEngineSecondMoment,
        Check::OracleEnginePhotonNumber,
        Check::EngineMean,
        Check::EngineSecondMoment,
        Check::LossyMean,
        Check::LossyVariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::OracleMean => "oracle_mean_vs_closed_form",
            Check::OracleSecondMoment => "oracle_second_moment_vs_closed_form",
            Check::OraclePhotonNumber => "oracle_photon_number_vs_closed_form",
            Check::OracleEngineMean => "oracle_mean_vs_engine",
            Check::OracleEngineSecondMoment => "oracle_second_moment_vs_engine",
            Check::OracleEnginePhotonNumber => "oracle_photon_number_vs_engine",
            Check::EngineMean => "engine_mean_vs_closed_form",
            Check::EngineSecondMoment => "engine_second_moment_vs_closed_form",
            Check::LossyMean => "lossy_mean_vs_closed_form",
            Check::LossyVariance => "lossy_variance_vs_closed_form",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Check::OracleMean
            | Check::OracleSecondMoment
            | Check::OraclePhotonNumber
            | Check::OracleEngineMean
            | Check::OracleEngineSecondMoment
            | Check::OracleEnginePhotonNumber => ORACLE_TOLERANCE,
            _ => ENGINE_TOLERANCE,
        }
    }
}

/// Worst deviation seen for one check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckResult {
    pub check: Check,
    pub worst: f64,
    pub at: Option<ExperimentConfig>,
    pub samples: usize,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.worst <= self.check.tolerance()
    }
}

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub preset: Preset,
    pub oracle: OracleOptions,
}

impl ValidateOptions {
    pub fn new(preset: Preset) -> Self {
        ValidateOptions { preset, oracle: OracleOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub preset: Preset,
    pub options: OracleOptions,
    pub points: usize,
    pub checks: Vec<CheckResult>,
    /// Points whose tail mass stayed above tolerance at the highest cutoff.
    pub unreliable: Vec<(ExperimentConfig, f64)>,
    pub max_cutoff_used: usize,
    pub max_tail_mass: f64,
    pub elapsed: Duration,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.unreliable.is_empty() && self.checks.iter().all(CheckResult::passed)
    }

    pub fn check(&self, check: Check) -> &CheckResult {
        self.checks.iter().find(|r| r.check == check).expect("every check is reported")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool: {TOOL}");
        let _ = writeln!(out, "# preset: {}", self.preset.name());
        let _ = writeln!(out, "# points: {}", self.points);
        let _ = writeln!(out, "# mixing_angle: {:?}", self.options.mixing_angle);
        let _ = writeln!(out, "# tail_tolerance: {:e}", self.options.tail_tolerance);
        let _ = writeln!(out, "# max_cutoff_used: {}", self.max_cutoff_used);
        let _ = writeln!(out, "# max_tail_mass: {:e}", self.max_tail_mass);
        let _ = writeln!(out, "# unreliable_points: {}", self.unreliable.len());
        let _ = writeln!(out, "# elapsed_s: {:.1}", self.elapsed.as_secs_f64());
        let _ = writeln!(out, "# result: {}", if self.passed() { "pass" } else { "FAIL" });
        let _ = writeln!(out, "check,worst_deviation,tolerance,status,g,ell,alpha_sq,theta,phi");
        for r in &self.checks {
            let status = if r.passed() { "pass" } else { "FAIL" };
            let at = r.at.map_or(",,,,".to_string(), |c| format!("{:?},{},{:?},{:?},{:?}", c.g, c.ell, c.alpha_sq(), c.theta, c.phi));
            let _ = writeln!(out, "{},{:e},{:e},{status},{at}", r.check.name(), r.worst, r.check.tolerance());
        }
        out
    }
}

struct Tally(Vec<CheckResult>);

impl Tally {
    fn new() -> Self {
        Tally(Check::ALL.iter().map(|&check| CheckResult { check, worst: 0.0, at: None, samples: 0 }).collect())
    }

    fn record(&mut self, check: Check, deviation: f64, c: &ExperimentConfig) {
        let r = self.0.iter_mut().find(|r| r.check == check).expect("known check");
        r.samples += 1;
        // NaN counts as the worst possible deviation.
        let deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
        if deviation > r.worst {
            r.worst = deviation;
            r.at = Some(*c);
        }
    }
}

fn scaled(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Everything not involving the oracle at one point.
fn engine_deviations(c: &ExperimentConfig) -> Result<Vec<(Check, f64)>, MetrologyError> {
    let clean = engine::lossless_moments(c)?;
    let mut out = vec![
        (Check::EngineMean, scaled(clean.mean, metrology::homodyne_mean(c))),
        (Check::EngineSecondMoment, scaled(clean.second, metrology::homodyne_second_moment(c))),
    ];
    for t in LOSS_TRANSMISSIVITIES {
        let lossy_c = c.with_transmissivity(t);
        let lossy = engine::lossy_moments(&lossy_c)?;
        out.push((Check::LossyMean, scaled(lossy.mean, metrology::homodyne_mean_lossy(&lossy_c))));
        let var = t * metrology::quadrature_variance(c) + 1.0 - t;
        out.push((Check::LossyVariance, scaled(lossy.variance(), var)));
    }
    Ok(out)
}

fn oracle_deviations(c: &ExperimentConfig, r: &OracleReport) -> Result<Vec<(Check, f64)>, MetrologyError> {
    let m = engine::lossless_moments(c)?;
    let n = engine::photon_number(c)?;
    Ok(vec![
        (Check::OracleMean, (r.x_mean - metrology::homodyne_mean(c)).abs()),
        (Check::OracleSecondMoment, (r.x_second_moment - metrology::homodyne_second_moment(c)).abs()),
        (Check::OraclePhotonNumber, (r.photon_number - mean_photon_number(c)).abs()),
        (Check::OracleEngineMean, (r.x_mean - m.mean).abs()),
        (Check::OracleEngineSecondMoment, (r.x_second_moment - m.second).abs()),
        (Check::OracleEnginePhotonNumber, (r.photon_number - n).abs()),
    ])
}

/// Runs the preset grid. Points sharing `g` share propagators; points whose
/// tail mass is too large are retried at higher cutoffs.
pub fn validate(opts: &ValidateOptions) -> Result<ValidationReport, ValidateError> {
    let start = Instant::now();
    let grid = opts.preset.grid();
    let mut tally = Tally::new();
    let mut cache = PropagatorCache::new(opts.oracle.mixing_angle);
    let mut unreliable = Vec::new();
    let mut max_cutoff_used = 0;
    let mut max_tail_mass: f64 = 0.0;

    let engine_rows: Vec<_> = grid.par_iter().map(engine_deviations).collect::<Result<_, _>>()?;
    for (c, devs) in grid.iter().zip(engine_rows) {
        for (check, d) in devs {
            tally.record(check, d, c);
        }
    }

    let mut gs: Vec<f64> = grid.iter().map(|c| c.g).collect();
    gs.sort_by(f64::total_cmp);
    gs.dedup();
    for g in gs {
        let mut pending: Vec<ExperimentConfig> = grid.iter().filter(|c| c.g == g).copied().collect();
        let mut cutoff = opts.oracle.cutoff;
        while !pending.is_empty() {
            let props = cache.get(g, cutoff)?;
            let reports: Vec<OracleReport> = pending.par_iter().map(|c| props.report(c, opts.oracle.tail_tolerance)).collect();
            let last = cutoff >= opts.oracle.max_cutoff;
            let mut retry = Vec::new();
            for (c, r) in pending.iter().zip(&reports) {
                if !r.reliable && !last {
                    retry.push(*c);
                    continue;
                }
                if !r.reliable {
                    unreliable.push((*c, r.tail_mass));
                }
                max_cutoff_used = max_cutoff_used.max(r.cutoff_used);
                max_tail_mass = max_tail_mass.max(r.tail_mass);
                for (check, d) in oracle_deviations(c, r)? {
                    tally.record(check, d, c);
                }
            }
            pending = retry;
            cutoff = (cutoff + CUTOFF_STEP).min(opts.oracle.max_cutoff);
        }
    }

    Ok(ValidationReport {
        preset: opts.preset,
        options: opts.oracle,
        points: grid.len(),
        checks: tally.0,
        unreliable,
        max_cutoff_used,
        max_tail_mass,
        elapsed: start.elapsed(),
    })
}
