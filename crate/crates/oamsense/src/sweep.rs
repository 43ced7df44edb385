//! Grid evaluation and CSV output.

use std::fmt;
use std::io::{self, Write};

use oamsense_core::metrology::{self, MetrologyError, OptimumSearch};
use oamsense_core::{ConfigError, ExperimentConfig};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::render_sweep;

pub const TOOL: &str = concat!("oamsense ", env!("CARGO_PKG_VERSION"));

/// A sweepable field of [`ExperimentConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    G,
    Ell,
    AlphaSq,
    Theta,
    Phi,
    Transmissivity,
}

impl Param {
    pub const ALL: [Param; 6] = [Param::G, Param::Ell, Param::AlphaSq, Param::Theta, Param::Phi, Param::Transmissivity];

    pub fn name(self) -> &'static str {
        match self {
            Param::G => "g",
            Param::Ell => "ell",
            Param::AlphaSq => "alpha_sq",
            Param::Theta => "theta",
            Param::Phi => "phi",
            Param::Transmissivity => "transmissivity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn get(self, c: &ExperimentConfig) -> f64 {
        match self {
            Param::G => c.g,
            Param::Ell => f64::from(c.ell),
            Param::AlphaSq => c.alpha_sq(),
            Param::Theta => c.theta,
            Param::Phi => c.phi,
            Param::Transmissivity => c.transmissivity,
        }
    }

    /// Copy of `c` with this field set to `v`, validated.
    pub fn apply(self, c: &ExperimentConfig, v: f64) -> Result<ExperimentConfig, ConfigError> {
        let mut out = *c;
        match self {
            Param::G => out.g = v,
            Param::Ell => out.ell = v as u32,
            Param::AlphaSq => {
                if v < 0.0 {
                    return Err(ConfigError::Negative { field: "alpha_sq", value: v });
                }
                out.alpha_mag = v.sqrt();
            }
            Param::Theta => out.theta = v,
            Param::Phi => out.phi = v,
            Param::Transmissivity => out.transmissivity = v,
        }
        out.validate()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AxisError {
    #[error("axis needs at least two points (or one point with start = stop)")]
    TooFewPoints,
    #[error("axis values must be finite")]
    NonFinite,
    #[error("ell axis values must be positive integers, got {0}")]
    NonIntegerEll(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AxisValues {
    Linspace { start: f64, stop: f64, count: usize },
    List(Vec<f64>),
}

/// One sweep axis with its grid points expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub spec: AxisValues,
    values: Vec<f64>,
}

impl Axis {
    pub fn new(param: Param, spec: AxisValues) -> Result<Self, AxisError> {
        let values = match &spec {
            AxisValues::Linspace { start, stop, count } => match count {
                0 => return Err(AxisError::TooFewPoints),
                1 if start != stop => return Err(AxisError::TooFewPoints),
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
            AxisValues::List(v) if v.is_empty() => return Err(AxisError::TooFewPoints),
            AxisValues::List(v) => v.clone(),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AxisError::NonFinite);
        }
        if param == Param::Ell {
            if let Some(&bad) = values.iter().find(|&&v| v < 1.0 || v.fract() != 0.0 || v > f64::from(u32::MAX)) {
                return Err(AxisError::NonIntegerEll(bad));
            }
        }
        Ok(Axis { param, spec, values })
    }

    pub fn linspace(param: Param, start: f64, stop: f64, count: usize) -> Result<Self, AxisError> {
        Self::new(param, AxisValues::Linspace { start, stop, count })
    }

    pub fn list(param: Param, values: &[f64]) -> Result<Self, AxisError> {
        Self::new(param, AxisValues::List(values.to_vec()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Homodyne mean `<X_A>`, scaled by `sqrt(T)` under loss.
    Signal,
    /// Lossless error-propagation sensitivity (ignores `transmissivity`).
    Sensitivity,
    SensitivityLossy,
    /// Best sensitivity over `(phi, theta)` by grid search.
    OptimalSensitivity,
    Qcrb,
    Snl,
    Hl,
    Visibility,
    /// Maximum tolerable loss at the configuration's `(g, ell, alpha)`.
    MaxLoss,
}

impl Quantity {
    pub const ALL: [Quantity; 9] = [
        Quantity::Signal,
        Quantity::Sensitivity,
        Quantity::SensitivityLossy,
        Quantity::OptimalSensitivity,
        Quantity::Qcrb,
        Quantity::Snl,
        Quantity::Hl,
        Quantity::Visibility,
        Quantity::MaxLoss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Signal => "signal",
            Quantity::Sensitivity => "sensitivity",
            Quantity::SensitivityLossy => "sensitivity_lossy",
            Quantity::OptimalSensitivity => "optimal_sensitivity",
            Quantity::Qcrb => "qcrb",
            Quantity::Snl => "snl",
            Quantity::Hl => "hl",
            Quantity::Visibility => "visibility",
            Quantity::MaxLoss => "max_loss",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name() == name)
    }

    /// Value and flag at one configuration. Expected singularities become
    /// flagged sentinels; anything else is an error.
    pub fn evaluate(self, c: &ExperimentConfig, search: &OptimumSearch) -> Result<(f64, Flag), MetrologyError> {
        let plain = |r: Result<f64, MetrologyError>| r.map(|v| (v, Flag::None));
        let result = match self {
            Quantity::Signal => {
                c.validate()?;
                Ok((metrology::homodyne_mean_lossy(c), Flag::None))
            }
            Quantity::Sensitivity => plain(metrology::sensitivity(c)),
            Quantity::SensitivityLossy => plain(metrology::sensitivity_lossy(c)),
            Quantity::OptimalSensitivity => search.minimize(c).map(|o| (o.sensitivity, Flag::None)),
            Quantity::Qcrb => plain(metrology::qcrb(c)),
            Quantity::Snl => plain(metrology::snl(c)),
            Quantity::Hl => plain(metrology::hl(c)),
            Quantity::Visibility => plain(metrology::visibility(c)),
            Quantity::MaxLoss => metrology::max_allowable_loss(c.g, c.ell, c.alpha_mag)
                .map(|m| (m.loss, if m.sub_snl { Flag::None } else { Flag::NoSubSnl })),
        };
        match result {
            Err(MetrologyError::Divergent { .. }) => Ok((f64::INFINITY, Flag::Divergent)),
            Err(MetrologyError::TotalLoss) => Ok((f64::INFINITY, Flag::TotalLoss)),
            Err(MetrologyError::ZeroSignal | MetrologyError::ZeroPhotonNumber | MetrologyError::DegenerateQcrb) => {
                Ok((f64::NAN, Flag::Undefined))
            }
            other => other,
        }
    }
}

/// Marks values that are sentinels or otherwise need care.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Flag {
    None,
    /// Signal slope vanishes: sensitivity is infinite.
    Divergent,
    /// `T = 0`.
    TotalLoss,
    /// Quantity not defined here (no signal or no photons).
    Undefined,
    /// Lossless optimum does not beat the shot-noise limit; loss reported as 0.
    NoSubSnl,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::None => "",
            Flag::Divergent => "divergent",
            Flag::TotalLoss => "total_loss",
            Flag::Undefined => "undefined",
            Flag::NoSubSnl => "no_sub_snl",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A 1- or 2-axis sweep of one quantity, optionally with extra columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub axes: Vec<Axis>,
    pub quantity: Quantity,
    pub extra: Vec<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("a sweep needs one or two axes, got {0}")]
    AxisCount(usize),
    #[error("at {coords}: {source}")]
    Eval { coords: String, source: MetrologyError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axes: Vec<f64>,
    pub values: Vec<f64>,
    pub flag: Flag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis_names: Vec<String>,
    /// `value` first, then one column per extra quantity.
    pub value_names: Vec<String>,
    pub rows: Vec<Row>,
    /// `# key: value` lines written before the header, in order.
    pub metadata: Vec<(String, String)>,
}

impl SweepSpec {
    pub fn new(base: ExperimentConfig, axes: Vec<Axis>, quantity: Quantity) -> Self {
        SweepSpec { base, axes, quantity, extra: Vec::new() }
    }

    pub fn with_extra(mut self, extra: &[Quantity]) -> Self {
        self.extra = extra.to_vec();
        self
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.values().len()).product()
    }

    /// SHA-256 of the canonical sweep text.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(render_sweep(self).as_bytes()))
    }

    /// Grid coordinates of point `k`, first axis slowest.
    fn coords(&self, mut k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (i, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.values().len();
            out[i] = axis.values()[k % n];
            k /= n;
        }
        out
    }

    fn eval_point(&self, coords: &[f64], search: &OptimumSearch) -> Result<Row, SweepError> {
        let at = || self.axes.iter().zip(coords).map(|(a, v)| format!("{}={v}", a.param.name())).collect::<Vec<_>>().join(", ");
        let mut c = self.base;
        for (axis, &v) in self.axes.iter().zip(coords) {
            c = axis.param.apply(&c, v).map_err(|e| SweepError::Eval { coords: at(), source: e.into() })?;
        }
        let mut values = Vec::with_capacity(1 + self.extra.len());
        let mut flag = Flag::None;
        for q in std::iter::once(self.quantity).chain(self.extra.iter().copied()) {
            let (v, f) = q.evaluate(&c, search).map_err(|source| SweepError::Eval { coords: at(), source })?;
            values.push(v);
            flag = flag.max(f);
        }
        Ok(Row { axes: coords.to_vec(), values, flag })
    }

    /// Evaluates every grid point in parallel; rows come back in grid order.
    pub fn run(&self, search: &OptimumSearch) -> Result<SweepResult, SweepError> {
        if !(1..=2).contains(&self.axes.len()) {
            return Err(SweepError::AxisCount(self.axes.len()));
        }
        let rows =
            (0..self.point_count()).into_par_iter().map(|k| self.eval_point(&self.coords(k), search)).collect::<Result<Vec<_>, _>>()?;
        let mut value_names = vec!["value".to_string()];
        value_names.extend(self.extra.iter().map(|q| q.name().to_string()));
        let mut metadata = vec![
            ("tool".to_string(), TOOL.to_string()),
            ("quantity".to_string(), self.quantity.name().to_string()),
            ("config_sha256".to_string(), self.digest()),
        ];
        for p in Param::ALL {
            if !self.axes.iter().any(|a| a.param == p) {
                metadata.push((p.name().to_string(), format!("{}", p.get(&self.base))));
            }
        }
        if self.quantity == Quantity::OptimalSensitivity || self.extra.contains(&Quantity::OptimalSensitivity) {
            metadata.push(("optimum_grid".to_string(), search.grid.to_string()));
        }
        Ok(SweepResult { axis_names: self.axes.iter().map(|a| a.param.name().to_string()).collect(), value_names, rows, metadata })
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:?}")
    }
}

impl SweepResult {
    pub fn push_metadata(&mut self, key: &str, value: impl fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    /// Writes the metadata block, header and rows. `generated_unix` goes on
    /// its own last metadata line so runs can be diffed without it.
    pub fn write_csv<W: Write>(&self, out: &mut W, generated_unix: u64) -> io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "# generated_unix: {generated_unix}")?;
        let header: Vec<&str> =
            self.axis_names.iter().chain(&self.value_names).map(String::as_str).chain(std::iter::once("flag")).collect();
        writeln!(out, "{}", header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.axes.iter().chain(&row.values).map(|&v| fmt_value(v)).collect();
            writeln!(out, "{},{}", cells.join(","), row.flag)?;
        }
        Ok(())
    }

    pub fn to_csv(&self, generated_unix: u64) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, generated_unix).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Column `name` (axis or value) as a vector.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if let Some(i) = self.axis_names.iter().position(|n| n == name) {
            return Some(self.rows.iter().map(|r| r.axes[i]).collect());
        }
        let i = self.value_names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn base() -> ExperimentConfig {
        ExperimentConfig::from_alpha_sq(1.0, 3, 10.0)
    }

    #[test]
    fn linspace_and_list_axes() {
        assert_eq!(Axis::linspace(Param::Phi, 0.0, 1.0, 5).unwrap().values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(Axis::linspace(Param::G, 2.0, 2.0, 1).unwrap().values(), &[2.0]);
        assert_eq!(Axis::linspace(Param::G, 2.0, 3.0, 1), Err(AxisError::TooFewPoints));
        assert_eq!(Axis::linspace(Param::G, 2.0, 3.0, 0), Err(AxisError::TooFewPoints));
        assert_eq!(Axis::list(Param::Ell, &[1.0, 2.5]), Err(AxisError::NonIntegerEll(2.5)));
        assert_eq!(Axis::list(Param::Ell, &[0.0]), Err(AxisError::NonIntegerEll(0.0)));
        assert_eq!(Axis::list(Param::Phi, &[]), Err(AxisError::TooFewPoints));
    }

    #[test]
    fn rows_are_lexicographic() {
        let spec = SweepSpec::new(
            base(),
            vec![Axis::list(Param::Phi, &[0.0, 1.0]).unwrap(), Axis::list(Param::Theta, &[5.0, 6.0, 7.0]).unwrap()],
            Quantity::Signal,
        );
        let r = spec.run(&OptimumSearch::default()).unwrap();
        let coords: Vec<Vec<f64>> = r.rows.iter().map(|row| row.axes.clone()).collect();
        assert_eq!(coords, vec![vec![0.0, 5.0], vec![0.0, 6.0], vec![0.0, 7.0], vec![1.0, 5.0], vec![1.0, 6.0], vec![1.0, 7.0]]);
        for row in &r.rows {
            let c = base().with_phi(row.axes[0]).with_theta(row.axes[1]);
            assert_eq!(row.values[0], metrology::homodyne_mean(&c));
        }
    }

    #[test]
    fn single_point_equals_direct_evaluation() {
        let c = base().with_theta(0.4).with_phi(0.3);
        let spec = SweepSpec::new(c, vec![Axis::list(Param::Phi, &[0.3]).unwrap()], Quantity::Sensitivity);
        let r = spec.run(&OptimumSearch::default()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].values[0], metrology::sensitivity(&c).unwrap());
    }

    #[test]
    fn divergent_points_are_flagged_not_dropped() {
        let spec = SweepSpec::new(base(), vec![Axis::list(Param::Phi, &[0.0, 0.2]).unwrap()], Quantity::Sensitivity);
        let r = spec.run(&OptimumSearch::default()).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!((r.rows[0].values[0], r.rows[0].flag), (f64::INFINITY, Flag::Divergent));
        assert_eq!(r.rows[1].flag, Flag::None);
        let csv = r.to_csv(0);
        assert!(csv.contains("\n0.0,inf,divergent\n"), "{csv}");
    }

    #[test]
    fn sentinel_values_always_carry_a_flag() {
        let spec = SweepSpec::new(
            ExperimentConfig::new(0.0, 1, 0.0).with_theta(FRAC_PI_2),
            vec![Axis::list(Param::Transmissivity, &[0.0, 0.5, 1.0]).unwrap(), Axis::list(Param::AlphaSq, &[0.0, 1.0]).unwrap()],
            Quantity::SensitivityLossy,
        )
        .with_extra(&[Quantity::Snl, Quantity::Qcrb, Quantity::Visibility, Quantity::MaxLoss]);
        let r = spec.run(&OptimumSearch::new(8)).unwrap();
        assert_eq!(r.rows.len(), 6);
        for row in &r.rows {
            if row.values.iter().any(|v| !v.is_finite()) {
                assert_ne!(row.flag, Flag::None, "{row:?}");
            }
        }
    }

    #[test]
    fn evaluation_errors_name_the_grid_point() {
        let spec = SweepSpec::new(base(), vec![Axis::list(Param::Transmissivity, &[0.5, 2.0]).unwrap()], Quantity::Signal);
        let err = spec.run(&OptimumSearch::default()).unwrap_err();
        assert!(err.to_string().contains("transmissivity=2"), "{err}");
        let empty = SweepSpec::new(base(), vec![], Quantity::Signal);
        assert_eq!(empty.run(&OptimumSearch::default()), Err(SweepError::AxisCount(0)));
    }

    #[test]
    fn csv_is_deterministic_apart_from_timestamp() {
        let spec = SweepSpec::new(base(), vec![Axis::linspace(Param::Phi, 0.0, 1.0, 11).unwrap()], Quantity::Visibility);
        let a = spec.run(&OptimumSearch::default()).unwrap().to_csv(1);
        let b = spec.run(&OptimumSearch::default()).unwrap().to_csv(2);
        assert_ne!(a, b);
        let strip = |s: &str| s.lines().filter(|l| !l.starts_with("# generated_unix")).collect::<Vec<_>>().join("\n");
        assert_eq!(strip(&a), strip(&b));
        assert!(a.starts_with("# tool: oamsense "));
        assert!(a.contains("# config_sha256: "));
        assert!(a.contains("\nphi,value,flag\n"));
    }

    #[test]
    fn digest_tracks_the_spec() {
        let a = SweepSpec::new(base(), vec![Axis::linspace(Param::Phi, 0.0, 1.0, 11).unwrap()], Quantity::Signal);
        let mut b = a.clone();
        b.base.g = 1.5;
        assert_eq!(a.digest().len(), 64);
        assert_ne!(a.digest(), b.digest());
    }
}
