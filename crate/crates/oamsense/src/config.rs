//! Key-value experiment files.
//!
//! ```text
//! # comment
//! g = 2
//! ell = 1
//! alpha_sq = 100
//! theta = 1.5707963267948966
//! quantity = sensitivity
//! axis = phi 0 3.141592653589793 721
//! axis = alpha_sq values 10 100 1000
//! ```
//!
//! `theta`, `phi` default to 0 and `transmissivity` to 1. `g`, `ell` and
//! `alpha_sq` are required unless swept. A file with `quantity` and one or two
//! `axis` lines describes a sweep; otherwise it is a single configuration.
//! Angles are in radians.

use std::collections::HashMap;
use std::fmt::Write as _;

use oamsense_core::{ConfigError, ExperimentConfig};
use thiserror::Error;

use crate::sweep::{Axis, AxisValues, Param, Quantity, SweepSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: expected `key = value`")]
    MissingEquals { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for {key}")]
    BadValue { line: usize, key: String, value: String },
    #[error("line {line}: {source}")]
    Range { line: usize, source: ConfigError },
    #[error("line {line}: alpha_sq must be non-negative, got {value}")]
    NegativeAlphaSq { line: usize, value: f64 },
    #[error("line {line}: {message}")]
    BadAxis { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("`quantity` needs at least one `axis` line")]
    QuantityWithoutAxis,
    #[error("`axis` lines need a `quantity`")]
    AxisWithoutQuantity,
}

/// A parsed file: one configuration or a sweep over it.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigFile {
    Experiment(ExperimentConfig),
    Sweep(SweepSpec),
}

impl ConfigFile {
    pub fn base(&self) -> &ExperimentConfig {
        match self {
            ConfigFile::Experiment(c) => c,
            ConfigFile::Sweep(s) => &s.base,
        }
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ParseError> {
    value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| ParseError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_axis(line: usize, value: &str) -> Result<Axis, ParseError> {
    let bad = |message: String| ParseError::BadAxis { line, message };
    let mut words = value.split_whitespace();
    let name = words.next().ok_or_else(|| bad("axis needs a parameter name".into()))?;
    let param = Param::from_name(name).ok_or_else(|| bad(format!("unknown axis parameter `{name}`")))?;
    let rest: Vec<&str> = words.collect();
    let values = if rest.first() == Some(&"values") {
        let list = rest[1..].iter().map(|w| parse_f64(line, "axis", w)).collect::<Result<Vec<_>, _>>()?;
        AxisValues::List(list)
    } else {
        let [start, stop, count] = rest[..] else {
            return Err(bad("expected `axis = <name> <start> <stop> <count>` or `axis = <name> values <v>...`".into()));
        };
        let count = count.parse::<usize>().map_err(|_| bad(format!("invalid count `{count}`")))?;
        AxisValues::Linspace { start: parse_f64(line, "axis", start)?, stop: parse_f64(line, "axis", stop)?, count }
    };
    Axis::new(param, values).map_err(|e| bad(e.to_string()))
}

/// Parses a configuration or sweep file.
pub fn parse_config(text: &str) -> Result<ConfigFile, ParseError> {
    let mut scalars: HashMap<Param, (usize, f64)> = HashMap::new();
    let mut quantity = None;
    let mut axes: Vec<(usize, Axis)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ParseError::MissingEquals { line })?;
        let (key, value) = (key.trim(), value.trim());
        let dup = || ParseError::DuplicateKey { line, key: key.to_string() };
        match key {
            "quantity" => {
                if quantity.is_some() {
                    return Err(dup());
                }
                let q = Quantity::from_name(value).ok_or_else(|| ParseError::BadValue { line, key: key.into(), value: value.into() })?;
                quantity = Some((line, q));
            }
            "axis" => {
                let axis = parse_axis(line, value)?;
                if axes.iter().any(|(_, a)| a.param == axis.param) {
                    return Err(ParseError::BadAxis { line, message: format!("axis `{}` given twice", axis.param.name()) });
                }
                if axes.len() == 2 {
                    return Err(ParseError::BadAxis { line, message: "at most two axes".into() });
                }
                axes.push((line, axis));
            }
            _ => {
                let param = Param::from_name(key).ok_or_else(|| ParseError::UnknownKey { line, key: key.to_string() })?;
                if scalars.contains_key(&param) {
                    return Err(dup());
                }
                let v = if param == Param::Ell {
                    value.parse::<u32>().map(f64::from).map_err(|_| ParseError::BadValue { line, key: key.into(), value: value.into() })?
                } else {
                    parse_f64(line, key, value)?
                };
                scalars.insert(param, (line, v));
            }
        }
    }

    // Swept parameters take their base value from the first grid point.
    let lookup = |p: Param| -> Option<(usize, f64)> {
        scalars.get(&p).copied().or_else(|| axes.iter().find(|(_, a)| a.param == p).map(|(l, a)| (*l, a.values()[0])))
    };
    let required = |p: Param| lookup(p).ok_or(ParseError::Missing(p.name()));
    let (g_line, g) = required(Param::G)?;
    let (ell_line, ell) = required(Param::Ell)?;
    let (alpha_line, alpha_sq) = required(Param::AlphaSq)?;
    if alpha_sq < 0.0 {
        return Err(ParseError::NegativeAlphaSq { line: alpha_line, value: alpha_sq });
    }
    let (theta_line, theta) = lookup(Param::Theta).unwrap_or((0, 0.0));
    let (phi_line, phi) = lookup(Param::Phi).unwrap_or((0, 0.0));
    let (t_line, transmissivity) = lookup(Param::Transmissivity).unwrap_or((0, 1.0));

    let base = ExperimentConfig::from_alpha_sq(g, ell as u32, alpha_sq).with_theta(theta).with_phi(phi).with_transmissivity(transmissivity);
    base.validate().map_err(|source| {
        let line = match source {
            ConfigError::ZeroEll => ell_line,
            ConfigError::Transmissivity(_) => t_line,
            ConfigError::NonFinite { field } | ConfigError::Negative { field, .. } => match field {
                "g" => g_line,
                "theta" => theta_line,
                "phi" => phi_line,
                "transmissivity" => t_line,
                _ => alpha_line,
            },
        };
        ParseError::Range { line, source }
    })?;
    for (line, axis) in &axes {
        for &v in axis.values() {
            axis.param.apply(&base, v).map_err(|source| ParseError::Range { line: *line, source })?;
        }
    }

    match (quantity, axes.is_empty()) {
        (None, true) => Ok(ConfigFile::Experiment(base)),
        (Some(_), true) => Err(ParseError::QuantityWithoutAxis),
        (None, false) => Err(ParseError::AxisWithoutQuantity),
        (Some((_, quantity)), false) => {
            Ok(ConfigFile::Sweep(SweepSpec { base, axes: axes.into_iter().map(|(_, a)| a).collect(), quantity, extra: Vec::new() }))
        }
    }
}

/// Canonical text for a configuration. `parse_config(&render(c))` gives `c` back.
pub fn render(c: &ExperimentConfig) -> String {
    format!(
        "g = {:?}\nell = {}\nalpha_sq = {:?}\ntheta = {:?}\nphi = {:?}\ntransmissivity = {:?}\n",
        c.g,
        c.ell,
        c.alpha_sq(),
        c.theta,
        c.phi,
        c.transmissivity
    )
}

/// Canonical text for a sweep. Extra output columns are not representable
/// in the file format and are listed as a comment.
pub fn render_sweep(spec: &SweepSpec) -> String {
    let mut out = render(&spec.base);
    let _ = writeln!(out, "quantity = {}", spec.quantity.name());
    for axis in &spec.axes {
        let _ = match &axis.spec {
            AxisValues::Linspace { start, stop, count } => {
                writeln!(out, "axis = {} {start:?} {stop:?} {count}", axis.param.name())
            }
            AxisValues::List(values) => {
                let list: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
                writeln!(out, "axis = {} values {}", axis.param.name(), list.join(" "))
            }
        };
    }
    if !spec.extra.is_empty() {
        let names: Vec<&str> = spec.extra.iter().map(|q| q.name()).collect();
        let _ = writeln!(out, "# extra columns: {}", names.join(" "));
    }
    out
}
