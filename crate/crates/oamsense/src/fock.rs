//! Brute-force interferometer in a truncated two-mode Fock space.
//!
//! Everything here is dense and deliberately naive so that it shares nothing
//! with the phase-space engine. A run at cutoff `c` holds `(c + 1)^2`-square
//! real propagators, so memory grows as `(c + 1)^4` doubles per matrix
//! (22 MB at the default cutoff of 40, 350 MB at the ceiling of 80).

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use oamsense_core::ExperimentConfig;
use thiserror::Error;

pub const DEFAULT_CUTOFF: usize = 40;
pub const MAX_CUTOFF: usize = 80;
pub const CUTOFF_STEP: usize = 10;
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("cutoff must be at least 2, got {0}")]
    CutoffTooSmall(usize),
    #[error("state is unreliable: tail mass {tail_mass:e} at cutoff {cutoff}")]
    Unreliable { tail_mass: f64, cutoff: usize },
    #[error(transparent)]
    Config(#[from] oamsense_core::ConfigError),
}

/// Single-mode annihilation operator on `cutoff + 1` levels.
pub fn annihilation(cutoff: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(cutoff + 1, cutoff + 1);
    for n in 1..=cutoff {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

/// Ladder operators of a two-mode system, basis index `n_a * (cutoff + 1) + n_b`.
#[derive(Debug, Clone)]
pub struct Operators {
    pub cutoff: usize,
    pub a: DMatrix<f64>,
    pub a_dag: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub b_dag: DMatrix<f64>,
}

pub fn build_operators(cutoff: usize) -> Result<Operators, FockError> {
    if cutoff < 2 {
        return Err(FockError::CutoffTooSmall(cutoff));
    }
    let single = annihilation(cutoff);
    let id = DMatrix::<f64>::identity(cutoff + 1, cutoff + 1);
    let a = single.kronecker(&id);
    let b = id.kronecker(&single);
    Ok(Operators { cutoff, a_dag: a.transpose(), b_dag: b.transpose(), a, b })
}

impl Operators {
    pub fn dim(&self) -> usize {
        (self.cutoff + 1) * (self.cutoff + 1)
    }

    /// `exp(g (a† b† - a b))`, giving `a -> a cosh g + b† sinh g`.
    pub fn squeezer(&self, g: f64) -> DMatrix<f64> {
        let gen = (&self.a_dag * &self.b_dag - &self.a * &self.b) * g;
        gen.exp()
    }

    /// `exp(angle (a† b - a b†))`, giving `a -> a cos(angle) + b sin(angle)`.
    /// A quarter turn reproduces the balanced splitter.
    pub fn mixer(&self, angle: f64) -> DMatrix<f64> {
        let gen = (&self.a_dag * &self.b - &self.a * &self.b_dag) * angle;
        gen.exp()
    }
}

/// Amplitudes over `|n_a, n_b>`.
#[derive(Debug, Clone)]
pub struct FockState {
    pub cutoff: usize,
    pub amplitudes: DVector<C64>,
}

impl FockState {
    pub fn vacuum(cutoff: usize) -> Self {
        let mut amplitudes = DVector::zeros((cutoff + 1) * (cutoff + 1));
        amplitudes[0] = C64::new(1.0, 0.0);
        FockState { cutoff, amplitudes }
    }

    /// Coherent amplitude `magnitude * e^{i angle}` on mode A, vacuum on B,
    /// via the exponentiated single-mode displacement generator.
    pub fn coherent(cutoff: usize, magnitude: f64, angle: f64) -> Self {
        let beta = C64::from_polar(magnitude, angle);
        let a = annihilation(cutoff).map(|x| C64::new(x, 0.0));
        let gen = a.adjoint() * beta - a * beta.conj();
        let column = gen.exp().column(0).into_owned();
        let mut amplitudes = DVector::zeros((cutoff + 1) * (cutoff + 1));
        for n in 0..=cutoff {
            amplitudes[n * (cutoff + 1)] = column[n];
        }
        FockState { cutoff, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Probability on basis states with either mode in its top two levels.
    pub fn tail_mass(&self) -> f64 {
        let c = self.cutoff;
        let mut tail = 0.0;
        for na in 0..=c {
            for nb in 0..=c {
                if na + 1 >= c || nb + 1 >= c {
                    tail += self.amplitudes[na * (c + 1) + nb].norm_sqr();
                }
            }
        }
        tail
    }

    pub fn apply_real(&self, op: &DMatrix<f64>) -> Self {
        let re = op * self.amplitudes.map(|z| z.re);
        let im = op * self.amplitudes.map(|z| z.im);
        let amplitudes = re.zip_map(&im, C64::new);
        FockState { cutoff: self.cutoff, amplitudes }
    }

    /// Multiplies `|n_a, n_b>` by `e^{i phase n_a}`.
    pub fn rotate_a(&self, phase: f64) -> Self {
        let c = self.cutoff;
        let mut amplitudes = self.amplitudes.clone();
        for (k, z) in amplitudes.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, phase * (k / (c + 1)) as f64);
        }
        FockState { cutoff: c, amplitudes }
    }

    fn expect_real(&self, op: &DMatrix<f64>) -> DVector<C64> {
        self.apply_real(op).amplitudes
    }

    /// `<X_A>`, `<X_A^2>` with `X_A = a + a†`, and `<a†a + b†b>`.
    pub fn moments(&self, ops: &Operators) -> (f64, f64, f64) {
        let x = &ops.a + &ops.a_dag;
        let x_psi = self.expect_real(&x);
        let mean = self.amplitudes.dotc(&x_psi).re;
        let second = x_psi.norm_squared();
        let n = self.expect_real(&ops.a).norm_squared() + self.expect_real(&ops.b).norm_squared();
        (mean, second, n)
    }
}

/// Propagators that depend on `g` and the cutoff but not on the input field
/// or the rotation angle. Build once per `g` and reuse across a grid.
#[derive(Debug, Clone)]
pub struct Propagators {
    pub ops: Arc<Operators>,
    pub g: f64,
    pub squeezer: Arc<DMatrix<f64>>,
    pub mixer: Arc<DMatrix<f64>>,
}

impl Propagators {
    pub fn new(g: f64, cutoff: usize, mixing_angle: f64) -> Result<Self, FockError> {
        let ops = build_operators(cutoff)?;
        let squeezer = Arc::new(ops.squeezer(g));
        let mixer = Arc::new(ops.mixer(mixing_angle));
        Ok(Propagators { ops: Arc::new(ops), g, squeezer, mixer })
    }

    pub fn cutoff(&self) -> usize {
        self.ops.cutoff
    }

    /// Field on A, squeezer, rotation of A by `2 ell phi`, splitter. `c.g` is
    /// ignored in favour of the propagators' own `g`.
    pub fn evolve(&self, c: &ExperimentConfig) -> FockState {
        FockState::coherent(self.cutoff(), c.alpha_mag, c.theta).apply_real(&self.squeezer).rotate_a(c.oam_phase()).apply_real(&self.mixer)
    }

    /// Also tracks the photon number straight after the squeezer.
    pub fn report(&self, c: &ExperimentConfig, tail_tolerance: f64) -> OracleReport {
        let squeezed = FockState::coherent(self.cutoff(), c.alpha_mag, c.theta).apply_real(&self.squeezer);
        let out = squeezed.rotate_a(c.oam_phase()).apply_real(&self.mixer);
        let (x_mean, x_second_moment, _) = out.moments(&self.ops);
        let (_, _, photon_number) = squeezed.moments(&self.ops);
        let tail_mass = out.tail_mass().max(squeezed.tail_mass());
        OracleReport { x_mean, x_second_moment, photon_number, cutoff_used: self.cutoff(), tail_mass, reliable: tail_mass < tail_tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub x_mean: f64,
    pub x_second_moment: f64,
    pub photon_number: f64,
    pub cutoff_used: usize,
    pub tail_mass: f64,
    pub reliable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub cutoff: usize,
    pub max_cutoff: usize,
    pub tail_tolerance: f64,
    /// Rotation angle of the output splitter; `pi/4` is the balanced one.
    pub mixing_angle: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { cutoff: DEFAULT_CUTOFF, max_cutoff: MAX_CUTOFF, tail_tolerance: DEFAULT_TAIL_TOLERANCE, mixing_angle: FRAC_PI_4 }
    }
}

pub fn evolve(c: &ExperimentConfig, cutoff: usize) -> Result<FockState, FockError> {
    c.validate()?;
    Ok(Propagators::new(c.g, cutoff, FRAC_PI_4)?.evolve(c))
}

/// Memoises operators and splitters per cutoff and squeezers per `(g, cutoff)`.
#[derive(Debug, Default)]
pub struct PropagatorCache {
    mixing_angle: f64,
    shared: HashMap<usize, (Arc<Operators>, Arc<DMatrix<f64>>)>,
    squeezers: HashMap<(u64, usize), Arc<DMatrix<f64>>>,
}

impl PropagatorCache {
    pub fn new(mixing_angle: f64) -> Self {
        PropagatorCache { mixing_angle, ..Default::default() }
    }

    pub fn get(&mut self, g: f64, cutoff: usize) -> Result<Propagators, FockError> {
        if !self.shared.contains_key(&cutoff) {
            let ops = build_operators(cutoff)?;
            let mixer = ops.mixer(self.mixing_angle);
            self.shared.insert(cutoff, (Arc::new(ops), Arc::new(mixer)));
        }
        let (ops, mixer) = self.shared[&cutoff].clone();
        let squeezer = self.squeezers.entry((g.to_bits(), cutoff)).or_insert_with(|| Arc::new(ops.squeezer(g))).clone();
        Ok(Propagators { ops, g, squeezer, mixer })
    }

    /// Runs the oracle, raising the cutoff until the tail mass is below tolerance.
    pub fn run(&mut self, c: &ExperimentConfig, opts: &OracleOptions) -> Result<OracleReport, FockError> {
        c.validate()?;
        let mut cutoff = opts.cutoff;
        loop {
            let report = self.get(c.g, cutoff)?.report(c, opts.tail_tolerance);
            if report.reliable {
                return Ok(report);
            }
            if cutoff >= opts.max_cutoff {
                return Err(FockError::Unreliable { tail_mass: report.tail_mass, cutoff });
            }
            cutoff = (cutoff + CUTOFF_STEP).min(opts.max_cutoff);
        }
    }
}

/// One-off oracle run with auto-escalated cutoff.
pub fn run(c: &ExperimentConfig, opts: &OracleOptions) -> Result<OracleReport, FockError> {
    PropagatorCache::new(opts.mixing_angle).run(c, opts)
}
