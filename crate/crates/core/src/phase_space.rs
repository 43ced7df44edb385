//! Gaussian states and the symplectic elements that act on them.
//!
//! A state on `m` modes is stored as its mean quadrature vector (length `2m`)
//! and covariance matrix (`2m x 2m`), with vacuum covariance equal to the
//! identity. A linear optical element with matrix `S` maps
//! `mean -> S mean` and `cov -> S cov S^T`.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PhaseSpaceError {
    #[error("mode index {mode} out of range for a {modes}-mode state")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("dimension mismatch: expected {expected} quadratures, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("transmissivity {0} outside [0, 1]")]
    TransmissivityOutOfRange(f64),
    #[error("trace-out would leave no modes")]
    EmptyKeepSet,
}

/// Symplectic form `Omega = diag(J, J, ...)` with `J = [[0, 1], [-1, 0]]`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// First and second moments of an `m`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Vacuum on `modes` modes: zero mean, identity covariance.
    ///
    /// Panics if `modes == 0`.
    pub fn vacuum(modes: usize) -> Self {
        assert!(modes >= 1, "a Gaussian state needs at least one mode");
        Self { mean: DVector::zeros(2 * modes), cov: DMatrix::identity(2 * modes, 2 * modes) }
    }

    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, PhaseSpaceError> {
        let n = mean.len();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(PhaseSpaceError::DimensionMismatch { expected: 2 * (n / 2).max(1), found: n });
        }
        if cov.nrows() != n || cov.ncols() != n {
            return Err(PhaseSpaceError::DimensionMismatch { expected: n, found: cov.nrows().max(cov.ncols()) });
        }
        Ok(Self { mean, cov })
    }

    pub fn mode_count(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, mode: usize) -> Result<(), PhaseSpaceError> {
        if mode >= self.mode_count() {
            return Err(PhaseSpaceError::ModeOutOfRange { mode, modes: self.mode_count() });
        }
        Ok(())
    }

    /// Coherent displacement of one mode by `magnitude * e^{i angle}`.
    ///
    /// With `X = a + a†` a coherent amplitude `alpha` shifts the quadrature
    /// means by `(2 Re alpha, 2 Im alpha)`; the covariance is untouched.
    pub fn displace(&self, mode: usize, magnitude: f64, angle: f64) -> Result<Self, PhaseSpaceError> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += 2.0 * magnitude * libm::cos(angle);
        out.mean[2 * mode + 1] += 2.0 * magnitude * libm::sin(angle);
        Ok(out)
    }

    /// Appends `extra` vacuum modes after the existing ones.
    pub fn with_vacuum_modes(&self, extra: usize) -> Self {
        let n = self.mean.len();
        let total = n + 2 * extra;
        let mut mean = DVector::zeros(total);
        mean.rows_mut(0, n).copy_from(&self.mean);
        let mut cov = DMatrix::identity(total, total);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        Self { mean, cov }
    }

    /// Gaussian partial trace: drops the listed modes by deleting their rows
    /// and columns from the moments.
    pub fn trace_out(&self, modes: &[usize]) -> Result<Self, PhaseSpaceError> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let keep: Vec<usize> = (0..self.mode_count()).filter(|m| !modes.contains(m)).collect();
        self.restrict(&keep)
    }

    /// Reduced state on the listed modes, in the given order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self, PhaseSpaceError> {
        if keep.is_empty() {
            return Err(PhaseSpaceError::EmptyKeepSet);
        }
        for &m in keep {
            self.check_mode(m)?;
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_fn(idx.len(), |i, _| self.mean[idx[i]]);
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]);
        Ok(Self { mean, cov })
    }

    /// `(<x>, <p>)` of one mode.
    pub fn quadrature_mean(&self, mode: usize) -> Result<(f64, f64), PhaseSpaceError> {
        self.check_mode(mode)?;
        Ok((self.mean[2 * mode], self.mean[2 * mode + 1]))
    }

    /// `<x>` and `<x^2>` of one mode: the statistics a balanced homodyne
    /// detector locked to the x quadrature records.
    pub fn x_moments(&self, mode: usize) -> Result<(f64, f64), PhaseSpaceError> {
        self.check_mode(mode)?;
        let m = self.mean[2 * mode];
        Ok((m, self.cov[(2 * mode, 2 * mode)] + m * m))
    }

    /// `<a†a>` of one mode: `(<x>^2 + <p>^2)/4 + (Vx + Vp - 2)/4`.
    pub fn photon_number(&self, mode: usize) -> Result<f64, PhaseSpaceError> {
        self.check_mode(mode)?;
        let (x, p) = (self.mean[2 * mode], self.mean[2 * mode + 1]);
        let trace = self.cov[(2 * mode, 2 * mode)] + self.cov[(2 * mode + 1, 2 * mode + 1)];
        Ok((x * x + p * p) / 4.0 + (trace - 2.0) / 4.0)
    }

    pub fn total_photon_number(&self) -> f64 {
        (0..self.mode_count()).map(|m| self.photon_number(m).unwrap_or(0.0)).sum()
    }

    /// Largest `|cov - cov^T|` entry.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.cov - self.cov.transpose()).amax()
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + i Omega`.
    ///
    /// Evaluated through its real representation `[[cov, -Omega], [Omega, cov]]`,
    /// whose spectrum is that of `cov + i Omega` with every eigenvalue doubled.
    /// A physical state has this value `>= 0`.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let n = self.mean.len();
        let omega = symplectic_form(self.mode_count());
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let mut real = DMatrix::zeros(2 * n, 2 * n);
        real.view_mut((0, 0), (n, n)).copy_from(&sym);
        real.view_mut((n, n), (n, n)).copy_from(&sym);
        real.view_mut((0, n), (n, n)).copy_from(&(-&omega));
        real.view_mut((n, 0), (n, n)).copy_from(&omega);
        SymmetricEigen::new(real).eigenvalues.min()
    }
}

/// Physical element a [`SymplecticOp`] stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Element {
    Identity,
    /// Optical parametric amplifier (two-mode squeezer).
    Opa,
    /// Relative Dove-prism rotation imprinting `2 ell phi` on mode A.
    AngularDisplacement,
    /// Output 50:50 beam splitter.
    BeamSplitter,
    /// Virtual beam splitters coupling both arms to environment vacua.
    VirtualBeamSplitter,
}

/// Linear phase-space map acting on the full quadrature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    matrix: DMatrix<f64>,
    element: Element,
}

impl SymplecticOp {
    pub fn new(matrix: DMatrix<f64>, element: Element) -> Result<Self, PhaseSpaceError> {
        if matrix.nrows() != matrix.ncols() || !matrix.nrows().is_multiple_of(2) || matrix.nrows() == 0 {
            return Err(PhaseSpaceError::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        Ok(Self { matrix, element })
    }

    pub fn identity(modes: usize) -> Self {
        Self { matrix: DMatrix::identity(2 * modes, 2 * modes), element: Element::Identity }
    }

    /// Two-mode squeezer on `(x_a, p_a, x_b, p_b)`, the Heisenberg map
    /// `A = a cosh g + b† sinh g`, `B = b cosh g + a† sinh g`.
    pub fn opa(g: f64) -> Self {
        let (c, s) = (libm::cosh(g), libm::sinh(g));
        #[rustfmt::skip]
        let matrix = DMatrix::from_row_slice(4, 4, &[
            c,   0.0, s,   0.0,
            0.0, c,   0.0, -s,
            s,   0.0, c,   0.0,
            0.0, -s,  0.0, c,
        ]);
        Self { matrix, element: Element::Opa }
    }

    /// Rotation of mode A's quadratures by `2 ell phi`; mode B untouched.
    pub fn angular_displacement(ell: u32, phi: f64) -> Self {
        let psi = 2.0 * f64::from(ell) * phi;
        let (c, s) = (libm::cos(psi), libm::sin(psi));
        #[rustfmt::skip]
        let matrix = DMatrix::from_row_slice(4, 4, &[
            c,   -s,  0.0, 0.0,
            s,   c,   0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        ]);
        Self { matrix, element: Element::AngularDisplacement }
    }

    /// 50:50 beam splitter: `a_out = (a + b)/sqrt2`, `b_out = (b - a)/sqrt2`.
    pub fn beam_splitter() -> Self {
        let r = FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let matrix = DMatrix::from_row_slice(4, 4, &[
            r,   0.0, r,   0.0,
            0.0, r,   0.0, r,
            -r,  0.0, r,   0.0,
            0.0, -r,  0.0, r,
        ]);
        Self { matrix, element: Element::BeamSplitter }
    }

    /// 8x8 virtual beam splitters of transmissivity `t` on system modes
    /// `(a, b)` and environment modes `(v_a, v_b)`:
    /// `[[sqrt(t) I4, sqrt(1-t) I4], [sqrt(1-t) I4, -sqrt(t) I4]]`.
    pub fn virtual_beam_splitter(t: f64) -> Result<Self, PhaseSpaceError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(PhaseSpaceError::TransmissivityOutOfRange(t));
        }
        let (tt, rr) = (libm::sqrt(t), libm::sqrt(1.0 - t));
        let mut matrix = DMatrix::zeros(8, 8);
        for i in 0..4 {
            matrix[(i, i)] = tt;
            matrix[(i, i + 4)] = rr;
            matrix[(i + 4, i)] = rr;
            matrix[(i + 4, i + 4)] = -tt;
        }
        Ok(Self { matrix, element: Element::VirtualBeamSplitter })
    }

    /// Direct sum with a 4x4 identity, letting a two-mode element act on the
    /// system half of a system+environment state.
    pub fn extend_with_environment(&self) -> Result<Self, PhaseSpaceError> {
        if self.matrix.nrows() != 4 {
            return Err(PhaseSpaceError::DimensionMismatch { expected: 4, found: self.matrix.nrows() });
        }
        let mut matrix = DMatrix::identity(8, 8);
        matrix.view_mut((0, 0), (4, 4)).copy_from(&self.matrix);
        Ok(Self { matrix, element: self.element })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn element(&self) -> Element {
        self.element
    }

    pub fn mode_count(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// `mean -> S mean`, `cov -> S cov S^T`.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState, PhaseSpaceError> {
        if state.mean.len() != self.matrix.nrows() {
            return Err(PhaseSpaceError::DimensionMismatch { expected: self.matrix.nrows(), found: state.mean.len() });
        }
        let mean = &self.matrix * &state.mean;
        let cov = &self.matrix * &state.cov * self.matrix.transpose();
        Ok(GaussianState { mean, cov })
    }

    /// Frobenius norm of `S Omega S^T - Omega`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.mode_count());
        (&self.matrix * &omega * self.matrix.transpose() - omega).norm()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_defect() < tol
    }
}

/// Equal linear loss on both arms of a two-mode state, modelled by virtual
/// beam splitters that exchange each arm with a vacuum environment mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChannel {
    transmissivity: f64,
}

impl LossChannel {
    pub fn new(transmissivity: f64) -> Result<Self, PhaseSpaceError> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(PhaseSpaceError::TransmissivityOutOfRange(transmissivity));
        }
        Ok(Self { transmissivity })
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState, PhaseSpaceError> {
        if state.mode_count() != 2 {
            return Err(PhaseSpaceError::DimensionMismatch { expected: 4, found: state.mean.len() });
        }
        let joint = state.with_vacuum_modes(2);
        let mixed = SymplecticOp::virtual_beam_splitter(self.transmissivity)?.apply(&joint)?;
        mixed.trace_out(&[2, 3])
    }
}
