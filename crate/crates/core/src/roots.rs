//! Bracketing root finder.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("function returned NaN at x = {0}")]
    NotANumber(f64),
}

/// Result of [`bisect`]: the final bracket and the number of halvings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub iterations: u32,
}

impl Bracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo).abs()
    }
}

/// Bisection on `[lo, hi]` until the bracket is narrower than `x_tol`.
///
/// `f(lo)` and `f(hi)` must differ in sign (an exact zero at either end is
/// returned as a degenerate bracket). Infinite values are fine as long as
/// they carry a sign.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> Result<Bracket, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo.is_nan() {
        return Err(RootError::NotANumber(lo));
    }
    if f_hi.is_nan() {
        return Err(RootError::NotANumber(hi));
    }
    if f_lo == 0.0 {
        return Ok(Bracket { lo, hi: lo, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Bracket { lo: hi, hi, iterations: 0 });
    }
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(RootError::NotBracketed { lo, hi, f_lo, f_hi });
    }
    let lo_positive = f_lo > 0.0;
    let mut iterations = 0;
    while (hi - lo).abs() > x_tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.is_nan() {
            return Err(RootError::NotANumber(mid));
        }
        if f_mid == 0.0 {
            return Ok(Bracket { lo: mid, hi: mid, iterations });
        }
        if (f_mid > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(Bracket { lo, hi, iterations })
}
