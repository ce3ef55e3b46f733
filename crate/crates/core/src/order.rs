use crate::error::{FracError, Result};
use crate::scalar::{from_f64, Real};

/// Derivative order `alpha` in (0, 2] together with its integer ceiling `m`,
/// the number of classical derivatives under the fractional integral.
///
/// `m - 1 < alpha <= m`; `alpha = m` means the classical integer derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder<R> {
    alpha: R,
    m: u8,
}

impl<R: Real> FractionalOrder<R> {
    pub fn new(alpha: R) -> Result<Self> {
        if !alpha.is_finite() || alpha <= R::zero() || alpha > from_f64(2.0) {
            return Err(FracError::Domain(format!(
                "order must satisfy 0 < alpha <= 2, got {alpha}"
            )));
        }
        let m = if alpha <= R::one() { 1 } else { 2 };
        Ok(FractionalOrder { alpha, m })
    }

    pub fn alpha(&self) -> R {
        self.alpha
    }

    /// Smallest integer >= alpha (equal to alpha at integer orders).
    pub fn m(&self) -> u8 {
        self.m
    }

    /// True at alpha = 1 or alpha = 2, where operations dispatch to classical
    /// finite differences.
    pub fn is_classical(&self) -> bool {
        self.alpha == R::one() || self.alpha == from_f64(2.0)
    }

    pub fn is_first_order(&self) -> bool {
        self.alpha == R::one()
    }
}
