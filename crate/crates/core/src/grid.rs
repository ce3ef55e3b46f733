//! Uniform 1-D grids and real-valued fields sampled on them.

use crate::error::{FracError, Result};
use crate::scalar::{from_usize, Real};

/// Uniform grid: nodes `lower + i*spacing` for `i in 0..count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D<R> {
    lower: R,
    spacing: R,
    count: usize,
}

impl<R: Real> Grid1D<R> {
    pub fn new(lower: R, spacing: R, count: usize) -> Result<Self> {
        if !lower.is_finite() || !spacing.is_finite() {
            return Err(FracError::NonFinite("grid parameters".into()));
        }
        if spacing <= R::zero() {
            return Err(FracError::Domain(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        if count < 2 {
            return Err(FracError::GridTooSmall { count, min: 2 });
        }
        let grid = Grid1D {
            lower,
            spacing,
            count,
        };
        if !grid.upper().is_finite() {
            return Err(FracError::NonFinite("grid upper node".into()));
        }
        Ok(grid)
    }

    /// Grid starting at 0, the terminal every left-sided fractional
    /// operator here integrates from.
    pub fn from_zero(spacing: R, count: usize) -> Result<Self> {
        Self::new(R::zero(), spacing, count)
    }

    /// Cell-centered grid covering `[a, b]` with `count` nodes offset half a
    /// spacing from each end, so no node sits on a scale-factor singularity.
    pub fn cell_centered(a: R, b: R, count: usize) -> Result<Self> {
        if b <= a {
            return Err(FracError::Domain("cell_centered needs b > a".into()));
        }
        let h = (b - a) / from_usize(count);
        Self::new(a + h / (R::one() + R::one()), h, count)
    }

    pub fn lower(&self) -> R {
        self.lower
    }

    pub fn spacing(&self) -> R {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn node(&self, i: usize) -> R {
        debug_assert!(i < self.count);
        self.lower + from_usize::<R>(i) * self.spacing
    }

    pub fn upper(&self) -> R {
        self.node(self.count - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = R> + '_ {
        (0..self.count).map(move |i| self.node(i))
    }

    pub fn is_zero_terminal(&self) -> bool {
        self.lower == R::zero()
    }

    /// All nodes strictly positive (required wherever `x^(alpha-1)` scale
    /// factors are evaluated).
    pub fn is_strictly_positive(&self) -> bool {
        self.lower > R::zero()
    }
}

/// Field sampled on a [`Grid1D`], one finite value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField<R> {
    grid: Grid1D<R>,
    values: Vec<R>,
}

impl<R: Real> SampledField<R> {
    pub fn new(grid: Grid1D<R>, values: Vec<R>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(FracError::DimensionMismatch(format!(
                "{} values on a {}-node grid",
                values.len(),
                grid.count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FracError::NonFinite("sampled field value".into()));
        }
        Ok(SampledField { grid, values })
    }

    pub fn from_fn(grid: Grid1D<R>, f: impl Fn(R) -> R) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid1D<R>, value: R) -> Result<Self> {
        let n = grid.count();
        Self::new(grid, vec![value; n])
    }

    pub fn grid(&self) -> &Grid1D<R> {
        &self.grid
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn value(&self, i: usize) -> R {
        self.values[i]
    }

    pub fn last(&self) -> R {
        *self.values.last().expect("grid has >= 2 nodes")
    }

    pub fn max_abs(&self) -> R {
        self.values.iter().fold(R::zero(), |m, v| m.max(v.abs()))
    }

    /// `a*self + b*other` on a shared grid.
    pub fn linear_combination(&self, a: R, other: &Self, b: R) -> Result<Self> {
        if self.grid != other.grid {
            return Err(FracError::GridMismatch("linear_combination".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Self::new(self.grid.clone(), values)
    }

    /// Plain trapezoid integral over the grid.
    pub fn trapezoid(&self) -> R {
        let half = R::one() / (R::one() + R::one());
        let n = self.values.len();
        let mut s = (self.values[0] + self.values[n - 1]) * half;
        for &v in &self.values[1..n - 1] {
            s += v;
        }
        s * self.grid.spacing()
    }
}
