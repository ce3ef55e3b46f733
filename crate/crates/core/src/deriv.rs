//! Fractional derivatives and integrals on uniformly sampled fields.
//!
//! Left-sided operators integrate from the terminal 0. The fractional
//! Caputo branch uses quadratic-history product quadrature (linear on the
//! first cell), observed order 3-alpha for smooth data; integer orders
//! dispatch to classical central differences. Grids may start at an offset
//! `x0 > 0`: the missing history cell `[0, x0]` is reconstructed by linear
//! extrapolation of the first two samples, which keeps the operators exact
//! on affine data.

use crate::error::{FracError, Result};
use crate::grid::SampledField;
use crate::order::FractionalOrder;
use crate::scalar::{from_f64, from_usize, Real};
use crate::special::gamma;

/// Caputo derivative of the monomial `x^beta`:
/// `gamma(beta+1)/gamma(beta+1-alpha) * x^(beta-alpha)`, valid for `beta > alpha`.
pub fn caputo_monomial<R: Real>(beta: R, order: FractionalOrder<R>, x: R) -> Result<R> {
    let alpha = order.alpha();
    if beta < alpha {
        return Err(FracError::Domain(format!(
            "monomial rule needs beta >= alpha, got beta = {beta}, alpha = {alpha}"
        )));
    }
    if x < R::zero() {
        return Err(FracError::Domain(format!(
            "monomial rule needs x >= 0, got {x}"
        )));
    }
    let coeff = gamma(beta + R::one())? / gamma(beta + R::one() - alpha)?;
    Ok(coeff * x.powf(beta - alpha))
}

/// Scale factor `(D^alpha_x x)^(-1) = gamma(2-alpha) x^(alpha-1)`; 1 at alpha = 1.
pub fn volume_scale_factor<R: Real>(x: R, order: FractionalOrder<R>) -> Result<R> {
    let alpha = order.alpha();
    if alpha == R::one() {
        return Ok(R::one());
    }
    if alpha >= from_f64(2.0) {
        return Err(FracError::Domain(
            "scale factor undefined at alpha = 2 (gamma(0) pole)".into(),
        ));
    }
    if x <= R::zero() {
        return Err(FracError::Domain(format!(
            "scale factor needs x > 0 for alpha != 1 (power-law singularity), got x = {x}"
        )));
    }
    let two = from_f64::<R>(2.0);
    Ok(gamma(two - alpha)? * x.powf(alpha - R::one()))
}

// ---------------------------------------------------------------------------
// Lane operators: a derivative/integral along one uniformly sampled lane,
// with weights precomputed once per (order, spacing, offset, length).
// ---------------------------------------------------------------------------

/// Left-sided axis operator reusable across many lanes of a tensor.
#[derive(Debug, Clone)]
pub(crate) enum LaneOp<R> {
    /// Central first difference, one-sided second-order ends.
    First { h: R },
    /// Central second difference, one-sided second-order ends.
    Second { h: R },
    /// Caputo 0 < alpha < 1: quadratic-history product quadrature.
    Caputo01(CaputoWeights<R>),
    /// Caputo 1 < alpha < 2: fractional integral of order 2-alpha applied
    /// to second differences.
    Caputo12 { h: R, integral: IntegralWeights<R> },
    /// Fractional integral of order gamma in (0, 1].
    Integral(IntegralWeights<R>),
}

impl<R: Real> LaneOp<R> {
    pub(crate) fn caputo(order: FractionalOrder<R>, h: R, x0: R, n: usize) -> Result<Self> {
        let alpha = order.alpha();
        if n < 3 {
            return Err(FracError::GridTooSmall { count: n, min: 3 });
        }
        if alpha == R::one() {
            return Ok(LaneOp::First { h });
        }
        if !order.is_classical() && x0 < R::zero() {
            return Err(FracError::Domain(format!(
                "fractional axis derivative needs a non-negative grid start, got {x0}"
            )));
        }
        if alpha == from_f64(2.0) {
            if n < 4 {
                return Err(FracError::GridTooSmall { count: n, min: 4 });
            }
            return Ok(LaneOp::Second { h });
        }
        if alpha < R::one() {
            Ok(LaneOp::Caputo01(CaputoWeights::new(alpha, h, x0, n)))
        } else {
            if n < 4 {
                return Err(FracError::GridTooSmall { count: n, min: 4 });
            }
            let two = from_f64::<R>(2.0);
            Ok(LaneOp::Caputo12 {
                h,
                integral: IntegralWeights::new(two - alpha, h, x0, n),
            })
        }
    }

    pub(crate) fn integral(gamma_order: R, h: R, x0: R, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(FracError::GridTooSmall { count: n, min: 3 });
        }
        if gamma_order <= R::zero() || gamma_order > R::one() {
            return Err(FracError::Domain(format!(
                "integral order must lie in (0, 1], got {gamma_order}"
            )));
        }
        Ok(LaneOp::Integral(IntegralWeights::new(
            gamma_order,
            h,
            x0,
            n,
        )))
    }

    pub(crate) fn apply(&self, f: &[R], out: &mut [R]) {
        match self {
            LaneOp::First { h } => first_difference(f, *h, out),
            LaneOp::Second { h } => second_difference(f, *h, out),
            LaneOp::Caputo01(w) => w.apply(f, out),
            LaneOp::Caputo12 { h, integral } => {
                let mut g = vec![R::zero(); f.len()];
                second_difference(f, *h, &mut g);
                integral.apply(&g, out);
            }
            LaneOp::Integral(w) => w.apply(f, out),
        }
    }
}

fn first_difference<R: Real>(f: &[R], h: R, out: &mut [R]) {
    let n = f.len();
    let two_h = h + h;
    let c3 = from_f64::<R>(3.0);
    let c4 = from_f64::<R>(4.0);
    out[0] = (-c3 * f[0] + c4 * f[1] - f[2]) / two_h;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / two_h;
    }
    out[n - 1] = (c3 * f[n - 1] - c4 * f[n - 2] + f[n - 3]) / two_h;
}

fn second_difference<R: Real>(f: &[R], h: R, out: &mut [R]) {
    let n = f.len();
    let h2 = h * h;
    let c2 = from_f64::<R>(2.0);
    let c4 = from_f64::<R>(4.0);
    let c5 = from_f64::<R>(5.0);
    out[0] = (c2 * f[0] - c5 * f[1] + c4 * f[2] - f[3]) / h2;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - c2 * f[i] + f[i - 1]) / h2;
    }
    out[n - 1] = (c2 * f[n - 1] - c5 * f[n - 2] + c4 * f[n - 3] - f[n - 4]) / h2;
}

/// Precomputed kernel moments for the Caputo branch, 0 < alpha < 1.
///
/// Cell moments against the kernel `(x_i - z)^(-alpha)`, with the history
/// integral taken of the quadratic through `f_(j-1), f_j, f_(j+1)` on cell
/// `[x_j, x_(j+1)]` (linear on the first real cell and on the virtual head
/// cell `[0, x0]`).
#[derive(Debug, Clone)]
pub(crate) struct CaputoWeights<R> {
    h: R,
    x0: R,
    n: usize,
    inv_gamma: R,
    /// `(k h)^(1-alpha) / (1-alpha)` for k = 0..n.
    u1: Vec<R>,
    /// `(k h)^(2-alpha) / (2-alpha)` for k = 0..n.
    u2: Vec<R>,
    /// head moment `(x_i^(1-a) - (x_i - x0)^(1-a)) / (1-a)` per node i.
    head: Vec<R>,
}

impl<R: Real> CaputoWeights<R> {
    fn new(alpha: R, h: R, x0: R, n: usize) -> Self {
        let one = R::one();
        let ia = one - alpha;
        let i2a = from_f64::<R>(2.0) - alpha;
        let u1 = (0..=n)
            .map(|k| (from_usize::<R>(k) * h).powf(ia) / ia)
            .collect();
        let u2 = (0..=n)
            .map(|k| (from_usize::<R>(k) * h).powf(i2a) / i2a)
            .collect();
        let head = if x0 > R::zero() {
            (0..n)
                .map(|i| {
                    let xi = x0 + from_usize::<R>(i) * h;
                    (xi.powf(ia) - (xi - x0).powf(ia)) / ia
                })
                .collect()
        } else {
            vec![R::zero(); n]
        };
        let inv_gamma = R::one() / gamma(one - alpha).expect("gamma(1-alpha) finite");
        CaputoWeights {
            h,
            x0,
            n,
            inv_gamma,
            u1,
            u2,
            head,
        }
    }

    fn apply(&self, f: &[R], out: &mut [R]) {
        debug_assert_eq!(f.len(), self.n);
        let h = self.h;
        let half = from_f64::<R>(0.5);
        let inv_h = R::one() / h;
        let inv_h2 = inv_h * inv_h;
        for (i, out_i) in out.iter_mut().enumerate() {
            let mut acc = R::zero();
            if self.x0 > R::zero() {
                // head cell: slope extrapolated from the first two samples
                acc += (f[1] - f[0]) * inv_h * self.head[i];
            }
            for j in 0..i {
                let k = i - j; // distances in units of h
                let m0 = self.u1[k] - self.u1[k - 1];
                if j == 0 {
                    acc += (f[1] - f[0]) * inv_h * m0;
                } else {
                    // quadratic through f[j-1], f[j], f[j+1] on [x_j, x_(j+1)]
                    let a = from_usize::<R>(k) * h;
                    let m1 = a * m0 - (self.u2[k] - self.u2[k - 1]);
                    let c1 = (f[j + 1] - f[j - 1]) * half * inv_h;
                    let c2 = (f[j + 1] - (f[j] + f[j]) + f[j - 1]) * inv_h2;
                    acc += c1 * m0 + c2 * m1;
                }
            }
            *out_i = acc * self.inv_gamma;
        }
    }
}

/// Precomputed product-trapezoid weights for the left fractional integral
/// of order gamma in (0, 1], terminal 0, sampled from `x0`.
#[derive(Debug, Clone)]
pub(crate) struct IntegralWeights<R> {
    h: R,
    x0: R,
    n: usize,
    inv_gamma: R,
    g: R,
    /// `(k h)^gamma / gamma` for k = 0..n.
    u0: Vec<R>,
    /// `(k h)^(gamma+1) / (gamma+1)` for k = 0..n.
    u1: Vec<R>,
}

impl<R: Real> IntegralWeights<R> {
    fn new(g: R, h: R, x0: R, n: usize) -> Self {
        let u0 = (0..=n)
            .map(|k| (from_usize::<R>(k) * h).powf(g) / g)
            .collect();
        let u1 = (0..=n)
            .map(|k| (from_usize::<R>(k) * h).powf(g + R::one()) / (g + R::one()))
            .collect();
        let inv_gamma = R::one() / gamma(g).expect("gamma(order) finite");
        IntegralWeights {
            h,
            x0,
            n,
            inv_gamma,
            g,
            u0,
            u1,
        }
    }

    /// Moments of the kernel `(x-z)^(g-1)` against 1 and `(z - zL)` on a
    /// cell whose edges sit at distances `a > b >= 0` from the target node.
    #[inline]
    fn cell(&self, fl: R, fr: R, a: R, b: R, w: R) -> R {
        let m0 = (a.powf(self.g) - b.powf(self.g)) / self.g;
        let m1 =
            a * m0 - (a.powf(self.g + R::one()) - b.powf(self.g + R::one())) / (self.g + R::one());
        fl * m0 + (fr - fl) / w * m1
    }

    fn apply(&self, f: &[R], out: &mut [R]) {
        debug_assert_eq!(f.len(), self.n);
        let h = self.h;
        for (i, out_i) in out.iter_mut().enumerate() {
            let xi = self.x0 + from_usize::<R>(i) * h;
            let mut acc = R::zero();
            if self.x0 > R::zero() {
                // head cell [0, x0], f linearly extrapolated to z = 0
                let slope = (f[1] - f[0]) / h;
                let f_at_zero = f[0] - slope * self.x0;
                acc += self.cell(f_at_zero, f[0], xi, xi - self.x0, self.x0);
            }
            for j in 0..i {
                let k = i - j;
                let m0 = self.u0[k] - self.u0[k - 1];
                let a = from_usize::<R>(k) * h;
                let m1 = a * m0 - (self.u1[k] - self.u1[k - 1]);
                acc += f[j] * m0 + (f[j + 1] - f[j]) / h * m1;
            }
            *out_i = acc * self.inv_gamma;
        }
    }
}

// ---------------------------------------------------------------------------
// Public field operations (zero-terminal grids).
// ---------------------------------------------------------------------------

fn require_zero_terminal<R: Real>(f: &SampledField<R>) -> Result<()> {
    if !f.grid().is_zero_terminal() {
        return Err(FracError::NonZeroTerminal(
            f.grid().lower().to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(())
}

/// Caputo derivative of a sampled field on a zero-terminal grid.
///
/// Node 0 carries the one-sided limit (exactly 0 for fractional orders,
/// where the defining integral is empty). alpha = 1 and alpha = 2 dispatch
/// to classical central differences.
pub fn caputo_deriv<R: Real>(
    f: &SampledField<R>,
    order: FractionalOrder<R>,
) -> Result<SampledField<R>> {
    require_zero_terminal(f)?;
    let n = f.grid().count();
    if n < 3 {
        return Err(FracError::GridTooSmall { count: n, min: 3 });
    }
    let op = LaneOp::caputo(order, f.grid().spacing(), R::zero(), n)?;
    let mut out = vec![R::zero(); n];
    op.apply(f.values(), &mut out);
    SampledField::new(f.grid().clone(), out)
}

/// Grunwald-Letnikov discretization of the Riemann-Liouville derivative,
/// 0 < alpha < 1, terminal 0. Unlike Caputo it does not annihilate
/// constants: for f = 1 it approximates `x^(-alpha) / gamma(1-alpha)`.
pub fn riemann_liouville_deriv<R: Real>(
    f: &SampledField<R>,
    order: FractionalOrder<R>,
) -> Result<SampledField<R>> {
    require_zero_terminal(f)?;
    let alpha = order.alpha();
    if alpha >= R::one() {
        return Err(FracError::Domain(format!(
            "Riemann-Liouville branch covers 0 < alpha < 1, got {alpha}"
        )));
    }
    let n = f.grid().count();
    if n < 3 {
        return Err(FracError::GridTooSmall { count: n, min: 3 });
    }
    let h = f.grid().spacing();
    // binomial weights w_0 = 1, w_j = w_(j-1) (j-1-alpha)/j
    let mut w = Vec::with_capacity(n);
    w.push(R::one());
    for j in 1..n {
        let jf = from_usize::<R>(j);
        let prev = w[j - 1];
        w.push(prev * (jf - R::one() - alpha) / jf);
    }
    let scale = h.powf(-alpha);
    let vals = f.values();
    let out = (0..n)
        .map(|i| {
            let mut acc = R::zero();
            for j in 0..=i {
                acc += w[j] * vals[i - j];
            }
            acc * scale
        })
        .collect();
    SampledField::new(f.grid().clone(), out)
}

/// Left Riemann-Liouville fractional integral of order alpha in (0, 1],
/// terminal 0, by product-trapezoid quadrature (exact on affine data).
pub fn fractional_integral<R: Real>(
    f: &SampledField<R>,
    order: FractionalOrder<R>,
) -> Result<SampledField<R>> {
    require_zero_terminal(f)?;
    let alpha = order.alpha();
    if alpha > R::one() {
        return Err(FracError::Domain(format!(
            "fractional_integral covers 0 < alpha <= 1, got {alpha}"
        )));
    }
    let n = f.grid().count();
    let op = LaneOp::integral(alpha, f.grid().spacing(), R::zero(), n)?;
    let mut out = vec![R::zero(); n];
    op.apply(f.values(), &mut out);
    SampledField::new(f.grid().clone(), out)
}
