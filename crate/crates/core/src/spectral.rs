//! Riesz fractional derivative on periodic grids via the Fourier
//! multiplier `-|k|^alpha`. Exact for band-limited fields; exists to verify
//! the whole-line analytic solutions, not as a general-domain operator.

use rustfft::num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

use crate::error::{FracError, Result};
use crate::grid::SampledField;
use crate::order::FractionalOrder;
use crate::scalar::{from_f64, from_usize, Real};

/// Signed angular wavenumbers `2 pi j / L` in FFT ordering.
pub(crate) fn wavenumbers<R: Real>(n: usize, period: R) -> Vec<R> {
    let two_pi = R::PI() + R::PI();
    (0..n)
        .map(|j| {
            let signed = if j <= n / 2 {
                j as isize
            } else {
                j as isize - n as isize
            };
            two_pi * from_f64::<R>(signed as f64) / period
        })
        .collect()
}

/// Apply `spectrum_factor(|k|)` to the discrete spectrum of `values`
/// (treated as one period) and inverse-transform back to real samples.
pub(crate) fn apply_multiplier<R: Real + FftNum>(
    values: &[R],
    period: R,
    factor: impl Fn(R) -> R,
) -> Result<Vec<R>> {
    let n = values.len();
    if !n.is_power_of_two() {
        return Err(FracError::NotPowerOfTwo(n));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<R>> = values.iter().map(|&v| Complex::new(v, R::zero())).collect();
    fft.process(&mut buf);
    for (c, k) in buf.iter_mut().zip(wavenumbers::<R>(n, period)) {
        let f = factor(k.abs());
        *c = Complex::new(c.re * f, c.im * f);
    }
    ifft.process(&mut buf);
    let scale = R::one() / from_usize::<R>(n);
    Ok(buf.into_iter().map(|c| c.re * scale).collect())
}

/// Riesz derivative of one period of a periodic field: multiplier
/// `-|k|^alpha` on the discrete spectrum. Requires a power-of-two node count.
pub fn riesz_deriv_spectral<R: Real + FftNum>(
    f: &SampledField<R>,
    order: FractionalOrder<R>,
) -> Result<SampledField<R>> {
    let n = f.grid().count();
    let period = f.grid().spacing() * from_usize::<R>(n);
    let alpha = order.alpha();
    let out = apply_multiplier(f.values(), period, |k| {
        if k == R::zero() {
            R::zero()
        } else {
            -k.powf(alpha)
        }
    })?;
    SampledField::new(f.grid().clone(), out)
}
