//! Fractional-calculus statistical mechanics at desk scale: Caputo, Riemann-
//! Liouville, and Riesz derivatives on sampled fields; symmetric alpha-stable
//! densities; the fractional bracket and Liouville flow; reduction of
//! N-particle densities to the first hierarchy equation with its binary-
//! interaction collision term; and the mean-field (Vlasov) closure with the
//! linear kinetic equation verified against Levy free streaming.
//!
//! All kernels are generic over the scalar type via [`scalar::Real`]
//! (`f32`/`f64`); the `*64` aliases at the crate root are the working
//! precision every stated tolerance refers to.

// negated comparisons like `!(dt > zero)` also reject NaN, which
// `dt <= zero` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bogoliubov;
pub mod deriv;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod kinetic;
pub mod levy;
pub mod order;
pub mod phase;
mod quad;
pub mod scalar;
pub mod special;
pub mod spectral;
mod tensor;

pub use error::{FracError, Result};
pub use order::FractionalOrder;

/// Working-precision aliases.
pub type Order64 = order::FractionalOrder<f64>;
pub type Grid64 = grid::Grid1D<f64>;
pub type Field64 = grid::SampledField<f64>;
pub type PhaseGrid64 = phase::PhaseGrid<f64>;
pub type PhaseField64 = phase::PhaseField<f64>;
pub type PhaseDensity64 = phase::PhaseDensity<f64>;
pub type LevyProfile64 = levy::LevyProfile<f64>;
pub type NBodyDensity64 = bogoliubov::NBodyDensity<f64>;
