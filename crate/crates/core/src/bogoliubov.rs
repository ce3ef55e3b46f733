//! N-particle densities at desk scale (N <= 3, one coordinate pair per
//! particle), reduction operators, the binary-interaction collision term,
//! and the residual checker for the first hierarchy equation.
//!
//! Tensor axis layout pairs each particle's coordinates:
//! `[q_1, p_1, q_2, p_2, ...]`, so particle swaps are axis-pair permutations
//! and reducing to particle 1 leaves a `[q, p]` field directly.

use ndarray::{ArrayD, IxDyn, Zip};

use crate::deriv::LaneOp;
use crate::error::{FracError, Result};
use crate::order::FractionalOrder;
use crate::phase::{axis_caputo_op, axis_scale_profile, PhaseField, PhaseGrid};
use crate::scalar::{from_f64, from_usize, Real};
use crate::special::gamma;
use crate::tensor::{
    apply_along_axis, contract_axis, max_abs, max_abs_interior, scale_along_axis,
    trapezoid_weights, zero_boundary,
};

/// Pair force `F_12(q_1, p_1, q_2, p_2)` plus external force `F^e(q, p, t)`.
///
/// Any symmetry of `F_12` (e.g. action-reaction antisymmetry of the
/// linear-coupling rule) is the scenario's declared convention; nothing
/// here assumes one.
pub struct PairForceKernel<R> {
    pair: Box<dyn Fn(R, R, R, R) -> R + Send + Sync>,
    external: Box<dyn Fn(R, R, R) -> R + Send + Sync>,
}

impl<R: Real> PairForceKernel<R> {
    pub fn new(
        pair: impl Fn(R, R, R, R) -> R + Send + Sync + 'static,
        external: impl Fn(R, R, R) -> R + Send + Sync + 'static,
    ) -> Self {
        PairForceKernel {
            pair: Box::new(pair),
            external: Box::new(external),
        }
    }

    /// No interaction, no external force.
    pub fn free() -> Self {
        Self::new(|_, _, _, _| R::zero(), |_, _, _| R::zero())
    }

    pub fn pair(&self, q1: R, p1: R, q2: R, p2: R) -> R {
        (self.pair)(q1, p1, q2, p2)
    }

    pub fn external(&self, q: R, p: R, t: R) -> R {
        (self.external)(q, p, t)
    }
}

/// Velocity rule plus forces for the N-particle flow.
pub struct NBodyKernels<R> {
    pub velocity: Box<dyn Fn(R, R) -> R + Send + Sync>,
    pub force: PairForceKernel<R>,
}

/// Density over N identical particles' (q, p) coordinates, normalized to
/// unit plain (trapezoid) total at construction.
#[derive(Debug, Clone)]
pub struct NBodyDensity<R> {
    n_particles: usize,
    particle_grid: PhaseGrid<R>,
    values: ArrayD<R>,
}

impl<R: Real> NBodyDensity<R> {
    /// Sample and normalize `f(q, p)` (arrays indexed by particle).
    pub fn from_fn(
        n_particles: usize,
        particle_grid: PhaseGrid<R>,
        f: impl Fn(&[R], &[R]) -> R,
    ) -> Result<Self> {
        if n_particles == 0 || n_particles > 3 {
            return Err(FracError::Domain(format!(
                "desk scale supports 1..=3 particles, got {n_particles}"
            )));
        }
        if particle_grid.dof()? != 1 {
            return Err(FracError::DimensionMismatch(
                "one coordinate pair per particle".into(),
            ));
        }
        let gq = particle_grid.q_grid(0).clone();
        let gp = particle_grid.p_grid(0).clone();
        let mut shape = Vec::new();
        for _ in 0..n_particles {
            shape.push(gq.count());
            shape.push(gp.count());
        }
        let mut values = ArrayD::<R>::zeros(IxDyn(&shape));
        let mut q = vec![R::zero(); n_particles];
        let mut p = vec![R::zero(); n_particles];
        for (idx, v) in values.indexed_iter_mut() {
            for k in 0..n_particles {
                q[k] = gq.node(idx[2 * k]);
                p[k] = gp.node(idx[2 * k + 1]);
            }
            let val = f(&q, &p);
            if val < R::zero() || !val.is_finite() {
                return Err(FracError::Domain(
                    "density initializer must be finite and >= 0".into(),
                ));
            }
            *v = val;
        }
        let mut density = NBodyDensity {
            n_particles,
            particle_grid,
            values,
        };
        let total = density.plain_total();
        if !(total > R::zero()) {
            return Err(FracError::Domain("density total must be positive".into()));
        }
        let inv = R::one() / total;
        density.values.map_inplace(|v| *v *= inv);
        Ok(density)
    }

    /// As [`from_fn`](Self::from_fn), additionally asserting permutation
    /// symmetry of the sampled values.
    pub fn from_fn_symmetric(
        n_particles: usize,
        particle_grid: PhaseGrid<R>,
        f: impl Fn(&[R], &[R]) -> R,
    ) -> Result<Self> {
        let density = Self::from_fn(n_particles, particle_grid, f)?;
        let tol = from_f64::<R>(1e-12);
        let r = density.permutation_symmetry_residual();
        if r > tol {
            return Err(FracError::Domain(format!(
                "initializer is not permutation symmetric (residual {r:e})"
            )));
        }
        Ok(density)
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn particle_grid(&self) -> &PhaseGrid<R> {
        &self.particle_grid
    }

    pub fn values(&self) -> &ArrayD<R> {
        &self.values
    }

    /// q-axis index of particle `k` (0-based).
    pub fn q_axis(&self, k: usize) -> usize {
        2 * k
    }

    pub fn p_axis(&self, k: usize) -> usize {
        2 * k + 1
    }

    /// Trapezoid total over all axes.
    pub fn plain_total(&self) -> R {
        let wq = trapezoid_weights(self.particle_grid.q_grid(0));
        let wp = trapezoid_weights(self.particle_grid.p_grid(0));
        let mut acc = self.values.clone();
        for k in 0..self.n_particles {
            scale_along_axis(&mut acc, self.q_axis(k), &wq);
            scale_along_axis(&mut acc, self.p_axis(k), &wp);
        }
        acc.sum()
    }

    /// Max |rho(swapped) - rho| over all particle pair swaps.
    pub fn permutation_symmetry_residual(&self) -> R {
        let mut worst = R::zero();
        for a in 0..self.n_particles {
            for b in a + 1..self.n_particles {
                let mut perm: Vec<usize> = (0..self.values.ndim()).collect();
                perm.swap(2 * a, 2 * b);
                perm.swap(2 * a + 1, 2 * b + 1);
                let swapped = self.values.view().permuted_axes(IxDyn(&perm));
                let mut m = R::zero();
                Zip::from(&self.values)
                    .and(&swapped)
                    .for_each(|&x, &y| m = m.max((x - y).abs()));
                worst = worst.max(m);
            }
        }
        worst
    }

    /// View particle 1's marginal (N = 1 density) as a phase field.
    pub fn to_phase_field(&self) -> Result<PhaseField<R>> {
        if self.n_particles != 1 {
            return Err(FracError::DimensionMismatch(format!(
                "to_phase_field needs N = 1, got {}",
                self.n_particles
            )));
        }
        PhaseField::new(self.particle_grid.clone(), self.values.clone())
    }

    pub(crate) fn from_parts(
        n_particles: usize,
        particle_grid: PhaseGrid<R>,
        values: ArrayD<R>,
    ) -> Self {
        NBodyDensity {
            n_particles,
            particle_grid,
            values,
        }
    }
}

/// Measure used when integrating particles out.
#[derive(Debug, Clone, Copy)]
pub enum ReductionMeasure<R> {
    /// Plain trapezoid sums.
    Plain,
    /// Fractional integration: trapezoid against `x^(alpha-1)/gamma(alpha)`
    /// per integrated axis.
    FractionalIntegral(FractionalOrder<R>),
}

/// Integrate out every particle not in `keep` (0-based indices) with plain
/// trapezoid sums; normalization is preserved within quadrature round-off.
pub fn reduce<R: Real>(rho: &NBodyDensity<R>, keep: &[usize]) -> Result<NBodyDensity<R>> {
    reduce_with_measure(rho, keep, ReductionMeasure::Plain)
}

/// [`reduce`] with an explicit integration measure for the integrated axes.
pub fn reduce_with_measure<R: Real>(
    rho: &NBodyDensity<R>,
    keep: &[usize],
    measure: ReductionMeasure<R>,
) -> Result<NBodyDensity<R>> {
    if keep.is_empty() {
        return Err(FracError::EmptyKeep);
    }
    let mut sorted: Vec<usize> = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() || *sorted.last().unwrap() >= rho.n_particles {
        return Err(FracError::Domain(format!(
            "keep set {keep:?} invalid for N = {}",
            rho.n_particles
        )));
    }
    let axis_weights = |grid: &crate::grid::Grid1D<R>| -> Result<Vec<R>> {
        let mut w = trapezoid_weights(grid);
        if let ReductionMeasure::FractionalIntegral(order) = measure {
            let alpha = order.alpha();
            let ga = gamma(alpha)?;
            for (wi, x) in w.iter_mut().zip(grid.nodes()) {
                if x <= R::zero() {
                    return Err(FracError::Domain(
                        "fractional reduction needs strictly positive nodes".into(),
                    ));
                }
                *wi = *wi * x.powf(alpha - R::one()) / ga;
            }
        }
        Ok(w)
    };
    let wq = axis_weights(rho.particle_grid.q_grid(0))?;
    let wp = axis_weights(rho.particle_grid.p_grid(0))?;
    let mut acc = rho.values.clone();
    for k in (0..rho.n_particles).rev() {
        if !sorted.contains(&k) {
            acc = contract_axis(&acc, 2 * k + 1, &wp);
            acc = contract_axis(&acc, 2 * k, &wq);
        }
    }
    Ok(NBodyDensity::from_parts(
        sorted.len(),
        rho.particle_grid.clone(),
        acc,
    ))
}

/// Max density magnitude on each outer face of the domain.
#[derive(Debug, Clone)]
pub struct BoundaryReport {
    /// `(axis, side, max_abs)` with side 0 = lower face, 1 = upper face.
    pub faces: Vec<(usize, usize, f64)>,
    pub max_face_value: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Report the max magnitude on every outer face; passes iff all faces stay
/// at or below `tol`.
pub fn boundary_vanishing_check<R: Real>(rho: &NBodyDensity<R>, tol: R) -> BoundaryReport {
    let mut faces = Vec::new();
    let mut worst = R::zero();
    for ax in 0..rho.values.ndim() {
        let n = rho.values.shape()[ax];
        for (side, idx) in [(0usize, 0usize), (1, n - 1)] {
            let face = rho.values.index_axis(ndarray::Axis(ax), idx);
            let m = face.iter().fold(R::zero(), |m, v| m.max(v.abs()));
            worst = worst.max(m);
            faces.push((ax, side, m.to_f64().unwrap_or(f64::NAN)));
        }
    }
    BoundaryReport {
        faces,
        max_face_value: worst.to_f64().unwrap_or(f64::NAN),
        tol: tol.to_f64().unwrap_or(f64::NAN),
        pass: worst <= tol,
    }
}

fn pair_force_tensor<R: Real>(
    rho: &NBodyDensity<R>,
    kernel: &PairForceKernel<R>,
    partner: usize,
) -> ArrayD<R> {
    let gq = rho.particle_grid.q_grid(0);
    let gp = rho.particle_grid.p_grid(0);
    let mut out = rho.values.clone();
    for (idx, v) in out.indexed_iter_mut() {
        let q1 = gq.node(idx[0]);
        let p1 = gp.node(idx[1]);
        let qk = gq.node(idx[2 * partner]);
        let pk = gp.node(idx[2 * partner + 1]);
        *v *= kernel.pair(q1, p1, qk, pk);
    }
    out
}

/// Scale-factored Caputo derivative along particle 1's momentum axis of
/// `F_(1,partner) rho_N`, then reduction over every particle but 1
/// (derivative first, integration second).
pub fn pair_interaction_term<R: Real>(
    rho: &NBodyDensity<R>,
    kernel: &PairForceKernel<R>,
    partner: usize,
    order: FractionalOrder<R>,
) -> Result<PhaseField<R>> {
    if partner == 0 || partner >= rho.n_particles {
        return Err(FracError::Domain(format!(
            "partner index {partner} out of range for N = {}",
            rho.n_particles
        )));
    }
    let w = pair_force_tensor(rho, kernel, partner);
    let gp = rho.particle_grid.p_grid(0);
    let op = axis_caputo_op(gp, order)?;
    let sf = axis_scale_profile(gp, order)?;
    let mut d = apply_along_axis(&w, 1, &op);
    scale_along_axis(&mut d, 1, &sf);
    let reduced = NBodyDensity::from_parts(rho.n_particles, rho.particle_grid.clone(), d);
    let marginal = reduce(&reduced, &[0])?;
    PhaseField::new(rho.particle_grid.clone(), marginal.values)
}

/// Collision term
/// `I(rho_2) = -(N-1) (D^a_p1 p1)^-1 D^a_p1 [ I[2] { F_12 rho_2 } ]`
/// (integration over the partner first, derivative second).
///
/// `boundary_tol` gates the computation on the boundary-vanishing check the
/// derivation rests on.
pub fn collision_term<R: Real>(
    rho2: &NBodyDensity<R>,
    kernel: &PairForceKernel<R>,
    order: FractionalOrder<R>,
    n_total: usize,
    boundary_tol: R,
) -> Result<PhaseField<R>> {
    if rho2.n_particles != 2 {
        return Err(FracError::DimensionMismatch(format!(
            "collision term needs a two-particle density, got N = {}",
            rho2.n_particles
        )));
    }
    if n_total == 0 {
        return Err(FracError::Domain("n_total must be >= 1".into()));
    }
    let report = boundary_vanishing_check(rho2, boundary_tol);
    if !report.pass {
        return Err(FracError::BoundaryGate(format!(
            "max face value {:.3e} exceeds tol {:.3e}",
            report.max_face_value, report.tol
        )));
    }
    let w = pair_force_tensor(rho2, kernel, 1);
    let integrated = {
        let wq = trapezoid_weights(rho2.particle_grid.q_grid(0));
        let wp = trapezoid_weights(rho2.particle_grid.p_grid(0));
        let acc = contract_axis(&w, 3, &wp);
        contract_axis(&acc, 2, &wq)
    };
    let gp = rho2.particle_grid.p_grid(0);
    let op = axis_caputo_op(gp, order)?;
    let sf = axis_scale_profile(gp, order)?;
    let mut d = apply_along_axis(&integrated, 1, &op);
    scale_along_axis(&mut d, 1, &sf);
    let prefactor = -from_usize::<R>(n_total - 1);
    d.map_inplace(|v| *v = prefactor * *v);
    PhaseField::new(rho2.particle_grid.clone(), d)
}

/// Max-norm (interior nodes) of
/// `d rho_1/dt + D^a_q1 (V_1 rho_1) + D^a_p1 (F^e rho_1) - I(rho_2)`.
#[allow(clippy::too_many_arguments)]
pub fn first_bogoliubov_residual<R: Real>(
    rho1: &PhaseField<R>,
    rho2: &NBodyDensity<R>,
    kernel: &PairForceKernel<R>,
    velocity: &(dyn Fn(R, R) -> R + Sync),
    order: FractionalOrder<R>,
    n_total: usize,
    drho1_dt: &PhaseField<R>,
    t: R,
) -> Result<R> {
    if rho1.grid() != &rho2.particle_grid || rho1.grid() != drho1_dt.grid() {
        return Err(FracError::GridMismatch("bogoliubov residual inputs".into()));
    }
    let grid = rho1.grid();
    let v_field = PhaseField::from_fn(grid.clone(), |q, p| velocity(q[0], p[0]))?;
    let fe_field = PhaseField::from_fn(grid.clone(), |q, p| kernel.external(q[0], p[0], t))?;

    let q_op = axis_caputo_op(grid.q_grid(0), order)?;
    let p_op = axis_caputo_op(grid.p_grid(0), order)?;
    let sfq = axis_scale_profile(grid.q_grid(0), order)?;
    let sfp = axis_scale_profile(grid.p_grid(0), order)?;

    let flux_q = rho1.pointwise_mul(&v_field)?;
    let flux_p = rho1.pointwise_mul(&fe_field)?;
    let mut term_q = apply_along_axis(flux_q.values(), 0, &q_op);
    scale_along_axis(&mut term_q, 0, &sfq);
    let mut term_p = apply_along_axis(flux_p.values(), 1, &p_op);
    scale_along_axis(&mut term_p, 1, &sfp);

    let collision = collision_term(rho2, kernel, order, n_total, from_f64(1e-5))?;

    let mut residual = drho1_dt.values().clone();
    Zip::from(&mut residual)
        .and(&term_q)
        .and(&term_p)
        .and(collision.values())
        .for_each(|r, &a, &b, &c| *r = *r + a + b - c);
    Ok(max_abs_interior(&residual))
}

// ---------------------------------------------------------------------------
// N-particle Liouville stepping.
// ---------------------------------------------------------------------------

struct NBodySystem<R: Real> {
    n: usize,
    v_fields: Vec<ArrayD<R>>,
    f_fields: Vec<ArrayD<R>>,
    q_op: LaneOp<R>,
    p_op: LaneOp<R>,
    sfq: Vec<R>,
    sfp: Vec<R>,
}

impl<R: Real> NBodySystem<R> {
    fn build(
        rho: &NBodyDensity<R>,
        kernels: &NBodyKernels<R>,
        order: FractionalOrder<R>,
        t: R,
    ) -> Result<Self> {
        let gq = rho.particle_grid.q_grid(0);
        let gp = rho.particle_grid.p_grid(0);
        let n = rho.n_particles;
        let shape = rho.values.shape().to_vec();
        let mut v_fields = Vec::with_capacity(n);
        let mut f_fields = Vec::with_capacity(n);
        for k in 0..n {
            let mut v = ArrayD::<R>::zeros(IxDyn(&shape));
            let mut f = ArrayD::<R>::zeros(IxDyn(&shape));
            for (idx, vv) in v.indexed_iter_mut() {
                let qk = gq.node(idx[2 * k]);
                let pk = gp.node(idx[2 * k + 1]);
                *vv = (kernels.velocity)(qk, pk);
            }
            for (idx, fv) in f.indexed_iter_mut() {
                let qk = gq.node(idx[2 * k]);
                let pk = gp.node(idx[2 * k + 1]);
                let mut total = kernels.force.external(qk, pk, t);
                for l in 0..n {
                    if l != k {
                        let ql = gq.node(idx[2 * l]);
                        let pl = gp.node(idx[2 * l + 1]);
                        total += kernels.force.pair(qk, pk, ql, pl);
                    }
                }
                *fv = total;
            }
            v_fields.push(v);
            f_fields.push(f);
        }
        Ok(NBodySystem {
            n,
            v_fields,
            f_fields,
            q_op: axis_caputo_op(gq, order)?,
            p_op: axis_caputo_op(gp, order)?,
            sfq: axis_scale_profile(gq, order)?,
            sfp: axis_scale_profile(gp, order)?,
        })
    }

    fn max_speed(&self) -> R {
        self.v_fields
            .iter()
            .chain(&self.f_fields)
            .fold(R::zero(), |m, f| m.max(max_abs(f)))
    }

    fn rhs(&self, rho: &ArrayD<R>) -> ArrayD<R> {
        let mut acc = ArrayD::<R>::zeros(rho.raw_dim());
        for k in 0..self.n {
            let mut flux_q = rho.clone();
            Zip::from(&mut flux_q)
                .and(&self.v_fields[k])
                .for_each(|x, &u| *x *= u);
            let mut dq = apply_along_axis(&flux_q, 2 * k, &self.q_op);
            scale_along_axis(&mut dq, 2 * k, &self.sfq);

            let mut flux_p = rho.clone();
            Zip::from(&mut flux_p)
                .and(&self.f_fields[k])
                .for_each(|x, &u| *x *= u);
            let mut dp = apply_along_axis(&flux_p, 2 * k + 1, &self.p_op);
            scale_along_axis(&mut dp, 2 * k + 1, &self.sfp);

            Zip::from(&mut acc)
                .and(&dq)
                .and(&dp)
                .for_each(|s, &a, &b| *s -= a + b);
        }
        acc
    }

    fn rk4_step(&self, rho: &ArrayD<R>, dt: R) -> ArrayD<R> {
        let half = from_f64::<R>(0.5);
        let two = from_f64::<R>(2.0);
        let sixth = R::one() / from_f64::<R>(6.0);
        let k1 = self.rhs(rho);
        let mut s = rho.clone();
        Zip::from(&mut s)
            .and(&k1)
            .for_each(|x, &k| *x += half * dt * k);
        let k2 = self.rhs(&s);
        s.assign(rho);
        Zip::from(&mut s)
            .and(&k2)
            .for_each(|x, &k| *x += half * dt * k);
        let k3 = self.rhs(&s);
        s.assign(rho);
        Zip::from(&mut s).and(&k3).for_each(|x, &k| *x += dt * k);
        let k4 = self.rhs(&s);
        let mut out = rho.clone();
        Zip::from(&mut out)
            .and(&k1)
            .and(&k2)
            .and(&k3)
            .and(&k4)
            .for_each(|x, &a, &b, &c, &d| *x += dt * sixth * (a + two * b + two * c + d));
        out
    }
}

/// One RK4 step of the N-particle fractional Liouville flow with per-
/// particle fields `V_k` and `F_k = F^e + sum_(l != k) F_kl`, absorbing
/// boundary applied after the step.
pub fn nbody_liouville_step<R: Real>(
    rho: &NBodyDensity<R>,
    kernels: &NBodyKernels<R>,
    order: FractionalOrder<R>,
    dt: R,
    t: R,
) -> Result<NBodyDensity<R>> {
    if !(dt > R::zero()) {
        return Err(FracError::Domain("dt must be positive".into()));
    }
    let system = NBodySystem::build(rho, kernels, order, t)?;
    let speed = system.max_speed();
    if speed > R::zero() {
        let min_h = rho
            .particle_grid
            .q_grid(0)
            .spacing()
            .min(rho.particle_grid.p_grid(0).spacing());
        let bound = from_f64::<R>(0.5) * min_h / speed;
        if dt > bound {
            return Err(FracError::StabilityViolation {
                dt: dt.to_f64().unwrap_or(f64::NAN),
                bound: bound.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let mut out = system.rk4_step(&rho.values, dt);
    zero_boundary(&mut out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(FracError::NanAbort { step: 1 });
    }
    Ok(NBodyDensity::from_parts(
        rho.n_particles,
        rho.particle_grid.clone(),
        out,
    ))
}
