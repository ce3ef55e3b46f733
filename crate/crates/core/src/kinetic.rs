//! Mean-field (Vlasov) closure, the linear fractional kinetic equation for
//! charged particles, the fractional Leibniz machinery behind the magnetic
//! term, and free-streaming verification against the stable-density
//! profile.

use ndarray::{ArrayD, Zip};
use rustfft::FftNum;

use crate::bogoliubov::PairForceKernel;
use crate::deriv::LaneOp;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{FracError, Result};
use crate::grid::SampledField;
use crate::levy::{free_streaming_profile, LevyProfile};
use crate::order::FractionalOrder;
use crate::phase::{axis_caputo_op, axis_scale_profile, liouville_rhs, PhaseDensity, PhaseField};
use crate::scalar::{from_f64, from_usize, Real};
use crate::special::binomial;
use crate::spectral::apply_multiplier;
use crate::tensor::{apply_along_axis, scale_along_axis, trapezoid_weights};

// ---------------------------------------------------------------------------
// Mean-field closure.
// ---------------------------------------------------------------------------

/// Effective force `F^eff(q1, p1) = int F_12(q1, p1, q2, p2) rho(q2, p2) dq2 dp2`
/// by plain trapezoid quadrature over the partner's phase space.
pub fn effective_force<R: Real>(
    rho1: &PhaseDensity<R>,
    kernel: &PairForceKernel<R>,
) -> Result<PhaseField<R>> {
    let grid = rho1.field().grid();
    if grid.dof()? != 1 {
        return Err(FracError::DimensionMismatch(
            "effective force works on one (q, p) pair".into(),
        ));
    }
    let gq = grid.q_grid(0);
    let gp = grid.p_grid(0);
    let wq = trapezoid_weights(gq);
    let wp = trapezoid_weights(gp);
    // weighted partner density
    let mut weighted = rho1.field().values().clone();
    scale_along_axis(&mut weighted, 0, &wq);
    scale_along_axis(&mut weighted, 1, &wp);
    let nq = gq.count();
    let np = gp.count();
    let mut out = ArrayD::<R>::zeros(rho1.field().values().raw_dim());
    for i1 in 0..nq {
        let q1 = gq.node(i1);
        for j1 in 0..np {
            let p1 = gp.node(j1);
            let mut acc = R::zero();
            for i2 in 0..nq {
                let q2 = gq.node(i2);
                for j2 in 0..np {
                    let p2 = gp.node(j2);
                    acc += kernel.pair(q1, p1, q2, p2) * weighted[[i2, j2]];
                }
            }
            out[[i1, j1]] = acc;
        }
    }
    PhaseField::new(grid.clone(), out)
}

/// Vlasov right-hand side: the continuity form with the mean-field force
/// `F^e + (N-1) F^eff` (products before derivatives).
pub fn vlasov_rhs<R: Real>(
    rho1: &PhaseDensity<R>,
    velocity: &(dyn Fn(R, R) -> R + Sync),
    kernel: &PairForceKernel<R>,
    order: FractionalOrder<R>,
    n_total: usize,
    t: R,
) -> Result<PhaseField<R>> {
    if n_total == 0 {
        return Err(FracError::Domain("n_total must be >= 1".into()));
    }
    let grid = rho1.field().grid().clone();
    let f_eff = effective_force(rho1, kernel)?;
    let multiplier = from_usize::<R>(n_total - 1);
    let mut force = PhaseField::from_fn(grid.clone(), |q, p| kernel.external(q[0], p[0], t))?;
    force = force.linear_combination(R::one(), &f_eff, multiplier)?;
    let v_field = PhaseField::from_fn(grid, |q, p| velocity(q[0], p[0]))?;
    liouville_rhs(rho1, &[v_field], &[force], order)
}

// ---------------------------------------------------------------------------
// Fractional Leibniz machinery.
// ---------------------------------------------------------------------------

/// `D^(alpha - r)` on a lane: Caputo for positive order, identity at zero,
/// fractional integral of order `r - alpha` otherwise (composed with plain
/// cumulative integrals when the order exceeds 1).
fn shifted_derivative<R: Real>(
    values: &[R],
    h: R,
    x0: R,
    nu: R, // alpha - r
) -> Result<Vec<R>> {
    let n = values.len();
    let mut out = vec![R::zero(); n];
    if nu == R::zero() {
        out.copy_from_slice(values);
        return Ok(out);
    }
    if nu > R::zero() {
        let op = LaneOp::caputo(FractionalOrder::new(nu)?, h, x0, n)?;
        op.apply(values, &mut out);
        return Ok(out);
    }
    // integral of order -nu, possibly > 1: peel off whole integrations
    let mut remaining = -nu;
    let mut current = values.to_vec();
    while remaining > R::one() {
        let op = LaneOp::integral(R::one(), h, x0, n)?;
        op.apply(&current, &mut out);
        current.copy_from_slice(&out);
        remaining -= R::one();
    }
    if remaining > R::zero() {
        let op = LaneOp::integral(remaining, h, x0, n)?;
        op.apply(&current, &mut out);
    } else {
        out.copy_from_slice(&current);
    }
    Ok(out)
}

/// Fractional Leibniz sum
/// `sum_(r=0..R) C(alpha, r) D^(alpha-r) f * d^r g / dx^r`,
/// requiring `g` to be a sampled polynomial of degree <= `r_max` so the sum
/// terminates exactly.
pub fn fractional_leibniz<R: Real>(
    f: &SampledField<R>,
    g: &SampledField<R>,
    order: FractionalOrder<R>,
    r_max: usize,
) -> Result<SampledField<R>> {
    if f.grid() != g.grid() {
        return Err(FracError::GridMismatch("leibniz operands".into()));
    }
    let grid = f.grid();
    let n = grid.count();
    let h = grid.spacing();
    let x0 = grid.lower();
    if x0 < R::zero() {
        return Err(FracError::Domain(
            "leibniz needs a non-negative grid start".into(),
        ));
    }
    // classical derivative ladder of g
    let first = LaneOp::First { h };
    let mut ladder: Vec<Vec<R>> = vec![g.values().to_vec()];
    for _ in 0..=r_max {
        let mut next = vec![R::zero(); n];
        first.apply(ladder.last().unwrap(), &mut next);
        ladder.push(next);
    }
    // degree check: the (r_max+1)-th derivative must be negligible
    let g_scale = g.max_abs().max(R::one());
    let extra = &ladder[r_max + 1];
    let mut fact = R::one();
    for j in 1..=(r_max + 1) {
        fact *= from_usize::<R>(j);
    }
    let tail =
        extra.iter().fold(R::zero(), |m, v| m.max(v.abs())) * h.powi((r_max + 1) as i32) / fact;
    if tail > from_f64::<R>(1e-8) * g_scale {
        return Err(FracError::Domain(format!(
            "multiplier exceeds polynomial degree {r_max} (residual derivative {tail:e})"
        )));
    }
    let alpha = order.alpha();
    let mut acc = vec![R::zero(); n];
    for (r, g_derivative) in ladder.iter().enumerate().take(r_max + 1) {
        let w = binomial(alpha, r);
        if w == R::zero() {
            continue;
        }
        let df = shifted_derivative(f.values(), h, x0, alpha - from_usize::<R>(r))?;
        for ((a, &dfv), &gv) in acc.iter_mut().zip(&df).zip(g_derivative) {
            *a += w * dfv * gv;
        }
    }
    SampledField::new(grid.clone(), acc)
}

// ---------------------------------------------------------------------------
// Magnetic term.
// ---------------------------------------------------------------------------

/// Physical constants of the charged-particle scenario (defaults 1).
#[derive(Debug, Clone, Copy)]
pub struct ChargedParticle<R> {
    pub mass: R,
    pub charge: R,
    pub light_speed: R,
}

impl<R: Real> Default for ChargedParticle<R> {
    fn default() -> Self {
        ChargedParticle {
            mass: R::one(),
            charge: R::one(),
            light_speed: R::one(),
        }
    }
}

const LEVI_CIVITA: [(usize, usize, usize, f64); 6] = [
    (0, 1, 2, 1.0),
    (1, 2, 0, 1.0),
    (2, 0, 1, 1.0),
    (0, 2, 1, -1.0),
    (2, 1, 0, -1.0),
    (1, 0, 2, -1.0),
];

/// Both assemblies of the magnetic term on a field over three momentum
/// axes: the Leibniz-expanded sum `(e/mc) sum eps_klm B_m D^a_pk (p_l f)`
/// and the contracted form `(e/mc) (D^a_p f, [p, B])`. The delta_kl term
/// of the expansion enters with an eps weight of zero, which is the
/// cancellation the contracted form relies on.
pub fn magnetic_term_forms<R: Real>(
    f: &PhaseField<R>,
    b: [R; 3],
    constants: ChargedParticle<R>,
    order: FractionalOrder<R>,
) -> Result<(PhaseField<R>, PhaseField<R>)> {
    let grid = f.grid();
    if grid.n_p() != 3 {
        return Err(FracError::DimensionMismatch(format!(
            "magnetic term needs 3 momentum axes, got {}",
            grid.n_p()
        )));
    }
    let alpha = order.alpha();
    let coeff = constants.charge / (constants.mass * constants.light_speed);
    let shape = grid.shape();
    let mut leibniz = ArrayD::<R>::zeros(ndarray::IxDyn(&shape));
    let mut contracted = ArrayD::<R>::zeros(ndarray::IxDyn(&shape));

    // per momentum axis: scale-factored D^a f and (for the delta term)
    // D^(a-1) f
    let mut d_f = Vec::with_capacity(3);
    let mut d_shift = Vec::with_capacity(3);
    for k in 0..3 {
        let gp = grid.p_grid(k);
        let axis = grid.p_axis(k);
        let op = axis_caputo_op(gp, order)?;
        let sf = axis_scale_profile(gp, order)?;
        let mut d = apply_along_axis(f.values(), axis, &op);
        scale_along_axis(&mut d, axis, &sf);
        d_f.push(d);
        // lane-wise D^(alpha-1) f, scale-factored the same way
        let n = gp.count();
        let mut shifted = f.values().clone();
        {
            let mut buf_in = vec![R::zero(); n];
            let mut buf_out;
            for (lane_in, mut lane_out) in f
                .values()
                .lanes(ndarray::Axis(axis))
                .into_iter()
                .zip(shifted.lanes_mut(ndarray::Axis(axis)))
            {
                for (bv, v) in buf_in.iter_mut().zip(lane_in.iter()) {
                    *bv = *v;
                }
                buf_out = shifted_derivative(&buf_in, gp.spacing(), gp.lower(), alpha - R::one())?;
                for (o, v) in lane_out.iter_mut().zip(buf_out.iter()) {
                    *o = *v;
                }
            }
        }
        scale_along_axis(&mut shifted, axis, &sf);
        d_shift.push(shifted);
    }

    for &(k, l, m, sign) in &LEVI_CIVITA {
        let bm = b[m];
        if bm == R::zero() {
            continue;
        }
        let eps = from_f64::<R>(sign) * bm * coeff;
        // Leibniz expansion of D^a_pk (p_l f):
        //   p_l D^a_pk f + alpha delta_kl D^(a-1)_pk f
        let p_profile: Vec<R> = grid.p_grid(l).nodes().collect();
        let mut term = d_f[k].clone();
        scale_along_axis(&mut term, grid.p_axis(l), &p_profile);
        if k == l {
            // enters with eps_kkm = 0; kept for the printed expansion
            Zip::from(&mut term)
                .and(&d_shift[k])
                .for_each(|t, &s| *t += alpha * s);
        }
        Zip::from(&mut leibniz)
            .and(&term)
            .for_each(|acc, &t| *acc += eps * t);

        // contracted: (D^a_pk f) (p x B)_k accumulated identically
        let mut cterm = d_f[k].clone();
        scale_along_axis(&mut cterm, grid.p_axis(l), &p_profile);
        Zip::from(&mut contracted)
            .and(&cterm)
            .for_each(|acc, &t| *acc += eps * t);
    }
    Ok((
        PhaseField::new(grid.clone(), leibniz)?,
        PhaseField::new(grid.clone(), contracted)?,
    ))
}

/// Magnetic term with the two-form agreement asserted (<= 1e-8 relative).
pub fn magnetic_term<R: Real>(
    f: &PhaseField<R>,
    b: [R; 3],
    constants: ChargedParticle<R>,
    order: FractionalOrder<R>,
) -> Result<PhaseField<R>> {
    let (leibniz, contracted) = magnetic_term_forms(f, b, constants, order)?;
    let scale = leibniz.max_abs().max(contracted.max_abs());
    if scale > R::zero() {
        let diff = leibniz
            .linear_combination(R::one(), &contracted, -R::one())?
            .max_abs();
        if diff > from_f64::<R>(1e-8) * scale {
            return Err(FracError::NonConvergence(format!(
                "magnetic term assemblies disagree: {diff:e} vs scale {scale:e}"
            )));
        }
    }
    Ok(leibniz)
}

// ---------------------------------------------------------------------------
// Kinetic right-hand side.
// ---------------------------------------------------------------------------

/// Field rules of the charged-particle kinetic scenario.
pub struct KineticScenario<R> {
    pub order: FractionalOrder<R>,
    pub constants: ChargedParticle<R>,
    /// Electric field rule per coordinate axis, `E_s(q_s)`.
    pub e_field: Vec<Box<dyn Fn(R) -> R + Send + Sync>>,
    /// Uniform magnetic field (needs exactly 3 momentum axes).
    pub b_field: Option<[R; 3]>,
}

impl<R: Real> KineticScenario<R> {
    pub fn force_free(order: FractionalOrder<R>) -> Self {
        KineticScenario {
            order,
            constants: ChargedParticle::default(),
            e_field: Vec::new(),
            b_field: None,
        }
    }
}

/// Kinetic right-hand side
/// `-(v, D^a_q f) - e (E, D^a_p f) - (e/mc) (D^a_p f, [p, B])`
/// with `v_s = p_s / m` and scale-factored axis derivatives.
pub fn kinetic_rhs<R: Real>(
    f: &PhaseField<R>,
    scenario: &KineticScenario<R>,
) -> Result<PhaseField<R>> {
    let grid = f.grid();
    let order = scenario.order;
    let n_q = grid.n_q();
    let n_p = grid.n_p();
    if n_q > 0 && n_q != n_p {
        return Err(FracError::DimensionMismatch(format!(
            "transport needs paired axes, got {n_q} q-axes and {n_p} p-axes"
        )));
    }
    if !scenario.e_field.is_empty() && scenario.e_field.len() != n_q {
        return Err(FracError::DimensionMismatch(format!(
            "{} electric rules for {n_q} coordinate axes",
            scenario.e_field.len()
        )));
    }
    let mut acc = ArrayD::<R>::zeros(ndarray::IxDyn(&grid.shape()));
    for s in 0..n_q {
        // -(v_s, D^a_qs f), v_s = p_s/m constant along q_s
        let q_axis = grid.q_axis(s);
        let op = axis_caputo_op(grid.q_grid(s), order)?;
        let sf = axis_scale_profile(grid.q_grid(s), order)?;
        let mut d = apply_along_axis(f.values(), q_axis, &op);
        scale_along_axis(&mut d, q_axis, &sf);
        let v_profile: Vec<R> = grid
            .p_grid(s)
            .nodes()
            .map(|p| p / scenario.constants.mass)
            .collect();
        scale_along_axis(&mut d, grid.p_axis(s), &v_profile);
        Zip::from(&mut acc).and(&d).for_each(|a, &x| *a -= x);

        if let Some(rule) = scenario.e_field.get(s) {
            // -e E_s(q_s) D^a_ps f
            let p_axis = grid.p_axis(s);
            let op = axis_caputo_op(grid.p_grid(s), order)?;
            let sf = axis_scale_profile(grid.p_grid(s), order)?;
            let mut d = apply_along_axis(f.values(), p_axis, &op);
            scale_along_axis(&mut d, p_axis, &sf);
            let e_profile: Vec<R> = grid.q_grid(s).nodes().map(rule).collect();
            scale_along_axis(&mut d, q_axis, &e_profile);
            let e = scenario.constants.charge;
            Zip::from(&mut acc).and(&d).for_each(|a, &x| *a -= e * x);
        }
    }
    if let Some(b) = scenario.b_field {
        let magnetic = magnetic_term(f, b, scenario.constants, order)?;
        Zip::from(&mut acc)
            .and(magnetic.values())
            .for_each(|a, &x| *a -= x);
    }
    PhaseField::new(grid.clone(), acc)
}

// ---------------------------------------------------------------------------
// Linear kinetic evolution (free-streaming verification).
// ---------------------------------------------------------------------------

/// Which discretization advances the linear equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Paper-literal half-line Caputo transport with RK4.
    CaputoGrid,
    /// Whole-line Riesz multiplier with exact exponential steps.
    RieszSpectral,
}

/// Setup of a linear 1-D kinetic run: one momentum slice of the
/// perturbation, with the transport speed (or coefficient) fixed.
pub struct LinearKineticSetup<R> {
    pub order: FractionalOrder<R>,
    pub solver: SolverKind,
    /// Transport coefficient for the spectral solver.
    pub g: R,
    /// Advection speed for the Caputo solver.
    pub velocity: R,
    /// Initial perturbation profile on the q-grid.
    pub delta_f0: SampledField<R>,
    /// Optional static source `-e (E, D^a_p f0)` evaluated on this slice.
    pub source: Option<SampledField<R>>,
    /// Compare against the free-streaming profile centered here.
    pub compare_center: Option<R>,
}

/// Profiles and diagnostics sampled along a linear kinetic run.
pub struct LinearEvolveOutput<R> {
    pub times: Vec<R>,
    pub profiles: Vec<SampledField<R>>,
    pub records: Vec<DiagnosticsRecord>,
}

fn linear_diagnostics<R: Real>(
    profile: &SampledField<R>,
    setup: &LinearKineticSetup<R>,
    t: R,
) -> Result<DiagnosticsRecord> {
    // periodic (spectral) runs measure mass as the plain Riemann sum, the
    // exactly conserved k = 0 mode; the half-line grid uses trapezoid
    let mass = match setup.solver {
        SolverKind::RieszSpectral => {
            profile.values().iter().fold(R::zero(), |s, &v| s + v) * profile.grid().spacing()
        }
        SolverKind::CaputoGrid => profile.trapezoid(),
    };
    let mut rec = DiagnosticsRecord {
        time: t.to_f64().unwrap_or(f64::NAN),
        plain_mass: mass.to_f64().unwrap_or(f64::NAN),
        fractional_mass: mass.to_f64().unwrap_or(f64::NAN),
        min_value: profile
            .values()
            .iter()
            .fold(R::infinity(), |m, &v| m.min(v))
            .to_f64()
            .unwrap_or(f64::NAN),
        l2_norm: {
            let s = profile.values().iter().fold(R::zero(), |s, &v| s + v * v);
            (s * profile.grid().spacing())
                .sqrt()
                .to_f64()
                .unwrap_or(f64::NAN)
        },
        metrics: Default::default(),
    };
    if let Some(center) = setup.compare_center {
        if t > R::zero() {
            let analytic = LevyProfile::new(setup.order, setup.g, t)?;
            let mut worst = R::zero();
            for (i, q) in profile.grid().nodes().enumerate() {
                let reference = free_streaming_profile(&analytic, q - center)?;
                worst = worst.max((profile.value(i) - reference).abs());
            }
            rec.metrics.insert(
                "linf_vs_analytic".into(),
                worst.to_f64().unwrap_or(f64::NAN),
            );
        }
    }
    Ok(rec)
}

/// Advance the linear kinetic equation and sample every `output_stride`
/// steps (plus the initial and final states).
pub fn linear_evolve<R: Real + FftNum>(
    setup: &LinearKineticSetup<R>,
    dt: R,
    steps: usize,
    output_stride: usize,
) -> Result<LinearEvolveOutput<R>> {
    if !(dt > R::zero()) {
        return Err(FracError::Domain("dt must be positive".into()));
    }
    let stride = output_stride.max(1);
    let grid = setup.delta_f0.grid().clone();
    if let Some(src) = &setup.source {
        if src.grid() != &grid {
            return Err(FracError::GridMismatch("linear source".into()));
        }
    }
    let mut out = LinearEvolveOutput {
        times: vec![R::zero()],
        profiles: vec![setup.delta_f0.clone()],
        records: vec![linear_diagnostics(&setup.delta_f0, setup, R::zero())?],
    };
    match setup.solver {
        SolverKind::RieszSpectral => {
            let n = grid.count();
            if !n.is_power_of_two() {
                return Err(FracError::NotPowerOfTwo(n));
            }
            let period = grid.spacing() * from_usize::<R>(n);
            let alpha = setup.order.alpha();
            let g = setup.g;
            let mut state = setup.delta_f0.values().to_vec();
            let source = setup.source.as_ref().map(|s| s.values().to_vec());
            for step in 1..=steps {
                // exact integrating factor per step
                state = apply_multiplier(&state, period, |k| (-g * k.powf(alpha) * dt).exp())?;
                if let Some(src) = &source {
                    // constant-source exponential step:
                    // (1 - e^(-g|k|^a dt))/(g |k|^a), dt at k = 0
                    let responded = apply_multiplier(src, period, |k| {
                        if k == R::zero() {
                            dt
                        } else {
                            let lam = g * k.powf(alpha);
                            (R::one() - (-lam * dt).exp()) / lam
                        }
                    })?;
                    for (s, r) in state.iter_mut().zip(&responded) {
                        *s += *r;
                    }
                }
                if state.iter().any(|v| !v.is_finite()) {
                    return Err(FracError::NanAbort { step });
                }
                if step % stride == 0 || step == steps {
                    let t = dt * from_usize::<R>(step);
                    let profile = SampledField::new(grid.clone(), state.clone())?;
                    out.records.push(linear_diagnostics(&profile, setup, t)?);
                    out.times.push(t);
                    out.profiles.push(profile);
                }
            }
        }
        SolverKind::CaputoGrid => {
            let n = grid.count();
            let op = axis_caputo_op(&grid, setup.order)?;
            let sf = axis_scale_profile(&grid, setup.order)?;
            let v = setup.velocity;
            if v != R::zero() {
                let speed = v.abs() * sf.iter().fold(R::zero(), |m, s| m.max(s.abs()));
                let bound = from_f64::<R>(0.5) * grid.spacing() / speed;
                if dt > bound {
                    return Err(FracError::StabilityViolation {
                        dt: dt.to_f64().unwrap_or(f64::NAN),
                        bound: bound.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            let source = setup.source.as_ref().map(|s| s.values().to_vec());
            let rhs = |state: &[R], buf: &mut Vec<R>| {
                op.apply(state, buf);
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = -v * sf[i] * *b;
                }
                if let Some(src) = &source {
                    for (b, s) in buf.iter_mut().zip(src) {
                        *b += *s;
                    }
                }
            };
            let half = from_f64::<R>(0.5);
            let two = from_f64::<R>(2.0);
            let sixth = R::one() / from_f64::<R>(6.0);
            let mut state = setup.delta_f0.values().to_vec();
            let mut k1 = vec![R::zero(); n];
            let mut k2 = vec![R::zero(); n];
            let mut k3 = vec![R::zero(); n];
            let mut k4 = vec![R::zero(); n];
            let mut stage = vec![R::zero(); n];
            for step in 1..=steps {
                rhs(&state, &mut k1);
                for i in 0..n {
                    stage[i] = state[i] + half * dt * k1[i];
                }
                rhs(&stage, &mut k2);
                for i in 0..n {
                    stage[i] = state[i] + half * dt * k2[i];
                }
                rhs(&stage, &mut k3);
                for i in 0..n {
                    stage[i] = state[i] + dt * k3[i];
                }
                rhs(&stage, &mut k4);
                for i in 0..n {
                    state[i] += dt * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
                }
                state[0] = R::zero();
                state[n - 1] = R::zero();
                if state.iter().any(|v| !v.is_finite()) {
                    return Err(FracError::NanAbort { step });
                }
                if step % stride == 0 || step == steps {
                    let t = dt * from_usize::<R>(step);
                    let profile = SampledField::new(grid.clone(), state.clone())?;
                    out.records.push(linear_diagnostics(&profile, setup, t)?);
                    out.times.push(t);
                    out.profiles.push(profile);
                }
            }
        }
    }
    Ok(out)
}
