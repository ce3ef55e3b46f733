//! Scenario dispatch: every kind builds its inputs from the registry, runs
//! the owning solver, and emits one CSV + JSON sidecar pair.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use frackin_core::bogoliubov::{
    collision_term, first_bogoliubov_residual, nbody_liouville_step, reduce, NBodyDensity,
    NBodyKernels,
};
use frackin_core::error::FracError;
use frackin_core::grid::SampledField;
use frackin_core::kinetic::{
    effective_force, linear_evolve, magnetic_term_forms, vlasov_rhs, ChargedParticle,
    LinearKineticSetup, SolverKind,
};
use frackin_core::levy::levy_density_integral;
use frackin_core::order::FractionalOrder;
use frackin_core::phase::{
    liouville_rhs, scaled_axis_caputo, LiouvilleGenerator, PhaseDensity, PhaseField, PhaseGrid,
    Weighting,
};

use crate::registry::pair_kernel;
use crate::scenario::{
    BogoliubovScenario, FormSpec, InitialSpec, KineticLinearScenario, LevyTableScenario,
    LiouvilleScenario, Scenario, ScenarioError, SolverSpec, SweepOp, SweepScenario, VlasovScenario,
    WeightingSpec,
};
use crate::table::{emit_table, BuildInfo, Cell, RunInfo, Sidecar, Table, TableError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("scenario error: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("{context}: {source}")]
    Solver { context: String, source: FracError },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

trait WithContext<T> {
    fn ctx(self, context: &str) -> Result<T, RunError>;
}

impl<T> WithContext<T> for Result<T, FracError> {
    fn ctx(self, context: &str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Solver {
            context: context.to_string(),
            source,
        })
    }
}

/// Execution settings shared by every scenario.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub metrics: BTreeMap<String, f64>,
}

fn order(alpha: f64, key: &str) -> Result<FractionalOrder<f64>, RunError> {
    FractionalOrder::new(alpha).ctx(key)
}

fn gauss(x: f64, c: f64, s: f64) -> f64 {
    (-(x - c) * (x - c) / (2.0 * s * s)).exp()
}

/// Parse, validate, and execute one scenario file.
pub fn run_file(path: &Path, ctx: &RunContext) -> Result<RunArtifacts, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let scenario = crate::scenario::parse_scenario(&text)?;
    run(&scenario, ctx)
}

/// Execute a validated scenario and emit its artifacts.
pub fn run(scenario: &Scenario, ctx: &RunContext) -> Result<RunArtifacts, RunError> {
    let (table, metrics) = match scenario {
        Scenario::LevyTable(s) => run_levy_table(s)?,
        Scenario::Liouville(s) => run_liouville(s)?,
        Scenario::BogoliubovResidual(s) => run_bogoliubov(s)?,
        Scenario::Vlasov(s) => run_vlasov(s)?,
        Scenario::KineticLinear(s) => run_kinetic_linear(s)?,
        Scenario::ConvergenceSweep(s) => run_sweep(s, ctx)?,
    };
    let sidecar = Sidecar {
        scenario,
        build: BuildInfo::default(),
        run: RunInfo {
            seed: ctx.seed,
            threads: ctx.threads,
        },
        metrics: metrics.clone(),
    };
    let csv_path = emit_table(&table, &sidecar, &ctx.out_dir, &scenario.output().name)?;
    Ok(RunArtifacts { csv_path, metrics })
}

fn run_levy_table(s: &LevyTableScenario) -> Result<(Table, BTreeMap<String, f64>), RunError> {
    let mut table = Table::new(&["x", "density"]);
    let mut peak: f64 = 0.0;
    for i in 0..s.x.count {
        let x = s.x.start + s.x.step * i as f64;
        let density = levy_density_integral(s.alpha, x).ctx("levy_density_integral")?;
        peak = peak.max(density);
        table.push(vec![Cell::Real(x), Cell::Real(density)]);
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("peak_density".into(), peak);
    metrics.insert("points".into(), s.x.count as f64);
    Ok((table, metrics))
}

fn phase_grid(spec: &crate::scenario::PhaseGridSpec) -> Result<PhaseGrid<f64>, RunError> {
    let q = spec.q.grid("grid.q")?;
    let p = spec.p.grid("grid.p")?;
    PhaseGrid::new(vec![q], vec![p]).ctx("grid")
}

fn run_liouville(s: &LiouvilleScenario) -> Result<(Table, BTreeMap<String, f64>), RunError> {
    let grid = phase_grid(&s.grid)?;
    let ord = order(s.alpha, "alpha")?;
    let blob = PhaseField::from_fn(grid.clone(), |q, p| {
        gauss(q[0], s.initial.q_center, s.initial.sigma)
            * gauss(p[0], s.initial.p_center, s.initial.sigma)
    })
    .ctx("initial")?;
    let weighting = match s.weighting {
        WeightingSpec::Plain => Weighting::Plain,
        WeightingSpec::Fractional => Weighting::Fractional(ord),
    };
    let rho0 = PhaseDensity::normalized(blob, weighting).ctx("initial")?;
    let generator = match s.form {
        FormSpec::Continuity => {
            let (v, f) = s.fields.fields(&grid).ctx("fields")?;
            LiouvilleGenerator::FieldPair { v, f }
        }
        FormSpec::Bracket => LiouvilleGenerator::Hamiltonian(s.fields.hamiltonian()),
    };
    let (_, records) =
        frackin_core::phase::liouville_evolve(&rho0, &generator, ord, s.time.dt, s.time.steps)
            .ctx("liouville_evolve")?;
    let mut table = Table::new(&[
        "time",
        "plain_mass",
        "fractional_mass",
        "min_value",
        "l2_norm",
    ]);
    for (i, r) in records.iter().enumerate() {
        if i % s.time.output_stride == 0 || i == records.len() - 1 {
            table.push(vec![
                Cell::Real(r.time),
                Cell::Real(r.plain_mass),
                Cell::Real(r.fractional_mass),
                Cell::Real(r.min_value),
                Cell::Real(r.l2_norm),
            ]);
        }
    }
    let first = &records[0];
    let last = records.last().unwrap();
    let mut metrics = BTreeMap::new();
    metrics.insert(
        "plain_mass_drift".into(),
        (last.plain_mass - first.plain_mass).abs(),
    );
    metrics.insert(
        "fractional_mass_drift".into(),
        (last.fractional_mass - first.fractional_mass).abs(),
    );
    metrics.insert("final_min_value".into(), last.min_value);
    metrics.insert("final_l2_norm".into(), last.l2_norm);
    Ok((table, metrics))
}

fn run_bogoliubov(s: &BogoliubovScenario) -> Result<(Table, BTreeMap<String, f64>), RunError> {
    let axis = s.axis.grid("axis")?;
    let grid = PhaseGrid::square(axis);
    let ord = order(s.alpha, "alpha")?;
    let (qc, pc, sig, corr) = (
        s.blob.q_center,
        s.blob.p_center,
        s.blob.sigma,
        s.correlation,
    );
    let rho2 = NBodyDensity::from_fn_symmetric(2, grid.clone(), |q, p| {
        gauss(q[0], qc, sig)
            * gauss(p[0], pc, sig)
            * gauss(q[1], qc, sig)
            * gauss(p[1], pc, sig)
            * (1.0 + corr * ((q[0] - qc) * (p[1] - pc) + (q[1] - qc) * (p[0] - pc)).tanh())
    })
    .ctx("blob")?;
    let kernels = NBodyKernels {
        velocity: Box::new(|_, p| p),
        force: pair_kernel(&s.pair_force, &s.external_force),
    };
    let dt = s.dt;
    let slice1 = nbody_liouville_step(&rho2, &kernels, ord, dt, 0.0).ctx("nbody step 1")?;
    let slice2 = nbody_liouville_step(&slice1, &kernels, ord, dt, 0.0).ctx("nbody step 2")?;
    let rho1_start = reduce(&rho2, &[0])
        .ctx("reduce")?
        .to_phase_field()
        .ctx("reduce")?;
    let rho1_end = reduce(&slice2, &[0])
        .ctx("reduce")?
        .to_phase_field()
        .ctx("reduce")?;
    let drho1_dt = rho1_end
        .linear_combination(1.0 / (2.0 * dt), &rho1_start, -1.0 / (2.0 * dt))
        .ctx("time difference")?;
    let rho1_mid = reduce(&slice1, &[0])
        .ctx("reduce")?
        .to_phase_field()
        .ctx("reduce")?;
    let kernel = pair_kernel(&s.pair_force, &s.external_force);
    let residual = first_bogoliubov_residual(
        &rho1_mid,
        &slice1,
        &kernel,
        &|_, p| p,
        ord,
        s.n_total,
        &drho1_dt,
        dt,
    )
    .ctx("first_bogoliubov_residual")?;
    let mut table = Table::new(&["grid_n", "dt", "residual_linf"]);
    table.push(vec![
        Cell::Int(s.axis.count as i64),
        Cell::Real(dt),
        Cell::Real(residual),
    ]);
    let mut metrics = BTreeMap::new();
    metrics.insert("residual_linf".into(), residual);
    Ok((table, metrics))
}

fn run_vlasov(s: &VlasovScenario) -> Result<(Table, BTreeMap<String, f64>), RunError> {
    let axis = s.axis.grid("axis")?;
    let grid = PhaseGrid::square(axis);
    let ord = order(s.alpha, "alpha")?;
    let (qc, pc, sig) = (s.blob.q_center, s.blob.p_center, s.blob.sigma);
    let marginal = move |q: f64, p: f64| gauss(q, qc, sig) * gauss(p, pc, sig);
    let rho1 = PhaseDensity::normalized(
        PhaseField::from_fn(grid.clone(), |q, p| marginal(q[0], p[0])).ctx("blob")?,
        Weighting::Plain,
    )
    .ctx("blob")?;
    let kernel = pair_kernel(&s.pair_force, &s.external_force);

    // consistency: vlasov_rhs vs liouville_rhs with the assembled force
    let via_vlasov =
        vlasov_rhs(&rho1, &|_, p| p, &kernel, ord, s.n_total, 0.0).ctx("vlasov_rhs")?;
    let f_eff = effective_force(&rho1, &kernel).ctx("effective_force")?;
    let force = PhaseField::from_fn(grid.clone(), |q, p| kernel.external(q[0], p[0], 0.0))
        .ctx("force")?
        .linear_combination(1.0, &f_eff, (s.n_total - 1) as f64)
        .ctx("force")?;
    let v_field = PhaseField::from_fn(grid.clone(), |_, p| p[0]).ctx("velocity")?;
    let direct = liouville_rhs(&rho1, &[v_field], &[force], ord).ctx("liouville_rhs")?;
    let consistency = via_vlasov
        .linear_combination(1.0, &direct, -1.0)
        .ctx("difference")?
        .max_abs();

    // mean-field equivalence on the factorized two-particle density
    let rho2 = NBodyDensity::from_fn(2, grid.clone(), |q, p| {
        marginal(q[0], p[0]) * marginal(q[1], p[1])
    })
    .ctx("factorized density")?;
    let lhs = collision_term(&rho2, &kernel, ord, s.n_total, 1e-5).ctx("collision_term")?;
    let flux = rho1.field().pointwise_mul(&f_eff).ctx("flux")?;
    let mut rhs = scaled_axis_caputo(&flux, 1, ord).ctx("momentum derivative")?;
    rhs = rhs
        .linear_combination(-((s.n_total - 1) as f64), &lhs, 0.0)
        .ctx("difference")?;
    let meanfield = rhs
        .linear_combination(1.0, &lhs, -1.0)
        .ctx("difference")?
        .max_abs();

    let mut table = Table::new(&["metric", "value"]);
    let mut metrics = BTreeMap::new();
    let mut put = |table: &mut Table, name: &str, value: f64| {
        table.push(vec![Cell::Text(name.into()), Cell::Real(value)]);
        metrics.insert(name.to_string(), value);
    };
    put(&mut table, "vlasov_vs_liouville_linf", consistency);
    put(&mut table, "collision_vs_meanfield_linf", meanfield);
    put(&mut table, "effective_force_max", f_eff.max_abs());

    if let Some(m) = &s.magnetic {
        let ax = m.axis.grid("magnetic.axis")?;
        let mg = PhaseGrid::new(vec![], vec![ax.clone(), ax.clone(), ax]).ctx("magnetic grid")?;
        let f = PhaseField::from_fn(mg, |_, p| {
            (1.0 + 0.3 * p[0]) * (2.0 + 0.5 * p[1] * p[1]) * (1.5 + p[2])
        })
        .ctx("magnetic test density")?;
        let (leibniz, contracted) =
            magnetic_term_forms(&f, m.b.vector(), ChargedParticle::default(), ord)
                .ctx("magnetic_term")?;
        let scale = leibniz.max_abs().max(1e-300);
        let rel = leibniz
            .linear_combination(1.0, &contracted, -1.0)
            .ctx("difference")?
            .max_abs()
            / scale;
        put(&mut table, "magnetic_two_form_rel", rel);
    }
    Ok((table, metrics))
}

fn run_kinetic_linear(
    s: &KineticLinearScenario,
) -> Result<(Table, BTreeMap<String, f64>), RunError> {
    let grid = s.q.grid("q")?;
    let ord = order(s.alpha, "alpha")?;
    let h = grid.spacing();
    let (delta_f0, center) = match s.initial {
        InitialSpec::Point { center } => {
            let idx = (0..grid.count())
                .min_by(|&a, &b| {
                    let da = (grid.node(a) - center).abs();
                    let db = (grid.node(b) - center).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            let mut vals = vec![0.0; grid.count()];
            vals[idx] = 1.0 / h;
            (
                SampledField::new(grid.clone(), vals).ctx("initial")?,
                grid.node(idx),
            )
        }
        InitialSpec::Gaussian { center, sigma } => (
            SampledField::from_fn(grid.clone(), |x| gauss(x, center, sigma)).ctx("initial")?,
            center,
        ),
    };
    let setup = LinearKineticSetup {
        order: ord,
        solver: match s.solver {
            SolverSpec::CaputoGrid => SolverKind::CaputoGrid,
            SolverSpec::RieszSpectral => SolverKind::RieszSpectral,
        },
        g: s.g,
        velocity: s.velocity,
        delta_f0,
        source: None,
        compare_center: if s.compare { Some(center) } else { None },
    };
    let out = linear_evolve(&setup, s.time.dt, s.time.steps, s.time.output_stride)
        .ctx("linear_evolve")?;
    let mut columns = vec!["time", "mass", "min_value", "l2_norm"];
    if s.compare {
        columns.push("linf_vs_analytic");
    }
    let mut table = Table::new(&columns);
    for r in &out.records {
        let mut row = vec![
            Cell::Real(r.time),
            Cell::Real(r.plain_mass),
            Cell::Real(r.min_value),
            Cell::Real(r.l2_norm),
        ];
        if s.compare {
            row.push(Cell::Real(
                r.metrics.get("linf_vs_analytic").copied().unwrap_or(0.0),
            ));
        }
        table.push(row);
    }
    let mut metrics = BTreeMap::new();
    let last = out.records.last().unwrap();
    metrics.insert("final_mass".into(), last.plain_mass);
    if s.compare {
        if let Some(err) = last.metrics.get("linf_vs_analytic") {
            metrics.insert("final_linf_vs_analytic".into(), *err);
        }
    }
    Ok((table, metrics))
}

fn sweep_error(op: SweepOp, alpha: f64, n: usize) -> Result<f64, RunError> {
    match op {
        SweepOp::CaputoCubic => {
            let ord = order(alpha, "alpha")?;
            let g = frackin_core::grid::Grid1D::from_zero(1.0 / n as f64, n + 1).ctx("grid")?;
            let f = SampledField::from_fn(g, |x| x * x * x).ctx("field")?;
            let d = frackin_core::deriv::caputo_deriv(&f, ord).ctx("caputo_deriv")?;
            let exact =
                frackin_core::deriv::caputo_monomial(3.0, ord, 1.0).ctx("caputo_monomial")?;
            Ok((d.last() - exact).abs())
        }
    }
}

fn run_sweep(
    s: &SweepScenario,
    ctx: &RunContext,
) -> Result<(Table, BTreeMap<String, f64>), RunError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads.unwrap_or(0))
        .build()
        .expect("thread pool");
    let errors: Vec<Result<f64, RunError>> = pool.install(|| {
        s.resolutions
            .par_iter()
            .map(|&n| sweep_error(s.op, s.alpha, n))
            .collect()
    });
    let mut table = Table::new(&["n", "h", "error", "ratio"]);
    let mut prev: Option<f64> = None;
    let mut min_ratio = f64::INFINITY;
    for (&n, err) in s.resolutions.iter().zip(errors) {
        let err = err?;
        let ratio = prev.map(|p| p / err).unwrap_or(0.0);
        if prev.is_some() {
            min_ratio = min_ratio.min(ratio);
        }
        table.push(vec![
            Cell::Int(n as i64),
            Cell::Real(1.0 / n as f64),
            Cell::Real(err),
            Cell::Real(ratio),
        ]);
        prev = Some(err);
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("min_ratio".into(), min_ratio);
    metrics.insert(
        "min_observed_order".into(),
        if min_ratio.is_finite() {
            min_ratio.log2()
        } else {
            f64::NAN
        },
    );
    Ok((table, metrics))
}
