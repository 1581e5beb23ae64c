//! Verification suites shared by the command line and the acceptance tests.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::diagnostics::{
    convective_self_contraction, l2_velocity_error, taylor_green_2d_exact, ConservationReport, EnergyBudget,
};
use crate::domain::{gauss_rule, BoxDomain, Vec3, MAX_DIM};
use crate::error::Result;
use crate::formulations::{Assembler, Formulation, Physics, StageInput};
use crate::linear_solver::SolverOptions;
use crate::simulation::{build_integrator, Simulation, StepRecord};
use crate::spline::{build_mixed_space, project_initial_condition, MixedSplineSpace};
use crate::time_integrator::{AlphaParams, Integrator, IntegratorOptions, State};

/// One measured quantity against its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
    relation: &'static str,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
            relation: "<=",
        }
    }

    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value < limit,
            relation: "<",
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value >= limit,
            relation: ">=",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {:.3e} {} {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.relation,
            self.limit
        )
    }
}

/// Checks and informational notes of one suite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}: {}", self.name, if self.passed() { "PASS" } else { "FAIL" })?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 8] = [
    "energy-identity",
    "monotone-decay",
    "conservation",
    "stokes-limit",
    "convergence",
    "skew-jacobian",
    "static-budget",
    "all",
];

/// Taylor–Green run at `Re = 1600`, `p = 2`, midpoint parameters, tight nonlinear tolerance.
pub fn taylor_green_config(form: Formulation, dim: usize, elements: usize, steps: usize) -> RunConfig {
    let mut cfg = RunConfig::with_formulation(form);
    cfg.dim = dim;
    cfg.elements = elements;
    cfg.degree = 2;
    cfg.reynolds = 1600.0;
    cfg.nonlinear_tol = 1e-10;
    cfg.max_steps = Some(steps);
    cfg.t_end = 1e9;
    cfg
}

/// Diagnostics of every step of a run.
#[derive(Debug, Clone)]
pub struct Trace {
    pub config: RunConfig,
    pub initial: EnergyBudget,
    pub initial_conservation: ConservationReport,
    pub records: Vec<StepRecord>,
}

impl Trace {
    pub fn initial_energy(&self) -> f64 {
        self.initial.e_total
    }
}

/// Runs `sim` until it finishes, keeping every step's diagnostics.
pub fn trace_simulation(mut sim: Simulation) -> Result<Trace> {
    let initial = sim.budget();
    let initial_conservation = sim.conservation();
    let mut records = Vec::new();
    while !sim.finished() {
        records.push(sim.advance()?);
    }
    Ok(Trace {
        config: sim.config().clone(),
        initial,
        initial_conservation,
        records,
    })
}

pub fn trace_run(cfg: &RunConfig) -> Result<Trace> {
    trace_simulation(Simulation::new(cfg)?)
}

fn worst<I: Iterator<Item = f64>>(it: I) -> f64 {
    it.fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

/// Per-step energy identity relative to the initial energy.
pub fn energy_identity_checks(trace: &Trace) -> Vec<Check> {
    let e0 = trace.initial_energy();
    let r = worst(trace.records.iter().map(|r| r.balance.identity_residual.abs() / e0));
    vec![Check::at_most("energy identity residual / E0 (worst step)", r, 1e-8)]
}

/// Strict decay of the energy and nonnegative numerical dissipation.
pub fn decay_checks(trace: &Trace) -> Vec<Check> {
    let inc = trace
        .records
        .iter()
        .map(|r| r.balance.energy_after - r.balance.energy_before)
        .fold(f64::NEG_INFINITY, f64::max);
    let num = trace
        .records
        .iter()
        .map(|r| r.balance.numerical_dissipation)
        .fold(f64::INFINITY, f64::min);
    vec![
        Check::below("largest energy increment E_{n+1} - E_n", inc, 0.0),
        Check::at_least("smallest numerical dissipation term", num, 0.0),
    ]
}

/// Pointwise divergence and small-scale orthogonality over the whole run.
pub fn incompressibility_checks(trace: &Trace) -> Vec<Check> {
    let div = worst(
        std::iter::once(trace.initial_conservation.div_max).chain(trace.records.iter().map(|r| r.conservation.div_max)),
    );
    let orth = worst(trace.records.iter().map(|r| r.conservation.orthogonality));
    vec![
        Check::at_most("max pointwise |div u|", div, 1e-9),
        Check::at_most("max scaled |(grad theta, u')|", orth, 1e-8),
    ]
}

/// Largest drift of the total momentum per component.
pub fn momentum_checks(trace: &Trace) -> Vec<Check> {
    let m0 = trace.initial_conservation.momentum;
    let dim = trace.config.dim;
    (0..dim)
        .map(|i| {
            let drift = worst(trace.records.iter().map(|r| (r.conservation.momentum[i] - m0[i]).abs()));
            Check::at_most(format!("momentum drift, component {i}"), drift, 1e-8)
        })
        .collect()
}

/// Range of the small-scale dissipation fraction, and its size in the laminar phase.
pub fn fraction_checks(trace: &Trace, laminar_until: f64, laminar_limit: f64) -> Vec<Check> {
    let hi = trace.records.iter().map(|r| r.balance.alpha.fraction).fold(f64::NEG_INFINITY, f64::max);
    let lo = trace.records.iter().map(|r| r.balance.alpha.fraction).fold(f64::INFINITY, f64::min);
    let dt = trace.config.time_step();
    let laminar = worst(
        trace
            .records
            .iter()
            .filter(|r| r.budget.t - 0.5 * dt < laminar_until)
            .map(|r| r.balance.alpha.fraction),
    );
    vec![
        Check::at_least("smallest dissipation fraction", lo, 0.0),
        Check::below("largest dissipation fraction", hi, 1.0),
        Check::at_most(format!("largest fraction for t < {laminar_until}"), laminar, laminar_limit),
    ]
}

/// Closure of the full static-method large-scale budget, with the sign history of the
/// non-dissipative small-scale terms as notes.
pub fn static_budget_report(trace: &Trace) -> SuiteReport {
    let mut rep = SuiteReport::new("static-budget");
    rep.checks.extend(energy_identity_checks(trace));
    let unwanted: Vec<f64> = trace.records.iter().map(|r| r.balance.alpha.unwanted).collect();
    let positive = unwanted.iter().filter(|&&v| v > 0.0).count();
    rep.notes.push(format!(
        "non-dissipative small-scale terms positive (energy-creating) in {positive} of {} steps; range [{:.3e}, {:.3e}]",
        unwanted.len(),
        unwanted.iter().copied().fold(f64::INFINITY, f64::min),
        unwanted.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    ));
    rep
}

/// Divergence-free, non-symmetric smooth field used where symmetric data would hide defects.
pub fn skewed_velocity(x: &Vec3) -> Vec3 {
    [
        (x[1] + 0.3).sin() + 0.5 * (2.0 * x[2]).cos() + 0.4,
        (x[0] - 0.7).cos() + 0.3 * (x[2] + 1.1).sin() - 0.2,
        0.6 * (x[0] + 0.2).sin() * (x[1] - 0.4).cos() + 0.1,
    ]
}

fn skewed_pressure(x: &Vec3) -> f64 {
    x[0].cos() * (x[1] + 0.2).sin() + 0.3 * (x[2] - 0.5).sin()
}

fn planar(v: fn(&Vec3) -> Vec3) -> impl Fn(&Vec3) -> Vec3 {
    move |x| {
        let u = v(&[x[0], x[1], 0.0]);
        [u[0] - 0.5, u[1], 0.0]
    }
}

/// Simulation started from the projection of `velocity` instead of the configured field.
pub fn simulation_from_field(cfg: &RunConfig, velocity: &dyn Fn(&Vec3) -> Vec3) -> Result<Simulation> {
    let integrator = build_integrator(cfg)?;
    let asm = integrator.assembler();
    let proj = project_initial_condition(asm.space(), asm.domain(), asm.cache(), velocity, None)?;
    let mut state = State::zeros(asm.layout());
    state.u = proj.velocity;
    let mut small = integrator.zero_small_scales();
    let static_dt = (cfg.formulation == Formulation::Vmss).then(|| cfg.time_step());
    let (tm, tc) = asm.compute_tau(&state.u, &small.velocity, static_dt);
    small.tau_m = tm;
    small.tau_c = tc;
    Simulation::resume(cfg, state, small)
}

/// Momentum drift for symmetric Taylor–Green data (asserted) and for skewed data (reported).
pub fn momentum_report(form: Formulation, elements: usize, steps: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("momentum");
    let cfg = taylor_green_config(form, 3, elements, steps);
    let trace = trace_run(&cfg)?;
    rep.checks.extend(momentum_checks(&trace));
    let mut short = cfg.clone();
    short.max_steps = Some(steps.min(10));
    let skew = trace_simulation(simulation_from_field(&short, &skewed_velocity)?)?;
    let drift: Vec<String> = momentum_checks(&skew).iter().map(|c| format!("{:.2e}", c.value)).collect();
    rep.notes.push(format!(
        "skewed initial data, {} steps: momentum drift per component [{}]",
        skew.records.len(),
        drift.join(", ")
    ));
    Ok(rep)
}

fn steady_integrator(form: Formulation, asm_space: (BoxDomain, MixedSplineSpace), physics: Physics, q: usize) -> Result<Integrator> {
    let (domain, space) = asm_space;
    let rule = gauss_rule(q, domain.dim())?;
    let asm = Assembler::new(domain, space, rule, form, physics);
    let options = IntegratorOptions {
        nonlinear_tol: 1e-14,
        nonlinear_abs_tol: 1e-13,
        min_correctors: 1,
        max_correctors: 8,
        linear: SolverOptions {
            tol: 1e-14,
            max_iter: 2000,
            restart: 200,
        },
        accept_linear_residual: 1e-10,
        ..IntegratorOptions::default()
    };
    Ok(Integrator::new(asm, AlphaParams::midpoint(1.0)?, options))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Steady Stokes problem whose exact discrete solution is a given spline pair: the dynamic
/// method must return the Galerkin coefficients. A generic smooth forcing is also solved
/// and its coefficient difference reported.
pub fn stokes_limit_report(dim: usize, elements: usize, degree: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("stokes-limit");
    let nu = 0.1;
    let domain = BoxDomain::periodic_cube(dim, elements)?;
    let space = build_mixed_space(&domain, degree)?;
    let q = degree + 2;
    let probe = steady_integrator(Formulation::Galerkin, (domain.clone(), space.clone()), Physics::new(nu), q)?;
    let pasm = probe.assembler();
    let vel: Box<dyn Fn(&Vec3) -> Vec3> = if dim == 2 { Box::new(planar(skewed_velocity)) } else { Box::new(skewed_velocity) };
    let proj = project_initial_condition(pasm.space(), pasm.domain(), pasm.cache(), &*vel, Some(&skewed_pressure))?;
    let mut target = State::zeros(pasm.layout());
    target.u = proj.velocity.clone();
    let layout = pasm.layout().clone();
    for c in 0..dim {
        let r = layout.velocity_offsets[c]..layout.velocity_offsets[c] + layout.velocity[c];
        remove_mean(&mut target.u[r]);
    }
    target.p = proj.pressure.clone();

    let forcing = {
        let sp = space.clone();
        let u = target.u.clone();
        let p = target.p.clone();
        let offs = layout.velocity_offsets.clone();
        let lens = layout.velocity.clone();
        move |x: &Vec3, _t: f64| -> Vec3 {
            let mut f = [0.0; MAX_DIM];
            for c in 0..dim {
                let ev = sp.velocity(c).eval_point(x);
                let coeffs = &u[offs[c]..offs[c] + lens[c]];
                let mut lap = 0.0;
                for (a, &g) in ev.indices.iter().enumerate() {
                    lap += coeffs[g] * (0..dim).map(|j| ev.hessians[a][j][j]).sum::<f64>();
                }
                f[c] = -nu * lap;
            }
            let ev = sp.pressure().eval_point(x);
            for (a, &g) in ev.indices.iter().enumerate() {
                for j in 0..dim {
                    f[j] += p[g] * ev.gradients[a][j];
                }
            }
            f
        }
    };

    let solve = |form: Formulation, force: Arc<crate::formulations::ForcingFn>| -> Result<State> {
        let mut physics = Physics::new(nu);
        physics.convection = false;
        physics.forcing = Some(force);
        let integ = steady_integrator(form, (domain.clone(), space.clone()), physics, q)?;
        let guess = State::zeros(integ.assembler().layout());
        let (mut st, _, _) = integ.solve_steady(&guess)?;
        remove_mean(&mut st.p);
        Ok(st)
    };
    let force: Arc<crate::formulations::ForcingFn> = Arc::new(forcing);
    let gal = solve(Formulation::Galerkin, force.clone())?;
    let dyn_ = solve(Formulation::Glsdd, force)?;
    let mut tp = target.p.clone();
    remove_mean(&mut tp);
    rep.checks.push(Check::at_most(
        "Galerkin vs exact discrete solution (max coefficient difference)",
        max_abs_diff(&gal.u, &target.u).max(max_abs_diff(&gal.p, &tp)),
        1e-8,
    ));
    rep.checks.push(Check::at_most(
        "dynamic vs Galerkin (max coefficient difference)",
        max_abs_diff(&gal.u, &dyn_.u).max(max_abs_diff(&gal.p, &dyn_.p)),
        1e-8,
    ));

    let generic: Arc<crate::formulations::ForcingFn> =
        Arc::new(move |x: &Vec3, _t: f64| [x[1].sin() + (x[0] + 2.0 * x[2]).cos(), (x[0] + 0.4).cos(), (x[0] - x[1]).sin()]);
    let gal_g = solve(Formulation::Galerkin, generic.clone())?;
    let dyn_g = solve(Formulation::Glsdd, generic)?;
    let scale = gal_g.u.iter().map(|v| v.abs()).fold(0.0, f64::max);
    rep.notes.push(format!(
        "generic forcing: dynamic vs Galerkin max velocity coefficient difference {:.3e} (relative {:.3e})",
        max_abs_diff(&gal_g.u, &dyn_g.u),
        max_abs_diff(&gal_g.u, &dyn_g.u) / scale
    ));
    Ok(rep)
}

/// Errors of one refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub formulation: Formulation,
    pub elements: Vec<usize>,
    pub l2_errors: Vec<f64>,
    /// `|E_h(T) - E(T)| / E(T)`
    pub energy_errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub exact_energy: f64,
}

/// Two-dimensional Taylor–Green decay to `t_end` on a sequence of meshes.
pub fn convergence_study(form: Formulation, meshes: &[usize], nu: f64, t_end: f64) -> Result<ConvergenceStudy> {
    let exact = taylor_green_2d_exact(t_end, nu);
    let mut l2_errors = Vec::new();
    let mut energy_errors = Vec::new();
    for &n in meshes {
        let mut cfg = RunConfig::with_formulation(form);
        cfg.dim = 2;
        cfg.elements = n;
        cfg.degree = 2;
        cfg.reynolds = 1.0 / nu;
        let steps = (t_end / cfg.time_step()).ceil() as usize;
        cfg.dt = Some(t_end / steps as f64);
        cfg.t_end = t_end;
        cfg.max_steps = Some(steps);
        cfg.nonlinear_tol = 1e-10;
        let mut sim = Simulation::new(&cfg)?;
        while !sim.finished() {
            sim.advance()?;
        }
        l2_errors.push(l2_velocity_error(sim.assembler(), &sim.state().u, &|x| exact.velocity(x)));
        energy_errors.push((sim.budget().e_total - exact.energy()).abs() / exact.energy());
    }
    let orders = meshes
        .windows(2)
        .zip(l2_errors.windows(2))
        .map(|(m, e)| (e[0] / e[1]).ln() / (m[1] as f64 / m[0] as f64).ln())
        .collect();
    Ok(ConvergenceStudy {
        formulation: form,
        elements: meshes.to_vec(),
        l2_errors,
        energy_errors,
        orders,
        exact_energy: exact.energy(),
    })
}

/// Rate check on every pair of meshes; the energy error shrinks under refinement and stays
/// within the bound implied by the velocity error.
pub fn convergence_checks(study: &ConvergenceStudy) -> Vec<Check> {
    let name = study.formulation.name();
    let mut checks = Vec::new();
    if !study.orders.is_empty() {
        let o = study.orders.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check::at_least(format!("{name}: smallest L2 velocity order"), o, 2.8));
    }
    let n = study.energy_errors.len();
    if n >= 2 {
        checks.push(Check::below(
            format!("{name}: energy error ratio finest/coarser"),
            study.energy_errors[n - 1] / study.energy_errors[n - 2],
            1.0,
        ));
        checks.push(Check::at_most(
            format!("{name}: relative energy error on finest mesh vs relative L2 error"),
            study.energy_errors[n - 1],
            2.0 * study.l2_errors[n - 1] / (2.0 * study.exact_energy).sqrt(),
        ));
    }
    checks
}

pub fn convergence_report(meshes: &[usize]) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("convergence");
    for form in [Formulation::Galerkin, Formulation::Glsdd] {
        let st = convergence_study(form, meshes, 0.01, 0.5)?;
        rep.notes.push(format!(
            "{}: meshes {:?}, L2 errors {:?}, orders {:?}, energy errors {:?}",
            form.name(),
            st.elements,
            st.l2_errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            st.orders.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>(),
            st.energy_errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
        ));
        rep.checks.extend(convergence_checks(&st));
    }
    Ok(rep)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Assembler on a small random-state test problem.
pub fn test_assembler(form: Formulation, dim: usize, elements: usize, convection: bool) -> Result<Assembler> {
    let domain = BoxDomain::periodic_cube(dim, elements)?;
    let space = build_mixed_space(&domain, 2)?;
    let rule = gauss_rule(4, dim)?;
    let mut physics = Physics::new(0.05);
    physics.convection = convection;
    Ok(Assembler::new(domain, space, rule, form, physics))
}

/// `||J v - (R(x + eps v) - R(x - eps v)) / (2 eps)|| / ||J v||` at a random state.
pub fn jacobian_fd_error(asm: &Assembler, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = asm.layout();
    let nv = layout.n_velocity;
    let np = layout.n_pressure;
    let nz = if layout.has_multiplier { np } else { 0 };
    let u = random_vec(&mut rng, nv);
    let u_dot = random_vec(&mut rng, nv);
    let p = random_vec(&mut rng, np);
    let zeta = random_vec(&mut rng, nz);
    let rate_offset: Vec<Vec3> = (0..asm.n_total_points())
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let dynamic = asm.formulation() == Formulation::Glsdd;
    let static_dt = (asm.formulation() == Formulation::Vmss).then_some(0.1);
    let (tau_m, tau_c) = asm.compute_tau(&u, &[], static_dt);
    let (beta, mu) = (0.025, 0.5);
    let stage = |u: &[f64], u_dot: &[f64], p: &[f64], z: &[f64], want: bool| {
        let st = StageInput {
            u,
            u_dot,
            p,
            zeta: z,
            beta,
            mu,
            time: 0.0,
            rate_coefficient: if dynamic { 20.0 } else { 0.0 },
            rate_offset: if dynamic { &rate_offset } else { &[] },
            tau_m: &tau_m,
            tau_c: &tau_c,
        };
        asm.assemble(&st, want)
    };
    let v = random_vec(&mut rng, layout.total());
    let jac = stage(&u, &u_dot, &p, &zeta, true).jacobian.expect("jacobian requested");
    let jv = jac.mul_vec(&v);
    let eps = 1e-6;
    let shifted = |sign: f64| {
        let uu: Vec<f64> = (0..nv).map(|i| u[i] + sign * eps * beta * v[i]).collect();
        let ud: Vec<f64> = (0..nv).map(|i| u_dot[i] + sign * eps * mu * v[i]).collect();
        let pp: Vec<f64> = (0..np).map(|i| p[i] + sign * eps * v[nv + i]).collect();
        let zz: Vec<f64> = (0..nz).map(|i| zeta[i] + sign * eps * v[nv + np + i]).collect();
        stage(&uu, &ud, &pp, &zz, false).residual
    };
    let rp = shifted(1.0);
    let rm = shifted(-1.0);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..jv.len() {
        let fd = (rp[i] - rm[i]) / (2.0 * eps);
        num += (jv[i] - fd).powi(2);
        den += jv[i] * jv[i];
    }
    (num / den).sqrt()
}

/// Convective self-contraction at random coefficients and random small scales.
pub fn skew_contraction(asm: &Assembler, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_vec(&mut rng, asm.layout().n_velocity);
    let d = asm.dim();
    let small: Vec<Vec3> = if asm.formulation() == Formulation::Glsdd {
        (0..asm.n_total_points())
            .map(|_| {
                let mut s = [0.0; MAX_DIM];
                for v in s.iter_mut().take(d) {
                    *v = rng.random_range(-0.5..0.5);
                }
                s
            })
            .collect()
    } else {
        Vec::new()
    };
    convective_self_contraction(asm, &u, &small)
}

pub fn skew_jacobian_report(seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("skew-jacobian");
    for (dim, n) in [(2, 4), (3, 4)] {
        for form in [Formulation::Galerkin, Formulation::Glsdd] {
            let asm = test_assembler(form, dim, n, true)?;
            rep.checks.push(Check::at_most(
                format!("{}D {}: convective self-contraction", dim, form.name()),
                skew_contraction(&asm, seed).abs(),
                1e-12,
            ));
        }
        for form in [Formulation::Galerkin, Formulation::Vmss, Formulation::Glsdd] {
            for convection in [true, false] {
                let asm = test_assembler(form, dim, n, convection)?;
                rep.checks.push(Check::at_most(
                    format!(
                        "{}D {} ({}): finite-difference Jacobian relative error",
                        dim,
                        form.name(),
                        if convection { "Navier-Stokes" } else { "Stokes" }
                    ),
                    jacobian_fd_error(&asm, seed),
                    1e-5,
                ));
            }
        }
    }
    Ok(rep)
}

/// Runs a named suite. `all` runs every suite in order.
pub fn run_suite(name: &str) -> Result<Vec<SuiteReport>> {
    let one = |r: SuiteReport| Ok(vec![r]);
    match name {
        "energy-identity" => {
            let trace = trace_run(&taylor_green_config(Formulation::Glsdd, 3, 8, 20))?;
            let mut rep = SuiteReport::new("energy-identity");
            rep.checks.extend(energy_identity_checks(&trace));
            rep.checks.extend(decay_checks(&trace));
            rep.checks.extend(incompressibility_checks(&trace));
            rep.checks.extend(fraction_checks(&trace, 3.0, 0.02));
            one(rep)
        }
        "monotone-decay" => {
            let mut cfg = taylor_green_config(Formulation::Glsdd, 3, 8, 20);
            cfg.alpha_f = 0.6;
            let trace = trace_run(&cfg)?;
            let mut rep = SuiteReport::new("monotone-decay");
            rep.checks.extend(decay_checks(&trace));
            rep.checks.extend(energy_identity_checks(&trace));
            one(rep)
        }
        "conservation" => one(momentum_report(Formulation::Glsdd, 4, 100)?),
        "stokes-limit" => one(stokes_limit_report(2, 8, 2)?),
        "convergence" => one(convergence_report(&[8, 16, 32])?),
        "skew-jacobian" => one(skew_jacobian_report(7)?),
        "static-budget" => {
            let trace = trace_run(&taylor_green_config(Formulation::Vmss, 3, 8, 20))?;
            one(static_budget_report(&trace))
        }
        "all" => {
            let mut out = Vec::new();
            for s in SUITES.iter().filter(|s| **s != "all") {
                out.extend(run_suite(s)?);
            }
            Ok(out)
        }
        other => Err(crate::Error::InvalidInput(format!(
            "unknown suite `{other}` (expected one of {})",
            SUITES.join(", ")
        ))),
    }
}
