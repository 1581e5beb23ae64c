//! Set-up and time loop of a periodic Taylor–Green-type run.

use crate::config::{InitialCondition, RunConfig};
use crate::diagnostics::{
    check_conservation, compute_budget, step_budget, taylor_green_2d_exact, taylor_green_3d_pressure,
    taylor_green_3d_velocity, ConservationReport, EnergyBudget, StepBudget,
};
use crate::domain::{gauss_rule, BoxDomain, Vec3};
use crate::error::Result;
use crate::formulations::{Assembler, Physics};
use crate::linear_solver::SolverOptions;
use crate::small_scales::SmallScaleField;
use crate::spline::{build_mixed_space_variant, project_initial_condition};
use crate::time_integrator::{AlphaParams, Integrator, IntegratorOptions, State, StepReport};

/// Diagnostics gathered after one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Budget of the new state.
    pub budget: EnergyBudget,
    /// Energy balance of the step.
    pub balance: StepBudget,
    pub conservation: ConservationReport,
    pub report: StepReport,
}

pub struct Simulation {
    config: RunConfig,
    integrator: Integrator,
    state: State,
    small: SmallScaleField,
}

/// Builds the discretization and solver described by `cfg`.
pub fn build_integrator(cfg: &RunConfig) -> Result<Integrator> {
    let domain = BoxDomain::periodic_cube(cfg.dim, cfg.elements)?;
    let space = build_mixed_space_variant(&domain, cfg.degree, cfg.variant)?;
    let rule = gauss_rule(cfg.quadrature_points(), cfg.dim)?;
    let mut physics = Physics::new(cfg.nu());
    physics.c_i = cfg.c_i;
    physics.tau_max = cfg.tau_max;
    physics.convection = cfg.convection;
    physics.linearization = cfg.linearization;
    let assembler = Assembler::new(domain, space, rule, cfg.formulation, physics);
    let alpha = AlphaParams::new(cfg.alpha_m, cfg.alpha_f, cfg.gamma, cfg.time_step())?;
    let options = IntegratorOptions {
        nonlinear_tol: cfg.nonlinear_tol,
        nonlinear_abs_tol: cfg.nonlinear_abs_tol,
        min_correctors: cfg.min_correctors,
        max_correctors: cfg.max_correctors,
        linear: SolverOptions {
            tol: cfg.linear_tol,
            max_iter: cfg.linear_max_iter,
            restart: cfg.linear_restart,
        },
        preconditioner: cfg.preconditioner,
        schwarz_block: cfg.schwarz_block,
        tau_update_passes: cfg.tau_update_passes,
        ..IntegratorOptions::default()
    };
    Ok(Integrator::new(assembler, alpha, options))
}

/// Projected initial state for `cfg`.
pub fn initial_state(cfg: &RunConfig, integrator: &Integrator) -> Result<State> {
    let asm = integrator.assembler();
    let mut state = State::zeros(asm.layout());
    if cfg.initial_condition == InitialCondition::Rest {
        return Ok(state);
    }
    let (vel, pre): (Box<dyn Fn(&Vec3) -> Vec3>, Box<dyn Fn(&Vec3) -> f64>) = if cfg.dim == 2 {
        let tg = taylor_green_2d_exact(0.0, cfg.nu());
        (Box::new(move |x| tg.velocity(x)), Box::new(move |x| tg.pressure(x)))
    } else {
        (Box::new(taylor_green_3d_velocity), Box::new(taylor_green_3d_pressure))
    };
    let proj = project_initial_condition(asm.space(), asm.domain(), asm.cache(), &*vel, Some(&*pre))?;
    state.u = proj.velocity;
    state.p = proj.pressure;
    Ok(state)
}

impl Simulation {
    /// Fresh run from the configured initial condition.
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let integrator = build_integrator(cfg)?;
        let state = initial_state(cfg, &integrator)?;
        let mut small = integrator.zero_small_scales();
        let (tau_m, tau_c) = integrator.assembler().compute_tau(&state.u, &small.velocity, static_dt(cfg));
        small.tau_m = tau_m;
        small.tau_c = tau_c;
        Ok(Self {
            config: cfg.clone(),
            integrator,
            state,
            small,
        })
    }

    /// Resumes from a stored state.
    pub fn resume(cfg: &RunConfig, state: State, small: SmallScaleField) -> Result<Self> {
        let integrator = build_integrator(cfg)?;
        let layout = integrator.assembler().layout();
        if state.u.len() != layout.n_velocity
            || state.p.len() != layout.n_pressure
            || small.len() != integrator.assembler().n_total_points()
        {
            return Err(crate::Error::Format("stored fields do not match the configured discretization".into()));
        }
        Ok(Self {
            config: cfg.clone(),
            integrator,
            state,
            small,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn integrator(&self) -> &Integrator {
        &self.integrator
    }

    pub fn assembler(&self) -> &Assembler {
        self.integrator.assembler()
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn small(&self) -> &SmallScaleField {
        &self.small
    }

    pub fn budget(&self) -> EnergyBudget {
        compute_budget(self.assembler(), &self.state, &self.small)
    }

    pub fn conservation(&self) -> ConservationReport {
        check_conservation(self.assembler(), &self.state, &self.small)
    }

    /// Whether the end time or the step cap has been reached.
    pub fn finished(&self) -> bool {
        let dt = self.integrator.alpha().dt;
        self.state.t >= self.config.t_end - 1e-9 * dt
            || self.config.max_steps.is_some_and(|n| self.state.step >= n)
    }

    /// Advances one step and evaluates its diagnostics.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let (next, small, report) = self.integrator.step(&self.state, &self.small)?;
        let asm = self.integrator.assembler();
        let balance = step_budget(asm, self.integrator.alpha(), (&self.state, &self.small), (&next, &small));
        let budget = compute_budget(asm, &next, &small);
        let conservation = check_conservation(asm, &next, &small);
        self.state = next;
        self.small = small;
        Ok(StepRecord {
            budget,
            balance,
            conservation,
            report,
        })
    }
}

fn static_dt(cfg: &RunConfig) -> Option<f64> {
    (cfg.formulation == crate::formulations::Formulation::Vmss).then(|| cfg.time_step())
}
