use super::AlphaParams;
use crate::domain::{Vec3, MAX_DIM};
use crate::error::{Error, Result};
use crate::formulations::{Assembler, DofLayout, Formulation, StageInput};
use crate::linear_solver::{
    fgmres, AdditiveSchwarz, IdentityPreconditioner, NullSpace, Preconditioner, PreconditionerKind, SolverOptions,
};
use crate::small_scales::SmallScaleField;

/// Nonlinear and linear iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Relative reduction of the residual norm that ends the corrector loop.
    pub nonlinear_tol: f64,
    /// Residual norm below which the loop ends regardless of the reduction.
    pub nonlinear_abs_tol: f64,
    pub min_correctors: usize,
    pub max_correctors: usize,
    pub linear: SolverOptions,
    pub preconditioner: PreconditionerKind,
    /// Elements per direction in each Schwarz subdomain.
    pub schwarz_block: usize,
    /// Largest relative linear residual still accepted as an inexact correction.
    pub accept_linear_residual: f64,
    /// Corrector passes in which the stabilization time scales are re-evaluated from the
    /// current iterate; afterwards they stay frozen for the rest of the step.
    pub tau_update_passes: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            nonlinear_tol: 1e-3,
            nonlinear_abs_tol: 1e-13,
            min_correctors: 3,
            max_correctors: 12,
            linear: SolverOptions::default(),
            preconditioner: PreconditionerKind::AdditiveSchwarz,
            schwarz_block: 2,
            accept_linear_residual: 1e-2,
            tau_update_passes: 2,
        }
    }
}

/// Large-scale coefficients and rates at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Stacked velocity coefficients.
    pub u: Vec<f64>,
    pub u_dot: Vec<f64>,
    pub p: Vec<f64>,
    /// Multiplier coefficients (zero for formulations without one).
    pub zeta: Vec<f64>,
    pub t: f64,
    pub step: usize,
}

impl State {
    pub fn zeros(layout: &DofLayout) -> Self {
        Self {
            u: vec![0.0; layout.n_velocity],
            u_dot: vec![0.0; layout.n_velocity],
            p: vec![0.0; layout.n_pressure],
            zeta: vec![0.0; layout.n_pressure],
            t: 0.0,
            step: 0,
        }
    }
}

/// Diagnostics of one nonlinear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub passes: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub linear_iterations: usize,
    pub worst_linear_residual: f64,
}

/// Generalized-alpha stepping of one assembled problem.
#[derive(Debug, Clone)]
pub struct Integrator {
    assembler: Assembler,
    alpha: AlphaParams,
    options: IntegratorOptions,
    subdomains: Vec<Vec<usize>>,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Integrator {
    pub fn new(assembler: Assembler, alpha: AlphaParams, options: IntegratorOptions) -> Self {
        let subdomains = match options.preconditioner {
            PreconditionerKind::AdditiveSchwarz => assembler.schwarz_subdomains(options.schwarz_block),
            PreconditionerKind::None => Vec::new(),
        };
        Self {
            assembler,
            alpha,
            options,
            subdomains,
        }
    }

    pub fn assembler(&self) -> &Assembler {
        &self.assembler
    }

    pub fn alpha(&self) -> &AlphaParams {
        &self.alpha
    }

    pub fn options(&self) -> &IntegratorOptions {
        &self.options
    }

    pub fn options_mut(&mut self) -> &mut IntegratorOptions {
        &mut self.options
    }

    /// Zero small-scale field matching this problem.
    pub fn zero_small_scales(&self) -> SmallScaleField {
        SmallScaleField::zeros(
            self.assembler.formulation().closure(),
            self.assembler.n_elements(),
            self.assembler.n_points(),
        )
    }

    fn static_dt(&self, steady: bool) -> Option<f64> {
        (self.assembler.formulation() == Formulation::Vmss && !steady).then_some(self.alpha.dt)
    }

    /// Solves `J dx = -R` and returns the correction.
    fn correction(&self, stage: &StageInput, null: &NullSpace, report: &mut StepReport) -> Result<Vec<f64>> {
        let out = self.assembler.assemble(stage, true);
        let jac = out.jacobian.expect("jacobian requested");
        let rhs: Vec<f64> = out.residual.iter().map(|v| -v).collect();
        let (dx, rep) = match self.options.preconditioner {
            PreconditionerKind::AdditiveSchwarz => {
                let pc = AdditiveSchwarz::new(&jac, self.subdomains.clone())?;
                fgmres(&jac, &rhs, &pc as &dyn Preconditioner, null, &self.options.linear)
            }
            PreconditionerKind::None => fgmres(&jac, &rhs, &IdentityPreconditioner, null, &self.options.linear),
        };
        report.linear_iterations += rep.iterations;
        report.worst_linear_residual = report.worst_linear_residual.max(rep.residual);
        if !rep.converged && !(rep.residual <= self.options.accept_linear_residual) {
            return Err(Error::LinearNotConverged {
                iterations: rep.iterations,
                residual: rep.residual,
            });
        }
        Ok(dx)
    }

    fn converged(&self, passes: usize, res: f64, initial: f64) -> bool {
        res <= self.options.nonlinear_abs_tol
            || (passes >= self.options.min_correctors && res <= self.options.nonlinear_tol * initial)
    }

    /// Advances `(state, small)` by one time step.
    pub fn step(&self, state: &State, small: &SmallScaleField) -> Result<(State, SmallScaleField, StepReport)> {
        let a = self.alpha;
        let asm = &self.assembler;
        let layout = asm.layout().clone();
        let nv = layout.n_velocity;
        let np = layout.n_pressure;
        let form = asm.formulation();
        let null = layout.null_space(false);
        let dynamic = form == Formulation::Glsdd;

        let mut x: Vec<f64> = state.u_dot.iter().map(|&v| a.predict_rate(v)).collect();
        let mut p = state.p.clone();
        let mut zeta = state.zeta.clone();
        let rate_offset: Vec<Vec3> = if dynamic {
            small
                .velocity
                .iter()
                .zip(&small.rate)
                .map(|(s, r)| {
                    let mut b = [0.0; MAX_DIM];
                    for i in 0..MAX_DIM {
                        b[i] = a.pointwise_rate_offset(s[i], r[i]);
                    }
                    b
                })
                .collect()
        } else {
            Vec::new()
        };
        let rate_coefficient = if dynamic { a.pointwise_rate_coefficient() } else { 0.0 };
        let time = state.t + a.alpha_f * a.dt;

        let mut small_iter = small.velocity.clone();
        let mut tau: (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut report = StepReport {
            passes: 0,
            initial_residual: 0.0,
            final_residual: 0.0,
            linear_iterations: 0,
            worst_linear_residual: 0.0,
        };
        loop {
            let u_alpha: Vec<f64> = (0..nv).map(|i| a.alpha_value(state.u[i], state.u_dot[i], x[i])).collect();
            let u_dot_alpha: Vec<f64> = (0..nv).map(|i| a.alpha_rate(state.u_dot[i], x[i])).collect();
            if report.passes < self.options.tau_update_passes.max(1) {
                tau = asm.compute_tau(&u_alpha, &small_iter, self.static_dt(false));
            }
            let (tau_m, tau_c) = (&tau.0, &tau.1);
            let stage = StageInput {
                u: &u_alpha,
                u_dot: &u_dot_alpha,
                p: &p,
                zeta: &zeta,
                beta: a.value_factor(),
                mu: a.rate_factor(),
                time,
                rate_coefficient,
                rate_offset: &rate_offset,
                tau_m,
                tau_c,
            };
            let out = asm.assemble(&stage, false);
            let res = norm(&out.residual);
            if report.passes == 0 {
                report.initial_residual = res;
            }
            report.final_residual = res;
            if self.converged(report.passes, res, report.initial_residual) {
                let mut next = State {
                    u: (0..nv).map(|i| a.next_value(state.u[i], state.u_dot[i], x[i])).collect(),
                    u_dot: x,
                    p,
                    zeta,
                    t: state.t + a.dt,
                    step: state.step + 1,
                };
                if !form.has_multiplier() {
                    next.zeta.iter_mut().for_each(|v| *v = 0.0);
                }
                let mut field = small.clone();
                field.tau_m = tau.0;
                field.tau_c = tau.1;
                match form {
                    Formulation::Glsdd => {
                        for (i, s_alpha) in out.small.iter().enumerate() {
                            for k in 0..MAX_DIM {
                                let (s, r) = a.pointwise_finalize(small.velocity[i][k], small.rate[i][k], s_alpha[k]);
                                field.velocity[i][k] = s;
                                field.rate[i][k] = r;
                            }
                        }
                    }
                    Formulation::Vmss => {
                        field.velocity = out.small;
                        field.pressure = out.small_pressure;
                    }
                    Formulation::Galerkin => {}
                }
                return Ok((next, field, report));
            }
            if report.passes >= self.options.max_correctors {
                return Err(Error::NonlinearNotConverged {
                    step: state.step + 1,
                    passes: report.passes,
                    residual: res,
                    initial: report.initial_residual,
                });
            }
            small_iter = out.small;
            let dx = self.correction(&stage, &null, &mut report)?;
            for i in 0..nv {
                x[i] += dx[i];
            }
            for i in 0..np {
                p[i] += dx[nv + i];
            }
            if layout.has_multiplier {
                for i in 0..np {
                    zeta[i] += dx[nv + np + i];
                }
            }
            report.passes += 1;
        }
    }

    /// Solves the steady problem starting from `guess` (velocity, pressure and multiplier).
    /// Velocity coefficients are kept at zero mean per component.
    pub fn solve_steady(&self, guess: &State) -> Result<(State, SmallScaleField, StepReport)> {
        let asm = &self.assembler;
        let layout = asm.layout().clone();
        let nv = layout.n_velocity;
        let np = layout.n_pressure;
        let null = layout.null_space(true);
        let mut u = guess.u.clone();
        remove_velocity_means(&mut u, &layout);
        let mut p = guess.p.clone();
        let mut zeta = guess.zeta.clone();
        let zeros = vec![0.0; nv];
        let mut small_iter: Vec<Vec3> = Vec::new();
        let mut tau: (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut report = StepReport {
            passes: 0,
            initial_residual: 0.0,
            final_residual: 0.0,
            linear_iterations: 0,
            worst_linear_residual: 0.0,
        };
        loop {
            if report.passes < self.options.tau_update_passes.max(1) {
                tau = asm.compute_tau(&u, &small_iter, None);
            }
            let (tau_m, tau_c) = (&tau.0, &tau.1);
            let stage = StageInput {
                u: &u,
                u_dot: &zeros,
                p: &p,
                zeta: &zeta,
                beta: 1.0,
                mu: 0.0,
                time: guess.t,
                rate_coefficient: 0.0,
                rate_offset: &[],
                tau_m,
                tau_c,
            };
            let out = asm.assemble(&stage, false);
            let res = norm(&out.residual);
            if report.passes == 0 {
                report.initial_residual = res;
            }
            report.final_residual = res;
            if self.converged(report.passes, res, report.initial_residual) {
                let mut field = self.zero_small_scales();
                field.velocity = out.small;
                if !out.small_pressure.is_empty() {
                    field.pressure = out.small_pressure;
                }
                field.tau_m = tau.0;
                field.tau_c = tau.1;
                let state = State {
                    u,
                    u_dot: zeros,
                    p,
                    zeta,
                    t: guess.t,
                    step: guess.step,
                };
                return Ok((state, field, report));
            }
            if report.passes >= self.options.max_correctors {
                return Err(Error::NonlinearNotConverged {
                    step: guess.step,
                    passes: report.passes,
                    residual: res,
                    initial: report.initial_residual,
                });
            }
            small_iter = out.small;
            let dx = self.correction(&stage, &null, &mut report)?;
            for i in 0..nv {
                u[i] += dx[i];
            }
            for i in 0..np {
                p[i] += dx[nv + i];
            }
            if layout.has_multiplier {
                for i in 0..np {
                    zeta[i] += dx[nv + np + i];
                }
            }
            report.passes += 1;
        }
    }
}

/// Removes the per-component mean of a stacked velocity vector.
fn remove_velocity_means(u: &mut [f64], layout: &DofLayout) {
    let blocks = (0..layout.velocity.len())
        .map(|c| layout.velocity_offsets[c]..layout.velocity_offsets[c] + layout.velocity[c])
        .collect();
    NullSpace::new(blocks).project(u);
}

/// One step of the scheme applied to `y' = lambda y`; returns `(y_{n+1}, y'_{n+1})`.
pub fn scalar_step(lambda: f64, y: f64, y_dot: f64, a: &AlphaParams) -> (f64, f64) {
    let num = lambda * (y + a.alpha_f * a.dt * (1.0 - a.gamma) * y_dot) - (1.0 - a.alpha_m) * y_dot;
    let den = a.alpha_m - lambda * a.alpha_f * a.gamma * a.dt;
    let x = num / den;
    (a.next_value(y, y_dot, x), x)
}
