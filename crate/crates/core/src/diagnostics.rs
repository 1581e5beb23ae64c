//! Energy budgets, conservation checks and analytic reference fields.

use crate::domain::{Vec3, MAX_DIM};
use crate::formulations::{Assembler, Formulation};
use crate::small_scales::SmallScaleField;
use crate::time_integrator::{AlphaParams, State};

/// Quadrature functionals of one set of large- and small-scale fields.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBudget {
    pub t: f64,
    /// `1/2 (u, u)`
    pub e_h: f64,
    /// `1/2 (u', u')`
    pub e_prime: f64,
    /// `(u, u')`
    pub e_cross: f64,
    pub e_total: f64,
    /// Viscous dissipation as assembled, `(grad u, 2 nu sym grad u)`.
    pub d_visc: f64,
    /// `(u', u' / tau_M)`
    pub d_small: f64,
    /// `d_small / (d_visc + d_small)`
    pub fraction: f64,
    pub w_force_h: f64,
    pub w_force_prime: f64,
    /// `(nu lap u, u')`
    pub t_laplace: f64,
    /// `(div u, p')`
    pub t_pressure_small: f64,
    /// `((u + u').grad u, u')`
    pub t_backscatter: f64,
    /// `(grad u, (u + u') (u + u'))`
    pub t_convective_cross: f64,
    /// `(u', du/dt)`
    pub t_rate_cross: f64,
    /// Sum of the non-dissipative small-scale terms of the large-scale energy equation
    /// of the static method.
    pub unwanted: f64,
    /// Largest pointwise `|div u|`.
    pub div_max: f64,
    /// `int (u + u')`
    pub momentum: Vec3,
    /// `(u_dot + u'_dot, u_dot + u'_dot)`
    pub rate_norm_sq: f64,
}

/// Field values that a budget is evaluated from.
#[derive(Debug, Clone, Copy)]
pub struct BudgetFields<'a> {
    pub u: &'a [f64],
    pub u_dot: &'a [f64],
    pub small: &'a [Vec3],
    pub small_rate: &'a [Vec3],
    pub small_pressure: &'a [f64],
    pub tau_m: &'a [f64],
    pub t: f64,
}

/// Evaluates every budget term with the solver's own quadrature.
pub fn evaluate_budget(asm: &Assembler, fields: &BudgetFields) -> EnergyBudget {
    let d = asm.dim();
    let nq = asm.n_points();
    let nu = asm.physics().nu;
    let has_force = asm.physics().forcing.is_some();
    let mut b = EnergyBudget {
        t: fields.t,
        ..Default::default()
    };
    for e in 0..asm.n_elements() {
        let pts = asm.point_fields(e, fields.u, fields.u_dot, &[], &[]);
        for (q, inp) in pts.iter().enumerate() {
            let idx = e * nq + q;
            let w = asm.weight(q);
            let s = fields.small.get(idx).copied().unwrap_or([0.0; MAX_DIM]);
            let sr = fields.small_rate.get(idx).copied().unwrap_or([0.0; MAX_DIM]);
            let pp = fields.small_pressure.get(idx).copied().unwrap_or(0.0);
            let f = if has_force { asm.physics().force(&asm.point(e, q), fields.t) } else { [0.0; MAX_DIM] };
            let g = &inp.grad;
            let mut a = [0.0; MAX_DIM];
            for i in 0..d {
                a[i] = inp.u[i] + s[i];
            }
            let dot = |x: &Vec3, y: &Vec3| (0..d).map(|i| x[i] * y[i]).sum::<f64>();
            b.e_h += 0.5 * w * dot(&inp.u, &inp.u);
            b.e_prime += 0.5 * w * dot(&s, &s);
            b.e_cross += w * dot(&inp.u, &s);
            let mut visc = 0.0;
            let mut conv_cross = 0.0;
            for k in 0..d {
                for j in 0..d {
                    visc += g[k][j] * (g[k][j] + g[j][k]);
                    conv_cross += g[k][j] * a[k] * a[j];
                }
            }
            b.d_visc += w * nu * visc;
            b.t_convective_cross += w * conv_cross;
            let ss = dot(&s, &s);
            if ss > 0.0 {
                let tau = fields.tau_m.get(idx).copied().unwrap_or(f64::INFINITY);
                b.d_small += w * ss / tau;
            }
            b.w_force_h += w * dot(&inp.u, &f);
            b.w_force_prime += w * dot(&s, &f);
            b.t_laplace += w * nu * dot(&inp.lap, &s);
            let div: f64 = (0..d).map(|i| g[i][i]).sum();
            b.t_pressure_small += w * div * pp;
            b.div_max = b.div_max.max(div.abs());
            let mut ga = [0.0; MAX_DIM];
            for i in 0..d {
                ga[i] = (0..d).map(|j| g[i][j] * a[j]).sum();
            }
            b.t_backscatter += w * dot(&ga, &s);
            b.t_rate_cross += w * dot(&s, &inp.u_dot);
            let mut v = [0.0; MAX_DIM];
            for i in 0..d {
                v[i] = inp.u_dot[i] + sr[i];
                b.momentum[i] += w * (inp.u[i] + s[i]);
            }
            b.rate_norm_sq += w * dot(&v, &v);
        }
    }
    b.e_total = b.e_h + b.e_cross + b.e_prime;
    b.fraction = if b.d_visc + b.d_small > 0.0 { b.d_small / (b.d_visc + b.d_small) } else { 0.0 };
    b.unwanted =
        2.0 * b.t_laplace - b.t_rate_cross + b.t_pressure_small + b.t_convective_cross - b.t_backscatter;
    b
}

/// Budget of a state at its own time level, with the time scales stored in `small`.
pub fn compute_budget(asm: &Assembler, state: &State, small: &SmallScaleField) -> EnergyBudget {
    evaluate_budget(
        asm,
        &BudgetFields {
            u: &state.u,
            u_dot: &state.u_dot,
            small: &small.velocity,
            small_rate: &small.rate,
            small_pressure: &small.pressure,
            tau_m: &small.tau_m,
            t: state.t,
        },
    )
}

/// Energy balance of one time step, evaluated at the intermediate level.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepBudget {
    pub dt: f64,
    /// Energy the identity is stated for, before and after the step.
    pub energy_before: f64,
    pub energy_after: f64,
    /// Terms at the intermediate level.
    pub alpha: EnergyBudget,
    /// `dt^2 (alpha_f - 1/2) ||rate||^2`
    pub numerical_dissipation: f64,
    /// Right-hand side rate of the energy equation (times `dt` gives the predicted change).
    pub rate: f64,
    /// `E_{n+1} - E_n + numerical_dissipation - dt * rate`
    pub identity_residual: f64,
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn lerp3(a: &[Vec3], b: &[Vec3], t: f64) -> Vec<Vec3> {
    a.iter()
        .zip(b)
        .map(|(x, y)| [x[0] + t * (y[0] - x[0]), x[1] + t * (y[1] - x[1]), x[2] + t * (y[2] - x[2])])
        .collect()
}

/// Discrete energy identity of the step `n -> n+1`.
///
/// Intermediate values are rebuilt from the two time levels with the scheme's own
/// weights. For the dynamic method the energy is that of the total velocity; otherwise it
/// is the large-scale energy, and for the static method the right-hand side contains every
/// small-scale term of the large-scale energy equation.
pub fn step_budget(
    asm: &Assembler,
    alpha: &AlphaParams,
    before: (&State, &SmallScaleField),
    after: (&State, &SmallScaleField),
) -> StepBudget {
    let (s0, f0) = before;
    let (s1, f1) = after;
    let form = asm.formulation();
    let u = lerp(&s0.u, &s1.u, alpha.alpha_f);
    let u_dot = lerp(&s0.u_dot, &s1.u_dot, alpha.alpha_m);
    let (small, small_rate) = match form {
        Formulation::Glsdd => (
            lerp3(&f0.velocity, &f1.velocity, alpha.alpha_f),
            lerp3(&f0.rate, &f1.rate, alpha.alpha_m),
        ),
        Formulation::Vmss => (f1.velocity.clone(), Vec::new()),
        Formulation::Galerkin => (Vec::new(), Vec::new()),
    };
    let fields = BudgetFields {
        u: &u,
        u_dot: &u_dot,
        small: &small,
        small_rate: &small_rate,
        small_pressure: &f1.pressure,
        tau_m: &f1.tau_m,
        t: s0.t + alpha.alpha_f * alpha.dt,
    };
    let at = evaluate_budget(asm, &fields);
    let b0 = compute_budget(asm, s0, f0);
    let b1 = compute_budget(asm, s1, f1);
    let (e0, e1, rate, rate_sq) = match form {
        Formulation::Glsdd => (
            b0.e_total,
            b1.e_total,
            -at.d_visc - at.d_small + at.w_force_h + at.w_force_prime,
            at.rate_norm_sq,
        ),
        Formulation::Vmss => {
            let large_rate_sq = evaluate_budget(
                asm,
                &BudgetFields {
                    small: &[],
                    small_rate: &[],
                    ..fields
                },
            )
            .rate_norm_sq;
            (
                b0.e_h,
                b1.e_h,
                -at.d_visc - at.d_small + at.unwanted + at.w_force_h + at.w_force_prime,
                large_rate_sq,
            )
        }
        Formulation::Galerkin => (b0.e_h, b1.e_h, -at.d_visc + at.w_force_h, at.rate_norm_sq),
    };
    let numerical_dissipation = alpha.dt * alpha.dt * (alpha.alpha_f - 0.5) * rate_sq;
    StepBudget {
        dt: alpha.dt,
        energy_before: e0,
        energy_after: e1,
        alpha: at,
        numerical_dissipation,
        rate,
        identity_residual: e1 - e0 + numerical_dissipation - alpha.dt * rate,
    }
}

/// Incompressibility, small-scale orthogonality and momentum of one state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConservationReport {
    /// Largest pointwise `|div u|` over all quadrature points.
    pub div_max: f64,
    /// Largest `|(grad theta_i, u')| / (||u'|| ||grad theta_i||)` over pressure basis functions.
    pub orthogonality: f64,
    /// `int (u + u')`
    pub momentum: Vec3,
}

pub fn check_conservation(asm: &Assembler, state: &State, small: &SmallScaleField) -> ConservationReport {
    let d = asm.dim();
    let nq = asm.n_points();
    let cache = asm.cache();
    let np = asm.space().pressure().n_basis();
    let mut proj = vec![0.0; np];
    let mut grad_norm_sq = vec![0.0; np];
    let mut s_norm_sq = 0.0;
    let mut rep = ConservationReport::default();
    for e in 0..asm.n_elements() {
        let pts = asm.point_fields(e, &state.u, &[], &[], &[]);
        for (q, inp) in pts.iter().enumerate() {
            let w = asm.weight(q);
            let s = small.velocity.get(e * nq + q).copied().unwrap_or([0.0; MAX_DIM]);
            let div: f64 = (0..d).map(|i| inp.grad[i][i]).sum();
            rep.div_max = rep.div_max.max(div.abs());
            for i in 0..d {
                rep.momentum[i] += w * (inp.u[i] + s[i]);
            }
            s_norm_sq += w * (0..d).map(|i| s[i] * s[i]).sum::<f64>();
            for (a, &g) in cache.pressure_indices[e].iter().enumerate() {
                let gr = cache.pressure.gradient(q, a);
                proj[g] += w * (0..d).map(|j| gr[j] * s[j]).sum::<f64>();
                grad_norm_sq[g] += w * (0..d).map(|j| gr[j] * gr[j]).sum::<f64>();
            }
        }
    }
    if s_norm_sq > 0.0 {
        let sn = s_norm_sq.sqrt();
        rep.orthogonality = proj
            .iter()
            .zip(&grad_norm_sq)
            .map(|(p, g)| p.abs() / (sn * g.sqrt()))
            .fold(0.0, f64::max);
    }
    rep
}

/// `u . R_conv(u) + (u', (u + u').grad u)`: the convective terms tested with the solution
/// itself, including the small-scale equation's convective term. Vanishes for the
/// skew-symmetric forms.
pub fn convective_self_contraction(asm: &Assembler, u: &[f64], small: &[Vec3]) -> f64 {
    let r = asm.assemble_convective(u, small);
    let large: f64 = u.iter().zip(&r).map(|(a, b)| a * b).sum();
    let mut small_part = 0.0;
    if asm.formulation() == Formulation::Glsdd && !small.is_empty() {
        let fields = BudgetFields {
            u,
            u_dot: &[],
            small,
            small_rate: &[],
            small_pressure: &[],
            tau_m: &[],
            t: 0.0,
        };
        small_part = evaluate_budget(asm, &fields).t_backscatter;
    }
    large + small_part
}

/// `||u_h - u||_{L2}` by the solver quadrature.
pub fn l2_velocity_error(asm: &Assembler, u: &[f64], exact: &dyn Fn(&Vec3) -> Vec3) -> f64 {
    let d = asm.dim();
    let mut acc = 0.0;
    for e in 0..asm.n_elements() {
        let pts = asm.point_fields(e, u, &[], &[], &[]);
        for (q, inp) in pts.iter().enumerate() {
            let ex = exact(&asm.point(e, q));
            acc += asm.weight(q) * (0..d).map(|i| (inp.u[i] - ex[i]).powi(2)).sum::<f64>();
        }
    }
    acc.sqrt()
}

/// Decaying two-dimensional Taylor–Green solution on `[0, 2pi]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorGreen2d {
    pub t: f64,
    pub nu: f64,
}

pub fn taylor_green_2d_exact(t: f64, nu: f64) -> TaylorGreen2d {
    TaylorGreen2d { t, nu }
}

impl TaylorGreen2d {
    pub fn velocity(&self, x: &Vec3) -> Vec3 {
        let decay = (-2.0 * self.nu * self.t).exp();
        [
            x[0].sin() * x[1].cos() * decay,
            -x[0].cos() * x[1].sin() * decay,
            0.0,
        ]
    }

    pub fn pressure(&self, x: &Vec3) -> f64 {
        0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * (-4.0 * self.nu * self.t).exp()
    }

    /// Kinetic energy `1/2 int |u|^2` over the periodic square.
    pub fn energy(&self) -> f64 {
        std::f64::consts::PI * std::f64::consts::PI * (-4.0 * self.nu * self.t).exp()
    }
}

/// Three-dimensional Taylor–Green initial velocity.
pub fn taylor_green_3d_velocity(x: &Vec3) -> Vec3 {
    [
        x[0].sin() * x[1].cos() * x[2].cos(),
        -x[0].cos() * x[1].sin() * x[2].cos(),
        0.0,
    ]
}

/// Three-dimensional Taylor–Green initial pressure.
pub fn taylor_green_3d_pressure(x: &Vec3) -> f64 {
    ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * ((2.0 * x[2]).cos() + 2.0) / 16.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_2d_field_matches_3d_pattern() {
        let tg = taylor_green_2d_exact(0.0, 0.01);
        let x = [0.3, 1.2, 0.0];
        let u2 = tg.velocity(&x);
        let u3 = taylor_green_3d_velocity(&x);
        for i in 0..3 {
            assert!((u2[i] - u3[i]).abs() < 1e-15);
        }
    }

    fn symbolic_residual(x: &Vec3, t: f64, nu: f64) -> [f64; 2] {
        let (sx, cx, sy, cy) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
        let f = (-2.0 * nu * t).exp();
        let u = [sx * cy * f, -cx * sy * f];
        let du = [[cx * cy * f, -sx * sy * f], [sx * sy * f, -cx * cy * f]];
        let dt = [-2.0 * nu * u[0], -2.0 * nu * u[1]];
        let lap = [-2.0 * u[0], -2.0 * u[1]];
        let g = (-4.0 * nu * t).exp();
        let dp = [-0.5 * (2.0 * x[0]).sin() * g, -0.5 * (2.0 * x[1]).sin() * g];
        let mut r = [0.0; 2];
        for i in 0..2 {
            r[i] = dt[i] + u[0] * du[i][0] + u[1] * du[i][1] + dp[i] - nu * lap[i];
        }
        r
    }

    #[test]
    fn analytic_pair_solves_navier_stokes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = [rng.random_range(0.0..6.3), rng.random_range(0.0..6.3), 0.0];
            let t = rng.random_range(0.0..5.0);
            let nu = rng.random_range(1e-3..1e-1);
            let tg = taylor_green_2d_exact(t, nu);
            let f = (-2.0 * nu * t).exp();
            let u = tg.velocity(&x);
            assert!((u[0] - x[0].sin() * x[1].cos() * f).abs() < 1e-15);
            assert!((u[1] + x[0].cos() * x[1].sin() * f).abs() < 1e-15);
            let p = 0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * f * f;
            assert!((tg.pressure(&x) - p).abs() < 1e-15);
            let r = symbolic_residual(&x, t, nu);
            assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
        }
    }

    #[test]
    fn energy_decay_rate() {
        let nu = 0.05;
        let t = 1.7;
        let r = taylor_green_2d_exact(t, nu).energy() / taylor_green_2d_exact(0.0, nu).energy();
        assert!((r - (-4.0 * nu * t).exp()).abs() < 1e-15);
    }
}
