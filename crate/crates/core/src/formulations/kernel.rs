//! Pointwise fluxes of the weak forms.
//!
//! Every formulation is written as `sum_t T_t F_t` where `T_t` runs over test-function
//! slots (velocity values, velocity gradients, velocity Laplacians, pressure values,
//! pressure gradients, multiplier gradients) and `F_t` is the flux paired with it. Trial
//! variations use the same slot layout with the unknown's shape data in place of the test
//! function.

use super::{Formulation, Linearization, Physics};
use crate::domain::{Mat3, Vec3, MAX_DIM};
use crate::small_scales::solve_shifted;

/// Slot count in three dimensions.
pub const MAX_SLOTS: usize = 4 * MAX_DIM + MAX_DIM * MAX_DIM + 1;

pub type Flux = [f64; MAX_SLOTS];
pub type FluxJacobian = [[f64; MAX_SLOTS]; MAX_SLOTS];

/// Slot layout for spatial dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slots {
    pub d: usize,
}

impl Slots {
    #[inline]
    pub fn value(&self, k: usize) -> usize {
        k
    }
    #[inline]
    pub fn grad(&self, k: usize, j: usize) -> usize {
        self.d + k * self.d + j
    }
    #[inline]
    pub fn lap(&self, k: usize) -> usize {
        self.d + self.d * self.d + k
    }
    #[inline]
    pub fn pressure(&self) -> usize {
        2 * self.d + self.d * self.d
    }
    #[inline]
    pub fn pressure_grad(&self, j: usize) -> usize {
        2 * self.d + self.d * self.d + 1 + j
    }
    #[inline]
    pub fn multiplier_grad(&self, j: usize) -> usize {
        3 * self.d + self.d * self.d + 1 + j
    }
    #[inline]
    pub fn count(&self) -> usize {
        4 * self.d + self.d * self.d + 1
    }
}

/// Large-scale fields and frozen parameters at one quadrature point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointInputs {
    pub u: Vec3,
    pub u_dot: Vec3,
    /// `grad[i][j] = d u_i / d x_j`
    pub grad: Mat3,
    pub lap: Vec3,
    pub p: f64,
    pub grad_p: Vec3,
    pub grad_zeta: Vec3,
    pub f: Vec3,
    pub tau_m: f64,
    pub tau_c: f64,
    /// `c` in `s_dot = c s + b` (dynamic closure).
    pub rate_coefficient: f64,
    /// `b` in `s_dot = c s + b` (dynamic closure).
    pub rate_offset: Vec3,
}

/// Small scales condensed at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointSolution {
    pub small: Vec3,
    pub small_rate: Vec3,
    pub small_pressure: f64,
    /// Advective velocity (zero when convection is off).
    pub adv: Vec3,
    /// Inverse of the local small-scale operator.
    inv: Mat3,
}

impl PointSolution {
    /// Solution with prescribed small scales (used for term-by-term evaluations).
    pub fn with_small(u: &Vec3, small: &Vec3, convection: bool) -> Self {
        let mut adv = [0.0; MAX_DIM];
        if convection {
            for i in 0..MAX_DIM {
                adv[i] = u[i] + small[i];
            }
        }
        Self {
            small: *small,
            adv,
            ..Default::default()
        }
    }
}

/// Solves the pointwise small-scale equation for the given formulation.
///
/// Static closure: `(1/tau) s + (s.grad)u = -(u_dot + (u.grad)u + grad p - nu lap u - f)`.
/// Dynamic closure: `(c + 1/tau) s + (s.grad)u = -(... + grad zeta + b)`, then `s_dot = c s + b`.
pub fn solve_small_scales(form: Formulation, d: usize, phys: &Physics, inp: &PointInputs) -> PointSolution {
    let mut out = PointSolution::default();
    if form == Formulation::Galerkin {
        if phys.convection {
            out.adv = inp.u;
        }
        return out;
    }
    let conv = phys.convection;
    let mut rhs = [0.0; MAX_DIM];
    for i in 0..d {
        let c: f64 = if conv { (0..d).map(|j| inp.grad[i][j] * inp.u[j]).sum() } else { 0.0 };
        rhs[i] = -(inp.u_dot[i] + c + inp.grad_p[i] - phys.nu * inp.lap[i] - inp.f[i]);
    }
    let mut diag = 1.0 / inp.tau_m;
    if form == Formulation::Glsdd {
        diag += inp.rate_coefficient;
        for i in 0..d {
            rhs[i] -= inp.grad_zeta[i] + inp.rate_offset[i];
        }
    }
    let (s, inv) = solve_shifted(d, diag, if conv { Some(&inp.grad) } else { None }, &rhs);
    out.small = s;
    out.inv = inv;
    if form == Formulation::Glsdd {
        for i in 0..d {
            out.small_rate[i] = inp.rate_coefficient * s[i] + inp.rate_offset[i];
        }
    }
    if form == Formulation::Vmss {
        out.small_pressure = -inp.tau_c * (0..d).map(|i| inp.grad[i][i]).sum::<f64>();
    }
    if conv {
        for i in 0..d {
            out.adv[i] = inp.u[i] + s[i];
        }
    }
    out
}

/// Flux vector `F_t` at one point.
pub fn flux(form: Formulation, d: usize, phys: &Physics, inp: &PointInputs, sol: &PointSolution) -> Flux {
    let sl = Slots { d };
    let mut fl = [0.0; MAX_SLOTS];
    let a = &sol.adv;
    let s = &sol.small;
    let g = &inp.grad;
    let nu = phys.nu;
    for k in 0..d {
        match form {
            Formulation::Galerkin | Formulation::Glsdd => {
                let conv: f64 = (0..d).map(|j| a[j] * g[k][j]).sum();
                fl[sl.value(k)] = inp.u_dot[k] + sol.small_rate[k] + 0.5 * conv - inp.f[k];
                for j in 0..d {
                    let mut v = -0.5 * a[j] * inp.u[k] - a[j] * s[k] + nu * (g[k][j] + g[j][k]);
                    if j == k {
                        v -= inp.p;
                    }
                    fl[sl.grad(k, j)] = v;
                }
                fl[sl.lap(k)] = nu * s[k];
            }
            Formulation::Vmss => {
                fl[sl.value(k)] = inp.u_dot[k] - inp.f[k];
                for j in 0..d {
                    let mut v = -a[k] * a[j] + nu * (g[k][j] + g[j][k]);
                    if j == k {
                        v -= inp.p + sol.small_pressure;
                    }
                    fl[sl.grad(k, j)] = v;
                }
                fl[sl.lap(k)] = -nu * s[k];
            }
        }
    }
    fl[sl.pressure()] = (0..d).map(|i| g[i][i]).sum();
    for j in 0..d {
        match form {
            Formulation::Vmss => fl[sl.pressure_grad(j)] = -s[j],
            Formulation::Glsdd => fl[sl.multiplier_grad(j)] = s[j],
            Formulation::Galerkin => {}
        }
    }
    fl
}

/// Only the convective contributions of the large-scale flux.
pub fn convective_flux(form: Formulation, d: usize, inp: &PointInputs, sol: &PointSolution) -> Flux {
    let sl = Slots { d };
    let mut fl = [0.0; MAX_SLOTS];
    let a = &sol.adv;
    let s = &sol.small;
    for k in 0..d {
        match form {
            Formulation::Galerkin | Formulation::Glsdd => {
                fl[sl.value(k)] = 0.5 * (0..d).map(|j| a[j] * inp.grad[k][j]).sum::<f64>();
                for j in 0..d {
                    fl[sl.grad(k, j)] = -0.5 * a[j] * inp.u[k] - a[j] * s[k];
                }
            }
            Formulation::Vmss => {
                for j in 0..d {
                    fl[sl.grad(k, j)] = -a[k] * a[j];
                }
            }
        }
    }
    fl
}

/// Variation of the large-scale point data.
#[derive(Debug, Clone, Copy, Default)]
struct Variation {
    u: Vec3,
    u_dot: Vec3,
    grad: Mat3,
    lap: Vec3,
    p: f64,
    grad_p: Vec3,
    grad_zeta: Vec3,
}

/// `J[t][m] = dF_t / d(trial slot m)`, where a velocity trial slot varies the unknown
/// rate and moves the intermediate value by `beta` and the intermediate rate by `mu`.
pub fn flux_jacobian(
    form: Formulation,
    d: usize,
    phys: &Physics,
    inp: &PointInputs,
    sol: &PointSolution,
    beta: f64,
    mu: f64,
) -> FluxJacobian {
    let sl = Slots { d };
    let mut jac = [[0.0; MAX_SLOTS]; MAX_SLOTS];
    let mut apply = |m: usize, var: Variation| {
        let df = flux_derivative(form, d, phys, inp, sol, &var);
        for t in 0..sl.count() {
            jac[t][m] = df[t];
        }
    };
    for k in 0..d {
        let mut v = Variation::default();
        v.u[k] = beta;
        v.u_dot[k] = mu;
        apply(sl.value(k), v);
        for j in 0..d {
            let mut v = Variation::default();
            v.grad[k][j] = beta;
            apply(sl.grad(k, j), v);
        }
        let mut v = Variation::default();
        v.lap[k] = beta;
        apply(sl.lap(k), v);
    }
    apply(sl.pressure(), Variation { p: 1.0, ..Default::default() });
    for j in 0..d {
        let mut v = Variation::default();
        v.grad_p[j] = 1.0;
        apply(sl.pressure_grad(j), v);
        if form == Formulation::Glsdd {
            let mut v = Variation::default();
            v.grad_zeta[j] = 1.0;
            apply(sl.multiplier_grad(j), v);
        }
    }
    jac
}

fn flux_derivative(
    form: Formulation,
    d: usize,
    phys: &Physics,
    inp: &PointInputs,
    sol: &PointSolution,
    var: &Variation,
) -> Flux {
    let sl = Slots { d };
    let conv = phys.convection;
    let nu = phys.nu;
    let a = &sol.adv;
    let s = &sol.small;
    let g = &inp.grad;
    // small-scale variation from the condensed local equation
    let mut ds = [0.0; MAX_DIM];
    let mut ds_rate = [0.0; MAX_DIM];
    let mut dp_small = 0.0;
    if form != Formulation::Galerkin {
        let mut rhs = [0.0; MAX_DIM];
        for i in 0..d {
            let mut r = var.u_dot[i] + var.grad_p[i] - nu * var.lap[i];
            if conv {
                for j in 0..d {
                    r += var.grad[i][j] * a[j] + g[i][j] * var.u[j];
                }
            }
            if form == Formulation::Glsdd {
                r += var.grad_zeta[i];
            }
            rhs[i] = r;
        }
        for i in 0..d {
            ds[i] = -(0..d).map(|j| sol.inv[i][j] * rhs[j]).sum::<f64>();
        }
        if form == Formulation::Glsdd {
            for i in 0..d {
                ds_rate[i] = inp.rate_coefficient * ds[i];
            }
        }
        if form == Formulation::Vmss {
            dp_small = -inp.tau_c * (0..d).map(|i| var.grad[i][i]).sum::<f64>();
        }
    }
    // transported and advecting velocity variations
    let mut dt = [0.0; MAX_DIM];
    if conv {
        for i in 0..d {
            dt[i] = var.u[i] + ds[i];
        }
    }
    let da = if phys.linearization == Linearization::Newton { dt } else { [0.0; MAX_DIM] };

    let mut df = [0.0; MAX_SLOTS];
    for k in 0..d {
        match form {
            Formulation::Galerkin | Formulation::Glsdd => {
                let dconv: f64 = (0..d).map(|j| da[j] * g[k][j] + a[j] * var.grad[k][j]).sum();
                df[sl.value(k)] = var.u_dot[k] + ds_rate[k] + 0.5 * dconv;
                for j in 0..d {
                    let mut v = -0.5 * (da[j] * inp.u[k] + a[j] * var.u[k]) - (da[j] * s[k] + a[j] * ds[k])
                        + nu * (var.grad[k][j] + var.grad[j][k]);
                    if j == k {
                        v -= var.p;
                    }
                    df[sl.grad(k, j)] = v;
                }
                df[sl.lap(k)] = nu * ds[k];
            }
            Formulation::Vmss => {
                df[sl.value(k)] = var.u_dot[k];
                for j in 0..d {
                    let mut v = -(dt[k] * a[j] + a[k] * da[j]) + nu * (var.grad[k][j] + var.grad[j][k]);
                    if j == k {
                        v -= var.p + dp_small;
                    }
                    df[sl.grad(k, j)] = v;
                }
                df[sl.lap(k)] = -nu * ds[k];
            }
        }
    }
    df[sl.pressure()] = (0..d).map(|i| var.grad[i][i]).sum();
    for j in 0..d {
        match form {
            Formulation::Vmss => df[sl.pressure_grad(j)] = -ds[j],
            Formulation::Glsdd => df[sl.multiplier_grad(j)] = ds[j],
            Formulation::Galerkin => {}
        }
    }
    df
}
