//! Subgrid velocity stored at quadrature points, with the dynamic (ODE) and static closures.

use crate::domain::{Mat3, Vec3, MAX_DIM};
use crate::time_integrator::AlphaParams;

/// Which closure governs the small scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureKind {
    /// No small scales (plain Galerkin).
    None,
    /// Algebraic closure `u' = -tau_M r_M`, `p' = -tau_C r_C`.
    Static,
    /// Pointwise ODE `du'/dt + u'/tau_M + grad zeta + r_M = 0`.
    Dynamic,
}

/// Small-scale quantities at every quadrature point of every element.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallScaleField {
    pub kind: ClosureKind,
    pub n_elements: usize,
    pub n_points: usize,
    pub velocity: Vec<Vec3>,
    pub rate: Vec<Vec3>,
    /// Static small-scale pressure (empty unless the closure is static).
    pub pressure: Vec<f64>,
    /// Momentum time scale last used at each point.
    pub tau_m: Vec<f64>,
    /// Continuity time scale last used at each point.
    pub tau_c: Vec<f64>,
}

impl SmallScaleField {
    /// Zero small scales (`u'(0) = 0`).
    pub fn zeros(kind: ClosureKind, n_elements: usize, n_points: usize) -> Self {
        let n = n_elements * n_points;
        Self {
            kind,
            n_elements,
            n_points,
            velocity: vec![[0.0; MAX_DIM]; n],
            rate: vec![[0.0; MAX_DIM]; n],
            pressure: if kind == ClosureKind::Static { vec![0.0; n] } else { Vec::new() },
            tau_m: vec![0.0; n],
            tau_c: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.velocity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocity.is_empty()
    }

    #[inline]
    pub fn index(&self, element: usize, point: usize) -> usize {
        element * self.n_points + point
    }

    /// Largest small-scale speed.
    pub fn max_norm(&self) -> f64 {
        self.velocity
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .fold(0.0, f64::max)
    }
}

/// `r_M = du/dt + ((u + u').grad) u + grad p - nu lap u - f`.
///
/// `grad_u[i][j]` is `d u_i / d x_j`.
#[allow(clippy::too_many_arguments)]
pub fn residual_momentum(
    dim: usize,
    u: &Vec3,
    grad_u: &Mat3,
    lap_u: &Vec3,
    u_dot: &Vec3,
    grad_p: &Vec3,
    small: &Vec3,
    f: &Vec3,
    nu: f64,
) -> Vec3 {
    let mut r = [0.0; MAX_DIM];
    for i in 0..dim {
        let conv: f64 = (0..dim).map(|j| (u[j] + small[j]) * grad_u[i][j]).sum();
        r[i] = u_dot[i] + conv + grad_p[i] - nu * lap_u[i] - f[i];
    }
    r
}

/// `r_C = div u`.
pub fn residual_continuity(dim: usize, grad_u: &Mat3) -> f64 {
    (0..dim).map(|i| grad_u[i][i]).sum()
}

/// Advances the small-scale ODE at one point with a frozen residual.
///
/// Solves `s_dot_alpha + s_alpha / tau + grad_zeta + r_m = 0` with the same generalized-alpha
/// relations as the large scales and returns `(u'_{n+1}, du'_{n+1}/dt)`.
pub fn advance_dynamic(
    small_n: &Vec3,
    rate_n: &Vec3,
    r_m: &Vec3,
    grad_zeta: &Vec3,
    tau_m: f64,
    params: &AlphaParams,
) -> (Vec3, Vec3) {
    let c = params.pointwise_rate_coefficient();
    let mut next = [0.0; MAX_DIM];
    let mut rate = [0.0; MAX_DIM];
    for i in 0..MAX_DIM {
        let b = params.pointwise_rate_offset(small_n[i], rate_n[i]);
        let s_alpha = -(r_m[i] + grad_zeta[i] + b) / (c + 1.0 / tau_m);
        let (s, r) = params.pointwise_finalize(small_n[i], rate_n[i], s_alpha);
        next[i] = s;
        rate[i] = r;
    }
    (next, rate)
}

/// Static closure: `(u', p') = (-tau_M r_M, -tau_C r_C)`.
pub fn close_static(r_m: &Vec3, r_c: f64, tau_m: f64, tau_c: f64) -> (Vec3, f64) {
    (
        [-tau_m * r_m[0], -tau_m * r_m[1], -tau_m * r_m[2]],
        -tau_c * r_c,
    )
}

/// Solves `(diag I + grad_u) x = rhs` in `dim` dimensions. Returns the inverse as well.
pub fn solve_shifted(dim: usize, diag: f64, grad_u: Option<&Mat3>, rhs: &Vec3) -> (Vec3, Mat3) {
    let mut a = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..dim {
        a[i][i] = diag;
        if let Some(g) = grad_u {
            for j in 0..dim {
                a[i][j] += g[i][j];
            }
        }
    }
    let inv = invert(dim, &a);
    let mut x = [0.0; MAX_DIM];
    for i in 0..dim {
        x[i] = (0..dim).map(|j| inv[i][j] * rhs[j]).sum();
    }
    (x, inv)
}

fn invert(dim: usize, a: &Mat3) -> Mat3 {
    let mut inv = [[0.0; MAX_DIM]; MAX_DIM];
    match dim {
        1 => inv[0][0] = 1.0 / a[0][0],
        2 => {
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            inv[0][0] = a[1][1] / det;
            inv[0][1] = -a[0][1] / det;
            inv[1][0] = -a[1][0] / det;
            inv[1][1] = a[0][0] / det;
        }
        _ => {
            let c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
            let c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
            let c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
            let det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
            inv[0][0] = c00 / det;
            inv[1][0] = c01 / det;
            inv[2][0] = c02 / det;
            inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
            inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
            inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
            inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
            inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
            inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_only_residual() {
        let z = [0.0; 3];
        let r = residual_momentum(3, &z, &[[0.0; 3]; 3], &z, &[1.0, 0.0, 0.0], &z, &z, &z, 0.1);
        assert_eq!(r, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_patch_divergence() {
        let mut g = [[0.0; 3]; 3];
        g[0][0] = 1.0;
        assert_eq!(residual_continuity(3, &g), 1.0);
    }

    #[test]
    fn steady_equilibrium() {
        let p = AlphaParams::midpoint(0.05).unwrap();
        let r = [0.3, -1.0, 2.0];
        let tau = 0.2;
        let (mut s, mut sd) = ([0.0; 3], [0.0; 3]);
        for _ in 0..2000 {
            (s, sd) = advance_dynamic(&s, &sd, &r, &[0.0; 3], tau, &p);
        }
        for i in 0..3 {
            assert!((s[i] + tau * r[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn midpoint_decay_factor() {
        let dt = 0.1;
        let tau = 0.37;
        let p = AlphaParams::midpoint(dt).unwrap();
        let v = [1.0, -2.0, 0.5];
        let (s, _) = advance_dynamic(&v, &[0.0; 3], &[0.0; 3], &[0.0; 3], tau, &p);
        let g = (1.0 - dt / (2.0 * tau)) / (1.0 + dt / (2.0 * tau));
        for i in 0..3 {
            assert!((s[i] - g * v[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn vanishing_step_keeps_value() {
        let p = AlphaParams::midpoint(1e-12).unwrap();
        let v = [1.0, 2.0, 3.0];
        let (s, _) = advance_dynamic(&v, &[0.0; 3], &[1.0; 3], &[0.0; 3], 0.1, &p);
        for i in 0..3 {
            assert!((s[i] - v[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn static_closure() {
        assert_eq!(close_static(&[0.0; 3], 0.0, 0.1, 2.0), ([0.0; 3], 0.0));
        let (s, p) = close_static(&[1.0, 0.0, 0.0], 0.5, 0.1, 2.0);
        assert!((s[0] + 0.1).abs() < 1e-16);
        assert_eq!(p, -1.0);
    }

    #[test]
    fn shifted_solve() {
        let g = [[0.1, 0.4, -0.3], [0.2, -0.5, 0.7], [0.9, 0.0, 0.3]];
        let rhs = [1.0, -2.0, 0.5];
        let (x, _) = solve_shifted(3, 2.0, Some(&g), &rhs);
        for i in 0..3 {
            let ax = 2.0 * x[i] + (0..3).map(|j| g[i][j] * x[j]).sum::<f64>();
            assert!((ax - rhs[i]).abs() < 1e-14);
        }
        let (x2, _) = solve_shifted(2, 4.0, None, &[2.0, 1.0, 0.0]);
        assert_eq!(x2, [0.5, 0.25, 0.0]);
    }
}
