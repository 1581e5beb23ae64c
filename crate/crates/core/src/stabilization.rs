//! Stabilization time scales built from the element metric.

use crate::domain::{ElementMetric, Vec3};

pub const DEFAULT_C_I: f64 = 36.0;
/// The degenerate-case cap is this factor times the time step.
pub const DEFAULT_TAU_MAX_FACTOR: f64 = 1e6;

/// Momentum and continuity time scales at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationParams {
    pub tau_m: f64,
    pub tau_c: f64,
    pub c_i: f64,
    pub nu: f64,
}

impl StabilizationParams {
    /// Dynamic time scales (no time-step contribution).
    pub fn dynamic(u: &Vec3, metric: &ElementMetric, nu: f64, c_i: f64, tau_max: f64) -> Self {
        let tau_m = tau_m(u, metric, nu, c_i, tau_max);
        Self {
            tau_m,
            tau_c: tau_c(tau_m, metric),
            c_i,
            nu,
        }
    }

    /// Static time scales including the transient `4/dt^2` contribution.
    pub fn quasi_static(u: &Vec3, metric: &ElementMetric, nu: f64, c_i: f64, dt: f64) -> Self {
        let tau_m = tau_m_static(u, metric, nu, c_i, dt);
        Self {
            tau_m,
            tau_c: tau_c(tau_m, metric),
            c_i,
            nu,
        }
    }
}

/// `tau_M = (4 u.Gu + C_I nu^2 G:G)^{-1/2}`, capped at `tau_max` when the bracket vanishes.
pub fn tau_m(u: &Vec3, metric: &ElementMetric, nu: f64, c_i: f64, tau_max: f64) -> f64 {
    let s = 4.0 * metric.quad_form(u) + c_i * nu * nu * metric.g_contract;
    if s > 0.0 {
        (1.0 / s.sqrt()).min(tau_max)
    } else {
        tau_max
    }
}

/// `tau_M` with the additional `4/dt^2` term used by the static-subscale method.
pub fn tau_m_static(u: &Vec3, metric: &ElementMetric, nu: f64, c_i: f64, dt: f64) -> f64 {
    let s = 4.0 / (dt * dt) + 4.0 * metric.quad_form(u) + c_i * nu * nu * metric.g_contract;
    1.0 / s.sqrt()
}

/// `tau_C = 1 / (tau_M sqrt(G:G))`
pub fn tau_c(tau_m: f64, metric: &ElementMetric) -> f64 {
    1.0 / (tau_m * metric.g_contract.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{element_metric, BoxDomain};

    fn unit_metric() -> ElementMetric {
        let dom = BoxDomain::new(&[4.0, 4.0, 4.0], &[4, 4, 4]).unwrap();
        element_metric(&dom, 0)
    }

    #[test]
    fn viscous_limit() {
        let h = 0.25;
        let dom = BoxDomain::new(&[1.0; 3], &[4; 3]).unwrap();
        let m = element_metric(&dom, 0);
        let nu = 0.01;
        let t = tau_m(&[0.0; 3], &m, nu, 36.0, 1e9);
        assert!((t - h * h / (nu * (3.0f64 * 36.0).sqrt())).abs() < 1e-15);
        let tc = tau_c(t, &m);
        assert!((tc - nu * 6.0).abs() < 1e-14);
    }

    #[test]
    fn advective_limit() {
        let t = tau_m(&[1.0, 0.0, 0.0], &unit_metric(), 0.0, 36.0, 1e9);
        assert!((t - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cap() {
        let cap = DEFAULT_TAU_MAX_FACTOR * 0.1;
        assert_eq!(tau_m(&[0.0; 3], &unit_metric(), 0.0, 36.0, cap), cap);
    }

    #[test]
    fn continuity_scale() {
        let m = unit_metric();
        assert!((tau_c(1.0, &m) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((tau_c(2.0, &m) - 0.5 * tau_c(1.0, &m)).abs() < 1e-15);
    }

    #[test]
    fn static_scale_includes_time_step() {
        let m = unit_metric();
        let dt = 0.1;
        let t = tau_m_static(&[0.0; 3], &m, 0.0, 36.0, dt);
        assert!((t - dt / 2.0).abs() < 1e-15);
        assert!(tau_m_static(&[1.0, 0.0, 0.0], &m, 0.01, 36.0, dt) < tau_m(&[1.0, 0.0, 0.0], &m, 0.01, 36.0, 1.0));
    }
}
