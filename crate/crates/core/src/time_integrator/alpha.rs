use crate::error::{Error, Result};

/// Generalized-alpha parameters and time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaParams {
    pub alpha_m: f64,
    pub alpha_f: f64,
    pub gamma: f64,
    pub dt: f64,
}

impl AlphaParams {
    pub fn new(alpha_m: f64, alpha_f: f64, gamma: f64, dt: f64) -> Result<Self> {
        for (name, v) in [("alpha_m", alpha_m), ("alpha_f", alpha_f), ("gamma", gamma)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            alpha_m,
            alpha_f,
            gamma,
            dt,
        })
    }

    /// `alpha_m = alpha_f = gamma = 1/2`.
    pub fn midpoint(dt: f64) -> Result<Self> {
        Self::new(0.5, 0.5, 0.5, dt)
    }

    /// Whether the parameters satisfy the discrete energy-decay condition.
    pub fn is_energy_stable(&self) -> bool {
        self.alpha_f >= 0.5 && (self.alpha_m - self.gamma).abs() < 1e-14
    }

    /// `d U_alpha / d x` for the unknown rate `x = U_dot_{n+1}`.
    pub fn value_factor(&self) -> f64 {
        self.alpha_f * self.gamma * self.dt
    }

    /// `d U_dot_alpha / d x`.
    pub fn rate_factor(&self) -> f64 {
        self.alpha_m
    }

    /// Predicted rate `((gamma-1)/gamma) U_dot_n`.
    pub fn predict_rate(&self, rate_n: f64) -> f64 {
        (self.gamma - 1.0) / self.gamma * rate_n
    }

    /// Intermediate value `U_n + alpha_f dt ((1-gamma) U_dot_n + gamma x)`.
    pub fn alpha_value(&self, value_n: f64, rate_n: f64, rate_next: f64) -> f64 {
        value_n + self.alpha_f * self.dt * ((1.0 - self.gamma) * rate_n + self.gamma * rate_next)
    }

    /// Intermediate rate `(1-alpha_m) U_dot_n + alpha_m x`.
    pub fn alpha_rate(&self, rate_n: f64, rate_next: f64) -> f64 {
        (1.0 - self.alpha_m) * rate_n + self.alpha_m * rate_next
    }

    /// End-of-step value `U_n + dt ((1-gamma) U_dot_n + gamma x)`.
    pub fn next_value(&self, value_n: f64, rate_n: f64, rate_next: f64) -> f64 {
        value_n + self.dt * ((1.0 - self.gamma) * rate_n + self.gamma * rate_next)
    }

    /// Coefficient `c` in `s_dot_alpha = c s_alpha + b` for pointwise unknowns that
    /// are solved for at the intermediate level.
    pub fn pointwise_rate_coefficient(&self) -> f64 {
        self.alpha_m / (self.alpha_f * self.gamma * self.dt)
    }

    /// Offset `b` in `s_dot_alpha = c s_alpha + b`.
    pub fn pointwise_rate_offset(&self, value_n: f64, rate_n: f64) -> f64 {
        let c = self.pointwise_rate_coefficient();
        (1.0 - self.alpha_m) * rate_n
            - c * (value_n + self.alpha_f * self.dt * (1.0 - self.gamma) * rate_n)
    }

    /// End-of-step value and rate of a pointwise unknown from its intermediate value.
    pub fn pointwise_finalize(&self, value_n: f64, rate_n: f64, value_alpha: f64) -> (f64, f64) {
        let rate_next = (value_alpha
            - value_n
            - self.alpha_f * self.dt * (1.0 - self.gamma) * rate_n)
            / (self.alpha_f * self.gamma * self.dt);
        (self.next_value(value_n, rate_n, rate_next), rate_next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(AlphaParams::new(0.0, 0.5, 0.5, 0.1).is_err());
        assert!(AlphaParams::new(0.5, 1.2, 0.5, 0.1).is_err());
        assert!(AlphaParams::new(0.5, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn pointwise_relations_are_consistent() {
        let a = AlphaParams::new(0.7, 0.6, 0.55, 0.3).unwrap();
        let (s_n, r_n, r_next) = (1.3, -0.4, 0.9);
        let s_alpha = a.alpha_value(s_n, r_n, r_next);
        let rate_alpha = a.alpha_rate(r_n, r_next);
        let c = a.pointwise_rate_coefficient();
        let b = a.pointwise_rate_offset(s_n, r_n);
        assert!((c * s_alpha + b - rate_alpha).abs() < 1e-13);
        let (s_next, rate_back) = a.pointwise_finalize(s_n, r_n, s_alpha);
        assert!((rate_back - r_next).abs() < 1e-13);
        assert!((s_next - a.next_value(s_n, r_n, r_next)).abs() < 1e-13);
    }

    #[test]
    fn equal_alpha_m_gamma_gives_difference_quotient() {
        let a = AlphaParams::new(0.6, 0.6, 0.6, 0.25).unwrap();
        let (u_n, r_n, x) = (2.0, 0.3, -1.1);
        let u_next = a.next_value(u_n, r_n, x);
        assert!(((u_next - u_n) / a.dt - a.alpha_rate(r_n, x)).abs() < 1e-13);
    }
}
