//! Residual and Jacobian assembly for the Galerkin, static-VMS and dynamic-GLS formulations.

mod assembly;
pub mod kernel;

use std::sync::Arc;

pub use assembly::{AssemblyOutput, Assembler, DofLayout, StageInput};

use crate::domain::Vec3;
use crate::small_scales::ClosureKind;

/// Which weak form is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Skew-symmetric Galerkin.
    Galerkin,
    /// Conservative residual-based VMS with static small scales.
    Vmss,
    /// Galerkin/least-squares with dynamic, divergence-free small scales.
    Glsdd,
}

impl Formulation {
    pub fn name(&self) -> &'static str {
        match self {
            Formulation::Galerkin => "galerkin",
            Formulation::Vmss => "vmss",
            Formulation::Glsdd => "glsdd",
        }
    }

    pub fn closure(&self) -> ClosureKind {
        match self {
            Formulation::Galerkin => ClosureKind::None,
            Formulation::Vmss => ClosureKind::Static,
            Formulation::Glsdd => ClosureKind::Dynamic,
        }
    }

    /// Whether the small-scale divergence multiplier is an unknown.
    pub fn has_multiplier(&self) -> bool {
        matches!(self, Formulation::Glsdd)
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "galerkin" | "gal" => Ok(Formulation::Galerkin),
            "vmss" => Ok(Formulation::Vmss),
            "glsdd" => Ok(Formulation::Glsdd),
            other => Err(format!("unknown formulation `{other}` (expected galerkin, vmss or glsdd)")),
        }
    }
}

/// Treatment of the advective velocity in the Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linearization {
    #[default]
    Newton,
    /// Drops the derivative with respect to the advecting velocity.
    Picard,
}

impl std::str::FromStr for Linearization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "newton" => Ok(Linearization::Newton),
            "picard" => Ok(Linearization::Picard),
            other => Err(format!("unknown linearization `{other}` (expected newton or picard)")),
        }
    }
}

/// Body force `f(x, t)`.
pub type ForcingFn = dyn Fn(&Vec3, f64) -> Vec3 + Send + Sync;

/// Material and model constants shared by assembly and diagnostics.
#[derive(Clone)]
pub struct Physics {
    pub nu: f64,
    pub c_i: f64,
    /// Cap on the momentum time scale when velocity and viscosity both vanish.
    pub tau_max: f64,
    /// When false the convective terms are removed (Stokes flow).
    pub convection: bool,
    pub linearization: Linearization,
    pub forcing: Option<Arc<ForcingFn>>,
}

impl std::fmt::Debug for Physics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Physics")
            .field("nu", &self.nu)
            .field("c_i", &self.c_i)
            .field("tau_max", &self.tau_max)
            .field("convection", &self.convection)
            .field("linearization", &self.linearization)
            .field("forcing", &self.forcing.is_some())
            .finish()
    }
}

impl Physics {
    pub fn new(nu: f64) -> Self {
        Self {
            nu,
            c_i: crate::stabilization::DEFAULT_C_I,
            tau_max: 1e6,
            convection: true,
            linearization: Linearization::Newton,
            forcing: None,
        }
    }

    pub fn force(&self, x: &Vec3, t: f64) -> Vec3 {
        match &self.forcing {
            Some(f) => f(x, t),
            None => [0.0; 3],
        }
    }
}
