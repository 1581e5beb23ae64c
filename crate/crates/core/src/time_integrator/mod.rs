//! Generalized-alpha time stepping with a predictor/multi-corrector nonlinear loop.

mod alpha;
mod stepper;

pub use alpha::AlphaParams;
pub use stepper::{scalar_step, IntegratorOptions, Integrator, State, StepReport};
