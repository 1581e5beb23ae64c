//! Periodic tensor-product B-spline spaces and the mixed velocity/pressure spaces built from them.

mod cache;
mod knots;
mod projection;
mod space;

pub use cache::{BasisCache, MixedBasisCache};
pub use knots::{build_periodic_knots, KnotVector};
pub use projection::{project_initial_condition, project_scalar, MassInverse, ProjectedField};
pub use space::{
    build_mixed_space, build_mixed_space_variant, BasisEval, MixedDimensions, MixedSplineSpace,
    ScalarSplineSpace, SpaceVariant,
};
