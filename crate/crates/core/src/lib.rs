//! Causal decomposition of group disparities.
//!
//! Given a binary exposure `R` (1 = comparison group, 0 = reference group), an
//! outcome `Y`, one or more mediators `M`, intermediate confounders `S` and
//! baseline covariates `C`, the estimators here split the covariate-adjusted
//! disparity `tau` into the reduction `delta` that equalizing the mediator
//! distribution across groups would achieve and the remaining disparity `zeta`.

pub mod bootstrap;
pub mod data;
pub mod error;
pub mod estimators;
pub mod glm;
mod linalg;
pub mod quadrature;
pub mod sim;

pub use bootstrap::{bootstrap_ci, BootstrapConfig, Interval, IntervalEstimate};
pub use data::{Dataset, ReferencePoint, RoleSpec, Variable, VariableKind};
pub use error::{DecompError, Result};
pub use estimators::{
    check_availability, estimate, DecompositionEstimate, EstimateOptions, EstimatorId, ModelPlan, ReferenceSource,
    RemainingVariant,
};
