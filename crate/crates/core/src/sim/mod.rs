//! Monte Carlo study of the estimators on synthetic data.
//!
//! Data follow a three-equation structural model with a binary exposure `R`,
//! a dichotomized baseline covariate `C`, an intermediate confounder `S`, a
//! mediator `M` (continuous or binary) and a continuous outcome `Y`:
//!
//! ```text
//! S = a0 + a1 R + a2 C + e_s
//! M = b0 + b1 R + b2 C + b3 S + e_m          (or logit P(M=1) = b0 + ... + b3 S)
//! Y = c0 + c1 R + c2 S + c3 M + c4 R M + c5 C + e_y
//! ```

mod calibrate;
mod dgp;
mod study;
mod truth;

use serde::{Deserialize, Serialize};

pub use calibrate::calibrate_scenario;
pub use dgp::{generate_scenario_data, truncated_normal_mean, TruncatedNormal};
pub use study::{
    aggregate, default_methods, run_simulation, run_simulation_with, scenario_role_spec, write_csv_rows, Method,
    MetricsReport, MetricsRow, ReplicateOutcome, SkippedMethod, Target, METRICS_COLUMNS,
};
pub use truth::{compute_ratio, mediator_mean, population_effects, true_effects, TrueEffects};

use crate::data::VariableKind;
use crate::error::{DecompError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediatorKind {
    Continuous,
    Binary,
}

impl MediatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MediatorKind::Continuous => "continuous",
            MediatorKind::Binary => "binary",
        }
    }

    pub fn variable_kind(self) -> VariableKind {
        match self {
            MediatorKind::Continuous => VariableKind::Continuous,
            MediatorKind::Binary => VariableKind::Binary,
        }
    }
}

/// Structural coefficients of the three equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl Coefficients {
    /// Continuous-mediator base: the mediator-outcome coefficient is set so
    /// the true reduction is -0.263 with the exposure-mediator interaction 0.52.
    pub fn continuous_default() -> Self {
        Coefficients {
            a0: 1.0,
            a1: -0.30,
            a2: 0.05,
            b0: 1.2,
            b1: 0.477,
            b2: 0.03,
            b3: -0.15,
            c0: 8.0,
            c1: -1.048,
            c2: 0.40,
            c3: -1.0238,
            c4: 0.52,
            c5: -0.02,
        }
    }

    /// Binary-mediator base: a negative mediator intercept keeps the reference
    /// group's mediator probability near 0.25, and a reduction of about -0.10
    /// keeps every ratio in the grid attainable with probabilities below one.
    pub fn binary_default() -> Self {
        Coefficients {
            b0: -1.0,
            b1: 1.0,
            c1: -0.24,
            c3: -0.9477,
            ..Self::continuous_default()
        }
    }

    pub fn default_for(kind: MediatorKind) -> Self {
        match kind {
            MediatorKind::Continuous => Self::continuous_default(),
            MediatorKind::Binary => Self::binary_default(),
        }
    }

    fn all(&self) -> [f64; 13] {
        [
            self.a0, self.a1, self.a2, self.b0, self.b1, self.b2, self.b3, self.c0, self.c1, self.c2, self.c3, self.c4,
            self.c5,
        ]
    }
}

fn default_reference_c() -> f64 {
    1.0
}

/// One simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub mediator_kind: MediatorKind,
    pub n: usize,
    pub target_ratio: f64,
    pub coefficients: Coefficients,
    pub seed: u64,
    /// Covariate value at which the true effects and estimates are evaluated.
    #[serde(default = "default_reference_c")]
    pub reference_c: f64,
}

impl ScenarioConfig {
    pub fn new(mediator_kind: MediatorKind, n: usize, target_ratio: f64, seed: u64) -> Self {
        ScenarioConfig {
            mediator_kind,
            n,
            target_ratio,
            coefficients: Coefficients::default_for(mediator_kind),
            seed,
            reference_c: default_reference_c(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 20 {
            return Err(DecompError::Validation("scenario sample size must be at least 20".into()));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio.is_finite()) {
            return Err(DecompError::Validation("target ratio must be positive".into()));
        }
        if self.coefficients.all().iter().any(|c| !c.is_finite()) || !self.reference_c.is_finite() {
            return Err(DecompError::Validation("scenario coefficients must be finite".into()));
        }
        Ok(())
    }
}
