//! Model plans and the per-estimator availability rules.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::EstimatorId;
use crate::data::{RoleSpec, VariableKind};
use crate::error::{DecompError, Result};
use crate::glm::Term;

/// Pairwise interactions requested on top of the main-effect model structures.
///
/// Main effects are fixed by the roles: the outcome model uses exposure,
/// intermediate confounders, mediators and baseline covariates; mediator and
/// confounder models use exposure and baseline covariates. An interaction is
/// added to every model whose main effects contain both of its components.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelPlan {
    pub interactions: Vec<(String, String)>,
}

impl ModelPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_interaction(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.interactions.push((a.into(), b.into()));
        self
    }

    /// Exposure-by-mediator interaction for the first mediator.
    pub fn exposure_mediator(spec: &RoleSpec) -> Self {
        match spec.mediators.first() {
            Some(m) => Self::new().with_interaction(spec.exposure.clone(), m.name.clone()),
            None => Self::new(),
        }
    }

    pub fn is_exposure_mediator(&self, spec: &RoleSpec, (a, b): &(String, String)) -> bool {
        let is_med = |n: &str| spec.mediators.iter().any(|m| m.name == n);
        (a == &spec.exposure && is_med(b)) || (b == &spec.exposure && is_med(a))
    }

    /// Every interaction must name declared roles other than the outcome.
    pub fn validate(&self, spec: &RoleSpec) -> Result<()> {
        for (a, b) in &self.interactions {
            for name in [a, b] {
                if name == &spec.outcome {
                    return Err(DecompError::UnsupportedPlan(format!(
                        "interaction {a}:{b} involves the outcome"
                    )));
                }
                if spec.kind_of(name).is_none() {
                    return Err(DecompError::Schema(format!(
                        "interaction {a}:{b} names '{name}', which has no role"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn outcome_terms(&self, spec: &RoleSpec) -> Vec<Term> {
        let mut terms = vec![Term::main(&spec.exposure)];
        terms.extend(spec.intermediate_confounders.iter().map(|v| Term::main(&v.name)));
        terms.extend(spec.mediators.iter().map(|v| Term::main(&v.name)));
        terms.extend(spec.baseline_covariates.iter().map(|v| Term::main(&v.name)));
        self.push_admissible(&mut terms);
        terms
    }

    pub fn mediator_terms(&self, spec: &RoleSpec) -> Vec<Term> {
        let mut terms = vec![Term::main(&spec.exposure)];
        terms.extend(spec.baseline_covariates.iter().map(|v| Term::main(&v.name)));
        self.push_admissible(&mut terms);
        terms
    }

    pub fn confounder_terms(&self, spec: &RoleSpec) -> Vec<Term> {
        self.mediator_terms(spec)
    }

    fn push_admissible(&self, terms: &mut Vec<Term>) {
        let mains: Vec<Term> = terms.clone();
        for (a, b) in &self.interactions {
            if mains.contains(&Term::main(a)) && mains.contains(&Term::main(b)) {
                terms.push(Term::interaction(a, b));
            }
        }
    }
}

/// Why an estimator cannot be applied to a given role/plan configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnavailableReason {
    CategoricalMediator,
    ContinuousMediator,
    CategoricalOutcome,
    MultipleMediators,
    ExposureMediatorInteraction,
    OtherNonlinearity,
}

impl fmt::Display for UnavailableReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnavailableReason::CategoricalMediator => "categorical mediator",
            UnavailableReason::ContinuousMediator => "continuous mediator",
            UnavailableReason::CategoricalOutcome => "categorical outcome",
            UnavailableReason::MultipleMediators => "multiple mediators",
            UnavailableReason::ExposureMediatorInteraction => "exposure-mediator interaction",
            UnavailableReason::OtherNonlinearity => "other nonlinearity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Availability {
    Available,
    Unavailable(Vec<UnavailableReason>),
}

impl Availability {
    pub fn is_available(&self) -> bool {
        matches!(self, Availability::Available)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityReport {
    pub estimators: BTreeMap<EstimatorId, Availability>,
}

impl AvailabilityReport {
    pub fn get(&self, id: EstimatorId) -> &Availability {
        &self.estimators[&id]
    }

    pub fn available(&self) -> Vec<EstimatorId> {
        self.estimators
            .iter()
            .filter(|(_, a)| a.is_available())
            .map(|(&id, _)| id)
            .collect()
    }

    /// `Ok` when `id` is available, otherwise an error listing every reason.
    pub fn require(&self, id: EstimatorId) -> Result<()> {
        match self.get(id) {
            Availability::Available => Ok(()),
            Availability::Unavailable(reasons) => Err(DecompError::Unavailable {
                estimator: id.as_str().to_string(),
                reasons: reasons.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "),
            }),
        }
    }
}

/// Which estimators support this combination of variable kinds, mediator
/// count and interaction structure.
pub fn check_availability(spec: &RoleSpec, plan: &ModelPlan) -> AvailabilityReport {
    use UnavailableReason::*;
    let binary_mediator = spec.mediators.iter().any(|m| m.kind != VariableKind::Continuous);
    let continuous_mediator = spec.mediators.iter().any(|m| m.kind == VariableKind::Continuous);
    let binary_outcome = spec.outcome_kind != VariableKind::Continuous;
    let multiple = spec.mediators.len() > 1;
    let exposure_mediator = plan.interactions.iter().any(|i| plan.is_exposure_mediator(spec, i));
    let other = plan.interactions.iter().any(|i| !plan.is_exposure_mediator(spec, i));

    let mut estimators = BTreeMap::new();
    for id in EstimatorId::ALL {
        let mut reasons = Vec::new();
        let mut push = |cond: bool, r: UnavailableReason| {
            if cond {
                reasons.push(r);
            }
        };
        match id {
            EstimatorId::DiffInCoeffs => {
                push(binary_mediator, CategoricalMediator);
                push(binary_outcome, CategoricalOutcome);
                push(multiple, MultipleMediators);
                push(exposure_mediator, ExposureMediatorInteraction);
                push(other, OtherNonlinearity);
            }
            EstimatorId::ProductOfCoeffs => {
                push(binary_outcome, CategoricalOutcome);
                push(multiple, MultipleMediators);
                push(other, OtherNonlinearity);
            }
            EstimatorId::Rmpw => {
                push(continuous_mediator, ContinuousMediator);
                push(multiple, MultipleMediators);
            }
            EstimatorId::SingleImputation => push(multiple, MultipleMediators),
            EstimatorId::MultiImputation => {}
        }
        let a = if reasons.is_empty() {
            Availability::Available
        } else {
            Availability::Unavailable(reasons)
        };
        estimators.insert(id, a);
    }
    AvailabilityReport { estimators }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Variable;

    fn spec(kind: VariableKind) -> RoleSpec {
        RoleSpec::new("R", "Y")
            .mediator(Variable::new("M", kind))
            .confounder(Variable::continuous("S"))
    }

    #[test]
    fn continuous_mediator_with_interaction() {
        let s = spec(VariableKind::Continuous);
        let rep = check_availability(&s, &ModelPlan::exposure_mediator(&s));
        use UnavailableReason::*;
        assert_eq!(
            rep.get(EstimatorId::DiffInCoeffs),
            &Availability::Unavailable(vec![ExposureMediatorInteraction])
        );
        assert!(rep.get(EstimatorId::ProductOfCoeffs).is_available());
        assert_eq!(rep.get(EstimatorId::Rmpw), &Availability::Unavailable(vec![ContinuousMediator]));
        assert!(rep.get(EstimatorId::SingleImputation).is_available());
        assert!(rep.get(EstimatorId::MultiImputation).is_available());
    }

    #[test]
    fn two_mediators_only_multi_imputation() {
        let s = spec(VariableKind::Binary).mediator(Variable::binary("M2"));
        let rep = check_availability(&s, &ModelPlan::new());
        assert_eq!(rep.available(), vec![EstimatorId::MultiImputation]);
        for id in [EstimatorId::DiffInCoeffs, EstimatorId::ProductOfCoeffs, EstimatorId::Rmpw, EstimatorId::SingleImputation] {
            match rep.get(id) {
                Availability::Unavailable(r) => assert!(r.contains(&UnavailableReason::MultipleMediators)),
                _ => panic!("{id:?} should be unavailable"),
            }
        }
    }

    #[test]
    fn binary_mediator_with_interaction() {
        let s = spec(VariableKind::Binary);
        let rep = check_availability(&s, &ModelPlan::exposure_mediator(&s));
        assert_eq!(
            rep.available(),
            vec![
                EstimatorId::ProductOfCoeffs,
                EstimatorId::Rmpw,
                EstimatorId::SingleImputation,
                EstimatorId::MultiImputation
            ]
        );
        match rep.get(EstimatorId::DiffInCoeffs) {
            Availability::Unavailable(r) => assert!(r.contains(&UnavailableReason::CategoricalMediator)),
            _ => panic!(),
        }
    }

    #[test]
    fn binary_outcome_and_other_nonlinearity() {
        let s = spec(VariableKind::Continuous).outcome_kind(VariableKind::Binary);
        let plan = ModelPlan::new().with_interaction("S", "M");
        let rep = check_availability(&s, &plan);
        assert_eq!(
            rep.get(EstimatorId::ProductOfCoeffs),
            &Availability::Unavailable(vec![
                UnavailableReason::CategoricalOutcome,
                UnavailableReason::OtherNonlinearity
            ])
        );
        let err = rep.require(EstimatorId::ProductOfCoeffs).unwrap_err();
        assert!(err.to_string().contains("categorical outcome"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn interactions_routed_by_main_effects() {
        let s = spec(VariableKind::Continuous).covariate(Variable::continuous("C"));
        let plan = ModelPlan::new().with_interaction("R", "M").with_interaction("R", "C");
        assert!(plan.outcome_terms(&s).contains(&Term::interaction("R", "M")));
        assert!(plan.outcome_terms(&s).contains(&Term::interaction("R", "C")));
        assert!(!plan.mediator_terms(&s).contains(&Term::interaction("R", "M")));
        assert!(plan.mediator_terms(&s).contains(&Term::interaction("R", "C")));
        assert!(ModelPlan::new().with_interaction("R", "Y").validate(&s).is_err());
        assert!(ModelPlan::new().with_interaction("R", "Q").validate(&s).is_err());
    }
}
