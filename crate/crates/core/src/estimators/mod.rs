//! Disparity reduction and disparity remaining estimators.
//!
//! Every estimator returns the initial disparity `tau`, the reduction `delta`
//! that an intervention equalizing the mediator distribution across groups
//! would achieve, and the disparity `zeta` that would remain.

mod availability;
mod imputation;
mod regression;
mod weighting;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use availability::{check_availability, Availability, AvailabilityReport, ModelPlan, UnavailableReason};
pub use imputation::{estimate_multi_imputation, estimate_single_imputation, estimate_single_imputation_marginal};
pub use regression::{estimate_diff_in_coeffs, estimate_product_of_coeffs, initial_disparity};
pub use weighting::estimate_rmpw;

use crate::data::{center_covariates, default_reference, group_rows, Dataset, ReferencePoint, RoleSpec, VariableKind};
use crate::error::{DecompError, Result};
use crate::glm::Term;
use crate::linalg::solve_wls;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    DiffInCoeffs,
    ProductOfCoeffs,
    Rmpw,
    SingleImputation,
    MultiImputation,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 5] = [
        EstimatorId::DiffInCoeffs,
        EstimatorId::ProductOfCoeffs,
        EstimatorId::Rmpw,
        EstimatorId::SingleImputation,
        EstimatorId::MultiImputation,
    ];

    /// Conventional numbering, 1 through 5.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::DiffInCoeffs => "diff_in_coeffs",
            EstimatorId::ProductOfCoeffs => "product_of_coeffs",
            EstimatorId::Rmpw => "rmpw",
            EstimatorId::SingleImputation => "single_imputation",
            EstimatorId::MultiImputation => "multi_imputation",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            EstimatorId::DiffInCoeffs => "Difference-in-coefficients",
            EstimatorId::ProductOfCoeffs => "Product-of-coefficients",
            EstimatorId::Rmpw => "RMPW",
            EstimatorId::SingleImputation => "Single-mediator imputation",
            EstimatorId::MultiImputation => "Multiple-mediator imputation",
        }
    }

    /// Accepts `diff_in_coeffs`, `diff-in-coeffs` or the number `1`, and so on.
    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        EstimatorId::ALL
            .into_iter()
            .find(|id| id.as_str() == norm || id.number().to_string() == norm)
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which disparity-remaining formula the product-of-coefficients estimator reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemainingVariant {
    /// Initial disparity minus the reduction.
    Original,
    /// Built from outcome-model coefficients; unbiased for binary mediators.
    Alternative,
}

impl RemainingVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Some(RemainingVariant::Original),
            "alternative" | "alt" => Some(RemainingVariant::Alternative),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RemainingVariant::Original => "original",
            RemainingVariant::Alternative => "alternative",
        }
    }

    /// Alternative for binary mediators, original otherwise.
    pub fn default_for(kind: VariableKind) -> Self {
        match kind {
            VariableKind::Continuous => RemainingVariant::Original,
            _ => RemainingVariant::Alternative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionEstimate {
    pub estimator: EstimatorId,
    pub tau: f64,
    pub delta: f64,
    pub zeta: f64,
    /// `100 * delta / tau`; absent when `tau` is zero.
    pub percent_reduction: Option<f64>,
    pub remaining_variant: Option<RemainingVariant>,
    /// Covariate values the estimate conditions on; absent for marginal estimates.
    pub reference: Option<ReferencePoint>,
    pub marginal: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DecompositionEstimate {
    pub(crate) fn new(estimator: EstimatorId, tau: f64, delta: f64, zeta: f64, reference: Option<ReferencePoint>) -> Self {
        DecompositionEstimate {
            estimator,
            tau,
            delta,
            zeta,
            percent_reduction: percent_reduction(delta, tau).ok(),
            remaining_variant: None,
            marginal: reference.is_none(),
            reference,
            warnings: Vec::new(),
        }
    }

    pub fn percent_reduction(&self) -> Result<f64> {
        percent_reduction(self.delta, self.tau)
    }
}

/// `100 * delta / tau`.
pub fn percent_reduction(delta: f64, tau: f64) -> Result<f64> {
    if tau == 0.0 {
        return Err(DecompError::UndefinedPercentage);
    }
    Ok(100.0 * delta / tau)
}

/// Where the conditioning covariate values come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    Fixed(ReferencePoint),
    /// Recomputed from each dataset (means, modal levels).
    DataDefault,
}

impl ReferenceSource {
    pub fn resolve(&self, data: &Dataset, spec: &RoleSpec) -> Result<ReferencePoint> {
        match self {
            ReferenceSource::Fixed(r) => Ok(r.clone()),
            ReferenceSource::DataDefault => default_reference(data, spec),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Product-of-coefficients only; `None` picks the default for the mediator kind.
    pub remaining: Option<RemainingVariant>,
    /// Single-mediator imputation only: average over the covariate distribution.
    pub marginal: bool,
}

/// Runs one estimator. Availability is not checked here; see [`check_availability`].
pub fn estimate(
    data: &Dataset,
    spec: &RoleSpec,
    reference: &ReferenceSource,
    id: EstimatorId,
    plan: &ModelPlan,
    options: &EstimateOptions,
) -> Result<DecompositionEstimate> {
    if id == EstimatorId::SingleImputation && options.marginal {
        return estimate_single_imputation_marginal(data, spec, plan);
    }
    let reference = reference.resolve(data, spec)?;
    match id {
        EstimatorId::DiffInCoeffs => estimate_diff_in_coeffs(data, spec, &reference),
        EstimatorId::ProductOfCoeffs => {
            let variant = match options.remaining {
                Some(v) => v,
                None => RemainingVariant::default_for(single_mediator(spec)?.kind),
            };
            estimate_product_of_coeffs(data, spec, &reference, variant)
        }
        EstimatorId::Rmpw => estimate_rmpw(data, spec, &reference, plan),
        EstimatorId::SingleImputation => estimate_single_imputation(data, spec, &reference, plan),
        EstimatorId::MultiImputation => estimate_multi_imputation(data, spec, &reference, plan),
    }
}

pub(crate) fn single_mediator(spec: &RoleSpec) -> Result<&crate::data::Variable> {
    match spec.mediators.as_slice() {
        [m] => Ok(m),
        _ => Err(DecompError::UnsupportedPlan(format!(
            "this estimator handles exactly one mediator, {} given",
            spec.mediators.len()
        ))),
    }
}

/// Centered data plus the design columns standing for the baseline covariates.
pub(crate) struct Prepared {
    pub data: Dataset,
    /// Covariate design columns that are not identically zero.
    pub covs: Vec<String>,
    expansion: BTreeMap<String, Vec<String>>,
    pub g0: Vec<usize>,
    pub g1: Vec<usize>,
}

impl Prepared {
    pub fn new(data: &Dataset, spec: &RoleSpec, reference: &ReferencePoint) -> Result<Self> {
        spec.validate(data)?;
        let centered = center_covariates(data, spec, reference)?;
        let mut expansion = centered.expansion;
        // A column that is zero everywhere carries no information at the reference point.
        for cols in expansion.values_mut() {
            cols.retain(|c| centered.data.column(c).is_ok_and(|v| v.iter().any(|&x| x != 0.0)));
        }
        let covs = spec
            .baseline_covariates
            .iter()
            .flat_map(|c| expansion[&c.name].iter().cloned())
            .collect();
        let (g0, g1) = group_rows(&centered.data, spec)?;
        Ok(Prepared {
            data: centered.data,
            covs,
            expansion,
            g0,
            g1,
        })
    }

    fn expand_name(&self, name: &str) -> Vec<String> {
        self.expansion.get(name).cloned().unwrap_or_else(|| vec![name.to_string()])
    }

    /// Maps role-level terms onto design columns (dummy expansion, pruning).
    pub fn expand_terms(&self, terms: &[Term]) -> Vec<Term> {
        let mut out = Vec::new();
        for t in terms {
            match t {
                Term::Main(a) => out.extend(self.expand_name(a).into_iter().map(Term::Main)),
                Term::Interaction(a, b) => {
                    for x in self.expand_name(a) {
                        for y in self.expand_name(b) {
                            out.push(Term::Interaction(x.clone(), y));
                        }
                    }
                }
            }
        }
        out
    }

    /// Estimated mean of `values` (aligned with `rows`) at the reference point:
    /// the intercept of a regression on the centered covariates within `rows`.
    pub fn mean_at_reference(&self, rows: &[usize], values: &[f64], weights: Option<&[f64]>) -> Result<f64> {
        let mut names = vec![crate::glm::INTERCEPT.to_string()];
        let mut cols: Vec<Vec<f64>> = vec![vec![1.0; rows.len()]];
        for c in &self.covs {
            let full = self.data.column(c)?;
            let col: Vec<f64> = rows.iter().map(|&r| full[r]).collect();
            if col.iter().any(|&x| x != 0.0) {
                names.push(c.clone());
                cols.push(col);
            }
        }
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let beta = solve_wls(&refs, values, weights).map_err(|e| DecompError::SingularDesign {
            term: names[e.0].clone(),
        })?;
        Ok(beta[0])
    }

    pub fn column_rows(&self, name: &str, rows: &[usize]) -> Result<Vec<f64>> {
        let col = self.data.column(name)?;
        Ok(rows.iter().map(|&r| col[r]).collect())
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
