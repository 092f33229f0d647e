//! Imputation estimators: counterfactual mediator (single-mediator) or
//! counterfactual confounder (multiple-mediator) values are predicted and
//! pushed through a fitted outcome model.

use super::{mean, single_mediator, DecompositionEstimate, EstimatorId, ModelPlan, Prepared};
use crate::data::{default_reference, Dataset, ReferencePoint, RoleSpec, Variable, VariableKind};
use crate::error::{DecompError, Result};
use crate::glm::{clamp_prob, expit, fit_for_kind, Family, FittedModel, ModelFormula, Override, Term};
use crate::quadrature::standard_normal_nodes;

/// Largest number of continuous confounders integrated jointly on a grid.
const MAX_GRID_CONFOUNDERS: usize = 2;

fn reject_self_interactions(plan: &ModelPlan, imputed: &[&Variable]) -> Result<()> {
    for (a, b) in &plan.interactions {
        if a == b && imputed.iter().any(|v| &v.name == a) {
            return Err(DecompError::UnsupportedPlan(format!(
                "outcome model term {a}:{b} is nonlinear in an imputed variable"
            )));
        }
    }
    Ok(())
}

fn fit_model(prep: &Prepared, response: &str, terms: &[Term], binary: bool) -> Result<FittedModel> {
    fit_for_kind(&prep.data, &ModelFormula::new(response, prep.expand_terms(terms))?, binary)
}

fn fit_outcome(prep: &Prepared, spec: &RoleSpec, plan: &ModelPlan) -> Result<FittedModel> {
    fit_model(prep, &spec.outcome, &plan.outcome_terms(spec), spec.outcome_kind == VariableKind::Binary)
}

/// Counterfactual outcome predictions for the comparison-group rows, with the
/// mediator drawn from its reference-group distribution given each row's covariates.
fn single_imputation_values(prep: &Prepared, spec: &RoleSpec, plan: &ModelPlan) -> Result<Vec<f64>> {
    plan.validate(spec)?;
    let m = single_mediator(spec)?;
    reject_self_interactions(plan, &[m])?;
    let r = spec.exposure.as_str();
    let med = fit_model(prep, &m.name, &plan.mediator_terms(spec), m.kind == VariableKind::Binary)?;
    let out = fit_outcome(prep, spec, plan)?;

    let d1 = prep.data.select_rows(&prep.g1);
    let m_tilde = med.mean_response(&d1, &[(r, Override::Const(0.0))])?;
    match (m.kind, out.family) {
        (VariableKind::Continuous, Family::Linear) => {
            out.mean_response(&d1, &[(r, Override::Const(1.0)), (&m.name, Override::Column(&m_tilde))])
        }
        (VariableKind::Continuous, Family::Logistic) => {
            // The linear predictor is affine in the mediator; integrate over its normal law.
            let eta0 = out.linear_predictor(&d1, &[(r, Override::Const(1.0)), (&m.name, Override::Const(0.0))])?;
            let eta1 = out.linear_predictor(&d1, &[(r, Override::Const(1.0)), (&m.name, Override::Const(1.0))])?;
            let sd = med.residual_variance.sqrt();
            let nodes = standard_normal_nodes();
            Ok((0..d1.n_rows())
                .map(|i| {
                    let slope = eta1[i] - eta0[i];
                    nodes
                        .iter()
                        .map(|&(z, w)| w * clamp_prob(expit(eta0[i] + slope * (m_tilde[i] + sd * z))))
                        .sum()
                })
                .collect())
        }
        _ => {
            let mu1 = out.mean_response(&d1, &[(r, Override::Const(1.0)), (&m.name, Override::Const(1.0))])?;
            let mu0 = out.mean_response(&d1, &[(r, Override::Const(1.0)), (&m.name, Override::Const(0.0))])?;
            Ok(mu1
                .iter()
                .zip(&mu0)
                .zip(&m_tilde)
                .map(|((a, b), p)| a * p + b * (1.0 - p))
                .collect())
        }
    }
}

/// Single-mediator imputation, conditional on the covariates at `reference`.
pub fn estimate_single_imputation(
    data: &Dataset,
    spec: &RoleSpec,
    reference: &ReferencePoint,
    plan: &ModelPlan,
) -> Result<DecompositionEstimate> {
    let prep = Prepared::new(data, spec, reference)?;
    let v = single_imputation_values(&prep, spec, plan)?;
    let y1 = prep.column_rows(&spec.outcome, &prep.g1)?;
    let y0 = prep.column_rows(&spec.outcome, &prep.g0)?;
    let eg = prep.mean_at_reference(&prep.g1, &v, None)?;
    let e1 = prep.mean_at_reference(&prep.g1, &y1, None)?;
    let e0 = prep.mean_at_reference(&prep.g0, &y0, None)?;
    Ok(DecompositionEstimate::new(
        EstimatorId::SingleImputation,
        e1 - e0,
        e1 - eg,
        eg - e0,
        Some(reference.clone()),
    ))
}

/// Single-mediator imputation averaged over the comparison group's covariate
/// distribution instead of conditioning on a reference point.
pub fn estimate_single_imputation_marginal(data: &Dataset, spec: &RoleSpec, plan: &ModelPlan) -> Result<DecompositionEstimate> {
    // Centering does not change fitted values; it only lets constant columns drop out.
    let reference = default_reference(data, spec)?;
    let prep = Prepared::new(data, spec, &reference)?;
    let v = single_imputation_values(&prep, spec, plan)?;
    let e1 = mean(&prep.column_rows(&spec.outcome, &prep.g1)?);
    let e0 = mean(&prep.column_rows(&spec.outcome, &prep.g0)?);
    let eg = mean(&v);
    Ok(DecompositionEstimate::new(EstimatorId::SingleImputation, e1 - e0, e1 - eg, eg - e0, None))
}

/// One confounder's counterfactual distribution per reference-group row, as
/// support points with per-row values and probabilities.
struct Support {
    values: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

/// Multiple-mediator imputation: each intermediate confounder is predicted for
/// reference-group rows as if they belonged to the comparison group, while the
/// rows keep their observed mediators.
pub fn estimate_multi_imputation(
    data: &Dataset,
    spec: &RoleSpec,
    reference: &ReferencePoint,
    plan: &ModelPlan,
) -> Result<DecompositionEstimate> {
    plan.validate(spec)?;
    let prep = Prepared::new(data, spec, reference)?;
    let confs: Vec<&Variable> = spec.intermediate_confounders.iter().collect();
    reject_self_interactions(plan, &confs)?;
    let r = spec.exposure.as_str();
    let out = fit_outcome(&prep, spec, plan)?;
    let d0 = prep.data.select_rows(&prep.g0);
    let force = [(r, Override::Const(1.0))];

    let mut predicted = Vec::with_capacity(confs.len());
    let mut spread = Vec::with_capacity(confs.len());
    for s in &confs {
        let model = fit_model(&prep, &s.name, &plan.confounder_terms(spec), s.kind == VariableKind::Binary)?;
        predicted.push(model.mean_response(&d0, &force)?);
        spread.push(model.residual_variance.sqrt());
    }

    let v = if out.family == Family::Linear {
        // Exact for outcome models linear in each confounder, given independent confounder models.
        let mut ov: Vec<(&str, Override<'_>)> = force.to_vec();
        ov.extend(confs.iter().zip(&predicted).map(|(s, p)| (s.name.as_str(), Override::Column(p))));
        out.mean_response(&d0, &ov)?
    } else {
        let n_grid = confs.iter().filter(|s| s.kind == VariableKind::Continuous).count();
        if n_grid > MAX_GRID_CONFOUNDERS {
            return Err(DecompError::UnsupportedPlan(format!(
                "a binary outcome supports at most {MAX_GRID_CONFOUNDERS} continuous intermediate confounders"
            )));
        }
        let n = d0.n_rows();
        let nodes = standard_normal_nodes();
        let supports: Vec<Support> = confs
            .iter()
            .zip(&predicted)
            .zip(&spread)
            .map(|((s, p), &sd)| match s.kind {
                VariableKind::Binary => Support {
                    values: vec![vec![1.0; n], vec![0.0; n]],
                    weights: vec![p.clone(), p.iter().map(|q| 1.0 - q).collect()],
                },
                _ => Support {
                    values: nodes.iter().map(|&(z, _)| p.iter().map(|m| m + sd * z).collect()).collect(),
                    weights: nodes.iter().map(|&(_, w)| vec![w; n]).collect(),
                },
            })
            .collect();
        expectation_over_supports(&out, &d0, &force, &confs, &supports)?
    };

    let y1 = prep.column_rows(&spec.outcome, &prep.g1)?;
    let y0 = prep.column_rows(&spec.outcome, &prep.g0)?;
    let eg = prep.mean_at_reference(&prep.g0, &v, None)?;
    let e1 = prep.mean_at_reference(&prep.g1, &y1, None)?;
    let e0 = prep.mean_at_reference(&prep.g0, &y0, None)?;
    Ok(DecompositionEstimate::new(
        EstimatorId::MultiImputation,
        e1 - e0,
        e1 - eg,
        eg - e0,
        Some(reference.clone()),
    ))
}

/// Sums the outcome model over the product of the confounder supports.
fn expectation_over_supports(
    out: &FittedModel,
    data: &Dataset,
    force: &[(&str, Override<'_>)],
    confs: &[&Variable],
    supports: &[Support],
) -> Result<Vec<f64>> {
    let n = data.n_rows();
    let mut total = vec![0.0; n];
    let mut idx = vec![0usize; supports.len()];
    let mut weight = vec![0.0; n];
    loop {
        let mut ov: Vec<(&str, Override<'_>)> = force.to_vec();
        weight.iter_mut().for_each(|w| *w = 1.0);
        for ((s, sup), &k) in confs.iter().zip(supports).zip(&idx) {
            ov.push((s.name.as_str(), Override::Column(&sup.values[k])));
            for (w, x) in weight.iter_mut().zip(&sup.weights[k]) {
                *w *= x;
            }
        }
        let mu = out.mean_response(data, &ov)?;
        for ((t, m), w) in total.iter_mut().zip(&mu).zip(&weight) {
            *t += m * w;
        }
        // Advance the mixed-radix counter.
        let mut j = 0;
        loop {
            if j == idx.len() {
                return Ok(total);
            }
            idx[j] += 1;
            if idx[j] < supports[j].values.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}
