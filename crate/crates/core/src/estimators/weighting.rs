//! Ratio-of-mediator-probability weighting.

use super::{single_mediator, DecompositionEstimate, EstimatorId, ModelPlan, Prepared};
use crate::data::{Dataset, ReferencePoint, RoleSpec, VariableKind};
use crate::error::{DecompError, Result};
use crate::glm::{clamp_prob, expit, fit_logistic, ModelFormula, Term};

/// Raw denominator probabilities at or below this trigger an extreme-weight warning.
const EXTREME_DENOMINATOR: f64 = 1e-12;

fn mediator_terms(prep: &Prepared, spec: &RoleSpec, plan: &ModelPlan, mains: &[&str]) -> Vec<Term> {
    let mut terms: Vec<Term> = mains.iter().map(|&m| Term::main(m)).collect();
    terms.extend(spec.baseline_covariates.iter().map(|v| Term::main(&v.name)));
    let main_names: Vec<Term> = terms.clone();
    for (a, b) in &plan.interactions {
        if main_names.contains(&Term::main(a)) && main_names.contains(&Term::main(b)) {
            terms.push(Term::interaction(a, b));
        }
    }
    prep.expand_terms(&terms)
}

/// Reweights comparison-group outcomes by
/// `W = P(M | R=0, C) / P(M | R=1, S, C)` so that their mediator distribution
/// matches the reference group's, then contrasts weighted and unweighted
/// covariate-adjusted means.
pub fn estimate_rmpw(data: &Dataset, spec: &RoleSpec, reference: &ReferencePoint, plan: &ModelPlan) -> Result<DecompositionEstimate> {
    plan.validate(spec)?;
    let prep = Prepared::new(data, spec, reference)?;
    let m = single_mediator(spec)?;
    if m.kind != VariableKind::Binary {
        return Err(DecompError::UnsupportedPlan(
            "RMPW requires a binary mediator".into(),
        ));
    }
    let d0 = prep.data.select_rows(&prep.g0);
    let d1 = prep.data.select_rows(&prep.g1);

    let terms0 = mediator_terms(&prep, spec, plan, &[]);
    let conf: Vec<&str> = spec.intermediate_confounders.iter().map(|v| v.name.as_str()).collect();
    let terms1 = mediator_terms(&prep, spec, plan, &conf);
    let p0_model = fit_logistic(&d0, &ModelFormula::new(&m.name, terms0)?)?;
    let p1_model = fit_logistic(&d1, &ModelFormula::new(&m.name, terms1)?)?;

    let eta0 = p0_model.linear_predictor(&d1, &[])?;
    let eta1 = p1_model.linear_predictor(&d1, &[])?;
    let med = d1.column(&m.name)?;
    let mut extreme = 0usize;
    let weights: Vec<f64> = med
        .iter()
        .zip(eta0.iter().zip(&eta1))
        .map(|(&mi, (&e0, &e1))| {
            // Probability of the observed mediator value: expit(eta) for 1, expit(-eta) for 0.
            let sign = if mi == 1.0 { 1.0 } else { -1.0 };
            let raw_den = expit(sign * e1);
            if raw_den <= EXTREME_DENOMINATOR {
                extreme += 1;
            }
            clamp_prob(expit(sign * e0)) / clamp_prob(raw_den)
        })
        .collect();

    let y1 = d1.column(&spec.outcome)?;
    let y0 = d0.column(&spec.outcome)?;
    let e1 = prep.mean_at_reference(&prep.g1, y1, None)?;
    let ew = prep.mean_at_reference(&prep.g1, y1, Some(&weights))?;
    let e0 = prep.mean_at_reference(&prep.g0, y0, None)?;

    let mut est = DecompositionEstimate::new(EstimatorId::Rmpw, e1 - e0, e1 - ew, ew - e0, Some(reference.clone()));
    if extreme > 0 {
        est.warnings.push(format!(
            "{extreme} comparison-group row(s) have a mediator probability at or below {EXTREME_DENOMINATOR:e}; weights are extreme"
        ));
    }
    Ok(est)
}
