//! Regression-coefficient estimators: difference-in-coefficients and
//! product-of-coefficients.

use super::{single_mediator, DecompositionEstimate, EstimatorId, Prepared, RemainingVariant};
use crate::data::{Dataset, ReferencePoint, RoleSpec, VariableKind};
use crate::error::{DecompError, Result};
use crate::glm::{expit, fit_for_kind, FittedModel, ModelFormula, Term};

/// Ratio denominators smaller than this are treated as zero.
const RATIO_EPS: f64 = 1e-10;

fn fit(prep: &Prepared, response: &str, mains: &[&str], extra: &[Term], binary: bool) -> Result<FittedModel> {
    let mut terms: Vec<Term> = mains.iter().map(|&m| Term::main(m)).collect();
    terms.extend(prep.covs.iter().map(Term::main));
    terms.extend_from_slice(extra);
    fit_for_kind(&prep.data, &ModelFormula::new(response, terms)?, binary)
}

fn coef(model: &FittedModel, label: &str) -> f64 {
    model.coefficient(label).expect("term present in fitted model")
}

/// Exposure coefficient on the risk-difference scale at the reference point.
fn exposure_effect(model: &FittedModel, exposure: &str) -> (f64, f64) {
    let b0 = model.intercept();
    let b1 = coef(model, exposure);
    match model.family {
        crate::glm::Family::Linear => (b0, b1),
        crate::glm::Family::Logistic => (expit(b0), expit(b0 + b1) - expit(b0)),
    }
}

fn initial_disparity_prepared(prep: &Prepared, spec: &RoleSpec) -> Result<f64> {
    let phi = fit(prep, &spec.outcome, &[&spec.exposure], &[], false)?;
    Ok(coef(&phi, &spec.exposure))
}

/// Exposure coefficient of the linear fit `Y ~ R + C` with covariates centered
/// at `reference`.
pub fn initial_disparity(data: &Dataset, spec: &RoleSpec, reference: &ReferencePoint) -> Result<f64> {
    let prep = Prepared::new(data, spec, reference)?;
    initial_disparity_prepared(&prep, spec)
}

/// Difference-in-coefficients from three nested linear outcome models:
/// `Y ~ R + C` (phi), `Y ~ R + S + C` (gamma) and `Y ~ R + S + M + C` (theta).
/// The reduction is `gamma1 - theta1` plus the share of the confounder
/// adjustment `phi1 - gamma1` attributable to the mediator.
pub fn estimate_diff_in_coeffs(data: &Dataset, spec: &RoleSpec, reference: &ReferencePoint) -> Result<DecompositionEstimate> {
    let prep = Prepared::new(data, spec, reference)?;
    let m = single_mediator(spec)?;
    let r = spec.exposure.as_str();
    let y = spec.outcome.as_str();
    let phi1 = initial_disparity_prepared(&prep, spec)?;
    let (delta, zeta) = match spec.intermediate_confounders.as_slice() {
        [] => {
            let theta = fit(&prep, y, &[r, &m.name], &[], false)?;
            let theta1 = coef(&theta, r);
            (phi1 - theta1, theta1)
        }
        [s] => {
            let gamma = fit(&prep, y, &[r, &s.name], &[], false)?;
            let theta = fit(&prep, y, &[r, &s.name, &m.name], &[], false)?;
            let (gamma1, gamma2) = (coef(&gamma, r), coef(&gamma, &s.name));
            let (theta1, theta2) = (coef(&theta, r), coef(&theta, &s.name));
            if gamma2.abs() < RATIO_EPS {
                return Err(DecompError::DegenerateRatio(
                    "confounder has no outcome association; correction term undefined".into(),
                ));
            }
            let share = theta2 / gamma2;
            let delta = gamma1 - theta1 + (1.0 - share) * (phi1 - gamma1);
            let zeta = theta1 + share * (phi1 - gamma1);
            (delta, zeta)
        }
        _ => {
            return Err(DecompError::UnsupportedPlan(
                "difference-in-coefficients supports at most one intermediate confounder".into(),
            ))
        }
    };
    Ok(DecompositionEstimate::new(
        EstimatorId::DiffInCoeffs,
        phi1,
        delta,
        zeta,
        Some(reference.clone()),
    ))
}

/// Product-of-coefficients: `delta = alpha1 * (beta3 + beta4)` from the mediator
/// model `M ~ R + C` and the outcome model `Y ~ R + S + M + R:M + C`. Binary
/// mediators enter on the probability scale at the reference point.
pub fn estimate_product_of_coeffs(
    data: &Dataset,
    spec: &RoleSpec,
    reference: &ReferencePoint,
    variant: RemainingVariant,
) -> Result<DecompositionEstimate> {
    if spec.outcome_kind != VariableKind::Continuous {
        return Err(DecompError::Unavailable {
            estimator: EstimatorId::ProductOfCoeffs.as_str().into(),
            reasons: "categorical outcome".into(),
        });
    }
    let prep = Prepared::new(data, spec, reference)?;
    let m = single_mediator(spec)?;
    let r = spec.exposure.as_str();

    let med = fit(&prep, &m.name, &[r], &[], m.kind == VariableKind::Binary)?;
    let (alpha0, alpha1) = exposure_effect(&med, r);

    let mut mains = vec![r];
    mains.extend(spec.intermediate_confounders.iter().map(|s| s.name.as_str()));
    mains.push(&m.name);
    let rm = Term::interaction(r, &m.name);
    let out = fit(&prep, &spec.outcome, &mains, std::slice::from_ref(&rm), false)?;
    let beta1 = coef(&out, r);
    let beta3 = coef(&out, &m.name);
    let beta4 = coef(&out, &rm.label());
    let delta = alpha1 * (beta3 + beta4);

    let (tau, zeta) = match variant {
        RemainingVariant::Original => {
            let phi1 = initial_disparity_prepared(&prep, spec)?;
            (phi1, phi1 - delta)
        }
        RemainingVariant::Alternative => {
            let mut zeta = beta1 + beta4 * alpha0;
            for s in &spec.intermediate_confounders {
                let model = fit(&prep, &s.name, &[r], &[], s.kind == VariableKind::Binary)?;
                let (_, kappa1) = exposure_effect(&model, r);
                zeta += coef(&out, &s.name) * kappa1;
            }
            (delta + zeta, zeta)
        }
    };
    let mut est = DecompositionEstimate::new(EstimatorId::ProductOfCoeffs, tau, delta, zeta, Some(reference.clone()));
    est.remaining_variant = Some(variant);
    Ok(est)
}
