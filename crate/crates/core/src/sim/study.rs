//! Replicate loop and performance metrics.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::generate_scenario_data;
use super::truth::{true_effects, TrueEffects};
use super::{MediatorKind, ScenarioConfig};
use crate::bootstrap::{mix_seed, replicate_draws, summarize_draws, BootstrapConfig, Interval, ReplicateFn};
use crate::data::{Dataset, ReferencePoint, RoleSpec, Variable};
use crate::error::{DecompError, Result};
use crate::estimators::{
    check_availability, estimate, DecompositionEstimate, EstimateOptions, EstimatorId, ModelPlan, ReferenceSource,
    RemainingVariant,
};

/// The trailing `mediator` column keeps continuous and binary scenarios apart in one file.
pub const METRICS_COLUMNS: [&str; 10] = [
    "estimator", "target", "n", "ratio", "bias", "rmse", "coverage", "M", "B", "mediator",
];

/// One estimator configuration evaluated in a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub label: String,
    pub id: EstimatorId,
    pub plan: ModelPlan,
    pub options: EstimateOptions,
    /// Run even where the availability rules rule the estimator out, to show
    /// how it behaves under misspecification.
    #[serde(default)]
    pub ignore_availability: bool,
}

impl Method {
    pub fn new(id: EstimatorId, plan: ModelPlan) -> Self {
        Method {
            label: id.as_str().to_string(),
            id,
            plan,
            options: EstimateOptions::default(),
            ignore_availability: false,
        }
    }

    pub fn with_remaining(mut self, variant: RemainingVariant) -> Self {
        self.options.remaining = Some(variant);
        self.label = format!("{}/{}", self.id.as_str(), variant.as_str());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Delta,
    Zeta,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Delta => "delta",
            Target::Zeta => "zeta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub estimator: String,
    pub target: Target,
    pub n: usize,
    pub ratio: f64,
    /// Mean of `truth - estimate`.
    pub bias: f64,
    pub rmse: f64,
    pub coverage: f64,
    /// Replicates with a point estimate.
    #[serde(rename = "M")]
    pub replicates: usize,
    #[serde(rename = "B")]
    pub bootstrap: usize,
    pub mediator: MediatorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedMethod {
    pub estimator: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: ScenarioConfig,
    pub truth: TrueEffects,
    pub rows: Vec<MetricsRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedMethod>,
    /// Replicates, per method, whose point estimate failed and were left out.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_points: Vec<(String, usize)>,
}

impl MetricsReport {
    pub fn row(&self, estimator: &str, target: Target) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.estimator == estimator && r.target == target)
    }

    /// Writes the rows as CSV, preceded by `# `-prefixed comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String], header: bool) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        if header {
            writeln!(w, "{}", METRICS_COLUMNS.join(","))?;
        }
        write_csv_rows(&mut w, &self.rows)
    }
}

pub fn write_csv_rows<W: Write>(w: &mut W, rows: &[MetricsRow]) -> Result<()> {
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.estimator,
            r.target.as_str(),
            r.n,
            r.ratio,
            r.bias,
            r.rmse,
            r.coverage,
            r.replicates,
            r.bootstrap,
            r.mediator.as_str()
        )?;
    }
    Ok(())
}

/// Exposure `R`, outcome `Y`, mediator `M`, intermediate confounder `S` and baseline covariate `C`.
pub fn scenario_role_spec(kind: MediatorKind) -> RoleSpec {
    RoleSpec::new("R", "Y")
        .mediator(Variable::new("M", kind.variable_kind()))
        .confounder(Variable::continuous("S"))
        .covariate(Variable::continuous("C"))
}

/// The estimators compared for each mediator kind. Difference-in-coefficients
/// and RMPW use their plain models; the imputation estimators include the
/// exposure-mediator interaction present in the data-generating model.
pub fn default_methods(kind: MediatorKind) -> Vec<Method> {
    let spec = scenario_role_spec(kind);
    let rm = ModelPlan::exposure_mediator(&spec);
    let mut methods = vec![Method {
        ignore_availability: true,
        ..Method::new(EstimatorId::DiffInCoeffs, ModelPlan::new())
    }];
    methods.push(Method::new(EstimatorId::ProductOfCoeffs, rm.clone()).with_remaining(RemainingVariant::Original));
    if kind == MediatorKind::Binary {
        methods.push(Method::new(EstimatorId::ProductOfCoeffs, rm.clone()).with_remaining(RemainingVariant::Alternative));
        methods.push(Method::new(EstimatorId::Rmpw, ModelPlan::new()));
    }
    methods.push(Method::new(EstimatorId::SingleImputation, rm.clone()));
    methods.push(Method::new(EstimatorId::MultiImputation, rm));
    methods
}

/// Per-replicate result for one method: `(tau, delta, zeta)` and the matching intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub point: Option<[f64; 3]>,
    pub intervals: Option<[Interval; 3]>,
}

/// Bias, RMSE and coverage of delta and zeta for one method.
pub fn aggregate(
    label: &str,
    scenario: &ScenarioConfig,
    truth: &TrueEffects,
    outcomes: &[ReplicateOutcome],
    bootstrap: usize,
) -> [MetricsRow; 2] {
    let targets = [(Target::Delta, 1, truth.delta_true), (Target::Zeta, 2, truth.zeta_true)];
    targets.map(|(target, j, t)| {
        let (mut sum, mut sq, mut hits, mut used) = (0.0, 0.0, 0usize, 0usize);
        for o in outcomes {
            let Some(p) = o.point else { continue };
            let err = t - p[j];
            sum += err;
            sq += err * err;
            used += 1;
            if o.intervals.is_some_and(|iv| iv[j].contains(t)) {
                hits += 1;
            }
        }
        let denom = used.max(1) as f64;
        MetricsRow {
            estimator: label.to_string(),
            target,
            n: scenario.n,
            ratio: scenario.target_ratio,
            bias: if used == 0 { f64::NAN } else { sum / denom },
            rmse: if used == 0 { f64::NAN } else { (sq / denom).sqrt() },
            coverage: if used == 0 { f64::NAN } else { hits as f64 / denom },
            replicates: used,
            bootstrap,
            mediator: scenario.mediator_kind,
        }
    })
}

/// Runs `replicates` simulated datasets through each method and scores them
/// against the exact truth at `C = reference_c`.
pub fn run_simulation(
    config: &ScenarioConfig,
    methods: &[Method],
    replicates: usize,
    boot: &BootstrapConfig,
) -> Result<MetricsReport> {
    config.validate()?;
    let spec = scenario_role_spec(config.mediator_kind);
    let reference = ReferenceSource::Fixed(ReferencePoint::new([("C", config.reference_c)]));
    let mut skipped = Vec::new();
    let mut active = Vec::new();
    for m in methods {
        let report = check_availability(&spec, &m.plan);
        match report.require(m.id) {
            Err(e) if !m.ignore_availability => skipped.push(SkippedMethod {
                estimator: m.label.clone(),
                reason: e.to_string(),
            }),
            _ => active.push(m),
        }
    }
    let closures: Vec<Box<ReplicateFn<'_>>> = active
        .iter()
        .map(|m| {
            let (spec, reference) = (&spec, &reference);
            Box::new(move |d: &Dataset| estimate(d, spec, reference, m.id, &m.plan, &m.options)) as Box<ReplicateFn<'_>>
        })
        .collect();
    let labeled: Vec<(String, &ReplicateFn<'_>)> =
        active.iter().zip(&closures).map(|(m, f)| (m.label.clone(), f.as_ref())).collect();
    let mut report = run_simulation_with(config, &true_effects(config), &labeled, replicates, boot)?;
    report.skipped = skipped;
    Ok(report)
}

/// Replicate loop with caller-supplied estimators and truth. Point estimates
/// use the full simulated sample; every method shares the same resamples.
pub fn run_simulation_with(
    config: &ScenarioConfig,
    truth: &TrueEffects,
    methods: &[(String, &ReplicateFn<'_>)],
    replicates: usize,
    boot: &BootstrapConfig,
) -> Result<MetricsReport> {
    config.validate()?;
    boot.validate()?;
    if replicates == 0 {
        return Err(DecompError::Validation("at least one replicate is required".into()));
    }
    let spec = scenario_role_spec(config.mediator_kind);
    let fns: Vec<&ReplicateFn<'_>> = methods.iter().map(|(_, f)| *f).collect();
    let per_replicate: Vec<Result<Vec<ReplicateOutcome>>> = (0..replicates)
        .into_par_iter()
        .map(|m| {
            let data = generate_scenario_data(config, m as u64);
            let rep_boot = BootstrapConfig {
                seed: mix_seed(boot.seed, m as u64),
                ..boot.clone()
            };
            let draws = replicate_draws(&data, &spec, &rep_boot, &fns)?;
            Ok(fns
                .iter()
                .zip(draws)
                .map(|(f, d)| replicate_outcome(f(&data), &d, boot.ci_level))
                .collect())
        })
        .collect();
    let mut outcomes: Vec<Vec<ReplicateOutcome>> = vec![Vec::with_capacity(replicates); methods.len()];
    for rep in per_replicate {
        for (k, o) in rep?.into_iter().enumerate() {
            outcomes[k].push(o);
        }
    }
    let mut rows = Vec::new();
    let mut failed_points = Vec::new();
    for ((label, _), outs) in methods.iter().zip(&outcomes) {
        rows.extend(aggregate(label, config, truth, outs, boot.replicates));
        let failed = outs.iter().filter(|o| o.point.is_none()).count();
        if failed > 0 {
            failed_points.push((label.clone(), failed));
        }
    }
    Ok(MetricsReport {
        scenario: config.clone(),
        truth: *truth,
        rows,
        skipped: Vec::new(),
        failed_points,
    })
}

fn replicate_outcome(point: Result<DecompositionEstimate>, draws: &[Option<[f64; 3]>], level: f64) -> ReplicateOutcome {
    let Ok(point) = point else {
        return ReplicateOutcome { point: None, intervals: None };
    };
    let p = [point.tau, point.delta, point.zeta];
    if !p.iter().all(|x| x.is_finite()) {
        return ReplicateOutcome { point: None, intervals: None };
    }
    let intervals = summarize_draws(point, draws, level)
        .ok()
        .map(|iv| [iv.tau_ci, iv.delta_ci, iv.zeta_ci]);
    ReplicateOutcome { point: Some(p), intervals }
}
