use std::fmt::Write as _;
use std::io::Write;

use causal_decomp::bootstrap::{bootstrap_ci, BootstrapConfig, Interval, IntervalEstimate};
use causal_decomp::estimators::AvailabilityReport;
use causal_decomp::{
    check_availability, estimate, Dataset, DecompError, DecompositionEstimate, EstimateOptions, EstimatorId,
    ModelPlan, ReferencePoint, ReferenceSource, RemainingVariant, Result, RoleSpec, Variable, VariableKind,
};
use serde::{Deserialize, Serialize};

use crate::args::DecomposeArgs;
use crate::provenance::{digest, ensure_dir, read_input, to_json, write_output, TOOL_VERSION};
use crate::SCHEMA_VERSION;

/// JSON document written for each estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub input: String,
    pub input_digest: String,
    pub n: usize,
    pub roles: RoleSpec,
    pub plan: ModelPlan,
    pub estimate: DecompositionEstimate,
    pub intervals: Option<Intervals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervals {
    pub level: f64,
    pub tau: Interval,
    pub delta: Interval,
    pub zeta: Interval,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub failed_replicates: usize,
    pub stratified: bool,
    pub unreliable: bool,
}

fn parse_variable(s: &str, default: VariableKind) -> Result<Variable> {
    match s.split_once(':') {
        None => Ok(Variable::new(s.trim(), default)),
        Some((name, kind)) => VariableKind::parse(kind.trim())
            .map(|k| Variable::new(name.trim(), k))
            .ok_or_else(|| DecompError::Schema(format!("unknown variable kind '{kind}' in '{s}'"))),
    }
}

pub fn role_spec(args: &DecomposeArgs) -> Result<RoleSpec> {
    let outcome = parse_variable(&args.outcome, VariableKind::Continuous)?;
    let mut spec = RoleSpec::new(args.exposure.trim(), outcome.name).outcome_kind(outcome.kind);
    for m in &args.mediators {
        if !m.contains(':') {
            return Err(DecompError::Schema(format!(
                "mediator '{m}' needs a kind, e.g. {m}:continuous or {m}:binary"
            )));
        }
        spec = spec.mediator(parse_variable(m, VariableKind::Continuous)?);
    }
    for s in args.confounders.iter().filter(|s| !s.trim().is_empty()) {
        spec = spec.confounder(parse_variable(s, VariableKind::Continuous)?);
    }
    for c in args.covariates.iter().filter(|s| !s.trim().is_empty()) {
        spec = spec.covariate(parse_variable(c, VariableKind::Continuous)?);
    }
    spec.check()?;
    Ok(spec)
}

fn user_plan(args: &DecomposeArgs, spec: &RoleSpec) -> Result<Option<ModelPlan>> {
    if args.interactions.is_empty() {
        return Ok(None);
    }
    let mut plan = ModelPlan::new();
    for i in &args.interactions {
        let (a, b) = i
            .split_once(':')
            .ok_or_else(|| DecompError::UnsupportedPlan(format!("interaction '{i}' must look like A:B")))?;
        plan = plan.with_interaction(a.trim(), b.trim());
    }
    plan.validate(spec)?;
    Ok(Some(plan))
}

/// Model plan for one estimator: the user's interactions when given, otherwise
/// the exposure-mediator interaction for product-of-coefficients and none elsewhere.
fn plan_for(id: EstimatorId, user: &Option<ModelPlan>, spec: &RoleSpec) -> ModelPlan {
    match user {
        Some(p) => p.clone(),
        None if id == EstimatorId::ProductOfCoeffs => ModelPlan::exposure_mediator(spec),
        None => ModelPlan::new(),
    }
}

fn parse_reference(items: &[String]) -> Result<ReferenceSource> {
    if items.is_empty() {
        return Ok(ReferenceSource::DataDefault);
    }
    let mut values = Vec::new();
    for item in items {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| DecompError::Validation(format!("reference '{item}' must look like name=value")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| DecompError::Validation(format!("reference value '{value}' is not a number")))?;
        values.push((name.trim().to_string(), v));
    }
    Ok(ReferenceSource::Fixed(ReferencePoint::new(values)))
}

pub fn availability_lines(spec: &RoleSpec, user: &Option<ModelPlan>) -> Vec<String> {
    EstimatorId::ALL
        .iter()
        .map(|&id| {
            let report: AvailabilityReport = check_availability(spec, &plan_for(id, user, spec));
            match report.require(id) {
                Ok(()) => format!("  {}. {:<18} available", id.number(), id.as_str()),
                Err(DecompError::Unavailable { reasons, .. }) => {
                    format!("  {}. {:<18} unavailable: {reasons}", id.number(), id.as_str())
                }
                Err(e) => format!("  {}. {:<18} {e}", id.number(), id.as_str()),
            }
        })
        .collect()
}

pub fn run(args: &DecomposeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let spec = role_spec(args)?;
    let bytes = read_input(&args.data)?;
    let data = Dataset::read_csv(bytes.as_slice())?;
    spec.validate(&data)?;
    let input_digest = digest(&bytes);
    let user = user_plan(args, &spec)?;
    let reference = parse_reference(&args.reference)?;
    let options = EstimateOptions {
        remaining: match &args.remaining {
            None => None,
            Some(s) => Some(RemainingVariant::parse(s).ok_or_else(|| {
                DecompError::Validation(format!("remaining variant '{s}' is neither original nor alternative"))
            })?),
        },
        marginal: args.marginal,
    };
    let boot = BootstrapConfig {
        replicates: args.boot,
        seed: args.seed,
        stratified: !args.unstratified,
        ci_level: args.level,
    };
    if args.boot > 0 {
        boot.validate()?;
    }

    let explicit = !args.estimators.is_empty();
    let ids: Vec<EstimatorId> = if explicit {
        let mut ids = Vec::new();
        for s in &args.estimators {
            let id = EstimatorId::parse(s).ok_or_else(|| DecompError::Validation(format!("unknown estimator '{s}'")))?;
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        ids
    } else {
        EstimatorId::ALL.to_vec()
    };
    let mut runnable = Vec::new();
    for &id in &ids {
        match check_availability(&spec, &plan_for(id, &user, &spec)).require(id) {
            Ok(()) => runnable.push(id),
            Err(e) if explicit => {
                writeln!(err, "{e}")?;
                writeln!(err, "estimator availability for this configuration:")?;
                for line in availability_lines(&spec, &user) {
                    writeln!(err, "{line}")?;
                }
                return Err(e);
            }
            Err(e) => writeln!(err, "skipping: {e}")?,
        }
    }
    if runnable.is_empty() {
        return Err(DecompError::Unavailable {
            estimator: "all".into(),
            reasons: "no estimator supports this configuration".into(),
        });
    }

    ensure_dir(&args.out)?;
    let mut reports = Vec::new();
    for id in runnable {
        let plan = plan_for(id, &user, &spec);
        let (estimate, intervals) = if args.boot > 0 {
            let iv = bootstrap_ci(&data, &spec, &reference, id, &plan, &options, &boot)?;
            if iv.unreliable {
                writeln!(
                    err,
                    "warning: {} of {} bootstrap replicates failed for {id}; intervals are unreliable",
                    iv.n_failed_replicates, iv.replicates
                )?;
            }
            let intervals = intervals_of(&iv, &boot);
            (iv.point, Some(intervals))
        } else {
            (estimate(&data, &spec, &reference, id, &plan, &options)?, None)
        };
        for w in &estimate.warnings {
            writeln!(err, "warning ({id}): {w}")?;
        }
        let report = DecomposeReport {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            seed: args.seed,
            input: args.data.display().to_string(),
            input_digest: input_digest.clone(),
            n: data.n_rows(),
            roles: spec.clone(),
            plan,
            estimate,
            intervals,
        };
        write_output(&args.out.join(format!("decompose_{}.json", id.as_str())), &to_json(&report)?)?;
        reports.push(report);
    }
    let table = render_table(&reports, &spec);
    write_output(&args.out.join("decomposition.txt"), table.as_bytes())?;
    out.write_all(table.as_bytes())?;
    Ok(())
}

fn intervals_of(iv: &IntervalEstimate, boot: &BootstrapConfig) -> Intervals {
    Intervals {
        level: boot.ci_level,
        tau: iv.tau_ci,
        delta: iv.delta_ci,
        zeta: iv.zeta_ci,
        replicates: iv.replicates,
        failed_replicates: iv.n_failed_replicates,
        stratified: boot.stratified,
        unreliable: iv.unreliable,
    }
}

/// Estimates in columns, one pair of rows per quantity: the estimate and its interval.
pub fn render_table(reports: &[DecomposeReport], spec: &RoleSpec) -> String {
    const LABEL: usize = 22;
    const COL: usize = 28;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Disparity in {} between {} = 1 and {} = 0",
        spec.outcome, spec.exposure, spec.exposure
    );
    if let Some(r) = reports.first().and_then(|r| r.estimate.reference.as_ref()) {
        if !r.values.is_empty() {
            let parts: Vec<String> = r.values.iter().map(|(k, v)| format!("{k} = {v:.4}")).collect();
            let _ = writeln!(s, "Conditional on {}", parts.join(", "));
        }
    }
    let _ = writeln!(s);
    let _ = write!(s, "{:LABEL$}", "");
    for r in reports {
        let mut name = r.estimate.estimator.as_str().to_string();
        if let Some(v) = r.estimate.remaining_variant {
            name = format!("{name}/{}", v.as_str());
        }
        if r.estimate.marginal {
            name.push_str(" (marginal)");
        }
        let _ = write!(s, "{name:>COL$}");
    }
    let _ = writeln!(s);
    let level = reports.iter().find_map(|r| r.intervals.as_ref().map(|i| i.level));
    let ci_label = level.map(|l| format!("  ({}% CI)", (l * 100.0).round()));
    type Pick = fn(&DecomposeReport) -> (f64, Option<Interval>);
    let rows: [(&str, Pick); 3] = [
        ("Initial disparity", |r| (r.estimate.tau, r.intervals.as_ref().map(|i| i.tau))),
        ("Disparity reduction", |r| (r.estimate.delta, r.intervals.as_ref().map(|i| i.delta))),
        ("Disparity remaining", |r| (r.estimate.zeta, r.intervals.as_ref().map(|i| i.zeta))),
    ];
    for (label, pick) in rows {
        let _ = write!(s, "{label:LABEL$}");
        for r in reports {
            let _ = write!(s, "{:>COL$}", format!("{:.3}", pick(r).0));
        }
        let _ = writeln!(s);
        if let Some(ci) = &ci_label {
            let _ = write!(s, "{ci:LABEL$}");
            for r in reports {
                let cell = pick(r)
                    .1
                    .map(|iv| format!("({:.3}, {:.3})", iv.lower, iv.upper))
                    .unwrap_or_default();
                let _ = write!(s, "{cell:>COL$}");
            }
            let _ = writeln!(s);
        }
    }
    let _ = write!(s, "{:LABEL$}", "% reduction");
    for r in reports {
        let cell = r
            .estimate
            .percent_reduction
            .map(|p| format!("{p:.1}"))
            .unwrap_or_else(|| "undefined".into());
        let _ = write!(s, "{cell:>COL$}");
    }
    let _ = writeln!(s);
    if let Some(r) = reports.first() {
        let _ = writeln!(s);
        let boot = match &r.intervals {
            Some(i) => format!("B = {}, ", i.replicates),
            None => String::new(),
        };
        let _ = writeln!(
            s,
            "n = {}, {boot}seed = {}, causal-decomp {}, input {}",
            r.n, r.seed, r.tool_version, r.input_digest
        );
    }
    s
}
