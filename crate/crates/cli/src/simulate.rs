use std::io::Write;

use causal_decomp::bootstrap::{mix_seed, BootstrapConfig};
use causal_decomp::sim::{
    calibrate_scenario, compute_ratio, default_methods, run_simulation, true_effects, write_csv_rows, MediatorKind,
    MetricsReport, ScenarioConfig, TrueEffects, METRICS_COLUMNS,
};
use causal_decomp::{DecompError, Result};
use serde::{Deserialize, Serialize};

use crate::args::SimulateArgs;
use crate::provenance::{digest, ensure_dir, read_input, to_json, write_output, TOOL_VERSION};
use crate::SCHEMA_VERSION;

const BOOT_SALT: u64 = 0xB007;

fn default_replicates() -> usize {
    200
}
fn default_bootstrap() -> usize {
    500
}
fn default_level() -> f64 {
    0.95
}
fn default_reduction() -> f64 {
    0.30
}
fn default_true() -> bool {
    true
}

/// Study description read from the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationManifest {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default = "default_level")]
    pub ci_level: f64,
    /// Reduction fraction `delta / tau` every scenario is calibrated to.
    #[serde(default = "default_reduction")]
    pub reduction_fraction: f64,
    /// Calibrate coefficients to each scenario's target ratio; otherwise use them as given.
    #[serde(default = "default_true")]
    pub calibrate: bool,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
    #[serde(default)]
    pub grid: Option<ScenarioGrid>,
    /// Method labels to keep, e.g. `rmpw` or `product_of_coeffs/alternative`. Empty keeps all.
    #[serde(default)]
    pub estimators: Vec<String>,
}

/// Cartesian grid of mediator kinds, sample sizes and ratios on default coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioGrid {
    pub mediator_kinds: Vec<MediatorKind>,
    pub n: Vec<usize>,
    pub ratios: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioFile {
    Manifest(SimulationManifest),
    List(Vec<ScenarioConfig>),
    Single(Box<ScenarioConfig>),
}

impl SimulationManifest {
    pub fn from_scenarios(scenarios: Vec<ScenarioConfig>) -> Self {
        SimulationManifest {
            seed: 0,
            replicates: default_replicates(),
            bootstrap: default_bootstrap(),
            ci_level: default_level(),
            reduction_fraction: default_reduction(),
            calibrate: true,
            scenarios,
            grid: None,
            estimators: Vec::new(),
        }
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_slice(bytes)
            .map_err(|e| DecompError::Schema(format!("scenario file is not a manifest or scenario list: {e}")))?;
        Ok(match file {
            ScenarioFile::Manifest(m) => m,
            ScenarioFile::List(list) => Self::from_scenarios(list),
            ScenarioFile::Single(s) => Self::from_scenarios(vec![*s]),
        })
    }

    /// Explicit scenarios followed by the grid, kind-major then `n` then ratio.
    pub fn expand(&self) -> Vec<ScenarioConfig> {
        let mut out = self.scenarios.clone();
        if let Some(g) = &self.grid {
            for &kind in &g.mediator_kinds {
                for &n in &g.n {
                    for &r in &g.ratios {
                        let seed = mix_seed(self.seed, out.len() as u64);
                        out.push(ScenarioConfig::new(kind, n, r, seed));
                    }
                }
            }
        }
        out
    }
}

/// Audit record for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAudit {
    pub index: usize,
    pub scenario: ScenarioConfig,
    pub truth: Option<TrueEffects>,
    pub realized_ratio: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub input_digest: String,
    pub replicates: usize,
    pub bootstrap: usize,
    pub reports: Vec<MetricsReport>,
}

/// Runs every scenario and returns the number of warnings.
pub fn run(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<usize> {
    let bytes = read_input(&args.scenarios)?;
    let input_digest = digest(&bytes);
    let mut manifest = SimulationManifest::parse(&bytes)?;
    if let Some(m) = args.replicates {
        manifest.replicates = m;
    }
    if let Some(b) = args.boot {
        manifest.bootstrap = b;
    }
    if let Some(s) = args.seed {
        manifest.seed = s;
    }
    let scenarios = manifest.expand();
    if scenarios.is_empty() {
        return Err(DecompError::Validation("scenario file defines no scenarios".into()));
    }
    ensure_dir(&args.out)?;

    let mut warnings = 0;
    let mut audits = Vec::new();
    let mut reports = Vec::new();
    for (index, base) in scenarios.into_iter().enumerate() {
        base.validate()?;
        let scenario = if manifest.calibrate {
            match calibrate_scenario(&base, base.target_ratio, manifest.reduction_fraction) {
                Ok(c) => c,
                Err(e @ DecompError::Calibration(_)) => {
                    warnings += 1;
                    writeln!(
                        err,
                        "warning: scenario {index} ({} mediator, n = {}, r = {}) skipped: {e}",
                        base.mediator_kind.as_str(),
                        base.n,
                        base.target_ratio
                    )?;
                    audits.push(ScenarioAudit {
                        index,
                        scenario: base,
                        truth: None,
                        realized_ratio: None,
                        skipped: Some(e.to_string()),
                    });
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else {
            base
        };
        let methods: Vec<_> = default_methods(scenario.mediator_kind)
            .into_iter()
            .filter(|m| manifest.estimators.is_empty() || manifest.estimators.iter().any(|e| e == &m.label))
            .collect();
        let boot = BootstrapConfig {
            replicates: manifest.bootstrap,
            seed: mix_seed(scenario.seed, BOOT_SALT),
            stratified: true,
            ci_level: manifest.ci_level,
        };
        let report = run_simulation(&scenario, &methods, manifest.replicates, &boot)?;
        for s in &report.skipped {
            warnings += 1;
            writeln!(err, "warning: scenario {index}: {} skipped: {}", s.estimator, s.reason)?;
        }
        for (label, k) in &report.failed_points {
            writeln!(err, "note: scenario {index}: {label} failed on {k} replicate(s)")?;
        }
        writeln!(
            out,
            "scenario {index}: {} mediator, n = {}, r = {}: delta = {:.4}, zeta = {:.4}",
            scenario.mediator_kind.as_str(),
            scenario.n,
            scenario.target_ratio,
            report.truth.delta_true,
            report.truth.zeta_true
        )?;
        audits.push(ScenarioAudit {
            index,
            realized_ratio: compute_ratio(&scenario).ok(),
            truth: Some(true_effects(&scenario)),
            scenario,
            skipped: None,
        });
        reports.push(report);
    }

    let mut csv = Vec::new();
    for line in [
        format!("causal-decomp {TOOL_VERSION}"),
        format!("schema_version: {SCHEMA_VERSION}"),
        format!("seed: {}", manifest.seed),
        format!("input_digest: {input_digest}"),
        format!("replicates: {}", manifest.replicates),
        format!("bootstrap: {}", manifest.bootstrap),
    ] {
        writeln!(csv, "# {line}")?;
    }
    writeln!(csv, "{}", METRICS_COLUMNS.join(","))?;
    for r in &reports {
        write_csv_rows(&mut csv, &r.rows)?;
    }
    write_output(&args.out.join("metrics.csv"), &csv)?;
    let doc = MetricsDocument {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        seed: manifest.seed,
        input_digest: input_digest.clone(),
        replicates: manifest.replicates,
        bootstrap: manifest.bootstrap,
        reports,
    };
    write_output(&args.out.join("metrics.json"), &to_json(&doc)?)?;
    #[derive(Serialize)]
    struct AuditDocument<'a> {
        schema_version: u32,
        tool_version: &'a str,
        seed: u64,
        input_digest: &'a str,
        reduction_fraction: f64,
        scenarios: &'a [ScenarioAudit],
    }
    let audit = AuditDocument {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION,
        seed: manifest.seed,
        input_digest: &input_digest,
        reduction_fraction: manifest.reduction_fraction,
        scenarios: &audits,
    };
    write_output(&args.out.join("scenarios.json"), &to_json(&audit)?)?;
    writeln!(out, "warnings: {warnings}")?;
    Ok(warnings)
}
