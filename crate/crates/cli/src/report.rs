use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;

use causal_decomp::{DecompError, Result};
use serde::Deserialize;

use crate::args::ReportArgs;
use crate::provenance::{digest, ensure_dir, read_input, write_output, TOOL_VERSION};
use crate::svg::{Chart, Panel, Series};

#[derive(Debug, Clone, Deserialize)]
pub struct CsvRow {
    pub estimator: String,
    pub target: String,
    pub n: usize,
    pub ratio: f64,
    pub bias: f64,
    pub rmse: f64,
    pub coverage: f64,
    #[serde(rename = "M")]
    pub replicates: usize,
    #[serde(rename = "B")]
    pub bootstrap: usize,
    #[serde(default)]
    pub mediator: Option<String>,
}

impl CsvRow {
    fn mediator(&self) -> &str {
        self.mediator.as_deref().unwrap_or("")
    }

    fn metric(&self, m: &str) -> f64 {
        match m {
            "bias" => self.bias,
            "rmse" => self.rmse,
            _ => self.coverage,
        }
    }
}

/// Metrics rows plus the `key: value` pairs of its comment lines.
pub fn read_metrics(bytes: &[u8]) -> Result<(Vec<CsvRow>, Vec<(String, String)>)> {
    let text = std::str::from_utf8(bytes).map_err(|e| DecompError::Io(format!("metrics file is not UTF-8: {e}")))?;
    let meta = text
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize().enumerate() {
        let row: CsvRow = rec.map_err(|e| DecompError::Parse {
            row: i + 1,
            column: String::new(),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok((rows, meta))
}

const METRICS: [(&str, &str); 3] = [("bias", "Bias"), ("rmse", "RMSE"), ("coverage", "Coverage")];
const TARGETS: [(&str, &str); 2] = [("delta", "disparity reduction"), ("zeta", "disparity remaining")];

fn unique_in_order<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in it {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

pub fn run(args: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = read_input(&args.metrics)?;
    let (rows, meta) = read_metrics(&bytes)?;
    if rows.is_empty() {
        return Err(DecompError::Validation(format!("{} holds no metrics rows", args.metrics.display())));
    }
    let seed = meta
        .iter()
        .find(|(k, _)| k == "seed")
        .map(|(_, v)| v.clone())
        .unwrap_or_else(|| "unknown".into());
    let input_digest = digest(&bytes);
    let provenance = format!("causal-decomp {TOOL_VERSION}; seed {seed}; input {input_digest}");
    ensure_dir(&args.out)?;

    let estimators = unique_in_order(rows.iter().map(|r| r.estimator.as_str()));
    let mediators = unique_in_order(rows.iter().map(CsvRow::mediator));
    let ns: BTreeSet<usize> = rows.iter().map(|r| r.n).collect();
    let mut ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    let x_categories: Vec<String> = ratios.iter().map(|r| r.to_string()).collect();

    let mut written = Vec::new();
    for (metric, metric_title) in METRICS {
        for (target, target_title) in TARGETS {
            let selected: Vec<&CsvRow> = rows.iter().filter(|r| r.target == target).collect();
            let values: Vec<f64> = selected.iter().map(|r| r.metric(metric)).filter(|v| v.is_finite()).collect();
            let y_range = y_range(metric, &values);
            let panels = mediators
                .iter()
                .map(|med| {
                    ns.iter()
                        .map(|&n| Panel {
                            title: if med.is_empty() {
                                format!("n = {n}")
                            } else {
                                format!("{med} mediator, n = {n}")
                            },
                            series: estimators
                                .iter()
                                .map(|e| Series {
                                    name: e.clone(),
                                    points: selected
                                        .iter()
                                        .filter(|r| r.mediator() == med && r.n == n && &r.estimator == e)
                                        .map(|r| {
                                            let xi = ratios.iter().position(|&x| x == r.ratio).unwrap_or(0);
                                            (xi, r.metric(metric))
                                        })
                                        .collect(),
                                })
                                .filter(|s| !s.points.is_empty())
                                .collect(),
                        })
                        .collect()
                })
                .collect();
            let chart = Chart {
                title: format!("{metric_title} of the {target_title}"),
                x_label: "ratio r".into(),
                x_categories: x_categories.clone(),
                y_label: metric_title.into(),
                legend: estimators.clone(),
                panels,
                reference_line: (metric == "coverage").then_some(0.95),
                y_range,
                metadata: provenance.clone(),
            };
            let name = format!("{metric}_{target}.svg");
            write_output(&args.out.join(&name), chart.render().as_bytes())?;
            written.push(name);
        }
    }
    let md = summary_markdown(&rows, &mediators, &provenance);
    write_output(&args.out.join("summary.md"), md.as_bytes())?;
    written.push("summary.md".into());
    for w in &written {
        writeln!(out, "wrote {}", args.out.join(w).display())?;
    }
    Ok(())
}

fn y_range(metric: &str, values: &[f64]) -> (f64, f64) {
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    match metric {
        "coverage" => {
            lo = lo.min(0.9);
            hi = hi.max(1.0).min(1.0);
        }
        "bias" => {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        _ => lo = lo.min(0.0),
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);
    (lo - pad, hi + pad)
}

fn summary_markdown(rows: &[CsvRow], mediators: &[String], provenance: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Simulation metrics\n");
    let _ = writeln!(s, "Generated by {provenance}.\n");
    for med in mediators {
        if !med.is_empty() {
            let _ = writeln!(s, "## {} mediator\n", capitalize(med));
        }
        let _ = writeln!(s, "| n | ratio | estimator | target | bias | RMSE | coverage | M | B |");
        let _ = writeln!(s, "|---:|---:|---|---|---:|---:|---:|---:|---:|");
        for r in rows.iter().filter(|r| r.mediator() == med) {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {:.4} | {:.4} | {:.3} | {} | {} |",
                r.n, r.ratio, r.estimator, r.target, r.bias, r.rmse, r.coverage, r.replicates, r.bootstrap
            );
        }
        let _ = writeln!(s);
    }
    s
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
