//! Observational data tables, causal role annotations, covariate centering and
//! group splitting.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DecompError, Result};

/// Measurement type of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Continuous,
    /// Coded 0/1.
    Binary,
    /// Integer-coded levels; only valid for baseline covariates.
    Categorical,
}

impl VariableKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "continuous" | "cont" => Some(VariableKind::Continuous),
            "binary" | "bin" => Some(VariableKind::Binary),
            "categorical" | "cat" => Some(VariableKind::Categorical),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Continuous => "continuous",
            VariableKind::Binary => "binary",
            VariableKind::Categorical => "categorical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VariableKind,
}

impl Variable {
    pub fn new(name: impl Into<String>, kind: VariableKind) -> Self {
        Variable {
            name: name.into(),
            kind,
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self::new(name, VariableKind::Continuous)
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::new(name, VariableKind::Binary)
    }
}

/// Rectangular table of finite numeric columns. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let n_rows = columns.first().map(|(_, v)| v.len()).unwrap_or(0);
        if n_rows == 0 {
            return Err(DecompError::Validation(
                "dataset must contain at least one row".into(),
            ));
        }
        let mut names = Vec::with_capacity(columns.len());
        let mut values = Vec::with_capacity(columns.len());
        let mut index = HashMap::with_capacity(columns.len());
        for (name, col) in columns {
            if col.len() != n_rows {
                return Err(DecompError::Validation(format!(
                    "column '{name}' has {} rows, expected {n_rows}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(DecompError::Validation(format!(
                    "missing or non-finite value at row {}, column '{name}'",
                    row + 1
                )));
            }
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(DecompError::Schema(format!("duplicate column '{name}'")));
            }
            names.push(name);
            values.push(col);
        }
        Ok(Dataset {
            names,
            columns: values,
            index,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.index
            .get(name)
            .map(|&i| self.columns[i].as_slice())
            .ok_or_else(|| DecompError::Schema(format!("column '{name}' not found")))
    }

    /// Returns a copy with `name` replaced (or appended when absent).
    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Result<Dataset> {
        let mut cols: Vec<(String, Vec<f64>)> = self
            .names
            .iter()
            .cloned()
            .zip(self.columns.iter().cloned())
            .collect();
        match self.index.get(name) {
            Some(&i) => cols[i].1 = values,
            None => cols.push((name.to_string(), values)),
        }
        Dataset::new(cols)
    }

    /// Rows in the given order; indices may repeat (bootstrap resampling).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns: Vec<Vec<f64>> = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Dataset {
            names: self.names.clone(),
            columns,
            index: self.index.clone(),
            n_rows: rows.len(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names).map_err(io_err)?;
        let mut record = Vec::with_capacity(self.names.len());
        for r in 0..self.n_rows {
            record.clear();
            // Rust's float Display is shortest-round-trip, so values reload bit-for-bit.
            record.extend(self.columns.iter().map(|c| format!("{}", c[r])));
            w.write_record(&record).map_err(io_err)?;
        }
        w.flush().map_err(|e| DecompError::Io(e.to_string()))
    }

    /// Parses a CSV table without role validation.
    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| DecompError::Schema(format!("cannot read header row: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(DecompError::Schema("header row missing".into()));
        }
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| DecompError::Parse {
                row,
                column: String::new(),
                message: e.to_string(),
            })?;
            if record.len() != headers.len() {
                return Err(DecompError::Parse {
                    row,
                    column: String::new(),
                    message: format!("expected {} fields, found {}", headers.len(), record.len()),
                });
            }
            for (j, field) in record.iter().enumerate() {
                if field.is_empty() || field.eq_ignore_ascii_case("na") {
                    return Err(DecompError::Validation(format!(
                        "missing value at row {row}, column '{}'",
                        headers[j]
                    )));
                }
                let v: f64 = field.parse().map_err(|_| DecompError::Parse {
                    row,
                    column: headers[j].clone(),
                    message: format!("'{field}' is not numeric"),
                })?;
                if !v.is_finite() {
                    return Err(DecompError::Validation(format!(
                        "non-finite value at row {row}, column '{}'",
                        headers[j]
                    )));
                }
                columns[j].push(v);
            }
        }
        Dataset::new(headers.into_iter().zip(columns).collect())
    }
}

fn io_err(e: csv::Error) -> DecompError {
    DecompError::Io(e.to_string())
}

/// Loads a CSV file and validates it against the role specification.
pub fn load_csv(path: impl AsRef<Path>, spec: &RoleSpec) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| DecompError::Io(format!("{}: {e}", path.display())))?;
    let data = Dataset::read_csv(std::io::BufReader::new(file))?;
    spec.validate(&data)?;
    Ok(data)
}

/// Assignment of dataset columns to causal roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleSpec {
    /// 1 = comparison (marginalized) group, 0 = reference group.
    pub exposure: String,
    pub outcome: String,
    pub outcome_kind: VariableKind,
    pub mediators: Vec<Variable>,
    pub intermediate_confounders: Vec<Variable>,
    pub baseline_covariates: Vec<Variable>,
}

impl RoleSpec {
    pub fn new(exposure: impl Into<String>, outcome: impl Into<String>) -> Self {
        RoleSpec {
            exposure: exposure.into(),
            outcome: outcome.into(),
            outcome_kind: VariableKind::Continuous,
            mediators: Vec::new(),
            intermediate_confounders: Vec::new(),
            baseline_covariates: Vec::new(),
        }
    }

    pub fn outcome_kind(mut self, kind: VariableKind) -> Self {
        self.outcome_kind = kind;
        self
    }

    pub fn mediator(mut self, v: Variable) -> Self {
        self.mediators.push(v);
        self
    }

    pub fn confounder(mut self, v: Variable) -> Self {
        self.intermediate_confounders.push(v);
        self
    }

    pub fn covariate(mut self, v: Variable) -> Self {
        self.baseline_covariates.push(v);
        self
    }

    fn all_names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.exposure.as_str())
            .chain(std::iter::once(self.outcome.as_str()))
            .chain(self.mediators.iter().map(|v| v.name.as_str()))
            .chain(self.intermediate_confounders.iter().map(|v| v.name.as_str()))
            .chain(self.baseline_covariates.iter().map(|v| v.name.as_str()))
    }

    pub fn kind_of(&self, name: &str) -> Option<VariableKind> {
        if name == self.exposure {
            return Some(VariableKind::Binary);
        }
        if name == self.outcome {
            return Some(self.outcome_kind);
        }
        self.mediators
            .iter()
            .chain(&self.intermediate_confounders)
            .chain(&self.baseline_covariates)
            .find(|v| v.name == name)
            .map(|v| v.kind)
    }

    /// Checks the roles themselves (names disjoint, kinds admissible), without data.
    pub fn check(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for name in self.all_names() {
            if name.is_empty() {
                return Err(DecompError::Schema("empty column name in role spec".into()));
            }
            if !seen.insert(name) {
                return Err(DecompError::Schema(format!(
                    "column '{name}' is assigned to more than one role"
                )));
            }
        }
        if self.mediators.is_empty() {
            return Err(DecompError::Schema("at least one mediator is required".into()));
        }
        if self.outcome_kind == VariableKind::Categorical {
            return Err(DecompError::Schema(
                "outcome must be continuous or binary".into(),
            ));
        }
        for v in self.mediators.iter().chain(&self.intermediate_confounders) {
            if v.kind == VariableKind::Categorical {
                return Err(DecompError::Schema(format!(
                    "'{}': mediators and intermediate confounders must be continuous or binary",
                    v.name
                )));
            }
        }
        Ok(())
    }

    /// Checks roles against a dataset.
    pub fn validate(&self, data: &Dataset) -> Result<()> {
        self.check()?;
        for name in self.all_names() {
            data.column(name)?;
        }
        let r = data.column(&self.exposure)?;
        if r.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(DecompError::Validation(
                "exposure must be binary 0/1".into(),
            ));
        }
        if !r.contains(&0.0) || !r.contains(&1.0) {
            return Err(DecompError::Validation(
                "exposure must contain both groups (0 and 1)".into(),
            ));
        }
        let binary = self
            .mediators
            .iter()
            .chain(&self.intermediate_confounders)
            .chain(&self.baseline_covariates)
            .filter(|v| v.kind == VariableKind::Binary)
            .map(|v| v.name.as_str())
            .chain((self.outcome_kind == VariableKind::Binary).then_some(self.outcome.as_str()));
        for name in binary {
            if let Some(row) = data
                .column(name)?
                .iter()
                .position(|&v| v != 0.0 && v != 1.0)
            {
                return Err(DecompError::Validation(format!(
                    "binary column '{name}' must be coded 0/1 (row {})",
                    row + 1
                )));
            }
        }
        Ok(())
    }
}

/// Baseline-covariate values at which conditional disparities are evaluated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub values: BTreeMap<String, f64>,
}

impl ReferencePoint {
    pub fn new<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        ReferencePoint {
            values: values.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    fn check_covers(&self, spec: &RoleSpec) -> Result<()> {
        for cov in &spec.baseline_covariates {
            if !self.values.contains_key(&cov.name) {
                return Err(DecompError::Validation(format!(
                    "reference point has no value for covariate '{}'",
                    cov.name
                )));
            }
        }
        if let Some(extra) = self
            .values
            .keys()
            .find(|k| !spec.baseline_covariates.iter().any(|c| &c.name == *k))
        {
            return Err(DecompError::Validation(format!(
                "reference point names '{extra}', which is not a baseline covariate"
            )));
        }
        Ok(())
    }
}

/// Sample means for continuous/binary covariates, modal level for categorical ones.
pub fn default_reference(data: &Dataset, spec: &RoleSpec) -> Result<ReferencePoint> {
    let mut values = BTreeMap::new();
    for cov in &spec.baseline_covariates {
        let col = data.column(&cov.name)?;
        let v = match cov.kind {
            VariableKind::Categorical => mode(col),
            _ => col.iter().sum::<f64>() / col.len() as f64,
        };
        values.insert(cov.name.clone(), v);
    }
    Ok(ReferencePoint { values })
}

fn levels(col: &[f64]) -> Vec<f64> {
    let mut lv: Vec<f64> = col.to_vec();
    lv.sort_by(f64::total_cmp);
    lv.dedup();
    lv
}

// Ties resolve to the smallest level.
fn mode(col: &[f64]) -> f64 {
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut best, mut best_count) = (sorted[0], 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > best_count {
            best = sorted[i];
            best_count = j - i;
        }
        i = j;
    }
    best
}

/// Name of the indicator column for one level of a categorical covariate.
pub fn level_column_name(name: &str, level: f64) -> String {
    format!("{name}={level}")
}

/// A dataset whose baseline covariates have been centered at a reference point.
#[derive(Debug, Clone)]
pub struct Centered {
    pub data: Dataset,
    /// Design columns standing for the baseline covariates, in role order.
    pub covariates: Vec<String>,
    /// Design columns generated by each role covariate (dummy columns for categorical ones).
    pub expansion: BTreeMap<String, Vec<String>>,
}

/// Centers continuous covariates at the reference value and dummy-codes categorical
/// covariates against the reference level. Other columns are untouched.
pub fn center_covariates(data: &Dataset, spec: &RoleSpec, reference: &ReferencePoint) -> Result<Centered> {
    reference.check_covers(spec)?;
    let mut cols: Vec<(String, Vec<f64>)> = Vec::with_capacity(data.names().len());
    let mut covariates = Vec::new();
    let mut expansion = BTreeMap::new();
    for name in data.names() {
        let col = data.column(name)?;
        let cov = spec.baseline_covariates.iter().find(|c| &c.name == name);
        match cov {
            None => cols.push((name.clone(), col.to_vec())),
            Some(cov) => {
                let c = reference.values[&cov.name];
                match cov.kind {
                    VariableKind::Categorical => {
                        let lv = levels(col);
                        if !lv.contains(&c) {
                            return Err(DecompError::Validation(format!(
                                "reference level {c} of '{name}' does not occur in the data"
                            )));
                        }
                        let mut generated = Vec::new();
                        for &level in lv.iter().filter(|&&l| l != c) {
                            let dummy = level_column_name(name, level);
                            let values = col.iter().map(|&v| f64::from(u8::from(v == level))).collect();
                            generated.push(dummy.clone());
                            cols.push((dummy, values));
                        }
                        expansion.insert(name.clone(), generated);
                    }
                    _ => {
                        cols.push((name.clone(), col.iter().map(|&v| v - c).collect()));
                        expansion.insert(name.clone(), vec![name.clone()]);
                    }
                }
            }
        }
    }
    for cov in &spec.baseline_covariates {
        covariates.extend(expansion[&cov.name].iter().cloned());
    }
    Ok(Centered {
        data: Dataset::new(cols)?,
        covariates,
        expansion,
    })
}

/// Row indices of the reference (R=0) and comparison (R=1) groups, order preserved.
pub fn group_rows(data: &Dataset, spec: &RoleSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let r = data.column(&spec.exposure)?;
    let (mut g0, mut g1) = (Vec::new(), Vec::new());
    for (i, &v) in r.iter().enumerate() {
        if v == 0.0 {
            g0.push(i);
        } else if v == 1.0 {
            g1.push(i);
        } else {
            return Err(DecompError::Validation("exposure must be binary 0/1".into()));
        }
    }
    if g0.is_empty() {
        return Err(DecompError::EmptyGroup("no rows with exposure = 0".into()));
    }
    if g1.is_empty() {
        return Err(DecompError::EmptyGroup("no rows with exposure = 1".into()));
    }
    Ok((g0, g1))
}

/// Splits into (R=0 rows, R=1 rows).
pub fn split_by_group(data: &Dataset, spec: &RoleSpec) -> Result<(Dataset, Dataset)> {
    let (g0, g1) = group_rows(data, spec)?;
    Ok((data.select_rows(&g0), data.select_rows(&g1)))
}
