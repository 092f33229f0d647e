//! Linear (weighted least squares) and logistic (IRLS) regression.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{DecompError, Result};
use crate::linalg::{cholesky, cholesky_solve, normal_equations, solve_wls};

/// IRLS stops when the largest coefficient update falls below this.
pub const IRLS_TOLERANCE: f64 = 1e-8;
pub const IRLS_MAX_ITERATIONS: usize = 100;
/// Any logit-scale coefficient beyond this magnitude is treated as separation.
pub const SEPARATION_BOUND: f64 = 15.0;
/// Probabilities are kept inside `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-12;

pub const INTERCEPT: &str = "(Intercept)";

/// A regressor: a column, or the product of two columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Main(String),
    Interaction(String, String),
}

impl Term {
    pub fn main(name: impl Into<String>) -> Self {
        Term::Main(name.into())
    }

    pub fn interaction(a: impl Into<String>, b: impl Into<String>) -> Self {
        Term::Interaction(a.into(), b.into())
    }

    pub fn label(&self) -> String {
        match self {
            Term::Main(a) => a.clone(),
            Term::Interaction(a, b) => format!("{a}:{b}"),
        }
    }

    pub fn involves(&self, name: &str) -> bool {
        match self {
            Term::Main(a) => a == name,
            Term::Interaction(a, b) => a == name || b == name,
        }
    }

    fn same_as(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Main(a), Term::Main(b)) => a == b,
            (Term::Interaction(a, b), Term::Interaction(c, d)) => {
                (a == c && b == d) || (a == d && b == c)
            }
            _ => false,
        }
    }

    fn components(&self) -> (&str, Option<&str>) {
        match self {
            Term::Main(a) => (a, None),
            Term::Interaction(a, b) => (a, Some(b)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Response plus ordered regressors; an intercept is always included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFormula {
    pub response: String,
    pub terms: Vec<Term>,
}

impl ModelFormula {
    pub fn new(response: impl Into<String>, terms: Vec<Term>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].iter().any(|u| u.same_as(t)) {
                return Err(DecompError::Schema(format!("duplicate model term '{t}'")));
            }
        }
        Ok(ModelFormula {
            response: response.into(),
            terms,
        })
    }

    /// Convenience constructor for main effects only.
    pub fn mains<S: AsRef<str>>(response: &str, names: &[S]) -> Result<Self> {
        Self::new(
            response,
            names.iter().map(|n| Term::main(n.as_ref())).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Logistic,
}

/// Result of one regression fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: Family,
    pub terms: Vec<Term>,
    /// Intercept first, then one coefficient per term.
    pub coefficients: Vec<f64>,
    /// Weighted residual mean square (linear family only; 0 otherwise).
    pub residual_variance: f64,
    pub converged: bool,
    pub n_used: usize,
    pub iterations: usize,
}

/// Anything that can supply a value for a named variable.
pub trait ValueSource {
    fn value(&self, name: &str) -> Option<f64>;
}

impl ValueSource for HashMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl ValueSource for BTreeMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl ValueSource for [(&str, f64)] {
    fn value(&self, name: &str) -> Option<f64> {
        self.iter().find(|(k, _)| *k == name).map(|&(_, v)| v)
    }
}

impl<const N: usize> ValueSource for [(&str, f64); N] {
    fn value(&self, name: &str) -> Option<f64> {
        self.as_slice().value(name)
    }
}

/// Replacement for a dataset column when evaluating a model over rows.
#[derive(Debug, Clone, Copy)]
pub enum Override<'a> {
    Const(f64),
    Column(&'a [f64]),
}

#[derive(Clone, Copy)]
enum Source<'a> {
    Const(f64),
    Column(&'a [f64]),
}

impl Source<'_> {
    #[inline]
    fn at(&self, row: usize) -> f64 {
        match *self {
            Source::Const(c) => c,
            Source::Column(col) => col[row],
        }
    }
}

fn resolve<'a>(data: &'a Dataset, overrides: &[(&str, Override<'a>)], name: &str) -> Result<Source<'a>> {
    if let Some((_, o)) = overrides.iter().find(|(k, _)| *k == name) {
        return Ok(match *o {
            Override::Const(c) => Source::Const(c),
            Override::Column(c) => Source::Column(c),
        });
    }
    Ok(Source::Column(data.column(name)?))
}

/// Materializes the design columns (intercept excluded) for the given terms.
fn design_columns(data: &Dataset, terms: &[Term]) -> Result<Vec<Vec<f64>>> {
    terms
        .iter()
        .map(|t| match t {
            Term::Main(a) => Ok(data.column(a)?.to_vec()),
            Term::Interaction(a, b) => {
                let (x, y) = (data.column(a)?, data.column(b)?);
                Ok(x.iter().zip(y).map(|(u, v)| u * v).collect())
            }
        })
        .collect()
}

fn term_label(terms: &[Term], j: usize) -> String {
    if j == 0 {
        INTERCEPT.to_string()
    } else {
        terms[j - 1].label()
    }
}

/// Ordinary or weighted least squares.
pub fn fit_linear(data: &Dataset, formula: &ModelFormula, weights: Option<&[f64]>) -> Result<FittedModel> {
    let n = data.n_rows();
    if let Some(w) = weights {
        if w.len() != n {
            return Err(DecompError::Validation(format!(
                "weights have length {}, expected {n}",
                w.len()
            )));
        }
        if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(DecompError::Validation("weights must be finite and non-negative".into()));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(DecompError::Validation("weights are all zero".into()));
        }
    }
    let y = data.column(&formula.response)?;
    let cols = design_columns(data, &formula.terms)?;
    let ones = vec![1.0; n];
    let mut refs: Vec<&[f64]> = Vec::with_capacity(cols.len() + 1);
    refs.push(&ones);
    refs.extend(cols.iter().map(Vec::as_slice));
    let beta = solve_wls(&refs, y, weights).map_err(|e| DecompError::SingularDesign {
        term: term_label(&formula.terms, e.0),
    })?;

    let p = beta.len();
    let mut rss = 0.0;
    let mut n_used = 0usize;
    for r in 0..n {
        let w = weights.map_or(1.0, |w| w[r]);
        if w == 0.0 {
            continue;
        }
        n_used += 1;
        let fitted: f64 = refs.iter().zip(&beta).map(|(c, b)| c[r] * b).sum();
        let e = y[r] - fitted;
        rss += w * e * e;
    }
    let df = n_used as f64 - p as f64;
    let residual_variance = if df > 0.0 { rss / df } else { 0.0 };
    Ok(FittedModel {
        family: Family::Linear,
        terms: formula.terms.clone(),
        coefficients: beta,
        residual_variance,
        converged: true,
        n_used,
        iterations: 1,
    })
}

/// Numerically stable logistic function.
#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Bernoulli-logit maximum likelihood by iteratively reweighted least squares,
/// started at zero.
pub fn fit_logistic(data: &Dataset, formula: &ModelFormula) -> Result<FittedModel> {
    let n = data.n_rows();
    let y = data.column(&formula.response)?;
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(DecompError::Validation(format!(
            "logistic response '{}' must be coded 0/1",
            formula.response
        )));
    }
    if !y.contains(&0.0) || !y.contains(&1.0) {
        return Err(DecompError::Validation(format!(
            "logistic response '{}' must contain both classes",
            formula.response
        )));
    }
    let cols = design_columns(data, &formula.terms)?;
    let ones = vec![1.0; n];
    let mut refs: Vec<&[f64]> = Vec::with_capacity(cols.len() + 1);
    refs.push(&ones);
    refs.extend(cols.iter().map(Vec::as_slice));
    let p = refs.len();

    let mut beta = vec![0.0; p];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    for it in 1..=IRLS_MAX_ITERATIONS {
        // Newton step as a weighted least squares problem on the working residual.
        for r in 0..n {
            let eta: f64 = refs.iter().zip(&beta).map(|(c, b)| c[r] * b).sum();
            let prob = clamp_prob(expit(eta));
            w[r] = prob * (1.0 - prob);
            z[r] = (y[r] - prob) / w[r];
        }
        let (mut h, mut g) = normal_equations(&refs, &z, Some(&w));
        cholesky(&mut h, p).map_err(|e| DecompError::SingularDesign {
            term: term_label(&formula.terms, e.0),
        })?;
        cholesky_solve(&h, p, &mut g);
        let mut max_step: f64 = 0.0;
        for (b, d) in beta.iter_mut().zip(&g) {
            *b += d;
            max_step = max_step.max(d.abs());
        }
        if let Some(j) = beta.iter().position(|b| !b.is_finite() || b.abs() > SEPARATION_BOUND) {
            return Err(DecompError::Separation {
                term: term_label(&formula.terms, j),
                bound: SEPARATION_BOUND,
            });
        }
        if max_step < IRLS_TOLERANCE {
            return Ok(FittedModel {
                family: Family::Logistic,
                terms: formula.terms.clone(),
                coefficients: beta,
                residual_variance: 0.0,
                converged: true,
                n_used: n,
                iterations: it,
            });
        }
    }
    Err(DecompError::NonConvergence {
        iterations: IRLS_MAX_ITERATIONS,
        coefficients: beta,
    })
}

/// Fits the family implied by `binary`: logistic for 0/1 responses, linear otherwise.
pub fn fit_for_kind(data: &Dataset, formula: &ModelFormula, binary: bool) -> Result<FittedModel> {
    if binary {
        fit_logistic(data, formula)
    } else {
        fit_linear(data, formula, None)
    }
}

impl FittedModel {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    /// Coefficient by term label (`"(Intercept)"`, `"R"`, `"R:M"`).
    pub fn coefficient(&self, label: &str) -> Option<f64> {
        if label == INTERCEPT {
            return Some(self.coefficients[0]);
        }
        self.terms
            .iter()
            .position(|t| t.label() == label || t.same_as(&parse_label(label)))
            .map(|j| self.coefficients[j + 1])
    }

    pub fn coefficient_map(&self) -> BTreeMap<String, f64> {
        std::iter::once((INTERCEPT.to_string(), self.coefficients[0]))
            .chain(self.terms.iter().zip(&self.coefficients[1..]).map(|(t, &b)| (t.label(), b)))
            .collect()
    }

    pub fn linear_predictor_at<V: ValueSource + ?Sized>(&self, row: &V) -> Result<f64> {
        let mut eta = self.coefficients[0];
        for (t, b) in self.terms.iter().zip(&self.coefficients[1..]) {
            let (a, other) = t.components();
            let get = |name: &str| {
                row.value(name)
                    .ok_or_else(|| DecompError::Validation(format!("no value supplied for '{name}'")))
            };
            let mut x = get(a)?;
            if let Some(o) = other {
                x *= get(o)?;
            }
            eta += b * x;
        }
        Ok(eta)
    }

    /// Intercept plus coefficient-weighted term values (linear family).
    pub fn predict_mean<V: ValueSource + ?Sized>(&self, row: &V) -> Result<f64> {
        if self.family != Family::Linear {
            return Err(DecompError::Validation("predict_mean requires a linear model".into()));
        }
        self.linear_predictor_at(row)
    }

    /// Clamped fitted probability (logistic family), strictly inside (0, 1).
    pub fn predict_prob<V: ValueSource + ?Sized>(&self, row: &V) -> Result<f64> {
        if self.family != Family::Logistic {
            return Err(DecompError::Validation("predict_prob requires a logistic model".into()));
        }
        Ok(clamp_prob(expit(self.linear_predictor_at(row)?)))
    }

    /// Linear predictor for every row of `data`, with some columns replaced.
    pub fn linear_predictor(&self, data: &Dataset, overrides: &[(&str, Override<'_>)]) -> Result<Vec<f64>> {
        let n = data.n_rows();
        let mut eta = vec![self.coefficients[0]; n];
        for (t, &b) in self.terms.iter().zip(&self.coefficients[1..]) {
            let (a, other) = t.components();
            let sa = resolve(data, overrides, a)?;
            match other {
                None => {
                    for (r, e) in eta.iter_mut().enumerate() {
                        *e += b * sa.at(r);
                    }
                }
                Some(o) => {
                    let sb = resolve(data, overrides, o)?;
                    for (r, e) in eta.iter_mut().enumerate() {
                        *e += b * sa.at(r) * sb.at(r);
                    }
                }
            }
        }
        Ok(eta)
    }

    /// Conditional mean for every row: identity for linear, clamped expit for logistic.
    pub fn mean_response(&self, data: &Dataset, overrides: &[(&str, Override<'_>)]) -> Result<Vec<f64>> {
        let mut eta = self.linear_predictor(data, overrides)?;
        if self.family == Family::Logistic {
            for e in &mut eta {
                *e = clamp_prob(expit(*e));
            }
        }
        Ok(eta)
    }
}

fn parse_label(label: &str) -> Term {
    match label.split_once(':') {
        Some((a, b)) => Term::interaction(a, b),
        None => Term::main(label),
    }
}
