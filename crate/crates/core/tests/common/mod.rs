//! Data generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use causal_decomp::bootstrap::split_rng;
use causal_decomp::glm::expit;
use causal_decomp::{Dataset, RoleSpec, Variable, VariableKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    split_rng(seed, 0x7e57)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> f64 {
    f64::from(u8::from(rng.random::<f64>() < p))
}

pub fn dataset(cols: Vec<(&str, Vec<f64>)>) -> Dataset {
    Dataset::new(cols.into_iter().map(|(n, v)| (n.to_string(), v)).collect()).unwrap()
}

/// Small randomized dataset with a continuous covariate, a three-level
/// categorical covariate, one continuous confounder and one mediator of the
/// given kind. The outcome includes an exposure-mediator interaction. A
/// binary mediator is redrawn until it varies within every exposure by
/// covariate-level cell, so no logistic fit is separated.
pub fn random_dataset(seed: u64, n: usize, mediator: VariableKind) -> (Dataset, RoleSpec) {
    for attempt in 0u64.. {
        let (data, spec) = random_dataset_once(mix(seed, attempt), n, mediator);
        if mediator == VariableKind::Continuous || mediator_varies_within_cells(&data) {
            return (data, spec);
        }
    }
    unreachable!()
}

fn mix(seed: u64, attempt: u64) -> u64 {
    if attempt == 0 { seed } else { causal_decomp::bootstrap::mix_seed(seed, attempt) }
}

fn mediator_varies_within_cells(data: &Dataset) -> bool {
    let (r, c2, m) = (data.column("R").unwrap(), data.column("C2").unwrap(), data.column("M").unwrap());
    let mut seen: HashMap<(u8, u8), [bool; 2]> = HashMap::new();
    for i in 0..data.n_rows() {
        seen.entry((r[i] as u8, c2[i] as u8)).or_default()[m[i] as usize] = true;
    }
    seen.len() == 6 && seen.values().all(|s| s[0] && s[1])
}

fn random_dataset_once(seed: u64, n: usize, mediator: VariableKind) -> (Dataset, RoleSpec) {
    let mut g = rng(seed);
    let coef: Vec<f64> = (0..12).map(|_| g.random_range(-0.8..0.8)).collect();
    let mut cols: [Vec<f64>; 6] = Default::default();
    for i in 0..n {
        // Alternate groups so both are always populated.
        let r = if i % 2 == 0 { 1.0 } else { 0.0 };
        let c1 = 40.0 + 10.0 * normal(&mut g) + 2.0 * r;
        let c2 = f64::from(g.random_range(1..=3u8));
        let s = coef[0] + coef[1] * r + 0.02 * (c1 - 40.0) + 0.2 * c2 + normal(&mut g);
        let eta = coef[2] + coef[3] * r + 0.01 * (c1 - 40.0) + coef[4] * s;
        let m = match mediator {
            VariableKind::Continuous => eta + normal(&mut g),
            _ => bernoulli(&mut g, expit(eta)),
        };
        let y = coef[5] + coef[6] * r + coef[7] * s + coef[8] * m + coef[9] * r * m + 0.01 * c1 - 0.1 * c2
            + normal(&mut g);
        for (col, v) in cols.iter_mut().zip([r, c1, c2, s, m, y]) {
            col.push(v);
        }
    }
    let [r, c1, c2, s, m, y] = cols;
    let data = dataset(vec![("R", r), ("C1", c1), ("C2", c2), ("S", s), ("M", m), ("Y", y)]);
    let spec = RoleSpec::new("R", "Y")
        .mediator(Variable::new("M", mediator))
        .confounder(Variable::continuous("S"))
        .covariate(Variable::continuous("C1"))
        .covariate(Variable::new("C2", VariableKind::Categorical));
    (data, spec)
}

/// Row-wise value of a noiseless outcome built from main effects and every
/// pairwise product of `vars`.
pub fn pairwise_outcome(coef: &[f64], vars: &[f64]) -> f64 {
    let k = vars.len();
    let mut y = coef[0];
    let mut idx = 1;
    for v in vars {
        y += coef[idx] * v;
        idx += 1;
    }
    for a in 0..k {
        for b in a + 1..k {
            y += coef[idx] * vars[a] * vars[b];
            idx += 1;
        }
    }
    y
}

pub fn pairwise_count(k: usize) -> usize {
    1 + k + k * (k - 1) / 2
}

/// Fully binary instance over `names` (first `R`, second `C`), regenerated
/// until every cell holds at least two rows. Remaining variables depend on
/// all earlier ones through a logistic model. With `noiseless` the outcome
/// `Y` is a pairwise function of all variables; otherwise standard normal
/// noise is added.
pub fn discrete_instance(seed: u64, n: usize, names: &[&str], noiseless: bool) -> Dataset {
    let k = names.len();
    for attempt in 0u64.. {
        let mut g = rng(seed.wrapping_mul(1000).wrapping_add(attempt));
        let lin: Vec<Vec<f64>> = (0..k).map(|j| (0..=j).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
        let ycoef: Vec<f64> = (0..pairwise_count(k)).map(|_| g.random_range(-2.0..2.0)).collect();
        let mut cols = vec![Vec::with_capacity(n); k + 1];
        let mut cells: HashMap<Vec<u8>, usize> = HashMap::new();
        for _ in 0..n {
            let mut row = Vec::with_capacity(k);
            for (j, l) in lin.iter().enumerate() {
                let eta = l[0] + row.iter().zip(&l[1..]).map(|(x, b): (&f64, &f64)| x * b).sum::<f64>();
                let p = if j == 0 { 0.5 } else { expit(eta) };
                row.push(bernoulli(&mut g, p));
            }
            let mut y = pairwise_outcome(&ycoef, &row);
            if !noiseless {
                y += normal(&mut g);
            }
            *cells.entry(row.iter().map(|&x| x as u8).collect()).or_default() += 1;
            for (col, v) in cols.iter_mut().zip(row.iter().chain(std::iter::once(&y))) {
                col.push(*v);
            }
        }
        if cells.len() == 1 << k && cells.values().all(|&c| c >= 2) {
            let mut all: Vec<(&str, Vec<f64>)> = names.iter().copied().zip(cols.drain(..k)).collect();
            all.push(("Y", cols.pop().unwrap()));
            return dataset(all);
        }
    }
    unreachable!()
}

/// Empirical cell frequencies and outcome means over binary columns.
pub struct Cells<'a> {
    data: &'a Dataset,
}

impl<'a> Cells<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        Cells { data }
    }

    fn rows(&self, cond: &[(&str, f64)]) -> Vec<usize> {
        let cols: Vec<&[f64]> = cond.iter().map(|(n, _)| self.data.column(n).unwrap()).collect();
        (0..self.data.n_rows())
            .filter(|&i| cols.iter().zip(cond).all(|(c, (_, v))| c[i] == *v))
            .collect()
    }

    pub fn count(&self, cond: &[(&str, f64)]) -> f64 {
        self.rows(cond).len() as f64
    }

    /// `P(event | given)`.
    pub fn prob(&self, event: &[(&str, f64)], given: &[(&str, f64)]) -> f64 {
        let joint: Vec<(&str, f64)> = given.iter().chain(event).copied().collect();
        self.count(&joint) / self.count(given)
    }

    /// `E[Y | cond]`.
    pub fn mean_y(&self, cond: &[(&str, f64)]) -> f64 {
        let y = self.data.column("Y").unwrap();
        let rows = self.rows(cond);
        rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64
    }
}

/// Every 0/1 assignment of `k` variables.
pub fn assignments(k: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..1u32 << k).map(move |bits| (0..k).map(|j| f64::from((bits >> j) & 1)).collect())
}

/// `(tau, delta, zeta)` from the conditional functional
/// `sum_{s,m} E[Y|1,s,m,c] P(s|1,c) P(m|0,c)`.
pub fn conditional_oracle(data: &Dataset, c: f64) -> [f64; 3] {
    let cells = Cells::new(data);
    let mut eg = 0.0;
    for sm in assignments(2) {
        let (s, m) = (sm[0], sm[1]);
        eg += cells.mean_y(&[("R", 1.0), ("S", s), ("M", m), ("C", c)])
            * cells.prob(&[("S", s)], &[("R", 1.0), ("C", c)])
            * cells.prob(&[("M", m)], &[("R", 0.0), ("C", c)]);
    }
    let e1 = cells.mean_y(&[("R", 1.0), ("C", c)]);
    let e0 = cells.mean_y(&[("R", 0.0), ("C", c)]);
    [e1 - e0, e1 - eg, eg - e0]
}

/// `(tau, delta, zeta)` from the marginal functional
/// `sum_{s,m,c} E[Y|1,s,m,c] P(m|0,c) P(s,c|1)`.
pub fn marginal_oracle(data: &Dataset) -> [f64; 3] {
    let cells = Cells::new(data);
    let mut eg = 0.0;
    for smc in assignments(3) {
        let (s, m, c) = (smc[0], smc[1], smc[2]);
        eg += cells.mean_y(&[("R", 1.0), ("S", s), ("M", m), ("C", c)])
            * cells.prob(&[("M", m)], &[("R", 0.0), ("C", c)])
            * cells.prob(&[("S", s), ("C", c)], &[("R", 1.0)]);
    }
    let e1 = cells.mean_y(&[("R", 1.0)]);
    let e0 = cells.mean_y(&[("R", 0.0)]);
    [e1 - e0, e1 - eg, eg - e0]
}

pub fn assert_close(label: &str, got: [f64; 3], want: [f64; 3], tol: f64) {
    for (j, name) in ["tau", "delta", "zeta"].iter().enumerate() {
        assert!(
            (got[j] - want[j]).abs() < tol,
            "{label}: {name} {} vs oracle {} (diff {:e})",
            got[j],
            want[j],
            (got[j] - want[j]).abs()
        );
    }
}
