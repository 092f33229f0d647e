//! Percentile bootstrap with per-replicate random streams.
//!
//! Replicate `b` draws its resample from `split_rng(seed, b)` alone, and
//! results are collected in replicate order, so intervals do not depend on
//! how many threads run the replicates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{group_rows, Dataset, RoleSpec};
use crate::error::{DecompError, Result};
use crate::estimators::{estimate, DecompositionEstimate, EstimateOptions, EstimatorId, ModelPlan, ReferenceSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Resample within exposure groups, preserving both group sizes.
    pub stratified: bool,
    pub ci_level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 1000,
            seed: 0,
            stratified: true,
            ci_level: 0.95,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(DecompError::Validation("bootstrap needs at least 2 replicates".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(DecompError::Validation("confidence level must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Closed-interval containment, so a degenerate interval at the truth counts as covering it.
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub point: DecompositionEstimate,
    pub tau_ci: Interval,
    pub delta_ci: Interval,
    pub zeta_ci: Interval,
    pub replicates: usize,
    pub n_failed_replicates: usize,
    /// At least a tenth of the replicates failed.
    pub unreliable: bool,
}

/// SplitMix64 finalizer; derives well-separated seeds from structured inputs.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent deterministic stream number `stream` of the generator keyed by `seed`.
pub fn split_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// 1-based order statistics `(k_lo, k_hi)` bounding a central `level` interval
/// among `n` sorted values: `k_lo = ceil(n q)`, `k_hi = floor(n (1 - q))` with
/// `q = (1 - level) / 2`, clamped to `1..=n`.
pub fn order_statistic_indices(n: usize, level: f64) -> (usize, usize) {
    let q = (1.0 - level) / 2.0;
    let nf = n as f64;
    let lo = ((q * nf - 1e-9).ceil() as usize).clamp(1, n);
    let hi = (((1.0 - q) * nf + 1e-9).floor() as usize).clamp(lo, n);
    (lo, hi)
}

/// Percentile interval of `values` (sorted in place).
pub fn percentile_interval(values: &mut [f64], level: f64) -> Result<Interval> {
    if values.is_empty() {
        return Err(DecompError::Bootstrap("no replicate values".into()));
    }
    values.sort_by(f64::total_cmp);
    let (lo, hi) = order_statistic_indices(values.len(), level);
    Ok(Interval {
        lower: values[lo - 1],
        upper: values[hi - 1],
    })
}

/// Row indices of one resample.
pub fn resample_rows(rng: &mut impl Rng, n: usize, groups: Option<(&[usize], &[usize])>) -> Vec<usize> {
    match groups {
        Some((g0, g1)) => {
            let mut rows = Vec::with_capacity(g0.len() + g1.len());
            for g in [g0, g1] {
                rows.extend((0..g.len()).map(|_| g[rng.random_range(0..g.len())]));
            }
            rows
        }
        None => (0..n).map(|_| rng.random_range(0..n)).collect(),
    }
}

/// Estimator callback used on each resample.
pub type ReplicateFn<'a> = dyn Fn(&Dataset) -> Result<DecompositionEstimate> + Sync + 'a;

/// Runs every estimator on the same `B` resamples. Entry `[k][b]` holds
/// `(tau, delta, zeta)` of estimator `k` on resample `b`, or `None` when it failed.
pub fn replicate_draws(
    data: &Dataset,
    spec: &RoleSpec,
    config: &BootstrapConfig,
    estimators: &[&ReplicateFn<'_>],
) -> Result<Vec<Vec<Option<[f64; 3]>>>> {
    config.validate()?;
    let (g0, g1) = group_rows(data, spec)?;
    let groups = config.stratified.then_some((g0.as_slice(), g1.as_slice()));
    let by_replicate: Vec<Vec<Option<[f64; 3]>>> = (0..config.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = split_rng(config.seed, b as u64);
            let rows = resample_rows(&mut rng, data.n_rows(), groups);
            let sample = data.select_rows(&rows);
            estimators
                .iter()
                .map(|f| {
                    f(&sample)
                        .ok()
                        .filter(|e| e.tau.is_finite() && e.delta.is_finite() && e.zeta.is_finite())
                        .map(|e| [e.tau, e.delta, e.zeta])
                })
                .collect()
        })
        .collect();
    Ok((0..estimators.len())
        .map(|k| by_replicate.iter().map(|r| r[k]).collect())
        .collect())
}

/// Percentile intervals from one estimator's replicate draws.
pub fn summarize_draws(point: DecompositionEstimate, draws: &[Option<[f64; 3]>], level: f64) -> Result<IntervalEstimate> {
    let ok: Vec<[f64; 3]> = draws.iter().flatten().copied().collect();
    let replicates = draws.len();
    let n_failed = replicates - ok.len();
    if ok.is_empty() {
        return Err(DecompError::Bootstrap(format!("all {replicates} replicates failed")));
    }
    let mut ci = [Interval { lower: 0.0, upper: 0.0 }; 3];
    for (j, slot) in ci.iter_mut().enumerate() {
        let mut v: Vec<f64> = ok.iter().map(|d| d[j]).collect();
        *slot = percentile_interval(&mut v, level)?;
    }
    Ok(IntervalEstimate {
        point,
        tau_ci: ci[0],
        delta_ci: ci[1],
        zeta_ci: ci[2],
        replicates,
        n_failed_replicates: n_failed,
        unreliable: n_failed * 10 >= replicates,
    })
}

/// Bootstraps an arbitrary estimator closure around a precomputed point estimate.
pub fn bootstrap_with<F>(
    data: &Dataset,
    spec: &RoleSpec,
    config: &BootstrapConfig,
    point: DecompositionEstimate,
    estimator: F,
) -> Result<IntervalEstimate>
where
    F: Fn(&Dataset) -> Result<DecompositionEstimate> + Sync,
{
    let draws = replicate_draws(data, spec, config, &[&estimator])?;
    summarize_draws(point, &draws[0], config.ci_level)
}

/// Point estimate plus percentile intervals for one estimator. A data-derived
/// reference point is recomputed on every resample.
pub fn bootstrap_ci(
    data: &Dataset,
    spec: &RoleSpec,
    reference: &ReferenceSource,
    id: EstimatorId,
    plan: &ModelPlan,
    options: &EstimateOptions,
    config: &BootstrapConfig,
) -> Result<IntervalEstimate> {
    let point = estimate(data, spec, reference, id, plan, options)?;
    bootstrap_with(data, spec, config, point, |d| estimate(d, spec, reference, id, plan, options))
}
