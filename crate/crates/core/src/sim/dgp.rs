//! Synthetic data generation.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{MediatorKind, ScenarioConfig};
use crate::bootstrap::{mix_seed, split_rng};
use crate::data::Dataset;
use crate::glm::expit;

/// Salt separating data-generation streams from other uses of the scenario seed.
const DATA_SALT: u64 = 0xD47A;

pub const COVARIATE_MEAN_COMPARISON: f64 = 50.0;
pub const COVARIATE_MEAN_REFERENCE: f64 = 48.0;
pub const COVARIATE_SD: f64 = 12.0;
pub const COVARIATE_SUPPORT: (f64, f64) = (25.0, 75.0);
pub const COVARIATE_CUT: f64 = 50.0;

/// Normal law restricted to `(lower, upper)`, sampled by inverting the CDF on
/// the truncated probability range.
#[derive(Debug, Clone)]
pub struct TruncatedNormal {
    normal: Normal,
    lower: f64,
    upper: f64,
    p_lower: f64,
    p_upper: f64,
}

impl TruncatedNormal {
    pub fn new(mean: f64, sd: f64, lower: f64, upper: f64) -> Self {
        let normal = Normal::new(mean, sd).expect("valid normal parameters");
        TruncatedNormal {
            p_lower: normal.cdf(lower),
            p_upper: normal.cdf(upper),
            normal,
            lower,
            upper,
        }
    }

    /// Maps a uniform draw `u` in `[0, 1)` to the truncated law.
    pub fn quantile(&self, u: f64) -> f64 {
        let p = self.p_lower + u * (self.p_upper - self.p_lower);
        self.normal.inverse_cdf(p).clamp(self.lower, self.upper)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Closed-form mean of a truncated normal.
pub fn truncated_normal_mean(mean: f64, sd: f64, lower: f64, upper: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let (a, b) = ((lower - mean) / sd, (upper - mean) / sd);
    mean + sd * (std.pdf(a) - std.pdf(b)) / (std.cdf(b) - std.cdf(a))
}

/// Dataset with columns `R, C, S, M, Y` for replicate `replicate_index`.
/// Depends only on the scenario seed and the replicate index.
pub fn generate_scenario_data(config: &ScenarioConfig, replicate_index: u64) -> Dataset {
    generate_rows(config, config.n, mix_seed(config.seed, DATA_SALT), replicate_index)
}

pub(crate) fn generate_rows(config: &ScenarioConfig, n: usize, seed: u64, stream: u64) -> Dataset {
    let k = &config.coefficients;
    let mut rng = split_rng(seed, stream);
    let (lo, hi) = COVARIATE_SUPPORT;
    let c_dist = [
        TruncatedNormal::new(COVARIATE_MEAN_REFERENCE, COVARIATE_SD, lo, hi),
        TruncatedNormal::new(COVARIATE_MEAN_COMPARISON, COVARIATE_SD, lo, hi),
    ];
    let mut cols: [Vec<f64>; 5] = std::array::from_fn(|_| Vec::with_capacity(n));
    for _ in 0..n {
        let r = f64::from(u8::from(rng.random::<f64>() < 0.5));
        let raw_c = c_dist[r as usize].sample(&mut rng);
        let c = if raw_c >= COVARIATE_CUT { 2.0 } else { 1.0 };
        let e_s: f64 = rng.sample(StandardNormal);
        let s = k.a0 + k.a1 * r + k.a2 * c + e_s;
        let eta_m = k.b0 + k.b1 * r + k.b2 * c + k.b3 * s;
        let m = match config.mediator_kind {
            MediatorKind::Continuous => eta_m + rng.sample::<f64, _>(StandardNormal),
            MediatorKind::Binary => f64::from(u8::from(rng.random::<f64>() < expit(eta_m))),
        };
        let e_y: f64 = rng.sample(StandardNormal);
        let y = k.c0 + k.c1 * r + k.c2 * s + k.c3 * m + k.c4 * r * m + k.c5 * c + e_y;
        for (col, v) in cols.iter_mut().zip([r, c, s, m, y]) {
            col.push(v);
        }
    }
    let names = ["R", "C", "S", "M", "Y"];
    Dataset::new(names.iter().map(|s| s.to_string()).zip(cols).collect()).expect("generated data are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_stays_in_support() {
        let t = TruncatedNormal::new(50.0, 12.0, 25.0, 75.0);
        assert!(t.quantile(0.0) >= 25.0);
        assert!(t.quantile(0.999_999_999) <= 75.0);
        assert!((t.quantile(0.5) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig::new(MediatorKind::Binary, 50, 1.0, 4);
        let a = generate_scenario_data(&cfg, 3);
        let b = generate_scenario_data(&cfg, 3);
        let c = generate_scenario_data(&cfg, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.column("M").unwrap().iter().all(|&m| m == 0.0 || m == 1.0));
        assert!(a.column("C").unwrap().iter().all(|&c| c == 1.0 || c == 2.0));
    }
}
