//! True effects and the exposure-mediator to mediator-outcome ratio.

use serde::{Deserialize, Serialize};

use super::dgp::generate_rows;
use super::{Coefficients, MediatorKind, ScenarioConfig};
use crate::bootstrap::mix_seed;
use crate::error::{DecompError, Result};
use crate::glm::expit;
use crate::quadrature::normal_expectation;

const POPULATION_SALT: u64 = 0x9090;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueEffects {
    pub delta_true: f64,
    pub zeta_true: f64,
    pub tau_true: f64,
    /// `delta_true / tau_true`.
    pub reduction_fraction: f64,
}

impl TrueEffects {
    fn new(delta: f64, zeta: f64) -> Self {
        let tau = delta + zeta;
        TrueEffects {
            delta_true: delta,
            zeta_true: zeta,
            tau_true: tau,
            reduction_fraction: delta / tau,
        }
    }
}

/// `E[M | R = r, C = c]`, marginalized over the confounder `S`. For a binary
/// mediator this integrates the logistic curve over the normal law of `S`.
pub fn mediator_mean(k: &Coefficients, kind: MediatorKind, r: f64, c: f64) -> f64 {
    let s_mean = k.a0 + k.a1 * r + k.a2 * c;
    let base = k.b0 + k.b1 * r + k.b2 * c;
    match kind {
        MediatorKind::Continuous => base + k.b3 * s_mean,
        MediatorKind::Binary => normal_expectation(s_mean, 1.0, |s| expit(base + k.b3 * s)),
    }
}

/// Exact effects at `C = reference_c`. The outcome equation is linear in `S`
/// and `M`, so the intervention mean only needs `E[S | R=1, c]` and `E[M | R=0, c]`:
/// `delta = (c3 + c4) (E[M|1,c] - E[M|0,c])` and `zeta = c1 + c2 a1 + c4 E[M|0,c]`.
pub fn true_effects(config: &ScenarioConfig) -> TrueEffects {
    let k = &config.coefficients;
    let c = config.reference_c;
    let m1 = mediator_mean(k, config.mediator_kind, 1.0, c);
    let m0 = mediator_mean(k, config.mediator_kind, 0.0, c);
    TrueEffects::new((k.c3 + k.c4) * (m1 - m0), k.c1 + k.c2 * k.a1 + k.c4 * m0)
}

/// Plug-in effects from a simulated population of `oracle_n` rows: empirical
/// group means at `C = reference_c` combined through the outcome equation.
pub fn population_effects(config: &ScenarioConfig, oracle_n: usize, seed: u64) -> Result<TrueEffects> {
    let k = &config.coefficients;
    let c = config.reference_c;
    let pop = generate_rows(config, oracle_n, mix_seed(seed, POPULATION_SALT), 0);
    let cols: Vec<&[f64]> = ["R", "C", "S", "M", "Y"]
        .iter()
        .map(|n| pop.column(n).expect("generated column"))
        .collect();
    // [count, sum Y, sum S, sum M] per group
    let mut acc = [[0.0f64; 4]; 2];
    for i in 0..pop.n_rows() {
        if cols[1][i] != c {
            continue;
        }
        let g = &mut acc[cols[0][i] as usize];
        g[0] += 1.0;
        g[1] += cols[4][i];
        g[2] += cols[2][i];
        g[3] += cols[3][i];
    }
    if acc[0][0] == 0.0 || acc[1][0] == 0.0 {
        return Err(DecompError::EmptyGroup(format!("no population rows with C = {c} in both groups")));
    }
    let mean = |g: usize, j: usize| acc[g][j] / acc[g][0];
    let intervention = k.c0 + k.c1 + k.c2 * mean(1, 2) + (k.c3 + k.c4) * mean(0, 3) + k.c5 * c;
    Ok(TrueEffects::new(mean(1, 1) - intervention, intervention - mean(0, 1)))
}

/// `|E[M|R=1,c] - E[M|R=0,c]| / |c3 + c4|`.
pub fn compute_ratio(config: &ScenarioConfig) -> Result<f64> {
    let k = &config.coefficients;
    let denom = (k.c3 + k.c4).abs();
    if denom < 1e-12 {
        return Err(DecompError::DegenerateRatio(
            "mediator has no effect on the outcome in the comparison group (c3 + c4 = 0)".into(),
        ));
    }
    let c = config.reference_c;
    let gap = mediator_mean(k, config.mediator_kind, 1.0, c) - mediator_mean(k, config.mediator_kind, 0.0, c);
    Ok(gap.abs() / denom)
}
