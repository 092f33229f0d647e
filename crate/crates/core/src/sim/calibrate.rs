//! Scenario calibration to a target ratio and reduction fraction.
//!
//! The reduction of the base configuration is held fixed. Writing `g` for the
//! mediator gap `E[M|1,c] - E[M|0,c]`, the reduction is `(c3 + c4) g` and the
//! ratio is `|g| / |c3 + c4|`, so a ratio `r` at reduction `d` needs
//! `|g| = sqrt(|d| r)`. `b1` is bisected to that gap, `c3` then follows from
//! `d / g - c4`, and `c1` is solved in closed form for the reduction fraction
//! since the remaining disparity is linear in it.

use super::truth::{mediator_mean, true_effects};
use super::ScenarioConfig;
use crate::error::{DecompError, Result};

const B1_BOUNDS: (f64, f64) = (-10.0, 10.0);
const BISECTION_TOLERANCE: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

/// Adjusts `b1`, `c3` and `c1` so that the scenario has ratio `target_ratio`
/// and `delta / tau = target_reduction`, keeping the base reduction `delta`.
pub fn calibrate_scenario(base: &ScenarioConfig, target_ratio: f64, target_reduction: f64) -> Result<ScenarioConfig> {
    base.validate()?;
    if !(target_ratio > 0.0 && target_ratio.is_finite()) {
        return Err(DecompError::Calibration("target ratio must be positive".into()));
    }
    if !(target_reduction.is_finite() && target_reduction != 0.0) {
        return Err(DecompError::Calibration("target reduction fraction must be nonzero".into()));
    }
    let kind = base.mediator_kind;
    let c = base.reference_c;
    let base_truth = true_effects(base);
    let delta = base_truth.delta_true;
    if delta.abs() < 1e-12 {
        return Err(DecompError::Calibration("base configuration has no mediated reduction".into()));
    }
    let mut cfg = base.clone();
    let m0 = mediator_mean(&cfg.coefficients, kind, 0.0, c);
    let base_gap = mediator_mean(&cfg.coefficients, kind, 1.0, c) - m0;
    let target_gap = (delta.abs() * target_ratio).sqrt() * if base_gap < 0.0 { -1.0 } else { 1.0 };

    let gap_at = |b1: f64| {
        let mut k = cfg.coefficients;
        k.b1 = b1;
        mediator_mean(&k, kind, 1.0, c) - m0 - target_gap
    };
    let (mut lo, mut hi) = B1_BOUNDS;
    let (f_lo, f_hi) = (gap_at(lo), gap_at(hi));
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        return Err(DecompError::Calibration(format!(
            "mediator gap {target_gap:.4} is not attainable with b1 in [{lo}, {hi}]"
        )));
    }
    let increasing = f_hi > f_lo;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f = gap_at(mid);
        if (f > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < BISECTION_TOLERANCE {
            break;
        }
    }
    let k = &mut cfg.coefficients;
    k.b1 = 0.5 * (lo + hi);
    let gap = mediator_mean(k, kind, 1.0, c) - m0;
    k.c3 = delta / gap - k.c4;
    let zeta = delta * (1.0 - target_reduction) / target_reduction;
    k.c1 = zeta - k.c2 * k.a1 - k.c4 * m0;
    cfg.target_ratio = target_ratio;
    Ok(cfg)
}
