//! Trapezoid-rule expectations under a normal law.

/// Grid half-width in standard deviations.
const HALF_WIDTH: f64 = 8.0;
/// Grid spacing in standard deviations. The trapezoid rule converges
/// geometrically for Gaussian-weighted analytic integrands, so this is far
/// below double-precision round-off for smooth integrands.
const STEP: f64 = 0.25;

/// Standardized nodes and weights (weights sum to one) for `E[f(Z)]`, `Z ~ N(0, 1)`.
pub fn standard_normal_nodes() -> Vec<(f64, f64)> {
    let k = (HALF_WIDTH / STEP).round() as i64;
    let mut nodes: Vec<(f64, f64)> = (-k..=k)
        .map(|i| {
            let z = i as f64 * STEP;
            (z, (-0.5 * z * z).exp())
        })
        .collect();
    // End points carry half weight; their density is ~1e-14 so this is cosmetic.
    nodes[0].1 *= 0.5;
    let last = nodes.len() - 1;
    nodes[last].1 *= 0.5;
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for n in &mut nodes {
        n.1 /= total;
    }
    nodes
}

/// `E[f(X)]` for `X ~ N(mean, sd^2)`; `sd = 0` evaluates `f(mean)`.
pub fn normal_expectation(mean: f64, sd: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    if sd == 0.0 {
        return f(mean);
    }
    standard_normal_nodes()
        .into_iter()
        .map(|(z, w)| w * f(mean + sd * z))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        assert!((normal_expectation(1.5, 2.0, |x| x) - 1.5).abs() < 1e-12);
        assert!((normal_expectation(0.0, 2.0, |x| x * x) - 4.0).abs() < 1e-10);
        assert_eq!(normal_expectation(3.0, 0.0, |x| x * 2.0), 6.0);
    }

    #[test]
    fn logistic_normal_symmetry() {
        let v = normal_expectation(0.0, 1.7, crate::glm::expit);
        assert!((v - 0.5).abs() < 1e-14);
    }
}
