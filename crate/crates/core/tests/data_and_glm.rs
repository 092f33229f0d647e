mod common;

use causal_decomp::data::{center_covariates, default_reference, split_by_group};
use causal_decomp::glm::{fit_linear, fit_logistic, ModelFormula, Term};
use causal_decomp::{Dataset, ReferencePoint, RoleSpec, Variable, VariableKind};
use common::dataset;
use proptest::prelude::*;

#[test]
fn default_reference_mean_and_mode() {
    let data = dataset(vec![
        ("R", vec![0.0, 1.0, 1.0]),
        ("C1", vec![49.0, 51.0, 50.0]),
        ("C2", vec![1.0, 1.0, 2.0]),
        ("Y", vec![0.0, 1.0, 2.0]),
    ]);
    let spec = RoleSpec::new("R", "Y")
        .covariate(Variable::continuous("C1"))
        .covariate(Variable::new("C2", VariableKind::Categorical));
    let r = default_reference(&data, &spec).unwrap();
    assert_eq!(r.get("C1"), Some(50.0));
    assert_eq!(r.get("C2"), Some(1.0));

    let bare = RoleSpec::new("R", "Y");
    assert!(default_reference(&data, &bare).unwrap().values.is_empty());
}

fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_bit_exact(a in prop::collection::vec(finite_f64(), 1..30), seed in any::<u64>()) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * 0.1 + i as f64 + (seed % 7) as f64).collect();
        let data = dataset(vec![("A", a.clone()), ("B", b.clone())]);
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        for (x, y) in back.column("A").unwrap().iter().zip(&a) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in back.column("B").unwrap().iter().zip(&b) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn centering_twice_is_idempotent(c in prop::collection::vec(-100.0..100.0f64, 2..40), refv in -50.0..50.0f64) {
        let n = c.len();
        let r: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let data = dataset(vec![("R", r), ("C", c), ("Y", vec![0.0; n])]);
        let spec = RoleSpec::new("R", "Y").covariate(Variable::continuous("C"));
        let once = center_covariates(&data, &spec, &ReferencePoint::new([("C", refv)])).unwrap().data;
        let twice = center_covariates(&once, &spec, &ReferencePoint::new([("C", 0.0)])).unwrap().data;
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn groups_partition_the_rows(r in prop::collection::vec(prop::bool::ANY, 2..80)) {
        prop_assume!(r.iter().any(|&x| x) && r.iter().any(|&x| !x));
        let n = r.len();
        let rv: Vec<f64> = r.iter().map(|&x| f64::from(u8::from(x))).collect();
        let data = dataset(vec![("R", rv), ("Y", (0..n).map(|i| i as f64).collect())]);
        let spec = RoleSpec::new("R", "Y");
        let (d0, d1) = split_by_group(&data, &spec).unwrap();
        prop_assert_eq!(d0.n_rows() + d1.n_rows(), n);
        prop_assert!(d0.column("R").unwrap().iter().all(|&x| x == 0.0));
        prop_assert!(d1.column("R").unwrap().iter().all(|&x| x == 1.0));
    }
}

// Weighted least squares by hand: build the 3x3 normal equations and solve with Cramer's rule.
#[test]
fn six_point_normal_equations() {
    let x1 = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
    let x2 = [1.0, -1.0, 0.5, 2.0, -0.5, 1.5];
    let y = [1.1, 2.9, 4.2, 7.8, 8.1, 11.6];
    let w = [1.0, 2.0, 0.5, 1.5, 1.0, 3.0];
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for i in 0..6 {
        let row = [1.0, x1[i], x2[i]];
        for j in 0..3 {
            b[j] += w[i] * row[j] * y[i];
            for k in 0..3 {
                a[j][k] += w[i] * row[j] * row[k];
            }
        }
    }
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let want: Vec<f64> = (0..3)
        .map(|j| {
            let mut m = a;
            for (r, row) in m.iter_mut().enumerate() {
                row[j] = b[r];
            }
            det(m) / d
        })
        .collect();
    let data = dataset(vec![("x1", x1.to_vec()), ("x2", x2.to_vec()), ("y", y.to_vec())]);
    let f = ModelFormula::mains("y", &["x1", "x2"]).unwrap();
    let fit = fit_linear(&data, &f, Some(&w)).unwrap();
    for (got, want) in fit.coefficients.iter().zip(&want) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

fn loglik(x: &[f64], y: &[f64], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&x, &y)| {
            let eta = b0 + b1 * x;
            y * eta - (1.0 + eta.exp()).ln()
        })
        .sum()
}

// Brute-force maximizer: scan a lattice, then shrink it around the best point.
#[test]
fn eight_point_logistic_matches_likelihood_lattice() {
    let x = [-2.0, -1.5, -0.5, 0.0, 0.5, 1.0, 1.5, 2.5];
    let y = [0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0];
    let (mut c0, mut c1, mut half) = (0.0, 0.0, 4.0);
    while half > 1e-6 {
        let steps = 40;
        let mut best = (f64::NEG_INFINITY, c0, c1);
        for i in 0..=steps {
            for j in 0..=steps {
                let b0 = c0 - half + 2.0 * half * i as f64 / steps as f64;
                let b1 = c1 - half + 2.0 * half * j as f64 / steps as f64;
                let l = loglik(&x, &y, b0, b1);
                if l > best.0 {
                    best = (l, b0, b1);
                }
            }
        }
        (c0, c1) = (best.1, best.2);
        half /= 4.0;
    }
    let data = dataset(vec![("x", x.to_vec()), ("y", y.to_vec())]);
    let fit = fit_logistic(&data, &ModelFormula::mains("y", &["x"]).unwrap()).unwrap();
    assert!(fit.converged);
    assert!((fit.coefficients[0] - c0).abs() < 1e-4, "{} vs {c0}", fit.coefficients[0]);
    assert!((fit.coefficients[1] - c1).abs() < 1e-4, "{} vs {c1}", fit.coefficients[1]);
}

fn design(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut g = common::rng(seed);
    let x1: Vec<f64> = (0..n).map(|_| common::normal(&mut g)).collect();
    let x2: Vec<f64> = (0..n).map(|_| common::normal(&mut g)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 0.5 + x1[i] - 0.7 * x2[i] + 0.3 * x1[i] * x2[i] + common::normal(&mut g))
        .collect();
    (x1, x2, y)
}

fn interaction_formula(response: &str) -> ModelFormula {
    ModelFormula::new(
        response,
        vec![Term::main("x1"), Term::main("x2"), Term::interaction("x1", "x2")],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weighted_residuals_are_orthogonal(seed in any::<u64>(), n in 8usize..60) {
        let (x1, x2, y) = design(n, seed);
        let mut g = common::rng(seed ^ 1);
        let w: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut g, 0.1..3.0)).collect();
        let data = dataset(vec![("x1", x1.clone()), ("x2", x2.clone()), ("y", y.clone())]);
        let fit = fit_linear(&data, &interaction_formula("y"), Some(&w)).unwrap();
        let fitted = fit.mean_response(&data, &[]).unwrap();
        for col in [vec![1.0; n], x1.clone(), x2.clone(), x1.iter().zip(&x2).map(|(a, b)| a * b).collect()] {
            let dot: f64 = (0..n).map(|i| w[i] * col[i] * (y[i] - fitted[i])).sum();
            let scale: f64 = (0..n).map(|i| (w[i] * col[i] * y[i]).abs()).sum::<f64>().max(1.0);
            prop_assert!(dot.abs() < 1e-9 * scale, "{}", dot);
        }
    }

    #[test]
    fn equal_weights_match_unweighted(seed in any::<u64>(), n in 8usize..60, c in 0.1..10.0f64) {
        let (x1, x2, y) = design(n, seed);
        let data = dataset(vec![("x1", x1), ("x2", x2), ("y", y)]);
        let f = interaction_formula("y");
        let a = fit_linear(&data, &f, None).unwrap();
        let b = fit_linear(&data, &f, Some(&vec![c; n])).unwrap();
        for (p, q) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!((p - q).abs() < 1e-9 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn affine_response_transform(seed in any::<u64>(), n in 8usize..60, k in -5.0..5.0f64, s in 0.2..5.0f64) {
        let (x1, x2, y) = design(n, seed);
        let y2: Vec<f64> = y.iter().map(|v| k + s * v).collect();
        let data = dataset(vec![("x1", x1), ("x2", x2), ("y", y), ("y2", y2)]);
        let a = fit_linear(&data, &interaction_formula("y"), None).unwrap();
        let b = fit_linear(&data, &interaction_formula("y2"), None).unwrap();
        prop_assert!((b.coefficients[0] - (k + s * a.coefficients[0])).abs() < 1e-8);
        for j in 1..4 {
            prop_assert!((b.coefficients[j] - s * a.coefficients[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn logistic_score_equations_vanish(seed in any::<u64>()) {
        let n = 200;
        let mut g = common::rng(seed);
        let x: Vec<f64> = (0..n).map(|_| common::normal(&mut g)).collect();
        let y: Vec<f64> = x.iter().map(|&v| common::bernoulli(&mut g, causal_decomp::glm::expit(0.3 - 0.8 * v))).collect();
        prop_assume!(y.iter().any(|&v| v == 1.0) && y.iter().any(|&v| v == 0.0));
        let data = dataset(vec![("x", x.clone()), ("y", y.clone())]);
        let fit = fit_logistic(&data, &ModelFormula::mains("y", &["x"]).unwrap()).unwrap();
        let p = fit.mean_response(&data, &[]).unwrap();
        let s0: f64 = (0..n).map(|i| y[i] - p[i]).sum();
        let s1: f64 = (0..n).map(|i| x[i] * (y[i] - p[i])).sum();
        prop_assert!(s0.abs() < 1e-6 && s1.abs() < 1e-6, "{} {}", s0, s1);
    }
}
