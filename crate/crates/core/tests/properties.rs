//! Randomized invariants across the modules.

mod common;

use common::{manifold, power_problem};
use pfeller::analysis::{compare_ordering, decay_limit, detect_compact_support, lambda_power_comparison};
use pfeller::classify::{classify, volume_ball, VerdictPolicy};
use pfeller::radial_solver::{
    minimal_exterior_solution, solve_annulus_bvp, ExhaustionOptions, ExteriorProblem, Grid, LambdaSpec,
    RadialSolution, SolveOptions,
};
use pfeller::warping::{parse_sigma, Family};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL_DEFAULT.to_vec())
}

fn exponent() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.5, 2.0, 3.0])
}

/// A nonnegative profile on a uniform grid of `[1, 5]`.
fn profile(values: Vec<f64>) -> RadialSolution {
    let grid = Grid::uniform(1.0, 5.0, values.len() - 1).unwrap();
    let prob = power_problem(Family::Euclidean, 3, 2.0, 1.0, 1.0);
    RadialSolution::sampled(&prob, grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn builtin_sigma_positive_and_log_consistent(f in family(), m in 1u32..5, t in 1e-3f64..30.0) {
        let man = manifold(f, m);
        let log = man.log_sigma_pow(t).unwrap();
        prop_assert!(man.sigma.log_sigma(t).unwrap().is_finite());
        let direct = man.sigma.sigma(t).powi(m as i32 - 1);
        if direct.is_normal() {
            prop_assert!(direct > 0.0);
            prop_assert!((log.exp() - direct).abs() <= 1e-10 * direct);
        }
    }

    #[test]
    fn derivative_matches_central_differences(a in 0.1f64..2.0, t in 0.05f64..3.0) {
        let w = parse_sigma(&format!("sinh({a}*t)/{a}")).unwrap();
        let h = 1e-5 * t.max(1.0);
        let fd = (w.sigma(t + h) - w.sigma(t - h)) / (2.0 * h);
        let exact = w.sigma_prime(t);
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
    }

    #[test]
    fn ball_volume_increasing_and_additive(f in family(), m in 2u32..4, r1 in 0.2f64..3.0, dr in 0.05f64..2.0) {
        let man = manifold(f, m);
        let v1 = volume_ball(&man, r1).unwrap();
        let v2 = volume_ball(&man, r1 + dr).unwrap();
        prop_assert!(v2 >= v1);
        // The shell volume from a direct Simpson rule on [r1, r1 + dr].
        let n = 20_000;
        let h = dr / n as f64;
        let g = |t: f64| man.log_sigma_pow(t).unwrap().exp();
        let mut s = g(r1) + g(r1 + dr);
        for i in 1..n {
            s += g(r1 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let shell = man.sphere_measure() * s * h / 3.0;
        prop_assert!(((v2 - v1) - shell).abs() <= 1e-7 * v2);
        // Strictly increasing wherever the shell is visible at this precision
        // (on the cusp it is not beyond r ~ 2.5).
        if shell > 1e-12 * v2 {
            prop_assert!(v2 > v1);
        }
    }

    #[test]
    fn ordering_reflexive_and_antisymmetric(
        base in prop::collection::vec(0.0f64..1.0, 17),
        bump in prop::collection::vec(0.0f64..1e-3, 17),
    ) {
        let u = profile(base.clone());
        let v = profile(base.iter().zip(&bump).map(|(a, b)| a + b).collect());
        let same = compare_ordering(&u, &u).unwrap();
        prop_assert!(same.holds);
        prop_assert_eq!(same.max_violation, 0.0);
        let up = compare_ordering(&u, &v).unwrap();
        prop_assert!(up.holds);
        let down = compare_ordering(&v, &u).unwrap();
        // Both directions hold only when the profiles agree to the slack.
        let gap = bump.iter().fold(0.0f64, |m, &b| m.max(b));
        prop_assert_eq!(down.holds, gap <= 1e-8);
    }

    #[test]
    fn decay_estimate_nonnegative_and_support_inside_grid(values in prop::collection::vec(0.0f64..1e-7, 33)) {
        let sol = profile(values);
        prop_assert!(decay_limit(&sol).limit_estimate >= -1e-12);
        let rep = detect_compact_support(&sol, 1e-8, 1e-8);
        if let Some(r) = rep.support_radius {
            prop_assert!(r >= sol.grid.first() && r <= sol.grid.last());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn classification_is_consistent(f in family(), m in 2u32..5, p in 1.2f64..4.0) {
        let report = classify(&manifold(f, m), p, &VerdictPolicy::default()).unwrap();
        prop_assert!(report.consistency_violations().is_empty(), "{:?}", report.consistency_violations());
    }

    #[test]
    fn discrete_maximum_principle(
        p in exponent(),
        lambda in 0.1f64..4.0,
        a in 0.0f64..2.0,
        b in 0.0f64..2.0,
        f in prop::sample::select(vec![Family::Euclidean, Family::Hyperbolic { kappa: -1.0 }]),
    ) {
        let prob = ExteriorProblem::new(
            manifold(f, 3),
            1.0,
            p,
            LambdaSpec::power_law(lambda, p - 1.0).unwrap(),
        )
        .unwrap()
        .with_inner_value(a)
        .unwrap();
        let grid = Grid::uniform(1.0, 3.0, 128).unwrap();
        let sol = solve_annulus_bvp(&prob, 2.0, b, &grid, &SolveOptions::default(), None).unwrap();
        let hi = a.max(b);
        prop_assert!(sol.values.iter().all(|&u| (0.0..=hi).contains(&u)));
    }

    #[test]
    fn exhaustion_is_monotone(
        p in exponent(),
        lambda in 0.2f64..3.0,
        f in prop::sample::select(vec![Family::Euclidean, Family::Hyperbolic { kappa: -1.0 }]),
        m in 2u32..4,
    ) {
        let prob = power_problem(f, m, p, lambda, p - 1.0);
        let sol = minimal_exterior_solution(&prob, &ExhaustionOptions::new(4.0, 256)).unwrap();
        let record = sol.exhaustion.unwrap();
        prop_assert!(record.monotone_violation <= 1e-10, "{}", record.monotone_violation);
    }

    #[test]
    fn larger_lambda_gives_smaller_solution(
        p in exponent(),
        l1 in 0.2f64..2.0,
        factor in 1.0f64..4.0,
        f in prop::sample::select(vec![Family::Euclidean, Family::Hyperbolic { kappa: -1.0 }]),
    ) {
        let opts = ExhaustionOptions::new(4.0, 256);
        let small = minimal_exterior_solution(&power_problem(f, 3, p, l1, p - 1.0), &opts).unwrap();
        let big = minimal_exterior_solution(&power_problem(f, 3, p, l1 * factor, p - 1.0), &opts).unwrap();
        prop_assert!(compare_ordering(&big, &small).unwrap().max_violation <= 1e-6);
        let power = lambda_power_comparison(&small, &big).unwrap();
        prop_assert!(power.max_violation <= 1e-6, "{:?}", power);
    }
}
