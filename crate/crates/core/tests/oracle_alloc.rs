use banditlab::oracle::{joint_objective, kkt_residual, oracle_rate_curve, solve_oracle, JointProblem, DEFAULT_TOL};
use banditlab::BanditInstance;
use proptest::prelude::*;

fn staircase() -> BanditInstance {
    BanditInstance::new(
        (0..8).map(|i| 0.5 * i as f64).collect(),
        vec![1., 1., 2., 2., 3., 3., 4., 4.],
    )
    .unwrap()
}

/// Minimizes `f` on `[a, b]` by golden-section search.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > 1e-12 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    (a + b) / 2.0
}

#[test]
fn two_arm_matches_brute_force() {
    for (sig, delta, lambda, n) in [
        ([1.0, 2.0], 0.5, 0.5, 100),
        ([3.0, 1.0], 1.0, 0.3, 1000),
        ([1.0, 1.0], 0.1, 0.8, 50),
        ([0.5, 4.0], 2.0, 0.5, 100_000),
    ] {
        let prob = JointProblem::new(sig.to_vec(), vec![0.0, delta], lambda, n).unwrap();
        let sol = solve_oracle(&prob, DEFAULT_TOL).unwrap();
        let f = |q: f64| joint_objective(&prob, &[1.0 - q, q]).unwrap();
        let q = golden_section(f, 1e-12, 1.0 - 1e-12);
        assert!((sol.p_star[1] - q).abs() < 1e-6, "{sig:?} {delta}: {} vs {q}", sol.p_star[1]);
        assert!(sol.objective_value <= f(q) + 1e-12);
    }
}

#[test]
fn asymptotic_allocation_at_large_horizon() {
    let n = 1_000_000usize;
    let lambda = 0.5;
    let prob = JointProblem::from_instance(&staircase(), lambda, n).unwrap();
    let sol = solve_oracle(&prob, DEFAULT_TOL).unwrap();
    for i in 0..7 {
        let d = prob.deltas()[i];
        let s = prob.sigmas()[i];
        let approx = (lambda * s / (2.0 * (1.0 - lambda) * d)).powf(2.0 / 3.0) * (n as f64).powf(-1.0 / 3.0);
        let rel = (sol.p_star[i] / approx - 1.0).abs();
        assert!(rel < 0.05, "arm {i}: {} vs {approx}", sol.p_star[i]);
    }
}

#[test]
fn objective_decays_like_cube_root() {
    let prob = JointProblem::from_instance(&staircase(), 0.5, 1000).unwrap();
    let curve = oracle_rate_curve(&prob, &[10_000, 100_000, 1_000_000, 10_000_000]).unwrap();
    let slope = (curve[3].objective / curve[2].objective).log10();
    assert!((slope + 1.0 / 3.0).abs() < 0.02, "slope {slope}");
    assert!(curve.windows(2).all(|w| w[1].p_best > w[0].p_best));
}

#[test]
fn tied_best_arms_rejected() {
    let inst = BanditInstance::new(vec![1.0, 1.0, 0.0], vec![1.0; 3]).unwrap();
    assert!(JointProblem::from_instance(&inst, 0.5, 100).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn solver_certificates(
        sig in prop::collection::vec(0.1f64..10.0, 2..12),
        gaps in prop::collection::vec(0.01f64..5.0, 11),
        lambda in 0.05f64..0.95,
        n in 10usize..10_000_000,
    ) {
        let k = sig.len();
        let mut deltas = vec![0.0];
        deltas.extend_from_slice(&gaps[..k - 1]);
        let prob = JointProblem::new(sig, deltas, lambda, n).unwrap();
        let sol = solve_oracle(&prob, DEFAULT_TOL).unwrap();
        let mass: f64 = sol.p_star.iter().sum();
        prop_assert!((mass - 1.0).abs() <= 1e-12, "mass {}", mass);
        prop_assert!(sol.kkt_residual <= 1e-8, "kkt {}", sol.kkt_residual);
        prop_assert!(kkt_residual(&prob, &sol.p_star, sol.alpha_star) <= 1e-8);
        prop_assert!(sol.alpha_star < 0.0);
        // no coordinate move along the simplex improves the objective
        let base = joint_objective(&prob, &sol.p_star).unwrap();
        for i in 1..k {
            let mut q = sol.p_star.clone();
            let eps = 1e-4 * q[i].min(q[0]);
            q[i] += eps;
            q[0] -= eps;
            prop_assert!(joint_objective(&prob, &q).unwrap() >= base - 1e-12);
        }
    }
}
