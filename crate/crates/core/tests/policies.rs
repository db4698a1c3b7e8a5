use banditlab::harness::simulate;
use banditlab::policies::{PolicyRegistry, PolicySpec, SarpConfig};
use banditlab::{BanditInstance, Branch, Error, RngStream, RunHistory};

fn staircase() -> BanditInstance {
    BanditInstance::new(
        (0..8).map(|i| 0.5 * i as f64).collect(),
        vec![1., 1., 2., 2., 3., 3., 4., 4.],
    )
    .unwrap()
}

fn run(spec: PolicySpec, inst: &BanditInstance, n: usize, seed: u64) -> RunHistory {
    let reg = PolicyRegistry::with_builtins();
    let f = reg.build(&spec, inst, n, Some(0.5)).unwrap();
    let mut p = f.instantiate();
    simulate(inst, p.as_mut(), n, &RngStream::derive(seed, 0))
}

fn check_history(h: &RunHistory, n: usize) {
    assert_eq!(h.len(), n);
    assert_eq!(h.counts().iter().sum::<usize>(), n);
    for (i, &c) in h.counts().iter().enumerate() {
        assert_eq!(h.records().iter().filter(|r| r.arm == i).count(), c);
    }
    for (j, r) in h.records().iter().enumerate() {
        assert_eq!(r.t, j + 1);
        assert!(r.assign_prob > 0.0 && r.assign_prob <= 1.0, "{r:?}");
    }
}

#[test]
fn histories_satisfy_invariants_for_every_policy() {
    let inst = staircase();
    for kind in ["uniform", "sarp", "narp", "oracle"] {
        let h = run(PolicySpec::new(kind), &inst, 500, 1);
        check_history(&h, 500);
    }
    let h = run(
        PolicySpec {
            pilot: Some(40),
            ..PolicySpec::new("two-stage-an")
        },
        &inst,
        500,
        1,
    );
    check_history(&h, 500);
    for r in h.records() {
        assert_eq!(r.branch == Branch::Pilot, r.t <= 40);
    }
}

#[test]
fn sarp_branches_and_exploration_share() {
    let inst = staircase();
    let n = 20_000;
    let h = run(PolicySpec::new("sarp"), &inst, n, 2);
    for r in &h.records()[..8] {
        assert_eq!((r.arm, r.branch, r.assign_prob), (r.t - 1, Branch::Warmup, 1.0));
    }
    assert!(h.records()[8..].iter().all(|r| matches!(r.branch, Branch::Explore | Branch::Exploit)));
    let cfg = SarpConfig::uniform(8, 1.0);
    let expected: f64 = (9..=n).map(|t| cfg.explore_probability(t)).sum();
    let explored = h.records().iter().filter(|r| r.branch == Branch::Explore).count() as f64;
    // binomial-like count, sd below sqrt(expected)
    assert!((explored - expected).abs() < 4.0 * expected.sqrt(), "{explored} vs {expected}");
    assert!((cfg.explore_probability(1000) - 0.1).abs() < 1e-12);
}

#[test]
fn narp_forced_exploration_floor() {
    let inst = staircase();
    let (m0, alpha, k) = (2usize, 1.0f64, 8usize);
    let c = ((m0 * k) as f64).sqrt();
    for seed in 0..20 {
        let h = run(PolicySpec::new("narp"), &inst, 3000, seed);
        let mut counts = vec![0usize; k];
        for r in h.records() {
            counts[r.arm] += 1;
            let floor = alpha * (r.t as f64).sqrt() - c;
            assert!(*counts.iter().min().unwrap() as f64 >= floor, "seed {seed} t {}", r.t);
        }
    }
}

#[test]
fn narp_warmup_is_round_robin() {
    let h = run(PolicySpec::new("narp"), &staircase(), 100, 3);
    for r in &h.records()[..16] {
        assert_eq!(r.arm, (r.t - 1) % 8);
        assert_eq!(r.branch, Branch::Warmup);
    }
}

#[test]
fn same_seed_same_history() {
    for kind in ["uniform", "sarp", "narp", "oracle"] {
        let a = run(PolicySpec::new(kind), &staircase(), 300, 9);
        let b = run(PolicySpec::new(kind), &staircase(), 300, 9);
        assert_eq!(a, b, "{kind}");
    }
}

#[test]
fn registry_selects_by_name() {
    let reg = PolicyRegistry::with_builtins();
    let names: Vec<&str> = reg.names().collect();
    for n in ["forcing-balance", "narp", "oracle", "sarp", "two-stage-an", "uniform"] {
        assert!(names.contains(&n), "{n}");
    }
    let inst = staircase();
    assert_eq!(
        reg.build(&PolicySpec::new("forcing-balance"), &inst, 10, None).unwrap_err(),
        Error::ReservedPolicy("forcing-balance".into())
    );
    assert!(matches!(
        reg.build(&PolicySpec::new("epsilon-greedy"), &inst, 10, None),
        Err(Error::Unknown { .. })
    ));
    assert!(reg.build(&PolicySpec::new("narp"), &inst, 10, None).is_err());
    let bad = PolicySpec {
        m0: Some(3),
        ..PolicySpec::new("sarp")
    };
    assert!(matches!(reg.build(&bad, &inst, 10, None), Err(Error::Validation(_))));
}
