use banditlab::estimators::decomposition::{mse_decomposition_ht, mse_decomposition_pcipw, TwoStageDesign};
use banditlab::estimators::{ht_estimate, pcipw_estimate, pilot_summary, sample_means};
use banditlab::harness::simulate;
use banditlab::policies::{SecondStage, TwoStageNeyman};
use banditlab::stats::Estimate;
use banditlab::{BanditInstance, RngStream};

fn within(e: Estimate, target: f64, k: f64) -> bool {
    (e.value - target).abs() <= k * e.se
}

fn biases(inst: &BanditInstance, pilot: usize, horizon: usize, stage: SecondStage, reps: u64) -> (Vec<Estimate>, Vec<Estimate>) {
    let k = inst.num_arms();
    let policy = TwoStageNeyman::new(k, pilot, stage).unwrap();
    let mut pc = vec![Vec::new(); k];
    let mut ht = vec![Vec::new(); k];
    for r in 0..reps {
        let mut p = policy.clone();
        let h = simulate(inst, &mut p, horizon, &RngStream::derive(77, r));
        let s = pilot_summary(&h, pilot).unwrap();
        let a = pcipw_estimate(&h, &s).unwrap();
        let b = ht_estimate(&h).unwrap();
        for i in 0..k {
            pc[i].push(a.estimates[i] - inst.means()[i]);
            ht[i].push(b.estimates[i] - inst.means()[i]);
        }
    }
    let f = |v: Vec<Vec<f64>>| v.iter().map(|x| Estimate::from_samples(x)).collect();
    (f(pc), f(ht))
}

#[test]
fn pcipw_and_ht_unbiased_under_plug_in_allocation() {
    let inst = BanditInstance::new(vec![1.0, -2.0], vec![1.0, 4.0]).unwrap();
    let (pc, ht) = biases(&inst, 8, 40, SecondStage::PlugInNeyman, 100_000);
    for i in 0..2 {
        assert!(within(pc[i], 0.0, 3.0), "pcipw arm {i}: {:?}", pc[i]);
        assert!(within(ht[i], 0.0, 3.0), "ht arm {i}: {:?}", ht[i]);
    }
}

#[test]
fn pcipw_unbiased_under_fixed_allocation() {
    let inst = BanditInstance::new(vec![0.5, 3.0, 1.0], vec![2.0, 1.0, 1.0]).unwrap();
    let (pc, _) = biases(&inst, 9, 60, SecondStage::Fixed(vec![0.5, 0.25, 0.25]), 20_000);
    for (i, b) in pc.iter().enumerate() {
        assert!(within(*b, 0.0, 3.5), "arm {i}: {b:?}");
    }
}

#[test]
fn full_pilot_reduces_to_balanced_sample_means() {
    let inst = BanditInstance::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
    for r in 0..20 {
        let mut p = TwoStageNeyman::new(3, 30, SecondStage::PlugInNeyman).unwrap();
        let h = simulate(&inst, &mut p, 30, &RngStream::derive(5, r));
        let s = pilot_summary(&h, 30).unwrap();
        let a = pcipw_estimate(&h, &s).unwrap();
        let (m, missing) = sample_means(&h, 0.0);
        assert!(missing.is_empty());
        assert_eq!(h.counts(), &[10, 10, 10]);
        for i in 0..3 {
            assert!((a.estimates[i] - m.estimates[i]).abs() < 1e-12);
        }
    }
}

fn design(pilot: usize, horizon: usize, stage: SecondStage) -> TwoStageDesign {
    TwoStageDesign {
        pilot,
        horizon,
        second_stage: stage,
    }
}

#[test]
fn pcipw_decomposition_totals_match_direct_mse() {
    let inst = BanditInstance::new(vec![2.0, -1.0, 0.0, 5.0], vec![1.0, 1.0, 1.0, 5.0]).unwrap();
    let r = mse_decomposition_pcipw(&inst, &design(16, 200, SecondStage::PlugInNeyman), 20_000, 3).unwrap();
    for (i, a) in r.per_arm.iter().enumerate() {
        assert!(within(a.identity_gap, 0.0, 3.0), "arm {i}: {:?}", a.identity_gap);
        assert!(a.interaction.value >= 0.0 && a.adaptive_variance.value > 0.0);
    }
}

#[test]
fn ht_decomposition_totals_match_direct_mse() {
    let inst = BanditInstance::new(vec![2.0, -1.0, 0.5], vec![1.0, 2.0, 3.0]).unwrap();
    let r = mse_decomposition_ht(&inst, &design(12, 120, SecondStage::PlugInNeyman), 20_000, 4).unwrap();
    for (i, a) in r.per_arm.iter().enumerate() {
        assert!(within(a.identity_gap, 0.0, 3.0), "arm {i}: {:?}", a.identity_gap);
        assert_eq!(a.interaction.value, 0.0);
    }
}

#[test]
fn fixed_uniform_second_stage_interaction_expectation() {
    // E[(mu - pilot mean)^2] (1/p - 1) N2/N^2 with p = 1/K, pilot mean of N1/K draws
    let (k, n1, n) = (4usize, 20usize, 100usize);
    let sig = [1.0, 2.0, 0.5, 3.0];
    let inst = BanditInstance::new(vec![0.0; 4], sig.to_vec()).unwrap();
    let r = mse_decomposition_pcipw(&inst, &design(n1, n, SecondStage::Fixed(vec![0.25; 4])), 40_000, 6).unwrap();
    let n2 = (n - n1) as f64;
    for (i, (a, s)) in r.per_arm.iter().zip(sig).enumerate() {
        let expected = n2 * (k as f64 - 1.0) * k as f64 * s * s / (n1 as f64 * (n * n) as f64);
        assert!(within(a.interaction, expected, 3.0), "arm {i}: {:?} vs {expected}", a.interaction);
        let expected_pilot = (n1 as f64 / n as f64).powi(2) * s * s * k as f64 / n1 as f64;
        assert!(within(a.pilot, expected_pilot, 3.0));
    }
}
