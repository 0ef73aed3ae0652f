mod common;

use common::*;
use spectral_psr::eval::SweepSource;
use spectral_psr::{
    brute_force_distribution, convergence_sweep, exact_moments, l1_error, learn_psr, RankSpec, SweepConfig,
};

#[test]
fn exact_psr_tables_match_hmm_tables() {
    for seed in 0..5 {
        let params = random_hmm(3, 5, 70 + seed);
        let model = learn_psr(&exact_moments(&params), RankSpec::Explicit(3)).unwrap();
        let psr = brute_force_distribution(&model, 4).unwrap();
        let hmm = brute_force_distribution(&params, 4).unwrap();
        assert!((psr.total() - 1.0).abs() < 1e-8);
        assert!((hmm.total() - 1.0).abs() < 1e-10);
        assert!(l1_error(&psr, &hmm).unwrap() < 1e-8);
    }
}

#[test]
fn exact_source_is_exact_at_every_size() {
    let params = random_hmm(2, 4, 1);
    let mut config = SweepConfig::new(vec![10, 100, 1000], vec![0, 1, 2], 3);
    config.source = SweepSource::Exact;
    let report = convergence_sweep(&params, &config).unwrap();
    assert_eq!(report.records.len(), 9);
    for r in &report.records {
        assert!(r.l1_error < 1e-8);
        assert!(!r.degenerate);
    }
}

#[test]
fn tiny_samples_are_recorded_not_fatal() {
    let params = random_hmm(4, 4, 2);
    let config = SweepConfig::new(vec![10], (0..20).collect(), 3);
    let report = convergence_sweep(&params, &config).unwrap();
    assert_eq!(report.records.len(), 20);
    assert!(report.records.iter().any(|r| r.degenerate));
    assert!(report.records.iter().all(|r| r.l1_error.is_finite()));
    assert_eq!(report.summary.len(), 1);
}

#[test]
fn sweep_is_deterministic() {
    let params = random_hmm(2, 3, 9);
    let config = SweepConfig::new(vec![50, 500], vec![3, 4, 5], 2);
    let a = convergence_sweep(&params, &config).unwrap();
    let b = convergence_sweep(&params, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.detail_csv(), b.detail_csv());
    assert!(a.detail_csv().starts_with("N,seed,l1_error,degenerate_flag\n"));
    assert!(a.summary_csv().starts_with("N,median_l1,q25,q75\n"));
    assert_eq!(a.detail_csv().lines().count(), 7);
}
