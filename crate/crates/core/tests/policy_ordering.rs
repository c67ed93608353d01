//! Ordering sanity across the policy family on a reference instance.
//!
//! Arm 1 is a single point mass, arm 2 a four-mode point-mass mixture,
//! so the optimal split is (0.2, 0.8) with loss 0.2 while the best
//! single arm pays 0.25. The informed mixture oracle must beat the
//! learners, and the learners must beat the best single arm, with gaps
//! that clear three standard errors of the paired per-seed differences.

use mixture_ucb::bandit::PolicyConfig;
use mixture_ucb::harness::{
    run_experiment, ConfidenceSection, ExperimentConfig, ExportFormat, LossSection, RunSection,
};
use mixture_ucb::kernel::KernelSpec;
use mixture_ucb::score::MetricKind;
use mixture_ucb::SourceSpec;

fn paired_gap(worse: &[f64], better: &[f64]) -> (f64, f64) {
    let diffs: Vec<f64> = worse.iter().zip(better).map(|(w, b)| w - b).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn informed_oracle_beats_learners_beat_single_arm() {
    let config = ExperimentConfig {
        run: RunSection {
            rounds: 2000,
            base_seed: 5,
            num_seeds: 10,
            oracle_samples: 2000,
            output_dir: "out".into(),
            format: ExportFormat::Csv,
        },
        arms: vec![
            SourceSpec::point_mass(vec![0.0]),
            SourceSpec::point_mass_mixture(vec![
                vec![100.0],
                vec![150.0],
                vec![200.0],
                vec![250.0],
            ]),
        ],
        loss: LossSection {
            metric: MetricKind::Rke,
            kernel: KernelSpec::gaussian(1.0).unwrap(),
            reference: None,
            lambda: None,
            k_nn: None,
        },
        confidence: ConfidenceSection::default(),
        policies: vec![
            PolicyConfig::mixture_oracle(vec![0.2, 0.8]),
            PolicyConfig::cab(),
            PolicyConfig::ogd(),
            PolicyConfig::one_arm_oracle(2),
        ],
        validation: None,
    };

    let result = run_experiment(&config).unwrap();
    assert!((result.oracle.weights[0] - 0.2).abs() < 0.02);
    assert!((result.oracle.loss - 0.2).abs() < 0.01);

    let losses: Vec<Vec<f64>> = (0..4)
        .map(|p| {
            result.runs[p * 10..(p + 1) * 10]
                .iter()
                .map(|r| r.final_loss)
                .collect()
        })
        .collect();
    let (informed, cab, ogd, single) = (&losses[0], &losses[1], &losses[2], &losses[3]);

    for (name, learner) in [("cab", cab), ("ogd", ogd)] {
        let (gap, se) = paired_gap(learner, informed);
        assert!(
            gap > 0.0 && gap >= 3.0 * se,
            "informed oracle vs {name}: gap {gap:.5}, se {se:.5}"
        );
        let (gap, se) = paired_gap(single, learner);
        assert!(
            gap > 0.0 && gap >= 3.0 * se,
            "{name} vs single arm: gap {gap:.5}, se {se:.5}"
        );
    }
}
