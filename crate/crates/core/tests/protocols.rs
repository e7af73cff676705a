use std::collections::BTreeSet;

use xfclone::contrastive::{ContrastiveConfig, ProjectionKind};
use xfclone::corpus::{synthesize, SynthConfig};
use xfclone::encoder::{EncoderSettings, EncoderSource};
use xfclone::protocols::*;

fn spec(variant: ModelVariant) -> TrainSpec {
    TrainSpec {
        variant,
        head: ProjectionKind::Identity,
        config: ContrastiveConfig {
            epochs: 3,
            learning_rate: 0.5,
            ..Default::default()
        },
        source: EncoderSource::Trainable(EncoderSettings { dim: 16, ..Default::default() }),
    }
}

#[test]
fn one_vs_rest_report_has_a_row_per_functionality() {
    let corpus = synthesize(&SynthConfig::new(3, 8, 0.8, 1)).unwrap();
    let plan = split_one_vs_rest(&corpus).unwrap();
    for variant in [ModelVariant::Cl, ModelVariant::Baseline] {
        let report = run_plan(&plan, &corpus, &corpus, &spec(variant)).unwrap();
        assert_eq!(report.rows.len(), 3);
        let f1s: Vec<f64> = report.rows.iter().map(|r| r.metrics.f1).collect();
        assert!((report.mean.f1 - f1s.iter().sum::<f64>() / 3.0).abs() < 1e-12);
        let csv = render_csv(&report).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }
}

#[test]
fn runs_are_deterministic() {
    let corpus = synthesize(&SynthConfig::new(3, 8, 0.8, 2)).unwrap();
    let plan = split_random(&corpus, 0.8, 2).unwrap();
    let a = run_plan(&plan, &corpus, &corpus, &spec(ModelVariant::Cl)).unwrap();
    let b = run_plan(&plan, &corpus, &corpus, &spec(ModelVariant::Cl)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn cross_dataset_is_one_experiment() {
    let a = synthesize(&SynthConfig::new(3, 6, 0.8, 3)).unwrap();
    let b = synthesize(&SynthConfig::new(2, 6, 0.8, 4)).unwrap();
    let plan = split_cross_dataset(&a, &b).unwrap();
    assert_eq!(plan.experiments.len(), 1);
    assert_eq!(plan.experiments[0].test.len(), b.len());
    let report = run_plan(&plan, &a, &b, &spec(ModelVariant::Cl)).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].n_test, b.len());
}

#[test]
fn reference_test_and_report_files() {
    let corpus = synthesize(&SynthConfig::new(4, 6, 0.8, 5)).unwrap();
    let plan = split_one_vs_rest(&corpus).unwrap();
    let mut report = run_plan(&plan, &corpus, &corpus, &spec(ModelVariant::Cl)).unwrap();
    let t = *report.test_against_reference(2.0, Alternative::Less).unwrap();
    // every F1 is below 2, so W+ is 0 and p is 1/2^4
    assert_eq!(t.statistic, 0.0);
    assert_eq!(t.p_value, 1.0 / 16.0);
    let dir = tempfile::tempdir().unwrap();
    write_report(&report, dir.path()).unwrap();
    for f in [REPORT_CSV, REPORT_MD, STATS_JSON] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn kfold_partitions_all_items() {
    let ids: Vec<usize> = (0..404).collect();
    let folds = assign_folds(&ids, 10, 1);
    let mut sizes = [0usize; 10];
    for f in folds.values() {
        sizes[*f] += 1;
    }
    assert!(sizes.iter().all(|s| *s == 40 || *s == 41));
    assert_eq!(sizes.iter().sum::<usize>(), 404);
    let outcome = |flip: usize| -> Vec<ItemOutcome> {
        ids.iter()
            .map(|&id| ItemOutcome { id, predicted: (id % flip != 0) == (id % 2 == 0), label: id % 2 == 0 })
            .collect()
    };
    let cmp = kfold_f1_compare(&outcome(3), &outcome(7), 10, 1, Alternative::TwoSided).unwrap();
    assert_eq!(cmp.folds.len(), 10);
    let seen: BTreeSet<usize> = cmp.folds.iter().map(|f| f.fold).collect();
    assert_eq!(seen.len(), 10);
    assert!(cmp.test.p_value > 0.0 && cmp.test.p_value <= 1.0);
}

#[test]
fn paired_test_matches_hand_computation() {
    let x = [1.5, 2.0, 3.5, 4.0, 6.0];
    let y = [1.0, 1.0, 1.0, 1.0, 1.0];
    let r = wilcoxon_paired(&x, &y, Alternative::Greater).unwrap();
    assert_eq!(r.statistic, 15.0);
    assert_eq!(r.p_value, 1.0 / 32.0);
    assert_eq!(r.rank_biserial, 1.0);
}
