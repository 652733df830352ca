use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::baseline::LinearLearner;
use crate::encoding::ActivityMask;
use crate::synth::{generate, SynthSpec};

fn mask(dim: usize, ix: &[usize]) -> ActivityMask {
    ActivityMask::new(dim, ix.iter().copied()).unwrap()
}

/// `pos` frames of concept "a" firing {0, 1, 2} and `neg` unlabeled frames
/// firing {5, 6, 7}.
fn two_block(pos: usize, neg: usize) -> LabeledDataset {
    let mut ids = Vec::new();
    let mut masks = Vec::new();
    let mut labels = Vec::new();
    for i in 0..pos + neg {
        ids.push(format!("f{i}"));
        if i < pos {
            masks.push(mask(8, &[0, 1, 2]));
            labels.push(vec![0]);
        } else {
            masks.push(mask(8, &[5, 6, 7]));
            labels.push(vec![]);
        }
    }
    LabeledDataset::new(ids, masks, labels, vec![String::from("a")]).unwrap()
}

fn small_plan() -> EvalPlan {
    EvalPlan { k: 3, n_pos: 20, n_neg: 20, trials: 10, resamples: 200 }
}

#[test]
fn split_is_deterministic_and_disjoint() {
    let data = two_block(40, 40);
    let plan = SplitPlan { k: 5, k_neg: 5, n_pos: 30, n_neg: 30 };
    let a = build_balanced_split(&data, "a", &plan, 9).unwrap();
    let b = build_balanced_split(&data, "a", &plan, 9).unwrap();
    assert_eq!(a, b);
    let c = build_balanced_split(&data, "a", &plan, 10).unwrap();
    assert_ne!(a, c);

    let mut seen = BTreeSet::new();
    for f in a.example_frames.iter().chain(&a.negative_example_frames).chain(&a.pos_test).chain(&a.neg_test) {
        assert!(seen.insert(*f), "frame {f} drawn twice");
    }
    assert!(a.example_frames.iter().chain(&a.pos_test).all(|&f| data.has_label(f, 0)));
    assert!(a.negative_example_frames.iter().chain(&a.neg_test).all(|&f| !data.has_label(f, 0)));
    assert_eq!((a.example_frames.len(), a.pos_test.len(), a.neg_test.len()), (5, 30, 30));
}

#[test]
fn negative_examples_do_not_move_test_sets() {
    let data = two_block(40, 40);
    let without = build_balanced_split(&data, "a", &SplitPlan { k: 5, k_neg: 0, n_pos: 30, n_neg: 30 }, 4).unwrap();
    let with = build_balanced_split(&data, "a", &SplitPlan { k: 5, k_neg: 5, n_pos: 30, n_neg: 30 }, 4).unwrap();
    assert_eq!(without.example_frames, with.example_frames);
    assert_eq!(without.pos_test, with.pos_test);
    assert_eq!(without.neg_test, with.neg_test);
}

#[test]
fn too_few_positives_is_an_error() {
    let data = two_block(254, 300);
    let plan = SplitPlan { k: 5, ..SplitPlan::default() };
    assert_eq!(
        build_balanced_split(&data, "a", &plan, 0),
        Err(EvalError::InsufficientPositives { concept: "a".into(), needed: 255, available: 254 })
    );
    let data = two_block(300, 249);
    assert!(matches!(
        build_balanced_split(&data, "a", &plan, 0),
        Err(EvalError::InsufficientNegatives { needed: 250, available: 249, .. })
    ));
    assert_eq!(build_balanced_split(&data, "b", &plan, 0), Err(EvalError::UnknownConcept("b".into())));
}

#[test]
fn constant_predictors() {
    let always = Metrics::from_scores(&[1.0; 4], &[1.0; 4], 0.5);
    assert_eq!((always.accuracy, always.precision, always.recall), (0.5, 0.5, 1.0));
    assert!((always.f1 - 2.0 / 3.0).abs() < 1e-12);

    let never = Metrics::from_scores(&[0.0; 4], &[0.0; 4], 0.5);
    assert_eq!((never.accuracy, never.precision, never.recall, never.f1), (0.5, 0.0, 0.0, 0.0));
}

#[test]
fn threshold_is_strict() {
    let m = Metrics::from_scores(&[0.2, 0.3], &[0.2, 0.1], 0.2);
    assert_eq!(m.counts, ConfusionCounts { tp: 1, fp: 0, tn: 2, fn_: 1 });
}

#[test]
fn clean_concept_is_perfect() {
    let data = two_block(40, 40);
    let report = bootstrap_eval(&data, "a", &FcmLearner::default(), &small_plan(), 1).unwrap();
    assert_eq!(report.trials.len(), 10);
    for kind in MetricKind::ALL {
        let s = report.summary.get(kind);
        assert_eq!((s.mean, s.ci_low, s.ci_high, s.min, s.max), (1.0, 1.0, 1.0, 1.0, 1.0));
    }
    assert_eq!(report.accounting, ExampleAccounting { positive_examples: 3, negative_examples: 0 });
}

#[test]
fn reports_are_reproducible() {
    let spec = SynthSpec { frames_per_concept: 60, dropout: 0.4, ..SynthSpec::default() };
    let (data, _) = generate(&spec).unwrap();
    let plan = EvalPlan { k: 2, n_pos: 30, n_neg: 30, trials: 8, resamples: 100 };
    let a = bootstrap_eval(&data, "key", &FcmLearner::default(), &plan, 5).unwrap();
    let b = bootstrap_eval(&data, "key", &FcmLearner::default(), &plan, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fcm_and_linear_see_the_same_test_frames() {
    let (data, _) = generate(&SynthSpec { frames_per_concept: 60, ..SynthSpec::default() }).unwrap();
    let plan = EvalPlan { k: 3, n_pos: 30, n_neg: 30, trials: 4, resamples: 50 };
    let concept = data.concept_index("green door").unwrap();
    for trial in 0..plan.trials {
        let (fcm, _) = score_trial(&data, concept, &FcmLearner::default(), &plan, 2, trial).unwrap();
        let (lin, _) = score_trial(&data, concept, &LinearLearner::default(), &plan, 2, trial).unwrap();
        assert_eq!(fcm.example_frames, lin.example_frames);
        assert_eq!(fcm.pos_test, lin.pos_test);
        assert_eq!(fcm.neg_test, lin.neg_test);
        assert!(fcm.negative_example_frames.is_empty());
        assert_eq!(lin.negative_example_frames.len(), 3);
    }
}

#[test]
fn recall_falls_as_threshold_rises() {
    let spec = SynthSpec { frames_per_concept: 60, dropout: 0.5, ..SynthSpec::default() };
    let (data, _) = generate(&spec).unwrap();
    let plan = EvalPlan { k: 3, n_pos: 30, n_neg: 30, trials: 6, resamples: 50 };
    let grid = [0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0];
    let table = sweep_threshold(&data, "key door", &grid, &FcmConfig::default(), &plan, 3).unwrap();
    for pair in table.rows.windows(2) {
        for (lo, hi) in pair[0].report.trials.iter().zip(&pair[1].report.trials) {
            assert!(hi.metrics.recall <= lo.metrics.recall);
            assert!(hi.metrics.counts.fp <= lo.metrics.counts.fp);
        }
    }
    assert!(table.rows.last().unwrap().report.trials.iter().all(|t| t.metrics.recall == 0.0));
}

#[test]
fn sweep_rows_match_standalone_runs() {
    let spec = SynthSpec { frames_per_concept: 60, dropout: 0.3, ..SynthSpec::default() };
    let (data, _) = generate(&spec).unwrap();
    let plan = EvalPlan { k: 2, n_pos: 30, n_neg: 30, trials: 5, resamples: 80 };
    let config = FcmConfig::default();

    let thresholds = sweep_threshold(&data, "key", &[0.1, 0.3], &config, &plan, 8).unwrap();
    for row in &thresholds.rows {
        let alone = bootstrap_eval(&data, "key", &FcmLearner::new(config.with_threshold(row.value)), &plan, 8).unwrap();
        assert_eq!(row.report, alone);
    }
    let complexity = sweep_complexity(&data, "key", &[1, 5], &config, &plan, 8).unwrap();
    for row in &complexity.rows {
        let learner = FcmLearner::new(config.with_complexity(row.value as usize));
        assert_eq!(row.report, bootstrap_eval(&data, "key", &learner, &plan, 8).unwrap());
    }
    let examples = sweep_num_examples(&data, "key", &[1, 4], &FcmLearner::new(config), &plan, 8).unwrap();
    for row in &examples.rows {
        let plan = EvalPlan { k: row.value as usize, ..plan };
        assert_eq!(row.report, bootstrap_eval(&data, "key", &FcmLearner::new(config), &plan, 8).unwrap());
    }
}

#[test]
fn invalid_plans_and_grids() {
    let data = two_block(40, 40);
    let learner = FcmLearner::default();
    let one_trial = EvalPlan { trials: 1, ..small_plan() };
    assert!(matches!(bootstrap_eval(&data, "a", &learner, &one_trial, 0), Err(EvalError::InvalidPlan(_))));
    let no_examples = EvalPlan { k: 0, ..small_plan() };
    assert!(matches!(bootstrap_eval(&data, "a", &learner, &no_examples, 0), Err(EvalError::InvalidPlan(_))));
    assert_eq!(
        sweep_threshold(&data, "a", &[], &FcmConfig::default(), &small_plan(), 0),
        Err(EvalError::EmptyGrid)
    );
    assert!(matches!(
        sweep_threshold(&data, "a", &[1.5], &FcmConfig::default(), &small_plan(), 0),
        Err(EvalError::Concept(_))
    ));
}

#[test]
fn failing_fit_names_the_trial() {
    // single-neuron frames cannot form pairs
    let ids = (0..40).map(|i| format!("f{i}")).collect();
    let masks = (0..40).map(|i| if i < 20 { mask(8, &[0]) } else { mask(8, &[4, 5]) }).collect();
    let labels = (0..40).map(|i| if i < 20 { vec![0] } else { vec![] }).collect();
    let data = LabeledDataset::new(ids, masks, labels, vec![String::from("a")]).unwrap();
    let plan = EvalPlan { k: 2, n_pos: 10, n_neg: 10, trials: 3, resamples: 10 };
    match bootstrap_eval(&data, "a", &FcmLearner::default(), &plan, 0) {
        Err(EvalError::Trial { trial: 0, source }) => match *source {
            EvalError::Fit { concept, examples, .. } => {
                assert_eq!(concept, "a");
                assert_eq!(examples.len(), 2);
            }
            other => panic!("unexpected inner error {other:?}"),
        },
        other => panic!("unexpected result {other:?}"),
    }
}

#[test]
fn constant_values_have_zero_width_interval() {
    let s = summarize(&[0.75; 30], 500, 1);
    assert_eq!((s.mean, s.ci_low, s.ci_high, s.median, s.q1, s.q3), (0.75, 0.75, 0.75, 0.75, 0.75, 0.75));
}

#[test]
fn quantile_interpolates() {
    let v = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(quantile(&v, 0.0), 1.0);
    assert_eq!(quantile(&v, 1.0), 4.0);
    assert_eq!(quantile(&v, 0.5), 2.5);
    assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-12);
}

proptest! {
    #[test]
    fn interval_brackets_the_mean(values in prop::collection::vec(0.0f64..=1.0, 2..60), seed in any::<u64>()) {
        let s = summarize(&values, 300, seed);
        prop_assert!(s.ci_low <= s.mean + 1e-12 && s.mean <= s.ci_high + 1e-12);
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        prop_assert!(s.ci_low >= s.min - 1e-12 && s.ci_high <= s.max + 1e-12);
    }

    #[test]
    fn metrics_stay_in_range(pos in prop::collection::vec(0.0f64..=1.0, 1..40), neg in prop::collection::vec(0.0f64..=1.0, 1..40), theta in 0.0f64..1.0) {
        let m = Metrics::from_scores(&pos, &neg, theta);
        prop_assert_eq!(m.counts.total(), pos.len() + neg.len());
        for kind in MetricKind::ALL {
            let v = m.get(kind);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
