use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{
    accounting_for, bootstrap_eval_with, check_plan, score_trial, split_plan_for, EvalError, EvalPlan, EvalReport,
    FcmLearner, FewShotLearner, LabeledDataset, Metrics, Sequential, TrialRecord, TrialRunner,
};
use crate::concept::FcmConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SweepParameter {
    PatternComplexity,
    Threshold,
    NumExamples,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::PatternComplexity => "complexity",
            SweepParameter::Threshold => "threshold",
            SweepParameter::NumExamples => "examples",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepRow {
    pub value: f64,
    pub report: EvalReport,
}

/// One report per grid value, all trials sharing the same master seed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub concept: String,
    pub rows: Vec<SweepRow>,
}

/// One bootstrap evaluation per pattern complexity in `n_values`.
pub fn sweep_complexity(
    data: &LabeledDataset,
    concept: &str,
    n_values: &[usize],
    config: &FcmConfig,
    plan: &EvalPlan,
    seed: u64,
) -> Result<SweepTable, EvalError> {
    sweep_complexity_with(&Sequential, data, concept, n_values, config, plan, seed)
}

pub fn sweep_complexity_with<R: TrialRunner>(
    runner: &R,
    data: &LabeledDataset,
    concept: &str,
    n_values: &[usize],
    config: &FcmConfig,
    plan: &EvalPlan,
    seed: u64,
) -> Result<SweepTable, EvalError> {
    if n_values.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let rows = n_values
        .iter()
        .map(|&n| {
            let learner = FcmLearner::new(config.with_complexity(n));
            learner.config.validate()?;
            let report = bootstrap_eval_with(runner, data, concept, &learner, plan, seed)?;
            Ok(SweepRow { value: n as f64, report })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(SweepTable { parameter: SweepParameter::PatternComplexity, concept: concept.into(), rows })
}

/// One report per detection threshold.
///
/// Evidence does not depend on the threshold, so each trial extracts and
/// scores once and every threshold re-decides the same scores.
pub fn sweep_threshold(
    data: &LabeledDataset,
    concept: &str,
    thresholds: &[f64],
    config: &FcmConfig,
    plan: &EvalPlan,
    seed: u64,
) -> Result<SweepTable, EvalError> {
    sweep_threshold_with(&Sequential, data, concept, thresholds, config, plan, seed)
}

pub fn sweep_threshold_with<R: TrialRunner>(
    runner: &R,
    data: &LabeledDataset,
    concept: &str,
    thresholds: &[f64],
    config: &FcmConfig,
    plan: &EvalPlan,
    seed: u64,
) -> Result<SweepTable, EvalError> {
    if thresholds.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    for &theta in thresholds {
        config.with_threshold(theta).validate()?;
    }
    config.validate()?;
    check_plan(plan)?;
    let concept_idx = data.concept_index(concept)?;
    let learner = FcmLearner::new(*config);
    // per trial: split seed and one row of metrics per threshold
    let per_trial = runner.run(plan.trials, |trial| {
        let (split, scores) = score_trial(data, concept_idx, &learner, plan, seed, trial)?;
        let metrics: Vec<Metrics> =
            thresholds.iter().map(|&theta| Metrics::from_scores(&scores.pos, &scores.neg, theta)).collect();
        Ok((split.seed, metrics))
    })?;
    let accounting = accounting_for(&split_plan_for(&learner, plan));
    let rows = thresholds
        .iter()
        .enumerate()
        .map(|(j, &theta)| {
            let trials = per_trial
                .iter()
                .enumerate()
                .map(|(trial, (split_seed, metrics))| TrialRecord { trial, split_seed: *split_seed, metrics: metrics[j] })
                .collect();
            let params = FcmLearner::new(config.with_threshold(theta)).params();
            SweepRow { value: theta, report: EvalReport::assemble(concept.into(), params, *plan, seed, accounting, trials) }
        })
        .collect();
    Ok(SweepTable { parameter: SweepParameter::Threshold, concept: concept.into(), rows })
}

/// One report per number of positive examples. Any learner may be swept.
pub fn sweep_num_examples<L: FewShotLearner>(
    data: &LabeledDataset,
    concept: &str,
    k_values: &[usize],
    learner: &L,
    plan: &EvalPlan,
    seed: u64,
) -> Result<SweepTable, EvalError> {
    sweep_num_examples_with(&Sequential, data, concept, k_values, learner, plan, seed)
}

pub fn sweep_num_examples_with<R: TrialRunner, L: FewShotLearner>(
    runner: &R,
    data: &LabeledDataset,
    concept: &str,
    k_values: &[usize],
    learner: &L,
    plan: &EvalPlan,
    seed: u64,
) -> Result<SweepTable, EvalError> {
    if k_values.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let rows = k_values
        .iter()
        .map(|&k| {
            let plan = EvalPlan { k, ..*plan };
            let report = bootstrap_eval_with(runner, data, concept, learner, &plan, seed)?;
            Ok(SweepRow { value: k as f64, report })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(SweepTable { parameter: SweepParameter::NumExamples, concept: concept.into(), rows })
}
