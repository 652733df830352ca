//! Few-shot evaluation protocol.
//!
//! One trial draws a balanced split (a few positive examples, equal numbers
//! of positive and negative test frames), fits a learner on the examples and
//! scores the test frames. A report aggregates many independently seeded
//! trials into means, bootstrap confidence intervals and quartiles. Sweeps
//! rerun the same trials while varying a single parameter.
//!
//! Trial `i` of a run with master seed `s` depends only on `(s, i)`, so the
//! trials may be executed in any order or in parallel through a
//! [`TrialRunner`].

mod dataset;
mod learner;
mod metrics;
mod report;
mod split;
mod sweep;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::baseline::BaselineError;
use crate::concept::{ConceptError, FcmConfig};
use crate::rng::{derive_seed, Stream};

pub use dataset::LabeledDataset;
pub use learner::{FcmLearner, FewShotLearner, LearnerParams, TrialScores};
pub use metrics::{ConfusionCounts, MetricKind, Metrics};
pub use report::{
    quantile, summarize, EvalPlan, EvalReport, ExampleAccounting, MetricSummary, ReportSummary, TrialRecord,
};
pub use split::{build_balanced_split, BalancedSplit, SplitPlan};
pub use sweep::{
    sweep_complexity, sweep_complexity_with, sweep_num_examples, sweep_num_examples_with, sweep_threshold,
    sweep_threshold_with, SweepParameter, SweepRow, SweepTable,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("dataset has no frames")]
    EmptyDataset,
    #[error("{frames} frame ids, {masks} masks and {labels} label sets do not line up")]
    Misaligned { frames: usize, masks: usize, labels: usize },
    #[error("masks have mixed dimensions ({first} and {other})")]
    MixedDims { first: usize, other: usize },
    #[error("frame {frame} carries label {label} outside the concept vocabulary")]
    LabelOutOfRange { frame: usize, label: usize },
    #[error("concept `{0}` listed twice in the vocabulary")]
    DuplicateConcept(String),
    #[error("duplicate frame id `{0}`")]
    DuplicateFrameId(String),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("not enough positive frames for `{concept}`: need {needed}, have {available}")]
    InsufficientPositives { concept: String, needed: usize, available: usize },
    #[error("not enough negative frames for `{concept}`: need {needed}, have {available}")]
    InsufficientNegatives { concept: String, needed: usize, available: usize },
    #[error("invalid evaluation plan: {0}")]
    InvalidPlan(&'static str),
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("fitting `{concept}` on split seed {split_seed} (example frames {examples:?}) failed: {source}")]
    Fit { concept: String, split_seed: u64, examples: Vec<usize>, source: Box<EvalError> },
    #[error("trial {trial} failed: {source}")]
    Trial { trial: usize, source: Box<EvalError> },
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// Executes independent trials and returns their results in trial order.
///
/// Implementations must report the error of the lowest failing trial so
/// that failures are as deterministic as successes.
pub trait TrialRunner {
    fn run<T, F>(&self, trials: usize, f: F) -> Result<Vec<T>, EvalError>
    where
        T: Send,
        F: Fn(usize) -> Result<T, EvalError> + Sync + Send;
}

/// Runs trials one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TrialRunner for Sequential {
    fn run<T, F>(&self, trials: usize, f: F) -> Result<Vec<T>, EvalError>
    where
        T: Send,
        F: Fn(usize) -> Result<T, EvalError> + Sync + Send,
    {
        (0..trials).map(f).collect()
    }
}

/// Seed of trial `trial`'s split under master seed `seed`.
pub fn trial_split_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, Stream::Split, trial as u64)
}

pub fn trial_fit_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, Stream::Fit, trial as u64)
}

fn check_plan(plan: &EvalPlan) -> Result<(), EvalError> {
    if plan.trials < 2 {
        return Err(EvalError::InvalidPlan("at least two trials are required"));
    }
    if plan.k == 0 {
        return Err(EvalError::InvalidPlan("at least one positive example is required"));
    }
    if plan.resamples == 0 {
        return Err(EvalError::InvalidPlan("at least one bootstrap resample is required"));
    }
    Ok(())
}

fn split_plan_for<L: FewShotLearner>(learner: &L, plan: &EvalPlan) -> SplitPlan {
    SplitPlan {
        k: plan.k,
        k_neg: if learner.uses_negative_examples() { plan.k } else { 0 },
        n_pos: plan.n_pos,
        n_neg: plan.n_neg,
    }
}

fn accounting_for(split: &SplitPlan) -> ExampleAccounting {
    ExampleAccounting { positive_examples: split.k, negative_examples: split.k_neg }
}

/// Draws trial `trial`'s split, fits the learner and scores the test frames.
pub fn score_trial<L: FewShotLearner>(
    data: &LabeledDataset,
    concept: usize,
    learner: &L,
    plan: &EvalPlan,
    seed: u64,
    trial: usize,
) -> Result<(BalancedSplit, TrialScores), EvalError> {
    let run = || {
        let split = split::split_for_index(data, concept, &split_plan_for(learner, plan), trial_split_seed(seed, trial))?;
        let scores = learner::fit_and_score(data, &split, learner, trial_fit_seed(seed, trial))?;
        Ok((split, scores))
    };
    run().map_err(|source| EvalError::Trial { trial, source: Box::new(source) })
}

/// Fits `learner` on a given split and scores its test frames.
pub fn evaluate_split<L: FewShotLearner>(
    data: &LabeledDataset,
    split: &BalancedSplit,
    learner: &L,
    seed: u64,
) -> Result<Metrics, EvalError> {
    let scores = learner::fit_and_score(data, split, learner, seed)?;
    Ok(Metrics::from_scores(&scores.pos, &scores.neg, learner.decision_threshold()))
}

/// Extracts the split's concept from its example frames and detects it on
/// the positive and negative test frames.
pub fn evaluate_concept(data: &LabeledDataset, split: &BalancedSplit, config: &FcmConfig) -> Result<Metrics, EvalError> {
    config.validate()?;
    evaluate_split(data, split, &FcmLearner::new(*config), split.seed)
}

/// Repeated evaluation over `plan.trials` random splits.
pub fn bootstrap_eval<L: FewShotLearner>(
    data: &LabeledDataset,
    concept: &str,
    learner: &L,
    plan: &EvalPlan,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    bootstrap_eval_with(&Sequential, data, concept, learner, plan, seed)
}

pub fn bootstrap_eval_with<R: TrialRunner, L: FewShotLearner>(
    runner: &R,
    data: &LabeledDataset,
    concept: &str,
    learner: &L,
    plan: &EvalPlan,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    check_plan(plan)?;
    let concept_idx = data.concept_index(concept)?;
    let threshold = learner.decision_threshold();
    let trials = runner.run(plan.trials, |trial| {
        let (split, scores) = score_trial(data, concept_idx, learner, plan, seed, trial)?;
        Ok(TrialRecord { trial, split_seed: split.seed, metrics: Metrics::from_scores(&scores.pos, &scores.neg, threshold) })
    })?;
    let accounting = accounting_for(&split_plan_for(learner, plan));
    Ok(EvalReport::assemble(concept.into(), learner.params(), *plan, seed, accounting, trials))
}

#[cfg(test)]
mod tests;
