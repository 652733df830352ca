use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::learner::LearnerParams;
use super::metrics::{MetricKind, Metrics};
use crate::rng::{derive_seed, rng_from_seed, Stream};

/// Trial count, set sizes and bootstrap resamples of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalPlan {
    /// Positive examples per trial.
    pub k: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub trials: usize,
    /// Bootstrap resamples used for the confidence intervals.
    pub resamples: usize,
}

impl Default for EvalPlan {
    fn default() -> Self {
        Self { k: 5, n_pos: 250, n_neg: 250, trials: 100, resamples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TrialRecord {
    pub trial: usize,
    pub split_seed: u64,
    pub metrics: Metrics,
}

/// Location and spread of one metric across trials.
///
/// `ci_low`/`ci_high` are the 2.5th/97.5th percentiles of bootstrap means
/// (trials resampled with replacement); the quartiles describe the
/// per-trial values themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricSummary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ReportSummary {
    pub accuracy: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub f1: MetricSummary,
}

impl ReportSummary {
    pub fn get(&self, metric: MetricKind) -> &MetricSummary {
        match metric {
            MetricKind::Accuracy => &self.accuracy,
            MetricKind::Precision => &self.precision,
            MetricKind::Recall => &self.recall,
            MetricKind::F1 => &self.f1,
        }
    }
}

/// Labeled examples a learner consumed in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ExampleAccounting {
    pub positive_examples: usize,
    pub negative_examples: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalReport {
    pub concept: String,
    pub params: LearnerParams,
    pub plan: EvalPlan,
    pub seed: u64,
    pub accounting: ExampleAccounting,
    pub trials: Vec<TrialRecord>,
    pub summary: ReportSummary,
}

impl EvalReport {
    pub(crate) fn assemble(
        concept: String,
        params: LearnerParams,
        plan: EvalPlan,
        seed: u64,
        accounting: ExampleAccounting,
        trials: Vec<TrialRecord>,
    ) -> Self {
        let summary_of = |kind: MetricKind| {
            let values: Vec<f64> = trials.iter().map(|t| t.metrics.get(kind)).collect();
            summarize(&values, plan.resamples, derive_seed(seed, Stream::Bootstrap, 0))
        };
        let summary = ReportSummary {
            accuracy: summary_of(MetricKind::Accuracy),
            precision: summary_of(MetricKind::Precision),
            recall: summary_of(MetricKind::Recall),
            f1: summary_of(MetricKind::F1),
        };
        Self { concept, params, plan, seed, accounting, trials, summary }
    }

    pub fn trial_values(&self, metric: MetricKind) -> Vec<f64> {
        self.trials.iter().map(|t| t.metrics.get(metric)).collect()
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linear-interpolation quantile of ascending `sorted` values.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, percentile-bootstrap 95% interval of the mean, and quartiles.
///
/// Resampling is driven by `seed` only, so every metric of a report is
/// resampled with the same trial indices.
pub fn summarize(values: &[f64], resamples: usize, seed: u64) -> MetricSummary {
    assert!(!values.is_empty(), "summary of an empty trial list");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len();
    let mut rng = rng_from_seed(seed);
    let mut boot: Vec<f64> = (0..resamples.max(1))
        .map(|_| {
            let draw: Vec<f64> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
            mean(&draw)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    MetricSummary {
        mean: mean(values),
        ci_low: quantile(&boot, 0.025),
        ci_high: quantile(&boot, 0.975),
        median: quantile(&sorted, 0.5),
        q1: quantile(&sorted, 0.25),
        q3: quantile(&sorted, 0.75),
        min: sorted[0],
        max: sorted[n - 1],
    }
}
