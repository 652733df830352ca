#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    /// Counts for decisions `score > threshold` on positive and negative frames.
    pub fn from_scores(pos_scores: &[f64], neg_scores: &[f64], threshold: f64) -> Self {
        let tp = pos_scores.iter().filter(|&&s| s > threshold).count();
        let fp = neg_scores.iter().filter(|&&s| s > threshold).count();
        Self { tp, fp, tn: neg_scores.len() - fp, fn_: pos_scores.len() - tp }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Binary classification metrics. Ratios with a zero denominator are 0.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Metrics {
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let ConfusionCounts { tp, fp, tn, fn_ } = counts;
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Self { counts, accuracy: ratio(tp + tn, counts.total()), precision, recall, f1 }
    }

    pub fn from_scores(pos_scores: &[f64], neg_scores: &[f64], threshold: f64) -> Self {
        Self::from_counts(ConfusionCounts::from_scores(pos_scores, neg_scores, threshold))
    }

    pub fn get(&self, metric: MetricKind) -> f64 {
        match metric {
            MetricKind::Accuracy => self.accuracy,
            MetricKind::Precision => self.precision,
            MetricKind::Recall => self.recall,
            MetricKind::F1 => self.f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum MetricKind {
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [MetricKind::Accuracy, MetricKind::Precision, MetricKind::Recall, MetricKind::F1];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::F1 => "f1",
        }
    }
}
