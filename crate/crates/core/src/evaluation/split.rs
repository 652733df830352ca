use alloc::string::ToString;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{EvalError, LabeledDataset};
use crate::rng::{rng_from_seed, sample_prefix_stable};

/// Sizes of the example and test sets drawn for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SplitPlan {
    /// Positive examples handed to the learner.
    pub k: usize,
    /// Negative examples handed to the learner (zero for FCM).
    pub k_neg: usize,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self { k: 5, k_neg: 0, n_pos: 250, n_neg: 250 }
    }
}

/// Frame indices of one trial. The four sets are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BalancedSplit {
    pub concept: usize,
    pub example_frames: Vec<usize>,
    pub negative_example_frames: Vec<usize>,
    pub pos_test: Vec<usize>,
    pub neg_test: Vec<usize>,
    pub seed: u64,
}

/// Seeded uniform sampling without replacement.
///
/// Positives: `k` examples then `n_pos` test frames. Negatives, drawn from
/// frames not labeled with the concept: `n_neg` test frames then `k_neg`
/// examples. Draws are prefix-stable, so the test sets do not depend on
/// `k_neg`.
pub fn build_balanced_split(
    data: &LabeledDataset,
    concept: &str,
    plan: &SplitPlan,
    seed: u64,
) -> Result<BalancedSplit, EvalError> {
    let concept = data.concept_index(concept)?;
    split_for_index(data, concept, plan, seed)
}

pub(crate) fn split_for_index(
    data: &LabeledDataset,
    concept: usize,
    plan: &SplitPlan,
    seed: u64,
) -> Result<BalancedSplit, EvalError> {
    if plan.k == 0 {
        return Err(EvalError::InvalidPlan("at least one positive example is required"));
    }
    let positives = data.positives(concept);
    let negatives = data.negatives(concept);
    let name = || data.concepts()[concept].to_string();
    let pos_needed = plan.k + plan.n_pos;
    if positives.len() < pos_needed {
        return Err(EvalError::InsufficientPositives { concept: name(), needed: pos_needed, available: positives.len() });
    }
    let neg_needed = plan.n_neg + plan.k_neg;
    if negatives.len() < neg_needed {
        return Err(EvalError::InsufficientNegatives { concept: name(), needed: neg_needed, available: negatives.len() });
    }

    let mut rng = rng_from_seed(seed);
    let pos_draw = sample_prefix_stable(&mut rng, positives.len(), pos_needed);
    let neg_draw = sample_prefix_stable(&mut rng, negatives.len(), neg_needed);
    let pick = |pool: &[usize], draw: &[usize]| draw.iter().map(|&i| pool[i]).collect::<Vec<_>>();

    Ok(BalancedSplit {
        concept,
        example_frames: pick(&positives, &pos_draw[..plan.k]),
        pos_test: pick(&positives, &pos_draw[plan.k..]),
        neg_test: pick(&negatives, &neg_draw[..plan.n_neg]),
        negative_example_frames: pick(&negatives, &neg_draw[plan.n_neg..]),
        seed,
    })
}
