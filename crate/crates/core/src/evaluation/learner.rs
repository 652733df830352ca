use alloc::boxed::Box;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::baseline::LinearConfig;
use crate::concept::{evidence, extract_concept, ConceptDefinition, FcmConfig};
use crate::encoding::ActivityMask;

/// Hyperparameters echoed into reports.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "method", rename_all = "snake_case"))]
pub enum LearnerParams {
    Fcm(FcmConfig),
    Linear(LinearConfig),
}

/// A classifier fit from a handful of labeled masks.
///
/// The harness scores every test frame once and decides "present" when the
/// score strictly exceeds [`FewShotLearner::decision_threshold`].
pub trait FewShotLearner: Sync {
    type Model;

    fn params(&self) -> LearnerParams;

    /// Whether [`FewShotLearner::fit`] needs negative examples.
    fn uses_negative_examples(&self) -> bool;

    fn decision_threshold(&self) -> f64;

    fn fit(
        &self,
        concept: &str,
        positives: &[&ActivityMask],
        negatives: &[&ActivityMask],
        seed: u64,
    ) -> Result<Self::Model, EvalError>;

    fn score(&self, model: &Self::Model, mask: &ActivityMask) -> Result<f64, EvalError>;
}

/// Fast concept mapping: positives only, score = evidence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FcmLearner {
    pub config: FcmConfig,
}

impl FcmLearner {
    pub fn new(config: FcmConfig) -> Self {
        Self { config }
    }
}

impl FewShotLearner for FcmLearner {
    type Model = ConceptDefinition;

    fn params(&self) -> LearnerParams {
        LearnerParams::Fcm(self.config)
    }

    fn uses_negative_examples(&self) -> bool {
        false
    }

    fn decision_threshold(&self) -> f64 {
        self.config.detection_threshold
    }

    fn fit(&self, concept: &str, positives: &[&ActivityMask], _negatives: &[&ActivityMask], _seed: u64) -> Result<ConceptDefinition, EvalError> {
        Ok(extract_concept(concept, positives.iter().copied(), &self.config)?)
    }

    fn score(&self, model: &ConceptDefinition, mask: &ActivityMask) -> Result<f64, EvalError> {
        Ok(evidence(model, mask)?)
    }
}

/// Scores of one trial's test frames, in split order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialScores {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

pub(crate) fn fit_and_score<L: FewShotLearner>(
    data: &super::LabeledDataset,
    split: &super::BalancedSplit,
    learner: &L,
    seed: u64,
) -> Result<TrialScores, EvalError> {
    let name = &data.concepts()[split.concept];
    let positives: Vec<&ActivityMask> = split.example_frames.iter().map(|&f| data.mask(f)).collect();
    let negatives: Vec<&ActivityMask> = split.negative_example_frames.iter().map(|&f| data.mask(f)).collect();
    let model = learner.fit(name, &positives, &negatives, seed).map_err(|source| EvalError::Fit {
        concept: name.clone(),
        split_seed: split.seed,
        examples: split.example_frames.clone(),
        source: Box::new(source),
    })?;
    let score_all = |frames: &[usize]| -> Result<Vec<f64>, EvalError> {
        frames.iter().map(|&f| learner.score(&model, data.mask(f))).collect()
    };
    Ok(TrialScores { pos: score_all(&split.pos_test)?, neg: score_all(&split.neg_test)? })
}
