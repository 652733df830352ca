use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::EvalError;
use crate::encoding::ActivityMask;

/// Activity masks aligned with per-frame concept labels.
///
/// Labels are stored as sorted indices into the concept vocabulary; a frame
/// may carry any number of concepts, including none.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    frame_ids: Vec<String>,
    masks: Vec<ActivityMask>,
    labels: Vec<Vec<usize>>,
    concepts: Vec<String>,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(
        frame_ids: Vec<String>,
        masks: Vec<ActivityMask>,
        labels: Vec<Vec<usize>>,
        concepts: Vec<String>,
    ) -> Result<Self, EvalError> {
        let frames = frame_ids.len();
        let dim = masks.first().ok_or(EvalError::EmptyDataset)?.dim();
        if masks.len() != frames || labels.len() != frames {
            return Err(EvalError::Misaligned { frames, masks: masks.len(), labels: labels.len() });
        }
        if let Some(m) = masks.iter().find(|m| m.dim() != dim) {
            return Err(EvalError::MixedDims { first: dim, other: m.dim() });
        }
        let mut names = BTreeSet::new();
        for c in &concepts {
            if !names.insert(c.as_str()) {
                return Err(EvalError::DuplicateConcept(c.clone()));
            }
        }
        let mut ids = BTreeSet::new();
        for id in &frame_ids {
            if !ids.insert(id.as_str()) {
                return Err(EvalError::DuplicateFrameId(id.clone()));
            }
        }
        let mut labels = labels;
        for (frame, set) in labels.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if let Some(&label) = set.iter().find(|&&l| l >= concepts.len()) {
                return Err(EvalError::LabelOutOfRange { frame, label });
            }
        }
        Ok(Self { frame_ids, masks, labels, concepts, dim })
    }

    /// Same as [`LabeledDataset::new`] with labels given by concept name.
    pub fn from_named_labels(
        frame_ids: Vec<String>,
        masks: Vec<ActivityMask>,
        labels: &[Vec<String>],
        concepts: Vec<String>,
    ) -> Result<Self, EvalError> {
        let indexed = labels
            .iter()
            .map(|names| {
                names
                    .iter()
                    .map(|n| {
                        concepts
                            .iter()
                            .position(|c| c == n)
                            .ok_or_else(|| EvalError::UnknownConcept(n.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(frame_ids, masks, indexed, concepts)
    }

    /// Copy of this dataset with its masks replaced, labels kept.
    pub fn with_masks(&self, masks: Vec<ActivityMask>) -> Result<Self, EvalError> {
        Self::new(self.frame_ids.clone(), masks, self.labels.clone(), self.concepts.clone())
    }

    pub fn len(&self) -> usize {
        self.frame_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_ids(&self) -> &[String] {
        &self.frame_ids
    }

    pub fn masks(&self) -> &[ActivityMask] {
        &self.masks
    }

    pub fn mask(&self, frame: usize) -> &ActivityMask {
        &self.masks[frame]
    }

    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn labels(&self, frame: usize) -> &[usize] {
        &self.labels[frame]
    }

    pub fn concept_index(&self, name: &str) -> Result<usize, EvalError> {
        self.concepts
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| EvalError::UnknownConcept(name.to_string()))
    }

    pub fn has_label(&self, frame: usize, concept: usize) -> bool {
        self.labels[frame].binary_search(&concept).is_ok()
    }

    /// Frames labeled with `concept`, ascending.
    pub fn positives(&self, concept: usize) -> Vec<usize> {
        (0..self.len()).filter(|&f| self.has_label(f, concept)).collect()
    }

    /// Frames not labeled with `concept`, ascending. Frames carrying other
    /// concepts (or none) are included.
    pub fn negatives(&self, concept: usize) -> Vec<usize> {
        (0..self.len()).filter(|&f| !self.has_label(f, concept)).collect()
    }

    /// Number of frames carrying at least one label.
    pub fn labeled_frames(&self) -> usize {
        self.labels.iter().filter(|l| !l.is_empty()).count()
    }
}
