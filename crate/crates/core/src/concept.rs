//! Concept extraction and detection.
//!
//! A [`ConceptDefinition`] is the list of the `N` strongest tuples of the
//! summed co-activation graph of a few example masks. Each tuple keeps its
//! raw count; its weight is the count divided by the total count of the
//! selected tuples. The evidence for a concept in a new mask is the summed
//! weight of the definition tuples that are fully active in that mask.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::ActivityMask;
use crate::graph::{sum_graphs, top_n, tuples_from_mask, GraphError, NeuronTuple, PatternOrder};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConceptError {
    #[error("pattern complexity must be at least 1")]
    ZeroComplexity,
    #[error("detection threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("no example masks given")]
    NoExamples,
    #[error("example masks have mixed dimensions ({first} and {other})")]
    MixedDims { first: usize, other: usize },
    #[error("concept not expressible at this order: no example has {arity} active neurons")]
    NotExpressible { arity: usize },
    #[error("definition has no entries")]
    EmptyDefinition,
    #[error("mask has {mask} neurons, definition expects {definition}")]
    DimMismatch { mask: usize, definition: usize },
    #[error("invalid definition entry {index}: {reason}")]
    InvalidEntry { index: usize, reason: &'static str },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Extraction and detection parameters. Defaults: ten pairs, threshold 0.2.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FcmConfig {
    /// Number of strongest tuples kept in a definition.
    pub pattern_complexity: usize,
    /// Evidence that must be strictly exceeded to report a concept.
    pub detection_threshold: f64,
    pub order: PatternOrder,
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self { pattern_complexity: 10, detection_threshold: 0.20, order: PatternOrder::Pairs }
    }
}

impl FcmConfig {
    pub fn new(pattern_complexity: usize, detection_threshold: f64, order: PatternOrder) -> Result<Self, ConceptError> {
        let config = Self { pattern_complexity, detection_threshold, order };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConceptError> {
        if self.pattern_complexity == 0 {
            return Err(ConceptError::ZeroComplexity);
        }
        check_threshold(self.detection_threshold)
    }

    pub fn with_complexity(self, pattern_complexity: usize) -> Self {
        Self { pattern_complexity, ..self }
    }

    pub fn with_threshold(self, detection_threshold: f64) -> Self {
        Self { detection_threshold, ..self }
    }
}

fn check_threshold(theta: f64) -> Result<(), ConceptError> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(ConceptError::InvalidThreshold(theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefinitionEntry {
    pub tuple: NeuronTuple,
    pub count: u64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DefinitionWarning {
    /// The summed graph held fewer tuples than the requested complexity.
    ShortDefinition { available: usize, requested: usize },
}

impl fmt::Display for DefinitionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefinitionWarning::ShortDefinition { available, requested } => {
                write!(f, "short definition: {available} of {requested} requested connections available")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinitionMeta {
    pub k_examples: usize,
    pub n_requested: usize,
    pub warnings: Vec<DefinitionWarning>,
}

/// Named set of weighted neuron tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDefinition {
    name: String,
    order: PatternOrder,
    dim: usize,
    entries: Vec<DefinitionEntry>,
    total_count: u64,
    meta: DefinitionMeta,
}

impl ConceptDefinition {
    /// Rebuilds a definition from raw counts, recomputing the weights.
    ///
    /// Counts must be positive and non-increasing, tuples unique, of the
    /// given order and inside `dim`. Short-definition warnings are derived
    /// from `k_examples`/`n_requested` rather than trusted.
    pub fn from_counts(
        name: impl Into<String>,
        order: PatternOrder,
        dim: usize,
        counts: &[(NeuronTuple, u64)],
        k_examples: usize,
        n_requested: usize,
    ) -> Result<Self, ConceptError> {
        if counts.is_empty() {
            return Err(ConceptError::EmptyDefinition);
        }
        let mut seen = alloc::collections::BTreeSet::new();
        let mut total: u64 = 0;
        for (index, (tuple, count)) in counts.iter().enumerate() {
            let reason = if tuple.arity() != order.arity() {
                Some("tuple arity differs from the definition order")
            } else if tuple.max_index() as usize >= dim {
                Some("neuron index outside the encoding dimension")
            } else if *count == 0 {
                Some("count must be positive")
            } else if index > 0 && counts[index - 1].1 < *count {
                Some("counts must be non-increasing")
            } else if !seen.insert(*tuple) {
                Some("duplicate tuple")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(ConceptError::InvalidEntry { index, reason });
            }
            total = total
                .checked_add(*count)
                .ok_or(ConceptError::InvalidEntry { index, reason: "count overflow" })?;
        }
        let entries = counts
            .iter()
            .map(|&(tuple, count)| DefinitionEntry { tuple, count, weight: count as f64 / total as f64 })
            .collect();
        let mut warnings = Vec::new();
        if counts.len() < n_requested {
            warnings.push(DefinitionWarning::ShortDefinition { available: counts.len(), requested: n_requested });
        }
        Ok(Self {
            name: name.into(),
            order,
            dim,
            entries,
            total_count: total,
            meta: DefinitionMeta { k_examples, n_requested, warnings },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> PatternOrder {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[DefinitionEntry] {
        &self.entries
    }

    pub fn meta(&self) -> &DefinitionMeta {
        &self.meta
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn is_short(&self) -> bool {
        !self.meta.warnings.is_empty()
    }

    /// Total raw count of the entries whose tuple is fully active in `mask`.
    pub fn matched_count(&self, mask: &ActivityMask) -> u64 {
        self.entries
            .iter()
            .filter(|e| mask.contains_all(e.tuple.as_slice()))
            .map(|e| e.count)
            .sum()
    }
}

/// Builds the definition of `name` from a few positive example masks.
pub fn extract_concept<'a, I>(name: &str, examples: I, config: &FcmConfig) -> Result<ConceptDefinition, ConceptError>
where
    I: IntoIterator<Item = &'a ActivityMask>,
{
    config.validate()?;
    let graphs: Vec<_> = examples.into_iter().map(|m| tuples_from_mask(m, config.order)).collect();
    let first = graphs.first().ok_or(ConceptError::NoExamples)?;
    if let Some(g) = graphs.iter().find(|g| g.dim() != first.dim()) {
        return Err(ConceptError::MixedDims { first: first.dim(), other: g.dim() });
    }
    let summed = sum_graphs(&graphs)?;
    if summed.is_empty() {
        return Err(ConceptError::NotExpressible { arity: config.order.arity() });
    }
    let top = top_n(&summed, config.pattern_complexity)?;
    ConceptDefinition::from_counts(name, config.order, summed.dim(), &top.entries, graphs.len(), config.pattern_complexity)
}

/// Summed normalized weight of the definition tuples active in `mask`.
///
/// Computed as matched count over total count, which is the weight sum
/// rounded once: a mask containing every tuple scores exactly 1.
pub fn evidence(definition: &ConceptDefinition, mask: &ActivityMask) -> Result<f64, ConceptError> {
    if definition.entries.is_empty() {
        return Err(ConceptError::EmptyDefinition);
    }
    if mask.dim() != definition.dim {
        return Err(ConceptError::DimMismatch { mask: mask.dim(), definition: definition.dim });
    }
    Ok(definition.matched_count(mask) as f64 / definition.total_count as f64)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DetectionResult {
    pub concept: String,
    pub evidence: f64,
    pub present: bool,
}

/// Independent present/absent decision per definition: present iff
/// evidence > `threshold`.
pub fn detect(
    definitions: &[ConceptDefinition],
    mask: &ActivityMask,
    threshold: f64,
) -> Result<Vec<DetectionResult>, ConceptError> {
    check_threshold(threshold)?;
    definitions
        .iter()
        .map(|d| {
            let score = evidence(d, mask)?;
            Ok(DetectionResult { concept: d.name.clone(), evidence: score, present: score > threshold })
        })
        .collect()
}
