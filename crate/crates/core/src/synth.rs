//! Synthetic encoding corpora with planted concepts.
//!
//! Each concept owns a dedicated set of neurons. A frame of concept `c`
//! fires each of `c`'s neurons unless it drops out, optionally carries a
//! second concept, and adds a Poisson number of spurious neurons drawn from
//! the neurons no concept owns. The default geometry (six concepts of six
//! neurons in a 256-neuron code, two spurious neurons on average) yields
//! about eight active neurons per frame.
//!
//! [`generate_random_masks`] provides the random-representation control:
//! masks with independent Bernoulli bits, paired with a reference dataset's
//! labels.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::ActivityMask;
use crate::evaluation::{EvalError, LabeledDataset};
use crate::rng::{derive_seed, rng_from_seed, Stream};

/// Concept names used when no vocabulary is supplied.
pub const DEFAULT_CONCEPTS: [&str; 6] = ["level door", "green door", "key door", "other door", "key", "blue time orb"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(&'static str),
    #[error("concept `{concept}` uses neuron {index}, outside dimension {dim}")]
    NeuronOutOfRange { concept: String, index: u32, dim: usize },
    #[error("concepts `{first}` and `{second}` share neuron {neuron}")]
    Overlap { first: String, second: String, neuron: u32 },
    #[error("{name} must lie in {range}, got {value}")]
    InvalidProbability { name: &'static str, range: &'static str, value: f64 },
    #[error("reference dataset carries no labels")]
    MissingReferenceLabels,
    #[error(transparent)]
    Dataset(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PlantedConcept {
    pub name: String,
    pub neurons: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SynthSpec {
    pub dim: usize,
    pub concepts: Vec<PlantedConcept>,
    pub frames_per_concept: usize,
    /// Probability that a frame also carries a second, different concept.
    pub co_occurrence_prob: f64,
    /// Expected number of spurious active neurons per frame.
    pub noise_on: f64,
    /// Probability that each concept neuron fails to fire.
    pub dropout: f64,
    /// Permit concepts to share neurons.
    pub allow_overlap: bool,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self::blocks(256, 6, 6, 300)
    }
}

impl SynthSpec {
    /// `concepts` disjoint blocks of `neurons_per_concept` consecutive
    /// neurons starting at 0, two spurious neurons per frame, no dropout,
    /// no co-occurrence.
    pub fn blocks(dim: usize, concepts: usize, neurons_per_concept: usize, frames_per_concept: usize) -> Self {
        let concepts = (0..concepts)
            .map(|c| PlantedConcept {
                name: DEFAULT_CONCEPTS.get(c).map_or_else(|| format!("concept {}", c + 1), |n| n.to_string()),
                neurons: (c * neurons_per_concept..(c + 1) * neurons_per_concept).map(|i| i as u32).collect(),
            })
            .collect();
        Self {
            dim,
            concepts,
            frames_per_concept,
            co_occurrence_prob: 0.0,
            noise_on: 2.0,
            dropout: 0.0,
            allow_overlap: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.dim == 0 {
            return Err(SynthError::InvalidSpec("dimension must be at least 1"));
        }
        if self.concepts.is_empty() {
            return Err(SynthError::InvalidSpec("at least one concept is required"));
        }
        if self.frames_per_concept == 0 {
            return Err(SynthError::InvalidSpec("frames_per_concept must be at least 1"));
        }
        for (name, value) in [("co_occurrence_prob", self.co_occurrence_prob), ("dropout", self.dropout)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::InvalidProbability { name, range: "[0, 1]", value });
            }
        }
        if !(self.noise_on >= 0.0 && self.noise_on.is_finite()) {
            return Err(SynthError::InvalidSpec("noise_on must be a finite non-negative number"));
        }
        if self.co_occurrence_prob > 0.0 && self.concepts.len() < 2 {
            return Err(SynthError::InvalidSpec("co-occurrence needs at least two concepts"));
        }
        let mut owner: alloc::collections::BTreeMap<u32, usize> = alloc::collections::BTreeMap::new();
        let mut names = BTreeSet::new();
        for (c, concept) in self.concepts.iter().enumerate() {
            if !names.insert(concept.name.as_str()) {
                return Err(SynthError::InvalidSpec("concept names must be unique"));
            }
            if concept.neurons.is_empty() {
                return Err(SynthError::InvalidSpec("every concept needs at least one neuron"));
            }
            for &n in &concept.neurons {
                if n as usize >= self.dim {
                    return Err(SynthError::NeuronOutOfRange { concept: concept.name.clone(), index: n, dim: self.dim });
                }
                if let Some(&other) = owner.get(&n) {
                    if other != c && !self.allow_overlap {
                        return Err(SynthError::Overlap {
                            first: self.concepts[other].name.clone(),
                            second: concept.name.clone(),
                            neuron: n,
                        });
                    }
                }
                owner.insert(n, c);
            }
        }
        Ok(())
    }

    /// Analytic mean active count per frame for disjoint concepts, ignoring
    /// the cap on spurious neurons at the size of the unowned pool.
    pub fn expected_active(&self) -> f64 {
        let sizes: Vec<f64> = self.concepts.iter().map(|c| distinct(&c.neurons) as f64).collect();
        let count = sizes.len() as f64;
        let primary = sizes.iter().sum::<f64>() / count;
        let secondary = if sizes.len() < 2 {
            0.0
        } else {
            let total: f64 = sizes.iter().sum();
            sizes.iter().map(|s| (total - s) / (count - 1.0)).sum::<f64>() / count
        };
        (1.0 - self.dropout) * (primary + self.co_occurrence_prob * secondary) + self.noise_on
    }

    pub fn concept_names(&self) -> Vec<String> {
        self.concepts.iter().map(|c| c.name.clone()).collect()
    }
}

fn distinct(neurons: &[u32]) -> usize {
    neurons.iter().collect::<BTreeSet<_>>().len()
}

/// Per-frame ground truth of a generated corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FrameTruth {
    /// Planted concepts, primary first.
    pub concepts: Vec<usize>,
    /// Concept neurons that fired (after dropout), ascending.
    pub planted: Vec<u32>,
    /// Spurious neurons, ascending.
    pub noise: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GroundTruth {
    pub frames: Vec<FrameTruth>,
}

/// Frame id of the `index`-th generated frame.
pub fn synth_frame_id(index: usize) -> String {
    format!("synth_{index:06}")
}

/// Generates `frames_per_concept` frames per concept, concept-major.
pub fn generate(spec: &SynthSpec) -> Result<(LabeledDataset, GroundTruth), SynthError> {
    spec.validate()?;
    let mut rng = rng_from_seed(derive_seed(spec.seed, Stream::Synth, 0));
    let owned: BTreeSet<u32> = spec.concepts.iter().flat_map(|c| c.neurons.iter().copied()).collect();
    let pool: Vec<u32> = (0..spec.dim as u32).filter(|n| !owned.contains(n)).collect();
    let poisson = if spec.noise_on > 0.0 {
        Some(Poisson::new(spec.noise_on).map_err(|_| SynthError::InvalidSpec("noise_on out of range"))?)
    } else {
        None
    };
    let keep = 1.0 - spec.dropout;
    let n_concepts = spec.concepts.len();
    let total = n_concepts * spec.frames_per_concept;

    let mut frame_ids = Vec::with_capacity(total);
    let mut masks = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut truth = Vec::with_capacity(total);

    for c in 0..n_concepts {
        for _ in 0..spec.frames_per_concept {
            let mut concepts = alloc::vec![c];
            if spec.co_occurrence_prob > 0.0 && rng.random_bool(spec.co_occurrence_prob) {
                let other = rng.random_range(0..n_concepts - 1);
                concepts.push(if other >= c { other + 1 } else { other });
            }
            let mut planted = BTreeSet::new();
            for &concept in &concepts {
                for &n in &spec.concepts[concept].neurons {
                    if rng.random_bool(keep) {
                        planted.insert(n);
                    }
                }
            }
            let spurious = match &poisson {
                Some(p) => (p.sample(&mut rng) as usize).min(pool.len()),
                None => 0,
            };
            let mut noise: Vec<u32> = index::sample(&mut rng, pool.len(), spurious).into_iter().map(|i| pool[i]).collect();
            noise.sort_unstable();

            let mask = ActivityMask::new(spec.dim, planted.iter().chain(&noise).map(|&n| n as usize))
                .expect("validated neuron indices");
            frame_ids.push(synth_frame_id(frame_ids.len()));
            masks.push(mask);
            labels.push(concepts.clone());
            truth.push(FrameTruth { concepts, planted: planted.into_iter().collect(), noise });
        }
    }
    let dataset = LabeledDataset::new(frame_ids, masks, labels, spec.concept_names())?;
    Ok((dataset, GroundTruth { frames: truth }))
}

/// Random-representation control: every neuron of every frame fires
/// independently with `activation_prob`; frame ids and labels are copied
/// from `reference`.
pub fn generate_random_masks(
    reference: &LabeledDataset,
    dim: usize,
    activation_prob: f64,
    seed: u64,
) -> Result<LabeledDataset, SynthError> {
    if !(activation_prob > 0.0 && activation_prob < 1.0) {
        return Err(SynthError::InvalidProbability { name: "activation_prob", range: "(0, 1)", value: activation_prob });
    }
    if dim == 0 {
        return Err(SynthError::InvalidSpec("dimension must be at least 1"));
    }
    if reference.labeled_frames() == 0 {
        return Err(SynthError::MissingReferenceLabels);
    }
    let mut rng = rng_from_seed(derive_seed(seed, Stream::Synth, 1));
    let masks = (0..reference.len())
        .map(|_| {
            let active: Vec<usize> = (0..dim).filter(|_| rng.random_bool(activation_prob)).collect();
            ActivityMask::new(dim, active).expect("indices below dim")
        })
        .collect();
    Ok(reference.with_masks(masks)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::sparsity_report;

    fn small_spec() -> SynthSpec {
        SynthSpec { frames_per_concept: 40, ..SynthSpec::default() }
    }

    #[test]
    fn clean_frames_equal_their_concept() {
        let spec = SynthSpec { noise_on: 0.0, ..small_spec() };
        let (data, truth) = generate(&spec).unwrap();
        assert_eq!(data.len(), 6 * 40);
        for f in 0..data.len() {
            let c = truth.frames[f].concepts[0];
            let expect: Vec<u32> = spec.concepts[c].neurons.clone();
            assert_eq!(data.mask(f).indices(), &expect[..]);
            assert_eq!(data.labels(f), &[c]);
        }
    }

    #[test]
    fn label_counts_match_spec() {
        let spec = SynthSpec { co_occurrence_prob: 0.3, dropout: 0.2, ..small_spec() };
        let (data, truth) = generate(&spec).unwrap();
        for c in 0..6 {
            let primary = truth.frames.iter().filter(|t| t.concepts[0] == c).count();
            assert_eq!(primary, 40);
        }
        for (f, t) in truth.frames.iter().enumerate() {
            let mut sorted = t.concepts.clone();
            sorted.sort_unstable();
            assert_eq!(data.labels(f), &sorted[..]);
            let mut all: Vec<u32> = t.planted.iter().chain(&t.noise).copied().collect();
            all.sort_unstable();
            assert_eq!(data.mask(f).indices(), &all[..]);
            assert!(t.noise.iter().all(|n| *n >= 36));
        }
        assert!(truth.frames.iter().any(|t| t.concepts.len() == 2));
    }

    #[test]
    fn same_seed_same_corpus() {
        let spec = SynthSpec { dropout: 0.3, co_occurrence_prob: 0.2, ..small_spec() };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec { seed: 1, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap().0, generate(&other).unwrap().0);
    }

    #[test]
    fn default_sparsity_is_about_eight() {
        let (data, _) = generate(&SynthSpec::default()).unwrap();
        let report = sparsity_report(data.masks()).unwrap();
        assert!((report.mean_active - 8.0).abs() < 0.3, "{}", report.mean_active);
        assert_eq!(SynthSpec::default().expected_active(), 8.0);
    }

    #[test]
    fn spec_validation() {
        let mut spec = small_spec();
        spec.concepts[0].neurons.push(256);
        assert!(matches!(spec.validate(), Err(SynthError::NeuronOutOfRange { index: 256, .. })));

        let mut spec = small_spec();
        spec.concepts[1].neurons[0] = 0;
        assert!(matches!(spec.validate(), Err(SynthError::Overlap { neuron: 0, .. })));
        spec.allow_overlap = true;
        assert!(spec.validate().is_ok());

        assert!(matches!(
            SynthSpec { dropout: 1.5, ..small_spec() }.validate(),
            Err(SynthError::InvalidProbability { name: "dropout", .. })
        ));
        assert!(SynthSpec { noise_on: -1.0, ..small_spec() }.validate().is_err());
    }

    #[test]
    fn random_masks_keep_labels() {
        let (data, _) = generate(&small_spec()).unwrap();
        let random = generate_random_masks(&data, 256, 8.0 / 256.0, 3).unwrap();
        assert_eq!(random.len(), data.len());
        for f in 0..data.len() {
            assert_eq!(random.labels(f), data.labels(f));
            assert_eq!(random.frame_ids()[f], data.frame_ids()[f]);
        }
        assert!(matches!(generate_random_masks(&data, 256, 0.0, 3), Err(SynthError::InvalidProbability { .. })));
        assert!(matches!(generate_random_masks(&data, 256, 1.0, 3), Err(SynthError::InvalidProbability { .. })));

        let unlabeled = LabeledDataset::new(
            alloc::vec!["a".into()],
            alloc::vec![ActivityMask::empty(4)],
            alloc::vec![alloc::vec![]],
            alloc::vec!["x".into()],
        )
        .unwrap();
        assert_eq!(generate_random_masks(&unlabeled, 4, 0.5, 0), Err(SynthError::MissingReferenceLabels));
    }
}
