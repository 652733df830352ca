//! Few-shot concept extraction from sparse neural activation patterns.
//!
//! A concept is defined by the strongest co-activation tuples (single
//! neurons, pairs or triplets) summed over a handful of example encodings,
//! and detected in a new encoding by adding up the normalized weights of the
//! tuples it reproduces.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and parallel trial execution live in the `fcm` companion crate.
//!
//! Module map:
//!
//! - [`encoding`]: activation matrices, per-neuron statistics, binarization,
//!   sparsity statistics.
//! - [`graph`]: co-activation tuple graphs and strongest-connection selection.
//! - [`concept`]: concept extraction, evidence scoring, detection.
//! - [`evaluation`]: balanced splits, metrics, bootstrap reports, sweeps.
//! - [`synth`]: planted-concept corpora and the random-representation control.
//! - [`baseline`]: hinge-loss linear separator used as a comparison learner.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod concept;
pub mod encoding;
pub mod evaluation;
pub mod graph;
pub mod rng;
pub mod synth;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use baseline::{predict, train_linear, LinearConfig, LinearLearner, LinearModel};
pub use concept::{
    detect, evidence, extract_concept, ConceptDefinition, DefinitionEntry, DefinitionMeta,
    DefinitionWarning, DetectionResult, FcmConfig,
};
pub use encoding::{
    binarize_adaptive, binarize_fixed, compute_activation_stats, sparsity_report,
    ActivationStats, ActivityMask, Binarization, EncodingMatrix, SparsityReport,
};
pub use evaluation::{
    bootstrap_eval, build_balanced_split, evaluate_concept, sweep_complexity,
    sweep_num_examples, sweep_threshold, BalancedSplit, EvalPlan, EvalReport, FcmLearner,
    FewShotLearner, LabeledDataset, Metrics, SplitPlan,
};
pub use graph::{sum_graphs, top_n, tuples_from_mask, CoactivationGraph, NeuronTuple, PatternOrder};
pub use synth::{generate, generate_random_masks, GroundTruth, PlantedConcept, SynthSpec};
