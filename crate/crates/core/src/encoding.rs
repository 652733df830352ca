//! Encoding matrices, per-neuron activation statistics and binarization.
//!
//! An encoding is the real-valued hidden-layer state recorded for one frame.
//! Binarization turns it into an [`ActivityMask`], the sorted set of neurons
//! considered active. Two rules are supported: adaptive (a neuron is active
//! when its absolute activation exceeds that neuron's mean absolute
//! activation over a calibration corpus) and fixed (absolute activation
//! above a global threshold).

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodingError {
    #[error("empty calibration corpus")]
    EmptyCorpus,
    #[error("encoding dimension must be at least 1")]
    ZeroDim,
    #[error("{values} values do not fill {frames} rows of {dim} neurons")]
    Shape { values: usize, frames: usize, dim: usize },
    #[error("row {row} has {found} values, expected {expected}")]
    RowLength { row: usize, found: usize, expected: usize },
    #[error("{ids} frame ids for {frames} rows")]
    FrameIdCount { ids: usize, frames: usize },
    #[error("non-finite activation at frame {frame}, neuron {neuron}")]
    NonFinite { frame: usize, neuron: usize },
    #[error("duplicate frame id `{0}`")]
    DuplicateFrameId(String),
    #[error("activation vector has {found} values, statistics cover {expected} neurons")]
    LengthMismatch { found: usize, expected: usize },
    #[error("threshold must be a non-negative number, got {0}")]
    InvalidThreshold(f64),
    #[error("neuron index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("masks have mixed dimensions ({first} and {other})")]
    MixedDims { first: usize, other: usize },
    #[error("no masks to summarize")]
    NoMasks,
}

/// Frames x neurons activation matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMatrix {
    frame_ids: Vec<String>,
    values: Vec<f32>,
    dim: usize,
}

impl EncodingMatrix {
    /// Builds a matrix from row-major values.
    ///
    /// Rejects an empty corpus, a zero dimension, non-finite values and
    /// duplicate frame ids.
    pub fn new(frame_ids: Vec<String>, values: Vec<f32>, dim: usize) -> Result<Self, EncodingError> {
        if dim == 0 {
            return Err(EncodingError::ZeroDim);
        }
        let frames = frame_ids.len();
        if frames == 0 {
            return Err(EncodingError::EmptyCorpus);
        }
        if values.len() != frames * dim {
            return Err(EncodingError::Shape { values: values.len(), frames, dim });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(EncodingError::NonFinite { frame: pos / dim, neuron: pos % dim });
        }
        let mut seen = BTreeSet::new();
        for id in &frame_ids {
            if !seen.insert(id.as_str()) {
                return Err(EncodingError::DuplicateFrameId(id.clone()));
            }
        }
        Ok(Self { frame_ids, values, dim })
    }

    pub fn from_rows(frame_ids: Vec<String>, rows: &[Vec<f32>]) -> Result<Self, EncodingError> {
        if frame_ids.len() != rows.len() {
            return Err(EncodingError::FrameIdCount { ids: frame_ids.len(), frames: rows.len() });
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(EncodingError::RowLength { row, found: r.len(), expected: dim });
            }
            values.extend_from_slice(r);
        }
        if rows.is_empty() {
            return Err(EncodingError::EmptyCorpus);
        }
        Self::new(frame_ids, values, dim)
    }

    pub fn frames(&self) -> usize {
        self.frame_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_ids(&self) -> &[String] {
        &self.frame_ids
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, frame: usize) -> &[f32] {
        &self.values[frame * self.dim..(frame + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// Copy with every activation multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Result<Self, EncodingError> {
        let values = self.values.iter().map(|v| v * factor).collect();
        Self::new(self.frame_ids.clone(), values, self.dim)
    }
}

/// Per-neuron mean absolute activation over a calibration corpus.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ActivationStats {
    pub mean_abs: Vec<f64>,
    pub calibration_frames: usize,
}

impl ActivationStats {
    /// Accumulates statistics from raw rows of length `dim`.
    pub fn from_rows<'a, I>(dim: usize, rows: I) -> Result<Self, EncodingError>
    where
        I: IntoIterator<Item = &'a [f32]>,
    {
        let mut sums = alloc::vec![0.0f64; dim];
        let mut frames = 0usize;
        for (row_idx, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(EncodingError::RowLength { row: row_idx, found: row.len(), expected: dim });
            }
            for (acc, v) in sums.iter_mut().zip(row) {
                *acc += f64::from(v.abs());
            }
            frames += 1;
        }
        if frames == 0 {
            return Err(EncodingError::EmptyCorpus);
        }
        let n = frames as f64;
        let mean_abs = sums.into_iter().map(|s| s / n).collect();
        Ok(Self { mean_abs, calibration_frames: frames })
    }

    pub fn dim(&self) -> usize {
        self.mean_abs.len()
    }
}

/// Mean of `|value|` per neuron over every frame of `matrix`.
pub fn compute_activation_stats(matrix: &EncodingMatrix) -> ActivationStats {
    ActivationStats::from_rows(matrix.dim(), matrix.rows())
        .expect("an EncodingMatrix always holds at least one full row")
}

/// Sorted, duplicate-free set of active neuron indices in `[0, dim)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivityMask {
    dim: usize,
    active: Vec<u32>,
}

impl ActivityMask {
    /// Builds a mask from indices in any order; duplicates are merged.
    pub fn new<I>(dim: usize, indices: I) -> Result<Self, EncodingError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut active = Vec::new();
        for index in indices {
            if index >= dim || index > u32::MAX as usize {
                return Err(EncodingError::IndexOutOfRange { index, dim });
            }
            active.push(index as u32);
        }
        active.sort_unstable();
        active.dedup();
        Ok(Self { dim, active })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, active: Vec::new() }
    }

    /// Active set of a 0/1 (or any real) indicator vector: entries above 0.5.
    pub fn from_indicator(values: &[f32]) -> Self {
        let active = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.5)
            .map(|(i, _)| i as u32)
            .collect();
        Self { dim: values.len(), active }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[u32] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, neuron: u32) -> bool {
        self.active.binary_search(&neuron).is_ok()
    }

    /// True when every index in `neurons` is active.
    pub fn contains_all(&self, neurons: &[u32]) -> bool {
        neurons.iter().all(|&n| self.contains(n))
    }

    pub fn is_subset_of(&self, other: &ActivityMask) -> bool {
        other.contains_all(&self.active)
    }

    /// Dense 0/1 representation.
    pub fn to_indicator(&self) -> Vec<f32> {
        let mut dense = alloc::vec![0.0f32; self.dim];
        for &i in &self.active {
            dense[i as usize] = 1.0;
        }
        dense
    }
}

fn mask_where<F>(row: &[f32], mut is_active: F) -> ActivityMask
where
    F: FnMut(usize, f32) -> bool,
{
    let active = row
        .iter()
        .enumerate()
        .filter(|&(i, &v)| is_active(i, v))
        .map(|(i, _)| i as u32)
        .collect();
    ActivityMask { dim: row.len(), active }
}

/// Neuron `i` is active iff `|row[i]| > stats.mean_abs[i]`.
pub fn binarize_adaptive(row: &[f32], stats: &ActivationStats) -> Result<ActivityMask, EncodingError> {
    if row.len() != stats.dim() {
        return Err(EncodingError::LengthMismatch { found: row.len(), expected: stats.dim() });
    }
    Ok(mask_where(row, |i, v| f64::from(v.abs()) > stats.mean_abs[i]))
}

/// Neuron `i` is active iff `|row[i]| > threshold`.
pub fn binarize_fixed(row: &[f32], threshold: f64) -> Result<ActivityMask, EncodingError> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(EncodingError::InvalidThreshold(threshold));
    }
    Ok(mask_where(row, |_, v| f64::from(v.abs()) > threshold))
}

/// Binarization rule applied to a whole corpus.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Binarization {
    /// Per-neuron mean absolute activation over the corpus being binarized.
    #[default]
    Adaptive,
    Fixed(f64),
}

impl Binarization {
    pub fn apply(&self, matrix: &EncodingMatrix) -> Result<Vec<ActivityMask>, EncodingError> {
        match *self {
            Binarization::Adaptive => {
                let stats = compute_activation_stats(matrix);
                matrix.rows().map(|row| binarize_adaptive(row, &stats)).collect()
            }
            Binarization::Fixed(t) => matrix.rows().map(|row| binarize_fixed(row, t)).collect(),
        }
    }
}

/// Descriptive statistics of active-neuron counts over a corpus of masks.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SparsityReport {
    pub frames: usize,
    pub dim: usize,
    pub mean_active: f64,
    pub min_active: usize,
    pub max_active: usize,
    /// Population variance of the per-frame active counts.
    pub var_active: f64,
    pub pct_active: f64,
    pub ever_active_fraction: f64,
    pub max_neuron_frequency: f64,
}

pub fn sparsity_report(masks: &[ActivityMask]) -> Result<SparsityReport, EncodingError> {
    let first = masks.first().ok_or(EncodingError::NoMasks)?;
    let dim = first.dim();
    let mut firing = alloc::vec![0usize; dim];
    let mut total = 0usize;
    let mut min_active = usize::MAX;
    let mut max_active = 0usize;
    for mask in masks {
        if mask.dim() != dim {
            return Err(EncodingError::MixedDims { first: dim, other: mask.dim() });
        }
        let n = mask.len();
        total += n;
        min_active = min_active.min(n);
        max_active = max_active.max(n);
        for &i in mask.indices() {
            firing[i as usize] += 1;
        }
    }
    let frames = masks.len() as f64;
    let mean_active = total as f64 / frames;
    let var_active = masks
        .iter()
        .map(|m| {
            let d = m.len() as f64 - mean_active;
            d * d
        })
        .sum::<f64>()
        / frames;
    let ever = firing.iter().filter(|&&c| c > 0).count();
    let busiest = firing.iter().copied().max().unwrap_or(0);
    let dim_f = dim.max(1) as f64;
    Ok(SparsityReport {
        frames: masks.len(),
        dim,
        mean_active,
        min_active,
        max_active,
        var_active,
        pct_active: if dim == 0 { 0.0 } else { mean_active / dim_f },
        ever_active_fraction: if dim == 0 { 0.0 } else { ever as f64 / dim_f },
        max_neuron_frequency: busiest as f64 / frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    fn matrix(rows: &[Vec<f32>]) -> EncodingMatrix {
        EncodingMatrix::from_rows(ids(rows.len()), rows).unwrap()
    }

    #[test]
    fn zero_matrix_has_zero_means() {
        let m = matrix(&vec![vec![0.0; 3]; 4]);
        assert_eq!(compute_activation_stats(&m).mean_abs, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn mean_abs_matches_row_arithmetic() {
        let m = matrix(&[vec![1.0, -2.0], vec![3.0, 0.0], vec![-1.0, 2.0]]);
        let stats = compute_activation_stats(&m);
        assert_eq!(stats.mean_abs, vec![5.0 / 3.0, 4.0 / 3.0]);
        assert_eq!(stats.calibration_frames, 3);

        let doubled = compute_activation_stats(&m.scaled(2.0).unwrap());
        assert_eq!(doubled.mean_abs, vec![10.0 / 3.0, 8.0 / 3.0]);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert_eq!(ActivationStats::from_rows(3, core::iter::empty()), Err(EncodingError::EmptyCorpus));
        assert_eq!(EncodingMatrix::new(vec![], vec![], 3), Err(EncodingError::EmptyCorpus));
        let e = EncodingError::EmptyCorpus.to_string();
        assert_eq!(e, "empty calibration corpus");
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(
            EncodingMatrix::new(vec!["a".into(), "a".into()], vec![0.0; 2], 1),
            Err(EncodingError::DuplicateFrameId(_))
        ));
        assert!(matches!(
            EncodingMatrix::new(vec!["a".into()], vec![f32::NAN, 1.0], 2),
            Err(EncodingError::NonFinite { frame: 0, neuron: 0 })
        ));
        assert!(matches!(
            EncodingMatrix::from_rows(ids(2), &[vec![1.0], vec![1.0, 2.0]]),
            Err(EncodingError::RowLength { row: 1, .. })
        ));
    }

    #[test]
    fn adaptive_binarization() {
        let stats = ActivationStats { mean_abs: vec![5.0 / 3.0, 4.0 / 3.0], calibration_frames: 3 };
        let mask = binarize_adaptive(&[2.0, -0.5], &stats).unwrap();
        assert_eq!(mask.indices(), &[0]);
        assert!(binarize_adaptive(&[0.0, 0.0], &stats).unwrap().is_empty());
        assert!(binarize_adaptive(&[0.0], &stats).is_err());

        let at_mean = ActivationStats { mean_abs: vec![0.5, 2.0], calibration_frames: 1 };
        assert!(binarize_adaptive(&[0.5, -2.0], &at_mean).unwrap().is_empty());
    }

    #[test]
    fn fixed_binarization() {
        assert_eq!(binarize_fixed(&[0.1, 0.9, -2.0], 0.5).unwrap().indices(), &[1, 2]);
        assert_eq!(binarize_fixed(&[0.1, -0.2, 3.0], 0.0).unwrap().len(), 3);
        assert!(binarize_fixed(&[1e30, -2.0], f64::MAX).unwrap().is_empty());
        assert_eq!(binarize_fixed(&[1.0], -0.1), Err(EncodingError::InvalidThreshold(-0.1)));
        assert!(binarize_fixed(&[1.0], f64::NAN).is_err());
    }

    #[test]
    fn sparsity_by_hand() {
        let masks = [
            ActivityMask::new(4, [0]).unwrap(),
            ActivityMask::new(4, [1, 0]).unwrap(),
        ];
        let r = sparsity_report(&masks).unwrap();
        assert_eq!(r.mean_active, 1.5);
        assert_eq!(r.min_active, 1);
        assert_eq!(r.max_active, 2);
        assert_eq!(r.var_active, 0.25);
        assert_eq!(r.pct_active, 1.5 / 4.0);
        assert_eq!(r.ever_active_fraction, 0.5);
        assert_eq!(r.max_neuron_frequency, 1.0);

        let empty = sparsity_report(&[ActivityMask::empty(8), ActivityMask::empty(8)]).unwrap();
        assert_eq!(empty.mean_active, 0.0);
        assert_eq!(empty.ever_active_fraction, 0.0);
        assert_eq!(empty.max_neuron_frequency, 0.0);

        assert_eq!(sparsity_report(&[]), Err(EncodingError::NoMasks));
        assert!(matches!(
            sparsity_report(&[ActivityMask::empty(2), ActivityMask::empty(3)]),
            Err(EncodingError::MixedDims { .. })
        ));
    }

    #[test]
    fn mask_construction_sorts_and_checks_range() {
        let m = ActivityMask::new(10, [7, 2, 7, 4]).unwrap();
        assert_eq!(m.indices(), &[2, 4, 7]);
        assert!(m.contains(4) && !m.contains(5));
        assert!(ActivityMask::new(3, [3]).is_err());
        assert_eq!(ActivityMask::from_indicator(&m.to_indicator()), m);
    }

    fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f32>>> {
        (1usize..8, 1usize..12).prop_flat_map(|(dim, frames)| {
            proptest::collection::vec(proptest::collection::vec(-100.0f32..100.0, dim), frames)
        })
    }

    proptest! {
        #[test]
        fn adaptive_pipeline_is_scale_invariant_for_powers_of_two(rows in rows_strategy(), exp in -8i32..8) {
            let m = matrix(&rows);
            let c = libm::exp2f(exp as f32);
            let scaled = m.scaled(c).unwrap();
            let a = Binarization::Adaptive.apply(&m).unwrap();
            let b = Binarization::Adaptive.apply(&scaled).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn adaptive_pipeline_is_scale_invariant(rows in rows_strategy(), c in 0.01f32..100.0) {
            let m = matrix(&rows);
            // Arbitrary factors round in f32; skip entries sitting on the threshold to rounding precision.
            let stats = compute_activation_stats(&m);
            let near_tie = m.rows().any(|row| {
                row.iter().zip(&stats.mean_abs).any(|(v, mean)| {
                    let gap = f64::from(v.abs()) - mean;
                    gap != 0.0 && gap.abs() <= 1e-5 * mean.max(1e-30)
                })
            });
            prop_assume!(!near_tie);
            let scaled = m.scaled(c).unwrap();
            prop_assert_eq!(Binarization::Adaptive.apply(&m).unwrap(), Binarization::Adaptive.apply(&scaled).unwrap());
        }

        #[test]
        fn masks_survive_rebinarization(dim in 1usize..64, bits in proptest::collection::vec(any::<bool>(), 64), t in 0.01f64..0.99) {
            let mask = ActivityMask::new(dim, (0..dim).filter(|&i| bits[i])).unwrap();
            let again = binarize_fixed(&mask.to_indicator(), t).unwrap();
            prop_assert_eq!(again, mask);
        }

        #[test]
        fn sparsity_is_order_invariant(sets in proptest::collection::vec(proptest::collection::btree_set(0usize..16, 0..10), 1..20)) {
            let masks: Vec<_> = sets.iter().map(|s| ActivityMask::new(16, s.iter().copied()).unwrap()).collect();
            let mut reversed = masks.clone();
            reversed.reverse();
            let a = sparsity_report(&masks).unwrap();
            let b = sparsity_report(&reversed).unwrap();
            prop_assert_eq!(a.mean_active, b.mean_active);
            prop_assert_eq!(a.min_active, b.min_active);
            prop_assert_eq!(a.max_active, b.max_active);
            prop_assert!((a.var_active - b.var_active).abs() < 1e-12);
            prop_assert_eq!(a.ever_active_fraction, b.ever_active_fraction);
            prop_assert_eq!(a.max_neuron_frequency, b.max_neuron_frequency);
            prop_assert!(a.min_active as f64 <= a.mean_active && a.mean_active <= a.max_active as f64);
            prop_assert!((0.0..=1.0).contains(&a.pct_active));
        }
    }
}
