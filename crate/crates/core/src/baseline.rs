//! Hinge-loss linear separator over binary masks.
//!
//! Minimizes `λ/2 ‖w‖² + mean(max(0, 1 − y (w·x + b)))` over 0/1 mask
//! vectors by full-batch subgradient descent with step `η₀ / √t`, keeping
//! the iterate with the lowest objective. Unlike FCM it needs negative
//! examples.

use alloc::vec::Vec;

use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::ActivityMask;
use crate::evaluation::{EvalError, FewShotLearner, LearnerParams};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("no positive examples")]
    NoPositives,
    #[error("no negative examples")]
    NoNegatives,
    #[error("mask has {found} neurons, model expects {expected}")]
    DimMismatch { found: usize, expected: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("model parameters must be finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LinearConfig {
    /// L2 penalty λ on the weights (the bias is not penalized).
    pub regularization: f64,
    pub epochs: usize,
    /// Initial step size η₀.
    pub learning_rate: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self { regularization: 0.01, epochs: 500, learning_rate: 0.5 }
    }
}

impl LinearConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(BaselineError::InvalidConfig("regularization must be a finite non-negative number"));
        }
        if self.epochs == 0 {
            return Err(BaselineError::InvalidConfig("at least one epoch is required"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(BaselineError::InvalidConfig("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
    pub config: LinearConfig,
    pub seed: u64,
    pub training_accuracy: f64,
    /// Set when the training set admits no better-than-chance separator
    /// (for example a mask labeled both positive and negative).
    pub degenerate: bool,
}

impl LinearModel {
    /// All-zero model; classifies every mask as negative.
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: alloc::vec![0.0; dim],
            bias: 0.0,
            config: LinearConfig::default(),
            seed: 0,
            training_accuracy: 0.0,
            degenerate: true,
        }
    }

    pub fn from_parts(
        weights: Vec<f64>,
        bias: f64,
        config: LinearConfig,
        seed: u64,
        training_accuracy: f64,
        degenerate: bool,
    ) -> Result<Self, BaselineError> {
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(BaselineError::NonFinite);
        }
        Ok(Self { weights, bias, config, seed, training_accuracy, degenerate })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `w·x + b` for the 0/1 vector of `mask`.
    pub fn score(&self, mask: &ActivityMask) -> Result<f64, BaselineError> {
        if mask.dim() != self.dim() {
            return Err(BaselineError::DimMismatch { found: mask.dim(), expected: self.dim() });
        }
        Ok(sparse_dot(&self.weights, mask) + self.bias)
    }
}

fn sparse_dot(weights: &[f64], mask: &ActivityMask) -> f64 {
    mask.indices().iter().map(|&i| weights[i as usize]).sum()
}

/// True iff `w·x + b > 0`; an exact zero is negative.
pub fn predict(model: &LinearModel, mask: &ActivityMask) -> Result<bool, BaselineError> {
    Ok(model.score(mask)? > 0.0)
}

fn objective(weights: &[f64], bias: f64, lambda: f64, samples: &[(&ActivityMask, f64)]) -> f64 {
    let norm: f64 = weights.iter().map(|w| w * w).sum();
    let hinge: f64 = samples
        .iter()
        .map(|(x, y)| {
            let m = y * (sparse_dot(weights, x) + bias);
            if m < 1.0 {
                1.0 - m
            } else {
                0.0
            }
        })
        .sum();
    0.5 * lambda * norm + hinge / samples.len() as f64
}

/// Fits a separator between `pos` and `neg` masks.
///
/// Deterministic for a fixed `seed`, which only sets the small random
/// initial weights.
pub fn train_linear(
    pos: &[&ActivityMask],
    neg: &[&ActivityMask],
    config: &LinearConfig,
    seed: u64,
) -> Result<LinearModel, BaselineError> {
    config.validate()?;
    let dim = pos.first().ok_or(BaselineError::NoPositives)?.dim();
    if neg.is_empty() {
        return Err(BaselineError::NoNegatives);
    }
    if let Some(m) = pos.iter().chain(neg).find(|m| m.dim() != dim) {
        return Err(BaselineError::DimMismatch { found: m.dim(), expected: dim });
    }
    let samples: Vec<(&ActivityMask, f64)> =
        pos.iter().map(|&m| (m, 1.0)).chain(neg.iter().map(|&m| (m, -1.0))).collect();
    let n = samples.len() as f64;
    let lambda = config.regularization;

    let mut rng = rng_from_seed(seed);
    let mut w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1e-3..1e-3)).collect();
    let mut b = 0.0f64;
    let mut best = (objective(&w, b, lambda, &samples), w.clone(), b);
    let mut grad = alloc::vec![0.0f64; dim];

    for t in 1..=config.epochs {
        let eta = config.learning_rate / libm::sqrt(t as f64);
        for (g, wi) in grad.iter_mut().zip(&w) {
            *g = lambda * wi;
        }
        let mut grad_b = 0.0;
        for (x, y) in &samples {
            if y * (sparse_dot(&w, x) + b) < 1.0 {
                for &i in x.indices() {
                    grad[i as usize] -= y / n;
                }
                grad_b -= y / n;
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= eta * g;
        }
        b -= eta * grad_b;
        let obj = objective(&w, b, lambda, &samples);
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
    }

    let (_, weights, bias) = best;
    let correct = samples.iter().filter(|(x, y)| (sparse_dot(&weights, x) + bias > 0.0) == (*y > 0.0)).count();
    let training_accuracy = correct as f64 / n;
    let conflicting = pos.iter().any(|p| neg.iter().any(|q| p.indices() == q.indices()));
    Ok(LinearModel {
        weights,
        bias,
        config: *config,
        seed,
        training_accuracy,
        degenerate: conflicting || training_accuracy <= 0.5,
    })
}

/// Linear separator as an evaluation learner; consumes `k` negatives per trial.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearLearner {
    pub config: LinearConfig,
}

impl LinearLearner {
    pub fn new(config: LinearConfig) -> Self {
        Self { config }
    }
}

impl FewShotLearner for LinearLearner {
    type Model = LinearModel;

    fn params(&self) -> LearnerParams {
        LearnerParams::Linear(self.config)
    }

    fn uses_negative_examples(&self) -> bool {
        true
    }

    fn decision_threshold(&self) -> f64 {
        0.0
    }

    fn fit(&self, _concept: &str, positives: &[&ActivityMask], negatives: &[&ActivityMask], seed: u64) -> Result<LinearModel, EvalError> {
        Ok(train_linear(positives, negatives, &self.config, seed)?)
    }

    fn score(&self, model: &LinearModel, mask: &ActivityMask) -> Result<f64, EvalError> {
        Ok(model.score(mask)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(dim: usize, ix: &[usize]) -> ActivityMask {
        ActivityMask::new(dim, ix.iter().copied()).unwrap()
    }

    #[test]
    fn separates_two_axis_points() {
        let p = mask(2, &[0]);
        let n = mask(2, &[1]);
        let model = train_linear(&[&p], &[&n], &LinearConfig::default(), 1).unwrap();
        assert!(predict(&model, &p).unwrap());
        assert!(!predict(&model, &n).unwrap());
        assert_eq!(model.training_accuracy, 1.0);
        assert!(!model.degenerate);
    }

    #[test]
    fn disjoint_supports_are_separated() {
        let pos: Vec<_> = (0..5).map(|i| mask(64, &[0, 1, 2, 3, 10 + i])).collect();
        let neg: Vec<_> = (0..5).map(|i| mask(64, &[30, 31, 32, 33, 40 + i])).collect();
        let pr: Vec<_> = pos.iter().collect();
        let nr: Vec<_> = neg.iter().collect();
        let model = train_linear(&pr, &nr, &LinearConfig::default(), 7).unwrap();
        assert_eq!(model.training_accuracy, 1.0);
        assert!(pos.iter().all(|m| predict(&model, m).unwrap()));
        assert!(neg.iter().all(|m| !predict(&model, m).unwrap()));
    }

    #[test]
    fn identical_classes_are_degenerate() {
        let set: Vec<_> = (0..5).map(|i| mask(16, &[i, i + 1])).collect();
        let r: Vec<_> = set.iter().collect();
        let model = train_linear(&r, &r, &LinearConfig::default(), 0).unwrap();
        assert!(model.training_accuracy <= 0.5);
        assert!(model.degenerate);
    }

    #[test]
    fn deterministic_under_seed() {
        let p = mask(8, &[0, 2]);
        let n = mask(8, &[1, 3]);
        let a = train_linear(&[&p], &[&n], &LinearConfig::default(), 11).unwrap();
        let b = train_linear(&[&p], &[&n], &LinearConfig::default(), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_model_and_errors() {
        let zero = LinearModel::zeros(4);
        assert!(!predict(&zero, &mask(4, &[0, 1, 2, 3])).unwrap());
        assert!(!predict(&zero, &mask(4, &[])).unwrap());
        assert_eq!(predict(&zero, &mask(5, &[])), Err(BaselineError::DimMismatch { found: 5, expected: 4 }));

        let p = mask(4, &[0]);
        let cfg = LinearConfig::default();
        assert_eq!(train_linear(&[], &[&p], &cfg, 0), Err(BaselineError::NoPositives));
        assert_eq!(train_linear(&[&p], &[], &cfg, 0), Err(BaselineError::NoNegatives));
        let bad = LinearConfig { epochs: 0, ..cfg };
        assert!(matches!(train_linear(&[&p], &[&p], &bad, 0), Err(BaselineError::InvalidConfig(_))));
        assert_eq!(LinearModel::from_parts(alloc::vec![f64::NAN], 0.0, cfg, 0, 1.0, false), Err(BaselineError::NonFinite));
    }
}
