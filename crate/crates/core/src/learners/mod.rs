//! Regression learners and the cross-validated stacking ensemble used for
//! every nuisance fit and for the blip regression.
//!
//! Every learner minimizes a weighted loss. [`fit_learner`] validates inputs
//! and clips predictions to the target's range: `[0, 1]` for probability
//! targets, and the observed range widened by 10% on each side for
//! continuous targets.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Debug;

use thiserror::Error;

pub mod adaptive;
pub mod boost;
pub mod glm;
pub mod linalg;
pub mod mean;
pub mod penalized;
pub mod saturated;
pub mod stack;

pub use adaptive::{fit_adaptive_lasso, AdaptiveLassoModel};
pub use boost::GbStumpLearner;
pub use glm::GlmLearner;
pub use linalg::Matrix;
pub use mean::MeanLearner;
pub use penalized::{Penalty, PenalizedLearner};
pub use saturated::SaturatedLearner;
pub use stack::{fit_stack, StackLearner, StackedEnsemble};

/// Learner identifiers accepted by [`learner_from_id`].
pub const LEARNER_IDS: [&str; 6] = ["mean", "glm", "lasso", "ridge", "gbstump", "saturated"];

/// Default ensemble membership.
pub const DEFAULT_STACK: [&str; 5] = ["mean", "glm", "lasso", "ridge", "gbstump"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("at least two rows are required, got {0}")]
    TooFewRows(usize),
    #[error("features have {x} rows, target {y}, weights {w}")]
    DimensionMismatch { x: usize, y: usize, w: usize },
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("non-finite target value")]
    NonFiniteTarget,
    #[error("probability target outside [0, 1]")]
    TargetOutOfRange,
    #[error("weights must be nonnegative with a positive sum")]
    BadWeights,
    #[error("design is singular")]
    SingularDesign,
    #[error("{cells} distinct feature cells for {rows} rows; not a discrete design")]
    TooManyCells { cells: usize, rows: usize },
    #[error("unknown learner `{0}`")]
    UnknownLearner(String),
    #[error("every stack member failed: {0}")]
    AllMembersFailed(String),
}

/// Kind of regression target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Values in `[0, 1]`; fitted on the logit scale where the learner has
    /// a link.
    Probability,
    /// Unbounded real values; squared-error loss.
    Continuous,
}

/// A trainable algorithm.
pub trait Learner: Send + Sync + Debug {
    fn id(&self) -> &str;

    /// Fits on already-validated inputs. Use [`fit_learner`] instead, which
    /// validates and clips.
    fn fit_unchecked(
        &self,
        x: &Matrix,
        y: &[f64],
        w: &[f64],
        target: Target,
        seed: u64,
    ) -> Result<Box<dyn Predictor>, LearnError>;
}

/// A fitted model.
pub trait Predictor: Send + Sync + Debug {
    fn predict(&self, x: &Matrix) -> Vec<f64>;

    /// Conditions worth surfacing in a report (e.g. a ridge fallback).
    fn flags(&self) -> Vec<String> {
        Vec::new()
    }
}

/// A fitted learner with range clipping applied to its predictions.
#[derive(Debug)]
pub struct Model {
    id: String,
    inner: Box<dyn Predictor>,
    lo: f64,
    hi: f64,
}

impl Model {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

impl Predictor for Model {
    fn predict(&self, x: &Matrix) -> Vec<f64> {
        let mut p = self.inner.predict(x);
        for v in &mut p {
            *v = if v.is_nan() { self.lo } else { v.clamp(self.lo, self.hi) };
        }
        p
    }

    fn flags(&self) -> Vec<String> {
        self.inner.flags()
    }
}

pub(crate) fn check_inputs(x: &Matrix, y: &[f64], w: &[f64], target: Target) -> Result<(), LearnError> {
    if x.rows() != y.len() || y.len() != w.len() {
        return Err(LearnError::DimensionMismatch {
            x: x.rows(),
            y: y.len(),
            w: w.len(),
        });
    }
    if y.len() < 2 {
        return Err(LearnError::TooFewRows(y.len()));
    }
    if !x.all_finite() {
        return Err(LearnError::NonFiniteFeature);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFiniteTarget);
    }
    if target == Target::Probability && y.iter().any(|v| *v < 0.0 || *v > 1.0) {
        return Err(LearnError::TargetOutOfRange);
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(w.iter().sum::<f64>() > 0.0) {
        return Err(LearnError::BadWeights);
    }
    Ok(())
}

pub(crate) fn target_range(y: &[f64], target: Target) -> (f64, f64) {
    match target {
        Target::Probability => (0.0, 1.0),
        Target::Continuous => {
            let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pad = 0.1 * (hi - lo);
            (lo - pad, hi + pad)
        }
    }
}

/// Validates inputs, fits `learner`, and wraps the result with range
/// clipping. Deterministic given the inputs and `seed`.
pub fn fit_learner(
    learner: &dyn Learner,
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    target: Target,
    seed: u64,
) -> Result<Model, LearnError> {
    check_inputs(x, y, w, target)?;
    let inner = learner.fit_unchecked(x, y, w, target, seed)?;
    let (lo, hi) = target_range(y, target);
    Ok(Model {
        id: learner.id().to_string(),
        inner,
        lo,
        hi,
    })
}

/// Looks up a learner by identifier.
pub fn learner_from_id(id: &str) -> Result<Box<dyn Learner>, LearnError> {
    Ok(match id {
        "mean" => Box::new(MeanLearner),
        "glm" => Box::new(GlmLearner::default()),
        "lasso" => Box::new(PenalizedLearner::cv(Penalty::Lasso)),
        "ridge" => Box::new(PenalizedLearner::cv(Penalty::Ridge)),
        "gbstump" => Box::new(GbStumpLearner::default()),
        "saturated" => Box::new(SaturatedLearner),
        other => return Err(LearnError::UnknownLearner(other.to_string())),
    })
}

/// Builds a stack from identifiers.
pub fn stack_from_ids<S: AsRef<str>>(ids: &[S], folds: usize) -> Result<StackLearner, LearnError> {
    let members = ids
        .iter()
        .map(|id| learner_from_id(id.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StackLearner::new(members, folds))
}

/// Row indices split into `k` folds of near-equal size by a seeded shuffle.
pub(crate) fn fold_ids(n: usize, k: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut fold = alloc::vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    fold
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn registry_knows_every_id() {
        for id in LEARNER_IDS {
            assert_eq!(learner_from_id(id).unwrap().id(), id);
        }
        assert!(matches!(learner_from_id("mars"), Err(LearnError::UnknownLearner(_))));
    }

    #[test]
    fn inputs_are_checked() {
        let x = Matrix::from_columns(vec!["x".into()], &[vec![1.0, f64::NAN]]);
        let r = fit_learner(&MeanLearner, &x, &[0.0, 1.0], &[1.0, 1.0], Target::Continuous, 0);
        assert_eq!(r.unwrap_err(), LearnError::NonFiniteFeature);
        let x = Matrix::from_columns(vec!["x".into()], &[vec![1.0]]);
        let r = fit_learner(&MeanLearner, &x, &[0.0], &[1.0], Target::Continuous, 0);
        assert_eq!(r.unwrap_err(), LearnError::TooFewRows(1));
        let x = Matrix::from_columns(vec!["x".into()], &[vec![1.0, 2.0]]);
        let r = fit_learner(&MeanLearner, &x, &[0.0, 2.0], &[1.0, 1.0], Target::Probability, 0);
        assert_eq!(r.unwrap_err(), LearnError::TargetOutOfRange);
    }

    #[test]
    fn continuous_predictions_are_clipped_to_widened_range() {
        let x = Matrix::from_columns(vec!["x".into()], &[vec![0.0, 1.0, 2.0, 3.0]]);
        let y = [0.0, 1.0, 2.0, 3.0];
        let m = fit_learner(&GlmLearner::default(), &x, &y, &[1.0; 4], Target::Continuous, 0).unwrap();
        let far = Matrix::from_columns(vec!["x".into()], &[vec![-100.0, 100.0]]);
        let p = m.predict(&far);
        assert!((p[0] + 0.3).abs() < 1e-12);
        assert!((p[1] - 3.3).abs() < 1e-12);
    }

    #[test]
    fn fold_ids_are_balanced() {
        let f = fold_ids(11, 5, 3);
        let mut counts = [0; 5];
        for k in f {
            counts[k] += 1;
        }
        counts.sort();
        assert_eq!(counts, [2, 2, 2, 2, 3]);
    }
}
