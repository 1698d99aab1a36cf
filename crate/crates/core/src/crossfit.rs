//! Sample splitting for cross-fitting.
//!
//! Rows are shuffled with a seeded generator and dealt round-robin into `J`
//! validation folds, so fold sizes differ by at most one. Weights play no
//! part in the partition.

use alloc::vec::Vec;

use thiserror::Error;

use crate::exec::Executor;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("cross-fitting needs at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{folds} folds requested for {n} rows")]
    TooFewRows { n: usize, folds: usize },
}

/// A learner failure tagged with the fold whose training set triggered it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("fold {fold}: {source}")]
pub struct FoldError<E: core::error::Error + 'static> {
    pub fold: usize,
    pub source: E,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossFitPlan {
    folds: usize,
    assignment: Vec<usize>,
    validation: Vec<Vec<usize>>,
    training: Vec<Vec<usize>>,
}

/// Partitions `0..n` into `folds` validation sets.
pub fn make_plan(n: usize, folds: usize, seed: u64) -> Result<CrossFitPlan, PlanError> {
    if folds < 2 {
        return Err(PlanError::TooFewFolds(folds));
    }
    if folds > n {
        return Err(PlanError::TooFewRows { n, folds });
    }
    CrossFitPlan::from_assignment(crate::learners::fold_ids(n, folds, seed), folds)
}

impl CrossFitPlan {
    /// Builds a plan from an explicit fold index per row. Every fold must be
    /// nonempty.
    pub fn from_assignment(assignment: Vec<usize>, folds: usize) -> Result<Self, PlanError> {
        if folds < 2 {
            return Err(PlanError::TooFewFolds(folds));
        }
        let mut validation = alloc::vec![Vec::new(); folds];
        for (i, &j) in assignment.iter().enumerate() {
            if j >= folds {
                return Err(PlanError::TooFewFolds(j + 1));
            }
            validation[j].push(i);
        }
        if validation.iter().any(Vec::is_empty) {
            return Err(PlanError::TooFewRows {
                n: assignment.len(),
                folds,
            });
        }
        let training = (0..folds)
            .map(|j| (0..assignment.len()).filter(|&i| assignment[i] != j).collect())
            .collect();
        Ok(CrossFitPlan {
            folds,
            assignment,
            validation,
            training,
        })
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Fold index `j(i)` of every row.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.assignment[row]
    }

    pub fn validation(&self, fold: usize) -> &[usize] {
        &self.validation[fold]
    }

    pub fn training(&self, fold: usize) -> &[usize] {
        &self.training[fold]
    }
}

/// Trains one model per fold on `T_j` and predicts every row from the model
/// of its own fold. Folds are processed through `exec`; results do not
/// depend on the executor.
pub fn crossfit_predict<M, E, Fit, Pred>(
    plan: &CrossFitPlan,
    exec: &impl Executor,
    fit: Fit,
    predict: Pred,
) -> Result<Vec<f64>, FoldError<E>>
where
    M: Send,
    E: core::error::Error + Send + 'static,
    Fit: Fn(usize, &[usize]) -> Result<M, E> + Sync + Send,
    Pred: Fn(&M, &[usize]) -> Vec<f64> + Sync + Send,
{
    let per_fold = exec.map(plan.folds(), |j| {
        let model = fit(j, plan.training(j)).map_err(|source| FoldError { fold: j, source })?;
        Ok(predict(&model, plan.validation(j)))
    });
    let mut out = alloc::vec![0.0; plan.n()];
    for (j, preds) in per_fold.into_iter().enumerate() {
        let preds = preds?;
        for (&i, p) in plan.validation(j).iter().zip(preds) {
            out[i] = p;
        }
    }
    Ok(out)
}
