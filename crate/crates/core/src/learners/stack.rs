//! Cross-validated stacking.
//!
//! Each member's out-of-fold predictions are collected over K folds; the
//! ensemble weights minimize the weighted squared error of the convex
//! combination of those predictions over the simplex. Members that fail on
//! any fold are dropped and reported.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{check_inputs, fit_learner, fold_ids, target_range, LearnError, Learner, Matrix, Model, Predictor, Target};
use crate::num;

const META_TOL: f64 = 1e-10;
const META_ITER: usize = 10_000;

#[derive(Debug)]
pub struct StackLearner {
    members: Vec<Box<dyn Learner>>,
    folds: usize,
}

impl StackLearner {
    pub fn new(members: Vec<Box<dyn Learner>>, folds: usize) -> Self {
        StackLearner { members, folds }
    }

    pub fn member_ids(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.id()).collect()
    }
}

impl Learner for StackLearner {
    fn id(&self) -> &str {
        "stack"
    }

    fn fit_unchecked(
        &self,
        x: &Matrix,
        y: &[f64],
        w: &[f64],
        target: Target,
        seed: u64,
    ) -> Result<Box<dyn Predictor>, LearnError> {
        Ok(Box::new(fit_stack(&self.members, x, y, w, target, self.folds, seed)?))
    }
}

#[derive(Debug)]
pub struct StackedEnsemble {
    pub member_ids: Vec<String>,
    /// Simplex weights, aligned with `member_ids`.
    pub weights: Vec<f64>,
    /// Cross-validated weighted mean squared error of each member.
    pub cv_risk: Vec<f64>,
    /// Cross-validated risk of the weighted combination.
    pub stack_cv_risk: f64,
    /// `(id, reason)` of members dropped because they failed to fit.
    pub dropped: Vec<(String, String)>,
    models: Vec<Option<Model>>,
    lo: f64,
    hi: f64,
}

impl Predictor for StackedEnsemble {
    fn predict(&self, x: &Matrix) -> Vec<f64> {
        let mut out = vec![0.0; x.rows()];
        for (m, a) in self.models.iter().zip(&self.weights) {
            if let Some(m) = m {
                for (o, p) in out.iter_mut().zip(m.predict(x)) {
                    *o += a * p;
                }
            }
        }
        for v in &mut out {
            *v = v.clamp(self.lo, self.hi);
        }
        out
    }

    fn flags(&self) -> Vec<String> {
        let mut f: Vec<String> = self
            .dropped
            .iter()
            .map(|(id, why)| format!("stack member `{id}` dropped: {why}"))
            .collect();
        for m in self.models.iter().flatten() {
            for flag in m.flags() {
                f.push(format!("{}: {flag}", m.id()));
            }
        }
        f
    }
}

fn weighted_risk(pred: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let sq: Vec<f64> = pred.iter().zip(y).zip(w).map(|((p, y), w)| w * (p - y) * (p - y)).collect();
    num::pairwise_sum(&sq) / num::pairwise_sum(w)
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Minimizes `Σ w_i (y_i - Σ_k α_k z_ik)²` over the simplex by projected
/// gradient descent, starting at the best single column.
pub(crate) fn simplex_least_squares(z: &[Vec<f64>], y: &[f64], w: &[f64]) -> Vec<f64> {
    let k = z.len();
    if k == 1 {
        return vec![1.0];
    }
    let sw: f64 = w.iter().sum();
    // Gram matrix and cross products, normalized by the weight total.
    let mut gram = vec![0.0; k * k];
    let mut zy = vec![0.0; k];
    for a in 0..k {
        for b in a..k {
            let s: f64 = (0..y.len()).map(|i| w[i] * z[a][i] * z[b][i]).sum::<f64>() / sw;
            gram[a * k + b] = s;
            gram[b * k + a] = s;
        }
        zy[a] = (0..y.len()).map(|i| w[i] * z[a][i] * y[i]).sum::<f64>() / sw;
    }
    let objective = |al: &[f64]| {
        let mut q = 0.0;
        for a in 0..k {
            for b in 0..k {
                q += al[a] * gram[a * k + b] * al[b];
            }
            q -= 2.0 * al[a] * zy[a];
        }
        q
    };
    let mut alpha = vec![0.0; k];
    let best = (0..k).fold(0, |b, j| {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let mut eb = vec![0.0; k];
        eb[b] = 1.0;
        if objective(&e) < objective(&eb) {
            j
        } else {
            b
        }
    });
    alpha[best] = 1.0;
    // Lipschitz constant of the gradient: 2 * largest eigenvalue of gram.
    let mut vec_ = vec![1.0; k];
    let mut lmax = 0.0;
    for _ in 0..100 {
        let mut nv = vec![0.0; k];
        for a in 0..k {
            for b in 0..k {
                nv[a] += gram[a * k + b] * vec_[b];
            }
        }
        let norm = num::sqrt(nv.iter().map(|v| v * v).sum());
        if norm <= 0.0 {
            break;
        }
        lmax = norm / num::sqrt(vec_.iter().map(|v| v * v).sum());
        vec_ = nv.iter().map(|v| v / norm).collect();
    }
    if lmax <= 0.0 {
        return alpha;
    }
    let step = 1.0 / (2.0 * lmax * 1.01);
    let mut obj = objective(&alpha);
    for _ in 0..META_ITER {
        let mut grad = vec![0.0; k];
        for a in 0..k {
            for b in 0..k {
                grad[a] += 2.0 * gram[a * k + b] * alpha[b];
            }
            grad[a] -= 2.0 * zy[a];
        }
        let cand: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        let next = project_simplex(&cand);
        let nobj = objective(&next);
        let moved = next.iter().zip(&alpha).map(|(a, b)| num::abs(a - b)).fold(0.0, f64::max);
        if nobj <= obj {
            alpha = next;
            obj = nobj;
        }
        if moved < META_TOL {
            break;
        }
    }
    alpha
}

/// Fits every member with K-fold cross-validation, solves for the simplex
/// weights, and refits the members with positive weight on all rows.
pub fn fit_stack(
    members: &[Box<dyn Learner>],
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    target: Target,
    folds: usize,
    seed: u64,
) -> Result<StackedEnsemble, LearnError> {
    check_inputs(x, y, w, target)?;
    let n = y.len();
    let k = folds.clamp(2, n);
    let fold = fold_ids(n, k, num::derive_seed(seed, 0));
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let train = (0..n).filter(|&i| fold[i] != f).collect();
            let test = (0..n).filter(|&i| fold[i] == f).collect();
            (train, test)
        })
        .collect();
    let mut ids = Vec::new();
    let mut oof = Vec::new();
    let mut learners = Vec::new();
    let mut dropped = Vec::new();
    'members: for (m, learner) in members.iter().enumerate() {
        let mut pred = vec![0.0; n];
        for (f, (train, test)) in splits.iter().enumerate() {
            let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let wtr: Vec<f64> = train.iter().map(|&i| w[i]).collect();
            let fit = fit_learner(
                learner.as_ref(),
                &x.select_rows(train),
                &ytr,
                &wtr,
                target,
                num::derive_seed(seed, 1 + (m * k + f) as u64),
            );
            match fit {
                Ok(model) => {
                    for (&i, p) in test.iter().zip(model.predict(&x.select_rows(test))) {
                        pred[i] = p;
                    }
                }
                Err(e) => {
                    dropped.push((learner.id().to_string(), e.to_string()));
                    continue 'members;
                }
            }
        }
        ids.push(learner.id().to_string());
        oof.push(pred);
        learners.push((m, learner));
    }
    if ids.is_empty() {
        let why = dropped
            .iter()
            .map(|(id, e)| format!("{id}: {e}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(LearnError::AllMembersFailed(why));
    }
    let cv_risk: Vec<f64> = oof.iter().map(|p| weighted_risk(p, y, w)).collect();
    let weights = simplex_least_squares(&oof, y, w);
    let combined: Vec<f64> = (0..n).map(|i| (0..oof.len()).map(|j| weights[j] * oof[j][i]).sum()).collect();
    let stack_cv_risk = weighted_risk(&combined, y, w);
    let mut models = Vec::with_capacity(learners.len());
    for (j, (m, learner)) in learners.iter().enumerate() {
        if weights[j] > 0.0 {
            let model = fit_learner(learner.as_ref(), x, y, w, target, num::derive_seed(seed, 1_000_000 + *m as u64))?;
            models.push(Some(model));
        } else {
            models.push(None);
        }
    }
    let (lo, hi) = target_range(y, target);
    Ok(StackedEnsemble {
        member_ids: ids,
        weights,
        cv_risk,
        stack_cv_risk,
        dropped,
        models,
        lo,
        hi,
    })
}
