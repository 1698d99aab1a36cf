//! Nuisance estimation and efficient influence function pseudo-outcomes.
//!
//! For a pair of treatment levels `(a′, a★)` the influence function of the
//! counterfactual mean `E(Y_{a′, G_{a★}})` is
//!
//! ```text
//! D(o) = 1{a=a′}/g(a′|w) · h(z,m,w) · (y − b(a′,z,m,w))
//!      + 1{a=a′}/g(a′|w) · (u(1,w) − u(0,w)) · (z − q(1|a′,w))
//!      + 1{a=a★}/g(a★|w) · (Σ_z b(a′,z,m,w) q(z|a′,w) − v(w))
//!      + v(w)
//! h(z,m,w) = g(a′|w)/g(a★|w) · q(z|a′,w)/r(z|a′,m,w) · e(a★|m,w)/e(a′|m,w)
//! ```
//!
//! where `u(z,w) = E[b(a′,Z,M,W) h(Z,M,W) | Z=z, A=a′, W=w]` and
//! `v(w) = E[Σ_z b(a′,z,M,W) q(z|a′,W) | A=a★, W=w]`. The contrast
//! `D^{(1,1)} − D^{(1,0)}` is an unbiased transformation for the blip.
//!
//! All nuisances are cross-fitted. Estimated probabilities are clipped to
//! `[ε, 1 − ε]`. The outcome is fitted on `[0, 1]` after scaling by the
//! declared range and pseudo-outcomes are mapped back afterwards.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crossfit::CrossFitPlan;
use crate::exec::Executor;
use crate::learners::{fit_learner, learner_from_id, stack_from_ids, LearnError, Learner, Model, Predictor, Target};
use crate::model::{Dataset, Role, Setting};
use crate::num;

/// Share of clipped predictions above which a nuisance is reported.
pub const CLIPPING_ALERT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EifError {
    #[error("training set of fold {fold} lacks {what}")]
    DegenerateFold { fold: usize, what: String },
    #[error("fitting {nuisance} on fold {fold}: {source}")]
    Learner {
        nuisance: String,
        fold: usize,
        source: LearnError,
    },
    #[error("non-finite pseudo-outcome at row {row} in term {term}")]
    NonFinitePseudoOutcome { row: usize, term: &'static str },
    #[error("no nuisance fits for arm {0}")]
    MissingArm(ArmContrast),
    #[error("clipping bound must lie in (0, 0.5), got {0}")]
    BadEpsilon(f64),
}

/// Treatment levels `(a′, a★)` of one counterfactual mean `E(Y_{a′, G_{a★}})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmContrast {
    pub a_prime: u8,
    pub a_star: u8,
}

impl ArmContrast {
    pub const ONE_ONE: ArmContrast = ArmContrast { a_prime: 1, a_star: 1 };
    pub const ONE_ZERO: ArmContrast = ArmContrast { a_prime: 1, a_star: 0 };
    pub const ZERO_ZERO: ArmContrast = ArmContrast { a_prime: 0, a_star: 0 };

    pub fn new(a_prime: u8, a_star: u8) -> Self {
        ArmContrast { a_prime, a_star }
    }
}

impl core::fmt::Display for ArmContrast {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "({},{})", self.a_prime, self.a_star)
    }
}

/// Nuisance values at one row's `(m, w)`, for a single arm.
///
/// `q1[a] = q(1|a,w)`, `r1[a] = r(1|a,m,w)`, `b[a][z] = b(a,z,m,w)`,
/// `u[z] = u(z,w)`, `v = v(w)`. `u` and `v` belong to the arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuisanceValues {
    pub g1: f64,
    pub e1: f64,
    pub q1: [f64; 2],
    pub r1: [f64; 2],
    pub b: [[f64; 2]; 2],
    pub u: [f64; 2],
    pub v: f64,
}

fn bern(p1: f64, x: u8) -> f64 {
    if x == 1 {
        p1
    } else {
        1.0 - p1
    }
}

impl NuisanceValues {
    pub fn g(&self, a: u8) -> f64 {
        bern(self.g1, a)
    }

    pub fn e(&self, a: u8) -> f64 {
        bern(self.e1, a)
    }

    pub fn q(&self, z: u8, a: u8) -> f64 {
        bern(self.q1[a as usize], z)
    }

    pub fn r(&self, z: u8, a: u8) -> f64 {
        bern(self.r1[a as usize], z)
    }

    /// The weight ratio `h(z, m, w)`, computed literally.
    pub fn h(&self, z: u8, arm: ArmContrast) -> f64 {
        let (ap, ast) = (arm.a_prime, arm.a_star);
        self.g(ap) / self.g(ast) * (self.q(z, ap) / self.r(z, ap)) * (self.e(ast) / self.e(ap))
    }

    /// `Σ_z b(a′,z,m,w) q(z|a′,w)`.
    pub fn integrated_b(&self, a_prime: u8) -> f64 {
        let ap = a_prime as usize;
        self.b[ap][0] * self.q(0, a_prime) + self.b[ap][1] * self.q(1, a_prime)
    }
}

/// The four terms of the influence function at an observation.
pub fn eif_terms(a: u8, z: u8, y: f64, nv: &NuisanceValues, arm: ArmContrast) -> [f64; 4] {
    let (ap, ast) = (arm.a_prime, arm.a_star);
    let mut t = [0.0, 0.0, 0.0, nv.v];
    if a == ap {
        let ipw = 1.0 / nv.g(ap);
        t[0] = ipw * nv.h(z, arm) * (y - nv.b[ap as usize][z as usize]);
        t[1] = ipw * (nv.u[1] - nv.u[0]) * (z as f64 - nv.q1[ap as usize]);
    }
    if a == ast {
        t[2] = (nv.integrated_b(ap) - nv.v) / nv.g(ast);
    }
    t
}

const TERM_NAMES: [&str; 4] = ["outcome residual", "post-treatment residual", "mediator residual", "plug-in"];

/// `D^{(a′,a★)}` at an observation; `row` labels errors.
pub fn pseudo_outcome(
    row: usize,
    a: u8,
    z: u8,
    y: f64,
    nv: &NuisanceValues,
    arm: ArmContrast,
) -> Result<f64, EifError> {
    let t = eif_terms(a, z, y, nv, arm);
    for (k, v) in t.iter().enumerate() {
        if !v.is_finite() {
            return Err(EifError::NonFinitePseudoOutcome {
                row,
                term: TERM_NAMES[k],
            });
        }
    }
    let d = t[0] + t[1] + t[2] + t[3];
    if !d.is_finite() {
        return Err(EifError::NonFinitePseudoOutcome { row, term: "sum" });
    }
    Ok(d)
}

/// Learners and tuning used for every nuisance fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceConfig {
    /// Learner identifiers; more than one builds a stack.
    pub learners: Vec<String>,
    /// Internal cross-validation folds of the stack, drawn inside each
    /// training set.
    pub stack_folds: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        NuisanceConfig {
            learners: crate::learners::DEFAULT_STACK.iter().map(|s| s.to_string()).collect(),
            stack_folds: 5,
            epsilon: 0.01,
            seed: 0,
        }
    }
}

impl NuisanceConfig {
    pub fn learner(&self) -> Result<Box<dyn Learner>, LearnError> {
        if self.learners.len() == 1 {
            learner_from_id(&self.learners[0])
        } else {
            Ok(Box::new(stack_from_ids(&self.learners, self.stack_folds)?))
        }
    }
}

/// A condition worth surfacing in a report that does not stop the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// More than 5% of a probability nuisance's predictions hit the bound.
    ClippingSaturation { nuisance: String, fraction: f64 },
    /// Some `ĥ` exceeded `1/ε³`.
    Positivity { arm: String, rows: usize, max_h: f64 },
    /// A learner reported something (a dropped stack member, a fallback).
    Learner { nuisance: String, fold: usize, message: String },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::ClippingSaturation { nuisance, fraction } => write!(
                f,
                "{:.1}% of {nuisance} predictions clipped to the probability bound",
                100.0 * fraction
            ),
            Warning::Positivity { arm, rows, max_h } => {
                write!(f, "arm {arm}: {rows} rows with extreme weight ratio (max {max_h:.3e})")
            }
            Warning::Learner { nuisance, fold, message } => write!(f, "{nuisance}, fold {fold}: {message}"),
        }
    }
}

#[derive(Debug)]
struct ArmFits {
    arm: ArmContrast,
    u: Model,
    v: Model,
}

#[derive(Debug)]
struct FoldFits {
    g: Model,
    e: Model,
    q: Model,
    r: Model,
    b: Model,
    arms: Vec<ArmFits>,
}

/// Clipping counts per probability nuisance: `(clipped, total)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct ClipCount {
    clipped: usize,
    total: usize,
}

/// Cross-fitted nuisance models, one set per fold.
#[derive(Debug)]
pub struct NuisanceFits {
    folds: Vec<FoldFits>,
    epsilon: f64,
    arms: Vec<ArmContrast>,
    warnings: Vec<Warning>,
}

const PROB_NUISANCES: [&str; 4] = ["g", "e", "q", "r"];

struct Evaluated {
    values: Vec<NuisanceValues>,
    clip: [ClipCount; 4],
}

fn clip_into(p: &mut [f64], eps: f64, count: &mut ClipCount) {
    for v in p {
        count.total += 1;
        if *v <= eps || *v >= 1.0 - eps {
            count.clipped += 1;
        }
        *v = v.clamp(eps, 1.0 - eps);
    }
}

/// Evaluates the fold's `g, e, q, r, b` models on `rows` (without `u`, `v`).
fn base_values(ds: &Dataset, f: &FoldFits, rows: &[usize], eps: f64) -> Evaluated {
    let mut clip = [ClipCount::default(); 4];
    let w = ds.design(&[Role::Covariates], rows, Setting::default());
    let mw = ds.design(&[Role::Mediators, Role::Covariates], rows, Setting::default());
    let mut g1 = f.g.predict(&w);
    clip_into(&mut g1, eps, &mut clip[0]);
    let mut e1 = f.e.predict(&mw);
    clip_into(&mut e1, eps, &mut clip[1]);
    let mut q1 = [Vec::new(), Vec::new()];
    let mut r1 = [Vec::new(), Vec::new()];
    let mut b = [[Vec::new(), Vec::new()], [Vec::new(), Vec::new()]];
    for a in 0..2u8 {
        let x = ds.design(&[Role::Treatment, Role::Covariates], rows, Setting::treatment(a));
        q1[a as usize] = f.q.predict(&x);
        clip_into(&mut q1[a as usize], eps, &mut clip[2]);
        let x = ds.design(&[Role::Treatment, Role::Mediators, Role::Covariates], rows, Setting::treatment(a));
        r1[a as usize] = f.r.predict(&x);
        clip_into(&mut r1[a as usize], eps, &mut clip[3]);
        for z in 0..2u8 {
            let x = ds.design(
                &[Role::Treatment, Role::PostTreatment, Role::Mediators, Role::Covariates],
                rows,
                Setting::both(a, z),
            );
            b[a as usize][z as usize] = f.b.predict(&x);
        }
    }
    let values = (0..rows.len())
        .map(|k| NuisanceValues {
            g1: g1[k],
            e1: e1[k],
            q1: [q1[0][k], q1[1][k]],
            r1: [r1[0][k], r1[1][k]],
            b: [[b[0][0][k], b[0][1][k]], [b[1][0][k], b[1][1][k]]],
            u: [0.0, 0.0],
            v: 0.0,
        })
        .collect();
    Evaluated { values, clip }
}

fn learner_err(nuisance: &str, fold: usize) -> impl Fn(LearnError) -> EifError + '_ {
    move |source| EifError::Learner {
        nuisance: nuisance.to_string(),
        fold,
        source,
    }
}

fn check_fold(ds: &Dataset, fold: usize, rows: &[usize]) -> Result<(), EifError> {
    let a = ds.treatment();
    let z = ds.post_treatment();
    for (name, col) in [("treatment", a), ("post-treatment", z)] {
        for level in 0..2u8 {
            if !rows.iter().any(|&i| col[i] == level) {
                return Err(EifError::DegenerateFold {
                    fold,
                    what: format!("{name} level {level}"),
                });
            }
        }
    }
    Ok(())
}

fn fit_fold(
    ds: &Dataset,
    learner: &dyn Learner,
    fold: usize,
    train: &[usize],
    arms: &[ArmContrast],
    cfg: &NuisanceConfig,
) -> Result<FoldFits, EifError> {
    check_fold(ds, fold, train)?;
    let eps = cfg.epsilon;
    let seed = |tag: u64| num::derive_seed(cfg.seed, 1000 * fold as u64 + tag);
    let wts: Vec<f64> = train.iter().map(|&i| ds.weights()[i]).collect();
    let a: Vec<f64> = train.iter().map(|&i| ds.treatment()[i] as f64).collect();
    let z: Vec<f64> = train.iter().map(|&i| ds.post_treatment()[i] as f64).collect();
    let ys = ds.scaled_outcome();
    let y: Vec<f64> = train.iter().map(|&i| ys[i]).collect();
    let obs = Setting::default();
    let fit = |name: &'static str, roles: &[Role], target: &[f64], t: Target, tag: u64| {
        let x = ds.design(roles, train, obs);
        fit_learner(learner, &x, target, &wts, t, seed(tag)).map_err(learner_err(name, fold))
    };
    let g = fit("g", &[Role::Covariates], &a, Target::Probability, 1)?;
    let e = fit("e", &[Role::Mediators, Role::Covariates], &a, Target::Probability, 2)?;
    let q = fit("q", &[Role::Treatment, Role::Covariates], &z, Target::Probability, 3)?;
    let r = fit(
        "r",
        &[Role::Treatment, Role::Mediators, Role::Covariates],
        &z,
        Target::Probability,
        4,
    )?;
    let b = fit(
        "b",
        &[Role::Treatment, Role::PostTreatment, Role::Mediators, Role::Covariates],
        &y,
        Target::Probability,
        5,
    )?;
    let mut fits = FoldFits {
        g,
        e,
        q,
        r,
        b,
        arms: Vec::new(),
    };
    // In-sample nuisance values on the training rows feed the u and v
    // regressions.
    let base = base_values(ds, &fits, train, eps).values;
    for (k, &arm) in arms.iter().enumerate() {
        let ap = arm.a_prime as usize;
        let pos_prime: Vec<usize> = (0..train.len())
            .filter(|&t| ds.treatment()[train[t]] == arm.a_prime)
            .collect();
        let pos_star: Vec<usize> = (0..train.len())
            .filter(|&t| ds.treatment()[train[t]] == arm.a_star)
            .collect();
        let rows_prime: Vec<usize> = pos_prime.iter().map(|&t| train[t]).collect();
        let rows_star: Vec<usize> = pos_star.iter().map(|&t| train[t]).collect();
        let u_target: Vec<f64> = pos_prime
            .iter()
            .map(|&t| {
                let zi = ds.post_treatment()[train[t]];
                base[t].b[ap][zi as usize] * base[t].h(zi, arm)
            })
            .collect();
        let v_target: Vec<f64> = pos_star.iter().map(|&t| base[t].integrated_b(arm.a_prime)).collect();
        let tag = 10 + 2 * k as u64;
        let wp: Vec<f64> = rows_prime.iter().map(|&i| ds.weights()[i]).collect();
        let ws: Vec<f64> = rows_star.iter().map(|&i| ds.weights()[i]).collect();
        let u = fit_learner(
            learner,
            &ds.design(&[Role::PostTreatment, Role::Covariates], &rows_prime, obs),
            &u_target,
            &wp,
            Target::Continuous,
            seed(tag),
        )
        .map_err(learner_err("u", fold))?;
        let v = fit_learner(
            learner,
            &ds.design(&[Role::Covariates], &rows_star, obs),
            &v_target,
            &ws,
            Target::Continuous,
            seed(tag + 1),
        )
        .map_err(learner_err("v", fold))?;
        fits.arms.push(ArmFits { arm, u, v });
    }
    Ok(fits)
}

impl NuisanceFits {
    /// Fits `g, e, q, r, b` on every training set of `plan`, then `u` and
    /// `v` for each arm.
    pub fn fit(
        ds: &Dataset,
        plan: &CrossFitPlan,
        arms: &[ArmContrast],
        cfg: &NuisanceConfig,
        exec: &impl Executor,
    ) -> Result<NuisanceFits, EifError> {
        if !(cfg.epsilon > 0.0 && cfg.epsilon < 0.5) {
            return Err(EifError::BadEpsilon(cfg.epsilon));
        }
        let learner = cfg.learner().map_err(learner_err("learner configuration", 0))?;
        let per_fold = exec.map(plan.folds(), |j| fit_fold(ds, learner.as_ref(), j, plan.training(j), arms, cfg));
        let mut folds = Vec::with_capacity(plan.folds());
        let mut warnings = Vec::new();
        for (j, f) in per_fold.into_iter().enumerate() {
            let f = f?;
            let mut named: Vec<(String, &Model)> = vec![
                ("g".into(), &f.g),
                ("e".into(), &f.e),
                ("q".into(), &f.q),
                ("r".into(), &f.r),
                ("b".into(), &f.b),
            ];
            for af in &f.arms {
                named.push((format!("u{}", af.arm), &af.u));
                named.push((format!("v{}", af.arm), &af.v));
            }
            for (nuisance, m) in named {
                for message in m.flags() {
                    warnings.push(Warning::Learner {
                        nuisance: nuisance.clone(),
                        fold: j,
                        message,
                    });
                }
            }
            folds.push(f);
        }
        Ok(NuisanceFits {
            folds,
            epsilon: cfg.epsilon,
            arms: arms.to_vec(),
            warnings,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn arms(&self) -> &[ArmContrast] {
        &self.arms
    }

    /// Warnings raised while fitting.
    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// Nuisance values of `arm` on `rows`, all predicted by the models of
    /// `fold`. Also returns per-nuisance clipping counts.
    fn evaluate(
        &self,
        ds: &Dataset,
        fold: usize,
        rows: &[usize],
        arm: ArmContrast,
    ) -> Result<(Vec<NuisanceValues>, [ClipCount; 4]), EifError> {
        let f = &self.folds[fold];
        let af = f.arms.iter().find(|x| x.arm == arm).ok_or(EifError::MissingArm(arm))?;
        let Evaluated { mut values, clip } = base_values(ds, f, rows, self.epsilon);
        let w = ds.design(&[Role::Covariates], rows, Setting::default());
        let v = af.v.predict(&w);
        let mut u = [Vec::new(), Vec::new()];
        for z in 0..2u8 {
            let x = ds.design(
                &[Role::PostTreatment, Role::Covariates],
                rows,
                Setting {
                    treatment: None,
                    post_treatment: Some(z),
                },
            );
            u[z as usize] = af.u.predict(&x);
        }
        for (k, nv) in values.iter_mut().enumerate() {
            nv.u = [u[0][k], u[1][k]];
            nv.v = v[k];
        }
        Ok((values, clip))
    }

    /// Out-of-fold nuisance values of `arm` for every row.
    pub fn values(&self, ds: &Dataset, plan: &CrossFitPlan, arm: ArmContrast) -> Result<Vec<NuisanceValues>, EifError> {
        let mut out = vec![None; ds.n()];
        for j in 0..plan.folds() {
            let rows = plan.validation(j);
            let (vals, _) = self.evaluate(ds, j, rows, arm)?;
            for (&i, v) in rows.iter().zip(vals) {
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("plan covers every row")).collect())
    }
}

/// Extremes of `ĥ` at the observed `z` over rows with `a = a′`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRange {
    pub min: f64,
    pub max: f64,
}

/// Cross-fitted pseudo-outcomes, on the original outcome scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoOutcomes {
    pub folds: Vec<usize>,
    pub arms: Vec<ArmContrast>,
    /// `values[k][i]` is `D^{arms[k]}` at row `i`.
    pub values: Vec<Vec<f64>>,
    /// `ĥ` extremes per arm.
    pub ratio: Vec<RatioRange>,
    /// Share of clipped predictions for `g, e, q, r`.
    pub clipping: Vec<(String, f64)>,
    pub warnings: Vec<Warning>,
}

impl PseudoOutcomes {
    pub fn arm(&self, arm: ArmContrast) -> Option<&[f64]> {
        self.arms.iter().position(|a| *a == arm).map(|k| self.values[k].as_slice())
    }

    /// `D = D^{(1,1)} − D^{(1,0)}` per row.
    pub fn contrast(&self) -> Result<Vec<f64>, EifError> {
        let d11 = self.arm(ArmContrast::ONE_ONE).ok_or(EifError::MissingArm(ArmContrast::ONE_ONE))?;
        let d10 = self.arm(ArmContrast::ONE_ZERO).ok_or(EifError::MissingArm(ArmContrast::ONE_ZERO))?;
        Ok(d11.iter().zip(d10).map(|(a, b)| a - b).collect())
    }

    pub fn n(&self) -> usize {
        self.folds.len()
    }
}

/// Evaluates `D^{(a′,a★)}` for every row and arm fitted in `fits`, each row
/// using the models of its own fold.
pub fn pseudo_outcomes(
    ds: &Dataset,
    plan: &CrossFitPlan,
    fits: &NuisanceFits,
    exec: &impl Executor,
) -> Result<PseudoOutcomes, EifError> {
    let (lo, hi) = ds.schema().outcome_range;
    let range = hi - lo;
    let ys = ds.scaled_outcome();
    let eps = fits.epsilon;
    let h_alert = 1.0 / (eps * eps * eps);
    let mut values = Vec::new();
    let mut ratio = Vec::new();
    let mut clip_total = [ClipCount::default(); 4];
    let mut warnings = fits.warnings.clone();
    for (k, &arm) in fits.arms.iter().enumerate() {
        let per_fold = exec.map(plan.folds(), |j| {
            let rows = plan.validation(j);
            let (vals, clip) = fits.evaluate(ds, j, rows, arm)?;
            let mut d = Vec::with_capacity(rows.len());
            let mut h = Vec::new();
            for (&i, nv) in rows.iter().zip(&vals) {
                let (a, z) = (ds.treatment()[i], ds.post_treatment()[i]);
                d.push(lo + range * pseudo_outcome(i, a, z, ys[i], nv, arm)?);
                if a == arm.a_prime {
                    h.push(nv.h(z, arm));
                }
            }
            Ok::<_, EifError>((d, h, clip))
        });
        let mut col = vec![0.0; ds.n()];
        let (mut hmin, mut hmax, mut extreme) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
        for (j, res) in per_fold.into_iter().enumerate() {
            let (d, h, clip) = res?;
            for (&i, v) in plan.validation(j).iter().zip(d) {
                col[i] = v;
            }
            for v in h {
                hmin = hmin.min(v);
                hmax = hmax.max(v);
                if v > h_alert {
                    extreme += 1;
                }
            }
            // Probability nuisances are shared across arms; count them once.
            if k == 0 {
                for (t, c) in clip_total.iter_mut().zip(clip) {
                    t.clipped += c.clipped;
                    t.total += c.total;
                }
            }
        }
        if extreme > 0 {
            warnings.push(Warning::Positivity {
                arm: arm.to_string(),
                rows: extreme,
                max_h: hmax,
            });
        }
        values.push(col);
        ratio.push(RatioRange { min: hmin, max: hmax });
    }
    let clipping: Vec<(String, f64)> = PROB_NUISANCES
        .iter()
        .zip(clip_total)
        .map(|(name, c)| {
            let frac = if c.total == 0 { 0.0 } else { c.clipped as f64 / c.total as f64 };
            (name.to_string(), frac)
        })
        .collect();
    for (name, frac) in &clipping {
        if *frac > CLIPPING_ALERT {
            warnings.push(Warning::ClippingSaturation {
                nuisance: name.clone(),
                fraction: *frac,
            });
        }
    }
    Ok(PseudoOutcomes {
        folds: plan.assignment().to_vec(),
        arms: fits.arms.clone(),
        values,
        ratio,
        clipping,
        warnings,
    })
}
