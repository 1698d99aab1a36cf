//! The full analysis: cross-fit plan, nuisances, pseudo-outcomes, blip
//! rules and the effect table.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crossfit::{make_plan, CrossFitPlan, PlanError};
use crate::effects::{effect_table, Contrast, EffectError, EffectEstimate, RuleSpec, Z_95};
use crate::eif::{pseudo_outcomes, ArmContrast, EifError, NuisanceConfig, NuisanceFits, PseudoOutcomes, RatioRange, Warning};
use crate::exec::Executor;
use crate::learners::LearnError;
use crate::model::{Dataset, DatasetSummary};
use crate::num;
use crate::subgroup::{assign_subgroup, fit_blip, subgroup_summary, BlipMethod, SubgroupAssignment, SubgroupError, SubgroupSummary};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Error from one pipeline stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("cross-fit plan: {0}")]
    Plan(#[from] PlanError),
    #[error("nuisances: {0}")]
    Nuisance(#[from] EifError),
    #[error("blip: {0}")]
    Subgroup(#[from] SubgroupError),
    #[error("effects: {0}")]
    Effect(#[from] EffectError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub folds: usize,
    pub seed: u64,
    pub learners: Vec<String>,
    pub stack_folds: usize,
    pub epsilon: f64,
    pub z: f64,
    pub blip_methods: Vec<BlipMethod>,
    pub contrasts: Vec<Contrast>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            folds: 5,
            seed: 0,
            learners: crate::learners::DEFAULT_STACK.iter().map(|s| s.to_string()).collect(),
            stack_folds: 5,
            epsilon: 0.01,
            z: Z_95,
            blip_methods: alloc::vec![BlipMethod::Stack, BlipMethod::AdaptiveLasso],
            contrasts: Contrast::ALL.to_vec(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.folds < 2 {
            return bad(alloc::format!("folds must be at least 2, got {}", self.folds));
        }
        if self.stack_folds < 2 {
            return bad(alloc::format!("stack_folds must be at least 2, got {}", self.stack_folds));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.2) {
            return bad(alloc::format!("epsilon must lie in (0, 0.2], got {}", self.epsilon));
        }
        if !(self.z.is_finite() && self.z > 0.0) {
            return bad(alloc::format!("z must be positive, got {}", self.z));
        }
        if self.learners.is_empty() {
            return bad("learner list is empty".into());
        }
        for id in &self.learners {
            crate::learners::learner_from_id(id).map_err(|e: LearnError| PipelineError::Config(e.to_string()))?;
        }
        if self.contrasts.is_empty() {
            return bad("contrast list is empty".into());
        }
        Ok(())
    }

    fn nuisance(&self) -> NuisanceConfig {
        NuisanceConfig {
            learners: self.learners.clone(),
            stack_folds: self.stack_folds,
            epsilon: self.epsilon,
            seed: num::derive_seed(self.seed, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    pub folds: usize,
    pub learners: Vec<String>,
    pub stack_folds: usize,
    pub epsilon: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmDiagnostics {
    pub arm: ArmContrast,
    pub ratio: RatioRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Share of `g, e, q, r` predictions clipped to `[ε, 1 − ε]`.
    pub clipping: Vec<(String, f64)>,
    pub weight_ratio: Vec<ArmDiagnostics>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub provenance: Provenance,
    pub dataset: DatasetSummary,
    pub diagnostics: Diagnostics,
    pub subgroups: Vec<SubgroupSummary>,
    pub effects: Vec<EffectEstimate>,
}

/// Everything computed by [`analyze`], for export.
#[derive(Debug)]
pub struct Analysis {
    pub report: Report,
    pub plan: CrossFitPlan,
    pub pseudo: PseudoOutcomes,
    pub assignments: Vec<SubgroupAssignment>,
}

pub const ARMS: [ArmContrast; 3] = [ArmContrast::ONE_ONE, ArmContrast::ONE_ZERO, ArmContrast::ZERO_ZERO];

/// Rule label used in the effect table for each blip method.
pub fn rule_label(method: BlipMethod) -> &'static str {
    match method {
        BlipMethod::Stack => "super learner rule",
        BlipMethod::AdaptiveLasso => "adaptive lasso rule",
    }
}

/// Runs every stage on `ds`. Deterministic given the config; the executor
/// only changes how work is scheduled.
pub fn analyze(ds: &Dataset, cfg: &AnalysisConfig, exec: &impl Executor) -> Result<Analysis, PipelineError> {
    cfg.validate()?;
    let plan = make_plan(ds.n(), cfg.folds, num::derive_seed(cfg.seed, 1))?;
    let ncfg = cfg.nuisance();
    let fits = NuisanceFits::fit(ds, &plan, &ARMS, &ncfg, exec)?;
    let pseudo = pseudo_outcomes(ds, &plan, &fits, exec)?;
    let contrast = pseudo.contrast()?;
    let learner = ncfg.learner().map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut rules = alloc::vec![RuleSpec::Constant(1)];
    let mut subgroups = Vec::new();
    let mut assignments = Vec::new();
    for (k, &method) in cfg.blip_methods.iter().enumerate() {
        let blip = fit_blip(
            &contrast,
            ds,
            &plan,
            method,
            learner.as_ref(),
            num::derive_seed(cfg.seed, 3 + k as u64),
            exec,
        )?;
        let assign = assign_subgroup(&blip);
        subgroups.push(subgroup_summary(&assign, ds.weights(), Some(&blip)));
        rules.push(RuleSpec::Estimated {
            label: rule_label(method).to_string(),
            values: assign.rule(),
        });
        assignments.push(assign);
    }
    let effects = effect_table(&pseudo, ds.weights(), &rules, &cfg.contrasts, cfg.z)?;
    let report = Report {
        provenance: Provenance {
            version: VERSION.to_string(),
            seed: cfg.seed,
            folds: cfg.folds,
            learners: cfg.learners.clone(),
            stack_folds: cfg.stack_folds,
            epsilon: cfg.epsilon,
            z: cfg.z,
        },
        dataset: ds.summary(),
        diagnostics: Diagnostics {
            clipping: pseudo.clipping.clone(),
            weight_ratio: pseudo
                .arms
                .iter()
                .zip(&pseudo.ratio)
                .map(|(arm, ratio)| ArmDiagnostics { arm: *arm, ratio: *ratio })
                .collect(),
            warnings: pseudo.warnings.clone(),
        },
        subgroups,
        effects,
    };
    Ok(Analysis {
        report,
        plan,
        pseudo,
        assignments,
    })
}
