//! Cross-fitted, multiply robust estimation of interventional indirect
//! effects and of the subgroup predicted to be harmed through a mediator.
//!
//! The crate is `no_std` (it needs `alloc`). IO, configuration files and the
//! command line live in the companion `medrule` crate.
//!
//! Pipeline stages, in order:
//!
//! 1. [`model`]: validated observed data `O = (W, A, Z, M, Y)` with weights.
//! 2. [`crossfit`]: the J-fold sample split.
//! 3. [`eif`]: nuisance fits and per-row efficient influence function values.
//! 4. [`subgroup`]: regression of the pseudo-outcome on the rule covariates
//!    and the sign rule that flags predicted harm.
//! 5. [`effects`]: one-step estimates of indirect, direct and total effects
//!    under a (possibly data-dependent) treatment rule.
//!
//! [`dgp`] holds discrete structural equation models whose identified
//! quantities are computed by exact enumeration; every estimator is checked
//! against it.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod crossfit;
pub mod dgp;
pub mod effects;
pub mod eif;
pub mod exec;
pub mod learners;
pub mod model;
pub mod num;
pub mod pipeline;
pub mod subgroup;

pub use crossfit::{make_plan, CrossFitPlan};
pub use dgp::DiscreteDgp;
pub use effects::{Contrast, EffectEstimate, RuleSpec};
pub use eif::{ArmContrast, NuisanceFits, PseudoOutcomes};
pub use exec::{Executor, Sequential};
pub use model::{ColumnSchema, Dataset, RawTable, WeightVector};
pub use pipeline::{analyze, AnalysisConfig, Report};
