//! Run configuration, read from a single TOML file.
//!
//! ```toml
//! data = "mto.csv"            # relative to the config file
//! output_dir = "out"
//! folds = 5
//! seed = 1
//! epsilon = 0.01
//! z = 1.96
//! learners = ["mean", "glm", "lasso", "ridge", "gbstump"]
//! stack_folds = 5
//! blip_methods = ["stack", "adaptive-lasso"]
//! contrasts = ["indirect", "direct", "total"]
//!
//! [schema]
//! covariates = ["age", "site"]
//! rule_covariates = ["age"]
//! treatment = "voucher"
//! post_treatment = "moved"
//! mediators = ["school_quality"]
//! outcome = "alcohol"
//! outcome_range = [0.0, 1.0]
//! weight = "survey_weight"    # optional
//!
//! [schema.categorical]
//! site = ["A", "B", "C"]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use medrule_core::effects::Contrast;
use medrule_core::model::{ColumnSchema, ColumnSpec};
use medrule_core::pipeline::AnalysisConfig;
use medrule_core::subgroup::BlipMethod;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    pub covariates: Vec<String>,
    pub rule_covariates: Vec<String>,
    pub treatment: String,
    pub post_treatment: String,
    pub mediators: Vec<String>,
    pub outcome: String,
    pub outcome_range: (f64, f64),
    #[serde(default)]
    pub weight: Option<String>,
    /// Level lists of categorical covariates or mediators, by column.
    #[serde(default)]
    pub categorical: BTreeMap<String, Vec<String>>,
}

fn default_folds() -> usize {
    5
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_z() -> f64 {
    medrule_core::effects::Z_95
}

fn default_learners() -> Vec<String> {
    medrule_core::learners::DEFAULT_STACK.iter().map(|s| s.to_string()).collect()
}

fn default_methods() -> Vec<BlipMethod> {
    vec![BlipMethod::Stack, BlipMethod::AdaptiveLasso]
}

fn default_contrasts() -> Vec<Contrast> {
    Contrast::ALL.to_vec()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default = "default_learners")]
    pub learners: Vec<String>,
    #[serde(default = "default_folds")]
    pub stack_folds: usize,
    #[serde(default = "default_methods")]
    pub blip_methods: Vec<BlipMethod>,
    #[serde(default = "default_contrasts")]
    pub contrasts: Vec<Contrast>,
    pub schema: SchemaConfig,
}

impl RunConfig {
    /// Reads and validates a config file. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = RunConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.data.is_relative() {
            cfg.data = base.join(&cfg.data);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.analysis().validate().map_err(|e| CliError::Config(e.to_string()))?;
        cfg.column_schema().check().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            folds: self.folds,
            seed: self.seed,
            learners: self.learners.clone(),
            stack_folds: self.stack_folds,
            epsilon: self.epsilon,
            z: self.z,
            blip_methods: self.blip_methods.clone(),
            contrasts: self.contrasts.clone(),
        }
    }

    pub fn column_schema(&self) -> ColumnSchema {
        let s = &self.schema;
        let spec = |name: &String| match s.categorical.get(name) {
            Some(levels) => {
                let l: Vec<&str> = levels.iter().map(String::as_str).collect();
                ColumnSpec::categorical(name, &l)
            }
            None => ColumnSpec::real(name),
        };
        ColumnSchema {
            covariates: s.covariates.iter().map(spec).collect(),
            rule_covariates: s.rule_covariates.clone(),
            treatment: s.treatment.clone(),
            post_treatment: s.post_treatment.clone(),
            mediators: s.mediators.iter().map(spec).collect(),
            outcome: s.outcome.clone(),
            outcome_range: s.outcome_range,
            weight: s.weight.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
data = "d.csv"
[schema]
covariates = ["w", "site"]
rule_covariates = ["w"]
treatment = "a"
post_treatment = "z"
mediators = ["m"]
outcome = "y"
outcome_range = [0.0, 1.0]
[schema.categorical]
site = ["x", "y"]
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.folds, 5);
        assert_eq!(c.epsilon, 0.01);
        assert_eq!(c.learners.len(), 5);
        assert_eq!(c.blip_methods, vec![BlipMethod::Stack, BlipMethod::AdaptiveLasso]);
        let schema = c.column_schema();
        assert!(matches!(
            schema.covariates[1].kind,
            medrule_core::model::ColumnKind::Categorical { .. }
        ));
    }

    #[test]
    fn one_fold_is_rejected() {
        let text = MINIMAL.replace("data = \"d.csv\"", "data = \"d.csv\"\nfolds = 1");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(m)) if m.contains("folds")));
    }

    #[test]
    fn bad_values_are_rejected() {
        for extra in ["epsilon = 0.3", "learners = [\"mars\"]", "blip_methods = [\"tree\"]", "colour = 1"] {
            let text = MINIMAL.replace("data = \"d.csv\"", &format!("data = \"d.csv\"\n{extra}"));
            assert!(RunConfig::parse(&text).is_err(), "{extra}");
        }
        let text = MINIMAL.replace("rule_covariates = [\"w\"]", "rule_covariates = [\"q\"]");
        assert!(RunConfig::parse(&text).is_err());
    }
}
