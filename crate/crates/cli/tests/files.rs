//! Committed model files and the golden effect table.

use std::path::{Path, PathBuf};

use medrule::{load_dgp, run_on_dataset, strip_timestamp, RayonExecutor, RunConfig};
use medrule_core::dgp::presets;
use medrule_core::dgp::DiscreteDgp;
use medrule_core::Sequential;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_owned()
}

fn update() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some()
}

fn committed() -> Vec<(&'static str, DiscreteDgp)> {
    vec![
        ("dgp_a.json", presets::dgp_a()),
        ("confounded.json", presets::confounded()),
        ("null_mediation.json", presets::null_mediation()),
    ]
}

#[test]
fn committed_models_match_presets() {
    for (file, d) in committed() {
        let path = root().join("dgps").join(file);
        if update() {
            let text = serde_json::to_string_pretty(&d).unwrap() + "\n";
            std::fs::write(&path, text).unwrap();
        }
        assert_eq!(load_dgp(&path).unwrap(), d, "{file}");
    }
}

pub const DGP_A_CONFIG: &str = r#"
data = "unused.csv"
folds = 5
seed = 20250101
learners = ["mean", "glm", "saturated", "lasso"]
[schema]
covariates = ["w"]
rule_covariates = ["w"]
treatment = "a"
post_treatment = "z"
mediators = ["m"]
outcome = "y"
outcome_range = [0.0, 1.0]
"#;

#[test]
fn effect_table_matches_golden_file() {
    let cfg = RunConfig::parse(DGP_A_CONFIG).unwrap();
    let ds = presets::dgp_a().simulate(20000, 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (_, out) = run_on_dataset(&ds, &cfg, dir.path(), &RayonExecutor::new(0)).unwrap();
    let produced = std::fs::read_to_string(&out.effects_json).unwrap();
    let golden = root().join("tests").join("golden").join("dgp_a_effects.json");
    if update() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &produced).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).unwrap();
    assert_eq!(produced, expected);
}

#[test]
fn rerun_gives_identical_report() {
    let cfg = RunConfig::parse(DGP_A_CONFIG).unwrap();
    let ds = presets::dgp_a().simulate(3000, 11).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (_, oa) = run_on_dataset(&ds, &cfg, a.path(), &Sequential).unwrap();
    let (_, ob) = run_on_dataset(&ds, &cfg, b.path(), &Sequential).unwrap();
    let ra = strip_timestamp(&std::fs::read_to_string(&oa.report).unwrap()).unwrap();
    let rb = strip_timestamp(&std::fs::read_to_string(&ob.report).unwrap()).unwrap();
    assert_eq!(ra, rb);
    for (x, y) in [(&oa.pseudo_outcomes, &ob.pseudo_outcomes), (&oa.plot, &ob.plot), (&oa.folds, &ob.folds)] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}
