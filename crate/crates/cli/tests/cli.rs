use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use medrule::{load_dgp, oracle_report, render_forest_plot, OracleReport};
use medrule_core::effects::{Contrast, EffectEstimate};
use proptest::prelude::*;

fn medrule(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medrule")).args(args).output().unwrap()
}

fn dgp(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("dgps").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CONFIG: &str = r#"
data = "data.csv"
output_dir = "out"
folds = 3
seed = 5
learners = ["mean", "glm"]
[schema]
covariates = ["w1", "w2"]
rule_covariates = ["w1", "w2"]
treatment = "a"
post_treatment = "z"
mediators = ["m1", "m2"]
outcome = "y"
outcome_range = [0.0, 1.0]
"#;

#[test]
fn oracle_prints_the_exact_report() {
    let out = medrule(&["oracle", s(&dgp("dgp_a.json"))]);
    assert!(out.status.success());
    let printed: OracleReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, oracle_report(&load_dgp(&dgp("dgp_a.json")).unwrap()).unwrap());
}

#[test]
fn simulate_run_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let sim = medrule(&["simulate", s(&dgp("confounded.json")), "--n", "600", "--seed", "11", "--out", s(&data)]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let text = std::fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().count(), 601);
    assert!(text.starts_with("w1,w2,"));

    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let run = medrule(&["--threads", "2", "run", s(&cfg)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.lines().count() >= 3);
    let out = dir.path().join("out");
    for f in ["report.json", "effects.json", "effects.csv", "pseudo_outcomes.csv", "folds.csv", "forest.svg"] {
        assert!(out.join(f).is_file(), "{f}");
    }

    let svg = dir.path().join("again.svg");
    let plot = medrule(&["plot", s(&out.join("effects.json")), "--out", s(&svg)]);
    assert!(plot.status.success());
    assert_eq!(std::fs::read(&svg).unwrap(), std::fs::read(out.join("forest.svg")).unwrap());
}

#[test]
fn invalid_fold_count_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    assert!(medrule(&["simulate", s(&dgp("confounded.json")), "--n", "50", "--out", s(&data)]).status.success());
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, CONFIG.replace("folds = 3", "folds = 1")).unwrap();
    let run = medrule(&["run", s(&cfg)]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("folds"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_files_fail() {
    assert!(!medrule(&["oracle", "/nonexistent/model.json"]).status.success());
    assert!(!medrule(&["run", "/nonexistent/run.toml"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.svg");
    assert!(!medrule(&["plot", "/nonexistent/effects.json", "--out", s(&out)]).status.success());
    assert!(!out.exists());
}

fn estimate() -> impl Strategy<Value = EffectEstimate> {
    (0usize..3, -1.0..1.0f64, 0.0..0.5f64, "[a-z<>& ]{0,12}").prop_map(|(c, est, se, rule)| {
        let contrast = Contrast::ALL[c];
        EffectEstimate {
            contrast,
            rule,
            arms: contrast.arms().into(),
            estimate: est,
            se,
            ci_low: est - 1.96 * se,
            ci_high: est + 1.96 * se,
            n: 10,
            folds: 2,
        }
    })
}

proptest! {
    #[test]
    fn plot_has_one_row_per_estimate(table in prop::collection::vec(estimate(), 1..12)) {
        let svg = render_forest_plot(&table).unwrap();
        prop_assert_eq!(svg.matches("class=\"whisker\"").count(), table.len());
        prop_assert_eq!(svg.matches("class=\"point\"").count(), table.len());
        prop_assert!(!svg.contains("NaN"));
        prop_assert_eq!(svg, render_forest_plot(&table).unwrap());
    }
}
