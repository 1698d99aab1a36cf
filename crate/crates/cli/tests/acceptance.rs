//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use medrule::{load_dgp, strip_timestamp, RayonExecutor};
use medrule_core::dgp::{presets, DiscreteDgp, TrueNuisances};
use medrule_core::effects::{Contrast, EffectEstimate};
use medrule_core::eif::{pseudo_outcome, ArmContrast};
use medrule_core::pipeline::{analyze, AnalysisConfig};
use medrule_core::subgroup::BlipMethod;
use medrule_core::{Executor, Sequential};

const TOL: f64 = 1e-10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn committed() -> Vec<(String, DiscreteDgp)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("dgps");
    ["dgp_a.json", "confounded.json", "null_mediation.json"]
        .iter()
        .map(|f| (f.to_string(), load_dgp(&dir.join(f)).expect("committed model loads")))
        .collect()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn identification() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut additive = true;
    for (_, d) in committed() {
        let pw: f64 = (0..d.n_w()).map(|w| d.p_w(w)).sum();
        worst = worst.max((pw - 1.0).abs());
        for w in 0..d.n_w() {
            for a in 0..2u8 {
                let pm: f64 = (0..d.n_m()).map(|m| d.p_m_given_a(m, a, w)).sum();
                worst = worst.max((pm - 1.0).abs());
                worst = worst.max((d.q(0, a, w) + d.q(1, a, w) - 1.0).abs());
            }
            for m in 0..d.n_m() {
                worst = worst.max((d.true_e(0, m, w) + d.true_e(1, m, w) - 1.0).abs());
                let joint1 = d.p_m_given_a(m, 1, w) * d.g(1, w);
                let marg = joint1 + d.p_m_given_a(m, 0, w) * d.g(0, w);
                worst = worst.max((d.true_e(1, m, w) * marg - joint1).abs());
                for a in 0..2u8 {
                    worst = worst.max((d.true_r(0, a, m, w) + d.true_r(1, a, m, w) - 1.0).abs());
                    for z in 0..2u8 {
                        let lhs = d.true_r(z, a, m, w) * d.p_m_given_a(m, a, w);
                        worst = worst.max((lhs - d.p_m(m, z, a, w) * d.q(z, a, w)).abs());
                    }
                }
            }
        }
        let all = d.true_population_effects(&vec![1; d.n_strata()]).unwrap();
        let avg: f64 = d.true_blips().iter().zip(d.stratum_probs()).map(|(b, p)| b * p).sum();
        worst = worst.max((all.indirect - avg).abs());
        for mask in 0u32..(1 << d.n_strata()) {
            let rule: Vec<u8> = (0..d.n_strata()).map(|k| ((mask >> k) & 1) as u8).collect();
            let e = d.true_population_effects(&rule).unwrap();
            additive &= e.total == e.indirect + e.direct;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < TOL && additive && secs < 1.0,
        format!("max invariant error {worst:.1e}, decomposition exact: {additive}, {secs:.3}s"),
    )
}

fn enumerated_blip(d: &DiscreteDgp, t11: &TrueNuisances, t10: &TrueNuisances) -> Vec<f64> {
    d.expect_by_stratum(|c| {
        let y = c.y as f64;
        pseudo_outcome(0, c.a, c.z, y, &t11.values(c.w, c.m), ArmContrast::ONE_ONE).unwrap()
            - pseudo_outcome(0, c.a, c.z, y, &t10.values(c.w, c.m), ArmContrast::ONE_ZERO).unwrap()
    })
}

fn oracle_pair(d: &DiscreteDgp) -> (TrueNuisances, TrueNuisances) {
    (d.derive_true_nuisances(1, 1).unwrap(), d.derive_true_nuisances(1, 0).unwrap())
}

fn unbiased_transformation() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (_, d) in committed() {
        let (t11, t10) = oracle_pair(&d);
        worst = worst.max(max_gap(&enumerated_blip(&d, &t11, &t10), &d.true_blips()));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst < TOL && secs < 1.0, format!("max |E[D|v] - B(v)| {worst:.1e}, {secs:.3}s"))
}

fn nudge(p: f64) -> f64 {
    if p + 0.1 < 1.0 {
        p + 0.1
    } else {
        p - 0.1
    }
}

fn multiple_robustness() -> Verdict {
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for (_, d) in committed() {
        let (mut t11, mut t10) = oracle_pair(&d);
        for t in [&mut t11, &mut t10] {
            t.b.iter_mut().for_each(|b| *b += 0.1);
            t.g1.iter_mut().for_each(|g| *g = nudge(*g));
        }
        first = first.max(max_gap(&enumerated_blip(&d, &t11, &t10), &d.true_blips()));
        let (mut t11, mut t10) = oracle_pair(&d);
        for t in [&mut t11, &mut t10] {
            t.e1.iter_mut().for_each(|e| *e = nudge(*e));
            t.r1.iter_mut().for_each(|r| *r = nudge(*r));
            t.v.iter_mut().for_each(|v| *v += 0.1);
        }
        second = second.max(max_gap(&enumerated_blip(&d, &t11, &t10), &d.true_blips()));
    }
    verdict(
        first < TOL && second < TOL,
        format!("b,g corrupted: {first:.1e}; e,r,v corrupted: {second:.1e}"),
    )
}

fn find<'a>(t: &'a [EffectEstimate], c: Contrast, rule: &str) -> &'a EffectEstimate {
    t.iter().find(|e| e.contrast == c && e.rule == rule).expect("row present")
}

fn dgp_a_config() -> AnalysisConfig {
    AnalysisConfig {
        seed: 4,
        learners: ["mean", "glm", "lasso", "saturated"].map(String::from).to_vec(),
        ..AnalysisConfig::default()
    }
}

fn consistency_and_subgroups() -> (Verdict, Verdict) {
    let d = presets::dgp_a();
    let ds = d.simulate(20000, 2024).unwrap();
    let start = Instant::now();
    let a = analyze(&ds, &dgp_a_config(), &RayonExecutor::new(0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let truth = d.true_population_effects(&[1, 1]).unwrap();
    let t = &a.report.effects;
    let piie = find(t, Contrast::Indirect, "no individualization");
    let pite = find(t, Contrast::Total, "no individualization");
    let zi = (piie.estimate - truth.indirect) / piie.se;
    let zt = (pite.estimate - truth.total) / pite.se;
    let c4 = verdict(
        zi.abs() <= 3.0 && zt.abs() <= 3.0 && secs < 120.0,
        format!(
            "PIIE {:.4} vs {:.4} ({zi:+.2} se), PITE {:.4} vs {:.4} ({zt:+.2} se), {secs:.1}s",
            piie.estimate, truth.indirect, pite.estimate, truth.total
        ),
    );

    let harmed_truth: Vec<bool> = d.sign_rule().iter().map(|r| *r == 0).collect();
    let mut agreement = Vec::new();
    for s in &a.assignments {
        let hits = (0..ds.n())
            .filter(|&i| {
                let v = ds.rule_profile(i);
                let k = d.locate_stratum(&v).unwrap();
                s.harm[i] == harmed_truth[k]
            })
            .count();
        agreement.push((s.method.label(), hits as f64 / ds.n() as f64));
    }
    let flags_ok = agreement.iter().all(|(_, a)| *a >= 0.95);
    let (recovered, reps, secs) = support_recovery();
    let c6 = verdict(
        flags_ok && recovered * 10 >= reps * 9,
        format!(
            "harm agreement {}; adaptive lasso support recovered in {recovered}/{reps} ({secs:.0}s)",
            agreement
                .iter()
                .map(|(m, a)| format!("{m} {:.1}%", 100.0 * a))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    (c4, c6)
}

fn support_recovery() -> (usize, usize, f64) {
    let d = presets::sparse_rule(5);
    let reps = 100;
    let start = Instant::now();
    let cfg = AnalysisConfig {
        learners: ["mean", "glm", "saturated"].map(String::from).to_vec(),
        blip_methods: vec![BlipMethod::AdaptiveLasso],
        ..AnalysisConfig::default()
    };
    let hits = RayonExecutor::new(0).map(reps, |r| {
        let ds = d.simulate(20000, 5000 + r as u64).unwrap();
        let a = analyze(&ds, &AnalysisConfig { seed: r as u64, ..cfg.clone() }, &Sequential).unwrap();
        let coefs = a.report.subgroups[0].coefficients.clone().unwrap();
        coefs.iter().all(|c| (c.value != 0.0) == (c.name == "w1"))
    });
    (hits.iter().filter(|h| **h).count(), reps, start.elapsed().as_secs_f64())
}

fn coverage_of(d: &DiscreteDgp, reps: usize, n: usize, seed0: u64) -> (usize, f64) {
    let truth = d.true_population_effects(&vec![1; d.n_strata()]).unwrap().indirect;
    let cfg = AnalysisConfig {
        blip_methods: Vec::new(),
        contrasts: vec![Contrast::Indirect],
        ..AnalysisConfig::default()
    };
    let covered = RayonExecutor::new(0).map(reps, |r| {
        let ds = d.simulate(n, seed0 + r as u64).unwrap();
        let a = analyze(&ds, &AnalysisConfig { seed: r as u64, ..cfg.clone() }, &Sequential).unwrap();
        let e = &a.report.effects[0];
        e.ci_low <= truth && truth <= e.ci_high
    });
    (covered.iter().filter(|c| **c).count(), truth)
}

fn inference() -> Verdict {
    let start = Instant::now();
    let reps = 500;
    let (cov_a, truth_a) = coverage_of(&presets::dgp_a(), reps, 2000, 10_000);
    let (cov_null, truth_null) = coverage_of(&presets::null_mediation(), reps, 2000, 20_000);
    let secs = start.elapsed().as_secs_f64();
    let rate = |c: usize| c as f64 / reps as f64;
    verdict(
        rate(cov_a) >= 0.90 && rate(cov_null) >= 0.93 && secs < 1800.0,
        format!(
            "DGP-A PIIE (truth {truth_a:.4}) covered {cov_a}/{reps}; null (truth {truth_null:.4}) covered {cov_null}/{reps}; {secs:.0}s"
        ),
    )
}

fn argmin() -> Verdict {
    let mut checked = 0usize;
    let mut ok = true;
    for (name, d) in committed() {
        let s = d.n_strata();
        if s > 12 {
            return verdict(false, format!("{name}: support of size {s} too large to enumerate"));
        }
        let best = d.true_population_effects(&d.sign_rule()).unwrap().indirect;
        for mask in 0u32..(1 << s) {
            let rule: Vec<u8> = (0..s).map(|k| ((mask >> k) & 1) as u8).collect();
            ok &= best <= d.true_population_effects(&rule).unwrap().indirect + 1e-12;
            checked += 1;
        }
    }
    verdict(ok, format!("{checked} rules enumerated over 3 models"))
}

fn medrule(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_medrule")).args(args).output().expect("binary runs")
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let dgp = Path::new(env!("CARGO_MANIFEST_DIR")).join("dgps").join("confounded.json");
    let data = root.join("data.csv");
    let sim = medrule(&["simulate", dgp.to_str().unwrap(), "--n", "3000", "--seed", "3", "--out", data.to_str().unwrap()]);
    if !sim.status.success() {
        return verdict(false, String::from_utf8_lossy(&sim.stderr).into_owned());
    }
    let runs: Vec<(&str, PathBuf)> = vec![("1", root.join("t1a")), ("1", root.join("t1b")), ("8", root.join("t8"))];
    for (threads, out) in &runs {
        let cfg = root.join(format!("{}.toml", out.file_name().unwrap().to_str().unwrap()));
        std::fs::write(
            &cfg,
            format!(
                r#"data = "data.csv"
output_dir = "{}"
seed = 99
[schema]
covariates = ["w1", "w2"]
rule_covariates = ["w1", "w2"]
treatment = "a"
post_treatment = "z"
mediators = ["m1", "m2"]
outcome = "y"
outcome_range = [0.0, 1.0]
"#,
                out.file_name().unwrap().to_str().unwrap()
            ),
        )
        .unwrap();
        let r = medrule(&["--threads", threads, "run", cfg.to_str().unwrap()]);
        if !r.status.success() {
            return verdict(false, String::from_utf8_lossy(&r.stderr).into_owned());
        }
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    let report = |dir: &Path| strip_timestamp(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let base = &runs[0].1;
    let mut same = true;
    let mut files = 0;
    for (_, other) in &runs[1..] {
        same &= report(base) == report(other);
        for entry in std::fs::read_dir(base).unwrap() {
            let name = entry.unwrap().file_name();
            if name == "report.json" {
                continue;
            }
            same &= read(&base.join(&name)) == read(&other.join(&name));
            files += 1;
        }
    }
    verdict(same, format!("reports and {files} artifact comparisons identical across reruns and 1 vs 8 threads"))
}

fn main() {
    let mut all = true;
    let mut line = |k: usize, name: &str, v: Verdict| {
        all &= v.pass;
        println!("criterion {k} {name}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    };
    line(1, "identification oracle", identification());
    line(2, "unbiased transformation", unbiased_transformation());
    line(3, "multiple robustness", multiple_robustness());
    let (c4, c6) = consistency_and_subgroups();
    line(4, "estimator consistency", c4);
    line(5, "inference", inference());
    line(6, "subgroup accuracy", c6);
    line(7, "argmin property", argmin());
    line(8, "determinism", determinism());
    if !all {
        std::process::exit(1);
    }
}
