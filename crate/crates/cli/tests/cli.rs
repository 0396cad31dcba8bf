use std::path::Path;
use std::process::{Command, Output};

use pwexp::mcmc::RateUpdate;
use pwexp_cli::simulate::{self, Scenario, StudyConfig};

fn pwexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwexp"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("{key} missing from {out}"))
}

#[test]
fn dist_eval_reports_the_anchor() {
    let o = pwexp(&[
        "dist",
        "eval",
        "--grid",
        "0,2,3,5",
        "--rates",
        "0.3,0.6,0.8,1.3",
        "--t",
        "3.483",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(value(&out, "hazard"), 0.8);
    assert!((value(&out, "cum-hazard") - 1.5864).abs() < 1e-10);
    assert!((value(&out, "survival") - (-1.5864f64).exp()).abs() < 1e-10);
}

#[test]
fn dist_quantile_of_an_exponential() {
    let o = pwexp(&[
        "dist", "quantile", "--p", "0.5", "--grid", "0", "--rates", "2",
    ]);
    assert!(o.status.success());
    let q: f64 = stdout(&o)
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((q - std::f64::consts::LN_2 / 2.0).abs() < 1e-10);
}

#[test]
fn dist_sample_is_reproducible_and_respects_bounds() {
    let args = [
        "dist", "sample", "--n", "50", "--seed", "1", "--grid", "0,2", "--rates", "0.5,1",
        "--lower", "1", "--upper", "3",
    ];
    let a = stdout(&pwexp(&args));
    assert_eq!(a, stdout(&pwexp(&args)));
    let xs: Vec<f64> = a.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(xs.len(), 50);
    assert!(xs.iter().all(|&x| (1.0..=3.0).contains(&x)));
}

#[test]
fn sampling_requires_a_seed() {
    let o = pwexp(&["dist", "sample", "--n", "5", "--grid", "0", "--rates", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_parameters_list_every_violation() {
    let o = pwexp(&["dist", "eval", "--grid", "1,1", "--rates", "-1", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    for needle in [
        "first cut point",
        "strictly increasing",
        "negative",
        "2 cut points but 1 rates",
    ] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn malformed_csv_is_a_validation_error_with_a_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(
        tmp.path(),
        "bad.csv",
        "subject,replicate,time,status\n1,1,2.0,1\n2,1,,1\n",
    );
    let o = pwexp(&[
        "fit",
        "--model",
        "simple",
        "--data",
        &path,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn one_event_posterior_shrinks_toward_the_prior() {
    // prior Ga(0.01, 0.01) has mean 1; the MLE from one event at t = 2 is 0.5
    let tmp = tempfile::tempdir().unwrap();
    let path = write(
        tmp.path(),
        "one.csv",
        "subject,replicate,time,status\n1,1,2,1\n",
    );
    let out = tmp.path().join("fit");
    let o = pwexp(&[
        "fit",
        "--model",
        "simple",
        "--data",
        &path,
        "--m",
        "1",
        "--burnin",
        "100",
        "--iters",
        "20000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mean: f64 = summary
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(mean > 0.5 && mean < 1.0, "{mean}");
    // exact posterior mean 1.01 / 2.01
    assert!((mean - 1.01 / 2.01).abs() < 0.02, "{mean}");
}

#[test]
fn fit_outputs_reference_their_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fit");
    let o = pwexp(&[
        "fit",
        "--model",
        "frailty-lognormal",
        "--kidney",
        "--m",
        "4",
        "--burnin",
        "50",
        "--iters",
        "200",
        "--chains",
        "3",
        "--monitor-loglik",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("beta_sex"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 3);
    for file in manifest["files"].as_array().unwrap() {
        let name = file.as_str().unwrap();
        assert!(out.join(name).exists(), "{name}");
        if name.ends_with(".json") {
            let v: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(out.join(name)).unwrap()).unwrap();
            assert_eq!(v["manifest"], "manifest.json", "{name}");
        }
    }
    let chain = std::fs::read_to_string(out.join("chain_2.csv")).unwrap();
    assert_eq!(chain.lines().count(), 201);
    assert!(chain.lines().next().unwrap().ends_with(",loglik"));
    let timings: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("timings.json")).unwrap()).unwrap();
    assert_eq!(timings["chain_secs"].as_array().unwrap().len(), 3);
}

#[test]
fn explicit_grid_overrides_equal_spacing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fit");
    let o = pwexp(&[
        "fit",
        "--model",
        "frailty-gamma",
        "--kidney",
        "--grid",
        "0,30,100",
        "--burnin",
        "20",
        "--iters",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let table = stdout(&o);
    assert!(table.contains("lambda[3]") && !table.contains("lambda[4]"));
    let bad = pwexp(&[
        "fit",
        "--model",
        "simple",
        "--kidney",
        "--grid",
        "0,30,20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn kidney_subcommand_prints_the_bundled_csv() {
    let o = pwexp(&["kidney"]);
    assert_eq!(stdout(&o), pwexp_cli::data::kidney_csv());
}

#[test]
fn single_replication_study_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = pwexp(&[
            "simulate",
            "--scenario",
            "s2",
            "--n",
            "100",
            "--reps",
            "1",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read(out.join("results.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn s1_coverage_is_high() {
    let config = StudyConfig::new(Scenario::S1, 1000, 5, 99);
    let reps = simulate::run_study(&config, 4).unwrap();
    for a in simulate::aggregate(&reps) {
        assert!(a.coverage >= 0.8, "{a:?}");
    }
}

#[test]
fn s3_last_rate_mixes_worst_under_slice_updates() {
    // with exact conjugate draws every rate is close to independent; the
    // slice sampler shows the poorer mixing of the sparsely observed λ_4
    let config = StudyConfig {
        rate_update: RateUpdate::Slice,
        ..StudyConfig::new(Scenario::S3, 100, 20, 3)
    };
    let reps = simulate::run_study(&config, 4).unwrap();
    let lowest_is_last = reps
        .iter()
        .filter(|r| {
            let min = r.rates.iter().map(|x| x.ess).fold(f64::INFINITY, f64::min);
            r.rates[3].ess == min
        })
        .count();
    assert!(
        lowest_is_last * 2 > reps.len(),
        "{lowest_is_last} of {}",
        reps.len()
    );
}
