use std::path::Path;
use std::process::Command;

use freegeo::lab::{run, Comparison, Metric, Report, RunConfig, Series, Verdict};

fn cfg(experiment: &str, pairs: &[(&str, &str)]) -> RunConfig {
    RunConfig::from_pairs(experiment, pairs).unwrap()
}

fn run_in(cfg: &RunConfig, dir: &Path) -> Report {
    run(cfg, dir).unwrap()
}

fn small_counterexample() -> RunConfig {
    cfg(
        "counterexample",
        &[("k", "2"), ("l", "3"), ("samples", "12"), ("scaling_epsilons", "0.04, 0.01"), ("seed", "5")],
    )
}

fn small_qfconv(formulas: &str) -> RunConfig {
    cfg("qfconv", &[("formulas", formulas), ("ns", "2, 4"), ("samples", "40"), ("seed", "3")])
}

fn metric(report: &Report, name: &str) -> Metric {
    report.metric(name).unwrap_or_else(|| panic!("missing metric {name}")).clone()
}

#[test]
fn csv_artifacts_reproduce_the_summary_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let mut report = run_in(&small_counterexample(), dir.path());
    report.write_artifacts(dir.path()).unwrap();

    let draws = Series::read_csv("draws", &dir.path().join("counterexample_draws.csv")).unwrap();
    let comm = draws.column("commutator").unwrap();
    let mean = comm.iter().sum::<f64>() / comm.len() as f64;
    assert!((mean - metric(&report, "commutator_norm").value).abs() < 1e-12);

    let total: Vec<f64> = (0..comm.len())
        .map(|i| ["dist_sq_1", "dist_sq_2", "dist_sq_3"].iter().map(|c| draws.column(c).unwrap()[i]).sum())
        .collect();
    let dist = (total.iter().sum::<f64>() / total.len() as f64).sqrt();
    assert!((dist - metric(&report, "coupled_distance").value).abs() < 1e-12);

    let mut qf = run_in(&small_qfconv("re tr(x1'*x1)"), dir.path());
    qf.write_artifacts(dir.path()).unwrap();
    let std = Series::read_csv("std", &dir.path().join("qfconv_std.csv")).unwrap();
    let sds = std.column("std").unwrap();
    let ratio = sds[sds.len() - 1] / sds[0];
    assert!((ratio - metric(&qf, "f1_std_ratio").value).abs() < 1e-12);
}

#[test]
fn reports_are_deterministic_and_round_trip_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_in(&small_counterexample(), dir.path()).to_json().unwrap();
    let b = run_in(&small_counterexample(), dir.path()).to_json().unwrap();
    assert_eq!(a, b);

    let back = Report::from_json(&a).unwrap();
    let orig = Report::from_json(&b).unwrap();
    assert_eq!(back.metrics.len(), orig.metrics.len());
    for (x, y) in back.metrics.iter().zip(&orig.metrics) {
        assert_eq!(x.name, y.name);
        assert_eq!(x.value.to_bits(), y.value.to_bits());
        assert_eq!(x.pass, y.pass);
    }
    assert_eq!(back.to_json().unwrap(), a);
}

#[test]
fn different_seeds_give_different_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut other = small_counterexample();
    other.set("seed", "6").unwrap();
    let a = run_in(&small_counterexample(), dir.path());
    let b = run_in(&other, dir.path());
    assert_ne!(metric(&a, "commutator_norm").value, metric(&b, "commutator_norm").value);
}

#[test]
fn configuration_errors_are_rejected() {
    assert!(RunConfig::from_pairs("nonsense", &[]).is_err());
    assert!(RunConfig::from_pairs("moment", &[("no_such_key", "1")]).is_err());
    assert!(RunConfig::from_pairs("moment", &[("t", "-1")]).is_err());
    assert!(RunConfig::from_pairs("moment", &[("iterations", "2.5")]).is_err());
    assert!(RunConfig::from_pairs("eval", &[("formula", "re tr(x1)")]).is_err());
    assert!(RunConfig::parse("t = 1").is_err());
    assert!(RunConfig::parse("experiment = moment\nt = 1\nt = 2").is_err());

    let dir = tempfile::tempdir().unwrap();
    let too_big = cfg("counterexample", &[("k", "16"), ("l", "17")]);
    assert!(run(&too_big, dir.path()).is_err());
    let quantified = small_qfconv("sup{y:1.0} re tr(y*x1)");
    assert!(run(&quantified, dir.path()).is_err());
    let wide = small_qfconv("re tr(x1*x2)");
    assert!(run(&wide, dir.path()).is_err());
    let unsorted = cfg("qfconv", &[("ns", "4, 2")]);
    assert!(run(&unsorted, dir.path()).is_err());
    let bad_tilt = cfg("talagrand", &[("tilt", "0.1, 0.2")]);
    assert!(run(&bad_tilt, dir.path()).is_err());
}

#[test]
fn config_text_round_trip() {
    let c = cfg("geodesic", &[("dim", "1"), ("cov1", "9"), ("samples", "800")]);
    let back = RunConfig::parse(&c.to_text()).unwrap();
    assert_eq!(back.int("dim").unwrap(), 1);
    assert_eq!(back.floats("cov1").unwrap(), vec![9.0]);
    assert_eq!(back.int("samples").unwrap(), 800);
    assert_eq!(back.to_text(), c.to_text());
}

#[test]
fn zero_tilt_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(
        &cfg(
            "talagrand",
            &[("tilt", "0"), ("n", "3"), ("samples", "40"), ("nodes", "4"), ("ladder_samples", "40")],
        ),
        dir.path(),
    );
    assert_eq!(metric(&r, "lhs_zero_tilt").value, 0.0);
    assert_eq!(metric(&r, "rhs_zero_tilt").value, 0.0);
    assert_eq!(r.verdict(), Verdict::Pass);
}

#[test]
fn moment_from_a_point_mass_reaches_the_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(&cfg("moment", &[("mu", "delta0"), ("t", "2"), ("iterations", "6"), ("grid_points", "1201")]), dir.path());
    assert!(metric(&r, "gaussian_oracle_w2").value < 1e-3);
    assert_eq!(r.verdict(), Verdict::Pass);
    let iterates = r.series("iterates").unwrap();
    let objective = iterates.column("objective").unwrap();
    assert!(objective.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn one_dimensional_geodesic() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(&cfg("geodesic", &[("dim", "1"), ("cov1", "9"), ("samples", "2000")]), dir.path());
    assert_eq!(r.verdict(), Verdict::Pass);
    // Variance (1 + 2t)² along the path: Δh between 0 and 1 is log 3.
    let path = r.series("path").unwrap();
    let t = path.column("t").unwrap();
    let h = path.column("h_analytic").unwrap();
    let (first, last) = (h[0], h[h.len() - 1]);
    assert_eq!((t[0], t[t.len() - 1]), (0.0, 1.0));
    assert!((last - first - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn constant_formula_has_zero_spread() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(&small_qfconv("1; re tr(x1)"), dir.path());
    let m = metric(&r, "f1_std_max");
    assert_eq!((m.value, m.comparison, m.pass), (0.0, Comparison::Within, Some(true)));
    assert!(r.metric("f2_std_ratio").is_some());
}

fn freegeo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_freegeo"))
}

#[test]
fn cli_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let pass = freegeo()
        .args(["geodesic", "--set", "dim=1", "--set", "samples=1000", "--out", out])
        .output()
        .unwrap();
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stderr));
    let report = Report::from_json(&std::fs::read_to_string(dir.path().join("geodesic_report.json")).unwrap()).unwrap();
    assert_eq!(report.verdict(), Verdict::Pass);
    assert!(dir.path().join("geodesic_path.csv").exists());

    let fail = freegeo()
        .args(["moment", "--set", "iterations=2", "--set", "grid_points=801", "--set", "w2_tolerance=1e-12"])
        .args(["--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("gaussian_oracle_w2"));

    let error = freegeo().args(["moment", "--set", "bogus=1"]).output().unwrap();
    assert_eq!(error.status.code(), Some(1));
    let missing = freegeo().args(["eval", "--formula", "re tr(x1)"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn cli_config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# one-dimensional check\nexperiment = geodesic\ndim = 1\nsamples = 800\n").unwrap();
    let out = freegeo()
        .arg("geodesic")
        .arg("--config")
        .arg(&path)
        .args(["--seed", "9", "--set", "cov1=2.25"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = Report::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let text = RunConfig::parse(&report.config.to_text()).unwrap();
    assert_eq!(text.int("seed").unwrap(), 9);
    assert_eq!(text.floats("cov1").unwrap(), vec![2.25]);
    assert_eq!(text.int("samples").unwrap(), 800);

    let mismatch = freegeo().arg("moment").arg("--config").arg(&path).output().unwrap();
    assert_eq!(mismatch.status.code(), Some(1));
}

#[test]
fn cli_sample_eval_w2_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let sample = freegeo()
        .args(["sample", "--set", "n=3", "--set", "samples=60", "--set", "chains=2", "--out", out])
        .output()
        .unwrap();
    assert_eq!(sample.status.code(), Some(0), "{}", String::from_utf8_lossy(&sample.stderr));
    let file = dir.path().join("ensemble.fige");
    assert!(file.exists());

    let eval = freegeo()
        .args(["eval", "--formula", "re tr(x1'*x1)", "--input"])
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(eval.status.code(), Some(0), "{}", String::from_utf8_lossy(&eval.stderr));
    let report = Report::from_json(&String::from_utf8(eval.stdout).unwrap()).unwrap();
    // E‖X‖² = 2m/c for the quadratic potential.
    let mean = report.metric("mean").unwrap().value;
    assert!((mean - 2.0).abs() < 0.5, "{mean}");

    let w2 = freegeo().arg("w2").arg("--a").arg(&file).arg("--b").arg(&file).output().unwrap();
    assert_eq!(w2.status.code(), Some(0));
    let report = Report::from_json(&String::from_utf8(w2.stdout).unwrap()).unwrap();
    assert!(report.metric("w2").unwrap().value.abs() < 1e-9);
}
