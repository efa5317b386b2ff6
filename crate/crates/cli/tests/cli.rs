use std::path::Path;
use std::process::{Command, Output};

use heatcont_cli::output::Document;
use heatcont_core::{make_builtin, Branch, Params, ScalingFit, SmoothedJet, SweepResult, Termination};

fn heatcont(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatcont"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = heatcont(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> Document<T> {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eval_abs_at_origin() {
    let jet: SmoothedJet = serde_json::from_str(&ok(&[
        "eval",
        "--objective",
        "abs",
        "--t",
        "1",
        "--x",
        "0",
        "--order",
        "2",
    ]))
    .unwrap();
    assert!((jet.value - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-10);
    assert!(jet.hess.is_some() && jet.third.is_none());
}

#[test]
fn eval_quadratic() {
    let out = ok(&[
        "eval",
        "--objective",
        "monomial",
        "--param",
        "m=1",
        "--t",
        "0.5",
        "--x",
        "0",
    ]);
    let jet: SmoothedJet = serde_json::from_str(&out).unwrap();
    assert_eq!(jet.value, 1.0);
}

#[test]
fn eval_accepts_negative_points_and_several_coordinates() {
    let out = ok(&[
        "eval",
        "--objective",
        "monomial",
        "--param",
        "dim=2",
        "--t",
        "0.25",
        "--x",
        "-1,2",
        "--order",
        "0",
    ]);
    let jet: SmoothedJet = serde_json::from_str(&out).unwrap();
    assert_eq!(jet.value, 1.0 + 4.0 + 4.0 * 0.25);
}

#[test]
fn usage_errors_exit_2() {
    let out = heatcont(&["eval", "--objective", "abs", "--t", "0", "--x", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t must be positive"));
    for args in [
        vec!["eval", "--objective", "nope", "--t", "1", "--x", "0"],
        vec!["eval", "--objective", "abs", "--param", "a=2", "--t", "1", "--x", "0"],
        vec!["eval", "--objective", "abs", "--t", "1", "--x", "0,1"],
        vec!["eval", "--objective", "abs", "--t", "1", "--x", "0", "--order", "4"],
        vec!["frobnicate"],
    ] {
        assert_eq!(heatcont(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_objective_matches_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("abs.json");
    std::fs::write(&path, make_builtin("abs", &Params::new()).unwrap().to_json()).unwrap();
    let a = ok(&[
        "eval",
        "--objective",
        path.to_str().unwrap(),
        "--t",
        "0.3",
        "--x",
        "0.2",
    ]);
    let b = ok(&["eval", "--objective", "abs", "--t", "0.3", "--x", "0.2"]);
    assert_eq!(a, b);
}

#[test]
fn trace_outputs_agree_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&[
        "trace",
        "--objective",
        "abs",
        "--seed",
        "0",
        "--t-start",
        "1",
        "--t-end",
        "1e-3",
        "--csv",
        p("b.csv").to_str().unwrap(),
        "--json",
        p("b.json").to_str().unwrap(),
        "--svg",
        p("b.svg").to_str().unwrap(),
    ]);
    let doc: Document<Branch> = read(&p("b.json"));
    assert_eq!(csv_rows(&p("b.csv")).len(), doc.result.points.len());
    assert_eq!(doc.result.termination, Termination::ReachedTEnd);
    assert_eq!(doc.manifest.command, "trace");
    let text = std::fs::read_to_string(p("b.json")).unwrap();
    assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", text);
    let side: heatcont_cli::output::RunManifest =
        serde_json::from_str(&std::fs::read_to_string(p("b.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(side, doc.manifest);
    let svg = std::fs::read_to_string(p("b.svg")).unwrap();
    assert!(svg.contains(r#"viewBox="0 0 800 1000""#) && svg.contains("\"command\": \"trace\""));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        let files: Vec<_> = ["csv", "json", "svg"]
            .iter()
            .map(|e| dir.path().join(format!("out.{e}")))
            .collect();
        ok(&[
            "trace",
            "--objective",
            "asymmetric_cusp",
            "--seed",
            "0",
            "--t-start",
            "0.1",
            "--t-end",
            "1e-3",
            "--csv",
            files[0].to_str().unwrap(),
            "--json",
            files[1].to_str().unwrap(),
            "--svg",
            files[2].to_str().unwrap(),
        ]);
        files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn right_valley_persists_upwards() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("v.json");
    ok(&[
        "trace",
        "--objective",
        "multi_valley",
        "--seed",
        "3",
        "--t-start",
        "0.5",
        "--t-end",
        "6",
        "--json",
        json.to_str().unwrap(),
    ]);
    let doc: Document<Branch> = read(&json);
    assert_eq!(doc.result.termination, Termination::ReachedTEnd);
    assert_eq!(doc.result.points.last().unwrap().t, 6.0);
}

#[test]
fn predictors_agree() {
    let dir = tempfile::tempdir().unwrap();
    let run = |pred: &str| {
        let json = dir.path().join(format!("{pred}.json"));
        ok(&[
            "trace",
            "--objective",
            "asymmetric_cusp",
            "--seed",
            "0",
            "--t-start",
            "0.1",
            "--t-end",
            "1e-3",
            "--predictor",
            pred,
            "--json",
            json.to_str().unwrap(),
        ]);
        read::<Branch>(&json).result
    };
    let (ode, secant) = (run("ode"), run("secant"));
    let mut shared = 0;
    for p in &ode.points {
        if let Some(q) = secant.points.iter().find(|q| q.t == p.t) {
            assert!((p.x[0] - q.x[0]).abs() <= 10.0 * 1e-10);
            shared += 1;
        }
    }
    assert!(shared > 10);
}

#[test]
fn monomial_sweep_has_no_switch() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let json = dir.path().join("s.json");
    ok(&[
        "sweep",
        "--objective",
        "monomial",
        "--t-from",
        "1",
        "--t-to",
        "1e-2",
        "--n",
        "8",
        "--csv",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(csv_rows(&csv).len(), 8);
    assert!(csv_rows(&dir.path().join("s.switches.csv")).is_empty());
    let doc: Document<SweepResult> = read(&json);
    assert!(doc.result.switches.is_empty());
}

#[test]
fn multi_valley_sweep_emits_one_switch() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mv.csv");
    ok(&[
        "sweep",
        "--objective",
        "multi_valley",
        "--t-from",
        "1",
        "--t-to",
        "1e-2",
        "--n",
        "30",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let switches = csv_rows(&dir.path().join("mv.switches.csv"));
    assert_eq!(switches.len(), 1);
    let t_star: f64 = switches[0][0].parse().unwrap();
    assert!((0.10..=0.20).contains(&t_star), "t_star {t_star}");
}

#[test]
fn small_window_fails_certificate() {
    let out = heatcont(&[
        "sweep",
        "--objective",
        "multi_valley",
        "--t-from",
        "1",
        "--t-to",
        "0.5",
        "--n",
        "2",
        "--x-lo",
        "-0.5",
        "--x-hi",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window"));
}

#[test]
fn value_scaling_of_abs() {
    let fit: ScalingFit = serde_json::from_str(&ok(&["scaling", "--objective", "abs", "--kind", "value"])).unwrap();
    assert!((fit.slope - 0.5).abs() < 1e-6 && fit.pass);
    let fit: ScalingFit = serde_json::from_str(&ok(&[
        "scaling",
        "--objective",
        "abs_power",
        "--param",
        "a=1.5",
        "--kind",
        "hessian",
    ]))
    .unwrap();
    assert!((fit.slope + 0.25).abs() < 1e-6 && fit.pass);
}

#[test]
fn reproduce_fig1() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["reproduce", "fig1", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.contains("PASS check (d2 P_t(x^4)(0) -> 0)"));
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS criterion")).count(), 3);
    assert_eq!(csv_rows(&dir.path().join("fig1.csv")).len(), 49);
    assert!(dir.path().join("fig1.svg").is_file());
}

#[test]
fn documented_config_traces_to_t_end() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/kinked_well.json");
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("k.json");
    ok(&[
        "trace",
        "--objective",
        path.to_str().unwrap(),
        "--seed",
        "0",
        "--t-end",
        "1e-3",
        "--json",
        json.to_str().unwrap(),
    ]);
    let doc: Document<Branch> = read(&json);
    assert_eq!(doc.result.termination, Termination::ReachedTEnd);
}
