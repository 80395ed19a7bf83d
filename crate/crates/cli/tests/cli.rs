use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpm_cli::input::{read_csv, write_csv, ColumnLayout};
use cpm_cli::predict::{expand_profiles, predict};
use cpm_cli::{load_fit, FitDocument, RunConfig};
use cpm_core::{build_anchor_set, validate_dataset, AlphaRef, CensorCode, TermKind};
use cpm_sim::generate::{multi_dl_observations, single_dl_observations};
use cpm_sim::replicate_rng;
use serde_json::Value;
use tempfile::TempDir;

const TOY: &str = "y,censor,x\n3,L,0.3\n4,,-1\n6,,0.5\n9,U,1.2\n5,L,-0.4\n7,,0\n10,,2\n12,U,-0.7\n";

fn cpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpm"))
        .args(args)
        .env("CPM_THREADS", "2")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn toy_csv_matches_the_anchor_table() {
    let dir = TempDir::new().unwrap();
    let t = read_csv(&write(dir.path(), "toy.csv", TOY), &ColumnLayout::default()).unwrap();
    let a = build_anchor_set(&validate_dataset(&t.observations).unwrap()).unwrap();
    assert_eq!(a.values(), &[4.0, 6.0, 7.0, 10.0]);
    assert_eq!(a.n_alphas(), 5);
    use AlphaRef::*;
    use TermKind::*;
    let want = [
        (LowerTail, One(0)),
        (InteriorCell, Pair(0, 1)),
        (InteriorCell, Pair(1, 2)),
        (UpperTail, One(3)),
        (LowerTail, One(1)),
        (InteriorCell, Pair(2, 3)),
        (InteriorCell, Pair(3, 4)),
        (UpperTail, One(4)),
    ];
    let got: Vec<_> = a.assignments.iter().map(|x| (x.kind, x.alpha)).collect();
    assert_eq!(got, want);
}

#[test]
fn fit_toy_with_logit() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let out = dir.path().join("fit.json");
    let o = cpm(&["fit", "--data", s(&data), "--link", "logit", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: FitDocument = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc.schema_version, 1);
    assert!(doc.convergence.converged);
    let names: Vec<_> = doc.alphas.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["alpha_0", "alpha_1", "alpha_2", "alpha_3", "alpha_4"]);
    assert_eq!(doc.coefficients.len(), 1);
    let c = &doc.coefficients[0];
    assert_eq!(c.name, "x");
    let or = c.odds_ratio.as_ref().unwrap();
    assert!((or.estimate - c.estimate.exp()).abs() < 1e-15);
    assert!(c.ci_lo < c.estimate && c.estimate < c.ci_hi);
    assert_eq!(doc.vcov.len(), 6);
    assert_eq!(doc.anchors.term_counts["interior_cell"], 4);
    assert_eq!(doc.anchors.lower_label.as_deref(), Some("<3"));
}

#[test]
fn non_logit_documents_omit_odds_ratios() {
    let dir = TempDir::new().unwrap();
    let obs = single_dl_observations(2, 200, &mut replicate_rng(4, 0)).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &["x".into()], &obs).unwrap();
    let data = write(dir.path(), "d.csv", std::str::from_utf8(&buf).unwrap());
    let out = dir.path().join("fit.json");
    let o = cpm(&["fit", "--data", s(&data), "--link", "loglog", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: FitDocument = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(doc.coefficients[0].odds_ratio.is_none());
    assert!(doc.convergence.warnings.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    let o = cpm(&["fit"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cpm(&[
        "simulate",
        "--family",
        "multi",
        "--scenario",
        "9",
        "--n",
        "50",
        "--out",
        "/tmp/none",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "UnknownScenario");
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "toy.csv", TOY);
    let o = cpm(&["fit", "--data", s(&data), "--link", "cauchit"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn data_errors_exit_one_with_error_object() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.csv", "y,c,x\n3,L,1\n4,X,2\n");
    let o = cpm(&["fit", "--data", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_kind(&o), "UnknownCensorCode");
    let o = cpm(&["fit", "--data", s(&dir.path().join("missing.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_kind(&o), "Io");
    let censored = write(dir.path(), "c.csv", "y,c\n3,L\n4,L\n");
    let o = cpm(&["fit", "--data", s(&censored)]);
    assert_eq!(error_kind(&o), "NoUncensoredValues");
}

fn fitted(dir: &Path) -> PathBuf {
    let obs = single_dl_observations(2, 300, &mut replicate_rng(8, 1)).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &["x".into()], &obs).unwrap();
    let data = write(dir, "d.csv", std::str::from_utf8(&buf).unwrap());
    let cfg = write(dir, "run.toml", "link = \"probit\"\n[fit]\nmax_iterations = 200\n");
    let out = dir.join("fit.json");
    let o = cpm(&["fit", "--data", s(&data), "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn reloaded_documents_reproduce_predictions_exactly() {
    let dir = TempDir::new().unwrap();
    let obs = single_dl_observations(1, 300, &mut replicate_rng(8, 1)).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &["x".into()], &obs).unwrap();
    let data = write(dir.path(), "d.csv", std::str::from_utf8(&buf).unwrap());
    let cfg = RunConfig::default();
    let (model, doc) = cpm_cli::fit_csv(&data, cpm_core::Link::Probit, &cfg).unwrap();
    let path = write(dir.path(), "fit.json", &serde_json::to_string(&doc).unwrap());
    let back = load_fit(&path).unwrap();
    assert_eq!(back.theta_hat, model.theta_hat);
    assert_eq!(back.vcov, model.vcov);
    let profiles = expand_profiles(&["x=-1:1:0.25".into()], &back.covariate_names).unwrap();
    let a = predict(&model, &profiles, &[0.5, 1.0, 3.0], &[0.1, 0.5, 0.9], 0.95).unwrap();
    let b = predict(&back, &profiles, &[0.5, 1.0, 3.0], &[0.1, 0.5, 0.9], 0.95).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn predict_emits_long_format_rows() {
    let dir = TempDir::new().unwrap();
    let fit = fitted(dir.path());
    let out = dir.path().join("pred.csv");
    let o = cpm(&[
        "predict",
        "--fit",
        s(&fit),
        "--profile",
        "x=0:1:0.5",
        "--quantile",
        "0.5",
        "0.9",
        "--cdf-at",
        "-3",
        "1.5",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["profile", "x", "quantity", "at", "estimate", "se", "ci_lo", "ci_hi"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3 * 4);
    // below every anchor the CDF is exactly 0 with no uncertainty
    let below: Vec<_> = rows.iter().filter(|r| &r[2] == "cdf" && &r[3] == "-3").collect();
    assert_eq!(below.len(), 3);
    for r in below {
        assert_eq!((&r[4], &r[5]), ("0", "0"));
    }
}

#[test]
fn low_probabilities_give_boundary_rows() {
    let dir = TempDir::new().unwrap();
    let fit = fitted(dir.path());
    // about 8% of outcomes at x = 0 fall below the limit
    let o = cpm(&[
        "predict",
        "--fit",
        s(&fit),
        "--quantile",
        "0.02",
        "0.5",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["estimate"]["kind"], "below_dl");
    assert!(rows[0]["estimate"]["label"].as_str().unwrap().starts_with('<'));
    assert!(rows[1]["estimate"].is_f64());
}

#[test]
fn predict_argument_errors() {
    let dir = TempDir::new().unwrap();
    let fit = fitted(dir.path());
    let o = cpm(&["predict", "--fit", s(&fit), "--profile", "age=3", "--quantile", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "UnknownProfileColumn");
    let o = cpm(&["predict", "--fit", s(&fit), "--quantile", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "InvalidProbability");
}

#[test]
fn simulate_single_replicate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("study");
    let o = cpm(&[
        "simulate",
        "--family",
        "single",
        "--scenario",
        "2",
        "--n",
        "60",
        "--reps",
        "1",
        "--seed",
        "3",
        "--estimators",
        "cpm,impute_half,mle",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 15);
    for r in rows {
        assert_eq!(r["empirical_se"], 0.0);
        assert_eq!(r["replicates"], 1);
    }
    let mut rdr = csv::Reader::from_path(out.join("metrics.csv")).unwrap();
    assert_eq!(rdr.records().count(), 15);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 3);
    assert_eq!(m["threads"], 2);
    assert_eq!(m["spec"]["family"]["family"], "single_dl");
    assert!(m["exclusions"].as_array().unwrap().is_empty());
}

#[test]
fn generator_output_round_trips_through_csv() {
    let dir = TempDir::new().unwrap();
    for s in 1..=6u8 {
        let obs = single_dl_observations(s, 80, &mut replicate_rng(1, s as u64)).unwrap();
        let path = dir.path().join(format!("single{s}.csv"));
        write_csv(std::fs::File::create(&path).unwrap(), &["x".into()], &obs).unwrap();
        assert_eq!(read_csv(&path, &ColumnLayout::default()).unwrap().observations, obs);
    }
    for s in 1..=5u8 {
        let obs: Vec<_> = multi_dl_observations(s, 40, &mut replicate_rng(2, s as u64))
            .unwrap()
            .into_iter()
            .map(|(_, o)| o)
            .collect();
        assert!(obs.iter().any(|o| o.delta != CensorCode::Observed));
        let path = dir.path().join(format!("multi{s}.csv"));
        write_csv(std::fs::File::create(&path).unwrap(), &["x".into()], &obs).unwrap();
        assert_eq!(read_csv(&path, &ColumnLayout::default()).unwrap().observations, obs);
    }
}
