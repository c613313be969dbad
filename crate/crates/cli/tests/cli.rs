use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wfmr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfmr"))
        .args(args)
        .env_remove("WFMR_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = wfmr(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("summary is JSON")
}

fn error_of(args: &[&str]) -> (i32, Value) {
    let out = wfmr(args);
    let code = out.status.code().expect("exit code");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("stderr is not empty");
    let body = serde_json::from_str(last).expect("error is JSON");
    (code, body)
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn simulate(dir: &Path, name: &str, seed: &str) -> String {
    let out = p(dir, name);
    ok(&["simulate", "--family", "smooth", "--N", "64", "--n", "80", "--r2", "0.9", "--seed", seed, "--out", &out]);
    out
}

fn read_csv(path: &str) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.csv", "11");
    let b = simulate(dir.path(), "b.csv", "11");
    let c = simulate(dir.path(), "c.csv", "12");
    let bytes = |f: &str| std::fs::read(f).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    assert_ne!(bytes(&a), bytes(&c));
    let truth: Value = serde_json::from_slice(&bytes(&format!("{a}.truth.json"))).unwrap();
    assert_eq!(truth["seed"], 11);
    assert_eq!(truth["labels"].as_array().unwrap().len(), 80);
}

#[test]
fn missing_seed_is_generated_and_stored() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "d.csv");
    let run = wfmr(&["simulate", "--family", "bumpy", "--N", "32", "--n", "10", "--r2", "0.5", "--out", &out]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("generated seed"));
    let summary: Value = serde_json::from_slice(&run.stdout).unwrap();
    let truth: Value = serde_json::from_slice(&std::fs::read(format!("{out}.truth.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], truth["seed"]);
}

#[test]
fn lambda_max_model_exports_zero_functions() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "3");
    let model = p(dir.path(), "model.json");
    let plot = p(dir.path(), "omegas.csv");
    ok(&["fit", "--in", &data, "--C", "2", "--lambda", "max", "--j0", "0", "--seed", "5", "--out", &model]);
    assert!(wfmr(&["export-plot", "--model", &model, "--out", &plot]).status.success());
    let rows = read_csv(&plot);
    assert_eq!(rows[0], vec!["t", "omega_1", "omega_2"]);
    assert_eq!(rows.len(), 65);
    for row in &rows[1..] {
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn riemann_export_scales_by_length() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "4");
    let model = p(dir.path(), "model.json");
    ok(&["fit", "--in", &data, "--C", "2", "--lambda", "0.05", "--seed", "1", "--out", &model]);
    let raw = p(dir.path(), "raw.csv");
    let scaled = p(dir.path(), "scaled.csv");
    assert!(wfmr(&["export-plot", "--model", &model, "--out", &raw]).status.success());
    assert!(wfmr(&["export-plot", "--model", &model, "--riemann", "--out", &scaled]).status.success());
    let (raw, scaled) = (read_csv(&raw), read_csv(&scaled));
    for (a, b) in raw[1..].iter().zip(&scaled[1..]) {
        for k in 1..3 {
            let (x, y): (f64, f64) = (a[k].parse().unwrap(), b[k].parse().unwrap());
            assert!((y - 64.0 * x).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
}

#[test]
fn model_file_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "8");
    let model = p(dir.path(), "model.json");
    ok(&["fit", "--in", &data, "--C", "2", "--lambda", "0.05", "--seed", "2", "--out", &model]);
    let m = wfmr::io::ModelFile::read(&model).unwrap();
    let copy = p(dir.path(), "copy.json");
    m.write(&copy).unwrap();
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&copy).unwrap());
}

#[test]
fn predict_and_transform_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "9");
    let model = p(dir.path(), "model.json");
    ok(&["fit", "--in", &data, "--C", "2", "--lambda", "0.05", "--seed", "2", "--out", &model]);
    let pred = p(dir.path(), "pred.csv");
    let summary = ok(&["predict", "--model", &model, "--in", &data, "--out", &pred]);
    let sizes: Vec<u64> = summary["group_sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(sizes.iter().sum::<u64>(), 80);
    let rows = read_csv(&pred);
    assert_eq!(rows[0], vec!["id", "response", "label", "prediction", "mixture_mean", "resp_1", "resp_2"]);
    for row in &rows[1..] {
        let label: usize = row[2].parse().unwrap();
        let r: Vec<f64> = row[5..].iter().map(|v| v.parse().unwrap()).collect();
        assert!((r[0] + r[1] - 1.0).abs() < 1e-12);
        assert_eq!(label, if r[1] > r[0] { 2 } else { 1 });
    }
    let thr = p(dir.path(), "thr.csv");
    ok(&["predict", "--model", &model, "--in", &data, "--rule", "threshold:0:1:2", "--out", &thr]);
    for row in &read_csv(&thr)[1..] {
        let y: f64 = row[1].parse().unwrap();
        assert_eq!(row[2], if y < 0.0 { "1" } else { "2" });
    }

    let coeffs = p(dir.path(), "coeffs.csv");
    assert!(wfmr(&["transform", "--in", &data, "--j0", "2", "--wavelet", "haar", "--out", &coeffs]).status.success());
    let rows = read_csv(&coeffs);
    assert_eq!(rows.len(), 81);
    assert_eq!(rows[0].len(), 2 + 65);
    assert!(rows[1..].iter().all(|r| r[2] == "1"));
}

#[test]
fn predict_without_responses_uses_prior_label() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "10");
    let model = p(dir.path(), "model.json");
    ok(&["fit", "--in", &data, "--C", "2", "--lambda", "0.05", "--seed", "2", "--out", &model]);
    let text = std::fs::read_to_string(&data).unwrap();
    let blanked: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(k, l)| {
            if k < 2 {
                return l.to_string();
            }
            let mut f: Vec<&str> = l.split(',').collect();
            f[1] = "";
            f.join(",")
        })
        .collect();
    let curves = p(dir.path(), "curves.csv");
    std::fs::write(&curves, blanked.join("\n")).unwrap();
    let pred = p(dir.path(), "pred.csv");
    ok(&["predict", "--model", &model, "--in", &curves, "--out", &pred]);
    let rows = read_csv(&pred);
    let first = rows[1][2].clone();
    assert!(rows[1..].iter().all(|r| r[2] == first && r[5].is_empty()));
    let (code, body) = error_of(&["predict", "--model", &model, "--in", &curves, "--rule", "threshold:0", "--out", &pred]);
    assert_eq!(code, 3);
    assert_eq!(body["error"], "data");
}

#[test]
fn tune_selects_two_components_with_bic() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "21");
    let out = p(dir.path(), "tune.json");
    let model = p(dir.path(), "best.json");
    let summary = ok(&[
        "tune", "--in", &data, "--rule", "bic", "--scenario", "2", "--n-lambda", "12", "--seed", "4", "--out", &out,
        "--model", &model,
    ]);
    assert_eq!(summary["C"], 2);
    let saved: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(saved["result"]["records"].as_array().unwrap().len(), 36);
    let m = wfmr::io::ModelFile::read(&model).unwrap();
    assert_eq!(m.metadata.components, 2);
}

#[test]
fn errors_are_json_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "5");
    let out = p(dir.path(), "m.json");

    let (code, body) = error_of(&["fit", "--in", &data, "--C", "2", "--lambda", "-1", "--out", &out]);
    assert_eq!((code, body["error"].as_str()), (2, Some("usage")));
    let (code, _) = error_of(&["fit", "--in", &data, "--C", "2"]);
    assert_eq!(code, 2);
    let (code, _) = error_of(&["tune", "--in", &data, "--rule", "aic", "--scenario", "1", "--out", &out]);
    assert_eq!(code, 2);

    let bad = p(dir.path(), "bad.csv");
    std::fs::write(&bad, "id,response,t_1,t_2\ngrid,,0,1\na,1,2,oops\n").unwrap();
    let (code, body) = error_of(&["fit", "--in", &bad, "--C", "1", "--lambda", "0", "--out", &out]);
    assert_eq!(code, 3);
    assert!(body["message"].as_str().unwrap().contains("row 3, column 4"));

    let odd = p(dir.path(), "odd.csv");
    std::fs::write(&odd, "id,response,t_1,t_2,t_3\ngrid,,0,0.5,1\na,1,2,3,4\nb,2,1,1,1\n").unwrap();
    let (code, _) = error_of(&["fit", "--in", &odd, "--C", "1", "--lambda", "0", "--out", &out]);
    assert_eq!(code, 3);

    let env = Command::new(env!("CARGO_BIN_EXE_wfmr"))
        .args(["export-plot", "--model", &out, "--out", &out])
        .env("WFMR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(2));
}

#[test]
fn resampled_fit_and_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let raw = p(dir.path(), "raw.csv");
    ok(&["simulate", "--family", "smooth", "--N", "93", "--n", "60", "--r2", "0.9", "--seed", "6", "--out", &raw]);
    let model = p(dir.path(), "m.json");
    let run = Command::new(env!("CARGO_BIN_EXE_wfmr"))
        .args(["fit", "--in", &raw, "--C", "2", "--lambda", "0.05", "--resample", "128", "--seed", "1", "--out", &model])
        .env("WFMR_THREADS", "1")
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(wfmr::io::ModelFile::read(&model).unwrap().n_points, 128);
    let summary = ok(&["cvrpe", "--in", &raw, "--C", "1", "--lambda", "0.05", "--resample", "128", "--seed", "1"]);
    let v = summary["cvrpe"].as_f64().unwrap();
    assert!(v.is_finite() && v > 0.0);
}
