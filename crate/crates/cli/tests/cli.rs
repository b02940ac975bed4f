use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn itpq(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itpq"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("ITPQ_TOLERANCES")
        .output()
        .expect("binary runs")
}

fn ok_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Rows of a CSV file as string fields, header dropped.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn ks_check_builtins() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(&itpq(dir.path(), &["ks-check", "--builtin", "cabello18"]));
    assert_eq!(v["colorable"], json!(false));
    assert_eq!(v["contexts_checked"], json!(9));
    assert_eq!(read_json(&dir.path().join("ks.json")), v);

    let v = ok_json(&itpq(dir.path(), &["ks-check", "--builtin", "control"]));
    assert_eq!(v["colorable"], json!(true));
    let values: Vec<u64> = serde_json::from_value(v["assignment"].clone()).unwrap();
    for ctx in [[0, 1, 2], [0, 3, 4]] {
        assert_eq!(ctx.iter().map(|&i| values[i]).sum::<u64>(), 1);
    }
}

#[test]
fn ks_check_files() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(&itpq(dir.path(), &["ks-check", &data("cabello18.json")]));
    assert_eq!(v["colorable"], json!(false));

    let missing = itpq(dir.path(), &["ks-check", "no-such-file.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let syntax = dir.path().join("syntax.json");
    fs::write(&syntax, "{\n  \"dim\": 3,\n  \"vectors\": [[[1, 0]\n}\n").unwrap();
    let out = itpq(dir.path(), &["ks-check", p(&syntax)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let semantic = dir.path().join("semantic.json");
    let text =
        json!({"dim": 2, "vectors": [[[1, 0], [0, 0]], [[1, 0], [1, 0]]], "contexts": [[0, 1]]});
    fs::write(&semantic, text.to_string()).unwrap();
    let out = itpq(dir.path(), &["ks-check", p(&semantic)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contexts[0]"));
}

#[test]
fn gleason_born_and_corrupted() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(&itpq(
        dir.path(),
        &[
            "gleason-test",
            "--dim",
            "4",
            "--contexts",
            "100",
            "--seed",
            "9",
        ],
    ));
    assert_eq!(v["passed"], json!(true));
    assert!(v["max_deviation"].as_f64().unwrap() < 1e-9);

    let v = ok_json(&itpq(
        dir.path(),
        &["gleason-test", "--state", &data("state_dim4.json")],
    ));
    assert_eq!(v["passed"], json!(true));

    let v = ok_json(&itpq(
        dir.path(),
        &["gleason-test", "--dim", "2", "--assignment", "uniform"],
    ));
    assert_eq!(v["passed"], json!(true));

    let v = ok_json(&itpq(
        dir.path(),
        &[
            "gleason-test",
            "--dim",
            "3",
            "--contexts",
            "5",
            "--assignment",
            "ones",
        ],
    ));
    assert_eq!(v["passed"], json!(false));
    let rows = csv_rows(&dir.path().join("gleason-contexts.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[1] == "3" && r[3] == "false"));
}

#[test]
fn gleason_rejects_bad_state() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "[[1, 0], [1, 0]]").unwrap();
    assert_eq!(
        itpq(dir.path(), &["gleason-test", "--state", p(&bad)])
            .status
            .code(),
        Some(2)
    );
    let out = itpq(
        dir.path(),
        &[
            "gleason-test",
            "--state",
            &data("state_dim4.json"),
            "--dim",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sector_quarter_law() {
    let dir = TempDir::new().unwrap();
    let args = [
        "sector",
        &data("up.json"),
        &data("odd_plus.json"),
        "--n-list",
        "4:400:4",
    ];
    let v = ok_json(&itpq(dir.path(), &args));
    assert_eq!(v["same_sector"], json!(false));
    for row in csv_rows(&dir.path().join("curve.csv")) {
        let n: f64 = row[0].parse().unwrap();
        let log2: f64 = row[2].parse().unwrap();
        assert!((log2 + n / 4.0).abs() <= 1e-12 * n);
    }
}

#[test]
fn sector_finite_deviation_and_identity() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(&itpq(
        dir.path(),
        &[
            "sector",
            &data("up.json"),
            &data("up_flipped.json"),
            "--n-list",
            "1:50:1",
        ],
    ));
    assert_eq!(v["same_sector"], json!(true));
    let tail: Vec<f64> = csv_rows(&dir.path().join("curve.csv"))[5..]
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(tail.iter().all(|&m| m == tail[0] && m > 0.0));

    let v = ok_json(&itpq(
        dir.path(),
        &[
            "sector",
            &data("plus.json"),
            &data("plus.json"),
            "--format",
            "json",
        ],
    ));
    assert_eq!(v["same_sector"], json!(true));
    let curve = read_json(&dir.path().join("curve.json"));
    assert!(curve
        .as_array()
        .unwrap()
        .iter()
        .all(|pt| pt["magnitude"] == json!(1.0)));
}

#[test]
fn sector_rejects_incomparable_tails() {
    let dir = TempDir::new().unwrap();
    let qutrit = dir.path().join("qutrit.json");
    fs::write(
        &qutrit,
        json!({"local_dim": 3, "tail": {"kind": "constant", "data": [[1, 0], [0, 0], [0, 0]]}})
            .to_string(),
    )
    .unwrap();
    let out = itpq(dir.path(), &["sector", &data("up.json"), p(&qutrit)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn overlap_reports_phase() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(&itpq(
        dir.path(),
        &[
            "overlap",
            &data("up.json"),
            &data("odd_plus.json"),
            "--n-list",
            "2,4",
        ],
    ));
    assert_eq!(v["points"], json!(2));
    let rows = csv_rows(&dir.path().join("overlap.csv"));
    assert_eq!(rows[1][0], "4");
    assert!((rows[1][1].parse::<f64>().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn operator_block_two_sectors() {
    let dir = TempDir::new().unwrap();
    let args = [
        "operator-block",
        &data("identity.json"),
        &data("up.json"),
        &data("plus.json"),
        &data("up_flipped.json"),
        "--n",
        "64",
    ];
    let v = ok_json(&itpq(dir.path(), &args));
    assert_eq!(v["sector_count"], json!(2));
    assert!(v["cross_sector_max"].as_f64().unwrap() < 1e-4);
    assert_eq!(
        fs::read_to_string(dir.path().join("block.txt")).unwrap(),
        "##.\n##.\n..#\n"
    );

    let v = ok_json(&itpq(
        dir.path(),
        &[
            "operator-block",
            &data("flip_pair.json"),
            &data("up.json"),
            "--n",
            "8",
        ],
    ));
    assert_eq!(v["sector_count"], json!(1));
    assert_eq!(v["cross_sector_max"], Value::Null);

    let same = [
        "operator-block",
        &data("flip_pair.json"),
        &data("up.json"),
        &data("up_flipped.json"),
        "--n",
        "8",
    ];
    let v = ok_json(&itpq(dir.path(), &same));
    assert_eq!(v["sector_count"], json!(1));
    assert!(csv_rows(&dir.path().join("block.csv"))
        .iter()
        .all(|r| r[4] == "false"));
}

#[test]
fn operator_block_term_budget() {
    let dir = TempDir::new().unwrap();
    let sx = json!([[[0, 0], [1, 0]], [[1, 0], [0, 0]]]);
    let sum = json!({"op": "sum", "terms": (1..=400).map(|s| json!({"op": "site", "site": s, "matrix": sx})).collect::<Vec<_>>()});
    let expr = dir.path().join("big.json");
    fs::write(
        &expr,
        json!({"op": "product", "factors": [sum, sum]}).to_string(),
    )
    .unwrap();
    let out = itpq(
        dir.path(),
        &["operator-block", p(&expr), &data("up.json"), "--n", "400"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("100000 terms"));
}

#[test]
fn cascade_slope_and_sampling() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(&itpq(
        dir.path(),
        &["cascade", &data("cascade_uniform.json"), "--seed", "11"],
    ));
    assert_eq!(v["final_device_size"], json!(1 << 20));
    let points: Vec<(f64, f64)> = csv_rows(&dir.path().join("coherence.csv"))
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[5].parse().unwrap()))
        .collect();
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    assert!((sxy / sxx + 0.5).abs() < 1e-9);

    let h = read_json(&dir.path().join("histogram.json"));
    assert_eq!(h["seed"], json!(11));
    let samples = h["samples"].as_f64().unwrap();
    for (f, q) in h["frequencies"]
        .as_array()
        .unwrap()
        .iter()
        .zip(h["probabilities"].as_array().unwrap())
    {
        let (f, q) = (f.as_f64().unwrap(), q.as_f64().unwrap());
        assert!((f - q).abs() <= 3.0 * (q * (1.0 - q) / samples).sqrt());
    }
}

#[test]
fn cascade_definite_state() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(&itpq(
        dir.path(),
        &[
            "cascade",
            &data("cascade_definite.json"),
            "--samples",
            "1000",
        ],
    ));
    assert_eq!(v["final_max_log2_coherence"], Value::Null);
    assert!(csv_rows(&dir.path().join("coherence.csv")).is_empty());
    assert_eq!(
        read_json(&dir.path().join("histogram.json"))["counts"],
        json!([1000, 0])
    );
}

#[test]
fn cascade_rejects_unnormalized_amplitudes() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, json!({"amplitudes": [[1, 0], [1, 0]], "pointer_overlap": 0.5, "initial_size": 1, "growth": 2, "max_depth": 3}).to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let out = itpq(&out_dir, &["cascade", p(&config)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn outputs_are_deterministic_and_replayable() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    let args = [
        "cascade",
        &data("cascade_three.json"),
        "--seed",
        "3",
        "--samples",
        "50000",
    ];
    ok_json(&itpq(&a, &args));
    ok_json(&itpq(&b, &args));
    ok_json(&itpq(&c, &["replay", p(&a.join("manifest.json"))]));
    let manifest = read_json(&a.join("manifest.json"));
    assert_eq!(manifest["subcommand"], json!("cascade"));
    assert_eq!(manifest["seed"], json!(3));
    let mut files: Vec<String> = serde_json::from_value(manifest["outputs"].clone()).unwrap();
    files.push("manifest.json".into());
    for f in files {
        let reference = fs::read(a.join(&f)).unwrap();
        assert_eq!(reference, fs::read(b.join(&f)).unwrap(), "{f}");
        assert_eq!(reference, fs::read(c.join(&f)).unwrap(), "{f}");
    }
}

#[test]
fn tolerance_override_from_environment() {
    let dir = TempDir::new().unwrap();
    let tol = dir.path().join("tol.json");
    fs::write(&tol, r#"{"frame_sum": 1e-300}"#).unwrap();
    let run = |file: &Path| {
        Command::new(env!("CARGO_BIN_EXE_itpq"))
            .arg("--out-dir")
            .arg(dir.path().join("out"))
            .args(["gleason-test", "--dim", "5", "--contexts", "50"])
            .env("ITPQ_TOLERANCES", file)
            .output()
            .unwrap()
    };
    let v = ok_json(&run(&tol));
    assert_eq!(v["tolerance"], json!(1e-300));
    assert_eq!(v["passed"], json!(false));
    let manifest = read_json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["tolerances"]["frame_sum"], json!(1e-300));

    fs::write(&tol, r#"{"frame_sums": 1e-3}"#).unwrap();
    assert_eq!(run(&tol).status.code(), Some(2));
}
