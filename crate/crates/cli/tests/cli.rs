use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/shop").join(name)
}

fn wbp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wbp")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn solver_args<'a>(manifest: &'a str, model: &'a str) -> Vec<&'a str> {
    vec!["--manifest", manifest, "--model", model]
}

#[test]
fn help_lists_defaults() {
    for (sub, flags) in [
        ("storyline", &["--k", "--category", "--n-max", "--exhaustive-threshold", "--beam-width", "--incentive", "--seed", "--threads", "--out"][..]),
        ("train", &["--ratings", "--lr", "--epochs", "--init", "--loss-out", "--grad-clip"][..]),
        ("gradcheck", &["--draws", "--model"][..]),
    ] {
        let out = wbp(&[sub, "--help"]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        for f in flags {
            let l = text.lines().skip_while(|l| !l.trim_start().starts_with(f)).collect::<Vec<_>>().join(" ");
            assert!(l.contains("[default:") || l.contains("[required]"), "{sub} {f}: {text}");
        }
    }
}

#[test]
fn storyline_respects_budget_and_matches_score() {
    let (m, w) = (fixture("manifest.json"), fixture("model.lwc"));
    let mut args = vec!["storyline"];
    args.extend(solver_args(path(&m), path(&w)));
    args.extend(["--n-max", "2"]);
    let doc = ok_json(&wbp(&args));
    assert_eq!(doc["version"], "wbp-storyline-v1");
    assert!(doc["items"].as_array().unwrap().len() <= 2);

    let doc = ok_json(&wbp(&["storyline", "--config", path(&fixture("config.toml"))]));
    let mut total = 0.0;
    for block in doc["blocks"].as_array().unwrap() {
        let ids: Vec<&str> = block["ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        let order = ids.join(",");
        let mut args = vec!["score"];
        args.extend(solver_args(path(&m), path(&w)));
        args.extend(["--order", &order]);
        let report = ok_json(&wbp(&args));
        assert_eq!(report["score"], block["score"]);
        total += report["score"].as_f64().unwrap();
    }
    assert!((total - doc["total_objective"].as_f64().unwrap()).abs() <= 1e-12);
}

#[test]
fn flags_override_config() {
    let doc = ok_json(&wbp(&["storyline", "--config", path(&fixture("config.toml")), "--n-max", "3", "--k", "2"]));
    assert!(doc["items"].as_array().unwrap().len() <= 3);
    assert_eq!(doc["solver"]["k"], 2);
    assert_eq!(doc["solver"]["n_max"], 3);
}

#[test]
fn single_material_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("one.json");
    let frame = fixture("images/front.png");
    std::fs::write(
        &manifest,
        format!(
            r#"{{"version": "wbp-manifest-v1", "materials": [
                {{"id": "solo", "kind": "image", "frames": ["{}"], "aesthetics": 0.7, "arousal": 0.4}}]}}"#,
            path(&frame)
        ),
    )
    .unwrap();
    let doc = ok_json(&wbp(&["storyline", "--manifest", path(&manifest), "--model", path(&fixture("model.lwc"))]));
    assert_eq!(doc["items"].as_array().unwrap().len(), 1);
    assert_eq!(doc["items"][0]["id"], "solo");
}

#[test]
fn score_single_step_and_reversal() {
    let (m, w) = (fixture("manifest.json"), fixture("model.lwc"));
    let score = |order: &str| {
        let mut args = vec!["score"];
        args.extend(solver_args(path(&m), path(&w)));
        args.extend(["--order", order]);
        ok_json(&wbp(&args))
    };
    let one = score("studio");
    let s = &one["steps"][0];
    assert_eq!(s["d"], 1.0);
    let third = 1.0 / 3.0;
    let x = third * 1.0 + third * s["a"].as_f64().unwrap() + third * s["e"].as_f64().unwrap();
    assert!((one["x"].as_f64().unwrap() - x).abs() <= 1e-15);

    let fwd = score("front,walk,check");
    let rev = score("check,walk,front");
    let column = |r: &Value, c: &str| -> Vec<f64> { r["steps"].as_array().unwrap().iter().map(|s| s[c].as_f64().unwrap()).collect() };
    for c in ["a", "e"] {
        let mut back = column(&rev, c);
        back.reverse();
        assert_eq!(column(&fwd, c), back);
    }
    assert_ne!(column(&fwd, "d"), {
        let mut back = column(&rev, "d");
        back.reverse();
        back
    });
}

#[test]
fn unknown_id_is_a_usage_error() {
    let mut args = vec!["score"];
    let (m, w) = (fixture("manifest.json"), fixture("model.lwc"));
    args.extend(solver_args(path(&m), path(&w)));
    args.extend(["--order", "front,nope"]);
    let out = wbp(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn bad_manifest_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("bad.json");
    std::fs::write(
        &manifest,
        r#"{"version": "wbp-manifest-v1", "materials": [{"id": "x", "kind": "poster", "frames": ["a.png"], "aesthetics": 0.5, "arousal": 0.5}]}"#,
    )
    .unwrap();
    let out = wbp(&["storyline", "--manifest", path(&manifest), "--model", path(&fixture("model.lwc"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("materials[0].kind"));
}

#[test]
fn gradcheck_pass_and_negative_control() {
    let report = ok_json(&wbp(&["gradcheck"]));
    assert_eq!(report["passed"], true);
    assert_eq!(report["draws"], 200);

    let out = wbp(&["gradcheck", "--draws", "3", "--corrupt-param", "d_p"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`d_p`"));

    let a = wbp(&["gradcheck", "--draws", "1", "--seed", "9"]);
    let b = wbp(&["gradcheck", "--draws", "1", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn oracle_agrees_on_fixture_and_rejects_large_sets() {
    let report = ok_json(&wbp(&["oracle", "--config", path(&fixture("config.toml"))]));
    assert_eq!(report["verdict"], "WBP == oracle");
    assert_eq!(report["objectives"]["wbp"], report["objectives"]["oracle"]);

    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("nine.json");
    let materials: Vec<String> = (0..9)
        .map(|i| {
            format!(
                r#"{{"id": "m{i}", "kind": "image", "frames": ["f{i}"], "aesthetics": 0.5, "arousal": 0.5, "embedding": [{i}.0, 1.0]}}"#
            )
        })
        .collect();
    let rows: Vec<String> = (0..9)
        .map(|i| format!("[{}]", (0..9).map(|j| if i == j { "0.0" } else { "0.5" }).collect::<Vec<_>>().join(",")))
        .collect();
    std::fs::write(
        &manifest,
        format!(r#"{{"version": "wbp-manifest-v1", "materials": [{}], "dissimilarity": [{}]}}"#, materials.join(","), rows.join(",")),
    )
    .unwrap();
    let out = wbp(&["oracle", "--manifest", path(&manifest), "--model", path(&fixture("model.lwc"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_writes_model_and_loss() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("ratings.json");
    let synth = wbp(&["synth", "--n", "12", "--out", path(&ratings)]);
    assert!(synth.status.success());

    let run = |name: &str, lr: &str| {
        let model = dir.path().join(format!("{name}.lwc"));
        let loss = dir.path().join(format!("{name}.csv"));
        let out = wbp(&[
            "train", "--ratings", path(&ratings), "--epochs", "50", "--lr", lr,
            "--out", path(&model), "--loss-out", path(&loss),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(&model).unwrap(), std::fs::read_to_string(&loss).unwrap(), String::from_utf8(out.stderr).unwrap())
    };
    let (m1, loss, _) = run("a", "0.01");
    let (m2, _, _) = run("b", "0.01");
    assert_eq!(m1, m2);
    assert!(m1.starts_with(b"lwc-v1\n"));
    let lines: Vec<&str> = loss.lines().collect();
    assert_eq!(lines[0], "epoch,loss");
    assert_eq!(lines.len(), 51);

    let (_, _, summary) = run("still", "0");
    let field = |key: &str| summary.split_whitespace().find_map(|t| t.strip_prefix(key)).unwrap().to_string();
    assert_eq!(field("initial_mse="), field("final_mse="));
}

#[test]
fn train_on_manifest_orders() {
    let out = wbp(&[
        "train", "--manifest", path(&fixture("manifest.json")), "--ratings", path(&fixture("ratings.json")), "--epochs", "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model = String::from_utf8(out.stdout).unwrap();
    assert_eq!(model.lines().count(), 13);

    let out = wbp(&["train", "--ratings", path(&fixture("ratings.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn uplift_from_table() {
    let report = ok_json(&wbp(&["uplift", "--revenue", path(&fixture("revenue.csv"))]));
    let manual = 0.7216 * (3.10 - 2.90) / 2.90 + 0.1459 * (2.80 - 2.50) / 2.50 + 0.0649 * (2.20 - 2.40) / 2.40
        + 0.0622 * (3.60 - 3.00) / 3.00;
    assert!((report["uplift"].as_f64().unwrap() - manual).abs() <= 1e-12);
}
