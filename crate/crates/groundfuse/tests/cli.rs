use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn groundfuse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groundfuse")).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(groundfuse(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(groundfuse(dir.path(), &["--version"]).status.code(), Some(0));
    assert_eq!(groundfuse(dir.path(), &["simulate", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(groundfuse(dir.path(), &[]).status.code(), Some(1));
    assert_eq!(groundfuse(dir.path(), &["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(groundfuse(dir.path(), &["eval-nll", "--out", "x"]).status.code(), Some(1));
}

#[test]
fn missing_config_exits_two_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        &["simulate", "--config", "nowhere/scenario.json", "--out", "o.json"][..],
        &["train", "--config", "nowhere/scenario.json", "--out", "o.json"][..],
        &["batch", "--config", "nowhere/scenario.json", "--out", "o"][..],
    ] {
        let o = groundfuse(dir.path(), cmd);
        assert_eq!(o.status.code(), Some(2), "{cmd:?}");
        assert!(stderr(&o).contains("nowhere/scenario.json"), "{}", stderr(&o));
    }
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ \"map_id\": ").unwrap();
    let o = groundfuse(dir.path(), &["simulate", "--config", "bad.json", "--out", "o.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.json"));
}

#[test]
fn simulate_writes_a_result_and_mode_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = r#"{"map_id": "demo", "seed": 3, "start": [2, 2], "target": [45, 31], "mode": "human-robot", "max_steps": 500}"#;
    std::fs::write(dir.path().join("s.json"), scenario).unwrap();
    let o = groundfuse(dir.path(), &["simulate", "--config", "s.json", "--mode", "robot-only", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["mode"], "robot-only");
    let steps = v["result"]["steps"].as_u64().unwrap();
    assert!(steps >= 1 && steps <= 500);
}

#[test]
fn eval_compares_models() {
    let dir = tempfile::tempdir().unwrap();
    let o = groundfuse(dir.path(), &["--seed", "2", "eval-nll", "--model", "chance", "--model", "expert", "--n", "3000", "--out", "e"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(dir.path().join("e/comparison.tsv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(&row[..2], ["chance", "expert"]);
    // chance is far worse than the generating model
    assert!(row[3].parse::<f64>().unwrap() > 0.3);
    assert!(row[5].parse::<f64>().unwrap() < 1e-6);
}

#[test]
fn generated_maps_match_the_bundled_ones() {
    let dir = tempfile::tempdir().unwrap();
    let o = groundfuse(dir.path(), &["--seed", "2024", "gen-data", "maps", "--demo", "--out", "m"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("maps");
    for f in ["demo.json", "city-a.json", "city-b.json", "city-c.json"] {
        assert_eq!(std::fs::read(dir.path().join("m").join(f)).unwrap(), std::fs::read(bundled.join(f)).unwrap(), "{f}");
    }
}
