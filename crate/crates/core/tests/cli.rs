use std::fs;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_market-trust")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const CONFIG: &str = r#"
horizon = 6
seed = 2

[game]
kind = "cournot"
valuations = [15.0, 15.0]

[[agents]]
kind = "synthetic"

[[agents]]
kind = "myopic"
noise = 0.2

[[perturbations]]
round = 3
agent = 1
action = 5.625
"#;

#[test]
fn simulate_extract_fit_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("match.toml");
    fs::write(&config, CONFIG).unwrap();
    let stem = dir.path().join("runs/a");
    let out = cli(&["simulate", "--config", config.to_str().unwrap(), "--out", stem.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let jsonl = dir.path().join("runs/a.jsonl");
    let csv = fs::read_to_string(dir.path().join("runs/a.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 12);

    let table = dir.path().join("ext.csv");
    let out = cli(&["extract", "--log", jsonl.to_str().unwrap(), "--regime", "recorded", "--out", table.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(table).unwrap();
    assert!(table.contains("round,agent,theta,gamma,regime,residual"));

    let space = dir.path().join("space.toml");
    fs::write(&space, "lambda = [1.0, 2.0]\nrho = [0.9]\nalpha = [0.5]\nepsilon = [0.05]\nomega_max = [{ nash_fraction = 0.25 }]\n").unwrap();
    let pattern = format!("{}/runs/*.jsonl", dir.path().display());
    let out = cli(&["fit", "--logs", &pattern, "--space", space.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(fit["replay_error"], 0.0);
    assert_eq!(fit["constants"]["lambda"], 2.0);
}

#[test]
fn scenario_writes_self_describing_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["scenario", "trust-buildup", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[PASS]") && !stdout.contains("[FAIL]"));
    let jsonl = fs::read_to_string(dir.path().join("trust-buildup.jsonl")).unwrap();
    let header: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(header["metadata"]["name"], "trust-buildup");
    for name in ["trust-buildup.csv", "trust-buildup-extraction.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.lines().any(|l| l.starts_with("# ") && l.contains("\"checkpoints\"")), "{name}");
    }
}

#[test]
fn pareto_subcommand_emits_front() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["pareto", "--game", "kelly", "--values", "2,2", "--resolution", "46", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let front = fs::read_to_string(dir.path().join("pareto-front.csv")).unwrap();
    assert!(front.starts_with("# scenario: "));
    let refs = fs::read_to_string(dir.path().join("pareto-references.csv")).unwrap();
    assert!(refs.contains("\nnash,0.5,0.5,0.5,0.5\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&cli(&[])), 2);
    assert_eq!(code(&cli(&["scenario", "no-such-scenario"])), 2);
    assert_eq!(code(&cli(&["pareto", "--game", "kelly", "--lo", "1", "--hi", "0.5"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "horizon = 0\n").unwrap();
    assert_eq!(code(&cli(&["simulate", "--config", bad.to_str().unwrap()])), 2);
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(code(&cli(&["extract", "--log", missing.to_str().unwrap()])), 3);
}
