use std::path::Path;
use std::process::{Command, Output};

fn sbcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbcm-shape"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tiny_args<'a>(scenario: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "--scenario",
        scenario,
        "--out",
        out,
        "--n-users",
        "6",
        "--horizon",
        "5",
        "--episodes",
        "2",
        "--eval-episodes",
        "3",
        "--no-wall-clock",
    ]
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn train_then_eval_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let run_s = run.to_str().unwrap();
    let mut args = vec!["train"];
    args.extend(tiny_args("bot", run_s));
    args.extend(["--n-bots", "3", "--epsilon", "-1"]);
    let out = sbcm(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "config.toml",
        "train_log.csv",
        "eval_report.json",
        "traces/eval_report_0000.csv",
        "checkpoints/final/actor.bin",
        "checkpoints/final/meta.json",
    ] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let config = std::fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(config.contains("epsilon = -1.0"));
    assert!(config.contains("n_bots = 3"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mean_of_final_means"));

    let ckpt = run.join("checkpoints/final");
    let eval_out = tmp.path().join("eval");
    let out = sbcm(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
        "--eval-episodes",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(eval_out.join("eval_report.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(json["eval_episodes"], 2);
    assert_eq!(json["config"]["bot"]["n_bots"], 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let mut args = vec!["train"];
        args.extend(tiny_args("advertising", dir.to_str().unwrap()));
        args.extend(["--budget", "0.5", "--traces", "3"]);
        let out = sbcm(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(files(&dir));
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn baseline_writes_report_and_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("base");
    let mut args = vec!["baseline"];
    args.extend(tiny_args("bot", dir.to_str().unwrap()));
    let out = sbcm(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("baseline_report.json").exists());
    let trace = std::fs::read_to_string(dir.join("traces/baseline_report_0000.csv")).unwrap();
    assert!(trace.starts_with("t,mean,std,reward,user_1,"));
}

#[test]
fn config_file_is_loaded_and_overridden() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(
        &cfg,
        r#"
scenario = "advertising"
seed = 4
episodes = 1
eval_episodes = 2

[advertising]
n_users = 5
horizon = 4
initial_budget = 1.0

[ddpg]
hidden = [4]
"#,
    )
    .unwrap();
    let dir = tmp.path().join("run");
    let out = sbcm(&[
        "baseline",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--budget",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(dir.join("baseline_report.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(json["config"]["seed"], 4);
    assert_eq!(json["config"]["advertising"]["initial_budget"], 2.0);
}

#[test]
fn bad_invocations_fail_with_a_message() {
    let out = sbcm(&["train"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config or --scenario"));

    let out = sbcm(&["baseline", "--scenario", "advertising", "--n-bots", "3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bot scenario only"));

    let out = sbcm(&["baseline", "--scenario", "bot", "--horizon", "0"]);
    assert!(!out.status.success());

    let out = sbcm(&["baseline", "--scenario", "sideways"]);
    assert!(!out.status.success());

    let out = sbcm(&["eval", "--checkpoint", "/nonexistent/ckpt"]);
    assert!(!out.status.success());
}
