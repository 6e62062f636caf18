use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> String {
    root().join("fixtures").join(rel).display().to_string()
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_proofgrove"));
    c.args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("PROOFGROVE_")) {
        c.env_remove(k);
    }
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn prove_sub_zero_with_and_or_search() {
    let o = run(&["prove", &fixture("sub_zero.ml"), "--policy", "enum", "--mode", "andor"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("sub_zero: proven (andor)\n"), "{text}");
    let script: Vec<&str> = text.lines().skip(1).map(str::trim).collect();
    assert!(script == ["rw [h]", "rfl"] || script[0] == "cases b" || script[0] == "cases h", "{script:?}");
}

#[test]
fn library_search_proposals_are_banned_without_opt_in() {
    let o = run(&["prove", &fixture("sub_zero.ml"), "--policy", "enum"]);
    assert!(stderr(&o).contains("apply?: banned"), "{}", stderr(&o));
    let o = run(&["prove", &fixture("sub_zero.ml"), "--policy", "enum", "--allow-library-search"]);
    assert_eq!(code(&o), 0);
    assert!(!stderr(&o).contains("banned"));
}

#[test]
fn check_reports_the_whole_term_false_negative() {
    let o = run(&["check", &fixture("have_sorry.ml"), "--kernel-mode", "whole-per-step"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("false negative"), "{}", stdout(&o));
    let o = run(&["check", &fixture("have_sorry.ml"), "--kernel-mode", "incremental"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("have_sorry incremental: proven (checks "), "{}", stdout(&o));
    let o = run(&["--format", "records", "check", &fixture("have_sorry.ml")]);
    let modes: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(modes.len(), 3);
    assert!(modes.iter().all(|m| m["checks"].is_u64()));
}

#[test]
fn extract_verify_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("golden.jsonl");
    let out_s = out.display().to_string();
    let o = run(&["extract", &fixture("golden"), "-o", &out_s, "--jobs", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 30);
    // parallel extraction gives the same file
    let again = dir.path().join("again.jsonl");
    run(&["extract", &fixture("golden"), "-o", &again.display().to_string(), "--jobs", "1"]);
    assert_eq!(fs::read_to_string(&again).unwrap(), text);

    let o = run(&["verify", &out_s]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).ends_with("31 verified, 0 failed, 0 error records skipped\n"), "{}", stdout(&o));

    let o = run(&["stats", &out_s]);
    assert!(stdout(&o).contains("failure rate     0.00%"), "{}", stdout(&o));
    let o = run(&["--format", "records", "stats", &out_s]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["by_blocks"], 31);

    let tampered = text.replacen("\"tactic_string\":\"rfl\"", "\"tactic_string\":\"assumption\"", 1);
    assert_ne!(tampered, text);
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, tampered).unwrap();
    let o = run(&["verify", &bad.display().to_string()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAILED"));
}

#[test]
fn tree_out_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("found.jsonl").display().to_string();
    let o = run(&["prove", &fixture("micro.ml"), "--theorem", "m_four", "--tree-out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&["verify", &out]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("m_four #0: ok"));
}

#[test]
fn records_mode_has_one_line_per_theorem_and_fails_on_unproven() {
    let o = run(&["--format", "records", "prove", &fixture("micro.ml"), "--max-depth", "4"]);
    assert_eq!(code(&o), 1);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 15);
    assert!(lines.iter().any(|l| l["proven"] == true));
    assert!(lines.iter().any(|l| l["theorem"] == "m_false" && l["proven"] == false));
}

#[test]
fn seeded_runs_are_byte_identical() {
    for mode in ["rollout-white", "andor"] {
        let args = ["--format", "records", "prove", &fixture("micro.ml"), "--policy", "random", "--mode", mode, "--seed", "5"];
        let a = run(&args);
        let b = run(&args);
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{mode}");
    }
}

#[test]
fn settings_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "rollouts = 4\nmode = \"rollout-white\"\n").unwrap();
    let cfg = cfg.display().to_string();
    let env = [("PROOFGROVE_ROLLOUTS", "3"), ("PROOFGROVE_MAX_STEPS", "6")];
    let base = ["prove", &fixture("sub_zero.ml")];
    let echoed = |o: &Output| -> serde_json::Value {
        let line = stderr(o).lines().find(|l| l.starts_with("config: ")).unwrap().to_string();
        serde_json::from_str(&line["config: ".len()..]).unwrap()
    };
    let o = run_env(&base, &env);
    assert_eq!(echoed(&o)["search"]["rollouts"], 3);
    let o = run_env(&[&["--config", cfg.as_str()][..], &base].concat(), &env);
    let c = echoed(&o);
    assert_eq!((c["search"]["rollouts"].as_u64(), c["search"]["max_steps"].as_u64()), (Some(4), Some(6)));
    assert_eq!(c["search"]["mode"], "rollout-white");
    let o = run_env(&[&["--config", cfg.as_str()][..], &base, &["--rollouts", "5"]].concat(), &env);
    assert_eq!(echoed(&o)["search"]["rollouts"], 5);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["prove", &fixture("sub_zero.ml"), "--policy", "oracle"])), 2);
    assert_eq!(code(&run(&["prove", &fixture("sub_zero.ml"), "--mode", "dfs"])), 2);
    assert_eq!(code(&run(&["prove", &fixture("sub_zero.ml"), "--theorem", "nope"])), 2);
    assert_eq!(code(&run(&["prove", "/no/such/file.ml"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let o = run_env(&["stats", &fixture("sub_zero.ml")], &[("PROOFGROVE_SEED", "many")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn prove_over_the_wire_matches_in_process() {
    let stub = env!("CARGO_BIN_EXE_proofgrove-stub-policy");
    let rules = fixture("sub_zero.rules");
    let wire = format!("wire:{stub} --rules '{rules}'");
    let scripted = format!("scripted:{rules}");
    let common = ["--format", "records", "prove", &fixture("sub_zero.ml"), "--mode", "rollout-white", "--seed", "2"];
    let a = run(&[&common[..], &["--policy", &wire]].concat());
    let b = run(&[&common[..], &["--policy", &scripted]].concat());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let strip = |o: &Output| {
        let mut v: serde_json::Value = serde_json::from_str(stdout(o).trim()).unwrap();
        v.as_object_mut().unwrap().remove("policy");
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a)["script"], serde_json::json!(["rw [h]", "rfl"]));
}
