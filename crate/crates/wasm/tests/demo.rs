use serde_json::Value;

use proofgrove_wasm::{explore, extract, prove};

const SUB_ZERO: &str = "theorem sub_zero (a b : Nat) (h : b = 0) : a - b = a := by\n  rw [h]\n  rfl\n";

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn explore_reports_each_step() {
    let v = parse(explore(SUB_ZERO, "sub_zero", "rw [h]\nrfl"));
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 3);
    assert_eq!(steps[0]["goals"], "a b : Nat\nh : b = 0\n⊢ a - b = a");
    assert_eq!(steps[1]["goals"], "a b : Nat\nh : b = 0\n⊢ a - 0 = a");
    assert_eq!(v["solved"], true);
    let v = parse(explore(SUB_ZERO, "", "rfl"));
    assert!(v["steps"][1]["error"].is_string());
    assert!(parse(explore(SUB_ZERO, "other", "rfl"))["error"].is_string());
}

#[test]
fn prove_runs_without_worker_threads() {
    let v = parse(prove(SUB_ZERO, "sub_zero", 50));
    assert_eq!(v["proven"], true);
    assert!(!v["script"].as_array().unwrap().is_empty());
}

#[test]
fn extract_gives_one_record() {
    let v = parse(extract(SUB_ZERO));
    assert_eq!(v["theorems"][0]["by_blocks"][0]["tree"]["root"]["tactic"]["tactic_string"], "rw [h]");
    assert!(parse(extract("theorem"))["theorems"][0]["error"].is_string());
}
