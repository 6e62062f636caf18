use std::time::Duration;

use proofgrove::prelude::prelude;
use proofgrove::search::{
    parse_response, rollout, Policy, PolicyError, PolicyRequest, ScriptedPolicy, SearchConfig, SearchMode, WirePolicy,
    WireRequest,
};
use proofgrove::syntax::parse_file;
use proofgrove::tactics::new_session;

const STUB: &str = env!("CARGO_BIN_EXE_proofgrove-stub-policy");

fn request() -> PolicyRequest {
    PolicyRequest::black("⊢ 1 = 1", &[], 4)
}

#[test]
fn fixed_proposals_arrive_verbatim() {
    let mut p = WirePolicy::spawn(&format!("{STUB} --fixed 'rw [← h]' --fixed 'exact ⟨rfl, rfl⟩'"), Duration::from_secs(10))
        .unwrap();
    for _ in 0..3 {
        let got: Vec<String> = p.propose(&request()).unwrap().into_iter().map(|x| x.text).collect();
        assert_eq!(got, vec!["rw [← h]", "exact ⟨rfl, rfl⟩"]);
    }
    assert_eq!(p.timeouts, 0);
}

#[test]
fn malformed_response_is_a_protocol_error() {
    let mut p = WirePolicy::spawn(&format!("{STUB} --malformed"), Duration::from_secs(10)).unwrap();
    assert!(matches!(p.propose(&request()), Err(PolicyError::Protocol(_))));
    assert!(matches!(parse_response("{\"request_id\":1,\"tactics\":[],\"extra\":0}", 1), Err(PolicyError::Protocol(_))));
    assert!(matches!(parse_response("{\"request_id\":2,\"tactics\":[]}", 1), Err(PolicyError::Protocol(_))));
    assert_eq!(parse_response("{\"request_id\":1,\"tactics\":[]}", 1), Ok(vec![]));
}

#[test]
fn dead_process_is_reported() {
    let mut p = WirePolicy::spawn("true", Duration::from_secs(10)).unwrap();
    std::thread::sleep(Duration::from_millis(100));
    assert!(matches!(p.propose(&request()), Err(PolicyError::Process(_))));
}

#[test]
fn slow_answers_time_out_and_late_replies_are_skipped() {
    let mut p = WirePolicy::spawn(&format!("{STUB} --fixed rfl --stall-first-ms 400"), Duration::from_millis(300)).unwrap();
    assert_eq!(p.propose(&request()).unwrap(), vec![]);
    assert_eq!(p.timeouts, 1);
    // the late reply to the first request arrives before this one's
    let got: Vec<String> = p.propose(&request()).unwrap().into_iter().map(|x| x.text).collect();
    assert_eq!(got, vec!["rfl"]);
    assert_eq!(p.timeouts, 1);
}

#[test]
fn request_lines_round_trip() {
    let req = PolicyRequest::black("a b : Nat\n⊢ a = b", &["intro h".to_string()], 3);
    let line = serde_json::to_string(&WireRequest::new(7, &req)).unwrap();
    assert_eq!(
        line,
        r#"{"request_id":7,"mode":"black","theorem":"a b : Nat\n⊢ a = b","goals":[],"prefix":["intro h"],"k":3}"#
    );
    let back: WireRequest = serde_json::from_str(&line).unwrap();
    assert_eq!(back.to_request(), req);
}

#[test]
fn scripted_rollout_over_the_wire_matches_in_process() {
    let rules = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/sub_zero.rules");
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/sub_zero.ml")).unwrap();
    let file = parse_file(&src, "sub_zero.ml").unwrap();
    let thm = file.theorems().next().unwrap();
    let start = new_session(prelude(), thm).unwrap();
    let cfg = SearchConfig { mode: SearchMode::RolloutWhite, ..SearchConfig::default() };
    let mut local = ScriptedPolicy::parse(&std::fs::read_to_string(rules).unwrap()).unwrap();
    let mut remote = WirePolicy::spawn(&format!("{STUB} --rules '{rules}'"), Duration::from_secs(10)).unwrap();
    let a = rollout(&start, &mut local, &cfg, 9);
    let b = rollout(&start, &mut remote, &cfg, 9);
    assert!(a.success);
    assert_eq!(a, b);
}
