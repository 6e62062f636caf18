use proofgrove::factorize::coupling_components;
use proofgrove::prelude::prelude;
use proofgrove::syntax::{parse_file, parse_tactic_script};
use proofgrove::tactics::{
    new_session, new_session_from_goal, run_script, KernelMode, ProofState, TacticConfig, TacticError, Verdict,
};

const SUB_ZERO: &str = "theorem sub_zero (a b : Nat) (h : b = 0) : a - b = a := by\n  rw [h]\n  rfl\n";
const MUL_EQ_ZERO: &str =
    "theorem mul_eq_zero_iff (n m : Nat) : n * m = 0 ↔ n = 0 ∨ m = 0 := by\n  sorry\n";

fn start(src: &str) -> ProofState {
    let file = parse_file(src, "test.ml").unwrap();
    let thm = file.theorems().next().unwrap();
    new_session(prelude(), thm).unwrap()
}

fn goal(text: &str) -> ProofState {
    new_session_from_goal(prelude(), text).unwrap()
}

fn run(state: &ProofState, script: &str) -> proofgrove::tactics::ScriptRun {
    run_script(state, &parse_tactic_script(script).unwrap(), &TacticConfig::default())
}

#[test]
fn root_goal_of_sub_zero() {
    let s = start(SUB_ZERO);
    assert_eq!(s.render(), "a b : Nat\nh : b = 0\n⊢ a - b = a");
}

#[test]
fn sub_zero_by_rw_then_rfl() {
    let s = start(SUB_ZERO);
    let r = run(&s, "rw [h]\nrfl");
    assert!(r.failure.is_none(), "{:?}", r.failure);
    assert_eq!(r.states[1].render(), "a b : Nat\nh : b = 0\n⊢ a - 0 = a");
    assert_eq!(r.verdict, Verdict::Proven);
}

#[test]
fn sub_zero_by_cases() {
    let s = start(SUB_ZERO);
    let r = run(&s, "cases b\nrfl\nexact absurd h (Nat.succ_ne_zero _)");
    assert!(r.failure.is_none(), "{:?}", r.failure);
    assert_eq!(
        r.states[1].render(),
        "case zero\na : Nat\nh : 0 = 0\n⊢ a - 0 = a\n\ncase succ\na n† : Nat\nh : Nat.succ n† = 0\n⊢ a - Nat.succ n† = a"
    );
    assert_eq!(r.verdict, Verdict::Proven);
}

#[test]
fn mul_eq_zero_four_cases() {
    let s = start(MUL_EQ_ZERO);
    let r = run(&s, "cases n <;> cases m");
    assert!(r.failure.is_none(), "{:?}", r.failure);
    let st = r.last();
    assert_eq!(st.goals.len(), 4);
    let targets: Vec<String> = st.views().into_iter().map(|v| v.target).collect();
    assert!(targets.contains(&"Nat.succ n† * 0 = 0 ↔ Nat.succ n† = 0 ∨ 0 = 0".to_string()), "{targets:?}");
    assert_eq!(coupling_components(&st.mctx, &st.goals).len(), 4);
}

#[test]
fn le_trans_couples_three_goals() {
    let s = goal("⊢ 2 ≤ 5");
    let o = s.apply_text("apply Nat.le_trans", &TacticConfig::default()).unwrap();
    let views: Vec<String> = o.state.views().into_iter().map(|v| v.target).collect();
    assert_eq!(views.len(), 3);
    assert_eq!(views[0], "Nat");
    assert!(views[1].starts_with("2 ≤ ?"), "{views:?}");
    assert!(views[2].ends_with("≤ 5"), "{views:?}");
    assert_eq!(o.consumed, s.goals);
    let comps = coupling_components(&o.state.mctx, &o.state.goals);
    assert_eq!(comps.len(), 1);
    let o2 = o.state.apply_text("exact 3", &TacticConfig::default()).unwrap();
    assert_eq!(coupling_components(&o2.state.mctx, &o2.state.goals).len(), 2);
    assert_eq!(o2.state.render(), "⊢ 2 ≤ 3\n\n⊢ 3 ≤ 5");
}

#[test]
fn library_search_is_banned_by_default() {
    let s = goal("⊢ 2 ≤ 5");
    let e = s.apply_text("apply?", &TacticConfig::default()).unwrap_err();
    assert_eq!(e, TacticError::Banned("apply?".into()));
    let ok = s.apply_text("apply?", &TacticConfig::default().allow_library_search());
    assert!(ok.is_ok(), "{ok:?}");
}

#[test]
fn rfl_closes_numeral_equation() {
    let s = goal("⊢ 5 = 5");
    let o = s.apply_text("rfl", &TacticConfig::default()).unwrap();
    assert!(o.state.is_solved());
    assert_eq!(o.new_assignments.len(), 1);
}

#[test]
fn empty_script_leaves_goal() {
    let s = goal("⊢ True");
    let r = run(&s, "");
    assert_eq!(r.verdict, Verdict::Unproven);
    assert_eq!(r.last().goals.len(), 1);
}

#[test]
fn failing_second_step_is_reported() {
    let s = start(SUB_ZERO);
    let r = run(&s, "rw [h]\nexact h\nrfl");
    let f = r.failure.as_ref().unwrap();
    assert_eq!(f.index, 2);
    assert_eq!(r.states.len(), 2);
    assert_eq!(r.states[1].render(), "a b : Nat\nh : b = 0\n⊢ a - 0 = a");
}

#[test]
fn sorry_rejected_when_strict() {
    let s = goal("⊢ True");
    let e = s.apply_text("sorry", &TacticConfig::strict()).unwrap_err();
    assert!(matches!(e, TacticError::Banned(_)));
    let e = s.apply_text("exact sorry", &TacticConfig::strict()).unwrap_err();
    assert!(matches!(e, TacticError::Banned(_)));
}

#[test]
fn branching_from_an_old_state_is_independent() {
    let s = start(SUB_ZERO);
    let cfg = TacticConfig::default();
    let a = s.apply_text("rw [h]", &cfg).unwrap();
    let before = a.state.render();
    let b = s.apply_text("cases b", &cfg).unwrap();
    let a2 = a.state.apply_text("rfl", &cfg).unwrap();
    assert!(a2.state.is_solved());
    assert_eq!(a.state.render(), before);
    assert_eq!(b.state.goals.len(), 2);
    assert_eq!(s.render(), "a b : Nat\nh : b = 0\n⊢ a - b = a");
}

#[test]
fn combinators_and_case_renaming() {
    let s = start(MUL_EQ_ZERO);
    let script = "cases n with\n| zero => sorry\n| succ k => sorry";
    let r = run(&s, script);
    assert!(r.failure.is_none(), "{:?}", r.failure);
    let s2 = goal("n : Nat\n⊢ n = n");
    let r = run(&s2, "induction n\ncase succ k ih => rfl\nrfl");
    assert!(r.failure.is_none(), "{:?}", r.failure);
    assert_eq!(r.verdict, Verdict::Proven);
}

#[test]
fn intro_constructor_and_projections() {
    let s = goal("⊢ 0 = 0 → 1 = 1 ∧ 2 = 2");
    let r = run(&s, "intro h\nconstructor\nall_goals rfl");
    assert_eq!(r.verdict, Verdict::Proven, "{:?}", r.failure);
    let s = goal("p : 1 = 1 ∧ 0 = 0\n⊢ 0 = 0");
    let r = run(&s, "exact p.2");
    assert_eq!(r.verdict, Verdict::Proven, "{:?}", r.failure);
    let r = run(&s, "cases p\nassumption");
    assert_eq!(r.verdict, Verdict::Proven, "{:?}", r.failure);
}

#[test]
fn rwa_and_rw_at() {
    let s = goal("a b : Nat\nh : a = b\nk : a = 0\n⊢ b = 0");
    let r = run(&s, "rwa [h] at k");
    assert_eq!(r.verdict, Verdict::Proven, "{:?}", r.failure);
    let r = run(&s, "rw [← h]\nexact k");
    assert_eq!(r.verdict, Verdict::Proven, "{:?}", r.failure);
    let r = run(&s, "rw [Nat.add_zero]");
    assert!(matches!(r.failure.unwrap().error, TacticError::NoOccurrence(_)));
}

#[test]
fn have_sorry_kernel_modes() {
    let src = "theorem have_sorry (a b : Nat) (h : b = 0) : a - b = a := by\n  have k : b = 0 := by sorry\n  exact h\n  rw [k]\n  rfl\n";
    let file = parse_file(src, "t.ml").unwrap();
    let thm = file.theorems().next().unwrap();
    let script = match &thm.proof {
        proofgrove::syntax::ProofBody::Tactic(b) => b.tactics.clone(),
        _ => unreachable!(),
    };
    let s = new_session(prelude(), thm).unwrap();
    let mut verdicts = Vec::new();
    for mode in [KernelMode::Incremental, KernelMode::WholePerStep, KernelMode::FinalOnly] {
        let cfg = TacticConfig { kernel_mode: mode, ..TacticConfig::default() };
        let r = run_script(&s, &script, &cfg);
        verdicts.push(r.verdict);
    }
    assert_eq!(verdicts, vec![Verdict::Proven, Verdict::Failed, Verdict::Proven]);
}

#[test]
fn unassigned_hole_caught_by_final_check() {
    let s = goal("⊢ 2 ≤ 5");
    let cfg = TacticConfig { weak_holes: true, ..TacticConfig::default() };
    let r = run_script(&s, &parse_tactic_script("exact Nat.le_trans (Nat.le_succ 2) _").unwrap(), &cfg);
    assert!(r.failure.is_none(), "{:?}", r.failure);
    assert_eq!(r.verdict, Verdict::Failed);
    assert!(r.final_error.is_some());
}
