use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use proofgrove::factorize::StateKey;
use proofgrove::prelude::{file_env, prelude};
use proofgrove::search::*;
use proofgrove::syntax::parse_file;
use proofgrove::tactics::{new_session, new_session_from_goal, ProofState, TacticConfig};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn theorems(rel: &str) -> Vec<(String, ProofState)> {
    let src = fs::read_to_string(fixtures().join(rel)).unwrap();
    let file = parse_file(&src, rel).unwrap();
    let (env, _) = file_env(&file);
    file.theorems().map(|t| (t.name.clone().unwrap(), new_session(env.clone(), t).unwrap())).collect()
}

fn start(rel: &str, name: &str) -> ProofState {
    theorems(rel).into_iter().find(|(n, _)| n == name).unwrap().1
}

fn strs(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn pool_spawns_reuses_and_caps() {
    let pool = EnvPool::new(4, Duration::from_secs(5), |id| id);
    let a = pool.acquire().unwrap();
    let id = a.session_id();
    assert_eq!(pool.stats().spawned, 1);
    drop(a);
    let b = pool.acquire().unwrap();
    assert_eq!(b.session_id(), id);
    assert_eq!(pool.stats().reused, 1);
    drop(b);

    let live = Arc::new(AtomicUsize::new(0));
    std::thread::scope(|s| {
        for _ in 0..8 {
            let pool = &pool;
            let live = &live;
            s.spawn(move || {
                for _ in 0..50 {
                    let l = pool.acquire().unwrap();
                    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                    assert!(now <= 4);
                    std::thread::yield_now();
                    live.fetch_sub(1, Ordering::SeqCst);
                    drop(l);
                }
            });
        }
    });
    let st = pool.stats();
    assert!(st.peak_live <= 4 && st.spawned <= 4, "{st:?}");
    assert_eq!(st.in_use, 0);
}

#[test]
fn pool_times_out_when_exhausted() {
    let pool = EnvPool::new(1, Duration::from_millis(20), |id| id);
    let _held = pool.acquire().unwrap();
    assert!(matches!(pool.acquire(), Err(PoolError::Exhausted(_))));
    pool.shutdown();
    assert!(matches!(pool.acquire(), Err(PoolError::ShutDown)));
}

fn key(i: u8) -> StateKey {
    StateKey([i; 32])
}

#[test]
fn propagation_on_a_shared_node() {
    // r -> (a), r -> (b); a -> (s, x), b -> (s); s is shared
    let mut g: AndOrGraph<()> = AndOrGraph::new(true);
    let (r, _) = g.intern(key(0), 0, || ());
    let (a, _) = g.intern(key(1), 1, || ());
    let (b, _) = g.intern(key(2), 1, || ());
    let (s, _) = g.intern(key(3), 2, || ());
    let (x, _) = g.intern(key(4), 2, || ());
    let (s2, reused) = g.intern(key(3), 2, || ());
    assert!(reused && s2 == s);
    assert_eq!(g.transpositions, 1);
    let ra = g.add_edge(r, "ra", 1.0, vec![a]);
    let rb = g.add_edge(r, "rb", 1.0, vec![b]);
    let a_sx = g.add_edge(a, "a", 1.0, vec![s, x]);
    let b_s = g.add_edge(b, "b", 1.0, vec![s]);
    g.mark_expanded(r);
    g.mark_expanded(a);
    g.mark_expanded(b);
    // s closes
    g.add_edge(s, "close", 1.0, vec![]);
    g.mark_expanded(s);
    assert_eq!(g.node(s).status, Status::Proven);
    assert_eq!(g.edge(b_s).status, Status::Proven);
    assert_eq!(g.edge(b_s).changes, 1);
    assert_eq!(g.edge(a_sx).status, Status::Open);
    assert_eq!(g.node(r).status, Status::Proven);
    assert_eq!(g.edge(rb).changes, 1);
    // x fails: a's only edge fails, so a fails; r stays proven
    g.mark_expanded(x);
    assert_eq!(g.node(x).status, Status::Failed);
    assert_eq!(g.edge(a_sx).status, Status::Failed);
    assert_eq!(g.node(a).status, Status::Failed);
    assert_eq!(g.edge(ra).status, Status::Failed);
    assert_eq!(g.node(r).status, Status::Proven);
    assert_eq!(g.min_proof_size(r), Some(3));
    assert_eq!(g.chosen_edge(r), Some(rb));
}

#[test]
fn rendered_hypotheses_split_groups() {
    let hs = rendered_hypotheses("case succ\na n† : Nat\nh : b = 0\n⊢ a - b = a");
    assert_eq!(
        hs,
        vec![
            ("a".into(), "Nat".into()),
            ("n†".into(), "Nat".into()),
            ("h".into(), "b = 0".into())
        ]
    );
    let menu = template_menu("a b : Nat\nh : b = 0\n⊢ a - b = a");
    for t in ["rw [h]", "cases b", "cases h", "exact absurd h (Nat.succ_ne_zero _)"] {
        assert!(menu.contains(&t.to_string()), "{t}: {menu:?}");
    }
}

#[test]
fn sub_zero_both_root_tactics_prove_with_a_transposition() {
    let s = start("sub_zero.ml", "sub_zero");
    let cfg = SearchConfig { stop_on_proof: false, max_depth: 4, max_expansions: 400, ..SearchConfig::default() };
    let r = search(&s, &mut EnumPolicy::templated(), &cfg);
    assert_eq!(r.status, Status::Proven);
    let root = r.graph.node(0);
    let proven: BTreeSet<&str> = root
        .edges
        .iter()
        .map(|e| r.graph.edge(*e))
        .filter(|e| e.status == Status::Proven)
        .map(|e| e.tactic.as_str())
        .collect();
    assert!(proven.contains("rw [h]") && proven.contains("cases b"), "{proven:?}");
    assert!(r.stats.transpositions >= 1);
    let p = r.proof.unwrap();
    verify_script(&s, &p.script, &TacticConfig::strict()).unwrap();
}

#[test]
fn search_stops_at_first_proof_and_extracts_a_chain() {
    let s = start("sub_zero.ml", "sub_zero");
    let policy = ScriptedPolicy::parse("⊢ a - b = a => rw [h]\n⊢ a - b = a => cases b\n⊢ a - 0 = a => rfl").unwrap();
    let r = search(&s, &mut policy.clone(), &SearchConfig::default());
    assert!(r.proven());
    let p = r.proof.unwrap();
    assert_eq!(p.script, strs(&["rw [h]", "rfl"]));
    assert_eq!(p.tree.nodes.len(), 2);
    assert_eq!(p.tree.root().proof_size, 2);
}

#[test]
fn false_is_not_provable_with_a_finite_menu() {
    let s = new_session_from_goal(prelude(), "⊢ False").unwrap();
    let r = search(&s, &mut EnumPolicy::templated(), &SearchConfig::default());
    assert_eq!(r.status, Status::Failed);
    assert!(r.proof.is_none());
}

#[test]
fn trivial_theorem_gives_a_single_edge_tree() {
    let s = new_session_from_goal(prelude(), "⊢ 2 = 2").unwrap();
    let r = search(&s, &mut EnumPolicy::fixed(strs(&["rfl"])), &SearchConfig::default());
    let p = r.proof.unwrap();
    assert_eq!(p.script, strs(&["rfl"]));
    assert_eq!(p.tree.nodes.len(), 1);
    assert_eq!(r.stats.expansions, 1);
}

fn mul_menu() -> Vec<String> {
    strs(&[
        "cases n <;> cases m",
        "constructor",
        "intro h",
        "left",
        "right",
        "rfl",
        "exact Nat.zero_mul _",
        "exact absurd h (Nat.succ_ne_zero _)",
        "cases h with | inl h1 => exact absurd h1 (Nat.succ_ne_zero _) | inr h2 => exact absurd h2 (Nat.succ_ne_zero _)",
    ])
}

#[test]
fn four_components_in_any_order() {
    let s = start("golden/03_mul_eq_zero_iff.ml", "mul_eq_zero_iff");
    let cfg = SearchConfig { max_expansions: 500, ..SearchConfig::default() };
    let mut scripts = BTreeSet::new();
    for seed in [1, 2, 3] {
        let mut policy = RandomPolicy::with_menu(seed, EnumPolicy::fixed(mul_menu()));
        let r = search(&s, &mut policy, &cfg);
        assert!(r.proven(), "seed {seed}: {:?} {:?}", r.status, r.error);
        let p = r.proof.unwrap();
        assert!(p.script.iter().any(|t| t == "cases n <;> cases m"), "{:?}", p.script);
        proofgrove::treebuild::verify_tree(&s, &p.tree).unwrap();
        verify_script(&s, &p.script, &TacticConfig::strict()).unwrap();
        scripts.insert(p.script);
    }
    assert!(!scripts.is_empty());
}

#[test]
fn coupled_goals_are_extracted_with_rotations_when_needed() {
    let s = new_session_from_goal(prelude(), "⊢ 2 ≤ 5").unwrap();
    let menu = strs(&["apply Nat.le_trans", "exact 3", "exact Nat.le_succ 2", "exact Nat.le.step (Nat.le_succ 3)"]);
    let r = search(&s, &mut EnumPolicy::fixed(menu), &SearchConfig::default());
    assert!(r.proven(), "{:?}", r.error);
    let p = r.proof.unwrap();
    assert_eq!(p.tree.root().tactic.as_ref().unwrap().tactic_string, "apply Nat.le_trans");
    assert_eq!(p.tree.nodes[1].goals.len(), 3);
}

#[test]
fn merge_does_not_change_verdicts() {
    let menu = strs(&["rfl", "assumption", "intro h", "constructor", "left", "right", "exact h", "rw [h]", "cases h", "cases n"]);
    for (name, s) in theorems("micro.ml") {
        let mut verdicts = Vec::new();
        for merge in [true, false] {
            let cfg = SearchConfig { merge, max_depth: 4, max_expansions: 300, seed: 7, ..SearchConfig::default() };
            let r = search(&s, &mut EnumPolicy::fixed(menu.clone()), &cfg);
            if merge {
                assert!(r.graph.nodes.len() as u64 == r.stats.nodes);
            } else {
                assert_eq!(r.stats.transpositions, 0);
            }
            verdicts.push(r.status == Status::Proven);
        }
        assert_eq!(verdicts[0], verdicts[1], "{name}");
    }
}

#[test]
fn no_path_repeats_a_state() {
    let s = start("sub_zero.ml", "sub_zero");
    let menu = strs(&["rotate_left", "try rfl", "rw [h]", "cases b", "cases h", "rfl"]);
    let cfg = SearchConfig { stop_on_proof: false, max_depth: 5, ..SearchConfig::default() };
    let r = search(&s, &mut EnumPolicy::fixed(menu), &cfg);
    assert!(r.stats.cycles_pruned > 0);
    let g = &r.graph;
    for e in &g.edges {
        let above = g.ancestor_keys(e.parent);
        for c in &e.children {
            // a child can only share a key with an ancestor if it is that node
            assert!(!above.contains(&g.node(*c).key) || g.ancestor_keys(*c).len() == above.len());
        }
    }
    for (i, n) in g.nodes.iter().enumerate() {
        for e in &n.edges {
            assert!(!g.edge(*e).children.contains(&i));
        }
    }
}

#[test]
fn library_search_only_with_opt_in() {
    let s = new_session_from_goal(prelude(), "⊢ 2 ≤ 5").unwrap();
    let r = search(&s, &mut EnumPolicy::fixed(strs(&["apply?"])), &SearchConfig::default());
    assert_eq!(r.stats.banned, 1);
    assert!(r.log.iter().any(|l| l.contains("banned")));
    let cfg = SearchConfig { allow_library_search: true, ..SearchConfig::default() };
    let r = search(&s, &mut EnumPolicy::fixed(strs(&["apply?"])), &cfg);
    assert_eq!(r.stats.banned, 0);
}

#[test]
fn scripted_rollout_solves_sub_zero() {
    let s = start("sub_zero.ml", "sub_zero");
    let mut policy = ScriptedPolicy::parse("⊢ a - b = a => rw [h]\n⊢ a - 0 = a => rfl").unwrap();
    let cfg = SearchConfig { mode: SearchMode::RolloutWhite, ..SearchConfig::default() };
    let r = rollout(&s, &mut policy, &cfg, 0);
    assert!(r.success);
    assert_eq!(r.script, strs(&["rw [h]", "rfl"]));
    assert_eq!(r.steps.len(), 2);
    let black = SearchConfig { mode: SearchMode::RolloutBlack, ..cfg };
    assert!(!rollout(&s, &mut policy, &black, 0).success);
}

#[test]
fn sorry_only_policy_fails_at_step_one() {
    let s = start("sub_zero.ml", "sub_zero");
    let mut policy = EnumPolicy::fixed(strs(&["sorry"]));
    let cfg = SearchConfig { mode: SearchMode::RolloutWhite, ..SearchConfig::default() };
    let r = rollout(&s, &mut policy, &cfg, 0);
    assert!(!r.success);
    assert_eq!(r.steps.len(), 1);
    assert!(r.steps[0].error.as_deref().unwrap().contains("banned"));
    assert_eq!(r.banned, 1);
}

#[test]
fn malformed_proposal_consumes_a_step() {
    let s = new_session_from_goal(prelude(), "⊢ 1 = 1").unwrap();
    let mut policy = ScriptedPolicy::parse("* => exact (").unwrap();
    let cfg = SearchConfig { mode: SearchMode::RolloutWhite, max_steps: 3, ..SearchConfig::default() };
    let r = rollout(&s, &mut policy, &cfg, 0);
    assert_eq!(r.steps.len(), 3);
    assert!(r.steps.iter().all(|s| s.error.is_some()));
}

#[test]
fn rollout_defaults_and_seeded_reproducibility() {
    let cfg = SearchConfig::default();
    assert_eq!((cfg.rollouts, cfg.max_steps), (10, 25));
    let corpus: Vec<_> = theorems("micro.ml").into_iter().take(5).collect();
    let cfg = SearchConfig { mode: SearchMode::RolloutWhite, seed: 42, ..SearchConfig::default() };
    let run = || -> Vec<(bool, Option<Vec<String>>)> {
        corpus
            .iter()
            .map(|(_, s)| {
                let r = run_rollouts(s, &mut RandomPolicy::new(42), &cfg);
                (r.success, r.script)
            })
            .collect()
    };
    let a = run();
    assert_eq!(a, run());
    assert!(a.iter().any(|(ok, _)| *ok));
}

#[test]
fn policy_request_views() {
    let s = start("sub_zero.ml", "sub_zero");
    let w = PolicyRequest::white(&s.render(), &s.views(), &[], 3);
    assert_eq!(w.focus(), "a b : Nat\nh : b = 0\n⊢ a - b = a");
    let b = PolicyRequest::black(&s.render(), &strs(&["rw [h]"]), 3);
    assert!(b.goals.is_empty());
    assert_eq!(b.focus(), s.render());
}
