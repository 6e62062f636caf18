use std::fs;
use std::path::PathBuf;

use proofgrove::factorize::coupling_components;
use proofgrove::prelude::file_env;
use proofgrove::syntax::{parse_file, SourceFile};
use proofgrove::tactics::{new_session_from_goal, run_script, TacticConfig, Verdict};
use proofgrove::treebuild::{
    block_root, build_singleton_tree, extract_block, merge_coupled_siblings, simplify_tactics, verify_tree,
    ProofTree, TreeEdge,
};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn golden() -> Vec<SourceFile> {
    let mut paths: Vec<PathBuf> = fs::read_dir(fixtures().join("golden"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ml"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| parse_file(&fs::read_to_string(p).unwrap(), &p.display().to_string()).unwrap())
        .collect()
}

fn extract(file: &SourceFile, name: &str) -> ProofTree {
    let (env, errs) = file_env(file);
    assert!(errs.is_empty());
    let thm = file.theorem(name).unwrap();
    extract_block(env, thm, 0).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn find(name: &str) -> SourceFile {
    golden().into_iter().find(|f| f.theorem(name).is_some()).unwrap()
}

fn edges(t: &ProofTree) -> Vec<&TreeEdge> {
    t.nodes.iter().filter_map(|n| n.tactic.as_ref()).collect()
}

#[test]
fn golden_corpus_converts_and_verifies() {
    let files = golden();
    let mut count = 0;
    for f in &files {
        let (env, errs) = file_env(f);
        assert!(errs.is_empty(), "{}: {errs:?}", f.path);
        for thm in f.theorems() {
            for i in 0..thm.by_blocks().len() {
                let tree = extract_block(env.clone(), thm, i)
                    .unwrap_or_else(|e| panic!("{} block {i}: {e}", thm.name.as_deref().unwrap_or("?")));
                assert!(tree.edge_count() >= 1);
                count += 1;
            }
        }
    }
    assert!(count >= 25, "{count}");
}

#[test]
fn rw_list_splits_into_chained_edges() {
    let t = extract(&find("rw_chain"), "rw_chain");
    let tactics = t.tactics();
    assert_eq!(tactics, vec!["rw [Nat.add_zero]", "rw [a]", "rw [b]", "rw [c]"]);
    assert!(edges(&t).iter().all(|e| e.synthetic && e.span.is_empty()));
}

#[test]
fn nested_block_is_masked() {
    let t = extract(&find("anon_sorry_chain"), "anon_sorry_chain");
    assert_eq!(t.tactics(), vec!["exact ⟨by sorry, rfl⟩", "rw [a]", "rw [b]", "rw [c_rule]"]);
    let root = t.root();
    assert_eq!(root.tactic.as_ref().unwrap().children.len(), 1);
    assert_eq!(root.proof_size, 4);
    assert_eq!(root.proof_depth, 4);
}

#[test]
fn rwa_becomes_rw_and_assumption() {
    let t = extract(&find("rwa_back"), "rwa_back");
    assert_eq!(t.tactics(), vec!["rw [← h]", "assumption"]);
}

#[test]
fn synthetic_case_kept_only_when_names_are_used() {
    let t = extract(&find("le_add_two"), "le_add_two");
    let tactics = t.tactics();
    assert!(tactics.contains(&"case succ n'"), "{tactics:?}");
    let case = edges(&t).into_iter().find(|e| e.tactic_string == "case succ n'").unwrap();
    assert!(case.synthetic && case.span.is_empty());
    // the zero branch is not renamed, so no synthetic case for it
    assert!(!tactics.iter().any(|s| s.starts_with("case zero")));
    let t = extract(&find("or_cases"), "or_cases");
    assert!(t.tactics().contains(&"case inl h1"));
}

#[test]
fn coupled_goals_share_a_node() {
    let t = extract(&find("le_two_five"), "le_two_five");
    let root = t.root();
    let child = t.get(&root.tactic.as_ref().unwrap().children[0]).unwrap();
    assert_eq!(child.goals.len(), 3);
    let after = &child.tactic.as_ref().unwrap().children;
    assert_eq!(after.len(), 2);
    for id in after {
        assert_eq!(t.get(id).unwrap().goals.len(), 1);
    }
}

#[test]
fn runtime_combinators_expand_per_goal() {
    let t = extract(&find("mul_eq_zero_iff"), "mul_eq_zero_iff");
    let root = t.root();
    assert_eq!(root.tactic.as_ref().unwrap().tactic_string, "cases n");
    let kids = &root.tactic.as_ref().unwrap().children;
    assert_eq!(kids.len(), 2);
    for k in kids {
        let e = t.get(k).unwrap().tactic.as_ref().unwrap();
        assert_eq!(e.tactic_string, "cases m");
        assert_eq!(e.children.len(), 2);
    }
}

#[test]
fn singleton_tree_has_one_goal_per_node_and_simplify_is_idempotent() {
    let f = find("anon_sorry_chain");
    let (env, _) = file_env(&f);
    let thm = f.theorem("anon_sorry_chain").unwrap();
    let start = block_root(env, thm, 0).unwrap();
    let s = build_singleton_tree(&start, &thm.by_blocks()[0].tactics).unwrap();
    let once = simplify_tactics(&s).unwrap();
    let twice = simplify_tactics(&once).unwrap();
    let a = merge_coupled_siblings(&once).unwrap();
    let b = merge_coupled_siblings(&twice).unwrap();
    assert_eq!(a.tactics(), b.tactics());
    assert_eq!(a.nodes.len(), b.nodes.len());
}

#[test]
fn merged_nodes_are_coupling_components() {
    let f = find("le_two_five");
    let (env, _) = file_env(&f);
    let thm = f.theorem("le_two_five").unwrap();
    let start = block_root(env, thm, 0).unwrap();
    let o = start.apply_text("apply Nat.le_trans", &TacticConfig::default()).unwrap();
    let comps = coupling_components(&o.state.mctx, &o.state.goals);
    let t = extract(&f, "le_two_five");
    let child = t.get(&t.root().tactic.as_ref().unwrap().children[0]).unwrap();
    assert_eq!(comps.len(), 1);
    assert_eq!(comps[0].len(), child.goals.len());
}

#[test]
fn tampered_tree_fails_verification() {
    let f = find("sub_zero");
    let (env, _) = file_env(&f);
    let thm = f.theorem("sub_zero").unwrap();
    let mut t = extract(&f, "sub_zero");
    t.nodes[1].tactic.as_mut().unwrap().tactic_string = "exact h".into();
    let start = block_root(env.clone(), thm, 0).unwrap();
    assert!(verify_tree(&start, &t).is_err());
    let mut t = extract(&f, "sub_zero");
    t.nodes[1].tactic.as_mut().unwrap().tactic_string = "sorry".into();
    assert!(verify_tree(&start, &t).is_err());
}

#[test]
fn single_rfl_tree() {
    let start = new_session_from_goal(proofgrove::prelude::prelude(), "⊢ 0 = 0").unwrap();
    let script = proofgrove::syntax::parse_tactic_script("rfl").unwrap();
    let s = build_singleton_tree(&start, &script).unwrap();
    assert_eq!(s.root.size(), 1);
    let t = merge_coupled_siblings(&simplify_tactics(&s).unwrap()).unwrap();
    assert_eq!(t.nodes.len(), 1);
    assert_eq!((t.root().proof_size, t.root().proof_depth), (1, 1));
    verify_tree(&start, &t).unwrap();
    assert_eq!(run_script(&start, &script, &TacticConfig::default()).verdict, Verdict::Proven);
}
