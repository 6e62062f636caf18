use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::graph::{AndOrGraph, NodeId, Status};
use super::policy::{Policy, PolicyRequest};
use super::pool::{session_pool, EnvPool, PoolStats, ProverSession};
use crate::factorize::{canonical_key, coupling_components, factorize, FactorizedState};
use crate::kernel::MvarId;
use crate::syntax::{parse_tactic, parse_tactic_script, Span, TacticNode};
use crate::tactics::{apply_tactic, run_script, GoalView, ProofState, TacticConfig, TacticError, Verdict};
use crate::treebuild::{annotate_metrics, verify_tree, ProofTree, ProofTreeNode, TreeEdge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    RolloutWhite,
    RolloutBlack,
    Andor,
}

impl SearchMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rollout-white" => Some(SearchMode::RolloutWhite),
            "rollout-black" => Some(SearchMode::RolloutBlack),
            "andor" | "andor-best-first" => Some(SearchMode::Andor),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SearchMode::RolloutWhite => "rollout-white",
            SearchMode::RolloutBlack => "rollout-black",
            SearchMode::Andor => "andor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mode: SearchMode,
    /// Independent rollouts per theorem.
    pub rollouts: usize,
    /// Tactic steps per rollout.
    pub max_steps: usize,
    /// Node expansions per AND-OR search.
    pub max_expansions: usize,
    /// Nodes at this depth are not expanded.
    pub max_depth: usize,
    /// Proposals requested per policy call.
    pub proposals: usize,
    pub depth_penalty: f64,
    pub seed: u64,
    pub pool_size: usize,
    /// Share nodes with equal state keys.
    pub merge: bool,
    /// Stop as soon as the root is proven.
    pub stop_on_proof: bool,
    pub allow_library_search: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: SearchMode::Andor,
            rollouts: 10,
            max_steps: 25,
            max_expansions: 200,
            max_depth: 16,
            proposals: 16,
            depth_penalty: 0.1,
            seed: 0,
            pool_size: 4,
            merge: true,
            stop_on_proof: true,
            allow_library_search: false,
        }
    }
}

impl SearchConfig {
    pub fn tactic_config(&self) -> TacticConfig {
        let c = TacticConfig::strict();
        if self.allow_library_search {
            c.allow_library_search()
        } else {
            c
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expansions: u64,
    pub nodes: u64,
    pub edges: u64,
    pub transpositions: u64,
    pub cycles_pruned: u64,
    pub tactic_failures: u64,
    pub banned: u64,
    pub malformed: u64,
    pub policy_errors: u64,
    pub pool_peak_live: u64,
    pub pool_peak_in_use: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("root is not proven")]
    RootNotProven,
    #[error("replaying the proof failed: {0}")]
    Replay(String),
    #[error("extracted proof does not verify: {0}")]
    Verification(String),
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub component: FactorizedState,
    /// Tactics along the path that first reached this node.
    pub prefix: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExtractedProof {
    pub script: Vec<String>,
    pub tree: ProofTree,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub status: Status,
    pub proof: Option<ExtractedProof>,
    pub error: Option<SearchError>,
    pub stats: SearchStats,
    pub graph: AndOrGraph<SearchNode>,
    /// Banned or failed proposals, as `tactic: message`.
    pub log: Vec<String>,
}

impl SearchResult {
    pub fn proven(&self) -> bool {
        self.status == Status::Proven && self.proof.is_some()
    }
}

struct Entry {
    priority: f64,
    seq: u64,
    node: NodeId,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // higher priority first, then earlier insertion
        self.priority.total_cmp(&other.priority).then(other.seq.cmp(&self.seq))
    }
}

/// Best-first AND-OR search from `start` with a private session pool.
pub fn search(start: &ProofState, policy: &mut dyn Policy, config: &SearchConfig) -> SearchResult {
    let pool = session_pool(config.pool_size, config.tactic_config());
    search_with_pool(start, policy, config, &pool)
}

pub fn search_with_pool(
    start: &ProofState,
    policy: &mut dyn Policy,
    config: &SearchConfig,
    pool: &Arc<EnvPool<ProverSession>>,
) -> SearchResult {
    let theorem = start.render();
    let mut graph: AndOrGraph<SearchNode> = AndOrGraph::new(config.merge);
    let mut stats = SearchStats::default();
    let mut log = Vec::new();
    let root_key = canonical_key(&start.mctx, &start.goals);
    let (root, _) = graph.intern(root_key, 0, || SearchNode {
        component: FactorizedState { state: start.clone(), key: root_key },
        prefix: vec![],
    });
    if start.goals.is_empty() {
        graph.mark_expanded(root);
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Entry { priority: 0.0, seq, node: root });

    while let Some(Entry { node: n, .. }) = heap.pop() {
        if config.stop_on_proof && graph.node(root).status == Status::Proven {
            break;
        }
        let node = graph.node(n);
        if node.expanded || node.status != Status::Open || node.depth >= config.max_depth {
            continue;
        }
        if stats.expansions as usize >= config.max_expansions {
            break;
        }
        stats.expansions += 1;
        graph.nodes[n].visits += 1;
        let depth = graph.node(n).depth;
        let state = graph.node(n).payload.component.state.clone();
        let prefix = graph.node(n).payload.prefix.clone();
        let req = PolicyRequest::white(&theorem, &state.views(), &prefix, config.proposals);
        let proposals = match policy.propose(&req) {
            Ok(p) => p,
            Err(e) => {
                stats.policy_errors += 1;
                log.push(format!("policy: {e}"));
                vec![]
            }
        };
        let mut seen = HashSet::new();
        let mut parsed = Vec::new();
        for p in proposals {
            if !seen.insert(p.text.clone()) {
                continue;
            }
            match parse_tactic(&p.text) {
                Ok(t) => parsed.push((p, t)),
                Err(e) => {
                    stats.malformed += 1;
                    log.push(format!("{}: {e}", p.text));
                }
            }
        }
        let outcomes = apply_all(pool, &state, &parsed);
        let ancestors = graph.ancestor_keys(n);
        for ((p, _), outcome) in parsed.iter().zip(outcomes) {
            let o = match outcome {
                Ok(o) => o,
                Err(e) => {
                    if matches!(e, TacticError::Banned(_)) {
                        stats.banned += 1;
                        log.push(format!("{}: banned", p.text));
                    } else {
                        stats.tactic_failures += 1;
                    }
                    continue;
                }
            };
            let comps = factorize(&o.state);
            if comps.iter().any(|c| ancestors.contains(&c.key)) {
                stats.cycles_pruned += 1;
                continue;
            }
            let mut child_prefix = prefix.clone();
            child_prefix.push(p.text.clone());
            let priority = p.score - config.depth_penalty * (depth + 1) as f64;
            let mut children = Vec::new();
            for c in comps {
                let key = c.key;
                let before = graph.find(&key).map(|id| graph.node(id).depth);
                let (id, reused) =
                    graph.intern(key, depth + 1, || SearchNode { component: c, prefix: child_prefix.clone() });
                if reused && before.is_some_and(|d| d > depth + 1) {
                    lower_depths(&mut graph, id, &mut heap, &mut seq);
                }
                let node = &mut graph.nodes[id];
                if !reused || (!node.expanded && priority > node.priority) {
                    node.priority = if reused { node.priority.max(priority) } else { priority };
                    seq += 1;
                    heap.push(Entry { priority: node.priority, seq, node: id });
                }
                children.push(id);
            }
            graph.add_edge(n, p.text.clone(), p.score, children);
        }
        graph.mark_expanded(n);
    }

    stats.nodes = graph.nodes.len() as u64;
    stats.edges = graph.edges.len() as u64;
    stats.transpositions = graph.transpositions;
    let ps: PoolStats = pool.stats();
    stats.pool_peak_live = ps.peak_live as u64;
    stats.pool_peak_in_use = ps.peak_in_use as u64;
    graph.finalize();
    let status = graph.node(root).status;
    let (proof, error) = if status == Status::Proven {
        match extract_proof(&graph, root, start, &config.tactic_config()) {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e)),
        }
    } else {
        (None, None)
    };
    SearchResult { status, proof, error, stats, graph, log }
}

/// After `id` was reached at a smaller depth, pushes the new bound down to
/// its descendants and requeues those not yet expanded.
fn lower_depths(graph: &mut AndOrGraph<SearchNode>, id: NodeId, heap: &mut BinaryHeap<Entry>, seq: &mut u64) {
    let mut work = vec![id];
    while let Some(n) = work.pop() {
        let d = graph.node(n).depth;
        if !graph.node(n).expanded {
            *seq += 1;
            heap.push(Entry { priority: graph.node(n).priority, seq: *seq, node: n });
            continue;
        }
        for e in graph.node(n).edges.clone() {
            for c in graph.edge(e).children.clone() {
                if graph.node(c).depth > d + 1 {
                    graph.nodes[c].depth = d + 1;
                    work.push(c);
                }
            }
        }
    }
}

/// Applies every proposal to `state` in parallel on leased sessions;
/// results keep proposal order.
fn apply_all(
    pool: &Arc<EnvPool<ProverSession>>,
    state: &ProofState,
    parsed: &[(super::policy::Proposal, TacticNode)],
) -> Vec<Result<crate::tactics::TacticOutcome, TacticError>> {
    let workers = pool.max_size().min(parsed.len()).max(1);
    if workers == 1 {
        let mut lease = match pool.acquire() {
            Ok(l) => l,
            Err(e) => return parsed.iter().map(|_| Err(TacticError::Failed(e.to_string()))).collect(),
        };
        return parsed.iter().map(|(_, t)| lease.apply(state, t)).collect();
    }
    let mut results: Vec<Option<Result<_, TacticError>>> = (0..parsed.len()).map(|_| None).collect();
    let chunks: Vec<Vec<usize>> = (0..workers).map(|w| (w..parsed.len()).step_by(workers).collect()).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|idx| {
                s.spawn(move || {
                    let mut lease = match pool.acquire() {
                        Ok(l) => l,
                        Err(e) => {
                            return idx.into_iter().map(|i| (i, Err(TacticError::Failed(e.to_string())))).collect::<Vec<_>>()
                        }
                    };
                    idx.into_iter().map(|i| (i, lease.apply(state, &parsed[i].1))).collect()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    results.into_iter().map(|r| r.expect("every proposal applied")).collect()
}

struct Replay<'g> {
    graph: &'g AndOrGraph<SearchNode>,
    config: TacticConfig,
    state: ProofState,
    script: Vec<String>,
    nodes: Vec<ProofTreeNode>,
    goals_of: Vec<Vec<MvarId>>,
    per_depth: HashMap<usize, usize>,
}

impl Replay<'_> {
    fn apply(&mut self, text: &str) -> Result<crate::tactics::TacticOutcome, SearchError> {
        let t = parse_tactic(text).map_err(|e| SearchError::Replay(format!("{text}: {e}")))?;
        let o = apply_tactic(&self.state, &t, &self.config).map_err(|e| SearchError::Replay(format!("{text}: {e}")))?;
        self.script.push(text.to_string());
        self.state = o.state.clone();
        Ok(o)
    }

    fn visit(&mut self, node: NodeId, goals: Vec<MvarId>, depth: usize) -> Result<usize, SearchError> {
        let k = self.per_depth.entry(depth).or_insert(0);
        let id = format!("t{depth}.{k}");
        *k += 1;
        let e = self.graph.chosen_edge(node).ok_or(SearchError::RootNotProven)?;
        let edge = self.graph.edge(e);
        let views: Vec<GoalView> = goals.iter().map(|g| GoalView::of(&self.state.mctx, *g)).collect();
        let idx = self.nodes.len();
        self.nodes.push(ProofTreeNode { id, goals: views, tactic: None, proof_size: 0, proof_depth: 0 });
        self.goals_of.push(goals.clone());

        let pos = self
            .state
            .goals
            .iter()
            .position(|g| *g == goals[0])
            .ok_or_else(|| SearchError::Replay("component goal is not open".into()))?;
        if pos > 0 {
            self.apply(&format!("rotate_left {pos}"))?;
        }
        let o = self.apply(&edge.tactic)?;
        let mut touched: HashSet<MvarId> = o.new_assignments.iter().copied().collect();
        for m in &o.new_assignments {
            if let Some(v) = o.state.mctx.assignment(*m) {
                touched.extend(v.mvars());
            }
        }
        let depends: Vec<String> = (0..idx)
            .filter(|i| self.goals_of[*i].iter().any(|g| touched.contains(g)))
            .map(|i| self.nodes[i].id.clone())
            .collect();
        let mine: HashSet<MvarId> = o.produced.iter().chain(&goals[1..]).copied().collect();
        let next: Vec<MvarId> = o.state.goals.iter().copied().filter(|g| mine.contains(g)).collect();
        let comps = coupling_components(&o.state.mctx, &next);
        if comps.len() != edge.children.len() {
            return Err(SearchError::Replay(format!(
                "'{}' produced {} components, expected {}",
                edge.tactic,
                comps.len(),
                edge.children.len()
            )));
        }
        let mut children = Vec::new();
        for (child, comp) in edge.children.clone().into_iter().zip(comps) {
            let ci = self.visit(child, comp, depth + 1)?;
            children.push(self.nodes[ci].id.clone());
        }
        self.nodes[idx].tactic = Some(TreeEdge {
            tactic_string: edge.tactic.clone(),
            span: Span::default(),
            children,
            tactic_depends_on: depends,
            synthetic: false,
        });
        Ok(idx)
    }
}

/// Turns a proven graph into a linear script and a proof tree by choosing
/// the first proven edge of every node and replaying from `start`. Both
/// are verified before returning.
pub fn extract_proof(
    graph: &AndOrGraph<SearchNode>,
    root: NodeId,
    start: &ProofState,
    config: &TacticConfig,
) -> Result<ExtractedProof, SearchError> {
    if graph.node(root).status != Status::Proven {
        return Err(SearchError::RootNotProven);
    }
    let mut r = Replay {
        graph,
        config: config.clone(),
        state: start.clone(),
        script: vec![],
        nodes: vec![],
        goals_of: vec![],
        per_depth: HashMap::new(),
    };
    r.visit(root, start.goals.clone(), 0)?;
    let mut tree = ProofTree { nodes: r.nodes };
    annotate_metrics(&mut tree);
    let script = r.script;
    verify_script(start, &script, config)?;
    verify_tree(start, &tree).map_err(|e| SearchError::Verification(e.to_string()))?;
    Ok(ExtractedProof { script, tree })
}

/// Replays `script` from `start` and requires a closed, kernel-checked proof.
pub fn verify_script(start: &ProofState, script: &[String], config: &TacticConfig) -> Result<(), SearchError> {
    let nodes = parse_tactic_script(&script.join("\n")).map_err(|e| SearchError::Verification(e.to_string()))?;
    let run = run_script(start, &nodes, config);
    if run.verdict == Verdict::Proven {
        Ok(())
    } else {
        Err(SearchError::Verification(format!(
            "{:?}: {}",
            run.verdict,
            run.failure.map(|f| f.error.to_string()).or(run.final_error.map(|e| e.to_string())).unwrap_or_default()
        )))
    }
}

// ---------------------------------------------------------------------------
// rollouts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutStep {
    pub tactic: String,
    /// `None` when the tactic applied cleanly.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutResult {
    pub success: bool,
    /// Applied tactics, in order.
    pub script: Vec<String>,
    pub steps: Vec<RolloutStep>,
    pub banned: u64,
}

/// One linear rollout on the whole state: at most `max_steps` proposals are
/// sampled in proportion to their scores. A tactic error ends the rollout;
/// an unparseable proposal only consumes its step.
pub fn rollout(start: &ProofState, policy: &mut dyn Policy, config: &SearchConfig, seed: u64) -> RolloutResult {
    let black = config.mode == SearchMode::RolloutBlack;
    let tcfg = config.tactic_config();
    let theorem = start.render();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = start.clone();
    let mut script: Vec<String> = Vec::new();
    let mut steps = Vec::new();
    let mut banned = 0;
    let done = |script: Vec<String>, steps, banned, success| RolloutResult { success, script, steps, banned };
    for _ in 0..config.max_steps {
        let req = if black {
            PolicyRequest::black(&theorem, &script, config.proposals)
        } else {
            PolicyRequest::white(&theorem, &state.views(), &script, config.proposals)
        };
        let proposals: Vec<_> = match policy.propose(&req) {
            Ok(p) => p.into_iter().filter(|p| p.score > 0.0).collect(),
            Err(e) => {
                steps.push(RolloutStep { tactic: String::new(), error: Some(e.to_string()) });
                return done(script, steps, banned, false);
            }
        };
        if proposals.is_empty() {
            return done(script, steps, banned, false);
        }
        let total: f64 = proposals.iter().map(|p| p.score).sum();
        let mut x = rng.gen_range(0.0..total);
        let mut pick = &proposals[proposals.len() - 1];
        for p in &proposals {
            if x < p.score {
                pick = p;
                break;
            }
            x -= p.score;
        }
        let tactic = match parse_tactic(&pick.text) {
            Ok(t) => t,
            Err(e) => {
                steps.push(RolloutStep { tactic: pick.text.clone(), error: Some(e.to_string()) });
                continue;
            }
        };
        match apply_tactic(&state, &tactic, &tcfg) {
            Ok(o) => {
                steps.push(RolloutStep { tactic: pick.text.clone(), error: None });
                script.push(pick.text.clone());
                state = o.state;
                if state.is_solved() {
                    let ok = verify_script(start, &script, &tcfg).is_ok();
                    return done(script, steps, banned, ok);
                }
            }
            Err(e) => {
                if matches!(e, TacticError::Banned(_)) {
                    banned += 1;
                }
                steps.push(RolloutStep { tactic: pick.text.clone(), error: Some(e.to_string()) });
                return done(script, steps, banned, false);
            }
        }
    }
    done(script, steps, banned, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutsResult {
    pub success: bool,
    /// Index of the first successful rollout.
    pub solved_by: Option<usize>,
    pub script: Option<Vec<String>>,
    pub runs: Vec<RolloutResult>,
}

/// Seed of rollout `i` under base seed `seed`.
pub fn rollout_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

/// Up to `config.rollouts` independent rollouts; stops at the first success.
pub fn run_rollouts(start: &ProofState, policy: &mut dyn Policy, config: &SearchConfig) -> RolloutsResult {
    let mut runs = Vec::new();
    for i in 0..config.rollouts {
        let r = rollout(start, policy, config, rollout_seed(config.seed, i));
        let ok = r.success;
        let script = r.script.clone();
        runs.push(r);
        if ok {
            return RolloutsResult { success: true, solved_by: Some(i), script: Some(script), runs };
        }
    }
    RolloutsResult { success: false, solved_by: None, script: None, runs }
}
