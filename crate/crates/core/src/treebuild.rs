//! Proof trees from tactic scripts: singleton trees, simplification,
//! coupled-sibling merging, metrics and replay verification.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::factorize::coupling_components;
use crate::kernel::{check_partial_proof, CheckStats, Environment, KernelError, MetavarContext, MvarId};
use crate::syntax::{
    parse_tactic, render_tactic, ByBlock, Expr, ProofBody, RwRule, Span, TacticKind, TacticNode, TheoremDecl,
};
use crate::tactics::{apply_tactic, new_session, run_script, GoalView, ProofState, TacticConfig, TacticError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("step {index} failed: {error}")]
    Script { index: usize, span: Span, error: TacticError },
    #[error("simplified step at {}..{} failed: {error}", span.start, span.finish)]
    Simplify { span: Span, error: TacticError },
    #[error("tree is not simplified")]
    NotSimplified,
    #[error("node {0} has no proof")]
    UnprovenLeaf(String),
    #[error("tactic of node {id} failed: {error}")]
    TacticFailed { id: String, error: TacticError },
    #[error("children of node {id} do not match: expected {expected}, got {actual}")]
    EdgeMismatch { id: String, expected: String, actual: String },
    #[error("root goals do not match the theorem")]
    RootMismatch,
    #[error("unknown node id {0}")]
    UnknownNode(String),
    #[error("session: {0}")]
    Session(TacticError),
    #[error("final check failed: {0}")]
    Kernel(#[from] KernelError),
}

/// The tactic applied to a singleton node.
#[derive(Debug, Clone)]
pub struct SingletonEdge {
    pub tactic: TacticNode,
    pub span: Span,
    pub synthetic: bool,
    /// Execution order.
    pub order: u32,
    pub children: Vec<SingletonNode>,
    /// Snapshots around the step; present after simplification.
    pub before: Option<Arc<MetavarContext>>,
    pub after: Option<Arc<MetavarContext>>,
}

#[derive(Debug, Clone)]
pub struct SingletonNode {
    pub goal: MvarId,
    pub view: GoalView,
    pub edge: Option<SingletonEdge>,
}

impl SingletonNode {
    fn edges<'a>(&'a self, out: &mut Vec<(&'a SingletonNode, &'a SingletonEdge)>) {
        if let Some(e) = &self.edge {
            out.push((self, e));
            e.children.iter().for_each(|c| c.edges(out));
        }
    }

    /// All edges of the subtree, in execution order.
    pub fn edges_in_order(&self) -> Vec<(&SingletonNode, &SingletonEdge)> {
        let mut out = Vec::new();
        self.edges(&mut out);
        out.sort_by_key(|(_, e)| e.order);
        out
    }

    pub fn size(&self) -> usize {
        1 + self.edge.as_ref().map_or(0, |e| e.children.iter().map(SingletonNode::size).sum())
    }
}

#[derive(Debug, Clone)]
pub struct SingletonTree {
    pub start: ProofState,
    pub root: SingletonNode,
}

/// The state a `by` block of `thm` starts from: the theorem goal itself, or
/// the goal spawned for block `index` of a term proof.
pub fn block_root(env: Arc<Environment>, thm: &TheoremDecl, index: usize) -> Result<ProofState, TacticError> {
    let s = new_session(env, thm)?;
    match &thm.proof {
        ProofBody::Tactic(_) => Ok(s),
        ProofBody::Term(e) => {
            let exact = TacticNode::new(TacticKind::Exact(e.mask_by_blocks()), Span::default());
            let o = apply_tactic(&s, &exact, &TacticConfig::default())?;
            let g = *o
                .state
                .goals
                .get(index)
                .ok_or_else(|| TacticError::Failed(format!("no by block {index}")))?;
            Ok(o.state.with_goals(vec![g]))
        }
    }
}

/// Scripts of the top-level `by` blocks of a theorem, in source order.
pub fn block_scripts(thm: &TheoremDecl) -> Vec<&ByBlock> {
    thm.by_blocks()
}

fn extraction_config() -> TacticConfig {
    TacticConfig::default()
}

/// Runs `script` from `start` and connects each goal to the goals its
/// tactic produced. Combinators are resolved at runtime into per-goal edges.
pub fn build_singleton_tree(start: &ProofState, script: &[TacticNode]) -> Result<SingletonTree, TreeError> {
    let run = run_script(start, script, &extraction_config());
    if let Some(f) = run.failure {
        return Err(TreeError::Script { index: f.index, span: f.span, error: f.error });
    }
    let trace = run.trace();
    let by_goal: HashMap<MvarId, &crate::tactics::Step> = trace.iter().map(|s| (s.goal, s)).collect();
    let last = run.last().mctx.clone();
    fn node(g: MvarId, by_goal: &HashMap<MvarId, &crate::tactics::Step>, mctx: &MetavarContext) -> SingletonNode {
        match by_goal.get(&g) {
            None => SingletonNode { goal: g, view: GoalView::of(mctx, g), edge: None },
            Some(s) => SingletonNode {
                goal: g,
                view: s.view.clone(),
                edge: Some(SingletonEdge {
                    tactic: s.tactic.clone(),
                    span: s.tactic.span,
                    synthetic: s.synthetic,
                    order: s.seq,
                    children: s.produced.iter().map(|c| node(*c, by_goal, mctx)).collect(),
                    before: None,
                    after: None,
                }),
            },
        }
    }
    let root = node(start.goals[0], &by_goal, &last);
    Ok(SingletonTree { start: start.clone(), root })
}

fn mask_tactic(t: &TacticNode) -> TacticNode {
    let kind = match &t.kind {
        TacticKind::Exact(e) => TacticKind::Exact(e.mask_by_blocks()),
        TacticKind::Apply(e) => TacticKind::Apply(e.mask_by_blocks()),
        TacticKind::Have { name, ty, value } => TacticKind::Have {
            name: name.clone(),
            ty: ty.as_ref().map(Expr::mask_by_blocks),
            value: value.mask_by_blocks(),
        },
        k => k.clone(),
    };
    TacticNode::new(kind, t.span)
}

fn identifiers(text: &str) -> HashSet<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '.' || c == '\''))
        .flat_map(|w| {
            // `h.1` refers to `h`
            let head = w.split('.').next().unwrap_or("").to_string();
            [w.to_string(), head]
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// The simple tactics one edge becomes; empty means the edge is dropped.
fn simple_pieces(edge: &SingletonEdge) -> Vec<(TacticNode, bool, Span)> {
    let synth_span = Span::empty_at(edge.span.start);
    let split = |rules: &[RwRule], at: &Option<String>, keep: bool| -> Vec<(TacticNode, bool, Span)> {
        if keep && rules.len() == 1 {
            let t = TacticNode::new(TacticKind::Rw { rules: rules.to_vec(), at: at.clone() }, edge.span);
            return vec![(t, edge.synthetic, edge.span)];
        }
        rules
            .iter()
            .map(|r| {
                let t = TacticNode::new(TacticKind::Rw { rules: vec![r.clone()], at: at.clone() }, synth_span);
                (t, true, synth_span)
            })
            .collect()
    };
    match &edge.tactic.kind {
        TacticKind::Case { names, body: None, .. } if edge.synthetic => {
            let mut used = HashSet::new();
            for c in &edge.children {
                for (_, e) in c.edges_in_order() {
                    used.extend(identifiers(&render_tactic(&e.tactic)));
                }
            }
            if names.iter().any(|n| n != "_" && used.contains(n)) {
                vec![(edge.tactic.clone(), true, synth_span)]
            } else {
                vec![]
            }
        }
        TacticKind::Rw { rules, at } => split(rules, at, true),
        TacticKind::Rwa { rules, at } => {
            let mut out = split(rules, at, false);
            out.push((TacticNode::new(TacticKind::Assumption, synth_span), true, synth_span));
            out
        }
        _ => vec![(mask_tactic(&edge.tactic), edge.synthetic, edge.span)],
    }
}

struct Replayed {
    goal: MvarId,
    view: GoalView,
    tactic: TacticNode,
    span: Span,
    synthetic: bool,
    order: u32,
    produced: Vec<MvarId>,
    before: Arc<MetavarContext>,
    after: Arc<MetavarContext>,
}

/// Applies the simplification rules and replays the result so that every
/// goal and view reflects the simplified tactics.
pub fn simplify_tactics(tree: &SingletonTree) -> Result<SingletonTree, TreeError> {
    let cfg = extraction_config();
    let mut map: HashMap<MvarId, MvarId> = HashMap::new();
    map.insert(tree.root.goal, tree.start.goals[0]);
    let mut latest = tree.start.clone();
    let mut steps: Vec<Replayed> = Vec::new();
    for (node, edge) in tree.root.edges_in_order() {
        let Some(&g) = map.get(&node.goal) else { continue };
        if latest.mctx.is_assigned(g) {
            continue;
        }
        let pieces = simple_pieces(edge);
        if pieces.is_empty() {
            if let Some(c) = edge.children.first() {
                map.insert(c.goal, g);
            }
            continue;
        }
        let mut cur = vec![g];
        for (t, synthetic, span) in pieces {
            let Some(&main) = cur.first() else { break };
            let st = latest.with_goals(vec![main]);
            let o = apply_tactic(&st, &t, &cfg).map_err(|error| TreeError::Simplify { span: edge.span, error })?;
            steps.push(Replayed {
                goal: main,
                view: GoalView::of(&st.mctx, main),
                tactic: t,
                span,
                synthetic,
                order: steps.len() as u32,
                produced: o.state.goals.clone(),
                before: st.mctx.clone(),
                after: o.state.mctx.clone(),
            });
            cur = o.state.goals.clone();
            latest = o.state;
        }
        if cur.len() == edge.children.len() {
            for (c, n) in edge.children.iter().zip(&cur) {
                map.insert(c.goal, *n);
            }
        } else if !cur.is_empty() {
            return Err(TreeError::Simplify {
                span: edge.span,
                error: TacticError::Failed(format!(
                    "simplified tactic produced {} goals instead of {}",
                    cur.len(),
                    edge.children.len()
                )),
            });
        }
    }
    let by_goal: HashMap<MvarId, &Replayed> = steps.iter().map(|s| (s.goal, s)).collect();
    fn node(g: MvarId, by_goal: &HashMap<MvarId, &Replayed>, mctx: &MetavarContext) -> SingletonNode {
        match by_goal.get(&g) {
            None => SingletonNode { goal: g, view: GoalView::of(mctx, g), edge: None },
            Some(s) => SingletonNode {
                goal: g,
                view: s.view.clone(),
                edge: Some(SingletonEdge {
                    tactic: s.tactic.clone(),
                    span: s.span,
                    synthetic: s.synthetic,
                    order: s.order,
                    children: s.produced.iter().map(|c| node(*c, by_goal, mctx)).collect(),
                    before: Some(s.before.clone()),
                    after: Some(s.after.clone()),
                }),
            },
        }
    }
    let root = node(tree.start.goals[0], &by_goal, &latest.mctx);
    Ok(SingletonTree { start: tree.start.clone(), root })
}

/// A tactic edge of a proof tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEdge {
    pub tactic_string: String,
    pub span: Span,
    pub children: Vec<String>,
    pub tactic_depends_on: Vec<String>,
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProofTreeNode {
    pub id: String,
    pub goals: Vec<GoalView>,
    pub tactic: Option<TreeEdge>,
    pub proof_size: usize,
    pub proof_depth: usize,
}

/// Nodes in pre-order; the first is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofTree {
    pub nodes: Vec<ProofTreeNode>,
}

impl ProofTree {
    pub fn root(&self) -> &ProofTreeNode {
        &self.nodes[0]
    }

    pub fn get(&self, id: &str) -> Option<&ProofTreeNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Number of tactic edges.
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.tactic.is_some()).count()
    }

    /// Tactic strings in pre-order.
    pub fn tactics(&self) -> Vec<&str> {
        self.nodes.iter().filter_map(|n| n.tactic.as_ref().map(|t| t.tactic_string.as_str())).collect()
    }
}

struct Merger<'a> {
    edges: HashMap<MvarId, &'a SingletonEdge>,
    nodes: Vec<ProofTreeNode>,
    /// Goal mvars of each node created so far.
    goals_of: Vec<Vec<MvarId>>,
    per_depth: HashMap<usize, usize>,
}

impl<'a> Merger<'a> {
    fn node(&mut self, comp: Vec<MvarId>, mctx: &MetavarContext, depth: usize) -> Result<usize, TreeError> {
        let k = self.per_depth.entry(depth).or_insert(0);
        let id = format!("t{depth}.{k}");
        *k += 1;
        let main = comp.iter().filter_map(|g| self.edges.get(g).map(|e| (e.order, *g))).min();
        let Some((_, a)) = main else {
            let goals = comp.iter().map(|g| GoalView::of(mctx, *g)).collect();
            self.nodes.push(ProofTreeNode { id, goals, tactic: None, proof_size: 0, proof_depth: 0 });
            self.goals_of.push(comp);
            return Ok(self.nodes.len() - 1);
        };
        let edge = self.edges[&a];
        let (Some(before), Some(after)) = (edge.before.clone(), edge.after.clone()) else {
            return Err(TreeError::NotSimplified);
        };
        let mut ordered = vec![a];
        ordered.extend(comp.iter().copied().filter(|g| *g != a));
        let goals = ordered.iter().map(|g| GoalView::of(&before, *g)).collect();
        let idx = self.nodes.len();
        self.nodes.push(ProofTreeNode { id, goals, tactic: None, proof_size: 0, proof_depth: 0 });
        self.goals_of.push(ordered.clone());

        // provenance: earlier nodes whose goals this edge's assignments touch
        let new_ids = &after.log()[before.log().len()..];
        let mut touched: HashSet<MvarId> = new_ids.iter().copied().collect();
        for m in new_ids {
            if let Some(v) = after.assignment(*m) {
                touched.extend(v.mvars());
            }
        }
        let depends: Vec<String> = (0..idx)
            .filter(|i| self.goals_of[*i].iter().any(|g| touched.contains(g)))
            .map(|i| self.nodes[i].id.clone())
            .collect();

        let mut next: Vec<MvarId> = Vec::new();
        for g in edge.children.iter().map(|c| c.goal).chain(ordered[1..].iter().copied()) {
            if !after.is_assigned(g) && !next.contains(&g) {
                next.push(g);
            }
        }
        let mut children = Vec::new();
        for c in coupling_components(&after, &next) {
            let ci = self.node(c, &after, depth + 1)?;
            children.push(self.nodes[ci].id.clone());
        }
        self.nodes[idx].tactic = Some(TreeEdge {
            tactic_string: render_tactic(&edge.tactic),
            span: edge.span,
            children,
            tactic_depends_on: depends,
            synthetic: edge.synthetic,
        });
        Ok(idx)
    }
}

/// Groups sibling goals that share metavariables into multi-goal nodes.
pub fn merge_coupled_siblings(tree: &SingletonTree) -> Result<ProofTree, TreeError> {
    let mut edges = HashMap::new();
    for (n, e) in tree.root.edges_in_order() {
        edges.insert(n.goal, e);
    }
    let mut m = Merger { edges, nodes: Vec::new(), goals_of: Vec::new(), per_depth: HashMap::new() };
    let comps = coupling_components(&tree.start.mctx, &tree.start.goals);
    for c in comps {
        m.node(c, &tree.start.mctx, 0)?;
    }
    let mut out = ProofTree { nodes: m.nodes };
    annotate_metrics(&mut out);
    Ok(out)
}

/// Fills in `proof_size` (tactic edges in the subtree) and `proof_depth`
/// (longest edge chain to a leaf).
pub fn annotate_metrics(tree: &mut ProofTree) {
    let index: HashMap<String, usize> = tree.nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
    fn go(i: usize, tree: &mut ProofTree, index: &HashMap<String, usize>) -> (usize, usize) {
        let children: Vec<usize> = match &tree.nodes[i].tactic {
            None => {
                tree.nodes[i].proof_size = 0;
                tree.nodes[i].proof_depth = 0;
                return (0, 0);
            }
            Some(t) => t.children.iter().filter_map(|c| index.get(c).copied()).collect(),
        };
        let mut size = 1;
        let mut depth = 0;
        for c in children {
            let (s, d) = go(c, tree, index);
            size += s;
            depth = depth.max(d);
        }
        tree.nodes[i].proof_size = size;
        tree.nodes[i].proof_depth = depth + 1;
        (size, depth + 1)
    }
    if !tree.nodes.is_empty() {
        go(0, tree, &index);
    }
}

/// Goal list text with metavariable names numbered by first occurrence.
pub fn normalized_goals(goals: &[GoalView]) -> String {
    let text: Vec<String> = goals.iter().map(GoalView::render).collect();
    let text = text.join("\n\n");
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut out = String::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '?' && chars.get(i + 1) == Some(&'m') && chars.get(i + 2) == Some(&'.') {
            let mut j = i + 3;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let name: String = chars[i..j].iter().collect();
            let n = names.len();
            let k = *names.entry(name).or_insert(n);
            out.push_str(&format!("?_{k}"));
            i = j;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// `goals` with the goal at `i` moved to the front.
fn front(goals: &[MvarId], i: usize) -> Vec<MvarId> {
    let mut v = vec![goals[i]];
    v.extend(goals.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| *g));
    v
}

fn matching_order(state: &ProofState, goals: &[MvarId], want: &[GoalView]) -> Option<Vec<MvarId>> {
    if goals.len() != want.len() {
        return None;
    }
    let target = normalized_goals(want);
    (0..goals.len()).map(|i| front(goals, i)).find(|order| {
        let views: Vec<GoalView> = order.iter().map(|g| GoalView::of(&state.mctx, *g)).collect();
        normalized_goals(&views) == target
    })
}

/// Replays every edge of `tree` from `start` and checks that each node's
/// children are the factorized outcome and that every branch is closed.
pub fn verify_tree(start: &ProofState, tree: &ProofTree) -> Result<CheckStats, TreeError> {
    let root = tree.root();
    let order = matching_order(start, &start.goals, &root.goals).ok_or(TreeError::RootMismatch)?;
    let mut latest = start.with_goals(vec![]);
    let mut stats = CheckStats::default();
    verify_node(tree, root, order, &mut latest, &mut stats)?;
    if !latest.goals.is_empty() {
        return Err(TreeError::RootMismatch);
    }
    // goals of sibling `by` blocks in a term proof stay open
    let others: Vec<MvarId> =
        start.mctx.unassigned_mvars(&start.proof_term()).into_iter().filter(|m| !start.goals.contains(m)).collect();
    if others.is_empty() {
        latest.verify(&mut stats)?;
    } else {
        let term = latest.proof_term();
        check_partial_proof(latest.env(), &latest.mctx, &term, &latest.root.statement(), &others, &mut stats)?;
    }
    Ok(stats)
}

fn verify_node(
    tree: &ProofTree,
    node: &ProofTreeNode,
    goals: Vec<MvarId>,
    latest: &mut ProofState,
    stats: &mut CheckStats,
) -> Result<(), TreeError> {
    let Some(edge) = &node.tactic else {
        return Err(TreeError::UnprovenLeaf(node.id.clone()));
    };
    let tactic = parse_tactic(&edge.tactic_string)
        .map_err(|e| TreeError::TacticFailed { id: node.id.clone(), error: e.into() })?;
    if matches!(tactic.kind, TacticKind::Sorry) {
        return Err(TreeError::UnprovenLeaf(node.id.clone()));
    }
    let st = latest.with_goals(goals);
    let o = apply_tactic(&st, &tactic, &extraction_config())
        .map_err(|error| TreeError::TacticFailed { id: node.id.clone(), error })?;
    stats.add(o.stats);
    *latest = o.state.with_goals(vec![]);
    let comps = coupling_components(&o.state.mctx, &o.state.goals);
    let show = |c: &[MvarId]| normalized_goals(&c.iter().map(|g| GoalView::of(&o.state.mctx, *g)).collect::<Vec<_>>());
    if comps.len() != edge.children.len() {
        return Err(TreeError::EdgeMismatch {
            id: node.id.clone(),
            expected: format!("{} children", edge.children.len()),
            actual: format!("{} children", comps.len()),
        });
    }
    let mut plan = Vec::new();
    for (cid, comp) in edge.children.iter().zip(&comps) {
        let child = tree.get(cid).ok_or_else(|| TreeError::UnknownNode(cid.clone()))?;
        let order = matching_order(&o.state, comp, &child.goals).ok_or_else(|| TreeError::EdgeMismatch {
            id: node.id.clone(),
            expected: normalized_goals(&child.goals),
            actual: show(comp),
        })?;
        plan.push((child, order));
    }
    for (child, order) in plan {
        verify_node(tree, child, order, latest, stats)?;
    }
    Ok(())
}

/// The whole pipeline for one `by` block, verified.
pub fn extract_block(env: Arc<Environment>, thm: &TheoremDecl, index: usize) -> Result<ProofTree, TreeError> {
    let blocks = thm.by_blocks();
    let block = blocks.get(index).ok_or_else(|| TreeError::Session(TacticError::Failed("no such block".into())))?;
    let start = block_root(env.clone(), thm, index).map_err(TreeError::Session)?;
    let singleton = build_singleton_tree(&start, &block.tactics)?;
    let simple = simplify_tactics(&singleton)?;
    let tree = merge_coupled_siblings(&simple)?;
    let fresh = block_root(env, thm, index).map_err(TreeError::Session)?;
    verify_tree(&fresh, &tree)?;
    Ok(tree)
}
