use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::factorize::StateKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Open,
    Proven,
    Failed,
    BudgetExceeded,
}

impl Status {
    fn settled(self) -> bool {
        matches!(self, Status::Proven | Status::Failed)
    }
}

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone)]
pub struct OrNode<S> {
    pub key: StateKey,
    pub payload: S,
    pub status: Status,
    /// Outgoing edges in expansion order.
    pub edges: Vec<EdgeId>,
    /// Incoming edges.
    pub parents: Vec<EdgeId>,
    /// Smallest depth at which the node was reached.
    pub depth: usize,
    pub expanded: bool,
    pub priority: f64,
    pub visits: u32,
}

#[derive(Debug, Clone)]
pub struct AndEdge {
    pub parent: NodeId,
    pub tactic: String,
    pub score: f64,
    pub children: Vec<NodeId>,
    pub status: Status,
    /// Number of status changes, for auditing propagation.
    pub changes: u32,
}

/// An AND-OR graph: OR nodes choose among tactic edges, an edge needs all
/// of its child nodes. Nodes with equal keys are shared unless merging is
/// off.
#[derive(Debug, Clone)]
pub struct AndOrGraph<S> {
    pub nodes: Vec<OrNode<S>>,
    pub edges: Vec<AndEdge>,
    index: HashMap<StateKey, NodeId>,
    pub merge: bool,
    pub transpositions: u64,
}

impl<S> AndOrGraph<S> {
    pub fn new(merge: bool) -> Self {
        AndOrGraph { nodes: Vec::new(), edges: Vec::new(), index: HashMap::new(), merge, transpositions: 0 }
    }

    pub fn node(&self, id: NodeId) -> &OrNode<S> {
        &self.nodes[id]
    }

    pub fn edge(&self, id: EdgeId) -> &AndEdge {
        &self.edges[id]
    }

    pub fn find(&self, key: &StateKey) -> Option<NodeId> {
        self.index.get(key).copied()
    }

    /// Returns the node for `key`, creating it from `payload` if needed.
    /// The flag is true when an existing node was reused.
    pub fn intern(&mut self, key: StateKey, depth: usize, payload: impl FnOnce() -> S) -> (NodeId, bool) {
        if self.merge {
            if let Some(&id) = self.index.get(&key) {
                self.transpositions += 1;
                let n = &mut self.nodes[id];
                n.depth = n.depth.min(depth);
                return (id, true);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(OrNode {
            key,
            payload: payload(),
            status: Status::Open,
            edges: vec![],
            parents: vec![],
            depth,
            expanded: false,
            priority: 0.0,
            visits: 0,
        });
        self.index.entry(key).or_insert(id);
        (id, false)
    }

    pub fn add_edge(&mut self, parent: NodeId, tactic: impl Into<String>, score: f64, children: Vec<NodeId>) -> EdgeId {
        let id = self.edges.len();
        for c in &children {
            self.nodes[*c].parents.push(id);
        }
        self.edges.push(AndEdge { parent, tactic: tactic.into(), score, children, status: Status::Open, changes: 0 });
        self.nodes[parent].edges.push(id);
        self.refresh_edge(id);
        id
    }

    pub fn mark_expanded(&mut self, id: NodeId) {
        self.nodes[id].expanded = true;
        self.propagate(id);
    }

    fn edge_rule(&self, e: EdgeId) -> Status {
        let kids = &self.edges[e].children;
        if kids.iter().all(|c| self.nodes[*c].status == Status::Proven) {
            Status::Proven
        } else if kids.iter().any(|c| self.nodes[*c].status == Status::Failed) {
            Status::Failed
        } else {
            Status::Open
        }
    }

    fn node_rule(&self, n: NodeId) -> Status {
        let node = &self.nodes[n];
        let edges = node.edges.iter().map(|e| self.edges[*e].status);
        if edges.clone().any(|s| s == Status::Proven) {
            Status::Proven
        } else if node.expanded && edges.clone().all(|s| s == Status::Failed) {
            Status::Failed
        } else {
            Status::Open
        }
    }

    fn refresh_edge(&mut self, e: EdgeId) -> bool {
        let old = self.edges[e].status;
        let new = self.edge_rule(e);
        if old.settled() || old == new {
            return false;
        }
        self.edges[e].status = new;
        self.edges[e].changes += 1;
        let parent = self.edges[e].parent;
        self.propagate(parent);
        true
    }

    /// Re-evaluates `from` and everything above it until nothing changes.
    /// Settled statuses never change again.
    pub fn propagate(&mut self, from: NodeId) {
        let mut work = vec![from];
        while let Some(n) = work.pop() {
            let old = self.nodes[n].status;
            let new = self.node_rule(n);
            if old.settled() || old == new {
                continue;
            }
            self.nodes[n].status = new;
            for e in self.nodes[n].parents.clone() {
                let old = self.edges[e].status;
                let new = self.edge_rule(e);
                if !old.settled() && old != new {
                    self.edges[e].status = new;
                    self.edges[e].changes += 1;
                    work.push(self.edges[e].parent);
                }
            }
        }
    }

    /// Keys of `id` and every node above it.
    pub fn ancestor_keys(&self, id: NodeId) -> HashSet<StateKey> {
        let mut seen = HashSet::new();
        let mut keys = HashSet::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            keys.insert(self.nodes[n].key);
            for e in &self.nodes[n].parents {
                stack.push(self.edges[*e].parent);
            }
        }
        keys
    }

    /// Marks every undecided node as out of budget.
    pub fn finalize(&mut self) {
        for n in &mut self.nodes {
            if n.status == Status::Open {
                n.status = Status::BudgetExceeded;
            }
        }
        for e in &mut self.edges {
            if e.status == Status::Open {
                e.status = Status::BudgetExceeded;
            }
        }
    }

    /// The first proven edge of a proven node, in expansion order.
    pub fn chosen_edge(&self, id: NodeId) -> Option<EdgeId> {
        self.nodes[id].edges.iter().copied().find(|e| self.edges[*e].status == Status::Proven)
    }

    /// Fewest tactic edges in any proof of `id`.
    pub fn min_proof_size(&self, id: NodeId) -> Option<usize> {
        fn go<S>(g: &AndOrGraph<S>, n: NodeId, memo: &mut HashMap<NodeId, Option<usize>>, active: &mut HashSet<NodeId>) -> Option<usize> {
            if let Some(v) = memo.get(&n) {
                return *v;
            }
            if g.nodes[n].status != Status::Proven || !active.insert(n) {
                return None;
            }
            let mut best: Option<usize> = None;
            for e in &g.nodes[n].edges {
                let edge = &g.edges[*e];
                if edge.status != Status::Proven {
                    continue;
                }
                let mut total = Some(1usize);
                for c in &edge.children {
                    total = match (total, go(g, *c, memo, active)) {
                        (Some(t), Some(s)) => Some(t + s),
                        _ => None,
                    };
                }
                if let Some(t) = total {
                    best = Some(best.map_or(t, |b| b.min(t)));
                }
            }
            active.remove(&n);
            memo.insert(n, best);
            best
        }
        go(self, id, &mut HashMap::new(), &mut HashSet::new())
    }
}
