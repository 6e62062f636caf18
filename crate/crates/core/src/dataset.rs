//! JSONL proof-tree records: typed schema, validation, round-trip, stats.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::prelude::file_env;
use crate::syntax::{parse_file, parse_tactic, Declaration, Span};
use crate::tactics::{GoalView, HypView};
use crate::treebuild::{extract_block, ProofTree, ProofTreeNode, TreeEdge};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub start: u64,
    pub finish: u64,
}

impl From<Span> for SpanRecord {
    fn from(s: Span) -> Self {
        SpanRecord { start: s.start as u64, finish: s.finish as u64 }
    }
}

impl From<&SpanRecord> for Span {
    fn from(s: &SpanRecord) -> Self {
        Span { start: s.start as usize, finish: s.finish as usize }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorRecord {
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    #[serde(rename = "type")]
    pub ty: String,
    pub user_name: String,
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalRecord {
    pub tag: Option<String>,
    #[serde(rename = "type")]
    pub ty: String,
    pub hypotheses: Vec<HypothesisRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRecord {
    pub goals: Vec<GoalRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TacticRecord {
    pub tactic_string: String,
    pub span: SpanRecord,
    pub children: Vec<String>,
    pub tactic_depends_on: Vec<String>,
    /// Extension: the edge was inserted by simplification.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofNodeRecord {
    pub id: String,
    pub proof_size: u64,
    pub proof_depth: u64,
    pub tactic: TacticRecord,
    pub state: StateRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub root: ProofNodeRecord,
    /// Extension: the non-root nodes, in pre-order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<ProofNodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeEntry {
    Error(ErrorRecord),
    Tree(TreeRecord),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByBlockRecord {
    pub tree: TreeEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremRecord {
    pub span: SpanRecord,
    pub name: Option<String>,
    pub context: Vec<String>,
    pub by_blocks: Vec<ByBlockRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TheoremEntry {
    Error(ErrorRecord),
    Theorem(TheoremRecord),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub path: String,
    pub imports: Vec<String>,
    pub theorems: Vec<TheoremEntry>,
}

/// A schema violation at a JSON path such as `theorems[0].span.start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: malformed JSON: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: schema violation at {}", violations.first().map(|v| v.to_string()).unwrap_or_default())]
    Schema { line: usize, violations: Vec<Violation> },
    #[error("invalid record: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// conversion

fn goal_record(g: &GoalView) -> GoalRecord {
    GoalRecord {
        tag: g.tag.clone(),
        ty: g.target.clone(),
        hypotheses: g
            .hypotheses
            .iter()
            .map(|h| HypothesisRecord { ty: h.ty.clone(), user_name: h.user_name.clone(), value: h.value.clone() })
            .collect(),
    }
}

fn goal_view(g: &GoalRecord) -> GoalView {
    GoalView {
        tag: g.tag.clone(),
        target: g.ty.clone(),
        hypotheses: g
            .hypotheses
            .iter()
            .map(|h| HypView { user_name: h.user_name.clone(), ty: h.ty.clone(), value: h.value.clone() })
            .collect(),
        mvar: String::new(),
    }
}

fn node_record(n: &ProofTreeNode) -> Result<ProofNodeRecord, DatasetError> {
    let e = n.tactic.as_ref().ok_or_else(|| DatasetError::Invalid(format!("node {} has no tactic", n.id)))?;
    Ok(ProofNodeRecord {
        id: n.id.clone(),
        proof_size: n.proof_size as u64,
        proof_depth: n.proof_depth as u64,
        tactic: TacticRecord {
            tactic_string: e.tactic_string.clone(),
            span: e.span.into(),
            children: e.children.clone(),
            tactic_depends_on: e.tactic_depends_on.clone(),
            synthetic: e.synthetic,
        },
        state: StateRecord { goals: n.goals.iter().map(goal_record).collect() },
    })
}

fn tree_node(r: &ProofNodeRecord) -> ProofTreeNode {
    ProofTreeNode {
        id: r.id.clone(),
        goals: r.state.goals.iter().map(goal_view).collect(),
        tactic: Some(TreeEdge {
            tactic_string: r.tactic.tactic_string.clone(),
            span: (&r.tactic.span).into(),
            children: r.tactic.children.clone(),
            tactic_depends_on: r.tactic.tactic_depends_on.clone(),
            synthetic: r.tactic.synthetic,
        }),
        proof_size: r.proof_size as usize,
        proof_depth: r.proof_depth as usize,
    }
}

impl TreeRecord {
    pub fn from_tree(tree: &ProofTree) -> Result<TreeRecord, DatasetError> {
        let mut nodes = tree.nodes.iter().map(node_record).collect::<Result<Vec<_>, _>>()?;
        if nodes.is_empty() {
            return Err(DatasetError::Invalid("empty tree".into()));
        }
        let root = nodes.remove(0);
        Ok(TreeRecord { root, nodes })
    }

    pub fn to_tree(&self) -> ProofTree {
        let mut nodes = vec![tree_node(&self.root)];
        nodes.extend(self.nodes.iter().map(tree_node));
        ProofTree { nodes }
    }

    pub fn all_nodes(&self) -> impl Iterator<Item = &ProofNodeRecord> {
        std::iter::once(&self.root).chain(&self.nodes)
    }
}

// ---------------------------------------------------------------------------
// extraction

/// Converts every `by` block of every theorem in a source file. Failures
/// become error records; nothing aborts the file.
pub fn extract_source(path: &str, text: &str) -> SampleRecord {
    let file = match parse_file(text, path) {
        Ok(f) => f,
        Err(e) => {
            return SampleRecord {
                path: path.to_string(),
                imports: vec![],
                theorems: vec![TheoremEntry::Error(ErrorRecord { error: e.to_string() })],
            }
        }
    };
    let (env, load_errors) = file_env(&file);
    let mut theorems = Vec::new();
    for (i, d) in file.declarations.iter().enumerate() {
        match d {
            Declaration::Error { message, .. } => {
                theorems.push(TheoremEntry::Error(ErrorRecord { error: message.clone() }));
            }
            Declaration::Theorem(thm) => {
                if let Some((_, e)) = load_errors.iter().find(|(j, _)| *j == i) {
                    theorems.push(TheoremEntry::Error(ErrorRecord { error: e.to_string() }));
                    continue;
                }
                let by_blocks = (0..thm.by_blocks().len())
                    .map(|b| {
                        let tree = match extract_block(env.clone(), thm, b) {
                            Ok(t) => match TreeRecord::from_tree(&t) {
                                Ok(r) => TreeEntry::Tree(r),
                                Err(e) => TreeEntry::Error(ErrorRecord { error: e.to_string() }),
                            },
                            Err(e) => TreeEntry::Error(ErrorRecord { error: e.to_string() }),
                        };
                        ByBlockRecord { tree }
                    })
                    .collect();
                theorems.push(TheoremEntry::Theorem(TheoremRecord {
                    span: thm.span.into(),
                    name: thm.name.clone(),
                    context: thm.open_namespaces.clone(),
                    by_blocks,
                }));
            }
            _ => {}
        }
    }
    SampleRecord { path: path.to_string(), imports: file.imports.clone(), theorems }
}

// ---------------------------------------------------------------------------
// emit / load

pub fn emit_jsonl<W: Write>(records: &[SampleRecord], mut out: W) -> Result<(), DatasetError> {
    for r in records {
        let v = serde_json::to_value(r).map_err(|e| DatasetError::Invalid(e.to_string()))?;
        let errs = validate_value(&v);
        if let Some(first) = errs.first() {
            return Err(DatasetError::Invalid(first.to_string()));
        }
        let line = serde_json::to_string(r).map_err(|e| DatasetError::Invalid(e.to_string()))?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(records: &[SampleRecord]) -> Result<String, DatasetError> {
    let mut buf = Vec::new();
    emit_jsonl(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn load_jsonl<R: BufRead>(input: R) -> Result<Vec<SampleRecord>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let v: Value =
            serde_json::from_str(&line).map_err(|e| DatasetError::Malformed { line: n, message: e.to_string() })?;
        let violations = validate_value(&v);
        if !violations.is_empty() {
            return Err(DatasetError::Schema { line: n, violations });
        }
        let r = serde_json::from_value(v).map_err(|e| DatasetError::Malformed { line: n, message: e.to_string() })?;
        out.push(r);
    }
    Ok(out)
}

pub fn from_jsonl(text: &str) -> Result<Vec<SampleRecord>, DatasetError> {
    load_jsonl(text.as_bytes())
}

// ---------------------------------------------------------------------------
// validation

pub fn validate(record: &SampleRecord) -> Result<(), Vec<Violation>> {
    let v = serde_json::to_value(record).expect("records serialize");
    let errs = validate_value(&v);
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Structural check of one sample line against the grammar.
pub fn validate_value(v: &Value) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    c.sample(v, "");
    c.out
}

struct Checker {
    out: Vec<Violation>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Checker {
    fn fail(&mut self, path: &str, message: impl Into<String>) {
        self.out.push(Violation { path: path.to_string(), message: message.into() });
    }

    fn object<'v>(&mut self, v: &'v Value, path: &str, required: &[&str], optional: &[&str]) -> Option<&'v Map<String, Value>> {
        let Some(m) = v.as_object() else {
            self.fail(path, "expected an object");
            return None;
        };
        for k in required {
            if !m.contains_key(*k) {
                self.fail(&join(path, k), "missing field");
            }
        }
        for k in m.keys() {
            if !required.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
                self.fail(&join(path, k), "unknown field");
            }
        }
        Some(m)
    }

    fn string(&mut self, m: &Map<String, Value>, path: &str, key: &str, nullable: bool) {
        match m.get(key) {
            None => {}
            Some(Value::String(_)) => {}
            Some(Value::Null) if nullable => {}
            Some(_) => self.fail(&join(path, key), if nullable { "expected a string or null" } else { "expected a string" }),
        }
    }

    fn strings(&mut self, m: &Map<String, Value>, path: &str, key: &str) {
        let Some(v) = m.get(key) else { return };
        let p = join(path, key);
        match v.as_array() {
            None => self.fail(&p, "expected a list"),
            Some(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if !x.is_string() {
                        self.fail(&format!("{p}[{i}]"), "expected a string");
                    }
                }
            }
        }
    }

    fn int(&mut self, m: &Map<String, Value>, path: &str, key: &str) {
        let Some(v) = m.get(key) else { return };
        if v.as_u64().is_none() {
            self.fail(&join(path, key), "expected a non-negative integer");
        }
    }

    fn list<'v>(&mut self, m: &'v Map<String, Value>, path: &str, key: &str) -> Vec<(String, &'v Value)> {
        let Some(v) = m.get(key) else { return vec![] };
        let p = join(path, key);
        match v.as_array() {
            None => {
                self.fail(&p, "expected a list");
                vec![]
            }
            Some(xs) => xs.iter().enumerate().map(|(i, x)| (format!("{p}[{i}]"), x)).collect(),
        }
    }

    fn is_error(v: &Value) -> bool {
        v.as_object().is_some_and(|m| m.contains_key("error"))
    }

    fn error(&mut self, v: &Value, path: &str) {
        if let Some(m) = self.object(v, path, &["error"], &[]) {
            self.string(m, path, "error", false);
        }
    }

    fn span(&mut self, v: Option<&Value>, path: &str) {
        let Some(v) = v else { return };
        if let Some(m) = self.object(v, path, &["start", "finish"], &[]) {
            self.int(m, path, "start");
            self.int(m, path, "finish");
            if let (Some(s), Some(f)) = (m.get("start").and_then(Value::as_u64), m.get("finish").and_then(Value::as_u64)) {
                if s > f {
                    self.fail(path, "start exceeds finish");
                }
            }
        }
    }

    fn sample(&mut self, v: &Value, path: &str) {
        let Some(m) = self.object(v, path, &["path", "imports", "theorems"], &[]) else { return };
        self.string(m, path, "path", false);
        self.strings(m, path, "imports");
        for (p, t) in self.list(m, path, "theorems") {
            if Self::is_error(t) {
                self.error(t, &p);
            } else {
                self.theorem(t, &p);
            }
        }
    }

    fn theorem(&mut self, v: &Value, path: &str) {
        let Some(m) = self.object(v, path, &["span", "name", "context", "by_blocks"], &[]) else { return };
        self.span(m.get("span"), &join(path, "span"));
        self.string(m, path, "name", true);
        self.strings(m, path, "context");
        for (p, b) in self.list(m, path, "by_blocks") {
            let Some(bm) = self.object(b, &p, &["tree"], &[]) else { continue };
            let Some(t) = bm.get("tree") else { continue };
            let tp = join(&p, "tree");
            if Self::is_error(t) {
                self.error(t, &tp);
            } else {
                self.tree(t, &tp);
            }
        }
    }

    fn tree(&mut self, v: &Value, path: &str) {
        let Some(m) = self.object(v, path, &["root"], &["nodes"]) else { return };
        let mut nodes = Vec::new();
        if let Some(r) = m.get("root") {
            nodes.push((join(path, "root"), r));
        }
        nodes.extend(self.list(m, path, "nodes"));
        let ids: HashSet<&str> = nodes
            .iter()
            .filter_map(|(_, n)| n.get("id").and_then(Value::as_str))
            .collect();
        if ids.len() != nodes.len() && nodes.iter().all(|(_, n)| n.get("id").is_some_and(Value::is_string)) {
            self.fail(path, "duplicate node ids");
        }
        for (p, n) in nodes {
            self.node(n, &p, &ids);
        }
    }

    fn node(&mut self, v: &Value, path: &str, ids: &HashSet<&str>) {
        let Some(m) = self.object(v, path, &["id", "proof_size", "proof_depth", "tactic", "state"], &[]) else {
            return;
        };
        self.string(m, path, "id", false);
        self.int(m, path, "proof_size");
        self.int(m, path, "proof_depth");
        if let Some(t) = m.get("tactic") {
            let tp = join(path, "tactic");
            if let Some(tm) = self.object(t, &tp, &["tactic_string", "span", "children", "tactic_depends_on"], &["synthetic"]) {
                self.string(tm, &tp, "tactic_string", false);
                self.span(tm.get("span"), &join(&tp, "span"));
                for key in ["children", "tactic_depends_on"] {
                    self.strings(tm, &tp, key);
                    for (p, x) in self.list(tm, &tp, key) {
                        if let Some(s) = x.as_str() {
                            if !ids.contains(s) {
                                self.fail(&p, format!("unknown node id '{s}'"));
                            }
                        }
                    }
                }
                if tm.get("synthetic").is_some_and(|s| !s.is_boolean()) {
                    self.fail(&join(&tp, "synthetic"), "expected a boolean");
                }
            }
        }
        if let Some(s) = m.get("state") {
            let sp = join(path, "state");
            if let Some(sm) = self.object(s, &sp, &["goals"], &[]) {
                for (gp, g) in self.list(sm, &sp, "goals") {
                    self.goal(g, &gp);
                }
            }
        }
    }

    fn goal(&mut self, v: &Value, path: &str) {
        let Some(m) = self.object(v, path, &["tag", "type", "hypotheses"], &[]) else { return };
        self.string(m, path, "tag", true);
        self.string(m, path, "type", false);
        for (hp, h) in self.list(m, path, "hypotheses") {
            if let Some(hm) = self.object(h, &hp, &["type", "user_name", "value"], &[]) {
                self.string(hm, &hp, "type", false);
                self.string(hm, &hp, "user_name", false);
                self.string(hm, &hp, "value", true);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// statistics

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub files: usize,
    pub theorems: usize,
    pub theorem_errors: usize,
    pub by_blocks: usize,
    pub converted: usize,
    pub tree_errors: usize,
    /// Failed conversions over attempted ones (theorem errors count as one
    /// attempt each).
    pub failure_rate: f64,
    pub nodes: usize,
    pub edges: usize,
    pub synthetic_edges: usize,
    pub tactic_kinds: BTreeMap<String, usize>,
    /// Root proof_size -> number of trees.
    pub size_histogram: BTreeMap<u64, usize>,
    /// Root proof_depth -> number of trees.
    pub depth_histogram: BTreeMap<u64, usize>,
}

fn tactic_kind(text: &str) -> String {
    match parse_tactic(text) {
        Ok(t) => t.kind_name().to_string(),
        Err(_) => text.split_whitespace().next().unwrap_or("").to_string(),
    }
}

pub fn corpus_stats(records: &[SampleRecord]) -> CorpusStats {
    let mut s = CorpusStats { files: records.len(), ..CorpusStats::default() };
    for r in records {
        for t in &r.theorems {
            s.theorems += 1;
            let t = match t {
                TheoremEntry::Error(_) => {
                    s.theorem_errors += 1;
                    continue;
                }
                TheoremEntry::Theorem(t) => t,
            };
            for b in &t.by_blocks {
                s.by_blocks += 1;
                let tree = match &b.tree {
                    TreeEntry::Error(_) => {
                        s.tree_errors += 1;
                        continue;
                    }
                    TreeEntry::Tree(tree) => tree,
                };
                s.converted += 1;
                *s.size_histogram.entry(tree.root.proof_size).or_default() += 1;
                *s.depth_histogram.entry(tree.root.proof_depth).or_default() += 1;
                for n in tree.all_nodes() {
                    s.nodes += 1;
                    s.edges += 1;
                    if n.tactic.synthetic {
                        s.synthetic_edges += 1;
                    }
                    *s.tactic_kinds.entry(tactic_kind(&n.tactic.tactic_string)).or_default() += 1;
                }
            }
        }
    }
    let attempts = s.by_blocks + s.theorem_errors;
    if attempts > 0 {
        s.failure_rate = (s.tree_errors + s.theorem_errors) as f64 / attempts as f64;
    }
    s
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "files            {}", self.files)?;
        writeln!(f, "theorems         {}", self.theorems)?;
        writeln!(f, "theorem errors   {}", self.theorem_errors)?;
        writeln!(f, "by blocks        {}", self.by_blocks)?;
        writeln!(f, "converted        {}", self.converted)?;
        writeln!(f, "tree errors      {}", self.tree_errors)?;
        writeln!(f, "failure rate     {:.2}%", self.failure_rate * 100.0)?;
        writeln!(f, "nodes            {}", self.nodes)?;
        writeln!(f, "edges            {}", self.edges)?;
        writeln!(f, "synthetic edges  {}", self.synthetic_edges)?;
        writeln!(f, "tactic kinds")?;
        for (k, n) in &self.tactic_kinds {
            writeln!(f, "  {k:<14} {n}")?;
        }
        writeln!(f, "proof sizes")?;
        for (k, n) in &self.size_histogram {
            writeln!(f, "  {k:<14} {n}")?;
        }
        writeln!(f, "proof depths")?;
        for (k, n) in &self.depth_histogram {
            writeln!(f, "  {k:<14} {n}")?;
        }
        Ok(())
    }
}
