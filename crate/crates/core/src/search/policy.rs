use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tactics::GoalView;

/// What the policy is allowed to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewMode {
    /// Current goals and the tactic prefix.
    White,
    /// Only the theorem statement and the tactic prefix.
    Black,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRequest {
    pub mode: ViewMode,
    /// The initial goal, rendered.
    pub theorem: String,
    /// Rendered goals; empty in black-box mode.
    pub goals: Vec<String>,
    pub prefix: Vec<String>,
    pub k: usize,
}

impl PolicyRequest {
    pub fn white(theorem: &str, goals: &[GoalView], prefix: &[String], k: usize) -> Self {
        PolicyRequest {
            mode: ViewMode::White,
            theorem: theorem.to_string(),
            goals: goals.iter().map(GoalView::render).collect(),
            prefix: prefix.to_vec(),
            k,
        }
    }

    pub fn black(theorem: &str, prefix: &[String], k: usize) -> Self {
        PolicyRequest { mode: ViewMode::Black, theorem: theorem.to_string(), goals: vec![], prefix: prefix.to_vec(), k }
    }

    /// The main goal if visible, else the statement.
    pub fn focus(&self) -> &str {
        match self.mode {
            ViewMode::White => self.goals.first().map(String::as_str).unwrap_or(""),
            ViewMode::Black => &self.theorem,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub text: String,
    pub score: f64,
}

impl Proposal {
    pub fn new(text: impl Into<String>, score: f64) -> Self {
        Proposal { text: text.into(), score }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("policy process: {0}")]
    Process(String),
}

/// Proposes up to `k` tactic texts with scores.
pub trait Policy: Send {
    fn propose(&mut self, req: &PolicyRequest) -> Result<Vec<Proposal>, PolicyError>;

    fn name(&self) -> String;
}

/// Scores for a ranked list: 1, 1/2, 1/3, ...
fn ranked(texts: impl IntoIterator<Item = String>, k: usize) -> Vec<Proposal> {
    texts.into_iter().take(k).enumerate().map(|(i, t)| Proposal::new(t, 1.0 / (i + 1) as f64)).collect()
}

/// Hypotheses `(name, type)` of a rendered goal. Grouped lines such as
/// `a b : Nat` expand to one entry per name.
pub fn rendered_hypotheses(goal: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for line in goal.lines() {
        if line.starts_with('⊢') {
            break;
        }
        if line.starts_with("case ") {
            continue;
        }
        if let Some((names, ty)) = line.split_once(" : ") {
            let ty = ty.split(" := ").next().unwrap_or(ty);
            for n in names.split_whitespace() {
                out.push((n.to_string(), ty.to_string()));
            }
        }
    }
    out
}

/// Rule-based policy: the first rule whose pattern occurs in the focus text
/// supplies the proposals. In black-box mode the focus text is the
/// statement together with the prefix, so rules keyed on intermediate goals
/// never fire.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    pub rules: Vec<(String, Vec<String>)>,
}

impl ScriptedPolicy {
    pub fn new(rules: Vec<(String, Vec<String>)>) -> Self {
        ScriptedPolicy { rules }
    }

    /// One rule per line, `PATTERN => TACTIC`; repeated patterns add
    /// alternatives in order; `*` matches anything; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut rules: Vec<(String, Vec<String>)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (pat, tac) = line.split_once(" => ").ok_or_else(|| format!("line {}: expected 'PATTERN => TACTIC'", i + 1))?;
            let (pat, tac) = (pat.trim().to_string(), tac.trim().to_string());
            match rules.iter_mut().find(|(p, _)| *p == pat) {
                Some((_, ts)) => ts.push(tac),
                None => rules.push((pat, vec![tac])),
            }
        }
        Ok(ScriptedPolicy { rules })
    }

    pub fn lookup(&self, req: &PolicyRequest) -> Vec<String> {
        let text = match req.mode {
            ViewMode::White => req.focus().to_string(),
            ViewMode::Black => format!("{}\n{}", req.theorem, req.prefix.join("\n")),
        };
        self.rules
            .iter()
            .find(|(p, _)| p == "*" || text.contains(p.as_str()))
            .map(|(_, ts)| ts.clone())
            .unwrap_or_default()
    }
}

impl Policy for ScriptedPolicy {
    fn propose(&mut self, req: &PolicyRequest) -> Result<Vec<Proposal>, PolicyError> {
        Ok(ranked(self.lookup(req), req.k))
    }

    fn name(&self) -> String {
        "scripted".into()
    }
}

/// Enumerates a menu of tactics: either a fixed list, or templates
/// instantiated with the hypotheses of the focus goal.
#[derive(Debug, Clone)]
pub struct EnumPolicy {
    fixed: Option<Vec<String>>,
}

impl EnumPolicy {
    pub fn templated() -> Self {
        EnumPolicy { fixed: None }
    }

    pub fn fixed(menu: Vec<String>) -> Self {
        EnumPolicy { fixed: Some(menu) }
    }

    pub fn menu(&self, req: &PolicyRequest) -> Vec<String> {
        match &self.fixed {
            Some(m) => m.clone(),
            None => template_menu(req.focus()),
        }
    }
}

/// The bundled menu for a rendered goal.
pub fn template_menu(goal: &str) -> Vec<String> {
    let mut out: Vec<String> = ["rfl", "assumption", "intro h", "constructor"].iter().map(|s| s.to_string()).collect();
    for (name, ty) in rendered_hypotheses(goal) {
        if name.contains('†') {
            continue;
        }
        let is_eq = ty.contains(" = ");
        out.push(format!("exact {name}"));
        if is_eq {
            out.push(format!("rw [{name}]"));
        }
        out.push(format!("cases {name}"));
        if is_eq {
            out.push(format!("rw [← {name}]"));
        }
        if ty.ends_with("= 0") {
            out.push(format!("exact absurd {name} (Nat.succ_ne_zero _)"));
        }
    }
    out.push("left".into());
    out.push("right".into());
    // only usable when library search is allowed
    out.push("apply?".into());
    out
}

impl Policy for EnumPolicy {
    fn propose(&mut self, req: &PolicyRequest) -> Result<Vec<Proposal>, PolicyError> {
        Ok(ranked(self.menu(req), req.k))
    }

    fn name(&self) -> String {
        "enum".into()
    }
}

/// Uniformly shuffled menu entries with random scores.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    menu: EnumPolicy,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy { menu: EnumPolicy::templated(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn with_menu(seed: u64, menu: EnumPolicy) -> Self {
        RandomPolicy { menu, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn propose(&mut self, req: &PolicyRequest) -> Result<Vec<Proposal>, PolicyError> {
        let mut menu = self.menu.menu(req);
        menu.shuffle(&mut self.rng);
        Ok(menu
            .into_iter()
            .take(req.k)
            .map(|t| {
                let s: f64 = self.rng.gen_range(0.05..1.0);
                Proposal::new(t, s)
            })
            .collect())
    }

    fn name(&self) -> String {
        "random".into()
    }
}
