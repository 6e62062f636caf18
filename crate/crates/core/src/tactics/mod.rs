//! Tactic interpreter and proof sessions.

mod cases;
mod interp;
mod rewrite;
mod session;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elab::ElabError;
use crate::kernel::{pretty, KernelError, LocalContext, MetavarContext, MvarId};
use crate::syntax::{SyntaxError, TacticNode};

pub use session::{
    apply_tactic, new_session, new_session_from_goal, run_script, KernelMode, ProofState,
    ScriptRun, SessionRoot, StepFailure, TacticOutcome, Verdict,
};

/// One hypothesis as shown to users and policies.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HypView {
    pub user_name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub value: Option<String>,
}

/// A rendered goal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoalView {
    pub tag: Option<String>,
    pub target: String,
    pub hypotheses: Vec<HypView>,
    /// Display name of the goal metavariable.
    pub mvar: String,
}

impl GoalView {
    pub fn of(mctx: &MetavarContext, m: MvarId) -> GoalView {
        let d = mctx.decl(m);
        let mut prefix = LocalContext::new();
        let mut hypotheses = Vec::new();
        for h in &d.lctx.decls {
            hypotheses.push(HypView {
                user_name: h.user_name.clone(),
                ty: pretty(&mctx.instantiate(&h.ty), &prefix),
                value: h.value.as_ref().map(|v| pretty(&mctx.instantiate(v), &prefix)),
            });
            prefix.decls.push(h.clone());
        }
        GoalView {
            tag: d.tag.clone(),
            target: pretty(&mctx.instantiate(&d.ty), &d.lctx),
            hypotheses,
            mvar: m.to_string(),
        }
    }

    /// The usual `hyp : type ... ⊢ target` layout.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.tag {
            out.push_str(&format!("case {t}\n"));
        }
        let hs = &self.hypotheses;
        let mut i = 0;
        while i < hs.len() {
            let mut j = i + 1;
            while j < hs.len() && hs[j].ty == hs[i].ty && hs[j].value.is_none() && hs[i].value.is_none() {
                j += 1;
            }
            let names: Vec<&str> = hs[i..j].iter().map(|h| h.user_name.as_str()).collect();
            out.push_str(&format!("{} : {}", names.join(" "), hs[i].ty));
            if let Some(v) = &hs[i].value {
                out.push_str(&format!(" := {v}"));
            }
            out.push('\n');
            i = j;
        }
        out.push_str(&format!("⊢ {}", self.target));
        out
    }
}

/// Execution options.
#[derive(Debug, Clone, PartialEq)]
pub struct TacticConfig {
    /// Tactic kind names that are rejected before execution.
    pub banned: BTreeSet<String>,
    pub allow_sorry: bool,
    /// Lets `exact`/`have` leave unsynthesized holes behind. Only useful to
    /// demonstrate why the final whole-term check is needed.
    pub weak_holes: bool,
    pub kernel_mode: KernelMode,
}

impl Default for TacticConfig {
    fn default() -> Self {
        TacticConfig {
            banned: ["apply?", "exact?", "rw?"].iter().map(|s| s.to_string()).collect(),
            allow_sorry: true,
            weak_holes: false,
            kernel_mode: KernelMode::Incremental,
        }
    }
}

impl TacticConfig {
    /// Configuration for final proofs: no sorry.
    pub fn strict() -> Self {
        TacticConfig { allow_sorry: false, ..Self::default() }
    }

    pub fn allow_library_search(mut self) -> Self {
        for k in ["apply?", "exact?", "rw?"] {
            self.banned.remove(k);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TacticError {
    #[error("tactic '{0}' is banned")]
    Banned(String),
    #[error("no goals to be proved")]
    NoGoals,
    #[error("unknown hypothesis '{0}'")]
    UnknownHypothesis(String),
    #[error("did not find instance of the pattern {0}")]
    NoOccurrence(String),
    #[error("unsolved goals: {0}")]
    Unsolved(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Elab(#[from] ElabError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// One atomic tactic application recorded during execution. Combinators
/// are resolved away: every step acts on exactly one goal.
#[derive(Debug, Clone)]
pub struct Step {
    /// Execution order.
    pub seq: u32,
    pub goal: MvarId,
    pub view: GoalView,
    pub tactic: TacticNode,
    /// Goals this step created: nested `by` goals first, then the rest.
    pub produced: Vec<MvarId>,
    pub assigned: Vec<MvarId>,
    /// Inserted by the interpreter, with no source counterpart.
    pub synthetic: bool,
}
