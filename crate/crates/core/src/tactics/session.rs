use std::collections::HashSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elab::Elab;
use crate::kernel::{
    check_closed_proof, check_new_assignments, check_partial_proof, close_term, close_type, CheckStats,
    Environment, KernelError, LocalContext, MetavarContext, MvarId, MvarKind, Term,
};
use crate::syntax::{parse_file, parse_tactic, render_tactic, Span, TacticKind, TacticNode, TheoremDecl};

use super::interp::Interp;
use super::{GoalView, Step, TacticConfig, TacticError};

static NEXT_STATE: AtomicU64 = AtomicU64::new(0);

fn next_state_id() -> u64 {
    NEXT_STATE.fetch_add(1, Ordering::Relaxed)
}

/// How proofs are checked by the kernel while tactics run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// Check each new assignment once, in its own context.
    #[default]
    Incremental,
    /// Re-check the whole partial proof term after every step.
    WholePerStep,
    /// Only check the finished proof.
    FinalOnly,
}

impl KernelMode {
    pub fn parse(s: &str) -> Option<KernelMode> {
        match s {
            "incremental" => Some(KernelMode::Incremental),
            "whole-per-step" => Some(KernelMode::WholePerStep),
            "final-only" => Some(KernelMode::FinalOnly),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelMode::Incremental => "incremental",
            KernelMode::WholePerStep => "whole-per-step",
            KernelMode::FinalOnly => "final-only",
        }
    }
}

/// What every state of one session shares.
#[derive(Debug)]
pub struct SessionRoot {
    pub env: Arc<Environment>,
    pub opens: Vec<String>,
    pub name: String,
    pub root: MvarId,
    pub lctx: LocalContext,
    pub target: Term,
}

impl SessionRoot {
    /// The theorem statement as a closed type.
    pub fn statement(&self) -> Term {
        close_type(&self.lctx, &self.target)
    }
}

/// An immutable snapshot of a proof in progress.
#[derive(Clone)]
pub struct ProofState {
    pub id: u64,
    pub goals: Vec<MvarId>,
    pub mctx: Arc<MetavarContext>,
    /// Parent state and the tactic text that led here.
    pub parent: Option<(u64, String)>,
    pub root: Arc<SessionRoot>,
}

impl fmt::Debug for ProofState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProofState")
            .field("id", &self.id)
            .field("goals", &self.goals)
            .field("parent", &self.parent)
            .finish()
    }
}

impl ProofState {
    pub fn is_solved(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn env(&self) -> &Environment {
        &self.root.env
    }

    pub fn views(&self) -> Vec<GoalView> {
        self.goals.iter().map(|g| GoalView::of(&self.mctx, *g)).collect()
    }

    /// Goals rendered and separated by blank lines; "no goals" when solved.
    pub fn render(&self) -> String {
        if self.goals.is_empty() {
            return "no goals".into();
        }
        self.views().iter().map(GoalView::render).collect::<Vec<_>>().join("\n\n")
    }

    /// The root proof term, closed over the theorem binders.
    pub fn proof_term(&self) -> Term {
        close_term(&self.root.lctx, &self.mctx.instantiate(&Term::Mvar(self.root.root)))
    }

    /// A state over the same snapshot with a different goal list.
    pub fn with_goals(&self, goals: Vec<MvarId>) -> ProofState {
        ProofState { id: next_state_id(), goals, mctx: self.mctx.clone(), parent: None, root: self.root.clone() }
    }

    /// Final check of a solved state.
    pub fn verify(&self, stats: &mut CheckStats) -> Result<(), KernelError> {
        check_closed_proof(self.env(), &self.proof_term(), &self.root.statement(), stats)
    }

    pub fn apply(&self, tactic: &TacticNode, config: &TacticConfig) -> Result<TacticOutcome, TacticError> {
        apply_tactic(self, tactic, config)
    }

    pub fn apply_text(&self, text: &str, config: &TacticConfig) -> Result<TacticOutcome, TacticError> {
        apply_tactic(self, &parse_tactic(text)?, config)
    }
}

/// Starts a session on a theorem's statement.
pub fn new_session(env: Arc<Environment>, thm: &TheoremDecl) -> Result<ProofState, TacticError> {
    let mut mctx = MetavarContext::new();
    let opens = thm.open_namespaces.clone();
    let (lctx, target) = {
        let mut el = Elab::new(&env, &mut mctx, LocalContext::new(), &opens);
        for b in &thm.binders {
            let ty = el.elab_type(&b.ty)?;
            let f = el.mctx.new_fvar();
            el.lctx.push(f, b.name.clone(), ty);
        }
        let target = el.elab_type(&thm.target)?;
        if let Some(h) = el.holes.iter().find(|h| !el.mctx.is_assigned(**h)) {
            return Err(TacticError::Failed(format!("statement has unresolved placeholder {h}")));
        }
        (el.lctx.clone(), target)
    };
    let lctx = LocalContext {
        decls: lctx
            .decls
            .into_iter()
            .map(|mut d| {
                d.ty = mctx.instantiate(&d.ty);
                d
            })
            .collect(),
    };
    let target = mctx.instantiate(&target);
    let root = mctx.new_mvar(lctx.clone(), target.clone(), MvarKind::Synthetic, None);
    let root_info = SessionRoot {
        env,
        opens,
        name: thm.name.clone().unwrap_or_else(|| "example".into()),
        root,
        lctx,
        target,
    };
    Ok(ProofState { id: next_state_id(), goals: vec![root], mctx: Arc::new(mctx), parent: None, root: Arc::new(root_info) })
}

/// Starts a session from goal text such as `a b : Nat\nh : b = 0\n⊢ a - b = a`.
pub fn new_session_from_goal(env: Arc<Environment>, text: &str) -> Result<ProofState, TacticError> {
    let (hyps, target) = match text.rsplit_once('⊢') {
        Some((h, t)) => (h, t),
        None => ("", text),
    };
    let mut binders = String::new();
    for line in hyps.lines().map(str::trim).filter(|l| !l.is_empty()) {
        binders.push_str(&format!(" ({line})"));
    }
    let src = format!("theorem _goal{binders} : {} := by sorry\n", target.trim());
    let file = parse_file(&src, "<goal>")?;
    let thm = file.theorems().next().ok_or_else(|| TacticError::Failed("empty goal".into()))?;
    new_session(env, thm)
}

/// The result of one tactic application.
#[derive(Debug, Clone)]
pub struct TacticOutcome {
    pub state: ProofState,
    /// Assigned by this step, in order.
    pub new_assignments: Vec<MvarId>,
    /// Input goals that this step closed or replaced.
    pub consumed: Vec<MvarId>,
    /// Goals of the new state that did not exist before.
    pub produced: Vec<MvarId>,
    pub messages: Vec<String>,
    /// Atomic steps the tactic resolved into.
    pub trace: Vec<Step>,
    pub stats: CheckStats,
}

fn banned_kind(t: &TacticNode, config: &TacticConfig) -> Option<String> {
    if config.banned.contains(t.kind_name()) {
        return Some(t.kind_name().to_string());
    }
    if !config.allow_sorry && matches!(t.kind, TacticKind::Sorry) {
        return Some("sorry".into());
    }
    let sub: Vec<&TacticNode> = match &t.kind {
        TacticKind::SeqAll(a, b) => vec![a, b],
        TacticKind::AllGoals(x) | TacticKind::Try(x) => vec![x],
        TacticKind::Focus(ts) | TacticKind::Paren(ts) => ts.iter().collect(),
        TacticKind::Case { body: Some(b), .. } => b.iter().collect(),
        TacticKind::Cases { alts, .. } | TacticKind::Induction { alts, .. } => {
            alts.iter().flat_map(|a| a.body.iter()).collect()
        }
        _ => vec![],
    };
    let nested = t.terms().into_iter().flat_map(|e| e.by_blocks()).flat_map(|b| b.tactics.iter());
    sub.into_iter().chain(nested).find_map(|x| banned_kind(x, config))
}

/// Applies `tactic` to `state`. The input state is never modified.
pub fn apply_tactic(state: &ProofState, tactic: &TacticNode, config: &TacticConfig) -> Result<TacticOutcome, TacticError> {
    if let Some(k) = banned_kind(tactic, config) {
        return Err(TacticError::Banned(k));
    }
    if state.goals.is_empty() {
        return Err(TacticError::NoGoals);
    }
    let root = &state.root;
    let mctx = (*state.mctx).clone();
    let log0 = mctx.log().len();
    let mut it = Interp::new(&root.env, &root.opens, config, mctx, state.goals.clone());
    it.run(tactic)?;
    let Interp { mctx, goals, trace, .. } = it;
    let new_assignments = mctx.log()[log0..].to_vec();
    let mut stats = CheckStats::default();
    match config.kernel_mode {
        KernelMode::Incremental => check_new_assignments(&root.env, &mctx, &new_assignments, &mut stats)?,
        KernelMode::WholePerStep => {
            let allowed = crate::factorize::coupling_components(&mctx, &goals).into_iter().next().unwrap_or_default();
            let term = close_term(&root.lctx, &mctx.instantiate(&Term::Mvar(root.root)));
            check_partial_proof(&root.env, &mctx, &term, &root.statement(), &allowed, &mut stats)?;
        }
        KernelMode::FinalOnly => {}
    }
    let old: HashSet<MvarId> = state.goals.iter().copied().collect();
    let now: HashSet<MvarId> = goals.iter().copied().collect();
    let consumed = state.goals.iter().copied().filter(|g| !now.contains(g)).collect();
    let produced = goals.iter().copied().filter(|g| !old.contains(g)).collect();
    let mut messages = Vec::new();
    if new_assignments.iter().any(|m| mctx.assignment(*m).is_some_and(Term::has_sorry)) {
        messages.push("declaration uses 'sorry'".to_string());
    }
    let state = ProofState {
        id: next_state_id(),
        goals,
        mctx: Arc::new(mctx),
        parent: Some((state.id, render_tactic(tactic))),
        root: state.root.clone(),
    };
    Ok(TacticOutcome { state, new_assignments, consumed, produced, messages, trace, stats })
}

/// Where a script stopped.
#[derive(Debug, Clone)]
pub struct StepFailure {
    /// 1-based position of the failing top-level tactic.
    pub index: usize,
    pub span: Span,
    pub error: TacticError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// All goals closed and the final term checked.
    Proven,
    /// All goals closed, but the term uses `sorry`.
    ProvenWithSorry,
    /// Goals remain.
    Unproven,
    /// A step failed or the final check rejected the term.
    Failed,
}

#[derive(Debug, Clone)]
pub struct ScriptRun {
    /// The initial state followed by the state after each successful step.
    pub states: Vec<ProofState>,
    pub outcomes: Vec<TacticOutcome>,
    pub failure: Option<StepFailure>,
    /// Error of the final whole-term check, if it ran and failed.
    pub final_error: Option<KernelError>,
    pub stats: CheckStats,
    pub verdict: Verdict,
}

impl ScriptRun {
    pub fn last(&self) -> &ProofState {
        self.states.last().expect("initial state")
    }

    /// Atomic steps of all successful tactics, in execution order.
    pub fn trace(&self) -> Vec<Step> {
        let mut out = Vec::new();
        let mut base = 0;
        for o in &self.outcomes {
            let n = o.trace.iter().map(|s| s.seq + 1).max().unwrap_or(0);
            out.extend(o.trace.iter().cloned().map(|mut s| {
                s.seq += base;
                s
            }));
            base += n;
        }
        out
    }
}

/// Runs `script` step by step from `start`.
pub fn run_script(start: &ProofState, script: &[TacticNode], config: &TacticConfig) -> ScriptRun {
    let mut states = vec![start.clone()];
    let mut outcomes = Vec::new();
    let mut stats = CheckStats::default();
    let mut failure = None;
    for (i, t) in script.iter().enumerate() {
        let cur = states.last().unwrap();
        match apply_tactic(cur, t, config) {
            Ok(o) => {
                stats.add(o.stats);
                states.push(o.state.clone());
                outcomes.push(o);
            }
            Err(error) => {
                failure = Some(StepFailure { index: i + 1, span: t.span, error });
                break;
            }
        }
    }
    let last = states.last().unwrap();
    let mut final_error = None;
    let verdict = if failure.is_some() {
        Verdict::Failed
    } else if !last.is_solved() {
        Verdict::Unproven
    } else if last.proof_term().has_sorry() {
        Verdict::ProvenWithSorry
    } else if config.kernel_mode == KernelMode::WholePerStep {
        // the last per-step check already covered the complete term
        Verdict::Proven
    } else {
        match last.verify(&mut stats) {
            Ok(()) => Verdict::Proven,
            Err(e) => {
                final_error = Some(e);
                Verdict::Failed
            }
        }
    };
    ScriptRun { states, outcomes, failure, final_error, stats, verdict }
}
