use std::collections::HashSet;

use crate::elab::{Elab, ElabError};
use crate::kernel::{
    pretty, Binder, ConstKind, Environment, FVarId, LocalContext, MetavarContext, MvarId, MvarKind,
    Tc, Term,
};
use crate::syntax::{CaseAlt, Expr, LibrarySearch, Span, TacticKind, TacticNode};

use super::{GoalView, Step, TacticConfig, TacticError};

pub(crate) type TResult<T> = Result<T, TacticError>;

/// What elaborating a tactic argument left behind.
pub(crate) struct Elaborated<T> {
    pub value: T,
    /// Unassigned holes (`_`, `?_`, implicit arguments).
    pub holes: Vec<MvarId>,
    /// `by sorry` blocks, which become new goals.
    pub spawned: Vec<MvarId>,
    /// Blocks that were run to completion.
    pub nested: Vec<MvarId>,
}

/// Mutable execution state for one tactic application.
pub(crate) struct Interp<'a> {
    pub env: &'a Environment,
    pub opens: &'a [String],
    pub config: &'a TacticConfig,
    pub mctx: MetavarContext,
    pub goals: Vec<MvarId>,
    pub trace: Vec<Step>,
    pub next_seq: u32,
}

/// Builds `λ`/`Π` binders over `decls`, outermost first.
pub(crate) fn close_over(decls: &[(FVarId, String, Term)], body: Term, pi: bool) -> Term {
    let mut out = body;
    for (f, name, ty) in decls.iter().rev() {
        out = out.abstract_fvar(*f);
        let b = Binder::new(name.as_str(), ty.clone()).tagged(*f);
        out = if pi { Term::pi(b, out) } else { Term::lam(b, out) };
    }
    out
}

fn err(msg: impl Into<String>) -> TacticError {
    TacticError::Failed(msg.into())
}

impl<'a> Interp<'a> {
    pub fn new(
        env: &'a Environment,
        opens: &'a [String],
        config: &'a TacticConfig,
        mctx: MetavarContext,
        goals: Vec<MvarId>,
    ) -> Self {
        Interp { env, opens, config, mctx, goals, trace: Vec::new(), next_seq: 0 }
    }

    pub fn tc<'b>(&'b mut self, lctx: &'b LocalContext) -> Tc<'b> {
        Tc::new_mut(self.env, &mut self.mctx, lctx)
    }

    pub fn target(&self, g: MvarId) -> Term {
        self.mctx.instantiate(&self.mctx.decl(g).ty)
    }

    pub fn lctx(&self, g: MvarId) -> LocalContext {
        self.mctx.decl(g).lctx.clone()
    }

    pub fn whnf(&mut self, lctx: &LocalContext, t: &Term) -> Term {
        let t = self.mctx.instantiate(t);
        self.tc(lctx).whnf(&t)
    }

    pub fn show(&self, lctx: &LocalContext, t: &Term) -> String {
        pretty(&self.mctx.instantiate(t), lctx)
    }

    pub fn new_goal(&mut self, lctx: LocalContext, ty: Term, tag: Option<&str>) -> MvarId {
        self.mctx.new_mvar(lctx, ty, MvarKind::Synthetic, tag.map(str::to_string))
    }

    fn unsolved(&self) -> TacticError {
        let views: Vec<String> = self.goals.iter().map(|g| GoalView::of(&self.mctx, *g).render()).collect();
        TacticError::Unsolved(views.join("\n\n"))
    }

    // ------------------------------------------------------------ sequencing

    pub fn run_seq(&mut self, ts: &[TacticNode]) -> TResult<()> {
        for t in ts {
            self.run(t)?;
        }
        Ok(())
    }

    /// Runs `ts` on `goals` alone and returns what is left of them.
    pub fn run_on(&mut self, goals: Vec<MvarId>, f: impl FnOnce(&mut Self) -> TResult<()>) -> TResult<Vec<MvarId>> {
        let saved = std::mem::replace(&mut self.goals, goals);
        let r = f(self);
        let left = std::mem::replace(&mut self.goals, saved);
        r.map(|_| left)
    }

    fn drop_assigned(&mut self) {
        let mctx = &self.mctx;
        let mut seen = HashSet::new();
        self.goals.retain(|g| !mctx.is_assigned(*g) && seen.insert(*g));
    }

    pub fn run(&mut self, t: &TacticNode) -> TResult<()> {
        if self.config.banned.contains(t.kind_name()) {
            return Err(TacticError::Banned(t.kind_name().to_string()));
        }
        match &t.kind {
            TacticKind::SeqAll(a, b) => {
                let main = *self.goals.first().ok_or(TacticError::NoGoals)?;
                let rest = self.goals[1..].to_vec();
                let produced = self.run_on(vec![main], |s| s.run(a))?;
                let mut out = Vec::new();
                for g in produced {
                    if self.mctx.is_assigned(g) {
                        continue;
                    }
                    out.extend(self.run_on(vec![g], |s| s.run(b))?);
                }
                out.extend(rest);
                self.goals = out;
            }
            TacticKind::AllGoals(x) => {
                let goals = std::mem::take(&mut self.goals);
                let mut out = Vec::new();
                for g in goals {
                    if self.mctx.is_assigned(g) {
                        continue;
                    }
                    out.extend(self.run_on(vec![g], |s| s.run(x))?);
                }
                self.goals = out;
            }
            TacticKind::Try(x) => {
                let saved = (self.mctx.clone(), self.goals.clone(), self.trace.len(), self.next_seq);
                if self.run(x).is_err() {
                    self.mctx = saved.0;
                    self.goals = saved.1;
                    self.trace.truncate(saved.2);
                    self.next_seq = saved.3;
                }
            }
            TacticKind::Focus(ts) => {
                let main = *self.goals.first().ok_or(TacticError::NoGoals)?;
                let rest = self.goals[1..].to_vec();
                let left = self.run_on(vec![main], |s| s.run_seq(ts))?;
                if !left.is_empty() {
                    self.goals = left;
                    return Err(self.unsolved());
                }
                self.goals = rest;
            }
            TacticKind::Paren(ts) => self.run_seq(ts)?,
            TacticKind::RotateLeft(n) => {
                if !self.goals.is_empty() {
                    let k = (*n as usize) % self.goals.len();
                    self.goals.rotate_left(k);
                }
            }
            TacticKind::Case { tag, names, body } => {
                let idx = self
                    .goals
                    .iter()
                    .position(|g| tag_matches(self.mctx.decl(*g).tag.as_deref(), tag))
                    .ok_or_else(|| err(format!("case tag '{tag}' not found")))?;
                let g = self.goals.remove(idx);
                self.goals.insert(0, g);
                let bare = TacticNode::new(TacticKind::Case { tag: tag.clone(), names: names.clone(), body: None }, t.span);
                self.atomic(&bare, false)?;
                if let Some(body) = body {
                    self.run(&TacticNode::new(TacticKind::Focus(body.clone()), t.span))?;
                }
            }
            TacticKind::Cases { alts, .. } | TacticKind::Induction { alts, .. } if !alts.is_empty() => {
                let rest = self.goals.get(1..).map(|r| r.to_vec()).unwrap_or_default();
                let bare = match &t.kind {
                    TacticKind::Cases { target, .. } => TacticKind::Cases { target: target.clone(), alts: vec![] },
                    TacticKind::Induction { target, .. } => TacticKind::Induction { target: target.clone(), alts: vec![] },
                    _ => unreachable!(),
                };
                let produced = self.atomic_main(&TacticNode::new(bare, t.span), false)?;
                self.goals = produced.clone();
                for alt in alts {
                    self.run_alt(alt, t.span)?;
                }
                let mut left: Vec<MvarId> = self.goals.clone();
                left.extend(rest);
                self.goals = left;
                self.drop_assigned();
            }
            _ => {
                self.atomic(t, false)?;
            }
        }
        Ok(())
    }

    fn run_alt(&mut self, alt: &CaseAlt, parent: Span) -> TResult<()> {
        let idx = self
            .goals
            .iter()
            .position(|g| tag_matches(self.mctx.decl(*g).tag.as_deref(), &alt.tag))
            .ok_or_else(|| err(format!("invalid alternative name '{}'", alt.tag)))?;
        let g = self.goals.remove(idx);
        self.goals.insert(0, g);
        if !alt.names.is_empty() {
            let case = TacticNode::new(
                TacticKind::Case { tag: alt.tag.clone(), names: alt.names.clone(), body: None },
                Span::empty_at(parent.start),
            );
            self.atomic(&case, true)?;
        }
        self.run(&TacticNode::new(TacticKind::Focus(alt.body.clone()), alt.span))
    }

    /// Runs an atomic tactic on the main goal and records it.
    pub fn atomic(&mut self, t: &TacticNode, synthetic: bool) -> TResult<()> {
        let rest = self.goals.get(1..).map(|r| r.to_vec()).unwrap_or_default();
        let produced = self.atomic_main(t, synthetic)?;
        let mut goals = produced;
        goals.extend(rest);
        self.goals = goals;
        self.drop_assigned();
        Ok(())
    }

    /// Runs `t` on the main goal, records the step, and returns the goals
    /// that replace the main goal.
    fn atomic_main(&mut self, t: &TacticNode, synthetic: bool) -> TResult<Vec<MvarId>> {
        let g = *self.goals.first().ok_or(TacticError::NoGoals)?;
        let view = GoalView::of(&self.mctx, g);
        let seq = self.next_seq;
        self.next_seq += 1;
        let log0 = self.mctx.log().len();
        let trace_pos = self.trace.len();
        let before: HashSet<MvarId> = self.goals.iter().copied().collect();
        let (front, replaced) = self.exec(t, g)?;
        if !self.mctx.is_assigned(g) {
            return Err(err(format!("tactic '{}' did not assign the main goal", t.kind_name())));
        }
        let mut produced: Vec<MvarId> = front;
        let mut new_goals = Vec::new();
        for m in &replaced {
            if !self.mctx.is_assigned(*m) && !before.contains(m) {
                produced.push(*m);
            }
            if !self.mctx.is_assigned(*m) {
                new_goals.push(*m);
            }
        }
        let assigned = self.mctx.log()[log0..].to_vec();
        self.trace.insert(
            trace_pos,
            Step { seq, goal: g, view, tactic: t.clone(), produced, assigned, synthetic },
        );
        Ok(new_goals)
    }

    /// Executes one atomic tactic on `g`. Returns nested `by` goals that were
    /// run inline (tree children without goal-list presence) and the goals
    /// that take `g`'s place.
    fn exec(&mut self, t: &TacticNode, g: MvarId) -> TResult<(Vec<MvarId>, Vec<MvarId>)> {
        match &t.kind {
            TacticKind::Intro(names) => Ok((vec![], vec![self.intro(g, names)?])),
            TacticKind::Exact(e) => self.exact(g, e),
            TacticKind::Apply(e) => {
                let lctx = self.lctx(g);
                let el = self.elab_with(&lctx, |el| Ok(el.elab_for_apply(e)?))?;
                let (f, fty) = el.value;
                let goals = self.apply_term(g, f, fty, el.holes, true)?;
                Ok((el.nested, concat(el.spawned, goals)))
            }
            TacticKind::Rfl => {
                self.rfl(g)?;
                Ok((vec![], vec![]))
            }
            TacticKind::Assumption => {
                self.assumption(g)?;
                Ok((vec![], vec![]))
            }
            TacticKind::Rw { rules, at } => self.rewrite(g, rules, at.as_deref(), false),
            TacticKind::Rwa { rules, at } => self.rewrite(g, rules, at.as_deref(), true),
            TacticKind::Cases { target, .. } => Ok((vec![], self.cases(g, target, false)?)),
            TacticKind::Induction { target, .. } => Ok((vec![], self.cases(g, target, true)?)),
            TacticKind::Constructor => Ok((vec![], self.constructor(g, None)?)),
            TacticKind::Left => Ok((vec![], self.constructor(g, Some(0))?)),
            TacticKind::Right => Ok((vec![], self.constructor(g, Some(1))?)),
            TacticKind::Have { name, ty, value } => self.have(g, name.as_deref(), ty.as_ref(), value),
            TacticKind::Case { names, .. } => Ok((vec![], vec![self.rename(g, names)?])),
            TacticKind::Sorry => {
                if !self.config.allow_sorry {
                    return Err(TacticError::Banned("sorry".into()));
                }
                let ty = self.target(g);
                self.mctx.assign(g, Term::sorry(ty));
                Ok((vec![], vec![]))
            }
            TacticKind::LibrarySearch(kind) => Ok((vec![], self.library_search(g, *kind)?)),
            _ => Err(err(format!("'{}' is not an atomic tactic", t.kind_name()))),
        }
    }

    // ----------------------------------------------------------- elaboration

    /// Elaborates in `lctx`, then handles nested `by` blocks: `by sorry`
    /// becomes a new goal, anything else runs to completion right away.
    pub fn elab_with<T>(
        &mut self,
        lctx: &LocalContext,
        f: impl FnOnce(&mut Elab) -> Result<T, ElabError>,
    ) -> TResult<Elaborated<T>> {
        let (value, holes, postponed) = {
            let mut el = Elab::new(self.env, &mut self.mctx, lctx.clone(), self.opens);
            let v = f(&mut el)?;
            let mut holes = el.holes.clone();
            holes.extend(el.synthetic.iter().copied());
            (v, holes, std::mem::take(&mut el.postponed))
        };
        let mut spawned = Vec::new();
        let mut nested = Vec::new();
        for (m, block) in postponed {
            if block.is_masked() {
                spawned.push(m);
                continue;
            }
            let left = self.run_on(vec![m], |s| s.run_seq(&block.tactics))?;
            if !left.is_empty() {
                self.goals = left;
                return Err(self.unsolved());
            }
            nested.push(m);
        }
        let holes = holes.into_iter().filter(|h| !self.mctx.is_assigned(*h)).collect();
        Ok(Elaborated { value, holes, spawned, nested })
    }

    fn check_holes(&self, holes: &[MvarId], value: &Term) -> TResult<()> {
        if !self.config.allow_sorry && self.mctx.instantiate(value).has_sorry() {
            return Err(TacticError::Banned("sorry".into()));
        }
        if !holes.is_empty() && !self.config.weak_holes {
            return Err(err(format!("don't know how to synthesize placeholder {}", holes[0])));
        }
        Ok(())
    }

    // ---------------------------------------------------------------- basics

    fn intro(&mut self, g: MvarId, names: &[String]) -> TResult<MvarId> {
        let names: Vec<Option<&str>> =
            if names.is_empty() { vec![None] } else { names.iter().map(|n| Some(n.as_str())).collect() };
        let mut cur = g;
        for name in names {
            let mut lctx = self.lctx(cur);
            let target = self.target(cur);
            let w = match &target {
                Term::Pi(..) => target.clone(),
                _ => self.whnf(&lctx, &target),
            };
            let Term::Pi(b, body) = w else {
                return Err(err(format!("no additional binders to introduce in {}", self.show(&lctx, &target))));
            };
            let uname = match name {
                Some(n) if n != "_" => n.to_string(),
                _ => lctx.fresh_dagger(if &*b.name == "_" { "a" } else { &b.name }),
            };
            let f = self.mctx.new_fvar();
            lctx.push(f, uname.clone(), b.ty.clone());
            let next = self.new_goal(lctx, body.instantiate1(&Term::FVar(f)), None);
            let val = Term::lam(Binder::new(uname.as_str(), b.ty.clone()).tagged(f), Term::Mvar(next));
            self.mctx.assign(cur, val);
            cur = next;
        }
        Ok(cur)
    }

    fn exact(&mut self, g: MvarId, e: &Expr) -> TResult<(Vec<MvarId>, Vec<MvarId>)> {
        let lctx = self.lctx(g);
        let target = self.target(g);
        let el = self.elab_with(&lctx, |el| el.elab(e, Some(&target)))?;
        self.check_holes(&el.holes, &el.value)?;
        let v = self.mctx.instantiate(&el.value);
        self.mctx.assign(g, v);
        Ok((el.nested, el.spawned))
    }

    /// `f : fty` applied to as many fresh metavariables as needed for its
    /// conclusion to match the goal. Produced goals: Nat-typed holes first,
    /// then the rest in telescope order.
    pub fn apply_term(
        &mut self,
        g: MvarId,
        f: Term,
        fty: Term,
        extra: Vec<MvarId>,
        try_shorter: bool,
    ) -> TResult<Vec<MvarId>> {
        let lctx = self.lctx(g);
        let target = self.target(g);
        let mut arity = 0;
        let mut t = self.mctx.instantiate(&fty);
        let mut scratch = self.mctx.clone();
        loop {
            if arity > 64 {
                break;
            }
            let w = match &t {
                Term::Pi(..) => t.clone(),
                _ => Tc::new(self.env, &scratch, &lctx).whnf(&t),
            };
            let Term::Pi(b, body) = w else { break };
            let m = scratch.new_mvar(lctx.clone(), b.ty.clone(), MvarKind::Natural, None);
            t = body.instantiate1(&Term::Mvar(m));
            arity += 1;
        }
        let lens: Vec<usize> = if try_shorter { (0..=arity).rev().collect() } else { vec![arity] };
        let snapshot = self.mctx.clone();
        for n in lens {
            self.mctx = snapshot.clone();
            let mut head = f.clone();
            let mut t = self.mctx.instantiate(&fty);
            let mut fresh = Vec::new();
            for _ in 0..n {
                let w = match &t {
                    Term::Pi(..) => t.clone(),
                    _ => self.whnf(&lctx, &t),
                };
                let Term::Pi(b, body) = w else { unreachable!("telescope shrank") };
                let ty = self.mctx.instantiate(&b.ty);
                let m = self.mctx.new_mvar(lctx.clone(), ty, MvarKind::Natural, None);
                head = Term::app(head, Term::Mvar(m));
                t = body.instantiate1(&Term::Mvar(m));
                fresh.push(m);
            }
            if !self.tc(&lctx).unify(&t, &target) {
                continue;
            }
            let mut all: Vec<MvarId> = fresh;
            all.extend(extra.iter().copied());
            let open: Vec<MvarId> = all.into_iter().filter(|m| !self.mctx.is_assigned(*m)).collect();
            let is_nat = |s: &Self, m: &MvarId| s.mctx.instantiate(&s.mctx.decl(*m).ty).is_const("Nat");
            let mut goals: Vec<MvarId> = open.iter().copied().filter(|m| is_nat(self, m)).collect();
            goals.extend(open.iter().copied().filter(|m| !is_nat(self, m)));
            let v = self.mctx.instantiate(&head);
            self.mctx.assign(g, v);
            return Ok(goals);
        }
        self.mctx = snapshot;
        Err(err(format!(
            "could not unify the conclusion of {} with the goal {}",
            self.show(&lctx, &fty),
            self.show(&lctx, &target)
        )))
    }

    fn rfl(&mut self, g: MvarId) -> TResult<()> {
        let lctx = self.lctx(g);
        let target = self.target(g);
        let mut w = target.clone();
        for _ in 0..2 {
            let (head, args) = w.spine();
            let name = head.const_name().unwrap_or("");
            let refl = match (name, args.len()) {
                ("Eq", 2) => Some("Eq.refl"),
                ("Iff", 2) => Some("Iff.refl"),
                ("Nat.le", 2) => Some("Nat.le.refl"),
                _ => None,
            };
            if let Some(c) = refl {
                let (a, b) = (args[0].clone(), args[1].clone());
                if self.tc(&lctx).unify(&a, &b) {
                    let a = self.mctx.instantiate(&a);
                    self.mctx.assign(g, Term::app(Term::cnst(c), a));
                    return Ok(());
                }
                return Err(err(format!(
                    "the rfl tactic failed: {} and {} are not definitionally equal",
                    self.show(&lctx, &a),
                    self.show(&lctx, &b)
                )));
            }
            w = self.whnf(&lctx, &target);
        }
        Err(err(format!("rfl: {} is not a reflexive relation", self.show(&lctx, &target))))
    }

    fn assumption(&mut self, g: MvarId) -> TResult<()> {
        let lctx = self.lctx(g);
        let target = self.target(g);
        for d in lctx.decls.iter().rev() {
            if self.tc(&lctx).unify(&d.ty, &target) {
                self.mctx.assign(g, Term::FVar(d.fvar));
                return Ok(());
            }
        }
        Err(err("assumption failed"))
    }

    fn constructor(&mut self, g: MvarId, which: Option<usize>) -> TResult<Vec<MvarId>> {
        let lctx = self.lctx(g);
        let target = self.target(g);
        let w = self.whnf(&lctx, &target);
        let ind = w.head().const_name().map(str::to_string);
        let ctors = match ind.as_deref().and_then(|n| self.env.get(n)).map(|c| &c.kind) {
            Some(ConstKind::Inductive { ctors, .. }) => ctors.clone(),
            _ => return Err(err(format!("target is not an inductive type: {}", self.show(&lctx, &target)))),
        };
        let candidates: Vec<String> = match which {
            None => ctors,
            Some(i) if ctors.len() == 2 => vec![ctors[i].clone()],
            Some(_) => return Err(err("left/right: target must have exactly two constructors")),
        };
        let mut last = None;
        for c in candidates {
            let fty = self.env.ty(&c)?.clone();
            match self.apply_term(g, Term::cnst(&c), fty, vec![], false) {
                Ok(goals) => return Ok(goals),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| err("no constructor applies")))
    }

    fn have(
        &mut self,
        g: MvarId,
        name: Option<&str>,
        ty: Option<&Expr>,
        value: &Expr,
    ) -> TResult<(Vec<MvarId>, Vec<MvarId>)> {
        let lctx = self.lctx(g);
        let el = self.elab_with(&lctx, |el| {
            let (v, t) = match ty {
                Some(t) => {
                    let t = el.elab_type(t)?;
                    (el.elab(value, Some(&t))?, t)
                }
                None => {
                    let v = el.elab(value, None)?;
                    let t = el.infer(&v)?;
                    (v, t)
                }
            };
            Ok((v, t))
        })?;
        let (v, t) = el.value.clone();
        self.check_holes(&el.holes, &v)?;
        let v = self.mctx.instantiate(&v);
        let t = self.mctx.instantiate(&t);
        let name = name.unwrap_or("this");
        let f = self.mctx.new_fvar();
        let mut lctx2 = lctx.clone();
        lctx2.push(f, name, t.clone());
        let target = self.target(g);
        let next = self.new_goal(lctx2, target, None);
        let val = Term::app(Term::lam(Binder::new(name, t).tagged(f), Term::Mvar(next)), v);
        self.mctx.assign(g, val);
        Ok((el.nested, concat(el.spawned, vec![next])))
    }

    /// Gives the last `names.len()` inaccessible hypotheses of `g` names.
    fn rename(&mut self, g: MvarId, names: &[String]) -> TResult<MvarId> {
        let mut lctx = self.lctx(g);
        let idx: Vec<usize> =
            (0..lctx.decls.len()).filter(|i| crate::kernel::is_inaccessible(&lctx.decls[*i].user_name)).collect();
        if names.len() > idx.len() {
            return Err(err("too many variable names provided"));
        }
        let chosen = &idx[idx.len() - names.len()..];
        for (i, n) in chosen.iter().zip(names) {
            if n != "_" {
                lctx.decls[*i].user_name = n.clone();
            }
        }
        let ty = self.mctx.decl(g).ty.clone();
        let next = self.new_goal(lctx, ty, None);
        self.mctx.assign(g, Term::Mvar(next));
        Ok(next)
    }

    fn library_search(&mut self, g: MvarId, kind: LibrarySearch) -> TResult<Vec<MvarId>> {
        let lctx = self.lctx(g);
        let mut candidates: Vec<(Term, Term)> =
            lctx.decls.iter().rev().map(|d| (Term::FVar(d.fvar), d.ty.clone())).collect();
        for c in self.env.iter() {
            if matches!(c.kind, ConstKind::Axiom | ConstKind::Ctor { .. }) {
                candidates.push((Term::cnst(&c.name), c.ty.clone()));
            }
        }
        let snapshot = self.mctx.clone();
        for (f, fty) in candidates {
            match kind {
                LibrarySearch::Rw => {
                    if let Ok(goals) = self.rewrite_with(g, f, fty, false) {
                        return Ok(goals);
                    }
                }
                LibrarySearch::Exact | LibrarySearch::Apply => {
                    if let Ok(goals) = self.apply_term(g, f, fty, vec![], false) {
                        if kind == LibrarySearch::Apply || goals.is_empty() {
                            return Ok(goals);
                        }
                    }
                }
            }
            self.mctx = snapshot.clone();
        }
        Err(err(format!("{} could not close the goal", kind.keyword())))
    }
}

pub(crate) fn concat(mut a: Vec<MvarId>, b: Vec<MvarId>) -> Vec<MvarId> {
    a.extend(b);
    a
}

/// `case` tags match by exact name or by their last component.
pub(crate) fn tag_matches(tag: Option<&str>, want: &str) -> bool {
    match tag {
        Some(t) => t == want || t.rsplit('.').next() == Some(want),
        None => false,
    }
}
