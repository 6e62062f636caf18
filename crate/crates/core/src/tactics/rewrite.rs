use crate::kernel::{is_inaccessible, Binder, LocalContext, MvarId, MvarKind, Tc, Term};
use crate::syntax::RwRule;

use super::interp::{Interp, TResult};
use super::TacticError;

impl<'a> Interp<'a> {
    /// Abstracts every instance of `pat` in `t` after unifying the first
    /// candidate, pre-order. Returns the motive body (bound index 0).
    fn kabstract(&mut self, lctx: &LocalContext, t: &Term, pat: &Term) -> Option<Term> {
        let t = self.mctx.instantiate(t);
        let pat = self.mctx.instantiate(pat);
        let head = pat.head().clone();
        let nargs = pat.num_args();
        let mut candidates = Vec::new();
        collect_candidates(&t, &head, nargs, &mut candidates);
        let mut found = None;
        for c in candidates {
            if self.tc(lctx).unify(&c, &pat) {
                found = Some(self.mctx.instantiate(&pat));
                break;
            }
        }
        let p = found?;
        let t = self.mctx.instantiate(&t);
        Some(t.lift(0, 1).replace(&mut |s, depth| {
            (!s.has_loose_bvars() && *s == p).then(|| Term::BVar(depth))
        }))
    }

    /// The equation `l = r` proved by `proof`, after instantiating leading
    /// binders of its type with fresh holes.
    fn equation(&mut self, lctx: &LocalContext, mut proof: Term, ty: Term) -> TResult<(Term, Term, Term, Vec<MvarId>)> {
        let mut ty = self.mctx.instantiate(&ty);
        let mut holes = Vec::new();
        for _ in 0..64 {
            if ty.is_app_of("Eq", 2) {
                let (_, args) = ty.spine();
                let (l, r) = (args[0].clone(), args[1].clone());
                return Ok((proof, l, r, holes));
            }
            let w = match &ty {
                Term::Pi(..) => ty.clone(),
                _ => self.whnf(lctx, &ty),
            };
            let Term::Pi(b, body) = w else { break };
            let m = self.mctx.new_mvar(lctx.clone(), b.ty.clone(), MvarKind::Natural, None);
            proof = Term::app(proof, Term::Mvar(m));
            ty = body.instantiate1(&Term::Mvar(m));
            holes.push(m);
        }
        Err(TacticError::Failed(format!(
            "equality or iff proof expected, got {}",
            self.show(lctx, &ty)
        )))
    }

    /// Rewrites the target of `g` with `proof : ... → l = r`.
    pub(crate) fn rewrite_with(&mut self, g: MvarId, proof: Term, ty: Term, reverse: bool) -> TResult<Vec<MvarId>> {
        self.rewrite_one(g, proof, ty, reverse, None, vec![])
    }

    fn rewrite_one(
        &mut self,
        g: MvarId,
        proof: Term,
        ty: Term,
        reverse: bool,
        at: Option<&str>,
        extra_holes: Vec<MvarId>,
    ) -> TResult<Vec<MvarId>> {
        let lctx = self.lctx(g);
        let (h, mut l, mut r, mut holes) = self.equation(&lctx, proof, ty)?;
        holes.extend(extra_holes);
        if reverse {
            std::mem::swap(&mut l, &mut r);
        }
        let target = self.target(g);
        let (subject, hyp) = match at {
            None => (target.clone(), None),
            Some(name) => {
                if is_inaccessible(name) {
                    return Err(TacticError::UnknownHypothesis(name.to_string()));
                }
                let d = lctx.find_by_name(name).ok_or_else(|| TacticError::UnknownHypothesis(name.to_string()))?;
                (self.mctx.instantiate(&d.ty), Some(d.clone()))
            }
        };
        let Some(body) = self.kabstract(&lctx, &subject, &l) else {
            return Err(TacticError::NoOccurrence(self.show(&lctx, &l)));
        };
        let open: Vec<MvarId> = holes.into_iter().filter(|m| !self.mctx.is_assigned(*m)).collect();
        if let Some(m) = open.first() {
            return Err(TacticError::Failed(format!("motive has unassigned metavariable {m}")));
        }
        let l = self.mctx.instantiate(&l);
        let r = self.mctx.instantiate(&r);
        let h = self.mctx.instantiate(&h);
        // `h : l = r` as stated, oriented to the rewrite direction
        let (lo, ro) = if reverse { (r.clone(), l.clone()) } else { (l.clone(), r.clone()) };
        let h_fwd = if reverse { Term::apps(Term::cnst("Eq.symm"), [lo.clone(), ro.clone(), h.clone()]) } else { h.clone() };
        let motive = Term::lam(Binder::new("x", Term::nat()), body.clone());
        let new_subject = body.instantiate1(&r);
        match hyp {
            None => {
                let next = self.new_goal(lctx.clone(), new_subject, None);
                // Eq.rec {r} {motive} ?next {l} (r = l)
                let back = Term::apps(Term::cnst("Eq.symm"), [l.clone(), r.clone(), h_fwd]);
                let val = Term::apps(Term::cnst("Eq.rec"), [r.clone(), motive, Term::Mvar(next), l.clone(), back]);
                self.mctx.assign(g, val);
                Ok(vec![next])
            }
            Some(d) => {
                let proof_new = Term::apps(Term::cnst("Eq.rec"), [l.clone(), motive, Term::FVar(d.fvar), r.clone(), h_fwd]);
                let used_later = {
                    let pos = lctx.position(d.fvar).unwrap();
                    target.has_fvar(d.fvar)
                        || lctx.decls[pos + 1..].iter().any(|x| self.mctx.instantiate(&x.ty).has_fvar(d.fvar))
                };
                let f = self.mctx.new_fvar();
                let mut lctx2 = lctx.clone();
                if used_later {
                    lctx2.push(f, d.user_name.clone(), new_subject.clone());
                } else {
                    let pos = lctx.position(d.fvar).unwrap();
                    let needs: Vec<usize> = new_subject.fvars().iter().filter_map(|x| lctx.position(*x)).collect();
                    let at = needs.into_iter().max().map_or(pos, |m| m.max(pos));
                    lctx2.decls.remove(pos);
                    let at = at.min(lctx2.decls.len());
                    lctx2.decls.insert(
                        at,
                        crate::kernel::LocalDecl { fvar: f, user_name: d.user_name.clone(), ty: new_subject.clone(), value: None },
                    );
                }
                let next = self.new_goal(lctx2, target.clone(), None);
                let val = Term::app(
                    Term::lam(Binder::new(d.user_name.as_str(), new_subject).tagged(f), Term::Mvar(next)),
                    proof_new,
                );
                self.mctx.assign(g, val);
                Ok(vec![next])
            }
        }
    }

    /// `rw [rules] (at h)`, followed by a syntactic `rfl` attempt; `rwa`
    /// finishes with `assumption`.
    pub(crate) fn rewrite(
        &mut self,
        g: MvarId,
        rules: &[RwRule],
        at: Option<&str>,
        then_assumption: bool,
    ) -> TResult<(Vec<MvarId>, Vec<MvarId>)> {
        let mut cur = g;
        let mut nested_all = Vec::new();
        for rule in rules {
            let lctx = self.lctx(cur);
            let el = self.elab_with(&lctx, |el| el.elab_for_apply(&rule.term))?;
            let (proof, ty) = el.value;
            nested_all.extend(el.nested);
            let goals = self.rewrite_one(cur, proof, ty, rule.reverse, at, el.holes)?;
            cur = goals[0];
        }
        if self.try_rfl_syntactic(cur) {
            return Ok((nested_all, vec![]));
        }
        if then_assumption {
            let lctx = self.lctx(cur);
            let target = self.target(cur);
            for d in lctx.decls.iter().rev() {
                if Tc::new_mut(self.env, &mut self.mctx, &lctx).unify(&d.ty, &target) {
                    self.mctx.assign(cur, Term::FVar(d.fvar));
                    return Ok((nested_all, vec![]));
                }
            }
            return Err(TacticError::Failed("assumption failed".into()));
        }
        Ok((nested_all, vec![cur]))
    }

    fn try_rfl_syntactic(&mut self, g: MvarId) -> bool {
        let t = self.target(g);
        let (head, args) = t.spine();
        let refl = match head.const_name() {
            Some("Eq") if args.len() == 2 => "Eq.refl",
            Some("Iff") if args.len() == 2 => "Iff.refl",
            _ => return false,
        };
        if args[0] == args[1] {
            let a = args[0].clone();
            self.mctx.assign(g, Term::app(Term::cnst(refl), a));
            return true;
        }
        false
    }
}

fn collect_candidates(t: &Term, head: &Term, nargs: usize, out: &mut Vec<Term>) {
    if !t.has_loose_bvars() && t.num_args() == nargs && (t.head() == head || matches!(head, Term::Mvar(_))) {
        out.push(t.clone());
    }
    match t {
        Term::App(f, a) => {
            collect_candidates(f, head, nargs, out);
            collect_candidates(a, head, nargs, out);
        }
        Term::Lam(b, body) | Term::Pi(b, body) => {
            collect_candidates(&b.ty, head, nargs, out);
            collect_candidates(body, head, nargs, out);
        }
        _ => {}
    }
}
