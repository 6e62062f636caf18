//! Reduction, definitional equality, type inference and unification.

use super::env::{ConstKind, Environment, RecursorInfo, Rule, RulePattern};
use super::mctx::{LocalContext, MetavarContext, MvarKind};
use super::print::debug_term;
use super::term::{Binder, FVarId, MvarId, Term, TEMP_FVAR_BASE};
use super::KernelError;

enum MctxRef<'a> {
    Shared(&'a MetavarContext),
    Owned(&'a mut MetavarContext),
}

/// A checker for one local context. Created per operation; cheap.
pub struct Tc<'a> {
    pub env: &'a Environment,
    mctx: MctxRef<'a>,
    lctx: &'a LocalContext,
    locals: Vec<(FVarId, Term)>,
    next_tmp: u32,
}

impl<'a> Tc<'a> {
    pub fn new(env: &'a Environment, mctx: &'a MetavarContext, lctx: &'a LocalContext) -> Self {
        Tc { env, mctx: MctxRef::Shared(mctx), lctx, locals: Vec::new(), next_tmp: TEMP_FVAR_BASE }
    }

    /// A checker that may assign metavariables through `unify`.
    pub fn new_mut(
        env: &'a Environment,
        mctx: &'a mut MetavarContext,
        lctx: &'a LocalContext,
    ) -> Self {
        Tc { env, mctx: MctxRef::Owned(mctx), lctx, locals: Vec::new(), next_tmp: TEMP_FVAR_BASE }
    }

    pub fn mctx(&self) -> &MetavarContext {
        match &self.mctx {
            MctxRef::Shared(m) => m,
            MctxRef::Owned(m) => m,
        }
    }

    fn mctx_mut(&mut self) -> &mut MetavarContext {
        match &mut self.mctx {
            MctxRef::Owned(m) => m,
            MctxRef::Shared(_) => panic!("unify on a read-only checker"),
        }
    }

    fn local_type(&self, f: FVarId) -> Option<Term> {
        if let Some((_, t)) = self.locals.iter().rev().find(|(x, _)| *x == f) {
            return Some(t.clone());
        }
        self.lctx.find(f).map(|d| d.ty.clone())
    }

    fn in_scope(&self, f: FVarId) -> bool {
        self.locals.iter().any(|(x, _)| *x == f) || self.lctx.contains(f)
    }

    /// Opens a binder, preferring its tag so metavariables declared under it
    /// keep their meaning. Pair with `close_binder`.
    fn open_binder(&mut self, b: &Binder) -> FVarId {
        let f = match b.tag {
            Some(t) if !self.in_scope(t) => t,
            _ => {
                let t = FVarId(self.next_tmp);
                self.next_tmp += 1;
                t
            }
        };
        self.locals.push((f, b.ty.clone()));
        f
    }

    fn close_binder(&mut self) {
        self.locals.pop();
    }

    fn prep_body(&self, body: &Term) -> Term {
        if body.has_mvar() {
            self.mctx().instantiate(body)
        } else {
            body.clone()
        }
    }

    // ------------------------------------------------------------------ whnf

    pub fn whnf(&mut self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Some(next) = self.whnf_step(&cur) {
            cur = next;
        }
        if let Term::App(f, a) = &cur {
            if f.is_const("Nat.succ") {
                let a2 = self.whnf(a);
                if a2 != **a {
                    return Term::app(Term::cnst("Nat.succ"), a2);
                }
            }
        }
        cur
    }

    fn whnf_step(&mut self, t: &Term) -> Option<Term> {
        match t {
            Term::Mvar(m) => self.mctx().assignment(*m).cloned(),
            Term::Const(c) => match &self.env.get(c)?.kind {
                ConstKind::Def(v) => Some(v.clone()),
                _ => None,
            },
            Term::App(..) => {
                let (head, args) = t.spine();
                match head {
                    Term::Lam(..) => {
                        let head = self.prep_body(head);
                        let mut body = head;
                        let mut used = 0;
                        let mut vals = Vec::new();
                        while let (Term::Lam(_, b), Some(a)) = (&body, args.get(used)) {
                            vals.push((*a).clone());
                            body = (**b).clone();
                            used += 1;
                        }
                        let r = body.instantiate(&vals);
                        Some(Term::apps(r, args[used..].iter().map(|a| (*a).clone())))
                    }
                    Term::Mvar(m) => {
                        let v = self.mctx().assignment(*m)?.clone();
                        Some(Term::apps(v, args.iter().map(|a| (*a).clone())))
                    }
                    Term::Const(c) => {
                        let info = self.env.get(c)?;
                        match &info.kind {
                            ConstKind::Def(v) => {
                                Some(Term::apps(v.clone(), args.iter().map(|a| (*a).clone())))
                            }
                            ConstKind::Equations(rules) => {
                                let rules = rules.clone();
                                self.reduce_equations(&rules, &args)
                            }
                            ConstKind::Recursor(r) => {
                                let r = r.clone();
                                self.reduce_iota(head, &r, &args)
                            }
                            _ => None,
                        }
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn reduce_equations(&mut self, rules: &[Rule], args: &[&Term]) -> Option<Term> {
        let arity = rules.first()?.patterns.len();
        if args.len() < arity {
            return None;
        }
        for rule in rules {
            let mut vars = Vec::new();
            let mut matched = true;
            for (p, a) in rule.patterns.iter().zip(args) {
                match self.match_pattern(p, a, &mut vars) {
                    None => return None,
                    Some(false) => {
                        matched = false;
                        break;
                    }
                    Some(true) => {}
                }
            }
            if matched {
                let r = rule.rhs.instantiate(&vars);
                return Some(Term::apps(r, args[arity..].iter().map(|a| (*a).clone())));
            }
        }
        None
    }

    /// `None` when the argument is stuck, `Some(false)` on a constructor clash.
    fn match_pattern(&mut self, p: &RulePattern, a: &Term, vars: &mut Vec<Term>) -> Option<bool> {
        match p {
            RulePattern::Var => {
                vars.push(a.clone());
                Some(true)
            }
            RulePattern::Zero => {
                let w = self.whnf(a);
                if w.is_const("Nat.zero") {
                    Some(true)
                } else if w.is_app_of("Nat.succ", 1) {
                    Some(false)
                } else {
                    None
                }
            }
            RulePattern::Succ(inner) => {
                let w = self.whnf(a);
                if w.is_const("Nat.zero") {
                    return Some(false);
                }
                match &w {
                    Term::App(f, x) if f.is_const("Nat.succ") => self.match_pattern(inner, x, vars),
                    _ => None,
                }
            }
        }
    }

    fn reduce_iota(&mut self, rec: &Term, info: &RecursorInfo, args: &[&Term]) -> Option<Term> {
        let major_idx = info.major_index();
        let major = self.whnf(args.get(major_idx)?);
        let (mhead, margs) = major.spine();
        let cname = mhead.const_name()?;
        let j = info.ctors.iter().position(|(c, _, _)| c == cname)?;
        let (_, nfields, rec_mask) = &info.ctors[j];
        let (_, _, ctor_params, _) = self.env.ctor_info(cname)?;
        if margs.len() != ctor_params + nfields {
            return None;
        }
        let fields: Vec<Term> = margs[ctor_params..].iter().map(|a| (*a).clone()).collect();
        let minor = args[info.num_params + 1 + j].clone();
        let mut out = Term::apps(minor, fields.iter().cloned());
        for (field, is_rec) in fields.iter().zip(rec_mask) {
            if *is_rec {
                let call = Term::apps(
                    rec.clone(),
                    args[..major_idx].iter().map(|a| (*a).clone()).chain([field.clone()]),
                );
                out = Term::app(out, call);
            }
        }
        Some(Term::apps(out, args[major_idx + 1..].iter().map(|a| (*a).clone())))
    }

    // ---------------------------------------------------------------- def_eq

    pub fn def_eq(&mut self, a: &Term, b: &Term) -> bool {
        if a == b {
            return true;
        }
        // same constant head: try arguments before unfolding
        if let (Term::App(..), Term::App(..)) = (a, b) {
            let (h1, a1) = a.spine();
            let (h2, a2) = b.spine();
            if matches!((h1, h2), (Term::Const(x), Term::Const(y)) if x == y)
                && a1.len() == a2.len()
                && a1.iter().zip(&a2).all(|(x, y)| self.def_eq(x, y))
            {
                return true;
            }
        }
        let wa = self.whnf(a);
        let wb = self.whnf(b);
        if wa == wb {
            return true;
        }
        match (&wa, &wb) {
            (Term::App(..), Term::App(..)) => {
                let (h1, a1) = wa.spine();
                let (h2, a2) = wb.spine();
                a1.len() == a2.len()
                    && self.def_eq(h1, h2)
                    && a1.iter().zip(&a2).all(|(x, y)| self.def_eq(x, y))
            }
            (Term::Lam(b1, t1), Term::Lam(b2, t2)) | (Term::Pi(b1, t1), Term::Pi(b2, t2)) => {
                if !self.def_eq(&b1.ty, &b2.ty) {
                    return false;
                }
                let (t1, t2) = (self.prep_body(t1), self.prep_body(t2));
                let f = self.open_binder(b1);
                let r = self.def_eq(&t1.instantiate1(&Term::FVar(f)), &t2.instantiate1(&Term::FVar(f)));
                self.close_binder();
                r
            }
            (Term::Lam(b1, t1), _) => self.eta(b1, t1, &wb),
            (_, Term::Lam(b2, t2)) => self.eta(b2, t2, &wa),
            (Term::Sorry(x), Term::Sorry(y)) => self.def_eq(x, y),
            _ => false,
        }
    }

    fn eta(&mut self, b: &Binder, body: &Term, other: &Term) -> bool {
        let body = self.prep_body(body);
        let f = self.open_binder(b);
        let x = Term::FVar(f);
        let r = self.def_eq(&body.instantiate1(&x), &Term::app(other.clone(), x.clone()));
        self.close_binder();
        r
    }

    // ----------------------------------------------------------------- infer

    pub fn infer(&mut self, t: &Term) -> Result<Term, KernelError> {
        match t {
            Term::BVar(i) => Err(KernelError::LooseBVar(*i)),
            Term::FVar(f) => self.local_type(*f).ok_or(KernelError::UnknownFVar(f.0)),
            Term::Const(c) => Ok(self.env.ty(c)?.clone()),
            Term::Sort(n) => Ok(Term::Sort(n + 1)),
            Term::Mvar(m) => self
                .mctx()
                .try_decl(*m)
                .map(|d| d.ty.clone())
                .ok_or(KernelError::UnknownMvar(m.0)),
            Term::Sorry(ty) => {
                self.infer_sort(ty)?;
                Ok((**ty).clone())
            }
            Term::App(f, a) => {
                let tf = self.infer(f)?;
                let tf = self.whnf(&tf);
                let Term::Pi(b, body) = &tf else {
                    return Err(KernelError::NotAFunction(debug_term(f)));
                };
                let ta = self.infer(a)?;
                if !self.def_eq(&ta, &b.ty) {
                    let mctx = self.mctx();
                    return Err(KernelError::TypeMismatch {
                        term: debug_term(a),
                        expected: debug_term(&mctx.instantiate(&b.ty)),
                        actual: debug_term(&mctx.instantiate(&ta)),
                    });
                }
                Ok(body.instantiate1(a))
            }
            Term::Lam(b, body) => {
                self.infer_sort(&b.ty)?;
                let f = self.open_binder(b);
                let r = self.infer(&body.instantiate1(&Term::FVar(f)));
                self.close_binder();
                let tb = r?;
                Ok(Term::pi((**b).clone(), tb.abstract_fvar(f)))
            }
            Term::Pi(b, body) => {
                let s1 = self.infer_sort(&b.ty)?;
                let f = self.open_binder(b);
                let r = self.infer_sort(&body.instantiate1(&Term::FVar(f)));
                self.close_binder();
                let s2 = r?;
                Ok(Term::Sort(if s2 == 0 { 0 } else { s1.max(s2) }))
            }
        }
    }

    /// The sort level of a type.
    pub fn infer_sort(&mut self, t: &Term) -> Result<u8, KernelError> {
        let ty = self.infer(t)?;
        match self.whnf(&ty) {
            Term::Sort(n) => Ok(n),
            _ => Err(KernelError::NotAType(debug_term(t))),
        }
    }

    pub fn is_prop(&mut self, ty: &Term) -> bool {
        matches!(self.infer_sort(ty), Ok(0))
    }

    /// Checks `t` against `ty`.
    pub fn check(&mut self, t: &Term, ty: &Term) -> Result<(), KernelError> {
        let actual = self.infer(t)?;
        if self.def_eq(&actual, ty) {
            Ok(())
        } else {
            let mctx = self.mctx();
            Err(KernelError::TypeMismatch {
                term: debug_term(t),
                expected: debug_term(&mctx.instantiate(ty)),
                actual: debug_term(&mctx.instantiate(&actual)),
            })
        }
    }

    // ----------------------------------------------------------------- unify

    /// First-order unification up to whnf. On failure no assignment survives.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let len = self.mctx().log().len();
        let ok = self.unify_core(a, b, 0);
        if !ok {
            self.mctx_mut().rollback(len);
        }
        ok
    }

    fn follow(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Term::Mvar(m) = &cur {
            match self.mctx().assignment(*m) {
                Some(v) => cur = v.clone(),
                None => break,
            }
        }
        cur
    }

    fn assignable(&self, t: &Term) -> Option<MvarId> {
        match t {
            Term::Mvar(m) => {
                let d = self.mctx().decl(*m);
                (d.assignment.is_none() && d.kind == MvarKind::Natural).then_some(*m)
            }
            _ => None,
        }
    }

    fn unify_core(&mut self, a: &Term, b: &Term, fuel: u32) -> bool {
        if fuel > 512 {
            return false;
        }
        let a = self.follow(a);
        let b = self.follow(b);
        if a == b {
            return true;
        }
        if let Some(m) = self.assignable(&a) {
            return self.assign_checked(m, &b);
        }
        if let Some(m) = self.assignable(&b) {
            return self.assign_checked(m, &a);
        }
        if let (Term::App(..), Term::App(..)) = (&a, &b) {
            let (h1, a1) = a.spine();
            let (h2, a2) = b.spine();
            if matches!((h1, h2), (Term::Const(x), Term::Const(y)) if x == y) && a1.len() == a2.len() {
                let len = self.mctx().log().len();
                if a1.iter().zip(&a2).all(|(x, y)| self.unify_core(x, y, fuel + 1)) {
                    return true;
                }
                self.mctx_mut().rollback(len);
            }
        }
        let wa = self.whnf(&a);
        let wb = self.whnf(&b);
        if wa != a || wb != b {
            return self.unify_core(&wa, &wb, fuel + 1);
        }
        match (&wa, &wb) {
            (Term::App(f1, x1), Term::App(f2, x2)) => {
                self.unify_core(f1, f2, fuel + 1) && self.unify_core(x1, x2, fuel + 1)
            }
            (Term::Lam(b1, t1), Term::Lam(b2, t2)) | (Term::Pi(b1, t1), Term::Pi(b2, t2)) => {
                if !self.unify_core(&b1.ty, &b2.ty, fuel + 1) {
                    return false;
                }
                let (t1, t2) = (self.prep_body(t1), self.prep_body(t2));
                let f = self.open_binder(b1);
                let x = Term::FVar(f);
                let r = self.unify_core(&t1.instantiate1(&x), &t2.instantiate1(&x), fuel + 1);
                self.close_binder();
                r
            }
            (Term::Sorry(x), Term::Sorry(y)) => self.unify_core(x, y, fuel + 1),
            _ => self.def_eq(&wa, &wb),
        }
    }

    fn assign_checked(&mut self, m: MvarId, v: &Term) -> bool {
        let v = self.mctx().instantiate(v);
        if v == Term::Mvar(m) {
            return true;
        }
        if v.occurs_mvar(m) || v.has_loose_bvars() {
            return false;
        }
        let decl = self.mctx().decl(m).clone();
        if v.fvars().iter().any(|f| !decl.lctx.contains(*f)) {
            return false;
        }
        let vty = {
            let mut tc = Tc::new(self.env, self.mctx(), &decl.lctx);
            match tc.infer(&v) {
                Ok(t) => t,
                Err(_) => return false,
            }
        };
        self.mctx_mut().assign(m, v);
        self.unify_core(&vty, &decl.ty, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::env::ConstInfo;

    fn env() -> Environment {
        let mut e = Environment::new();
        let nat = Term::nat();
        let add = |a, b| Term::apps(Term::cnst("add"), [a, b]);
        e.add(ConstInfo { name: "Nat".into(), ty: Term::Sort(1), kind: ConstKind::Axiom }).unwrap();
        e.add(ConstInfo { name: "Nat.zero".into(), ty: nat.clone(), kind: ConstKind::Axiom })
            .unwrap();
        e.add(ConstInfo {
            name: "Nat.succ".into(),
            ty: Term::arrow(nat.clone(), nat.clone()),
            kind: ConstKind::Axiom,
        })
        .unwrap();
        e.add(ConstInfo {
            name: "add".into(),
            ty: Term::arrow(nat.clone(), Term::arrow(nat.clone(), nat.clone())),
            kind: ConstKind::Equations(vec![
                Rule { patterns: vec![RulePattern::Var, RulePattern::Zero], rhs: Term::BVar(0) },
                Rule {
                    patterns: vec![RulePattern::Var, RulePattern::Succ(Box::new(RulePattern::Var))],
                    rhs: Term::app(Term::cnst("Nat.succ"), add(Term::BVar(1), Term::BVar(0))),
                },
            ]),
        })
        .unwrap();
        e
    }

    #[test]
    fn arithmetic_reduces_to_numerals() {
        let e = env();
        let m = MetavarContext::new();
        let l = LocalContext::new();
        let mut tc = Tc::new(&e, &m, &l);
        let t = Term::apps(Term::cnst("add"), [Term::numeral(2), Term::numeral(3)]);
        assert_eq!(tc.whnf(&t), Term::numeral(5));
        let beta = Term::app(Term::lam(Binder::new("x", Term::nat()), Term::BVar(0)), Term::numeral(0));
        assert_eq!(tc.whnf(&beta), Term::numeral(0));
        assert!(!tc.def_eq(&Term::numeral(0), &Term::numeral(1)));
    }

    #[test]
    fn occurs_check_and_rollback() {
        let e = env();
        let mut m = MetavarContext::new();
        let a = m.new_mvar(LocalContext::new(), Term::nat(), MvarKind::Natural, None);
        let l = LocalContext::new();
        let mut tc = Tc::new_mut(&e, &mut m, &l);
        let succ_a = Term::app(Term::cnst("Nat.succ"), Term::Mvar(a));
        assert!(!tc.unify(&Term::Mvar(a), &succ_a));
        assert!(tc.mctx().log().is_empty());
        let lhs = Term::apps(Term::cnst("add"), [Term::Mvar(a), Term::numeral(0)]);
        assert!(tc.unify(&lhs, &Term::numeral(4)));
        assert_eq!(tc.mctx().instantiate(&Term::Mvar(a)), Term::numeral(4));
    }
}
