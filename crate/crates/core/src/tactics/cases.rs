use crate::kernel::{is_inaccessible, FVarId, LocalContext, LocalDecl, MvarId, Term};

use super::interp::{close_over, Interp, TResult};
use super::TacticError;

fn err(msg: impl Into<String>) -> TacticError {
    TacticError::Failed(msg.into())
}

type Decls = Vec<(FVarId, String, Term)>;

impl<'a> Interp<'a> {
    /// Splits `lctx` into the hypotheses independent of `x` and those after
    /// it whose types mention it, transitively. `x` itself is in neither.
    fn revert(&self, lctx: &LocalContext, x: FVarId) -> (LocalContext, Vec<LocalDecl>) {
        let mut base = LocalContext::new();
        let mut deps: Vec<LocalDecl> = Vec::new();
        let mut hit = vec![x];
        let mut after = false;
        for d in &lctx.decls {
            if d.fvar == x {
                after = true;
                continue;
            }
            let mut d = d.clone();
            d.ty = self.mctx.instantiate(&d.ty);
            if after && d.ty.has_any_fvar(&hit) {
                hit.push(d.fvar);
                deps.push(d);
            } else {
                base.decls.push(d);
            }
        }
        (base, deps)
    }

    /// Pushes copies of `deps` onto `base` with `subst` applied; returns the
    /// new declarations and the extended substitution.
    fn reintro(&mut self, base: &mut LocalContext, deps: &[LocalDecl], subst: &[(FVarId, Term)]) -> (Decls, Vec<(FVarId, Term)>) {
        let mut subst = subst.to_vec();
        let mut out = Vec::new();
        for d in deps {
            let ty = apply_subst(&d.ty, &subst);
            let f = self.mctx.new_fvar();
            base.push(f, d.user_name.clone(), ty.clone());
            subst.push((d.fvar, Term::FVar(f)));
            out.push((f, d.user_name.clone(), ty));
        }
        (out, subst)
    }

    /// `cases h` / `induction h`.
    pub(crate) fn cases(&mut self, g: MvarId, name: &str, induction: bool) -> TResult<Vec<MvarId>> {
        let lctx = self.lctx(g);
        if is_inaccessible(name) {
            return Err(TacticError::UnknownHypothesis(name.to_string()));
        }
        let x = lctx.find_by_name(name).ok_or_else(|| TacticError::UnknownHypothesis(name.to_string()))?.clone();
        let ty = self.whnf(&lctx, &x.ty);
        let target = self.target(g);
        let (head, args) = ty.spine();
        let args: Vec<Term> = args.into_iter().cloned().collect();
        match head.const_name() {
            Some("Nat") if args.is_empty() => self.cases_nat(g, &lctx, x.fvar, target, induction),
            Some(ind @ ("And" | "Iff" | "Or" | "False" | "Eq")) => {
                if target.has_fvar(x.fvar) {
                    return Err(err(format!("cannot eliminate '{name}': the goal depends on it")));
                }
                if ind == "Eq" {
                    return self.cases_eq(g, &lctx, &x, &args, target);
                }
                let (base, deps) = self.revert(&lctx, x.fvar);
                if !deps.is_empty() {
                    return Err(err(format!("cannot eliminate '{name}': other hypotheses depend on it")));
                }
                self.cases_prop(g, base, ind, &args, x.fvar, target)
            }
            _ => Err(err(format!(
                "cases not supported on hypothesis of type {}",
                self.show(&lctx, &ty)
            ))),
        }
    }

    fn cases_nat(&mut self, g: MvarId, lctx: &LocalContext, x: FVarId, target: Term, induction: bool) -> TResult<Vec<MvarId>> {
        let (base, deps) = self.revert(lctx, x);
        let dep_decls: Decls = deps.iter().map(|d| (d.fvar, d.user_name.clone(), d.ty.clone())).collect();
        let body = close_over(&dep_decls, target.clone(), true);
        let motive_at = |t: &Term| body.subst_fvar(x, t);
        let motive = Term::lam(
            crate::kernel::Binder::new("t", Term::nat()).tagged(x),
            body.abstract_fvar(x),
        );

        // zero
        let mut lz = base.clone();
        let zero = Term::cnst("Nat.zero");
        let (dz, sz) = self.reintro(&mut lz, &deps, &[(x, zero)]);
        let gz = self.new_goal(lz, apply_subst(&target, &sz), Some("zero"));
        let minor_z = close_over(&dz, Term::Mvar(gz), false);

        // succ
        let mut ls = base.clone();
        let n = self.mctx.new_fvar();
        let n_name = ls.fresh_dagger("n");
        ls.push(n, n_name.clone(), Term::nat());
        let ih = self.mctx.new_fvar();
        let ih_ty = motive_at(&Term::FVar(n));
        let ih_name = ls.fresh_dagger("ih");
        if induction {
            ls.push(ih, ih_name.clone(), ih_ty.clone());
        }
        let succ_n = Term::app(Term::cnst("Nat.succ"), Term::FVar(n));
        let (ds, ss) = self.reintro(&mut ls, &deps, &[(x, succ_n)]);
        let gs = self.new_goal(ls, apply_subst(&target, &ss), Some("succ"));
        let mut fields = vec![(n, n_name, Term::nat()), (ih, ih_name, ih_ty)];
        fields.extend(ds);
        let minor_s = close_over(&fields, Term::Mvar(gs), false);

        let mut val = Term::apps(Term::cnst("Nat.rec"), [motive, minor_z, minor_s, Term::FVar(x)]);
        val = Term::apps(val, deps.iter().map(|d| Term::FVar(d.fvar)));
        self.mctx.assign(g, val);
        Ok(vec![gz, gs])
    }

    fn cases_prop(&mut self, g: MvarId, base: LocalContext, ind: &str, args: &[Term], h: FVarId, target: Term) -> TResult<Vec<MvarId>> {
        let arrow = |a: &Term, b: &Term| Term::arrow(a.clone(), b.clone());
        // (tag, fields) per constructor
        let shapes: Vec<(&str, Vec<(&str, Term)>)> = match ind {
            "And" => vec![("intro", vec![("left", args[0].clone()), ("right", args[1].clone())])],
            "Iff" => vec![(
                "intro",
                vec![("mp", arrow(&args[0], &args[1])), ("mpr", arrow(&args[1], &args[0]))],
            )],
            "Or" => vec![("inl", vec![("h", args[0].clone())]), ("inr", vec![("h", args[1].clone())])],
            _ => vec![],
        };
        let mut goals = Vec::new();
        let mut minors = Vec::new();
        for (tag, fields) in shapes {
            let mut l = base.clone();
            let mut decls = Vec::new();
            for (fname, fty) in fields {
                let f = self.mctx.new_fvar();
                let uname = l.fresh_dagger(fname);
                l.push(f, uname.clone(), fty.clone());
                decls.push((f, uname, fty));
            }
            let m = self.new_goal(l, target.clone(), Some(tag));
            minors.push(close_over(&decls, Term::Mvar(m), false));
            goals.push(m);
        }
        let rec = Term::cnst(&format!("{ind}.rec"));
        let val = if ind == "False" {
            Term::apps(rec, [target, Term::FVar(h)])
        } else {
            let mut v = Term::apps(rec, [args[0].clone(), args[1].clone(), target]);
            v = Term::apps(v, minors);
            Term::app(v, Term::FVar(h))
        };
        self.mctx.assign(g, val);
        Ok(goals)
    }

    /// `cases h` with `h : a = y` or `h : y = b` for a variable `y`:
    /// substitutes the other side for `y`.
    fn cases_eq(&mut self, g: MvarId, lctx: &LocalContext, h: &LocalDecl, args: &[Term], target: Term) -> TResult<Vec<MvarId>> {
        let (lhs, rhs) = (&args[0], &args[1]);
        let is_var = |t: &Term| match t {
            Term::FVar(y) => lctx.contains(*y),
            _ => false,
        };
        let (y, other, proof) = match (rhs, lhs) {
            (Term::FVar(y), o) if is_var(rhs) && !o.has_fvar(*y) => (*y, o.clone(), Term::FVar(h.fvar)),
            (o, Term::FVar(y)) if is_var(lhs) && !o.has_fvar(*y) => {
                let p = Term::apps(Term::cnst("Eq.symm"), [lhs.clone(), rhs.clone(), Term::FVar(h.fvar)]);
                (*y, o.clone(), p)
            }
            _ => return Err(err("dependent elimination failed: neither side is a variable")),
        };
        let (base, deps) = self.revert(lctx, y);
        if other.fvars().iter().any(|f| !base.contains(*f)) {
            return Err(err("dependent elimination failed"));
        }
        let deps: Vec<LocalDecl> = deps.into_iter().filter(|d| d.fvar != h.fvar).collect();
        if deps.iter().any(|d| d.ty.has_fvar(h.fvar)) {
            return Err(err("dependent elimination failed: other hypotheses depend on the equation"));
        }
        let dep_decls: Decls = deps.iter().map(|d| (d.fvar, d.user_name.clone(), d.ty.clone())).collect();
        let body = close_over(&dep_decls, target.clone(), true);
        let motive = Term::lam(crate::kernel::Binder::new("t", Term::nat()).tagged(y), body.abstract_fvar(y));
        let mut l = base;
        let (ds, s) = self.reintro(&mut l, &deps, &[(y, other.clone())]);
        let m = self.new_goal(l, apply_subst(&target, &s), Some("refl"));
        let minor = close_over(&ds, Term::Mvar(m), false);
        let mut val = Term::apps(Term::cnst("Eq.rec"), [other, motive, minor, Term::FVar(y), proof]);
        val = Term::apps(val, deps.iter().map(|d| Term::FVar(d.fvar)));
        self.mctx.assign(g, val);
        Ok(vec![m])
    }
}

fn apply_subst(t: &Term, subst: &[(FVarId, Term)]) -> Term {
    subst.iter().fold(t.clone(), |acc, (f, v)| acc.subst_fvar(*f, v))
}
