use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Temporary free variables created while checking under binders live above
/// this id and never escape the checker.
pub const TEMP_FVAR_BASE: u32 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FVarId(pub u32);

impl FVarId {
    pub fn is_temp(self) -> bool {
        self.0 >= TEMP_FVAR_BASE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MvarId(pub u32);

impl fmt::Display for MvarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?m.{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinderInfo {
    Default,
    Implicit,
}

/// A binder of a `Lam` or `Pi`.
///
/// `tag` names the free variable this binder abstracts when it was created by
/// a tactic. Assigned metavariables under the binder may mention that free
/// variable; instantiation turns those occurrences into the bound index.
#[derive(Debug, Clone)]
pub struct Binder {
    pub name: Arc<str>,
    pub ty: Term,
    pub info: BinderInfo,
    pub tag: Option<FVarId>,
}

impl Binder {
    pub fn new(name: impl Into<Arc<str>>, ty: Term) -> Self {
        Binder { name: name.into(), ty, info: BinderInfo::Default, tag: None }
    }

    pub fn implicit(mut self) -> Self {
        self.info = BinderInfo::Implicit;
        self
    }

    pub fn tagged(mut self, f: FVarId) -> Self {
        self.tag = Some(f);
        self
    }

    pub fn with_ty(&self, ty: Term) -> Self {
        Binder { name: self.name.clone(), ty, info: self.info, tag: self.tag }
    }
}

#[derive(Debug, Clone)]
pub enum Term {
    BVar(u32),
    FVar(FVarId),
    Const(Arc<str>),
    /// 0 is `Prop`, 1 is `Type`.
    Sort(u8),
    App(Arc<Term>, Arc<Term>),
    Lam(Arc<Binder>, Arc<Term>),
    Pi(Arc<Binder>, Arc<Term>),
    Mvar(MvarId),
    Sorry(Arc<Term>),
}

/// Alpha-equivalence: binder names, infos and tags are ignored.
impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::BVar(a), Term::BVar(b)) => a == b,
            (Term::FVar(a), Term::FVar(b)) => a == b,
            (Term::Const(a), Term::Const(b)) => a == b,
            (Term::Sort(a), Term::Sort(b)) => a == b,
            (Term::App(f1, a1), Term::App(f2, a2)) => {
                (Arc::ptr_eq(f1, f2) || f1 == f2) && (Arc::ptr_eq(a1, a2) || a1 == a2)
            }
            (Term::Lam(b1, t1), Term::Lam(b2, t2)) | (Term::Pi(b1, t1), Term::Pi(b2, t2)) => {
                b1.ty == b2.ty && t1 == t2
            }
            (Term::Mvar(a), Term::Mvar(b)) => a == b,
            (Term::Sorry(a), Term::Sorry(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Term {
    pub fn cnst(name: &str) -> Term {
        Term::Const(Arc::from(name))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Arc::new(f), Arc::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn lam(b: Binder, body: Term) -> Term {
        Term::Lam(Arc::new(b), Arc::new(body))
    }

    pub fn pi(b: Binder, body: Term) -> Term {
        Term::Pi(Arc::new(b), Arc::new(body))
    }

    pub fn arrow(a: Term, b: Term) -> Term {
        Term::pi(Binder::new("a", a), b.lift(0, 1))
    }

    pub fn sorry(ty: Term) -> Term {
        Term::Sorry(Arc::new(ty))
    }

    pub fn prop() -> Term {
        Term::Sort(0)
    }

    pub fn nat() -> Term {
        Term::cnst("Nat")
    }

    pub fn numeral(n: u64) -> Term {
        let mut t = Term::cnst("Nat.zero");
        for _ in 0..n {
            t = Term::app(Term::cnst("Nat.succ"), t);
        }
        t
    }

    pub fn is_const(&self, name: &str) -> bool {
        matches!(self, Term::Const(c) if &**c == name)
    }

    pub fn const_name(&self) -> Option<&str> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Head of an application spine.
    pub fn head(&self) -> &Term {
        let mut cur = self;
        while let Term::App(f, _) = cur {
            cur = f;
        }
        cur
    }

    /// Head and arguments of an application spine.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Term::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    pub fn num_args(&self) -> usize {
        let mut n = 0;
        let mut cur = self;
        while let Term::App(f, _) = cur {
            n += 1;
            cur = f;
        }
        n
    }

    /// `Const name` applied to exactly `n` arguments.
    pub fn is_app_of(&self, name: &str, n: usize) -> bool {
        self.head().is_const(name) && self.num_args() == n
    }

    pub fn as_numeral(&self) -> Option<u64> {
        let mut n = 0;
        let mut cur = self;
        loop {
            if cur.is_const("Nat.zero") {
                return Some(n);
            }
            match cur {
                Term::App(f, a) if f.is_const("Nat.succ") => {
                    n += 1;
                    cur = a;
                }
                _ => return None,
            }
        }
    }

    /// Smallest `k` such that every loose bound index is below `k`.
    pub fn loose_bvar_range(&self) -> u32 {
        match self {
            Term::BVar(i) => i + 1,
            Term::App(f, a) => f.loose_bvar_range().max(a.loose_bvar_range()),
            Term::Lam(b, body) | Term::Pi(b, body) => {
                b.ty.loose_bvar_range().max(body.loose_bvar_range().saturating_sub(1))
            }
            Term::Sorry(t) => t.loose_bvar_range(),
            _ => 0,
        }
    }

    pub fn has_loose_bvars(&self) -> bool {
        self.loose_bvar_range() > 0
    }

    pub fn has_loose_bvar(&self, idx: u32) -> bool {
        match self {
            Term::BVar(i) => *i == idx,
            Term::App(f, a) => f.has_loose_bvar(idx) || a.has_loose_bvar(idx),
            Term::Lam(b, body) | Term::Pi(b, body) => {
                b.ty.has_loose_bvar(idx) || body.has_loose_bvar(idx + 1)
            }
            Term::Sorry(t) => t.has_loose_bvar(idx),
            _ => false,
        }
    }

    /// Rebuilds the term bottom-up; `f` gets each subterm and the number of
    /// binders crossed, and may return a replacement.
    /// Drops binder tags; for closed terms stored outside any session.
    pub fn strip_tags(&self) -> Term {
        match self {
            Term::App(g, a) => Term::app(g.strip_tags(), a.strip_tags()),
            Term::Lam(b, body) | Term::Pi(b, body) => {
                let mut b2 = b.with_ty(b.ty.strip_tags());
                b2.tag = None;
                let body2 = body.strip_tags();
                if matches!(self, Term::Lam(..)) {
                    Term::lam(b2, body2)
                } else {
                    Term::pi(b2, body2)
                }
            }
            Term::Sorry(t) => Term::sorry(t.strip_tags()),
            _ => self.clone(),
        }
    }

    pub fn replace(&self, f: &mut impl FnMut(&Term, u32) -> Option<Term>) -> Term {
        self.replace_at(0, f)
    }

    fn replace_at(&self, depth: u32, f: &mut impl FnMut(&Term, u32) -> Option<Term>) -> Term {
        if let Some(r) = f(self, depth) {
            return r;
        }
        match self {
            Term::App(g, a) => {
                let g2 = g.replace_at(depth, f);
                let a2 = a.replace_at(depth, f);
                if ptr_same(g, &g2) && ptr_same(a, &a2) {
                    self.clone()
                } else {
                    Term::app(g2, a2)
                }
            }
            Term::Lam(b, body) | Term::Pi(b, body) => {
                let ty = b.ty.replace_at(depth, f);
                let body2 = body.replace_at(depth + 1, f);
                let b2 = Arc::new(b.with_ty(ty));
                match self {
                    Term::Lam(..) => Term::Lam(b2, Arc::new(body2)),
                    _ => Term::Pi(b2, Arc::new(body2)),
                }
            }
            Term::Sorry(t) => Term::sorry(t.replace_at(depth, f)),
            _ => self.clone(),
        }
    }

    /// Shifts loose indices `>= cutoff` up by `n`.
    pub fn lift(&self, cutoff: u32, n: u32) -> Term {
        if n == 0 || self.loose_bvar_range() <= cutoff {
            return self.clone();
        }
        self.replace(&mut |t, d| match t {
            Term::BVar(i) if *i >= cutoff + d => Some(Term::BVar(i + n)),
            _ if t.loose_bvar_range() <= cutoff + d => Some(t.clone()),
            _ => None,
        })
    }

    /// Substitutes `vals` for the outermost loose indices: with `vals` ordered
    /// outer to inner, `BVar(j)` for `j < vals.len()` becomes
    /// `vals[vals.len() - 1 - j]`. Remaining loose indices shift down.
    pub fn instantiate(&self, vals: &[Term]) -> Term {
        let n = vals.len() as u32;
        if n == 0 || !self.has_loose_bvars() {
            return self.clone();
        }
        self.replace(&mut |t, d| match t {
            Term::BVar(i) if *i >= d => {
                let j = i - d;
                if j < n {
                    Some(vals[(n - 1 - j) as usize].lift(0, d))
                } else {
                    Some(Term::BVar(i - n))
                }
            }
            _ if t.loose_bvar_range() <= d => Some(t.clone()),
            _ => None,
        })
    }

    pub fn instantiate1(&self, val: &Term) -> Term {
        self.instantiate(std::slice::from_ref(val))
    }

    /// Inverse of `instantiate` for free variables (outer to inner order).
    pub fn abstract_fvars(&self, fvars: &[FVarId]) -> Term {
        if fvars.is_empty() || !self.has_any_fvar(fvars) {
            return self.clone();
        }
        let n = fvars.len() as u32;
        self.replace(&mut |t, d| match t {
            Term::FVar(x) => fvars
                .iter()
                .position(|y| y == x)
                .map(|i| Term::BVar(d + n - 1 - i as u32)),
            _ => None,
        })
    }

    pub fn abstract_fvar(&self, fvar: FVarId) -> Term {
        self.abstract_fvars(&[fvar])
    }

    pub fn subst_fvar(&self, fvar: FVarId, val: &Term) -> Term {
        if !self.has_fvar(fvar) {
            return self.clone();
        }
        self.replace(&mut |t, d| match t {
            Term::FVar(x) if *x == fvar => Some(val.lift(0, d)),
            _ => None,
        })
    }

    pub fn has_fvar(&self, fvar: FVarId) -> bool {
        self.any(&mut |t| matches!(t, Term::FVar(x) if *x == fvar))
    }

    pub fn has_any_fvar(&self, fvars: &[FVarId]) -> bool {
        self.any(&mut |t| matches!(t, Term::FVar(x) if fvars.contains(x)))
    }

    pub fn has_mvar(&self) -> bool {
        self.any(&mut |t| matches!(t, Term::Mvar(_)))
    }

    pub fn has_sorry(&self) -> bool {
        self.any(&mut |t| matches!(t, Term::Sorry(_)))
    }

    pub fn occurs_mvar(&self, m: MvarId) -> bool {
        self.any(&mut |t| matches!(t, Term::Mvar(x) if *x == m))
    }

    /// Pre-order search.
    pub fn any(&self, p: &mut impl FnMut(&Term) -> bool) -> bool {
        if p(self) {
            return true;
        }
        match self {
            Term::App(f, a) => f.any(p) || a.any(p),
            Term::Lam(b, body) | Term::Pi(b, body) => b.ty.any(p) || body.any(p),
            Term::Sorry(t) => t.any(p),
            _ => false,
        }
    }

    pub fn for_each(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match self {
            Term::App(g, a) => {
                g.for_each(f);
                a.for_each(f);
            }
            Term::Lam(b, body) | Term::Pi(b, body) => {
                b.ty.for_each(f);
                body.for_each(f);
            }
            Term::Sorry(t) => t.for_each(f),
            _ => {}
        }
    }

    /// Metavariables in order of first occurrence.
    pub fn mvars(&self) -> Vec<MvarId> {
        let mut out = Vec::new();
        self.for_each(&mut |t| {
            if let Term::Mvar(m) = t {
                if !out.contains(m) {
                    out.push(*m);
                }
            }
        });
        out
    }

    /// Free variables in order of first occurrence.
    pub fn fvars(&self) -> Vec<FVarId> {
        let mut out = Vec::new();
        self.for_each(&mut |t| {
            if let Term::FVar(x) = t {
                if !out.contains(x) {
                    out.push(*x);
                }
            }
        });
        out
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::App(f, a) => 1 + f.size() + a.size(),
            Term::Lam(b, body) | Term::Pi(b, body) => 1 + b.ty.size() + body.size(),
            Term::Sorry(t) => 1 + t.size(),
            _ => 1,
        }
    }
}

fn ptr_same(a: &Arc<Term>, b: &Term) -> bool {
    match (&**a, b) {
        (Term::App(f1, x1), Term::App(f2, x2)) => Arc::ptr_eq(f1, f2) && Arc::ptr_eq(x1, x2),
        (Term::Lam(b1, t1), Term::Lam(b2, t2)) | (Term::Pi(b1, t1), Term::Pi(b2, t2)) => {
            Arc::ptr_eq(b1, b2) && Arc::ptr_eq(t1, t2)
        }
        (Term::Sorry(x), Term::Sorry(y)) => Arc::ptr_eq(x, y),
        (Term::BVar(i), Term::BVar(j)) => i == j,
        (Term::FVar(i), Term::FVar(j)) => i == j,
        (Term::Mvar(i), Term::Mvar(j)) => i == j,
        (Term::Sort(i), Term::Sort(j)) => i == j,
        (Term::Const(x), Term::Const(y)) => Arc::ptr_eq(x, y),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instantiate_and_abstract_are_inverse() {
        let x = FVarId(7);
        let body = Term::apps(Term::cnst("f"), [Term::BVar(0), Term::BVar(1)]);
        let opened = body.instantiate(&[Term::FVar(FVarId(1)), Term::FVar(x)]);
        assert_eq!(opened, Term::apps(Term::cnst("f"), [Term::FVar(x), Term::FVar(FVarId(1))]));
        assert_eq!(opened.abstract_fvars(&[FVarId(1), x]), body);
    }

    #[test]
    fn instantiate_under_binder_shifts() {
        // fun y => #1 y   with #1 := z
        let t = Term::lam(Binder::new("y", Term::nat()), Term::app(Term::BVar(1), Term::BVar(0)));
        let r = t.instantiate1(&Term::cnst("z"));
        let expect = Term::lam(Binder::new("y", Term::nat()), Term::app(Term::cnst("z"), Term::BVar(0)));
        assert_eq!(r, expect);
        assert_eq!(t.loose_bvar_range(), 1);
    }

    #[test]
    fn alpha_equality_ignores_names() {
        let a = Term::lam(Binder::new("x", Term::nat()), Term::BVar(0));
        let b = Term::lam(Binder::new("y", Term::nat()).tagged(FVarId(3)), Term::BVar(0));
        assert_eq!(a, b);
        assert_eq!(Term::numeral(3).as_numeral(), Some(3));
    }
}
