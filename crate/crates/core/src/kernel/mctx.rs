use std::collections::{BTreeMap, HashMap};

use super::term::{FVarId, MvarId, Term};

/// Marks names that tactics cannot refer to.
pub const DAGGER: char = '†';

pub fn is_inaccessible(name: &str) -> bool {
    name.contains(DAGGER)
}

/// A hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDecl {
    pub fvar: FVarId,
    pub user_name: String,
    pub ty: Term,
    pub value: Option<Term>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalContext {
    pub decls: Vec<LocalDecl>,
}

impl LocalContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, fvar: FVarId, user_name: impl Into<String>, ty: Term) {
        self.decls.push(LocalDecl { fvar, user_name: user_name.into(), ty, value: None });
    }

    pub fn find(&self, fvar: FVarId) -> Option<&LocalDecl> {
        self.decls.iter().find(|d| d.fvar == fvar)
    }

    pub fn position(&self, fvar: FVarId) -> Option<usize> {
        self.decls.iter().position(|d| d.fvar == fvar)
    }

    pub fn contains(&self, fvar: FVarId) -> bool {
        self.find(fvar).is_some()
    }

    /// Latest hypothesis with this user name.
    pub fn find_by_name(&self, name: &str) -> Option<&LocalDecl> {
        self.decls.iter().rev().find(|d| d.user_name == name)
    }

    pub fn fvars(&self) -> Vec<FVarId> {
        self.decls.iter().map(|d| d.fvar).collect()
    }

    /// `base†`, `base†1`, `base†2`, ... whichever is first unused.
    pub fn fresh_dagger(&self, base: &str) -> String {
        let base = base.trim_end_matches(|c: char| c == DAGGER || c.is_ascii_digit());
        let base = if base.is_empty() { "a" } else { base };
        let mut i = 0;
        loop {
            let cand = if i == 0 { format!("{base}{DAGGER}") } else { format!("{base}{DAGGER}{i}") };
            if self.find_by_name(&cand).is_none() {
                return cand;
            }
            i += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MvarKind {
    /// May be assigned by unification.
    Natural,
    /// Goals and `?_`; assigned only by tactics.
    Synthetic,
}

#[derive(Debug, Clone)]
pub struct MetavarDecl {
    pub lctx: LocalContext,
    pub ty: Term,
    pub assignment: Option<Term>,
    pub tag: Option<String>,
    pub kind: MvarKind,
}

/// Registry of metavariables. Assignments are append-only; the log records
/// them in order.
#[derive(Debug, Clone, Default)]
pub struct MetavarContext {
    decls: BTreeMap<MvarId, MetavarDecl>,
    log: Vec<MvarId>,
    next_mvar: u32,
    next_fvar: u32,
}

impl MetavarContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_fvar(&mut self) -> FVarId {
        let f = FVarId(self.next_fvar);
        self.next_fvar += 1;
        f
    }

    pub fn new_mvar(
        &mut self,
        lctx: LocalContext,
        ty: Term,
        kind: MvarKind,
        tag: Option<String>,
    ) -> MvarId {
        let m = MvarId(self.next_mvar);
        self.next_mvar += 1;
        self.decls.insert(m, MetavarDecl { lctx, ty, assignment: None, tag, kind });
        m
    }

    pub fn decl(&self, m: MvarId) -> &MetavarDecl {
        self.decls.get(&m).unwrap_or_else(|| panic!("unknown metavariable {m}"))
    }

    pub fn try_decl(&self, m: MvarId) -> Option<&MetavarDecl> {
        self.decls.get(&m)
    }

    pub fn set_tag(&mut self, m: MvarId, tag: Option<String>) {
        if let Some(d) = self.decls.get_mut(&m) {
            d.tag = tag;
        }
    }

    pub fn assignment(&self, m: MvarId) -> Option<&Term> {
        self.decls.get(&m).and_then(|d| d.assignment.as_ref())
    }

    pub fn is_assigned(&self, m: MvarId) -> bool {
        self.assignment(m).is_some()
    }

    pub fn assign(&mut self, m: MvarId, val: Term) {
        let d = self.decls.get_mut(&m).unwrap_or_else(|| panic!("unknown metavariable {m}"));
        assert!(d.assignment.is_none(), "metavariable {m} assigned twice");
        d.assignment = Some(val);
        self.log.push(m);
    }

    /// Assignment order.
    pub fn log(&self) -> &[MvarId] {
        &self.log
    }

    /// Undoes assignments made after the log had length `len`. Only used to
    /// abandon a failed, unpublished transaction.
    pub fn rollback(&mut self, len: usize) {
        while self.log.len() > len {
            let m = self.log.pop().unwrap();
            self.decls.get_mut(&m).unwrap().assignment = None;
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = MvarId> + '_ {
        self.decls.keys().copied()
    }

    /// Substitutes assigned metavariables recursively. Free variables that an
    /// enclosing tagged binder abstracts become bound indices.
    pub fn instantiate(&self, t: &Term) -> Term {
        let mut cache = HashMap::new();
        let mut stack = Vec::new();
        self.inst(t, &mut stack, &mut cache)
    }

    fn inst(
        &self,
        t: &Term,
        stack: &mut Vec<Option<FVarId>>,
        cache: &mut HashMap<MvarId, Term>,
    ) -> Term {
        if !t.has_mvar() {
            return t.clone();
        }
        match t {
            Term::Mvar(m) => {
                let Some(v) = self.assignment(*m) else { return t.clone() };
                let full = match cache.get(m) {
                    Some(x) => x.clone(),
                    None => {
                        let mut fresh = Vec::new();
                        let x = self.inst(v, &mut fresh, cache);
                        cache.insert(*m, x.clone());
                        x
                    }
                };
                abstract_tags(&full, stack)
            }
            Term::App(f, a) => Term::app(self.inst(f, stack, cache), self.inst(a, stack, cache)),
            Term::Lam(b, body) | Term::Pi(b, body) => {
                let ty = self.inst(&b.ty, stack, cache);
                stack.push(b.tag);
                let body2 = self.inst(body, stack, cache);
                stack.pop();
                let b2 = b.with_ty(ty);
                if matches!(t, Term::Lam(..)) {
                    Term::lam(b2, body2)
                } else {
                    Term::pi(b2, body2)
                }
            }
            Term::Sorry(ty) => Term::sorry(self.inst(ty, stack, cache)),
            _ => t.clone(),
        }
    }

    /// Unassigned metavariables reachable from `t` after instantiation.
    pub fn unassigned_mvars(&self, t: &Term) -> Vec<MvarId> {
        self.instantiate(t).mvars()
    }
}

/// Replaces free variables named by binder tags on `stack` (outer to inner)
/// with the matching bound index.
fn abstract_tags(t: &Term, stack: &[Option<FVarId>]) -> Term {
    let tags: Vec<FVarId> = stack.iter().flatten().copied().collect();
    if tags.is_empty() || !t.has_any_fvar(&tags) {
        return t.clone();
    }
    let n = stack.len() as u32;
    t.replace(&mut |s, d| match s {
        Term::FVar(x) => {
            // innermost binder wins if a tag repeats
            let i = stack.iter().rposition(|tag| *tag == Some(*x))?;
            Some(Term::BVar(d + n - 1 - i as u32))
        }
        _ => None,
    })
}
