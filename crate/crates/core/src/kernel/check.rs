//! Proof verification: per-assignment checks and the final whole-term check.

use super::env::Environment;
use super::mctx::{LocalContext, MetavarContext};
use super::print::debug_term;
use super::tc::Tc;
use super::term::{Binder, MvarId, Term};
use super::KernelError;

/// Work done by the checker, for comparing verification strategies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckStats {
    /// Number of kernel invocations.
    pub checks: usize,
    /// Sum of the sizes of all checked terms.
    pub checked_size: usize,
}

impl CheckStats {
    pub fn add(&mut self, other: CheckStats) {
        self.checks += other.checks;
        self.checked_size += other.checked_size;
    }
}

/// Type-checks the raw assignment of each id in its own local context.
/// Unassigned metavariables and `sorry` count as opaque holes of their
/// declared types.
pub fn check_new_assignments(
    env: &Environment,
    mctx: &MetavarContext,
    ids: &[MvarId],
    stats: &mut CheckStats,
) -> Result<(), KernelError> {
    for &m in ids {
        let decl = mctx.decl(m);
        let Some(val) = &decl.assignment else {
            return Err(KernelError::NotAssigned(m.0));
        };
        stats.checks += 1;
        stats.checked_size += val.size();
        let mut tc = Tc::new(env, mctx, &decl.lctx);
        let ty = mctx.instantiate(&decl.ty);
        tc.check(val, &ty).map_err(|e| KernelError::BadAssignment { mvar: m.0, cause: Box::new(e) })?;
    }
    Ok(())
}

/// Closes `t` over the hypotheses of `lctx` with lambdas.
pub fn close_term(lctx: &LocalContext, t: &Term) -> Term {
    close_with(lctx, t, false)
}

/// Closes `ty` over the hypotheses of `lctx` with a Pi telescope.
pub fn close_type(lctx: &LocalContext, ty: &Term) -> Term {
    close_with(lctx, ty, true)
}

fn close_with(lctx: &LocalContext, t: &Term, pi: bool) -> Term {
    let mut out = t.clone();
    for d in lctx.decls.iter().rev() {
        // abstracting later also reaches the types of inner binders
        out = out.abstract_fvar(d.fvar);
        let b = Binder::new(d.user_name.as_str(), d.ty.clone()).tagged(d.fvar);
        out = if pi { Term::pi(b, out) } else { Term::lam(b, out) };
    }
    out
}

/// Full check of a finished proof: no `sorry`, no holes, and the right type.
pub fn check_closed_proof(
    env: &Environment,
    term: &Term,
    ty: &Term,
    stats: &mut CheckStats,
) -> Result<(), KernelError> {
    if term.has_sorry() {
        return Err(KernelError::ContainsSorry);
    }
    if let Some(m) = term.mvars().first() {
        return Err(KernelError::ContainsHole(m.0));
    }
    stats.checks += 1;
    stats.checked_size += term.size();
    let mctx = MetavarContext::new();
    let lctx = LocalContext::new();
    let mut tc = Tc::new(env, &mctx, &lctx);
    tc.check(term, ty)
}

/// Checks a partial proof term where only `allowed` may remain as holes.
pub fn check_partial_proof(
    env: &Environment,
    mctx: &MetavarContext,
    term: &Term,
    ty: &Term,
    allowed: &[MvarId],
    stats: &mut CheckStats,
) -> Result<(), KernelError> {
    if term.has_sorry() {
        return Err(KernelError::ContainsSorry);
    }
    if let Some(m) = term.mvars().into_iter().find(|m| !allowed.contains(m)) {
        return Err(KernelError::ContainsHole(m.0));
    }
    stats.checks += 1;
    stats.checked_size += term.size();
    let lctx = LocalContext::new();
    let mut tc = Tc::new(env, mctx, &lctx);
    tc.check(term, ty).map_err(|e| match e {
        KernelError::UnknownFVar(_) => KernelError::Mismatch(format!(
            "hole escapes its context in {}",
            debug_term(term)
        )),
        e => e,
    })
}
