//! Turning terms back into surface syntax.

use std::collections::HashSet;

use super::mctx::LocalContext;
use super::term::Term;
use crate::syntax::{render_expr, Expr};

/// Surface form of `t` with free variables named from `lctx`.
pub fn delab(t: &Term, lctx: &LocalContext) -> Expr {
    let mut used: HashSet<String> = lctx.decls.iter().map(|d| d.user_name.clone()).collect();
    let mut stack = Vec::new();
    go(t, lctx, &mut stack, &mut used)
}

pub fn pretty(t: &Term, lctx: &LocalContext) -> String {
    render_expr(&delab(t, lctx))
}

/// Context-free rendering used in error messages.
pub fn debug_term(t: &Term) -> String {
    pretty(t, &LocalContext::new())
}

fn fresh_name(base: &str, used: &HashSet<String>) -> String {
    let base = if base.is_empty() || base == "_" { "x" } else { base };
    if !used.contains(base) {
        return base.to_string();
    }
    let mut i = 1;
    loop {
        let cand = format!("{base}_{i}");
        if !used.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

fn go(t: &Term, lctx: &LocalContext, stack: &mut Vec<String>, used: &mut HashSet<String>) -> Expr {
    match t {
        Term::BVar(i) => {
            let i = *i as usize;
            if i < stack.len() {
                Expr::Ident(stack[stack.len() - 1 - i].clone())
            } else {
                Expr::Ident(format!("#{i}"))
            }
        }
        Term::FVar(f) => match lctx.find(*f) {
            Some(d) => Expr::Ident(d.user_name.clone()),
            None => Expr::Ident(format!("_fvar.{}", f.0)),
        },
        Term::Const(c) => Expr::Ident(c.to_string()),
        Term::Sort(n) => Expr::Sort(*n),
        Term::App(f, a) => Expr::app(go(f, lctx, stack, used), go(a, lctx, stack, used)),
        Term::Mvar(m) => Expr::Mvar(format!("m.{}", m.0)),
        Term::Sorry(_) => Expr::Sorry,
        Term::Pi(b, body) if !body.has_loose_bvar(0) => {
            let ty = go(&b.ty, lctx, stack, used);
            stack.push(String::from("_"));
            let body = go(body, lctx, stack, used);
            stack.pop();
            Expr::Pi { name: None, implicit: false, ty: Box::new(ty), body: Box::new(body) }
        }
        Term::Pi(b, body) | Term::Lam(b, body) => {
            let ty = go(&b.ty, lctx, stack, used);
            let name = fresh_name(&b.name, used);
            used.insert(name.clone());
            stack.push(name.clone());
            let body_e = go(body, lctx, stack, used);
            stack.pop();
            used.remove(&name);
            match t {
                Term::Pi(..) => Expr::Pi {
                    name: Some(name),
                    implicit: b.info == super::term::BinderInfo::Implicit,
                    ty: Box::new(ty),
                    body: Box::new(body_e),
                },
                _ => Expr::Lam { name, ty: Some(Box::new(ty)), body: Box::new(body_e) },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::term::{Binder, FVarId};

    #[test]
    fn prints_infix_with_hypothesis_names() {
        let mut l = LocalContext::new();
        l.push(FVarId(0), "a", Term::nat());
        l.push(FVarId(1), "b", Term::nat());
        let t = Term::apps(
            Term::cnst("Eq"),
            [Term::apps(Term::cnst("Nat.sub"), [Term::FVar(FVarId(0)), Term::FVar(FVarId(1))]), Term::FVar(FVarId(0))],
        );
        assert_eq!(pretty(&t, &l), "a - b = a");
        let shadow = Term::pi(Binder::new("a", Term::nat()), Term::apps(Term::cnst("Eq"), [Term::BVar(0), Term::FVar(FVarId(0))]));
        assert_eq!(pretty(&shadow, &l), "∀ (a_1 : Nat), a_1 = a");
    }
}
