//! The standard environment: built-in inductive types plus the prelude file.

use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::elab::{Elab, ElabError};
use crate::kernel::{
    ConstInfo, ConstKind, Environment, KernelError, LocalContext, MetavarContext, RecursorInfo,
    Rule, RulePattern, Tc, Term,
};
use crate::syntax::{parse_file, parse_term, DefBody, Declaration, Pattern, SourceFile, SyntaxError};

pub const PRELUDE_SOURCE: &str = include_str!("prelude.ml");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("in '{name}': {source}")]
    Elab { name: String, source: ElabError },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Parse(String),
}

enum Builtin {
    Inductive(&'static [&'static str], usize),
    Ctor(&'static str, usize, usize, usize),
    Rec(&'static str, usize, usize, usize, &'static [(&'static str, usize, &'static [bool])]),
}

const BUILTINS: &[(&str, &str, Builtin)] = &[
    ("Nat", "Type", Builtin::Inductive(&["Nat.zero", "Nat.succ"], 0)),
    ("Nat.zero", "Nat", Builtin::Ctor("Nat", 0, 0, 0)),
    ("Nat.succ", "Nat → Nat", Builtin::Ctor("Nat", 1, 0, 1)),
    (
        "Nat.rec",
        "∀ {motive : Nat → Prop}, motive Nat.zero → (∀ (n : Nat), motive n → motive (Nat.succ n)) → ∀ (t : Nat), motive t",
        Builtin::Rec("Nat", 0, 2, 0, &[("Nat.zero", 0, &[]), ("Nat.succ", 1, &[true])]),
    ),
    ("Eq", "Nat → Nat → Prop", Builtin::Inductive(&["Eq.refl"], 1)),
    ("Eq.refl", "∀ (a : Nat), Eq a a", Builtin::Ctor("Eq", 0, 1, 0)),
    (
        "Eq.rec",
        "∀ {a : Nat} {motive : Nat → Prop}, motive a → ∀ {b : Nat}, Eq a b → motive b",
        Builtin::Rec("Eq", 1, 1, 1, &[("Eq.refl", 0, &[])]),
    ),
    ("Nat.le", "Nat → Nat → Prop", Builtin::Inductive(&["Nat.le.refl", "Nat.le.step"], 1)),
    ("Nat.le.refl", "∀ {n : Nat}, Nat.le n n", Builtin::Ctor("Nat.le", 0, 1, 0)),
    (
        "Nat.le.step",
        "∀ {n m : Nat}, Nat.le n m → Nat.le n (Nat.succ m)",
        Builtin::Ctor("Nat.le", 1, 1, 2),
    ),
    ("And", "Prop → Prop → Prop", Builtin::Inductive(&["And.intro"], 2)),
    ("And.intro", "∀ {a b : Prop}, a → b → And a b", Builtin::Ctor("And", 0, 2, 2)),
    (
        "And.rec",
        "∀ {a b : Prop} {motive : Prop}, (a → b → motive) → And a b → motive",
        Builtin::Rec("And", 2, 1, 0, &[("And.intro", 2, &[false, false])]),
    ),
    ("Or", "Prop → Prop → Prop", Builtin::Inductive(&["Or.inl", "Or.inr"], 2)),
    ("Or.inl", "∀ {a b : Prop}, a → Or a b", Builtin::Ctor("Or", 0, 2, 1)),
    ("Or.inr", "∀ {a b : Prop}, b → Or a b", Builtin::Ctor("Or", 1, 2, 1)),
    (
        "Or.rec",
        "∀ {a b : Prop} {motive : Prop}, (a → motive) → (b → motive) → Or a b → motive",
        Builtin::Rec("Or", 2, 2, 0, &[("Or.inl", 1, &[false]), ("Or.inr", 1, &[false])]),
    ),
    ("Iff", "Prop → Prop → Prop", Builtin::Inductive(&["Iff.intro"], 2)),
    ("Iff.intro", "∀ {a b : Prop}, (a → b) → (b → a) → Iff a b", Builtin::Ctor("Iff", 0, 2, 2)),
    (
        "Iff.rec",
        "∀ {a b : Prop} {motive : Prop}, ((a → b) → (b → a) → motive) → Iff a b → motive",
        Builtin::Rec("Iff", 2, 1, 0, &[("Iff.intro", 2, &[false, false])]),
    ),
    ("True", "Prop", Builtin::Inductive(&["True.intro"], 0)),
    ("True.intro", "True", Builtin::Ctor("True", 0, 0, 0)),
    ("False", "Prop", Builtin::Inductive(&[], 0)),
    ("False.rec", "∀ (motive : Prop), False → motive", Builtin::Rec("False", 0, 0, 0, &[])),
];

fn elab_closed_type(env: &Environment, text: &str, opens: &[String]) -> Result<Term, LoadError> {
    let e = parse_term(text)?;
    let mut mctx = MetavarContext::new();
    let mut el = Elab::new(env, &mut mctx, LocalContext::new(), opens);
    let t = el.elab_type(&e).map_err(|source| LoadError::Elab { name: text.to_string(), source })?;
    Ok(mctx.instantiate(&t))
}

fn builtin_env() -> Result<Environment, LoadError> {
    let mut env = Environment::new();
    for (name, ty, kind) in BUILTINS {
        let ty = elab_closed_type(&env, ty, &[])?;
        let kind = match kind {
            Builtin::Inductive(ctors, num_params) => ConstKind::Inductive {
                ctors: ctors.iter().map(|c| c.to_string()).collect(),
                num_params: *num_params,
            },
            Builtin::Ctor(ind, index, num_params, num_fields) => ConstKind::Ctor {
                inductive: ind.to_string(),
                index: *index,
                num_params: *num_params,
                num_fields: *num_fields,
            },
            Builtin::Rec(ind, num_params, num_minors, num_indices, ctors) => {
                ConstKind::Recursor(RecursorInfo {
                    inductive: ind.to_string(),
                    num_params: *num_params,
                    num_minors: *num_minors,
                    num_indices: *num_indices,
                    ctors: ctors.iter().map(|(c, n, m)| (c.to_string(), *n, m.to_vec())).collect(),
                })
            }
        };
        env.add(ConstInfo { name: name.to_string(), ty, kind })?;
    }
    Ok(env)
}

fn rule_pattern(p: &Pattern, vars: &mut Vec<String>) -> RulePattern {
    match p {
        Pattern::Var(v) => {
            vars.push(v.clone());
            RulePattern::Var
        }
        Pattern::Zero => RulePattern::Zero,
        Pattern::Succ(q) => RulePattern::Succ(Box::new(rule_pattern(q, vars))),
    }
}

fn pattern_term(p: &RulePattern, vars: &mut impl Iterator<Item = Term>) -> Term {
    match p {
        RulePattern::Var => vars.next().expect("pattern variable"),
        RulePattern::Zero => Term::cnst("Nat.zero"),
        RulePattern::Succ(q) => Term::app(Term::cnst("Nat.succ"), pattern_term(q, vars)),
    }
}

/// Adds the axioms and definitions of `file` to `env`. Theorems are not
/// added. Returns one error per failing declaration, with its index.
pub fn load_declarations(env: &mut Environment, file: &SourceFile) -> Vec<(usize, LoadError)> {
    let mut errors = Vec::new();
    let mut opens: Vec<String> = Vec::new();
    for (i, d) in file.declarations.iter().enumerate() {
        let r = match d {
            Declaration::Open { namespaces, .. } => {
                opens.extend(namespaces.iter().cloned());
                Ok(())
            }
            Declaration::Axiom { name, ty, .. } => add_axiom(env, name, ty, &opens),
            Declaration::Def { name, ty, body, .. } => add_def(env, name, ty, body, &opens),
            Declaration::Error { message, .. } => Err(LoadError::Parse(message.clone())),
            Declaration::Theorem(_) => Ok(()),
        };
        if let Err(e) = r {
            errors.push((i, e));
        }
    }
    errors
}

fn elab_decl_type(
    env: &Environment,
    name: &str,
    ty: &crate::syntax::Expr,
    opens: &[String],
) -> Result<Term, LoadError> {
    let mut mctx = MetavarContext::new();
    let mut el = Elab::new(env, &mut mctx, LocalContext::new(), opens);
    let t = el.elab_type(ty).map_err(|source| LoadError::Elab { name: name.to_string(), source })?;
    let t = mctx.instantiate(&t);
    if t.has_mvar() {
        return Err(LoadError::Parse(format!("type of '{name}' has unresolved holes")));
    }
    Ok(t)
}

fn add_axiom(env: &mut Environment, name: &str, ty: &crate::syntax::Expr, opens: &[String]) -> Result<(), LoadError> {
    let ty = elab_decl_type(env, name, ty, opens)?;
    env.add(ConstInfo { name: name.to_string(), ty, kind: ConstKind::Axiom })?;
    Ok(())
}

fn add_def(
    env: &mut Environment,
    name: &str,
    ty: &crate::syntax::Expr,
    body: &DefBody,
    opens: &[String],
) -> Result<(), LoadError> {
    let ty = elab_decl_type(env, name, ty, opens)?;
    let elab_err = |source| LoadError::Elab { name: name.to_string(), source };
    match body {
        DefBody::Value(v) => {
            let mut mctx = MetavarContext::new();
            let mut el = Elab::new(env, &mut mctx, LocalContext::new(), opens);
            let v = el.elab(v, Some(&ty)).map_err(elab_err)?;
            let v = mctx.instantiate(&v);
            if v.has_mvar() {
                return Err(LoadError::Parse(format!("body of '{name}' has unresolved holes")));
            }
            let lctx = LocalContext::new();
            Tc::new(env, &mctx, &lctx).check(&v, &ty)?;
            env.add(ConstInfo { name: name.to_string(), ty, kind: ConstKind::Def(v) })?;
        }
        DefBody::Equations(eqs) => {
            env.add(ConstInfo { name: name.to_string(), ty: ty.clone(), kind: ConstKind::Equations(Vec::new()) })?;
            let mut rules = Vec::new();
            for eq in eqs {
                let mut mctx = MetavarContext::new();
                let mut vars = Vec::new();
                let patterns: Vec<RulePattern> = eq.patterns.iter().map(|p| rule_pattern(p, &mut vars)).collect();
                let mut lctx = LocalContext::new();
                let fvars: Vec<_> = vars
                    .iter()
                    .map(|v| {
                        let f = mctx.new_fvar();
                        lctx.push(f, v.clone(), Term::nat());
                        f
                    })
                    .collect();
                // result type: peel one Pi per pattern
                let mut cod = ty.clone();
                let mut it = fvars.iter().map(|f| Term::FVar(*f));
                for p in &patterns {
                    let Term::Pi(_, body) = cod else {
                        return Err(LoadError::Parse(format!("too many patterns for '{name}'")));
                    };
                    cod = body.instantiate1(&pattern_term(p, &mut it));
                }
                let mut el = Elab::new(env, &mut mctx, lctx.clone(), opens);
                let rhs = el.elab(&eq.rhs, Some(&cod)).map_err(elab_err)?;
                let rhs = mctx.instantiate(&rhs);
                Tc::new(env, &mctx, &lctx).check(&rhs, &cod)?;
                rules.push(Rule { patterns, rhs: rhs.abstract_fvars(&fvars) });
            }
            env.set_kind(name, ConstKind::Equations(rules))?;
        }
    }
    Ok(())
}

/// Builds the standard environment from scratch.
pub fn build_prelude() -> Result<Environment, LoadError> {
    let mut env = builtin_env()?;
    let file = parse_file(PRELUDE_SOURCE, "Prelude.ml")?;
    if let Some((_, e)) = load_declarations(&mut env, &file).into_iter().next() {
        return Err(e);
    }
    Ok(env)
}

/// The shared standard environment.
pub fn prelude() -> Arc<Environment> {
    static ENV: OnceLock<Arc<Environment>> = OnceLock::new();
    ENV.get_or_init(|| Arc::new(build_prelude().expect("prelude loads"))).clone()
}

/// The prelude extended with the axioms and definitions of `file`.
pub fn file_env(file: &SourceFile) -> (Arc<Environment>, Vec<(usize, LoadError)>) {
    let has_decls = file
        .declarations
        .iter()
        .any(|d| matches!(d, Declaration::Axiom { .. } | Declaration::Def { .. }));
    if !has_decls {
        let errors = file
            .declarations
            .iter()
            .enumerate()
            .filter_map(|(i, d)| match d {
                Declaration::Error { message, .. } => Some((i, LoadError::Parse(message.clone()))),
                _ => None,
            })
            .collect();
        return (prelude(), errors);
    }
    let mut env = (*prelude()).clone();
    let errors = load_declarations(&mut env, file);
    (Arc::new(env), errors)
}
