//! Bidirectional elaboration of surface terms into kernel terms.

use std::collections::HashMap;

use thiserror::Error;

use crate::kernel::{
    is_inaccessible, pretty, Binder, BinderInfo, Environment, KernelError, LocalContext,
    MetavarContext, MvarId, MvarKind, Tc, Term,
};
use crate::syntax::{ByBlock, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElabError {
    #[error("unknown identifier '{0}'")]
    UnknownIdent(String),
    #[error("'{0}' is inaccessible; name it with `case` first")]
    Inaccessible(String),
    #[error("type mismatch: {term} has type {actual} but is expected to have type {expected}")]
    Mismatch { term: String, expected: String, actual: String },
    #[error("cannot infer {0}")]
    CannotInfer(String),
    #[error("function expected, got {0}")]
    NotAFunction(String),
    #[error("invalid field '{field}' for {ty}")]
    BadField { field: String, ty: String },
    #[error("invalid anonymous constructor for {0}")]
    BadAnon(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Elaboration state for one term. Metavariables created along the way are
/// recorded so callers can decide what to do with leftover holes.
pub struct Elab<'a> {
    pub env: &'a Environment,
    pub mctx: &'a mut MetavarContext,
    pub lctx: LocalContext,
    pub opens: &'a [String],
    pub allow_inaccessible: bool,
    /// `?name` references, shared across terms of one goal text.
    pub named: HashMap<String, MvarId>,
    /// Natural holes: `_` and inserted implicit arguments.
    pub holes: Vec<MvarId>,
    /// `?_` holes.
    pub synthetic: Vec<MvarId>,
    /// Nested `by` blocks, to run once elaboration is done.
    pub postponed: Vec<(MvarId, ByBlock)>,
}

impl<'a> Elab<'a> {
    pub fn new(
        env: &'a Environment,
        mctx: &'a mut MetavarContext,
        lctx: LocalContext,
        opens: &'a [String],
    ) -> Self {
        Elab {
            env,
            mctx,
            lctx,
            opens,
            allow_inaccessible: false,
            named: HashMap::new(),
            holes: Vec::new(),
            synthetic: Vec::new(),
            postponed: Vec::new(),
        }
    }

    fn tc(&mut self) -> Tc<'_> {
        Tc::new_mut(self.env, self.mctx, &self.lctx)
    }

    pub fn whnf(&mut self, t: &Term) -> Term {
        let t = self.mctx.instantiate(t);
        self.tc().whnf(&t)
    }

    pub fn infer(&mut self, t: &Term) -> Result<Term, ElabError> {
        Ok(self.tc().infer(t)?)
    }

    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        self.tc().unify(a, b)
    }

    pub fn show(&self, t: &Term) -> String {
        pretty(&self.mctx.instantiate(t), &self.lctx)
    }

    fn new_hole(&mut self, ty: Term, kind: MvarKind) -> MvarId {
        let m = self.mctx.new_mvar(self.lctx.clone(), ty, kind, None);
        match kind {
            MvarKind::Natural => self.holes.push(m),
            MvarKind::Synthetic => self.synthetic.push(m),
        }
        m
    }

    /// Elaborates `e` as a type.
    pub fn elab_type(&mut self, e: &Expr) -> Result<Term, ElabError> {
        let t = self.elab(e, None)?;
        let ty = self.infer(&t)?;
        match self.whnf(&ty) {
            Term::Sort(_) => Ok(t),
            _ => Err(ElabError::Kernel(KernelError::NotAType(self.show(&t)))),
        }
    }

    /// Elaborates `e` and, if `expected` is given, unifies its type with it.
    pub fn elab(&mut self, e: &Expr, expected: Option<&Term>) -> Result<Term, ElabError> {
        let (t, ty) = self.elab_core(e, expected)?;
        if let Some(exp) = expected {
            self.ensure_type(&t, &ty, exp)?;
        }
        Ok(t)
    }

    fn ensure_type(&mut self, t: &Term, ty: &Term, expected: &Term) -> Result<(), ElabError> {
        if self.unify(ty, expected) {
            Ok(())
        } else {
            Err(ElabError::Mismatch {
                term: self.show(t),
                expected: self.show(expected),
                actual: self.show(ty),
            })
        }
    }

    fn need_expected(&self, expected: Option<&Term>, what: &str) -> Result<Term, ElabError> {
        expected.cloned().ok_or_else(|| ElabError::CannotInfer(format!("the type of {what}")))
    }

    fn elab_core(&mut self, e: &Expr, expected: Option<&Term>) -> Result<(Term, Term), ElabError> {
        match e {
            Expr::Hole => {
                let ty = self.need_expected(expected, "'_'")?;
                let m = self.new_hole(ty.clone(), MvarKind::Natural);
                Ok((Term::Mvar(m), ty))
            }
            Expr::SynthHole => {
                let ty = self.need_expected(expected, "'?_'")?;
                let m = self.new_hole(ty.clone(), MvarKind::Synthetic);
                Ok((Term::Mvar(m), ty))
            }
            Expr::Mvar(name) => {
                if let Some(m) = self.named.get(name) {
                    let ty = self.mctx.decl(*m).ty.clone();
                    return Ok((Term::Mvar(*m), ty));
                }
                let ty = expected.cloned().unwrap_or_else(Term::nat);
                let m = self.mctx.new_mvar(self.lctx.clone(), ty.clone(), MvarKind::Natural, None);
                self.named.insert(name.clone(), m);
                Ok((Term::Mvar(m), ty))
            }
            Expr::Sort(n) => Ok((Term::Sort(*n), Term::Sort(n + 1))),
            Expr::Sorry => {
                let ty = self.need_expected(expected, "'sorry'")?;
                Ok((Term::sorry(ty.clone()), ty))
            }
            Expr::By(block) => {
                let ty = self.need_expected(expected, "a 'by' block")?;
                let ty = self.mctx.instantiate(&ty);
                let m = self.mctx.new_mvar(self.lctx.clone(), ty.clone(), MvarKind::Synthetic, None);
                self.postponed.push((m, block.clone()));
                Ok((Term::Mvar(m), ty))
            }
            Expr::Ascribe(x, t) => {
                let ty = self.elab_type(t)?;
                let v = self.elab(x, Some(&ty))?;
                Ok((v, ty))
            }
            Expr::Pi { name, implicit, ty, body } => {
                let dom = if matches!(**ty, Expr::Hole) { Term::nat() } else { self.elab_type(ty)? };
                let bname = name.clone().unwrap_or_else(|| "_".into());
                let f = self.mctx.new_fvar();
                self.lctx.push(f, bname.clone(), dom.clone());
                let r = self.elab_type(body);
                self.lctx.decls.pop();
                let body = self.mctx.instantiate(&r?).abstract_fvar(f);
                let mut b = Binder::new(bname, dom).tagged(f);
                if *implicit {
                    b.info = BinderInfo::Implicit;
                }
                let t = Term::pi(b, body);
                let s = self.infer(&t)?;
                Ok((t, s))
            }
            Expr::Lam { name, ty, body } => {
                let exp = expected.map(|x| self.whnf(x));
                let dom = match (ty, &exp) {
                    (Some(t), _) => self.elab_type(t)?,
                    (None, Some(Term::Pi(b, _))) => b.ty.clone(),
                    (None, _) => {
                        return Err(ElabError::CannotInfer(format!("the type of binder '{name}'")))
                    }
                };
                let f = self.mctx.new_fvar();
                self.lctx.push(f, name.clone(), dom.clone());
                let body_expected = match &exp {
                    Some(Term::Pi(b, cod)) if self.tc().def_eq(&b.ty, &dom) => {
                        Some(cod.instantiate1(&Term::FVar(f)))
                    }
                    _ => None,
                };
                let r = self.elab(body, body_expected.as_ref());
                let r = r.and_then(|v| {
                    let t = self.infer(&v)?;
                    Ok((v, t))
                });
                self.lctx.decls.pop();
                let (v, vt) = r?;
                let b = Binder::new(name.as_str(), dom).tagged(f);
                let v = self.mctx.instantiate(&v).abstract_fvar(f);
                let vt = self.mctx.instantiate(&vt).abstract_fvar(f);
                Ok((Term::lam(b.clone(), v), Term::pi(b, vt)))
            }
            Expr::Anon(items) => self.elab_anon(items, expected),
            Expr::Ident(_) | Expr::App(..) | Expr::Proj(..) => self.elab_app(e, expected),
        }
    }

    fn elab_anon(&mut self, items: &[Expr], expected: Option<&Term>) -> Result<(Term, Term), ElabError> {
        let exp = self.need_expected(expected, "an anonymous constructor")?;
        if items.len() == 1 {
            let (t, ty) = self.elab_core(&items[0], Some(&exp))?;
            return Ok((t, ty));
        }
        let w = self.whnf(&exp);
        if items.is_empty() {
            if w.is_const("True") {
                return Ok((Term::cnst("True.intro"), w));
            }
            return Err(ElabError::BadAnon(self.show(&exp)));
        }
        let ctor = if w.is_app_of("And", 2) {
            "And.intro"
        } else if w.is_app_of("Iff", 2) {
            "Iff.intro"
        } else {
            return Err(ElabError::BadAnon(self.show(&exp)));
        };
        let (_, args) = w.spine();
        let (a, b) = (args[0].clone(), args[1].clone());
        let (da, db) = if ctor == "And.intro" {
            (a.clone(), b.clone())
        } else {
            (Term::arrow(a.clone(), b.clone()), Term::arrow(b.clone(), a.clone()))
        };
        let x = self.elab(&items[0], Some(&da))?;
        let rest = if items.len() == 2 { items[1].clone() } else { Expr::Anon(items[1..].to_vec()) };
        let y = self.elab(&rest, Some(&db))?;
        let t = Term::apps(Term::cnst(ctor), [a, b, x, y]);
        Ok((t, w))
    }

    /// Resolves a name to a hypothesis or constant.
    pub fn resolve(&mut self, name: &str) -> Result<Option<(Term, Term)>, ElabError> {
        if let Some(d) = self.lctx.find_by_name(name) {
            if is_inaccessible(name) && !self.allow_inaccessible {
                return Err(ElabError::Inaccessible(name.to_string()));
            }
            return Ok(Some((Term::FVar(d.fvar), d.ty.clone())));
        }
        if is_inaccessible(name) {
            return Err(ElabError::UnknownIdent(name.to_string()));
        }
        if let Some(c) = self.env.get(name) {
            return Ok(Some((Term::cnst(name), c.ty.clone())));
        }
        for ns in self.opens.iter().rev() {
            let full = format!("{ns}.{name}");
            if let Some(c) = self.env.get(&full) {
                return Ok(Some((Term::cnst(&full), c.ty.clone())));
            }
        }
        Ok(None)
    }

    /// Head of an application: identifiers, with `h.f` field notation.
    fn elab_head(&mut self, head: &Expr) -> Result<(Term, Term, Vec<Expr>), ElabError> {
        match head {
            Expr::Ident(name) => {
                if let Some((t, ty)) = self.resolve(name)? {
                    return Ok((t, ty, Vec::new()));
                }
                // `h.f.g`: longest resolvable prefix, then fields
                let parts: Vec<&str> = name.split('.').collect();
                for cut in (1..parts.len()).rev() {
                    let prefix = parts[..cut].join(".");
                    if let Some((t, ty)) = self.resolve(&prefix)? {
                        let mut cur = (t, ty);
                        for field in &parts[cut..] {
                            cur = self.project(cur.0, cur.1, field)?;
                        }
                        return Ok((cur.0, cur.1, Vec::new()));
                    }
                }
                Err(ElabError::UnknownIdent(name.clone()))
            }
            Expr::Proj(x, field) => {
                let (t, _) = self.elab_core(x, None)?;
                let ty = self.infer(&t)?;
                let (t, ty) = self.project(t, ty, field)?;
                Ok((t, ty, Vec::new()))
            }
            other => {
                let (t, ty) = self.elab_core(other, None)?;
                Ok((t, ty, Vec::new()))
            }
        }
    }

    /// `x.field` where the type of `x` is headed by `C`: `C.field` applied to
    /// `x` as its first explicit argument.
    fn project(&mut self, x: Term, xty: Term, field: &str) -> Result<(Term, Term), ElabError> {
        let inst = self.mctx.instantiate(&xty);
        let mut cur = inst.clone();
        let mut head = None;
        for _ in 0..8 {
            if let Some(c) = cur.head().const_name() {
                let c = c.to_string();
                let fname = match (c.as_str(), field) {
                    ("And", "1") => "left".to_string(),
                    ("And", "2") => "right".to_string(),
                    ("Iff", "1") => "mp".to_string(),
                    ("Iff", "2") => "mpr".to_string(),
                    _ => field.to_string(),
                };
                let full = format!("{c}.{fname}");
                if self.env.contains(&full) {
                    head = Some(full);
                    break;
                }
            }
            let next = self.tc().whnf(&cur);
            if next == cur {
                break;
            }
            cur = next;
        }
        let Some(full) = head else {
            return Err(ElabError::BadField { field: field.to_string(), ty: self.show(&inst) });
        };
        let fty = self.env.ty(&full)?.clone();
        let (f, fty) = self.apply_args(Term::cnst(&full), fty, &[], Some(x), false)?;
        Ok((f, fty))
    }

    fn elab_app(&mut self, e: &Expr, expected: Option<&Term>) -> Result<(Term, Term), ElabError> {
        let (head, args) = e.spine();
        let (f, fty, _) = self.elab_head(head)?;
        let args: Vec<Expr> = args.into_iter().cloned().collect();
        let _ = expected;
        self.apply_args(f, fty, &args, None, true)
    }

    /// Applies `f : fty` to explicit `args`, inserting implicit arguments.
    /// `first` is an already elaborated first explicit argument.
    pub fn apply_args(
        &mut self,
        mut f: Term,
        mut fty: Term,
        args: &[Expr],
        mut first: Option<Term>,
        trailing_implicits: bool,
    ) -> Result<(Term, Term), ElabError> {
        let mut i = 0;
        loop {
            let more = first.is_some() || i < args.len();
            let cur = self.mctx.instantiate(&fty);
            let w = match &cur {
                Term::Pi(..) => cur.clone(),
                _ if more => self.whnf(&cur),
                _ => cur.clone(),
            };
            match &w {
                Term::Pi(b, body) if b.info == BinderInfo::Implicit && (more || trailing_implicits) => {
                    let m = self.new_hole(b.ty.clone(), MvarKind::Natural);
                    f = Term::app(f, Term::Mvar(m));
                    fty = body.instantiate1(&Term::Mvar(m));
                }
                Term::Pi(b, body) if more => {
                    let a = match first.take() {
                        Some(x) => {
                            let xty = self.infer(&x)?;
                            self.ensure_type(&x, &xty, &b.ty)?;
                            x
                        }
                        None => {
                            let a = self.elab(&args[i], Some(&b.ty))?;
                            i += 1;
                            a
                        }
                    };
                    f = Term::app(f, a.clone());
                    fty = body.instantiate1(&a);
                }
                _ if more => return Err(ElabError::NotAFunction(self.show(&f))),
                _ => return Ok((f, fty)),
            }
        }
    }

    /// Elaborates `e` without inserting trailing implicit arguments when it
    /// is a bare constant or hypothesis, as `apply` wants the full telescope.
    pub fn elab_for_apply(&mut self, e: &Expr) -> Result<(Term, Term), ElabError> {
        if let Expr::Ident(name) = e {
            if let Some(r) = self.resolve(name)? {
                return Ok(r);
            }
        }
        let (head, args) = e.spine();
        if !args.is_empty() {
            let (f, fty, _) = self.elab_head(head)?;
            let args: Vec<Expr> = args.into_iter().cloned().collect();
            return self.apply_args(f, fty, &args, None, false);
        }
        let (t, _) = self.elab_core(e, None)?;
        let ty = self.infer(&t)?;
        Ok((t, ty))
    }
}
