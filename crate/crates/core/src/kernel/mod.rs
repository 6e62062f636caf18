//! The MiniLean logic: terms, environment, metavariables, reduction,
//! unification and proof checking.

mod check;
mod env;
mod mctx;
mod print;
mod tc;
mod term;

pub use check::{
    check_closed_proof, check_new_assignments, check_partial_proof, close_term, close_type,
    CheckStats,
};
pub use env::{ConstInfo, ConstKind, Environment, RecursorInfo, Rule, RulePattern};
pub use mctx::{
    is_inaccessible, LocalContext, LocalDecl, MetavarContext, MetavarDecl, MvarKind, DAGGER,
};
pub use print::{debug_term, delab, pretty};
pub use tc::Tc;
pub use term::{Binder, BinderInfo, FVarId, MvarId, Term, TEMP_FVAR_BASE};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("unknown constant '{0}'")]
    UnknownConstant(String),
    #[error("duplicate constant '{0}'")]
    DuplicateConstant(String),
    #[error("unknown free variable {0}")]
    UnknownFVar(u32),
    #[error("unknown metavariable ?m.{0}")]
    UnknownMvar(u32),
    #[error("loose bound variable #{0}")]
    LooseBVar(u32),
    #[error("not a function: {0}")]
    NotAFunction(String),
    #[error("not a type: {0}")]
    NotAType(String),
    #[error("type mismatch for {term}: expected {expected}, got {actual}")]
    TypeMismatch { term: String, expected: String, actual: String },
    #[error("metavariable ?m.{0} has no assignment")]
    NotAssigned(u32),
    #[error("assignment of ?m.{mvar} does not check: {cause}")]
    BadAssignment { mvar: u32, cause: Box<KernelError> },
    #[error("proof contains sorry")]
    ContainsSorry,
    #[error("don't know how to synthesize placeholder ?m.{0}")]
    ContainsHole(u32),
    #[error("{0}")]
    Mismatch(String),
}
