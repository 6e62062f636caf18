use std::collections::BTreeMap;

use super::term::Term;
use super::KernelError;

/// A left-hand-side pattern of a computation rule.
#[derive(Debug, Clone, PartialEq)]
pub enum RulePattern {
    Var,
    Zero,
    Succ(Box<RulePattern>),
}

impl RulePattern {
    pub fn num_vars(&self) -> usize {
        match self {
            RulePattern::Var => 1,
            RulePattern::Zero => 0,
            RulePattern::Succ(p) => p.num_vars(),
        }
    }
}

/// `f p1 .. pn = rhs`; pattern variables, numbered left to right, are the
/// loose indices of `rhs` (the first variable is the outermost).
#[derive(Debug, Clone)]
pub struct Rule {
    pub patterns: Vec<RulePattern>,
    pub rhs: Term,
}

/// Eliminator data used for iota reduction.
#[derive(Debug, Clone)]
pub struct RecursorInfo {
    pub inductive: String,
    pub num_params: usize,
    pub num_minors: usize,
    pub num_indices: usize,
    /// Constructor name, field count, and which fields are recursive.
    pub ctors: Vec<(String, usize, Vec<bool>)>,
}

impl RecursorInfo {
    pub fn major_index(&self) -> usize {
        self.num_params + 1 + self.num_minors + self.num_indices
    }
}

#[derive(Debug, Clone)]
pub enum ConstKind {
    Axiom,
    Def(Term),
    Equations(Vec<Rule>),
    Inductive { ctors: Vec<String>, num_params: usize },
    Ctor { inductive: String, index: usize, num_params: usize, num_fields: usize },
    Recursor(RecursorInfo),
}

#[derive(Debug, Clone)]
pub struct ConstInfo {
    pub name: String,
    pub ty: Term,
    pub kind: ConstKind,
}

/// Immutable after loading; shared between sessions.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    consts: BTreeMap<String, ConstInfo>,
    order: Vec<String>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut info: ConstInfo) -> Result<(), KernelError> {
        info.ty = info.ty.strip_tags();
        info.kind = strip_kind(info.kind);
        if self.consts.contains_key(&info.name) {
            return Err(KernelError::DuplicateConstant(info.name));
        }
        self.order.push(info.name.clone());
        self.consts.insert(info.name.clone(), info);
        Ok(())
    }

    /// Replaces the kind of an existing constant; used to install the
    /// equations of a recursive definition after its rules are elaborated.
    pub fn set_kind(&mut self, name: &str, kind: ConstKind) -> Result<(), KernelError> {
        let c = self.consts.get_mut(name).ok_or_else(|| KernelError::UnknownConstant(name.to_string()))?;
        c.kind = strip_kind(kind);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ConstInfo> {
        self.consts.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.consts.contains_key(name)
    }

    pub fn ty(&self, name: &str) -> Result<&Term, KernelError> {
        self.get(name).map(|c| &c.ty).ok_or_else(|| KernelError::UnknownConstant(name.to_string()))
    }

    /// Declarations in the order they were added.
    pub fn iter(&self) -> impl Iterator<Item = &ConstInfo> {
        self.order.iter().map(|n| &self.consts[n])
    }

    pub fn ctor_info(&self, name: &str) -> Option<(&str, usize, usize, usize)> {
        match &self.get(name)?.kind {
            ConstKind::Ctor { inductive, index, num_params, num_fields } => {
                Some((inductive, *index, *num_params, *num_fields))
            }
            _ => None,
        }
    }
}

fn strip_kind(kind: ConstKind) -> ConstKind {
    match kind {
        ConstKind::Def(v) => ConstKind::Def(v.strip_tags()),
        ConstKind::Equations(rules) => ConstKind::Equations(
            rules.into_iter().map(|r| Rule { patterns: r.patterns, rhs: r.rhs.strip_tags() }).collect(),
        ),
        k => k,
    }
}
