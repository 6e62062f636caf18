use serde::{Deserialize, Serialize};

/// Half-open character range `[start, finish)` into a source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub finish: usize,
}

impl Span {
    pub fn new(start: usize, finish: usize) -> Self {
        debug_assert!(start <= finish);
        Span { start, finish }
    }

    pub fn empty_at(pos: usize) -> Self {
        Span { start: pos, finish: pos }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.finish.max(other.finish))
    }

    pub fn len(&self) -> usize {
        self.finish - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.finish
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.finish <= self.finish
    }

    /// Extracts the covered characters of `src`.
    pub fn slice(&self, src: &str) -> String {
        src.chars().skip(self.start).take(self.len()).collect()
    }
}

/// Surface term syntax. Operators and numerals are desugared at parse time,
/// so `a - b = a` is `Eq (Nat.sub a b) a` and `2` is a `Nat.succ` tower.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Ident(String),
    /// `_`
    Hole,
    /// `?_`
    SynthHole,
    /// `?name`
    Mvar(String),
    /// `Prop` is level 0, `Type` level 1.
    Sort(u8),
    App(Box<Expr>, Box<Expr>),
    Pi {
        name: Option<String>,
        implicit: bool,
        ty: Box<Expr>,
        body: Box<Expr>,
    },
    Lam {
        name: String,
        ty: Option<Box<Expr>>,
        body: Box<Expr>,
    },
    /// `⟨a, b, ...⟩`
    Anon(Vec<Expr>),
    Sorry,
    By(ByBlock),
    Ascribe(Box<Expr>, Box<Expr>),
    /// `(e).field`
    Proj(Box<Expr>, String),
}

impl Expr {
    pub fn ident(s: impl Into<String>) -> Expr {
        Expr::Ident(s.into())
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Expr, args: impl IntoIterator<Item = Expr>) -> Expr {
        args.into_iter().fold(f, Expr::app)
    }

    pub fn numeral(n: u64) -> Expr {
        let mut e = Expr::ident("Nat.zero");
        for _ in 0..n {
            e = Expr::app(Expr::ident("Nat.succ"), e);
        }
        e
    }

    /// Reads a `Nat.succ` tower ending in `Nat.zero` back as a number.
    pub fn as_numeral(&self) -> Option<u64> {
        let mut n = 0;
        let mut cur = self;
        loop {
            match cur {
                Expr::Ident(s) if s == "Nat.zero" => return Some(n),
                Expr::App(f, a) if matches!(&**f, Expr::Ident(s) if s == "Nat.succ") => {
                    n += 1;
                    cur = a;
                }
                _ => return None,
            }
        }
    }

    /// Head and arguments of an application spine.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Expr::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// Top-level `by` blocks, left to right, not descending into blocks.
    pub fn by_blocks(&self) -> Vec<&ByBlock> {
        let mut out = Vec::new();
        self.collect_by_blocks(&mut out);
        out
    }

    fn collect_by_blocks<'a>(&'a self, out: &mut Vec<&'a ByBlock>) {
        match self {
            Expr::By(b) => out.push(b),
            Expr::App(f, a) => {
                f.collect_by_blocks(out);
                a.collect_by_blocks(out);
            }
            Expr::Pi { ty, body, .. } => {
                ty.collect_by_blocks(out);
                body.collect_by_blocks(out);
            }
            Expr::Lam { ty, body, .. } => {
                if let Some(t) = ty {
                    t.collect_by_blocks(out);
                }
                body.collect_by_blocks(out);
            }
            Expr::Anon(xs) => xs.iter().for_each(|x| x.collect_by_blocks(out)),
            Expr::Ascribe(e, t) => {
                e.collect_by_blocks(out);
                t.collect_by_blocks(out);
            }
            Expr::Proj(e, _) => e.collect_by_blocks(out),
            _ => {}
        }
    }

    /// Replaces every top-level `by` block with `by sorry`.
    pub fn mask_by_blocks(&self) -> Expr {
        match self {
            Expr::By(b) => Expr::By(ByBlock {
                tactics: vec![TacticNode::new(TacticKind::Sorry, Span::default())],
                span: b.span,
            }),
            Expr::App(f, a) => Expr::app(f.mask_by_blocks(), a.mask_by_blocks()),
            Expr::Pi { name, implicit, ty, body } => Expr::Pi {
                name: name.clone(),
                implicit: *implicit,
                ty: Box::new(ty.mask_by_blocks()),
                body: Box::new(body.mask_by_blocks()),
            },
            Expr::Lam { name, ty, body } => Expr::Lam {
                name: name.clone(),
                ty: ty.as_ref().map(|t| Box::new(t.mask_by_blocks())),
                body: Box::new(body.mask_by_blocks()),
            },
            Expr::Anon(xs) => Expr::Anon(xs.iter().map(Expr::mask_by_blocks).collect()),
            Expr::Ascribe(e, t) => {
                Expr::Ascribe(Box::new(e.mask_by_blocks()), Box::new(t.mask_by_blocks()))
            }
            Expr::Proj(e, f) => Expr::Proj(Box::new(e.mask_by_blocks()), f.clone()),
            other => other.clone(),
        }
    }

    pub fn erase_spans(&mut self) {
        match self {
            Expr::By(b) => b.erase_spans(),
            Expr::App(f, a) => {
                f.erase_spans();
                a.erase_spans();
            }
            Expr::Pi { ty, body, .. } => {
                ty.erase_spans();
                body.erase_spans();
            }
            Expr::Lam { ty, body, .. } => {
                if let Some(t) = ty {
                    t.erase_spans();
                }
                body.erase_spans();
            }
            Expr::Anon(xs) => xs.iter_mut().for_each(Expr::erase_spans),
            Expr::Ascribe(e, t) => {
                e.erase_spans();
                t.erase_spans();
            }
            Expr::Proj(e, _) => e.erase_spans(),
            _ => {}
        }
    }
}

/// A `by` block embedded in a term.
#[derive(Debug, Clone, PartialEq)]
pub struct ByBlock {
    pub tactics: Vec<TacticNode>,
    pub span: Span,
}

impl ByBlock {
    /// `by sorry`, the masked form of a nested block.
    pub fn is_masked(&self) -> bool {
        self.tactics.len() == 1 && self.tactics[0].kind == TacticKind::Sorry
    }

    pub fn erase_spans(&mut self) {
        self.span = Span::default();
        self.tactics.iter_mut().for_each(TacticNode::erase_spans);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwRule {
    pub reverse: bool,
    pub term: Expr,
}

/// One `| tag names => tactics` alternative of `cases`/`induction`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseAlt {
    pub tag: String,
    pub names: Vec<String>,
    pub body: Vec<TacticNode>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LibrarySearch {
    Apply,
    Exact,
    Rw,
}

impl LibrarySearch {
    pub fn keyword(self) -> &'static str {
        match self {
            LibrarySearch::Apply => "apply?",
            LibrarySearch::Exact => "exact?",
            LibrarySearch::Rw => "rw?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TacticKind {
    Intro(Vec<String>),
    Exact(Expr),
    Apply(Expr),
    Rfl,
    Assumption,
    Rw { rules: Vec<RwRule>, at: Option<String> },
    Rwa { rules: Vec<RwRule>, at: Option<String> },
    Cases { target: String, alts: Vec<CaseAlt> },
    Induction { target: String, alts: Vec<CaseAlt> },
    Constructor,
    Left,
    Right,
    Have { name: Option<String>, ty: Option<Expr>, value: Expr },
    Case { tag: String, names: Vec<String>, body: Option<Vec<TacticNode>> },
    Sorry,
    /// `t1 <;> t2`
    SeqAll(Box<TacticNode>, Box<TacticNode>),
    AllGoals(Box<TacticNode>),
    Try(Box<TacticNode>),
    /// `· tactics`
    Focus(Vec<TacticNode>),
    /// `( tactics )`
    Paren(Vec<TacticNode>),
    RotateLeft(u32),
    LibrarySearch(LibrarySearch),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TacticNode {
    pub kind: TacticKind,
    pub span: Span,
}

impl TacticNode {
    pub fn new(kind: TacticKind, span: Span) -> Self {
        TacticNode { kind, span }
    }

    /// Short constructor name, used for histograms and ban lists.
    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            TacticKind::Intro(_) => "intro",
            TacticKind::Exact(_) => "exact",
            TacticKind::Apply(_) => "apply",
            TacticKind::Rfl => "rfl",
            TacticKind::Assumption => "assumption",
            TacticKind::Rw { .. } => "rw",
            TacticKind::Rwa { .. } => "rwa",
            TacticKind::Cases { .. } => "cases",
            TacticKind::Induction { .. } => "induction",
            TacticKind::Constructor => "constructor",
            TacticKind::Left => "left",
            TacticKind::Right => "right",
            TacticKind::Have { .. } => "have",
            TacticKind::Case { .. } => "case",
            TacticKind::Sorry => "sorry",
            TacticKind::SeqAll(..) => "<;>",
            TacticKind::AllGoals(_) => "all_goals",
            TacticKind::Try(_) => "try",
            TacticKind::Focus(_) => "·",
            TacticKind::Paren(_) => "()",
            TacticKind::RotateLeft(_) => "rotate_left",
            TacticKind::LibrarySearch(l) => l.keyword(),
        }
    }

    pub fn erase_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            TacticKind::Exact(e) | TacticKind::Apply(e) => e.erase_spans(),
            TacticKind::Rw { rules, .. } | TacticKind::Rwa { rules, .. } => {
                rules.iter_mut().for_each(|r| r.term.erase_spans())
            }
            TacticKind::Cases { alts, .. } | TacticKind::Induction { alts, .. } => {
                for alt in alts {
                    alt.span = Span::default();
                    alt.body.iter_mut().for_each(TacticNode::erase_spans);
                }
            }
            TacticKind::Have { ty, value, .. } => {
                if let Some(t) = ty {
                    t.erase_spans();
                }
                value.erase_spans();
            }
            TacticKind::Case { body: Some(b), .. } => b.iter_mut().for_each(TacticNode::erase_spans),
            TacticKind::SeqAll(a, b) => {
                a.erase_spans();
                b.erase_spans();
            }
            TacticKind::AllGoals(t) | TacticKind::Try(t) => t.erase_spans(),
            TacticKind::Focus(ts) | TacticKind::Paren(ts) => {
                ts.iter_mut().for_each(TacticNode::erase_spans)
            }
            _ => {}
        }
    }

    /// Terms carried directly by this tactic (not by nested tactics).
    pub fn terms(&self) -> Vec<&Expr> {
        match &self.kind {
            TacticKind::Exact(e) | TacticKind::Apply(e) => vec![e],
            TacticKind::Rw { rules, .. } | TacticKind::Rwa { rules, .. } => {
                rules.iter().map(|r| &r.term).collect()
            }
            TacticKind::Have { ty, value, .. } => ty.iter().chain(std::iter::once(value)).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binder {
    pub name: String,
    pub ty: Expr,
    pub implicit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProofBody {
    Term(Expr),
    /// `:= by ...`
    Tactic(ByBlock),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremDecl {
    pub name: Option<String>,
    pub binders: Vec<Binder>,
    pub target: Expr,
    pub proof: ProofBody,
    pub span: Span,
    pub open_namespaces: Vec<String>,
}

impl TheoremDecl {
    /// Non-nested `by` blocks of the proof, in source order.
    pub fn by_blocks(&self) -> Vec<&ByBlock> {
        match &self.proof {
            ProofBody::Tactic(b) => vec![b],
            ProofBody::Term(e) => e.by_blocks(),
        }
    }

    /// The statement as a closed Pi-type over the binders.
    pub fn statement(&self) -> Expr {
        self.binders.iter().rev().fold(self.target.clone(), |body, b| Expr::Pi {
            name: Some(b.name.clone()),
            implicit: b.implicit,
            ty: Box::new(b.ty.clone()),
            body: Box::new(body),
        })
    }
}

/// Pattern in a computation rule of a `def`.
#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Var(String),
    Zero,
    Succ(Box<Pattern>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub patterns: Vec<Pattern>,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DefBody {
    Value(Expr),
    Equations(Vec<Equation>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Declaration {
    Axiom { name: String, ty: Expr, span: Span },
    Def { name: String, ty: Expr, body: DefBody, span: Span },
    Open { namespaces: Vec<String>, span: Span },
    Theorem(TheoremDecl),
    /// A declaration that failed to parse; the rest of the file is unaffected.
    Error { message: String, span: Span },
}

impl Declaration {
    pub fn span(&self) -> Span {
        match self {
            Declaration::Axiom { span, .. }
            | Declaration::Def { span, .. }
            | Declaration::Open { span, .. }
            | Declaration::Error { span, .. } => *span,
            Declaration::Theorem(t) => t.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceFile {
    pub path: String,
    pub imports: Vec<String>,
    pub declarations: Vec<Declaration>,
    pub text: String,
}

impl SourceFile {
    pub fn theorems(&self) -> impl Iterator<Item = &TheoremDecl> {
        self.declarations.iter().filter_map(|d| match d {
            Declaration::Theorem(t) => Some(t),
            _ => None,
        })
    }

    pub fn theorem(&self, name: &str) -> Option<&TheoremDecl> {
        self.theorems().find(|t| t.name.as_deref() == Some(name))
    }
}
