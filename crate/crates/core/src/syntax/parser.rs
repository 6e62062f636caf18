//! Recursive-descent parser with Lean-style layout.
//!
//! A tactic block is anchored at the column of its first tactic. A token that
//! starts a line at or left of that column ends the current tactic; at exactly
//! that column it starts the next tactic of the block. Layout is suspended
//! inside brackets opened after the block started.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{Span, SyntaxError};

type PResult<T> = Result<T, SyntaxError>;

#[derive(Clone, Copy)]
struct Block {
    col: usize,
    depth: usize,
    /// Token index where the block's current item begins; exempt from layout.
    item_start: usize,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    blocks: Vec<Block>,
    depth: usize,
    src_len: usize,
}

const DECL_KEYWORDS: &[&str] = &[
    "import", "open", "theorem", "lemma", "example", "axiom", "def", "namespace", "end",
    "section",
];

const RESERVED: &[&str] = &["by", "at", "with", "fun", "sorry", "Prop", "Type", "from"];

impl<'a> Parser<'a> {
    fn new(toks: &'a [Token], src_len: usize) -> Self {
        Parser { toks, pos: 0, blocks: Vec::new(), depth: 0, src_len }
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + k)
    }

    fn eof_span(&self) -> Span {
        Span::empty_at(self.src_len)
    }

    fn cur_span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or_else(|| self.eof_span())
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.finish
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(SyntaxError::new(self.cur_span(), msg))
    }

    /// True when the next token is outside the innermost layout block.
    fn at_boundary(&self) -> bool {
        let Some(t) = self.peek() else { return true };
        match self.blocks.last() {
            Some(b) => {
                self.pos != b.item_start
                    && t.first_on_line
                    && t.col <= b.col
                    && self.depth == b.depth
            }
            None => false,
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        !self.at_boundary() && matches!(self.peek(), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        !self.at_boundary()
            && matches!(self.peek(), Some(Token { tok: Tok::Ident(x), .. }) if x == s)
    }

    fn bump(&mut self) -> &'a Token {
        let t = &self.toks[self.pos];
        self.pos += 1;
        match t.tok {
            Tok::Sym("(") | Tok::Sym("[") | Tok::Sym("⟨") | Tok::Sym("{") => self.depth += 1,
            Tok::Sym(")") | Tok::Sym("]") | Tok::Sym("⟩") | Tok::Sym("}") => {
                self.depth = self.depth.saturating_sub(1)
            }
            _ => {}
        }
        t
    }

    fn expect_sym(&mut self, s: &str) -> PResult<Span> {
        if self.is_sym(s) {
            Ok(self.bump().span)
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<Span> {
        if self.is_kw(s) {
            Ok(self.bump().span)
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        if self.at_boundary() {
            return self.err("expected identifier");
        }
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), .. }) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn peek_ident(&self) -> Option<&'a str> {
        if self.at_boundary() {
            return None;
        }
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), .. }) if !RESERVED.contains(&s.as_str()) => Some(s),
            _ => None,
        }
    }

    // ---------------------------------------------------------------- terms

    fn term(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.prefix()?;
        loop {
            if self.at_boundary() {
                break;
            }
            let Some(Token { tok: Tok::Sym(op), .. }) = self.peek() else { break };
            let (prec, right_assoc) = match *op {
                "↔" => (20, false),
                "→" => (25, true),
                "∨" => (30, true),
                "∧" => (35, true),
                "=" | "≠" | "≤" | "<" | "≥" | ">" => (50, false),
                "+" | "-" => (65, false),
                "*" => (70, false),
                _ => break,
            };
            if prec < min_prec {
                break;
            }
            let op = *op;
            self.bump();
            let rhs = self.binary(if right_assoc { prec } else { prec + 1 })?;
            lhs = desugar_binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> PResult<Expr> {
        if self.is_sym("¬") {
            self.bump();
            let e = self.binary(40)?;
            return Ok(Expr::app(Expr::ident("Not"), e));
        }
        if self.is_sym("∀") {
            self.bump();
            let binders = self.binder_group(true)?;
            self.expect_sym(",")?;
            let body = self.term()?;
            return Ok(binders.into_iter().rev().fold(body, |body, b| Expr::Pi {
                name: Some(b.name),
                implicit: b.implicit,
                ty: Box::new(b.ty),
                body: Box::new(body),
            }));
        }
        if self.is_sym("fun") {
            self.bump();
            let mut params: Vec<(String, Option<Expr>)> = Vec::new();
            loop {
                if self.is_sym("(") {
                    self.bump();
                    let mut names = vec![self.ident()?];
                    while let Some(n) = self.peek_ident() {
                        names.push(n.to_string());
                        self.bump();
                    }
                    self.expect_sym(":")?;
                    let ty = self.term()?;
                    self.expect_sym(")")?;
                    params.extend(names.into_iter().map(|n| (n, Some(ty.clone()))));
                } else if let Some(n) = self.peek_ident() {
                    params.push((n.to_string(), None));
                    self.bump();
                } else {
                    break;
                }
            }
            if params.is_empty() {
                return self.err("expected binder after 'fun'");
            }
            self.expect_sym("=>")?;
            let body = self.term()?;
            return Ok(params.into_iter().rev().fold(body, |body, (name, ty)| Expr::Lam {
                name,
                ty: ty.map(Box::new),
                body: Box::new(body),
            }));
        }
        if self.is_kw("by") {
            return Ok(Expr::By(self.by_block()?));
        }
        self.application()
    }

    /// `x y : T` or `(x : T) {y : T}` groups, used by `∀`.
    fn binder_group(&mut self, allow_bare: bool) -> PResult<Vec<Binder>> {
        let mut out = Vec::new();
        if allow_bare && self.peek_ident().is_some() {
            let mut names = Vec::new();
            while let Some(n) = self.peek_ident() {
                names.push(n.to_string());
                self.bump();
            }
            let ty = if self.is_sym(":") {
                self.bump();
                self.term()?
            } else {
                Expr::Hole
            };
            for n in names {
                out.push(Binder { name: n, ty: ty.clone(), implicit: false });
            }
            return Ok(out);
        }
        loop {
            let implicit = if self.is_sym("(") {
                false
            } else if self.is_sym("{") {
                true
            } else {
                break;
            };
            self.bump();
            let mut names = vec![self.ident()?];
            while let Some(n) = self.peek_ident() {
                names.push(n.to_string());
                self.bump();
            }
            self.expect_sym(":")?;
            let ty = self.term()?;
            self.expect_sym(if implicit { "}" } else { ")" })?;
            for n in names {
                out.push(Binder { name: n, ty: ty.clone(), implicit });
            }
        }
        if out.is_empty() {
            return self.err("expected binder");
        }
        Ok(out)
    }

    fn starts_atom(&self) -> bool {
        if self.at_boundary() {
            return false;
        }
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Ident(s)) => !matches!(s.as_str(), "by" | "at" | "with" | "from"),
            Some(Tok::Num(_)) | Some(Tok::MvarRef(_)) | Some(Tok::SynthHole) => true,
            Some(Tok::Sym(s)) => matches!(*s, "(" | "⟨"),
            _ => false,
        }
    }

    fn application(&mut self) -> PResult<Expr> {
        let mut head = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            head = Expr::app(head, arg);
        }
        Ok(head)
    }

    fn atom(&mut self) -> PResult<Expr> {
        if self.at_boundary() {
            return self.err("expected term");
        }
        let Some(t) = self.peek() else { return self.err("expected term") };
        let e = match &t.tok {
            Tok::Num(n) => {
                let n = *n;
                self.bump();
                Expr::numeral(n)
            }
            Tok::MvarRef(m) => {
                let m = m.clone();
                self.bump();
                Expr::Mvar(m)
            }
            Tok::SynthHole => {
                self.bump();
                Expr::SynthHole
            }
            Tok::Ident(s) => {
                let s = s.clone();
                match s.as_str() {
                    "_" => {
                        self.bump();
                        Expr::Hole
                    }
                    "sorry" => {
                        self.bump();
                        Expr::Sorry
                    }
                    "Prop" => {
                        self.bump();
                        Expr::Sort(0)
                    }
                    "Type" => {
                        self.bump();
                        Expr::Sort(1)
                    }
                    "by" | "at" | "with" | "fun" | "from" => {
                        return self.err(format!("unexpected keyword '{s}'"))
                    }
                    _ => {
                        self.bump();
                        Expr::Ident(s)
                    }
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.term()?;
                let e = if self.is_sym(":") {
                    self.bump();
                    let ty = self.term()?;
                    Expr::Ascribe(Box::new(inner), Box::new(ty))
                } else {
                    inner
                };
                self.expect_sym(")")?;
                self.projections(e)?
            }
            Tok::Sym("⟨") => {
                self.bump();
                let mut items = Vec::new();
                if !self.is_sym("⟩") {
                    items.push(self.term()?);
                    while self.is_sym(",") {
                        self.bump();
                        items.push(self.term()?);
                    }
                }
                self.expect_sym("⟩")?;
                self.projections(Expr::Anon(items))?
            }
            _ => return self.err("expected term"),
        };
        Ok(e)
    }

    /// `(e).f` chains; the dot must touch both neighbours.
    fn projections(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            let (Some(dot), Some(field)) = (self.peek(), self.peek_at(1)) else { break };
            if dot.tok != Tok::Sym("·")
                || dot.span.start != self.prev_end()
                || field.span.start != dot.span.finish
            {
                break;
            }
            let name = match &field.tok {
                Tok::Ident(s) => s.clone(),
                Tok::Num(n) => n.to_string(),
                _ => break,
            };
            self.bump();
            self.bump();
            e = Expr::Proj(Box::new(e), name);
        }
        Ok(e)
    }

    fn by_block(&mut self) -> PResult<ByBlock> {
        let start = self.expect_kw("by")?.start;
        if self.peek().is_none() || self.is_sym(",") || self.is_sym(")") || self.is_sym("⟩") {
            return self.err("unbalanced by-block: expected tactics after 'by'");
        }
        // a block that starts on a later line must be indented past the enclosing block
        if let (Some(t), Some(b)) = (self.peek(), self.blocks.last()) {
            if t.first_on_line && t.col <= b.col && self.depth == b.depth {
                return self.err("unbalanced by-block: expected indented tactics after 'by'");
            }
        }
        let tactics = self.tactic_seq()?;
        Ok(ByBlock { tactics, span: Span::new(start, self.prev_end()) })
    }

    // -------------------------------------------------------------- tactics

    fn tactic_seq(&mut self) -> PResult<Vec<TacticNode>> {
        let Some(first) = self.peek() else { return self.err("expected tactic") };
        let block = Block { col: first.col, depth: self.depth, item_start: self.pos };
        self.blocks.push(block);
        let mut out = Vec::new();
        let res = (|| -> PResult<()> {
            loop {
                self.blocks.last_mut().unwrap().item_start = self.pos;
                out.push(self.tactic_item()?);
                if self.is_sym(";") {
                    self.bump();
                    continue;
                }
                match self.peek() {
                    Some(t)
                        if t.first_on_line && t.col == block.col && self.depth == block.depth =>
                    {
                        if matches!(t.tok, Tok::Sym("|")) {
                            break;
                        }
                        continue;
                    }
                    _ => break,
                }
            }
            Ok(())
        })();
        self.blocks.pop();
        res?;
        Ok(out)
    }

    fn tactic_item(&mut self) -> PResult<TacticNode> {
        let mut lhs = self.tactic_atom()?;
        while self.is_sym("<;>") {
            self.bump();
            let rhs = self.tactic_atom()?;
            let span = lhs.span.join(rhs.span);
            lhs = TacticNode::new(TacticKind::SeqAll(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn tactic_atom(&mut self) -> PResult<TacticNode> {
        if self.at_boundary() {
            return self.err("expected tactic");
        }
        let tok = self.peek().unwrap();
        let start = tok.span.start;
        let kind = match &tok.tok {
            Tok::Sym("·") => {
                self.bump();
                TacticKind::Focus(self.tactic_seq()?)
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.tactic_seq()?;
                self.expect_sym(")")?;
                TacticKind::Paren(inner)
            }
            Tok::LibSearch(s) => {
                let l = match s.as_str() {
                    "apply?" => LibrarySearch::Apply,
                    "exact?" => LibrarySearch::Exact,
                    _ => LibrarySearch::Rw,
                };
                self.bump();
                TacticKind::LibrarySearch(l)
            }
            Tok::Ident(name) => {
                let name = name.clone();
                self.bump();
                self.tactic_body(&name)?
            }
            _ => return self.err("expected tactic"),
        };
        Ok(TacticNode::new(kind, Span::new(start, self.prev_end())))
    }

    fn tactic_body(&mut self, name: &str) -> PResult<TacticKind> {
        Ok(match name {
            "intro" => {
                let mut names = Vec::new();
                while let Some(n) = self.peek_ident() {
                    names.push(n.to_string());
                    self.bump();
                }
                TacticKind::Intro(names)
            }
            "exact" => TacticKind::Exact(self.term()?),
            "apply" => TacticKind::Apply(self.term()?),
            "rfl" => TacticKind::Rfl,
            "assumption" => TacticKind::Assumption,
            "rw" | "rwa" => {
                let rules = self.rw_rules()?;
                let at = if self.is_kw("at") {
                    self.bump();
                    Some(self.ident()?)
                } else {
                    None
                };
                if name == "rw" {
                    TacticKind::Rw { rules, at }
                } else {
                    TacticKind::Rwa { rules, at }
                }
            }
            "cases" | "induction" => {
                let target = self.ident()?;
                let alts = if self.is_kw("with") {
                    self.bump();
                    self.case_alts()?
                } else {
                    Vec::new()
                };
                if name == "cases" {
                    TacticKind::Cases { target, alts }
                } else {
                    TacticKind::Induction { target, alts }
                }
            }
            "constructor" => TacticKind::Constructor,
            "left" => TacticKind::Left,
            "right" => TacticKind::Right,
            "have" => {
                let name = self.peek_ident().map(str::to_string);
                if name.is_some() {
                    self.bump();
                }
                let ty = if self.is_sym(":") {
                    self.bump();
                    Some(self.term()?)
                } else {
                    None
                };
                if !self.is_sym(":=") {
                    return self.err("'have' requires ':=' followed by a value");
                }
                self.bump();
                let value = self.term()?;
                TacticKind::Have { name, ty, value }
            }
            "case" => {
                let tag = self.ident()?;
                let mut names = Vec::new();
                while let Some(n) = self.peek_ident() {
                    names.push(n.to_string());
                    self.bump();
                }
                let body = if self.is_sym("=>") {
                    self.bump();
                    Some(self.tactic_seq()?)
                } else {
                    None
                };
                TacticKind::Case { tag, names, body }
            }
            "sorry" => TacticKind::Sorry,
            "all_goals" => TacticKind::AllGoals(Box::new(self.tactic_atom()?)),
            "try" => TacticKind::Try(Box::new(self.tactic_atom()?)),
            "rotate_left" => {
                let n = match self.peek() {
                    Some(Token { tok: Tok::Num(n), .. }) if !self.at_boundary() => {
                        let n = *n as u32;
                        self.bump();
                        n
                    }
                    _ => 1,
                };
                TacticKind::RotateLeft(n)
            }
            other => {
                self.pos -= 1;
                return self.err(format!("unknown tactic '{other}'"));
            }
        })
    }

    fn rw_rules(&mut self) -> PResult<Vec<RwRule>> {
        self.expect_sym("[")?;
        let mut rules = Vec::new();
        loop {
            let reverse = if self.is_sym("←") {
                self.bump();
                true
            } else {
                false
            };
            rules.push(RwRule { reverse, term: self.term()? });
            if self.is_sym(",") {
                self.bump();
            } else {
                break;
            }
        }
        self.expect_sym("]")?;
        Ok(rules)
    }

    fn case_alts(&mut self) -> PResult<Vec<CaseAlt>> {
        let mut alts = Vec::new();
        loop {
            // `|` may sit at the column of the enclosing block
            let Some(t) = self.peek() else { break };
            if t.tok != Tok::Sym("|") {
                break;
            }
            if let Some(b) = self.blocks.last() {
                if t.first_on_line && t.col < b.col {
                    break;
                }
            }
            let start = self.bump().span.start;
            let tag = self.ident()?;
            let mut names = Vec::new();
            while let Some(n) = self.peek_ident() {
                names.push(n.to_string());
                self.bump();
            }
            self.expect_sym("=>")?;
            let body = self.tactic_seq()?;
            alts.push(CaseAlt { tag, names, body, span: Span::new(start, self.prev_end()) });
        }
        if alts.is_empty() {
            return self.err("expected '|' alternative after 'with'");
        }
        Ok(alts)
    }

    // --------------------------------------------------------- declarations

    fn decl_binders(&mut self) -> PResult<Vec<Binder>> {
        if self.is_sym("(") || self.is_sym("{") {
            self.binder_group(false)
        } else {
            Ok(Vec::new())
        }
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        if self.is_sym("(") {
            self.bump();
            let p = self.pattern()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        if let Some(Token { tok: Tok::Num(0), .. }) = self.peek() {
            self.bump();
            return Ok(Pattern::Zero);
        }
        let name = self.ident()?;
        match name.as_str() {
            "zero" | "Nat.zero" => Ok(Pattern::Zero),
            "succ" | "Nat.succ" => Ok(Pattern::Succ(Box::new(self.pattern()?))),
            _ => Ok(Pattern::Var(name)),
        }
    }

    fn declaration(&mut self, opens: &mut Vec<String>) -> PResult<Option<Declaration>> {
        let kw = match self.peek() {
            Some(Token { tok: Tok::Ident(s), .. }) => s.clone(),
            _ => return self.err("expected declaration"),
        };
        let start = self.bump().span.start;
        let decl = match kw.as_str() {
            "open" => {
                let mut namespaces = vec![self.ident()?];
                while let Some(n) = self.peek_ident() {
                    namespaces.push(n.to_string());
                    self.bump();
                }
                opens.extend(namespaces.iter().cloned());
                Declaration::Open { namespaces, span: Span::new(start, self.prev_end()) }
            }
            "axiom" => {
                let name = self.ident()?;
                let binders = self.decl_binders()?;
                self.expect_sym(":")?;
                let target = self.term()?;
                let ty = pi_over(&binders, target);
                Declaration::Axiom { name, ty, span: Span::new(start, self.prev_end()) }
            }
            "def" => {
                let name = self.ident()?;
                let binders = self.decl_binders()?;
                self.expect_sym(":")?;
                let target = self.term()?;
                let ty = pi_over(&binders, target);
                let body = if self.is_sym(":=") {
                    self.bump();
                    let v = self.term()?;
                    DefBody::Value(lam_over(&binders, v))
                } else {
                    let mut eqs = Vec::new();
                    while self.is_sym("|") {
                        self.bump();
                        let mut patterns = vec![self.pattern()?];
                        while self.is_sym(",") {
                            self.bump();
                            patterns.push(self.pattern()?);
                        }
                        self.expect_sym("=>")?;
                        eqs.push(Equation { patterns, rhs: self.term()? });
                    }
                    if eqs.is_empty() {
                        return self.err("expected ':=' or equations");
                    }
                    DefBody::Equations(eqs)
                };
                Declaration::Def { name, ty, body, span: Span::new(start, self.prev_end()) }
            }
            "theorem" | "lemma" | "example" => {
                let name = if kw == "example" { None } else { Some(self.ident()?) };
                let binders = self.decl_binders()?;
                self.expect_sym(":")?;
                let target = self.term()?;
                self.expect_sym(":=")?;
                let proof = if self.is_kw("by") {
                    ProofBody::Tactic(self.by_block()?)
                } else {
                    ProofBody::Term(self.term()?)
                };
                Declaration::Theorem(TheoremDecl {
                    name,
                    binders,
                    target,
                    proof,
                    span: Span::new(start, self.prev_end()),
                    open_namespaces: opens.clone(),
                })
            }
            "namespace" | "section" | "end" => {
                while self.peek_ident().is_some() {
                    self.bump();
                }
                return Ok(None);
            }
            other => {
                self.pos -= 1;
                return self.err(format!("unknown declaration keyword '{other}'"));
            }
        };
        if !self.at_boundary() {
            return self.err("unexpected token after declaration");
        }
        Ok(Some(decl))
    }

    fn skip_to_next_decl(&mut self) {
        while let Some(t) = self.peek() {
            if t.first_on_line && t.col == 0 {
                if let Tok::Ident(s) = &t.tok {
                    if DECL_KEYWORDS.contains(&s.as_str()) {
                        return;
                    }
                }
            }
            self.bump();
        }
    }
}

fn pi_over(binders: &[Binder], body: Expr) -> Expr {
    binders.iter().rev().fold(body, |body, b| Expr::Pi {
        name: Some(b.name.clone()),
        implicit: b.implicit,
        ty: Box::new(b.ty.clone()),
        body: Box::new(body),
    })
}

fn lam_over(binders: &[Binder], body: Expr) -> Expr {
    binders.iter().rev().fold(body, |body, b| Expr::Lam {
        name: b.name.clone(),
        ty: Some(Box::new(b.ty.clone())),
        body: Box::new(body),
    })
}

fn desugar_binop(op: &str, a: Expr, b: Expr) -> Expr {
    let bin = |f: &str, x, y| Expr::apps(Expr::ident(f), [x, y]);
    match op {
        "→" => Expr::Pi { name: None, implicit: false, ty: Box::new(a), body: Box::new(b) },
        "↔" => bin("Iff", a, b),
        "∨" => bin("Or", a, b),
        "∧" => bin("And", a, b),
        "=" => bin("Eq", a, b),
        "≠" => bin("Ne", a, b),
        "≤" => bin("Nat.le", a, b),
        "<" => bin("Nat.lt", a, b),
        "≥" => bin("Nat.le", b, a),
        ">" => bin("Nat.lt", b, a),
        "+" => bin("Nat.add", a, b),
        "-" => bin("Nat.sub", a, b),
        "*" => bin("Nat.mul", a, b),
        _ => unreachable!("unknown operator {op}"),
    }
}

fn finish<T>(p: &Parser<'_>, v: T) -> PResult<T> {
    if p.pos < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(v)
}

pub fn parse_term(text: &str) -> PResult<Expr> {
    let toks = tokenize(text)?;
    let mut p = Parser::new(&toks, text.chars().count());
    let e = p.term()?;
    finish(&p, e)
}

pub fn parse_tactic_script(text: &str) -> PResult<Vec<TacticNode>> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Ok(Vec::new());
    }
    let mut p = Parser::new(&toks, text.chars().count());
    let script = p.tactic_seq()?;
    finish(&p, script)
}

/// Parses a single tactic (with `<;>` chains) and requires it to span the text.
pub fn parse_tactic(text: &str) -> PResult<TacticNode> {
    let mut script = parse_tactic_script(text)?;
    if script.len() != 1 {
        return Err(SyntaxError::new(
            Span::new(0, text.chars().count()),
            format!("expected exactly one tactic, found {}", script.len()),
        ));
    }
    Ok(script.remove(0))
}

pub fn parse_file(text: &str, path: &str) -> PResult<SourceFile> {
    let toks = tokenize(text)?;
    let mut p = Parser::new(&toks, text.chars().count());
    p.blocks.push(Block { col: 0, depth: 0, item_start: 0 });
    let mut imports = Vec::new();
    let mut declarations = Vec::new();
    let mut opens = Vec::new();
    while let Some(t) = p.peek() {
        let start = t.span.start;
        if !(t.first_on_line && t.col == 0) {
            let span = t.span;
            p.bump();
            p.skip_to_next_decl();
            declarations.push(Declaration::Error {
                message: "declaration must start at column 0".into(),
                span: Span::new(span.start, p.prev_end()),
            });
            continue;
        }
        if matches!(&t.tok, Tok::Ident(s) if s == "import") {
            p.bump();
            // the module name is on the same line
            let Some(Token { tok: Tok::Ident(m), first_on_line: false, .. }) = p.peek() else {
                p.skip_to_next_decl();
                declarations.push(Declaration::Error {
                    message: "expected module name after 'import'".into(),
                    span: Span::new(start, p.prev_end()),
                });
                continue;
            };
            let m = m.clone();
            p.bump();
            if declarations.is_empty() {
                imports.push(m);
            } else {
                declarations.push(Declaration::Error {
                    message: format!("import '{m}' must precede all declarations"),
                    span: Span::new(start, p.prev_end()),
                });
            }
            continue;
        }
        let saved_depth = p.depth;
        p.blocks[0].item_start = p.pos;
        match p.declaration(&mut opens) {
            Ok(Some(d)) => declarations.push(d),
            Ok(None) => {}
            Err(e) => {
                p.depth = saved_depth;
                p.blocks.truncate(1);
                p.skip_to_next_decl();
                declarations.push(Declaration::Error {
                    message: e.to_string(),
                    span: Span::new(start, p.prev_end().max(start)),
                });
            }
        }
        p.depth = 0;
    }
    Ok(SourceFile { path: path.to_string(), imports, declarations, text: text.to_string() })
}
