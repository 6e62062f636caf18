//! Printing of terms and tactics back to parseable text.
//!
//! `render_expr` and `render_tactic` produce a single line. `render_script`
//! lays a tactic sequence out one tactic per line with Lean indentation.

use super::ast::*;

const MAX_PREC: u8 = 200;

fn binop(e: &Expr) -> Option<(&'static str, u8, bool, bool, &Expr, &Expr)> {
    // (symbol, precedence, left-assoc, right-assoc, lhs, rhs)
    let (head, args) = e.spine();
    let Expr::Ident(h) = head else { return None };
    if args.len() != 2 {
        return None;
    }
    let (sym, prec, la, ra) = match h.as_str() {
        "Iff" => ("↔", 20, false, false),
        "Or" => ("∨", 30, false, true),
        "And" => ("∧", 35, false, true),
        "Eq" => ("=", 50, false, false),
        "Ne" => ("≠", 50, false, false),
        "Nat.le" => ("≤", 50, false, false),
        "Nat.lt" => ("<", 50, false, false),
        "Nat.add" => ("+", 65, true, false),
        "Nat.sub" => ("-", 65, true, false),
        "Nat.mul" => ("*", 70, true, false),
        _ => return None,
    };
    Some((sym, prec, la, ra, args[0], args[1]))
}

fn paren_if(cond: bool, s: String) -> String {
    if cond {
        format!("({s})")
    } else {
        s
    }
}

fn go(e: &Expr, ctx: u8, out: &mut String) {
    if let Some(n) = e.as_numeral() {
        out.push_str(&n.to_string());
        return;
    }
    if let Some((sym, prec, la, ra, l, r)) = binop(e) {
        let mut s = String::new();
        go(l, if la { prec } else { prec + 1 }, &mut s);
        s.push(' ');
        s.push_str(sym);
        s.push(' ');
        go(r, if ra { prec } else { prec + 1 }, &mut s);
        out.push_str(&paren_if(prec < ctx, s));
        return;
    }
    match e {
        Expr::Ident(s) => out.push_str(s),
        Expr::Hole => out.push('_'),
        Expr::SynthHole => out.push_str("?_"),
        Expr::Mvar(m) => {
            out.push('?');
            out.push_str(m);
        }
        Expr::Sort(0) => out.push_str("Prop"),
        Expr::Sort(1) => out.push_str("Type"),
        Expr::Sort(n) => out.push_str(&paren_if(ctx > 0, format!("Sort {n}"))),
        Expr::Sorry => out.push_str("sorry"),
        Expr::App(f, a) => {
            if matches!(&**f, Expr::Ident(h) if h == "Not") {
                let mut s = String::from("¬");
                go(a, 40, &mut s);
                out.push_str(&paren_if(40 < ctx, s));
                return;
            }
            let mut s = String::new();
            go(f, MAX_PREC, &mut s);
            s.push(' ');
            go(a, MAX_PREC + 1, &mut s);
            out.push_str(&paren_if(MAX_PREC < ctx, s));
        }
        Expr::Pi { name: None, ty, body, .. } => {
            let mut s = String::new();
            go(ty, 26, &mut s);
            s.push_str(" → ");
            go(body, 25, &mut s);
            out.push_str(&paren_if(25 < ctx, s));
        }
        Expr::Pi { .. } => {
            let mut s = String::from("∀");
            let mut cur = e;
            // group consecutive named binders sharing a type and binder kind
            while let Expr::Pi { name: Some(n), implicit, ty, body } = cur {
                let mut names = vec![n.as_str()];
                let mut next = &**body;
                while let Expr::Pi { name: Some(n2), implicit: i2, ty: t2, body: b2 } = next {
                    if i2 == implicit && t2 == ty {
                        names.push(n2);
                        next = b2;
                    } else {
                        break;
                    }
                }
                let (open, close) = if *implicit { ('{', '}') } else { ('(', ')') };
                s.push(' ');
                s.push(open);
                s.push_str(&names.join(" "));
                s.push_str(" : ");
                go(ty, 0, &mut s);
                s.push(close);
                cur = next;
            }
            s.push_str(", ");
            go(cur, 0, &mut s);
            out.push_str(&paren_if(ctx > 0, s));
        }
        Expr::Lam { .. } => {
            let mut s = String::from("fun");
            let mut cur = e;
            while let Expr::Lam { name, ty, body } = cur {
                s.push(' ');
                match ty {
                    Some(t) => {
                        s.push('(');
                        s.push_str(name);
                        s.push_str(" : ");
                        go(t, 0, &mut s);
                        s.push(')');
                    }
                    None => s.push_str(name),
                }
                cur = body;
            }
            s.push_str(" => ");
            go(cur, 0, &mut s);
            out.push_str(&paren_if(ctx > 0, s));
        }
        Expr::Anon(xs) => {
            out.push('⟨');
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                go(x, 0, out);
            }
            out.push('⟩');
        }
        Expr::By(b) => {
            let s = format!("by {}", render_seq_inline(&b.tactics));
            out.push_str(&paren_if(ctx > 0, s));
        }
        Expr::Ascribe(x, t) => {
            out.push('(');
            go(x, 0, out);
            out.push_str(" : ");
            go(t, 0, out);
            out.push(')');
        }
        Expr::Proj(x, f) => {
            let mut s = String::new();
            go(x, 0, &mut s);
            if matches!(&**x, Expr::Anon(_)) {
                out.push_str(&s);
            } else {
                out.push('(');
                out.push_str(&s);
                out.push(')');
            }
            out.push('.');
            out.push_str(f);
        }
    }
}

pub fn render_expr(e: &Expr) -> String {
    let mut s = String::new();
    go(e, 0, &mut s);
    s
}

/// True if the rendering of `t` ends in a sequence that would swallow a
/// following `; tac`.
fn ends_open(t: &TacticNode) -> bool {
    match &t.kind {
        TacticKind::Focus(_) => true,
        TacticKind::Cases { alts, .. } | TacticKind::Induction { alts, .. } => !alts.is_empty(),
        TacticKind::Case { body, .. } => body.is_some(),
        TacticKind::SeqAll(_, b) => ends_open(b),
        TacticKind::AllGoals(x) | TacticKind::Try(x) => ends_open(x),
        _ => t.terms().iter().any(|e| !e.by_blocks().is_empty()),
    }
}

fn render_seq_inline(ts: &[TacticNode]) -> String {
    let n = ts.len();
    ts.iter()
        .enumerate()
        .map(|(i, t)| {
            let s = render_tactic(t);
            if i + 1 < n && ends_open(t) {
                format!("({s})")
            } else {
                s
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn render_names(out: &mut String, names: &[String]) {
    for n in names {
        out.push(' ');
        out.push_str(n);
    }
}

fn render_rules(rules: &[RwRule]) -> String {
    let parts: Vec<String> = rules
        .iter()
        .map(|r| {
            let t = render_expr(&r.term);
            if r.reverse {
                format!("← {t}")
            } else {
                t
            }
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

fn render_head(t: &TacticNode) -> String {
    match &t.kind {
        TacticKind::Intro(names) => {
            let mut s = "intro".to_string();
            render_names(&mut s, names);
            s
        }
        TacticKind::Exact(e) => format!("exact {}", render_expr(e)),
        TacticKind::Apply(e) => format!("apply {}", render_expr(e)),
        TacticKind::Rfl => "rfl".into(),
        TacticKind::Assumption => "assumption".into(),
        TacticKind::Rw { rules, at } | TacticKind::Rwa { rules, at } => {
            let mut s = format!("{} {}", t.kind_name(), render_rules(rules));
            if let Some(h) = at {
                s.push_str(" at ");
                s.push_str(h);
            }
            s
        }
        TacticKind::Cases { target, .. } => format!("cases {target}"),
        TacticKind::Induction { target, .. } => format!("induction {target}"),
        TacticKind::Constructor => "constructor".into(),
        TacticKind::Left => "left".into(),
        TacticKind::Right => "right".into(),
        TacticKind::Have { name, ty, value } => {
            let mut s = "have".to_string();
            if let Some(n) = name {
                s.push(' ');
                s.push_str(n);
            }
            if let Some(ty) = ty {
                s.push_str(" : ");
                s.push_str(&render_expr(ty));
            }
            s.push_str(" := ");
            s.push_str(&render_expr(value));
            s
        }
        TacticKind::Case { tag, names, .. } => {
            let mut s = format!("case {tag}");
            render_names(&mut s, names);
            s
        }
        TacticKind::Sorry => "sorry".into(),
        TacticKind::RotateLeft(1) => "rotate_left".into(),
        TacticKind::RotateLeft(n) => format!("rotate_left {n}"),
        TacticKind::LibrarySearch(l) => l.keyword().into(),
        TacticKind::SeqAll(..)
        | TacticKind::AllGoals(_)
        | TacticKind::Try(_)
        | TacticKind::Focus(_)
        | TacticKind::Paren(_) => unreachable!("structural tactic has no head"),
    }
}

fn render_atom_arg(t: &TacticNode) -> String {
    let s = render_tactic(t);
    if matches!(t.kind, TacticKind::SeqAll(..)) {
        format!("({s})")
    } else {
        s
    }
}

/// Single-line rendering of one tactic.
pub fn render_tactic(t: &TacticNode) -> String {
    match &t.kind {
        TacticKind::SeqAll(a, b) => {
            let left = if ends_open(a) { format!("({})", render_tactic(a)) } else { render_tactic(a) };
            format!("{left} <;> {}", render_atom_arg(b))
        }
        TacticKind::AllGoals(x) => format!("all_goals {}", render_atom_arg(x)),
        TacticKind::Try(x) => format!("try {}", render_atom_arg(x)),
        TacticKind::Focus(ts) => format!("· {}", render_seq_inline(ts)),
        TacticKind::Paren(ts) => format!("({})", render_seq_inline(ts)),
        TacticKind::Cases { alts, .. } | TacticKind::Induction { alts, .. } if !alts.is_empty() => {
            let mut s = render_head(t);
            s.push_str(" with");
            for (i, a) in alts.iter().enumerate() {
                s.push_str(" | ");
                s.push_str(&a.tag);
                render_names(&mut s, &a.names);
                s.push_str(" => ");
                let body = render_seq_inline(&a.body);
                // a following alternative must not be swallowed
                if i + 1 < alts.len() && a.body.last().is_some_and(ends_open) {
                    s.push_str(&format!("({body})"));
                } else {
                    s.push_str(&body);
                }
            }
            s
        }
        TacticKind::Case { body: Some(b), .. } => {
            format!("{} => {}", render_head(t), render_seq_inline(b))
        }
        _ => render_head(t),
    }
}

fn render_block(ts: &[TacticNode], indent: usize, out: &mut Vec<String>) {
    for t in ts {
        render_multi(t, indent, out);
    }
}

fn render_multi(t: &TacticNode, indent: usize, out: &mut Vec<String>) {
    let pad = " ".repeat(indent);
    match &t.kind {
        TacticKind::Focus(ts) if !ts.is_empty() => {
            let mut inner = Vec::new();
            render_block(ts, indent + 2, &mut inner);
            let first = inner[0].trim_start().to_string();
            out.push(format!("{pad}· {first}"));
            out.extend(inner.into_iter().skip(1));
        }
        TacticKind::Cases { alts, .. } | TacticKind::Induction { alts, .. } if !alts.is_empty() => {
            out.push(format!("{pad}{} with", render_head(t)));
            for a in alts {
                let mut head = format!("{pad}| {}", a.tag);
                render_names(&mut head, &a.names);
                head.push_str(" =>");
                out.push(head);
                render_block(&a.body, indent + 2, out);
            }
        }
        TacticKind::Case { body: Some(b), .. } => {
            out.push(format!("{pad}{} =>", render_head(t)));
            render_block(b, indent + 2, out);
        }
        _ => out.push(format!("{pad}{}", render_tactic(t))),
    }
}

/// Multi-line layout of a tactic sequence at the given indentation.
pub fn render_script(ts: &[TacticNode], indent: usize) -> String {
    let mut lines = Vec::new();
    render_block(ts, indent, &mut lines);
    lines.join("\n")
}
