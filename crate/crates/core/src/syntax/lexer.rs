//! Tokenizer for MiniLean sources.
//!
//! Offsets are counted in Unicode scalar values, never bytes.

use super::{Span, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    /// `?name`; `?_` is lexed as `SynthHole`.
    MvarRef(String),
    SynthHole,
    /// `apply?`, `exact?`, `rw?`
    LibSearch(String),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    pub line: usize,
    /// Zero-based column in characters.
    pub col: usize,
    pub first_on_line: bool,
}

/// Multi-character symbols first so that longest-match wins.
const SYMBOLS: &[(&str, &str)] = &[
    ("<;>", "<;>"),
    ("<->", "↔"),
    ("->", "→"),
    ("<-", "←"),
    ("<=", "≤"),
    (">=", "≥"),
    ("!=", "≠"),
    ("/\\", "∧"),
    ("\\/", "∨"),
    (":=", ":="),
    ("=>", "=>"),
    ("<|", "⟨"),
    ("|>", "⟩"),
    ("↦", "=>"),
    ("→", "→"),
    ("←", "←"),
    ("↔", "↔"),
    ("≤", "≤"),
    ("≥", "≥"),
    ("≠", "≠"),
    ("∧", "∧"),
    ("∨", "∨"),
    ("¬", "¬"),
    ("⟨", "⟨"),
    ("⟩", "⟩"),
    ("·", "·"),
    ("∀", "∀"),
    ("λ", "fun"),
    ("(", "("),
    (")", ")"),
    ("[", "["),
    ("]", "]"),
    ("{", "{"),
    ("}", "}"),
    (",", ","),
    (":", ":"),
    (";", ";"),
    ("|", "|"),
    ("=", "="),
    ("<", "<"),
    (">", ">"),
    ("+", "+"),
    ("-", "-"),
    ("*", "*"),
    ("~", "¬"),
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == 'ℕ'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '†' || ('₀'..='₉').contains(&c)
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 0;
    let mut line_start = 0;
    let mut line_has_token = false;

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            line_start = i;
            line_has_token = false;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        // line comment
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        // block comment, nestable
        if c == '/' && chars.get(i + 1) == Some(&'-') {
            let open_at = i;
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(SyntaxError::new(
                        Span::new(open_at, chars.len()),
                        "unterminated block comment",
                    ));
                }
                if chars[i] == '/' && chars.get(i + 1) == Some(&'-') {
                    depth += 1;
                    i += 2;
                } else if chars[i] == '-' && chars.get(i + 1) == Some(&'/') {
                    depth -= 1;
                    i += 2;
                    if depth == 0 {
                        break;
                    }
                } else {
                    if chars[i] == '\n' {
                        line += 1;
                        line_start = i + 1;
                        line_has_token = false;
                    }
                    i += 1;
                }
            }
            continue;
        }

        let start = i;
        let col = i - line_start;
        let tok = if c == '?' {
            if chars.get(i + 1) == Some(&'_') && !chars.get(i + 2).copied().is_some_and(is_ident_char)
            {
                i += 2;
                Tok::SynthHole
            } else if chars.get(i + 1).copied().is_some_and(is_ident_start) {
                i += 1;
                let s = i;
                while i < chars.len()
                    && (is_ident_char(chars[i])
                        || (chars[i] == '.' && chars.get(i + 1).is_some_and(|c| is_ident_char(*c))))
                {
                    i += 1;
                }
                Tok::MvarRef(chars[s..i].iter().collect())
            } else {
                return Err(SyntaxError::new(Span::new(i, i + 1), "stray '?'"));
            }
        } else if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[s..i].iter().collect();
            let n = text
                .parse::<u64>()
                .map_err(|_| SyntaxError::new(Span::new(s, i), "numeral too large"))?;
            Tok::Num(n)
        } else if is_ident_start(c) {
            let s = i;
            i += 1;
            loop {
                if i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                } else if i < chars.len()
                    && chars[i] == '.'
                    && chars.get(i + 1).is_some_and(|c| is_ident_char(*c))
                {
                    i += 1;
                } else if i < chars.len()
                    && chars[i] == '!'
                    && chars.get(i + 1) != Some(&'=')
                {
                    // ASCII spelling of the inaccessible-name marker
                    i += 1;
                } else {
                    break;
                }
            }
            let mut text: String = chars[s..i].iter().collect();
            text = text.replace('!', "†");
            if text == "ℕ" {
                text = "Nat".to_string();
            }
            if matches!(text.as_str(), "apply" | "exact" | "rw") && chars.get(i) == Some(&'?') {
                i += 1;
                Tok::LibSearch(format!("{text}?"))
            } else if text == "forall" {
                Tok::Sym("∀")
            } else if text == "fun" {
                Tok::Sym("fun")
            } else {
                Tok::Ident(text)
            }
        } else if c == '.' {
            // ASCII focus dot
            i += 1;
            Tok::Sym("·")
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            let mut found = None;
            for (pat, canon) in SYMBOLS {
                if rest.starts_with(pat) {
                    found = Some((pat.chars().count(), *canon));
                    break;
                }
            }
            match found {
                Some((n, canon)) => {
                    i += n;
                    Tok::Sym(canon)
                }
                None => {
                    return Err(SyntaxError::new(
                        Span::new(i, i + 1),
                        format!("unexpected character '{c}'"),
                    ))
                }
            }
        };
        out.push(Token {
            tok,
            span: Span::new(start, i),
            line,
            col,
            first_on_line: !line_has_token,
        });
        line_has_token = true;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn ascii_aliases_match_unicode() {
        assert_eq!(toks("a <= b -> c"), toks("a ≤ b → c"));
        assert_eq!(toks("<| a, b |>"), toks("⟨a, b⟩"));
        assert_eq!(toks("P /\\ Q \\/ R <-> S"), toks("P ∧ Q ∨ R ↔ S"));
        assert_eq!(toks("n!"), toks("n†"));
        assert_eq!(toks("ℕ"), vec![Tok::Ident("Nat".into())]);
    }

    #[test]
    fn offsets_are_characters() {
        let t = tokenize("ℕ → ℕ").unwrap();
        assert_eq!(t[1].span, Span::new(2, 3));
        assert_eq!(t[2].span, Span::new(4, 5));
    }

    #[test]
    fn library_search_and_holes() {
        assert_eq!(
            toks("apply? ?_ ?m.3"),
            vec![
                Tok::LibSearch("apply?".into()),
                Tok::SynthHole,
                Tok::MvarRef("m.3".into())
            ]
        );
    }

    #[test]
    fn layout_columns() {
        let t = tokenize("a\n  b c\n d").unwrap();
        assert!(t[0].first_on_line && t[1].first_on_line && !t[2].first_on_line);
        assert_eq!((t[1].col, t[3].col), (2, 1));
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(toks("a -- hi\n/- x /- y -/ -/ b"), toks("a b"));
        assert!(tokenize("/- open").is_err());
    }
}
