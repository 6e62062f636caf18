//! Surface syntax: tokens, AST, parser and renderer.

mod ast;
mod lexer;
mod parser;
mod render;

pub use ast::*;
pub use lexer::{tokenize, Tok, Token};
pub use parser::{parse_file, parse_tactic, parse_tactic_script, parse_term};
pub use render::{render_expr, render_script, render_tactic};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at {}..{}", span.start, span.finish)]
pub struct SyntaxError {
    pub span: Span,
    pub message: String,
}

impl SyntaxError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        SyntaxError { span, message: message.into() }
    }
}
