//! Concrete syntax for circuit terms: parser, printer and exporters.
//!
//! ```text
//! expr  := 'let' name '=' expr 'in' expr | par (';' par)*
//! par   := atom ('*' atom)*
//! atom  := keyword | flip(num) | scal(num) | id(word) | swap(c, c) | name | '(' expr ')'
//! ```
//!
//! `;` binds loosest; both operators associate to the left. `#` starts a
//! comment running to the end of the line.

mod export;
mod parser;

use std::collections::HashMap;
use std::fmt;

pub use export::{export_dot, to_json_ast};

use crate::diagram::{Node, Term, TermError};

/// 1-based, inclusive source range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl SourceSpan {
    pub fn new(file: &str, start_line: usize, start_col: usize, end_line: usize, end_col: usize) -> Self {
        SourceSpan { file: file.to_string(), start_line, start_col, end_line, end_col }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DslError {
    #[error("{}: {}", .0.span, .0.message)]
    Parse(ParseError),
    #[error("{span}: {error}")]
    Type { span: SourceSpan, error: TermError },
}

impl DslError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            DslError::Parse(e) => &e.span,
            DslError::Type { span, .. } => span,
        }
    }
}

pub fn parse(src: &str) -> Result<Term, DslError> {
    parser::parse_named(src, "<input>")
}

/// Like [`parse`], reporting spans against `file`.
pub fn parse_named(src: &str, file: &str) -> Result<Term, DslError> {
    parser::parse_named(src, file)
}

/// Splits `p=1/2 c={copyR ; add} x=B` into raw name/value strings.
pub fn split_bindings(src: &str) -> Result<HashMap<String, String>, String> {
    parser::split_bindings(src)
}

/// Prints a term so that [`parse`] yields the structurally identical term.
pub fn print(t: &Term) -> String {
    let mut out = String::new();
    print_seq(t, &mut out);
    out
}

fn print_seq(t: &Term, out: &mut String) {
    match t.node() {
        Node::Seq(a, b) => {
            print_seq(a, out);
            out.push_str(" ; ");
            print_par(b, out);
        }
        _ => print_par(t, out),
    }
}

fn print_par(t: &Term, out: &mut String) {
    match t.node() {
        Node::Seq(..) => {
            out.push('(');
            print_seq(t, out);
            out.push(')');
        }
        Node::Par(a, b) => {
            print_par(a, out);
            out.push_str(" * ");
            print_atom(b, out);
        }
        _ => print_atom(t, out),
    }
}

fn print_atom(t: &Term, out: &mut String) {
    match t.node() {
        Node::Seq(..) | Node::Par(..) => {
            out.push('(');
            print_seq(t, out);
            out.push(')');
        }
        Node::Gen(g) => {
            out.push_str(g.kind().keyword());
            if let Some(p) = g.param() {
                out.push('(');
                out.push_str(&p.to_string());
                out.push(')');
            }
        }
        Node::Id(w) => {
            out.push_str("id(");
            out.push_str(&w.letters());
            out.push(')');
        }
        Node::Swap(a, b) => {
            out.push_str(&format!("swap({a},{b})"));
        }
    }
}
