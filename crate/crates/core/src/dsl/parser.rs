use std::collections::HashMap;

use super::{DslError, ParseError, SourceSpan};
use crate::diagram::{Colour, GeneratorKind, Term, TypeWord};
use crate::linalg::Scalar;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Star,
    Equals,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Star => "`*`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    start: Pos,
    end: Pos,
}

fn lex(src: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let span = |s: Pos, e: Pos| SourceSpan::new(file, s.line, s.col, e.line, e.col);
    while i < chars.len() {
        let c = chars[i];
        let start = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '*' => Some(Tok::Star),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(tok) = single {
            i += 1;
            col += 1;
            out.push(Token { tok, start, end: Pos { line, col: col - 1 } });
            continue;
        }
        let is_num_start =
            c.is_ascii_digit() || (c == '-' || c == '.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if is_num_start {
            let mut s = String::new();
            while i < chars.len() {
                let d = chars[i];
                let prev = s.chars().last();
                let ok = d.is_ascii_digit()
                    || matches!(d, '.' | '/' | 'e' | 'E')
                    || (matches!(d, '-' | '+') && (s.is_empty() || matches!(prev, Some('e' | 'E' | '/'))));
                if !ok {
                    break;
                }
                s.push(d);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Number(s), start, end: Pos { line, col: col - 1 } });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), start, end: Pos { line, col: col - 1 } });
            continue;
        }
        return Err(ParseError {
            span: span(start, start),
            message: format!("unexpected character `{c}`"),
            expected: vec!["an expression".into()],
        });
    }
    out.push(Token { tok: Tok::Eof, start: Pos { line, col }, end: Pos { line, col } });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: &'a str,
    env: Vec<(String, Term)>,
}

struct Spanned {
    term: Term,
    start: Pos,
    end: Pos,
}

const RESERVED: &[&str] = &["let", "in", "id", "swap"];

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn span(&self, s: Pos, e: Pos) -> SourceSpan {
        SourceSpan::new(self.file, s.line, s.col, e.line, e.col)
    }

    fn error_here(&self, message: impl Into<String>, expected: &[&str]) -> DslError {
        let t = self.peek();
        DslError::Parse(ParseError {
            span: self.span(t.start, t.end),
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, DslError> {
        if self.peek().tok == want {
            Ok(self.bump())
        } else {
            let found = self.peek().tok.describe();
            Err(self.error_here(format!("expected {what}, found {found}"), &[what]))
        }
    }

    fn expr(&mut self) -> Result<Spanned, DslError> {
        if self.peek().tok == Tok::Ident("let".into()) {
            let start = self.bump().start;
            let name_tok = self.bump();
            let name = match &name_tok.tok {
                Tok::Ident(n) if !RESERVED.contains(&n.as_str()) && GeneratorKind::from_keyword(n).is_none() => {
                    n.clone()
                }
                other => {
                    return Err(DslError::Parse(ParseError {
                        span: self.span(name_tok.start, name_tok.end),
                        message: format!("expected a binding name, found {}", other.describe()),
                        expected: vec!["identifier".into()],
                    }))
                }
            };
            self.expect(Tok::Equals, "`=`")?;
            let bound = self.expr()?;
            if self.peek().tok != Tok::Ident("in".into()) {
                let found = self.peek().tok.describe();
                return Err(self.error_here(format!("expected `in`, found {found}"), &["`in`"]));
            }
            self.bump();
            self.env.push((name, bound.term));
            let body = self.expr();
            self.env.pop();
            let body = body?;
            return Ok(Spanned { term: body.term, start, end: body.end });
        }
        let mut left = self.par_expr()?;
        while self.peek().tok == Tok::Semi {
            self.bump();
            let right = self.par_expr()?;
            let term = Term::seq(&left.term, &right.term)
                .map_err(|error| DslError::Type { span: self.span(left.start, right.end), error })?;
            left = Spanned { term, start: left.start, end: right.end };
        }
        Ok(left)
    }

    fn par_expr(&mut self) -> Result<Spanned, DslError> {
        let mut left = self.atom()?;
        while self.peek().tok == Tok::Star {
            self.bump();
            let right = self.atom()?;
            let term = Term::par(&left.term, &right.term);
            left = Spanned { term, start: left.start, end: right.end };
        }
        Ok(left)
    }

    fn atom(&mut self) -> Result<Spanned, DslError> {
        let tok = self.peek().clone();
        match &tok.tok {
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Spanned { term: inner.term, start: tok.start, end: close.end })
            }
            Tok::Ident(name) => {
                self.bump();
                self.named_atom(name, tok.start, tok.end)
            }
            other => Err(self.error_here(
                format!("expected an expression, found {}", other.describe()),
                &["generator", "id(...)", "swap(...)", "`(`", "let"],
            )),
        }
    }

    fn named_atom(&mut self, name: &str, start: Pos, end: Pos) -> Result<Spanned, DslError> {
        match name {
            "id" => {
                self.expect(Tok::LParen, "`(`")?;
                let word = match self.peek().tok.clone() {
                    Tok::Ident(w) => {
                        let t = self.bump();
                        TypeWord::parse(&w).ok_or_else(|| {
                            DslError::Parse(ParseError {
                                span: self.span(t.start, t.end),
                                message: format!("`{w}` is not a word over B and R"),
                                expected: vec!["word like BRR".into()],
                            })
                        })?
                    }
                    _ => TypeWord::empty(),
                };
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Spanned { term: Term::id(word), start, end: close.end })
            }
            "swap" => {
                self.expect(Tok::LParen, "`(`")?;
                let a = self.colour()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.colour()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Spanned { term: Term::swap(a, b), start, end: close.end })
            }
            _ => {
                if let Some(kind) = GeneratorKind::from_keyword(name) {
                    let (param, end) = if kind.takes_param() {
                        self.expect(Tok::LParen, "`(`")?;
                        let t = self.bump();
                        let value = match &t.tok {
                            Tok::Number(s) => s.parse::<Scalar>().map_err(|e| {
                                DslError::Parse(ParseError {
                                    span: self.span(t.start, t.end),
                                    message: e.to_string(),
                                    expected: vec!["rational a/b or decimal".into()],
                                })
                            })?,
                            other => {
                                return Err(DslError::Parse(ParseError {
                                    span: self.span(t.start, t.end),
                                    message: format!("expected a number, found {}", other.describe()),
                                    expected: vec!["rational a/b or decimal".into()],
                                }))
                            }
                        };
                        let close = self.expect(Tok::RParen, "`)`")?;
                        (Some(value), close.end)
                    } else {
                        (None, end)
                    };
                    let term = Term::generator(kind, param)
                        .map_err(|error| DslError::Type { span: self.span(start, end), error })?;
                    return Ok(Spanned { term, start, end });
                }
                if let Some((_, t)) = self.env.iter().rev().find(|(n, _)| n == name) {
                    return Ok(Spanned { term: t.clone(), start, end });
                }
                Err(DslError::Parse(ParseError {
                    span: self.span(start, end),
                    message: format!("unknown name `{name}`"),
                    expected: vec!["generator".into(), "bound name".into()],
                }))
            }
        }
    }

    fn colour(&mut self) -> Result<Colour, DslError> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) if s.len() == 1 => Colour::from_char(s.chars().next().unwrap()),
            _ => None,
        }
        .ok_or_else(|| {
            DslError::Parse(ParseError {
                span: self.span(t.start, t.end),
                message: format!("expected a colour, found {}", t.tok.describe()),
                expected: vec!["B".into(), "R".into()],
            })
        })
    }
}

pub(super) fn parse_named(src: &str, file: &str) -> Result<Term, DslError> {
    let toks = lex(src, file).map_err(DslError::Parse)?;
    let mut p = Parser { toks, pos: 0, file, env: Vec::new() };
    let e = p.expr()?;
    if p.peek().tok != Tok::Eof {
        let found = p.peek().tok.describe();
        return Err(p.error_here(format!("unexpected {found} after expression"), &["`;`", "`*`", "end of input"]));
    }
    Ok(e.term)
}

/// Parses a `name = value` binding list as used by rewrite scripts:
/// scalars (`p = 1/2`), colours (`x = B`) and circuits in braces
/// (`c = { copyR ; add }`).
pub(super) fn split_bindings(src: &str) -> Result<HashMap<String, String>, String> {
    let mut out = HashMap::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && (chars[*i].is_whitespace() || chars[*i] == ',') {
            *i += 1;
        }
    };
    loop {
        skip_ws(&mut i);
        if i >= chars.len() {
            break;
        }
        let mut name = String::new();
        while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
            name.push(chars[i]);
            i += 1;
        }
        if name.is_empty() {
            return Err(format!("expected a binding name at column {}", i + 1));
        }
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        if chars.get(i) != Some(&'=') {
            return Err(format!("expected `=` after `{name}`"));
        }
        i += 1;
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        let value = if chars.get(i) == Some(&'{') {
            let mut depth = 0;
            let start = i + 1;
            loop {
                match chars.get(i) {
                    Some('{') => depth += 1,
                    Some('}') => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    None => return Err(format!("unclosed `{{` in binding `{name}`")),
                    _ => {}
                }
                i += 1;
            }
            let v: String = chars[start..i].iter().collect();
            i += 1;
            v
        } else {
            let mut v = String::new();
            while i < chars.len() && !chars[i].is_whitespace() && chars[i] != ',' {
                v.push(chars[i]);
                i += 1;
            }
            v
        };
        out.insert(name, value.trim().to_string());
    }
    Ok(out)
}
