use std::fmt;

use super::{find_axiom, AxiomError, AxiomSchema, Binding};
use crate::diagram::{Node, Term, TypeWord};
use crate::semantics::{equal, eval, EvalOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::LeftToRight => "L2R",
            Direction::RightToLeft => "R2L",
        })
    }
}

/// A term with `;` and `*` chains flattened, so that bracketing of either
/// operator is forgotten. Adjacent identities inside a tensor chain are
/// merged and empty identities dropped, since `id(u) * id(v)` and `id(uv)`
/// are the same morphism of a strict monoidal category.
#[derive(Clone, Debug, PartialEq)]
pub enum Flat {
    Atom(Term),
    Seq(Vec<Flat>),
    Par(Vec<Flat>),
}

impl fmt::Display for Flat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, items: &[Flat], sep: &str| {
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                match it {
                    Flat::Atom(_) => write!(f, "{it}")?,
                    _ => write!(f, "({it})")?,
                }
            }
            Ok(())
        };
        match self {
            Flat::Atom(t) => write!(f, "{t}"),
            Flat::Seq(items) => join(f, items, " ; "),
            Flat::Par(items) => join(f, items, " * "),
        }
    }
}

pub fn flatten(t: &Term) -> Flat {
    match t.node() {
        Node::Seq(..) => {
            let mut items = Vec::new();
            collect_seq(t, &mut items);
            if items.len() == 1 {
                items.pop().expect("one item")
            } else {
                Flat::Seq(items)
            }
        }
        Node::Par(..) => {
            let mut items = Vec::new();
            collect_par(t, &mut items);
            let mut merged: Vec<Flat> = Vec::new();
            for it in items {
                let id_word = |f: &Flat| match f {
                    Flat::Atom(t) if matches!(t.node(), Node::Id(_)) => Some(t.dom().clone()),
                    _ => None,
                };
                match (merged.last().and_then(id_word), id_word(&it)) {
                    (_, Some(w)) if w.is_empty() => {}
                    (Some(prev), Some(w)) => {
                        *merged.last_mut().expect("nonempty") = Flat::Atom(Term::id(prev.concat(&w)));
                    }
                    _ => merged.push(it),
                }
            }
            match merged.len() {
                0 => Flat::Atom(Term::id(TypeWord::empty())),
                1 => merged.pop().expect("one item"),
                _ => Flat::Par(merged),
            }
        }
        _ => Flat::Atom(t.clone()),
    }
}

fn collect_seq(t: &Term, out: &mut Vec<Flat>) {
    match t.node() {
        Node::Seq(a, b) => {
            collect_seq(a, out);
            collect_seq(b, out);
        }
        _ => out.push(flatten(t)),
    }
}

fn collect_par(t: &Term, out: &mut Vec<Flat>) {
    match t.node() {
        Node::Par(a, b) => {
            collect_par(a, out);
            collect_par(b, out);
        }
        _ => out.push(flatten(t)),
    }
}

/// First position where `pattern` and `found` differ, as a dotted index
/// path into the flattened pattern.
fn first_mismatch(pattern: &Flat, found: &Flat, pos: &mut Vec<usize>) -> Option<(String, String)> {
    match (pattern, found) {
        (Flat::Atom(a), Flat::Atom(b)) if a == b => None,
        (Flat::Seq(xs), Flat::Seq(ys)) | (Flat::Par(xs), Flat::Par(ys)) if xs.len() == ys.len() => {
            for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
                pos.push(i);
                if let Some(m) = first_mismatch(x, y, pos) {
                    return Some(m);
                }
                pos.pop();
            }
            None
        }
        _ => Some((pattern.to_string(), found.to_string())),
    }
}

fn position_string(pos: &[usize]) -> String {
    if pos.is_empty() {
        "root of the subterm".into()
    } else {
        format!("factor {}", pos.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("."))
    }
}

/// Replaces the subterm at `path` (child indices from the root) by the other
/// side of the instantiated schema. The subterm must equal the chosen side
/// up to bracketing of `;` and `*`.
pub fn rewrite_at(
    t: &Term,
    path: &[usize],
    schema: &AxiomSchema,
    direction: Direction,
    binding: &Binding,
) -> Result<Term, AxiomError> {
    let sub = t.at_path(path).ok_or_else(|| AxiomError::InvalidPath(path.to_vec()))?;
    let (lhs, rhs) = schema.instantiate(binding)?;
    let (pattern, replacement) = match direction {
        Direction::LeftToRight => (lhs, rhs),
        Direction::RightToLeft => (rhs, lhs),
    };
    let mut pos = Vec::new();
    if let Some((expected, found)) = first_mismatch(&flatten(&pattern), &flatten(sub), &mut pos) {
        return Err(AxiomError::NoMatch { position: position_string(&pos), expected, found });
    }
    if sub.type_of() != replacement.type_of() {
        return Err(AxiomError::NoMatch {
            position: position_string(&[]),
            expected: format!("{} -> {}", replacement.dom(), replacement.cod()),
            found: format!("{} -> {}", sub.dom(), sub.cod()),
        });
    }
    let out = t.replace_at(path, &replacement).ok_or_else(|| AxiomError::InvalidPath(path.to_vec()))?;
    #[cfg(debug_assertions)]
    {
        let o = EvalOptions::default();
        if let (Ok(a), Ok(b)) = (eval(&pattern, &o), eval(&replacement, &o)) {
            debug_assert!(equal(&a, &b, o.tolerance).unwrap_or(false), "unsound rewrite with {}", schema.name);
        }
    }
    Ok(out)
}

/// One line of a rewrite script.
#[derive(Clone, Debug, PartialEq)]
pub struct RewriteStep {
    pub line: usize,
    pub axiom: String,
    pub path: Vec<usize>,
    pub direction: Direction,
    pub bindings: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("script line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

/// Parses lines `apply <axiom> at <path|root> dir <L2R|R2L> [with <bindings>]`.
/// Paths are dot-separated child indices. Blank lines and `#` comments are
/// skipped.
pub fn parse_script(src: &str) -> Result<Vec<RewriteStep>, ScriptError> {
    let mut steps = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |message: String| ScriptError { line, message };
        let (head, bindings) = match text.split_once(" with ") {
            Some((h, b)) => (h.trim(), b.trim().to_string()),
            None => (text, String::new()),
        };
        let words: Vec<&str> = head.split_whitespace().collect();
        let [apply, axiom, at, path, dir, direction] = words.as_slice() else {
            return Err(err(format!("expected `apply <axiom> at <path> dir <L2R|R2L>`, got `{text}`")));
        };
        if *apply != "apply" || *at != "at" || *dir != "dir" {
            return Err(err(format!("expected `apply <axiom> at <path> dir <L2R|R2L>`, got `{text}`")));
        }
        let path = if *path == "root" {
            Vec::new()
        } else {
            path.split('.')
                .map(|s| s.parse::<usize>().map_err(|_| err(format!("bad path component `{s}`"))))
                .collect::<Result<Vec<_>, _>>()?
        };
        let direction = match *direction {
            "L2R" => Direction::LeftToRight,
            "R2L" => Direction::RightToLeft,
            other => return Err(err(format!("direction must be L2R or R2L, got `{other}`"))),
        };
        steps.push(RewriteStep { line, axiom: axiom.to_string(), path, direction, bindings });
    }
    Ok(steps)
}

/// Applies the steps in order, checking after each that the semantics is
/// unchanged. Returns every intermediate term, starting with `t`.
pub fn run_script(t: &Term, steps: &[RewriteStep], opts: &EvalOptions) -> Result<Vec<Term>, (usize, AxiomError)> {
    let before = eval(t, opts).map_err(|e| (0, e.into()))?;
    let mut trace = vec![t.clone()];
    for (i, step) in steps.iter().enumerate() {
        let fail = |e: AxiomError| (step.line, e);
        let schema = find_axiom(&step.axiom).map_err(fail)?;
        let binding = schema.parse_binding(&step.bindings).map_err(fail)?;
        let current = trace.last().expect("nonempty");
        let next = rewrite_at(current, &step.path, schema, step.direction, &binding).map_err(fail)?;
        let after = eval(&next, opts).map_err(|e| fail(e.into()))?;
        if !equal(&before, &after, opts.tolerance).map_err(|e| fail(e.into()))? {
            return Err(fail(AxiomError::Unsound(i + 1)));
        }
        trace.push(next);
    }
    Ok(trace)
}
