use std::collections::HashMap;
use std::rc::Rc;

use super::mixture::{canonicalize_row, compose_rows, tensor_rows, BitVec, CGMixture, GaussComponent};
use super::{EvalOptions, SemanticsError};
use crate::diagram::{Colour, Generator, Node, Term};
use crate::linalg::{CovFactor, Matrix, Scalar};

fn n_by(rows: usize, cols: usize, entries: &[i64]) -> Matrix {
    Matrix::from_vec(rows, cols, entries.iter().map(|&v| Scalar::int(v)).collect()).expect("literal shape")
}

fn dirac(bits: Vec<bool>, a: Matrix) -> GaussComponent {
    let n = a.rows();
    GaussComponent::dirac(BitVec(bits), a, Matrix::zeros(n, 1))
}

/// Row of a generator's kernel at the Boolean input `bits`.
pub(crate) fn generator_row(g: &Generator, bits: &[bool]) -> Vec<GaussComponent> {
    let e = |rows, cols| Matrix::zeros(rows, cols);
    match g {
        Generator::BoolDiscard => vec![dirac(vec![], e(0, 0))],
        Generator::BoolCopy => vec![dirac(vec![bits[0], bits[0]], e(0, 0))],
        Generator::And => vec![dirac(vec![bits[0] && bits[1]], e(0, 0))],
        Generator::Not => vec![dirac(vec![!bits[0]], e(0, 0))],
        Generator::Flip(p) => {
            let mut t = dirac(vec![true], e(0, 0));
            let mut f = dirac(vec![false], e(0, 0));
            t.weight = p.clone();
            f.weight = &Scalar::one() - p;
            canonicalize_row(vec![t, f], 0.0)
        }
        Generator::RealDiscard => vec![dirac(vec![], e(0, 1))],
        Generator::RealCopy => vec![dirac(vec![], n_by(2, 1, &[1, 1]))],
        Generator::Zero => vec![dirac(vec![], e(1, 0))],
        Generator::Add => vec![dirac(vec![], n_by(1, 2, &[1, 1]))],
        Generator::Scalar(k) => {
            vec![dirac(vec![], Matrix::from_vec(1, 1, vec![k.clone()]).expect("1x1"))]
        }
        Generator::One => vec![GaussComponent::dirac(BitVec::empty(), e(1, 0), n_by(1, 1, &[1]))],
        Generator::StdNormal => vec![GaussComponent::new(
            Scalar::one(),
            BitVec::empty(),
            e(1, 0),
            e(1, 1),
            CovFactor::new(n_by(1, 1, &[1])),
        )],
        Generator::Ite => {
            let a = if bits[0] { n_by(1, 2, &[1, 0]) } else { n_by(1, 2, &[0, 1]) };
            vec![dirac(vec![], a)]
        }
    }
}

/// The kernel of a single generator.
pub fn interp_generator(g: &Generator) -> CGMixture {
    let t = Term::gen(g.clone()).expect("generator already validated");
    let p = t.dom().bools();
    let rows = BitVec::all(p).map(|a| generator_row(g, a.bits())).collect();
    CGMixture::from_rows_unchecked(t.dom().clone(), t.cod().clone(), rows)
}

type Row = Rc<Vec<GaussComponent>>;

/// Lazily evaluates rows of subterms. Rows are memoized by subterm identity
/// and input, so only the Boolean inputs actually reached are visited.
pub(crate) struct RowEvaluator {
    tol: f64,
    memo: HashMap<(usize, Vec<bool>), Row>,
}

impl RowEvaluator {
    pub(crate) fn new(tol: f64) -> Self {
        RowEvaluator { tol, memo: HashMap::new() }
    }

    pub(crate) fn row(&mut self, t: &Term, bits: &[bool]) -> Row {
        let key = (t.node_id(), bits.to_vec());
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let m = t.dom().reals();
        let row: Vec<GaussComponent> = match t.node() {
            Node::Gen(g) => generator_row(g, bits),
            Node::Id(_) => vec![dirac(bits.to_vec(), Matrix::identity(m))],
            Node::Swap(a, b) => match (a, b) {
                (Colour::B, Colour::B) => vec![dirac(vec![bits[1], bits[0]], Matrix::identity(0))],
                (Colour::R, Colour::R) => vec![dirac(vec![], n_by(2, 2, &[0, 1, 1, 0]))],
                // Mixed crossings are invisible in the B-first layout.
                _ => vec![dirac(bits.to_vec(), Matrix::identity(1))],
            },
            Node::Seq(s, u) => {
                let first = self.row(s, bits);
                let mut cache: HashMap<&BitVec, Row> = HashMap::new();
                for c in first.iter() {
                    if !cache.contains_key(&c.bool_out) {
                        let r = self.row(u, c.bool_out.bits());
                        cache.insert(&c.bool_out, r);
                    }
                }
                compose_rows(&first, |b| cache[b].as_ref().clone(), self.tol)
            }
            Node::Par(s, u) => {
                let k = s.dom().bools();
                let left = self.row(s, &bits[..k]);
                let right = self.row(u, &bits[k..]);
                tensor_rows(&left, &right, self.tol)
            }
        };
        let row = Rc::new(row);
        self.memo.insert(key, row.clone());
        row
    }
}

/// Evaluates `t` to its canonical mixture.
pub fn eval(t: &Term, opts: &EvalOptions) -> Result<CGMixture, SemanticsError> {
    let p = t.dom().bools();
    if p > opts.bool_input_cap {
        return Err(SemanticsError::InputCapExceeded { inputs: p, cap: opts.bool_input_cap });
    }
    let mut ev = RowEvaluator::new(opts.tolerance);
    let rows = BitVec::all(p).map(|a| ev.row(t, a.bits()).as_ref().clone()).collect();
    Ok(CGMixture::from_rows_unchecked(t.dom().clone(), t.cod().clone(), rows))
}

/// One row of `⟦t⟧`; no input cap applies.
pub fn eval_row(t: &Term, input: &BitVec, opts: &EvalOptions) -> Result<Vec<GaussComponent>, SemanticsError> {
    if input.len() != t.dom().bools() {
        return Err(SemanticsError::DimensionMismatch(format!(
            "input {input} for {} Boolean wires",
            t.dom().bools()
        )));
    }
    Ok(RowEvaluator::new(opts.tolerance).row(t, input.bits()).as_ref().clone())
}

/// Evaluation by structural recursion over full tables, without laziness.
/// Slower; kept as an oracle for [`eval`].
pub fn eval_tables(t: &Term, opts: &EvalOptions) -> Result<CGMixture, SemanticsError> {
    let tol = opts.tolerance;
    let m = match t.node() {
        Node::Gen(g) => interp_generator(g),
        Node::Id(_) | Node::Swap(..) => {
            let mut ev = RowEvaluator::new(tol);
            let rows = BitVec::all(t.dom().bools()).map(|a| ev.row(t, a.bits()).as_ref().clone()).collect();
            CGMixture::from_rows_unchecked(t.dom().clone(), t.cod().clone(), rows)
        }
        Node::Seq(s, u) => super::compose(&eval_tables(s, opts)?, &eval_tables(u, opts)?, tol)?,
        Node::Par(s, u) => super::tensor(&eval_tables(s, opts)?, &eval_tables(u, opts)?, tol),
    };
    Ok(m.canonicalize(tol))
}
