use super::{BoolKernel, CnfCell, CnfComponent, NfError, NfTree};
use crate::diagram::gadgets::{discard, gen};
use crate::diagram::{
    affine_gaussian_circuit, copy_word, discard_word, par_all, permutation, seq_all, thick_ite, Colour, Generator,
    Node, Term, TermError, TypeWord,
};
use crate::exec::Execution;
use crate::linalg::{ldlt, Scalar};
use crate::semantics::CGMixture;

fn bools(n: usize) -> TypeWord {
    TypeWord::repeat(Colour::B, n)
}

fn reals(n: usize) -> TypeWord {
    TypeWord::repeat(Colour::R, n)
}

/// `a ⊗ b` with empty identities dropped and adjacent identities merged.
fn beside(a: &Term, b: &Term) -> Term {
    match (a.node(), b.node()) {
        (Node::Id(u), _) if u.is_empty() => b.clone(),
        (_, Node::Id(v)) if v.is_empty() => a.clone(),
        (Node::Id(u), Node::Id(v)) => Term::id(u.concat(v)),
        _ => Term::par(a, b),
    }
}

fn typed(e: TermError) -> NfError {
    NfError::Invalid(e.to_string())
}

/// Biases of the flip cascade: `w₀`, then `wᵢ / (1 − Σ_{j<i} w_j)` for all
/// but the last component.
pub fn cascade_biases(cell: &CnfCell) -> Vec<Scalar> {
    let mut rest = Scalar::one();
    let mut out = Vec::new();
    for c in &cell.components[..cell.components.len().saturating_sub(1)] {
        out.push(&c.weight / &rest);
        rest = &rest - &c.weight;
    }
    out
}

fn gaussian_leaf(c: &CnfComponent, tol: f64) -> Result<Term, NfError> {
    let factor = ldlt(&c.cov.gram(), tol)?.factor();
    affine_gaussian_circuit(&c.a, &c.mu, &factor).map_err(typed)
}

/// Circuit `R^m → R^n` for a convex cell: a single Gaussian circuit, or a
/// flip-guarded `ite` choosing the first component against the cascade of
/// the remaining ones.
pub fn synth_cnf(cell: &CnfCell, tol: f64) -> Result<Term, NfError> {
    let first = cell.components.first().ok_or_else(|| NfError::Invalid("empty cell".into()))?;
    let (n, m) = first.a.shape();
    let biases = cascade_biases(cell);
    let mut acc = gaussian_leaf(cell.components.last().expect("nonempty"), tol)?;
    for (c, b) in cell.components.iter().zip(&biases).rev() {
        let branches = beside(&gaussian_leaf(c, tol)?, &acc);
        let guard = beside(&gen(Generator::Flip(b.clone())), &Term::id(reals(2 * n)));
        acc = seq_all([copy_word(&reals(m)), branches, guard, thick_ite(1, n)]).map_err(typed)?;
    }
    Ok(acc)
}

/// `g, x, y ↦ g ? x : y` as `¬(¬(g∧x) ∧ ¬(¬g∧y))`.
fn mux() -> Term {
    let b = Term::id_colour(Colour::B);
    let not = || gen(Generator::Not);
    let and = || gen(Generator::And);
    let spread = par_all([gen(Generator::BoolCopy), Term::id(bools(2))]);
    let pair = par_all([b.clone(), Term::swap(Colour::B, Colour::B), b.clone()]);
    let left = seq_all([and(), not()]).expect("nand");
    let right = seq_all([beside(&not(), &b), and(), not()]).expect("guarded nand");
    seq_all([spread, pair, beside(&left, &right), and(), not()]).expect("mux")
}

fn all_are(v: &[Scalar], x: &Scalar) -> bool {
    v.iter().all(|s| s.num_eq(x))
}

/// Circuit `B^r → B` outputting 1 with probability `biases[bits]`, one
/// guard per level, leftmost bit first.
fn selector(biases: &[Scalar]) -> Term {
    let r = biases.len().trailing_zeros() as usize;
    if all_are(biases, &biases[0]) {
        let f = gen(Generator::Flip(biases[0].clone()));
        return if r == 0 { f } else { beside(&discard_word(&bools(r)), &f) };
    }
    let half = biases.len() / 2;
    let (lo, hi) = biases.split_at(half);
    let rest = bools(r - 1);
    let (zero, one) = (Scalar::zero(), Scalar::one());
    if all_are(hi, &one) && all_are(lo, &zero) {
        return par_all([Term::id_colour(Colour::B), discard_word(&rest)]);
    }
    if all_are(hi, &zero) && all_are(lo, &one) {
        return par_all([gen(Generator::Not), discard_word(&rest)]);
    }
    if hi.iter().zip(lo).all(|(x, y)| x.num_eq(y)) {
        return beside(&discard(Colour::B), &selector(lo));
    }
    let spread = beside(&Term::id_colour(Colour::B), &copy_word(&rest));
    let branches = par_all([Term::id_colour(Colour::B), selector(hi), selector(lo)]);
    seq_all([spread, branches, mux()]).expect("selector")
}

/// Circuit `B^p → B^q` denoting the kernel: each output bit is drawn from a
/// flip conditioned on the inputs and the bits already drawn.
pub fn synth_bool(k: &BoolKernel) -> Term {
    let (p, q) = (k.p, k.q);
    if k.is_identity() {
        return Term::id(bools(p));
    }
    if q == 0 {
        return discard_word(&bools(p));
    }
    let mut layers = Vec::with_capacity(q + 1);
    for j in 0..q {
        let shift = q - j;
        let mut biases = Vec::with_capacity(1 << (p + j));
        for a in 0..1usize << p {
            for prefix in 0..1usize << j {
                let mut den = Scalar::zero();
                let mut num = Scalar::zero();
                for b in (prefix << shift)..((prefix + 1) << shift) {
                    let w = k.get(a, b);
                    den = &den + w;
                    if (b >> (shift - 1)) & 1 == 1 {
                        num = &num + w;
                    }
                }
                biases.push(if den.is_zero() { Scalar::zero() } else { &num / &den });
            }
        }
        let state = bools(p + j);
        let draw = beside(&Term::id(state.clone()), &selector(&biases));
        layers.push(seq_all([copy_word(&state), draw]).expect("Bernoulli step"));
    }
    layers.push(beside(&discard_word(&bools(p)), &Term::id(bools(q))));
    seq_all(layers).expect("Bernoulli chain")
}

/// `B^k·R^m → R^n`: guards leftmost first, the true branch taking the upper
/// half of `leaves`. Guards whose two subtrees coincide are discarded.
fn guard_tree(k: usize, leaves: &[Term], m: usize, n: usize) -> Term {
    if k == 0 {
        return leaves[0].clone();
    }
    let half = leaves.len() / 2;
    let (lo, hi) = leaves.split_at(half);
    if lo == hi {
        return beside(&discard(Colour::B), &guard_tree(k - 1, lo, m, n));
    }
    let rest = bools(k - 1).concat(&reals(m));
    let spread = beside(&Term::id_colour(Colour::B), &copy_word(&rest));
    let branches = par_all([Term::id_colour(Colour::B), guard_tree(k - 1, hi, m, n), guard_tree(k - 1, lo, m, n)]);
    seq_all([spread, branches, thick_ite(1, n)]).expect("guard level")
}

/// The normal-form circuit of a certificate: copy the Boolean inputs, draw
/// the Boolean outputs from the marginal, copy them, and select the leaf
/// cell by the outputs and then the inputs.
pub fn emit_nf(nf: &NfTree, tol: f64) -> Result<Term, NfError> {
    let (p, m, q, n) = nf.arity();
    let cells = Execution::default().map_indexed(nf.leaves.len(), |i| synth_cnf(&nf.leaves[i], tol));
    let cells = cells.into_iter().collect::<Result<Vec<_>, _>>()?;
    let inputs = bools(p).concat(&reals(m));
    let body = [
        beside(&copy_word(&bools(p)), &Term::id(reals(m))),
        beside(&synth_bool(&nf.bool_marginal), &Term::id(inputs.clone())),
        beside(&copy_word(&bools(q)), &Term::id(inputs)),
        beside(&Term::id(bools(q)), &guard_tree(p + q, &cells, m, n)),
    ];
    let enter = permutation(&nf.in_word, &CGMixture::layout(&nf.in_word));
    let mut seen = [0, 0];
    let exit: Vec<usize> = nf
        .out_word
        .colours()
        .iter()
        .map(|&c| {
            let k = &mut seen[(c == Colour::R) as usize];
            *k += 1;
            if c == Colour::B { *k - 1 } else { q + *k - 1 }
        })
        .collect();
    let exit = permutation(&TypeWord::bool_first(q, n), &exit);
    seq_all(std::iter::once(enter).chain(body).chain([exit])).map_err(typed)
}
