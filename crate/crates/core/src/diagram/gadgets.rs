//! Derived circuits: n-ary copies, wire permutations, thick if-then-else,
//! and the encodings of matrices and Gaussians as Gaussian circuits.
//!
//! Every gadget is right-associated, and guards are consumed leftmost first.

use super::term::{Colour, Generator, Node, Term, TermError, TypeWord};
use crate::linalg::{Matrix, Scalar};

pub fn gen(g: Generator) -> Term {
    Term::gen(g).expect("parameter-free generator")
}

/// Right-associated tensor of the given terms (`Id(ε)` when empty).
pub fn par_all(terms: impl IntoIterator<Item = Term>) -> Term {
    let mut terms: Vec<Term> = terms.into_iter().collect();
    let Some(mut acc) = terms.pop() else {
        return Term::id(TypeWord::empty());
    };
    while let Some(t) = terms.pop() {
        acc = Term::par(&t, &acc);
    }
    acc
}

/// Sequential composite of the given terms, dropping identity factors.
pub fn seq_all(terms: impl IntoIterator<Item = Term>) -> Result<Term, TermError> {
    let mut iter = terms.into_iter();
    let mut acc = iter.next().expect("seq_all needs at least one term");
    for t in iter {
        acc = if matches!(acc.node(), Node::Id(_)) && acc.cod() == t.dom() {
            t
        } else if matches!(t.node(), Node::Id(_)) && acc.cod() == t.dom() {
            acc
        } else {
            Term::seq(&acc, &t)?
        };
    }
    Ok(acc)
}

pub fn copy(c: Colour) -> Term {
    match c {
        Colour::B => gen(Generator::BoolCopy),
        Colour::R => gen(Generator::RealCopy),
    }
}

pub fn discard(c: Colour) -> Term {
    match c {
        Colour::B => gen(Generator::BoolDiscard),
        Colour::R => gen(Generator::RealDiscard),
    }
}

/// Fan-out of one wire into `n`: discard for 0, identity for 1, otherwise a
/// right comb `copy ; (id ⊗ naryCopy(n-1))`.
pub fn nary_copy(c: Colour, n: usize) -> Term {
    match n {
        0 => discard(c),
        1 => Term::id_colour(c),
        _ => {
            let rest = Term::par(&Term::id_colour(c), &nary_copy(c, n - 1));
            Term::seq(&copy(c), &rest).expect("copy comb is well typed")
        }
    }
}

/// Discards every wire of `w`.
pub fn discard_word(w: &TypeWord) -> Term {
    if w.is_empty() {
        return Term::id(TypeWord::empty());
    }
    par_all(w.colours().iter().map(|&c| discard(c)))
}

/// Wire permutation on `word`: output position `j` carries input wire
/// `perm[j]`. Built from adjacent swaps in insertion order.
pub fn permutation(word: &TypeWord, perm: &[usize]) -> Term {
    let n = word.len();
    assert_eq!(perm.len(), n, "permutation length must match the word");
    let mut seen = vec![false; n];
    for &i in perm {
        assert!(i < n && !seen[i], "not a permutation: {perm:?}");
        seen[i] = true;
    }
    let mut current: Vec<usize> = (0..n).collect();
    let mut layers = Vec::new();
    for (j, &want) in perm.iter().enumerate() {
        let mut k = current.iter().position(|&x| x == want).expect("present");
        while k > j {
            let cols: Vec<Colour> = current.iter().map(|&i| word.colours()[i]).collect();
            let left = TypeWord::new(cols[..k - 1].to_vec());
            let right = TypeWord::new(cols[k + 1..].to_vec());
            let layer = par_all(
                [Term::id(left), Term::swap(cols[k - 1], cols[k]), Term::id(right)]
                    .into_iter()
                    .filter(|t| !t.dom().is_empty() || !matches!(t.node(), Node::Id(_))),
            );
            layers.push(layer);
            current.swap(k - 1, k);
            k -= 1;
        }
    }
    if layers.is_empty() {
        return Term::id(word.clone());
    }
    seq_all(layers).expect("swap layers compose")
}

/// `u·v → v·u`.
pub fn swap_words(u: &TypeWord, v: &TypeWord) -> Term {
    let (a, b) = (u.len(), v.len());
    let perm: Vec<usize> = (a..a + b).chain(0..a).collect();
    permutation(&u.concat(v), &perm)
}

/// `w → w·w`.
pub fn copy_word(w: &TypeWord) -> Term {
    let n = w.len();
    if n == 0 {
        return Term::id(TypeWord::empty());
    }
    let copies = par_all(w.colours().iter().map(|&c| copy(c)));
    // After the copies the wires read c0 c0 c1 c1 ...; gather the first
    // copy of each wire, then the second.
    let doubled = copies.cod().clone();
    let perm: Vec<usize> = (0..n).map(|i| 2 * i).chain((0..n).map(|i| 2 * i + 1)).collect();
    seq_all([copies, permutation(&doubled, &perm)]).expect("copy then gather")
}

/// Thick if-then-else with `p` guards over blocks of `n` reals.
///
/// Type `B^p · R^(2^p·n) → R^n`. Block `k` (0-based) is selected when the
/// guards read the binary expansion of `2^p - 1 - k`, leftmost guard most
/// significant: the all-true guard picks the first block.
pub fn thick_ite(p: usize, n: usize) -> Term {
    let rn = TypeWord::repeat(Colour::R, n);
    match p {
        0 => Term::id(rn),
        1 => {
            // B^n R^n R^n → (B R R)^n, then n ite gates.
            let fan = Term::par(&nary_copy(Colour::B, n), &Term::id(TypeWord::repeat(Colour::R, 2 * n)));
            let word = fan.cod().clone();
            let perm: Vec<usize> = (0..n).flat_map(|i| [i, n + i, 2 * n + i]).collect();
            let gates = par_all((0..n).map(|_| gen(Generator::Ite)));
            let gates = if n == 0 { Term::id(TypeWord::empty()) } else { gates };
            seq_all([fan, permutation(&word, &perm), gates]).expect("thick ite layer")
        }
        _ => {
            let rest = TypeWord::repeat(Colour::B, p - 1);
            let half = (1usize << (p - 1)) * n;
            let payload = TypeWord::repeat(Colour::R, 2 * half);
            let spread = par_all([Term::id_colour(Colour::B), copy_word(&rest), Term::id(payload)]);
            // g, G, G, T, F → g, G, T, G, F
            let g = p - 1;
            let word = spread.cod().clone();
            let mut perm = vec![0];
            perm.extend(1..1 + g);
            perm.extend(1 + 2 * g..1 + 2 * g + half);
            perm.extend(1 + g..1 + 2 * g);
            perm.extend(1 + 2 * g + half..1 + 2 * g + 2 * half);
            let inner = par_all([Term::id_colour(Colour::B), thick_ite(p - 1, n), thick_ite(p - 1, n)]);
            seq_all([spread, permutation(&word, &perm), inner, thick_ite(1, n)]).expect("nested thick ite")
        }
    }
}

/// Right-associated sum of `k ≥ 1` real wires.
pub fn add_tree(k: usize) -> Term {
    assert!(k >= 1);
    match k {
        1 => Term::id_colour(Colour::R),
        2 => gen(Generator::Add),
        _ => {
            let inner = Term::par(&Term::id_colour(Colour::R), &add_tree(k - 1));
            Term::seq(&inner, &gen(Generator::Add)).expect("add comb")
        }
    }
}

fn scale_wire(k: &Scalar) -> Term {
    if k.is_one() {
        Term::id_colour(Colour::R)
    } else {
        gen(Generator::Scalar(k.clone()))
    }
}

/// Circuit `R^m → R^n` denoting `x ↦ Dirac(A·x)` for an `n×m` matrix.
///
/// Input wire `j` feeds output wire `i` through `scal(A_ij)`; zero entries
/// get no wire and unit entries a plain wire. Rows without inputs emit
/// `zero`, columns without outputs are discarded.
pub fn matrix_circuit(a: &Matrix) -> Term {
    let (n, m) = a.shape();
    let mut pieces = Vec::with_capacity(m);
    // (row, col) for every wire after the fan-out stage, in wire order.
    let mut wires: Vec<(usize, usize)> = Vec::new();
    for j in 0..m {
        let targets: Vec<usize> = (0..n).filter(|&i| !a.get(i, j).is_zero()).collect();
        let fan = nary_copy(Colour::R, targets.len());
        let piece = if targets.is_empty() {
            fan
        } else {
            let scales = par_all(targets.iter().map(|&i| scale_wire(a.get(i, j))));
            seq_all([fan, scales]).expect("fan then scale")
        };
        wires.extend(targets.iter().map(|&i| (i, j)));
        pieces.push(piece);
    }
    let fanout = par_all(pieces);
    let mut order: Vec<usize> = (0..wires.len()).collect();
    order.sort_by_key(|&w| wires[w]);
    let gather = permutation(&TypeWord::repeat(Colour::R, wires.len()), &order);
    let rows = par_all((0..n).map(|i| {
        let k = wires.iter().filter(|w| w.0 == i).count();
        if k == 0 {
            gen(Generator::Zero)
        } else {
            add_tree(k)
        }
    }));
    let rows = if n == 0 { Term::id(TypeWord::empty()) } else { rows };
    seq_all([fanout, gather, rows]).expect("matrix circuit")
}

/// Circuit `R^m → R^n` denoting `x ↦ N(A·x + μ, F·Fᵀ)`: the inputs, `k`
/// standard normal sources and (when `μ ≠ 0`) a `one` source feed
/// `matrix_circuit([A | F | μ])`.
pub fn affine_gaussian_circuit(a: &Matrix, mu: &Matrix, factor: &Matrix) -> Result<Term, TermError> {
    let n = a.rows();
    if mu.shape() != (n, 1) || factor.rows() != n {
        return Err(TermError::DimensionMismatch(format!(
            "A is {:?}, mu is {:?}, factor is {:?}",
            a.shape(),
            mu.shape(),
            factor.shape()
        )));
    }
    let dim = |e: crate::linalg::LinalgError| TermError::DimensionMismatch(e.to_string());
    let mut coeffs = a.hstack(factor).map_err(dim)?;
    let mut sources = vec![Term::id(TypeWord::repeat(Colour::R, a.cols()))];
    sources.extend((0..factor.cols()).map(|_| gen(Generator::StdNormal)));
    if !mu.is_zero() {
        coeffs = coeffs.hstack(mu).map_err(dim)?;
        sources.push(gen(Generator::One));
    }
    let sources: Vec<Term> =
        sources.into_iter().filter(|t| !(t.dom().is_empty() && t.cod().is_empty())).collect();
    let src = if sources.is_empty() { Term::id(TypeWord::empty()) } else { par_all(sources) };
    seq_all([src, matrix_circuit(&coeffs)])
}

/// Circuit `ε → R^n` denoting `N(μ, L·Lᵀ)` for an `n`-vector `μ` and an
/// `n×k` factor `L`.
pub fn gaussian_circuit(mu: &Matrix, factor: &Matrix) -> Result<Term, TermError> {
    affine_gaussian_circuit(&Matrix::zeros(mu.rows(), 0), mu, factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::GeneratorKind;

    fn w(s: &str) -> TypeWord {
        TypeWord::parse(s).unwrap()
    }

    #[test]
    fn nary_copy_shapes() {
        assert_eq!(nary_copy(Colour::R, 1), Term::id(w("R")));
        assert_eq!(nary_copy(Colour::B, 0).type_of(), (w("B"), w("")));
        assert_eq!(nary_copy(Colour::R, 4).type_of(), (w("R"), w("RRRR")));
        assert_eq!(nary_copy(Colour::R, 4).count_kind(GeneratorKind::RealCopy), 3);
    }

    #[test]
    fn thick_ite_shapes() {
        let t = thick_ite(1, 2);
        assert_eq!(t.type_of(), (w("BRRRR"), w("RR")));
        assert_eq!(t.count_kind(GeneratorKind::Ite), 2);
        assert_eq!(t.count_kind(GeneratorKind::BoolCopy), 1);

        let t = thick_ite(2, 1);
        assert_eq!(t.type_of(), (w("BBRRRR"), w("R")));
        assert_eq!(t.count_kind(GeneratorKind::Ite), 3);

        assert_eq!(thick_ite(1, 0).type_of(), (w("B"), w("")));
        assert_eq!(thick_ite(3, 2).dom().reals(), 16);
    }

    #[test]
    fn permutation_types() {
        let word = w("BRB");
        let p = permutation(&word, &[2, 0, 1]);
        assert_eq!(p.type_of(), (w("BRB"), w("BBR")));
        assert_eq!(permutation(&word, &[0, 1, 2]), Term::id(word));
        assert_eq!(swap_words(&w("BR"), &w("RRB")).cod(), &w("RRBBR"));
        assert_eq!(copy_word(&w("BR")).type_of(), (w("BR"), w("BRBR")));
    }

    #[test]
    fn matrix_circuit_shapes() {
        let a = Matrix::from_ratios(&[
            &[(5, 1), (0, 1), (0, 1)],
            &[(1, 1), (1, 1), (0, 1)],
            &[(7, 1), (0, 1), (0, 1)],
            &[(0, 1), (0, 1), (0, 1)],
        ]);
        let t = matrix_circuit(&a);
        assert_eq!(t.type_of(), (w("RRR"), w("RRRR")));
        assert_eq!(t.count_kind(GeneratorKind::Scalar), 2);
        assert_eq!(t.count_kind(GeneratorKind::RealDiscard), 1);
        assert_eq!(t.count_kind(GeneratorKind::Zero), 1);
        assert_eq!(t.count_kind(GeneratorKind::Add), 1);

        let id = matrix_circuit(&Matrix::identity(2));
        assert_eq!(id.generator_count(), 0);
    }

    #[test]
    fn gaussian_circuit_shapes() {
        let mu = Matrix::from_ints(&[&[3]]);
        let l = Matrix::from_ints(&[&[1]]);
        let t = gaussian_circuit(&mu, &l).unwrap();
        assert_eq!(t.type_of(), (w(""), w("R")));
        assert_eq!(t.count_kind(GeneratorKind::StdNormal), 1);
        assert_eq!(t.count_kind(GeneratorKind::One), 1);
        assert!(gaussian_circuit(&Matrix::zeros(2, 1), &Matrix::zeros(3, 1)).is_err());
    }
}
