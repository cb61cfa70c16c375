//! Canonical certificates for mixtures and the circuits they emit.
//!
//! A mixture is disintegrated into a Boolean marginal kernel and, for every
//! pair (Boolean output, Boolean input), a convex cell of affine Gaussians.
//! The resulting [`NfTree`] is the certificate: two circuits are equivalent
//! exactly when their trees coincide, and [`emit_nf`] turns a tree back into
//! a circuit of the same denotation.

mod synth;

use std::cmp::Ordering;
use std::fmt;

use serde_json::{json, Value};

pub use synth::{cascade_biases, emit_nf, synth_bool, synth_cnf};

use crate::diagram::{Term, TypeWord};
use crate::exec::Execution;
use crate::linalg::{scalar_to_json, CovFactor, LinalgError, Matrix, Scalar};
use crate::semantics::{canonicalize_row, eval, BitVec, CGMixture, EvalOptions, GaussComponent, SemanticsError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NfError {
    #[error("boundaries differ: {left} vs {right}")]
    TypeMismatch { left: String, right: String },
    #[error("invalid certificate: {0}")]
    Invalid(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn same(a: &Scalar, b: &Scalar, tol: f64) -> bool {
    if a.is_rational() && b.is_rational() {
        a == b
    } else {
        a.approx_eq(b, tol)
    }
}

fn same_matrix(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    if a.is_exact() && b.is_exact() {
        a == b
    } else {
        a.approx_eq(b, tol)
    }
}

/// A stochastic kernel `B^p ⇸ B^q` as a `2^p × 2^q` table, both sides
/// indexed big-endian.
#[derive(Clone, Debug, PartialEq)]
pub struct BoolKernel {
    pub p: usize,
    pub q: usize,
    pub table: Vec<Vec<Scalar>>,
}

impl BoolKernel {
    pub fn from_fn(p: usize, q: usize, f: impl Fn(usize, usize) -> Scalar) -> Self {
        let table = (0..1usize << p).map(|a| (0..1usize << q).map(|b| f(a, b)).collect()).collect();
        BoolKernel { p, q, table }
    }

    pub fn identity(p: usize) -> Self {
        BoolKernel::from_fn(p, p, |a, b| if a == b { Scalar::one() } else { Scalar::zero() })
    }

    /// The Boolean part of a mixture; real outputs are marginalized out.
    pub fn of_mixture(m: &CGMixture) -> Self {
        let (p, _, q, _) = m.arity();
        let mut k = BoolKernel::from_fn(p, q, |_, _| Scalar::zero());
        for (a, row) in m.rows().iter().enumerate() {
            for c in row {
                let b = c.bool_out.to_index();
                k.table[a][b] = &k.table[a][b] + &c.weight;
            }
        }
        k
    }

    pub fn get(&self, a: usize, b: usize) -> &Scalar {
        &self.table[a][b]
    }

    pub fn is_exact(&self) -> bool {
        self.table.iter().flatten().all(Scalar::is_rational)
    }

    pub fn is_identity(&self) -> bool {
        self.p == self.q
            && self.table.iter().enumerate().all(|(a, row)| {
                row.iter().enumerate().all(|(b, v)| if a == b { v.is_one() } else { v.is_zero() })
            })
    }

    pub fn validate(&self, tol: f64) -> Result<(), NfError> {
        if self.table.len() != 1 << self.p || self.table.iter().any(|r| r.len() != 1 << self.q) {
            return Err(NfError::Invalid(format!("kernel table is not 2^{} x 2^{}", self.p, self.q)));
        }
        for (a, row) in self.table.iter().enumerate() {
            if row.iter().any(|v| v.signum_tol(tol) == Ordering::Less) {
                return Err(NfError::Invalid(format!("negative entry in kernel row {a}")));
            }
            let s: Scalar = row.iter().cloned().sum();
            if !same(&s, &Scalar::one(), tol) {
                return Err(NfError::Invalid(format!("kernel row {a} sums to {s}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.table.iter().map(|r| Value::Array(r.iter().map(scalar_to_json).collect())).collect())
    }
}

/// One affine Gaussian `x ↦ N(A·x + μ, Σ)` with its mixture weight.
#[derive(Clone, Debug)]
pub struct CnfComponent {
    pub weight: Scalar,
    pub a: Matrix,
    pub mu: Matrix,
    pub cov: CovFactor,
}

impl PartialEq for CnfComponent {
    /// Compares covariances by their gram matrices, never by factor.
    fn eq(&self, other: &Self) -> bool {
        self.weight == other.weight && self.a == other.a && self.mu == other.mu && self.cov.gram() == other.cov.gram()
    }
}

impl CnfComponent {
    fn to_gauss(&self) -> GaussComponent {
        GaussComponent::new(self.weight.clone(), BitVec::empty(), self.a.clone(), self.mu.clone(), self.cov.clone())
    }

    pub fn is_exact(&self) -> bool {
        self.weight.is_rational() && self.a.is_exact() && self.mu.is_exact() && self.cov.factor().is_exact()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "weight": scalar_to_json(&self.weight),
            "A": self.a.to_json(),
            "mu": self.mu.to_json(),
            "cov": self.cov.gram().to_json(),
        })
    }
}

/// A convex combination of distinct affine Gaussians `R^m ⇸ R^n`, sorted by
/// the canonical key `(A, μ, Σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CnfCell {
    pub components: Vec<CnfComponent>,
}

impl CnfCell {
    /// The designated cell for zero-mass branches: `x ↦ N(0, 0)`.
    pub fn zero(m: usize, n: usize) -> Self {
        CnfCell {
            components: vec![CnfComponent {
                weight: Scalar::one(),
                a: Matrix::zeros(n, m),
                mu: Matrix::zeros(n, 1),
                cov: CovFactor::zero(n),
            }],
        }
    }

    /// Normalizes the weights of `comps` to sum 1 and canonicalizes.
    fn from_components(comps: Vec<GaussComponent>, mass: &Scalar, tol: f64) -> Self {
        let scaled = comps
            .into_iter()
            .map(|c| GaussComponent::new(&c.weight / mass, BitVec::empty(), c.a, c.mu, c.cov))
            .collect();
        let components: Vec<CnfComponent> = canonicalize_row(scaled, tol)
            .into_iter()
            .map(|c| CnfComponent { weight: c.weight, a: c.a, mu: c.mu, cov: c.cov })
            .collect();
        debug_assert!(
            components.windows(2).all(|w| w[0] != w[1]),
            "canonical components must have distinct keys"
        );
        CnfCell { components }
    }

    pub fn is_zero_cell(&self) -> bool {
        matches!(self.components.as_slice(), [c] if c.weight.is_one() && c.a.is_zero() && c.mu.is_zero() && c.cov.gram().is_zero())
    }

    pub fn is_exact(&self) -> bool {
        self.components.iter().all(CnfComponent::is_exact)
    }

    pub fn validate(&self, m: usize, n: usize, tol: f64) -> Result<(), NfError> {
        if self.components.is_empty() {
            return Err(NfError::Invalid("empty cell".into()));
        }
        for c in &self.components {
            if c.a.shape() != (n, m) || c.mu.shape() != (n, 1) || c.cov.dim() != n {
                return Err(NfError::Invalid(format!("component shapes do not fit R^{m} -> R^{n}")));
            }
            if c.weight.signum_tol(tol) != Ordering::Greater {
                return Err(NfError::Invalid(format!("non-positive weight {}", c.weight)));
            }
        }
        let s: Scalar = self.components.iter().map(|c| c.weight.clone()).sum();
        if !same(&s, &Scalar::one(), tol) {
            return Err(NfError::Invalid(format!("cell weights sum to {s}")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.components.iter().map(CnfComponent::to_json).collect())
    }

    fn difference(&self, other: &CnfCell, tol: f64) -> Option<String> {
        if self.components.len() != other.components.len() {
            return Some(format!("{} vs {} components", self.components.len(), other.components.len()));
        }
        for (i, (x, y)) in self.components.iter().zip(&other.components).enumerate() {
            if !same(&x.weight, &y.weight, tol) {
                return Some(format!("component {i} weight: {} vs {}", x.weight, y.weight));
            }
            if !same_matrix(&x.a, &y.a, tol) {
                return Some(format!("component {i} A: {} vs {}", x.a.to_json(), y.a.to_json()));
            }
            if !same_matrix(&x.mu, &y.mu, tol) {
                return Some(format!("component {i} mu: {} vs {}", x.mu.to_json(), y.mu.to_json()));
            }
            let (gx, gy) = (x.cov.gram(), y.cov.gram());
            if !same_matrix(&gx, &gy, tol) {
                return Some(format!("component {i} cov: {} vs {}", gx.to_json(), gy.to_json()));
            }
        }
        None
    }
}

/// The normal-form certificate of a mixture `in_word ⇸ out_word`.
///
/// `leaves` is indexed by `a′·2^p + a`, i.e. Boolean output bits first.
#[derive(Clone, Debug, PartialEq)]
pub struct NfTree {
    pub in_word: TypeWord,
    pub out_word: TypeWord,
    pub bool_marginal: BoolKernel,
    pub leaves: Vec<CnfCell>,
}

impl NfTree {
    /// `(p, m, q, n)`.
    pub fn arity(&self) -> (usize, usize, usize, usize) {
        (self.in_word.bools(), self.in_word.reals(), self.out_word.bools(), self.out_word.reals())
    }

    pub fn leaf(&self, a_prime: usize, a: usize) -> &CnfCell {
        &self.leaves[(a_prime << self.bool_marginal.p) | a]
    }

    pub fn leaf_mut(&mut self, a_prime: usize, a: usize) -> &mut CnfCell {
        let p = self.bool_marginal.p;
        &mut self.leaves[(a_prime << p) | a]
    }

    pub fn is_exact(&self) -> bool {
        self.bool_marginal.is_exact() && self.leaves.iter().all(CnfCell::is_exact)
    }

    pub fn validate(&self, tol: f64) -> Result<(), NfError> {
        let (p, m, q, n) = self.arity();
        if self.bool_marginal.p != p || self.bool_marginal.q != q {
            return Err(NfError::Invalid("marginal arity does not match the boundary".into()));
        }
        self.bool_marginal.validate(tol)?;
        if self.leaves.len() != 1 << (p + q) {
            return Err(NfError::Invalid(format!("{} leaves for {} guard bits", self.leaves.len(), p + q)));
        }
        for b in 0..1usize << q {
            for a in 0..1usize << p {
                let cell = self.leaf(b, a);
                cell.validate(m, n, tol)?;
                if self.bool_marginal.get(a, b).signum_tol(tol) == Ordering::Equal && !cell.is_zero_cell() {
                    return Err(NfError::Invalid(format!("zero-mass leaf ({b}, {a}) is not the zero cell")));
                }
            }
        }
        Ok(())
    }

    /// First entry where the two certificates differ, or `None` when they
    /// coincide (exactly if both are rational, within `tol` otherwise).
    pub fn difference(&self, other: &NfTree, tol: f64) -> Option<String> {
        if self.in_word.sorted() != other.in_word.sorted() || self.out_word.sorted() != other.out_word.sorted() {
            return Some(format!(
                "boundary {} -> {} vs {} -> {}",
                self.in_word, self.out_word, other.in_word, other.out_word
            ));
        }
        let (p, _, q, _) = self.arity();
        for a in 0..1usize << p {
            for b in 0..1usize << q {
                let (x, y) = (self.bool_marginal.get(a, b), other.bool_marginal.get(a, b));
                if !same(x, y, tol) {
                    return Some(format!(
                        "boolMarginal[a={}][a'={}]: {x} vs {y}",
                        BitVec::from_index(a, p),
                        BitVec::from_index(b, q)
                    ));
                }
            }
        }
        for b in 0..1usize << q {
            for a in 0..1usize << p {
                if let Some(d) = self.leaf(b, a).difference(other.leaf(b, a), tol) {
                    return Some(format!(
                        "leaf (a'={}, a={}): {d}",
                        BitVec::from_index(b, q),
                        BitVec::from_index(a, p)
                    ));
                }
            }
        }
        None
    }

    pub fn to_json(&self) -> Value {
        let (p, _, q, _) = self.arity();
        let mut leaves = Vec::with_capacity(self.leaves.len());
        for b in 0..1usize << q {
            for a in 0..1usize << p {
                leaves.push(json!({
                    "aPrime": BitVec::from_index(b, q).to_string(),
                    "a": BitVec::from_index(a, p).to_string(),
                    "components": self.leaf(b, a).to_json(),
                }));
            }
        }
        json!({
            "inWord": self.in_word.letters(),
            "outWord": self.out_word.letters(),
            "boolMarginal": self.bool_marginal.to_json(),
            "leaves": leaves,
        })
    }
}

impl fmt::Display for NfTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, _, q, _) = self.arity();
        writeln!(f, "{} -> {}", self.in_word, self.out_word)?;
        for a in 0..1usize << p {
            for b in 0..1usize << q {
                let w = self.bool_marginal.get(a, b);
                if w.is_zero() {
                    continue;
                }
                let a_s = BitVec::from_index(a, p);
                let b_s = BitVec::from_index(b, q);
                write!(f, "  [{a_s}] -> [{b_s}] with {w}:")?;
                for c in &self.leaf(b, a).components {
                    write!(f, " {}*N({}, {})", c.weight, c.mu.to_json(), c.cov.gram().to_json())?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// Splits every row of `m` into Boolean-output mass and normalized cells.
pub fn disintegrate(m: &CGMixture, tol: f64) -> NfTree {
    let m = m.canonicalize(tol);
    let (p, mm, q, n) = m.arity();
    let marginal = BoolKernel::of_mixture(&m);
    let leaves = Execution::default().map_indexed(1 << (p + q), |idx| {
        let (b, a) = (idx >> p, idx & ((1 << p) - 1));
        let mass = marginal.get(a, b);
        if mass.signum_tol(tol) == Ordering::Equal {
            return CnfCell::zero(mm, n);
        }
        let comps: Vec<GaussComponent> = m.rows()[a].iter().filter(|c| c.bool_out.to_index() == b).cloned().collect();
        CnfCell::from_components(comps, mass, tol)
    });
    NfTree { in_word: m.in_word().clone(), out_word: m.out_word().clone(), bool_marginal: marginal, leaves }
}

/// The denotation of a certificate, computed directly from its entries.
pub fn nf_semantics(nf: &NfTree) -> Result<CGMixture, NfError> {
    let (p, _, q, _) = nf.arity();
    let rows = (0..1usize << p)
        .map(|a| {
            let mut row = Vec::new();
            for b in 0..1usize << q {
                let mass = nf.bool_marginal.get(a, b);
                if mass.is_zero() {
                    continue;
                }
                for c in &nf.leaf(b, a).components {
                    let mut g = c.to_gauss();
                    g.weight = mass * &g.weight;
                    g.bool_out = BitVec::from_index(b, q);
                    row.push(g);
                }
            }
            row
        })
        .collect();
    Ok(CGMixture::new(nf.in_word.clone(), nf.out_word.clone(), rows)?)
}

#[derive(Clone, Debug)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Set when the boundary words agree only up to reordering of wires.
    pub reordered: bool,
    pub left: NfTree,
    pub right: NfTree,
    pub difference: Option<String>,
}

/// Decides `⟦c1⟧ = ⟦c2⟧` by comparing normal-form certificates.
///
/// The boundaries must contain the same numbers of B and R wires on each
/// side. Words that differ only in interleaving are compared in the B-first
/// layout, and `reordered` is set.
pub fn decide_equiv(c1: &Term, c2: &Term, opts: &EvalOptions) -> Result<Equivalence, NfError> {
    let same_counts = |u: &TypeWord, v: &TypeWord| u.sorted() == v.sorted();
    if !same_counts(c1.dom(), c2.dom()) || !same_counts(c1.cod(), c2.cod()) {
        return Err(NfError::TypeMismatch {
            left: format!("{} -> {}", c1.dom(), c1.cod()),
            right: format!("{} -> {}", c2.dom(), c2.cod()),
        });
    }
    let reordered = c1.type_of() != c2.type_of();
    let left = disintegrate(&eval(c1, opts)?, opts.tolerance);
    let right = disintegrate(&eval(c2, opts)?, opts.tolerance);
    let difference = left.difference(&right, opts.tolerance);
    Ok(Equivalence { equivalent: difference.is_none(), reordered, left, right, difference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn opts() -> EvalOptions {
        EvalOptions::default()
    }

    fn nf(src: &str) -> NfTree {
        disintegrate(&eval(&parse(src).unwrap(), &opts()).unwrap(), opts().tolerance)
    }

    #[test]
    fn flip_marginal() {
        let t = nf("flip(3/10)");
        assert_eq!(t.bool_marginal.table, vec![vec![Scalar::ratio(7, 10), Scalar::ratio(3, 10)]]);
        assert_eq!(t.leaves.len(), 2);
        assert!(t.leaves.iter().all(|c| c.components.len() == 1 && c.components[0].a.shape() == (0, 0)));
        t.validate(0.0).unwrap();
    }

    #[test]
    fn no_boolean_outputs() {
        let t = nf("copyR ; add * stdnormal ; add");
        assert_eq!(t.bool_marginal.table, vec![vec![Scalar::one()]]);
        assert_eq!(t.leaves.len(), 1);
        let c = &t.leaves[0].components[0];
        assert_eq!(c.a, Matrix::from_ints(&[&[2]]));
        assert_eq!(c.cov.gram(), Matrix::from_ints(&[&[1]]));
    }

    #[test]
    fn zero_mass_leaf_is_zero_cell() {
        let t = nf("stdnormal * flip(1)");
        assert!(t.leaf(0, 0).is_zero_cell());
        assert!(!t.leaf(1, 0).is_zero_cell());
        t.validate(0.0).unwrap();
    }

    #[test]
    fn worked_mixture_certificate() {
        let src = "flip(3/10) * stdnormal * one * stdnormal ; id(B) * (id(R) * scal(3) ; add) * scal(2) ; ite";
        let t = nf(src);
        let cell = &t.leaves[0];
        assert_eq!(cell.components.len(), 2);
        // Sorted by mean: N(0,4) before N(3,1).
        assert_eq!(cell.components[0].weight, Scalar::ratio(7, 10));
        assert_eq!(cell.components[0].cov.gram(), Matrix::from_ints(&[&[4]]));
        assert_eq!(cell.components[1].mu, Matrix::from_ints(&[&[3]]));
    }

    #[test]
    fn distinguishes_variances() {
        let e = decide_equiv(
            &parse("stdnormal * one ; id(R) * scal(3) ; add").unwrap(),
            &parse("stdnormal * stdnormal * one ; add * scal(3) ; add").unwrap(),
            &opts(),
        )
        .unwrap();
        assert!(!e.equivalent);
        assert!(e.difference.unwrap().contains("cov"));
    }

    #[test]
    fn equivalent_encodings() {
        let e = decide_equiv(&parse("copyB ; and").unwrap(), &parse("id(B)").unwrap(), &opts()).unwrap();
        assert!(e.equivalent);
        assert_eq!(e.left, e.right);
        let err = decide_equiv(&parse("id(B)").unwrap(), &parse("id(R)").unwrap(), &opts()).unwrap_err();
        assert!(matches!(err, NfError::TypeMismatch { .. }));
        let e = decide_equiv(&parse("id(BR)").unwrap(), &parse("swap(R,B)").unwrap(), &opts()).unwrap();
        assert!(e.equivalent && e.reordered);
    }

    #[test]
    fn certificate_semantics_matches() {
        let m = eval(&parse("flip(1/4) * id(R) * stdnormal ; copyB * id(RR) ; id(B) * ite").unwrap(), &opts()).unwrap();
        let t = disintegrate(&m, 0.0);
        assert!(crate::semantics::equal(&nf_semantics(&t).unwrap(), &m, 0.0).unwrap());
    }
}
