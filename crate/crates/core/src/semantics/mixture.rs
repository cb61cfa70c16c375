use std::cmp::Ordering;
use std::fmt;

use serde_json::{json, Value};

use super::SemanticsError;
use crate::diagram::{Colour, TypeWord};
use crate::linalg::{scalar_from_json, scalar_to_json, CovFactor, Matrix, Scalar};

/// Boolean assignment, first bit = leftmost B wire. Ordered lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BitVec(pub Vec<bool>);

impl BitVec {
    pub fn new(bits: Vec<bool>) -> Self {
        BitVec(bits)
    }

    pub fn empty() -> Self {
        BitVec(Vec::new())
    }

    /// Bits of `index` in big-endian order, `len` wide.
    pub fn from_index(index: usize, len: usize) -> Self {
        BitVec((0..len).map(|i| (index >> (len - 1 - i)) & 1 == 1).collect())
    }

    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(BitVec)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BitVec(v)
    }

    pub fn split_at(&self, k: usize) -> (BitVec, BitVec) {
        (BitVec(self.0[..k].to_vec()), BitVec(self.0[k..].to_vec()))
    }

    /// All assignments of length `len` in ascending order.
    pub fn all(len: usize) -> impl Iterator<Item = BitVec> {
        (0..1usize << len).map(move |i| BitVec::from_index(i, len))
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One weighted affine-Gaussian branch `x ↦ N(A·x + μ, L·Lᵀ)` tagged with
/// its Boolean output.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussComponent {
    pub weight: Scalar,
    pub bool_out: BitVec,
    pub a: Matrix,
    pub mu: Matrix,
    pub cov: CovFactor,
}

impl GaussComponent {
    pub fn new(weight: Scalar, bool_out: BitVec, a: Matrix, mu: Matrix, cov: CovFactor) -> Self {
        GaussComponent { weight, bool_out, a, mu, cov }
    }

    /// Weight-1 Dirac `x ↦ A·x + μ`.
    pub fn dirac(bool_out: BitVec, a: Matrix, mu: Matrix) -> Self {
        let n = a.rows();
        GaussComponent { weight: Scalar::one(), bool_out, a, mu, cov: CovFactor::zero(n) }
    }

    /// This branch followed by `next`; the weight and parameters compose by
    /// the affine/covariance update laws.
    pub fn then(&self, next: &GaussComponent) -> GaussComponent {
        let a = next.a.mat_mul(&self.a).expect("conformable affine parts");
        let mu = next.a.mat_mul(&self.mu).and_then(|m| m.mat_add(&next.mu)).expect("conformable offsets");
        let cov = CovFactor::compose(&next.a, &self.cov, &next.cov).expect("conformable covariances");
        GaussComponent { weight: &self.weight * &next.weight, bool_out: next.bool_out.clone(), a, mu, cov }
    }

    /// Independent pairing of two branches.
    pub fn beside(&self, other: &GaussComponent) -> GaussComponent {
        GaussComponent {
            weight: &self.weight * &other.weight,
            bool_out: self.bool_out.concat(&other.bool_out),
            a: self.a.block_diag(&other.a),
            mu: self.mu.vstack(&other.mu).expect("offsets are columns"),
            cov: self.cov.block_diag(&other.cov),
        }
    }

    fn key_cmp(&self, other: &GaussComponent, grams: (&Matrix, &Matrix)) -> Ordering {
        self.bool_out
            .cmp(&other.bool_out)
            .then_with(|| self.a.canonical_cmp(&other.a))
            .then_with(|| self.mu.canonical_cmp(&other.mu))
            .then_with(|| grams.0.canonical_cmp(grams.1))
    }

    fn same_key(&self, other: &GaussComponent, grams: (&Matrix, &Matrix), tol: f64) -> bool {
        self.bool_out == other.bool_out
            && self.a.approx_eq(&other.a, tol)
            && self.mu.approx_eq(&other.mu, tol)
            && grams.0.approx_eq(grams.1, tol)
    }

    pub fn is_exact(&self) -> bool {
        self.weight.is_rational() && self.a.is_exact() && self.mu.is_exact() && self.cov.factor().is_exact()
    }

    pub fn to_float(&self) -> GaussComponent {
        GaussComponent {
            weight: self.weight.to_float(),
            bool_out: self.bool_out.clone(),
            a: self.a.to_float(),
            mu: self.mu.to_float(),
            cov: self.cov.to_float(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "weight": scalar_to_json(&self.weight),
            "boolOut": self.bool_out.to_string(),
            "A": self.a.to_json(),
            "mu": self.mu.to_json(),
            "cov": self.cov.gram().to_json(),
        })
    }
}

/// Drops zero weights, merges components with equal `(boolOut, A, μ, Σ)` and
/// sorts by that key. Floats merge within `tol`; rationals merge exactly.
pub fn canonicalize_row(row: Vec<GaussComponent>, tol: f64) -> Vec<GaussComponent> {
    let mut merged: Vec<(GaussComponent, Matrix)> = Vec::with_capacity(row.len());
    for mut c in row {
        if c.weight.signum_tol(tol) == Ordering::Equal {
            continue;
        }
        c.cov = c.cov.compress();
        let g = c.cov.gram();
        match merged.iter_mut().find(|(m, mg)| m.same_key(&c, (mg, &g), tol)) {
            Some((m, _)) => m.weight = &m.weight + &c.weight,
            None => merged.push((c, g)),
        }
    }
    merged.sort_by(|(a, ga), (b, gb)| a.key_cmp(b, (ga, gb)));
    merged.into_iter().map(|(c, _)| c).collect()
}

/// A conditional Gaussian mixture `B^p·R^m ⇸ B^q·R^n`.
///
/// Rows are indexed by the Boolean input in big-endian order. Whatever the
/// interleaving of the boundary words, components act on the B-first layout:
/// Boolean values in the order of the B wires, reals in the order of the R
/// wires. [`CGMixture::layout`] gives the permutation.
#[derive(Clone, Debug, PartialEq)]
pub struct CGMixture {
    in_word: TypeWord,
    out_word: TypeWord,
    rows: Vec<Vec<GaussComponent>>,
}

impl CGMixture {
    pub fn new(in_word: TypeWord, out_word: TypeWord, rows: Vec<Vec<GaussComponent>>) -> Result<Self, SemanticsError> {
        let (p, m, q, n) = (in_word.bools(), in_word.reals(), out_word.bools(), out_word.reals());
        if rows.len() != 1usize << p {
            return Err(SemanticsError::DimensionMismatch(format!(
                "{} rows for {p} Boolean inputs",
                rows.len()
            )));
        }
        for c in rows.iter().flatten() {
            let ok = c.bool_out.len() == q
                && c.a.shape() == (n, m)
                && c.mu.shape() == (n, 1)
                && c.cov.dim() == n;
            if !ok {
                return Err(SemanticsError::DimensionMismatch(format!(
                    "component with boolOut {} and A {:?} in a kernel {in_word} -> {out_word}",
                    c.bool_out,
                    c.a.shape()
                )));
            }
        }
        Ok(CGMixture { in_word, out_word, rows })
    }

    /// Purely continuous map `x ↦ N(A·x + μ, L·Lᵀ)`.
    pub fn gaussian_map(a: Matrix, mu: Matrix, cov: CovFactor) -> Result<Self, SemanticsError> {
        let (n, m) = a.shape();
        let c = GaussComponent::new(Scalar::one(), BitVec::empty(), a, mu, cov);
        CGMixture::new(TypeWord::repeat(Colour::R, m), TypeWord::repeat(Colour::R, n), vec![vec![c]])
    }

    pub(crate) fn from_rows_unchecked(in_word: TypeWord, out_word: TypeWord, rows: Vec<Vec<GaussComponent>>) -> Self {
        CGMixture { in_word, out_word, rows }
    }

    pub fn in_word(&self) -> &TypeWord {
        &self.in_word
    }

    pub fn out_word(&self) -> &TypeWord {
        &self.out_word
    }

    /// `(p, m, q, n)`.
    pub fn arity(&self) -> (usize, usize, usize, usize) {
        (self.in_word.bools(), self.in_word.reals(), self.out_word.bools(), self.out_word.reals())
    }

    pub fn rows(&self) -> &[Vec<GaussComponent>] {
        &self.rows
    }

    pub fn row(&self, input: &BitVec) -> &[GaussComponent] {
        &self.rows[input.to_index()]
    }

    /// For each position of the B-first layout of `word`, the wire index it
    /// came from.
    pub fn layout(word: &TypeWord) -> Vec<usize> {
        let cs = word.colours();
        let bools = (0..cs.len()).filter(|&i| cs[i] == Colour::B);
        let reals = (0..cs.len()).filter(|&i| cs[i] == Colour::R);
        bools.chain(reals).collect()
    }

    pub fn canonicalize(&self, tol: f64) -> CGMixture {
        let rows = self.rows.iter().map(|r| canonicalize_row(r.clone(), tol)).collect();
        CGMixture { in_word: self.in_word.clone(), out_word: self.out_word.clone(), rows }
    }

    pub fn is_exact(&self) -> bool {
        self.rows.iter().flatten().all(GaussComponent::is_exact)
    }

    pub fn to_float(&self) -> CGMixture {
        let rows = self.rows.iter().map(|r| r.iter().map(GaussComponent::to_float).collect()).collect();
        CGMixture { in_word: self.in_word.clone(), out_word: self.out_word.clone(), rows }
    }

    /// Whether every row's weights sum to one (exactly for rationals).
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| {
            let total: Scalar = r.iter().map(|c| c.weight.clone()).sum();
            total.approx_eq(&Scalar::one(), tol)
        })
    }

    pub fn to_json(&self) -> Value {
        let p = self.in_word.bools();
        let table: Vec<Value> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                json!({
                    "input": BitVec::from_index(i, p).to_string(),
                    "components": r.iter().map(GaussComponent::to_json).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "inWord": self.in_word.letters(),
            "outWord": self.out_word.letters(),
            "table": table,
        })
    }

    /// Reads the JSON form back. Covariances arrive as gram matrices and are
    /// refactored with [`CovFactor::from_gram`], which stays exact.
    pub fn from_json(v: &Value) -> Result<CGMixture, SemanticsError> {
        let bad = |what: &str| SemanticsError::Json(format!("missing or malformed {what}"));
        let word = |k: &str| {
            v.get(k).and_then(Value::as_str).and_then(TypeWord::parse).ok_or_else(|| bad(k))
        };
        let (in_word, out_word) = (word("inWord")?, word("outWord")?);
        let table = v.get("table").and_then(Value::as_array).ok_or_else(|| bad("table"))?;
        let mut rows = vec![Vec::new(); 1usize << in_word.bools()];
        for entry in table {
            let input = entry.get("input").and_then(Value::as_str).and_then(BitVec::parse).ok_or_else(|| bad("input"))?;
            if input.len() != in_word.bools() {
                return Err(bad("input"));
            }
            let comps = entry.get("components").and_then(Value::as_array).ok_or_else(|| bad("components"))?;
            for c in comps {
                let weight = c.get("weight").and_then(scalar_from_json).ok_or_else(|| bad("weight"))?;
                let bool_out =
                    c.get("boolOut").and_then(Value::as_str).and_then(BitVec::parse).ok_or_else(|| bad("boolOut"))?;
                let mat = |k: &str| {
                    c.get(k).ok_or_else(|| bad(k)).and_then(|m| Matrix::from_json(m).map_err(|e| SemanticsError::Json(e.to_string())))
                };
                let (a, mu, gram) = (mat("A")?, mat("mu")?, mat("cov")?);
                let cov = CovFactor::from_gram(&gram, 1e-9).map_err(|e| SemanticsError::Json(e.to_string()))?;
                rows[input.to_index()].push(GaussComponent::new(weight, bool_out, a, mu, cov));
            }
        }
        CGMixture::new(in_word, out_word, rows)
    }
}

fn row_product(f: &[GaussComponent], g: impl Fn(&BitVec) -> Vec<GaussComponent>) -> Vec<GaussComponent> {
    let mut out = Vec::new();
    for ci in f {
        for cj in g(&ci.bool_out) {
            out.push(ci.then(&cj));
        }
    }
    out
}

pub(crate) fn compose_rows(
    f: &[GaussComponent],
    g: impl Fn(&BitVec) -> Vec<GaussComponent>,
    tol: f64,
) -> Vec<GaussComponent> {
    canonicalize_row(row_product(f, g), tol)
}

pub(crate) fn tensor_rows(f: &[GaussComponent], g: &[GaussComponent], tol: f64) -> Vec<GaussComponent> {
    let mut out = Vec::with_capacity(f.len() * g.len());
    for ci in f {
        for cj in g {
            out.push(ci.beside(cj));
        }
    }
    canonicalize_row(out, tol)
}

/// Sequential composition `f ; g`.
pub fn compose(f: &CGMixture, g: &CGMixture, tol: f64) -> Result<CGMixture, SemanticsError> {
    if f.out_word != g.in_word {
        return Err(SemanticsError::TypeMismatch { left: f.out_word.clone(), right: g.in_word.clone() });
    }
    let rows = f.rows.iter().map(|r| compose_rows(r, |b| g.row(b).to_vec(), tol)).collect();
    Ok(CGMixture::from_rows_unchecked(f.in_word.clone(), g.out_word.clone(), rows))
}

/// Monoidal product `f ⊗ g`.
pub fn tensor(f: &CGMixture, g: &CGMixture, tol: f64) -> CGMixture {
    let mut rows = Vec::with_capacity(f.rows.len() * g.rows.len());
    for rf in &f.rows {
        for rg in &g.rows {
            rows.push(tensor_rows(rf, rg, tol));
        }
    }
    CGMixture::from_rows_unchecked(f.in_word.concat(&g.in_word), f.out_word.concat(&g.out_word), rows)
}

/// Semantic equality of two mixtures with the same boundary: exact when
/// both are rational, within `tol` otherwise.
pub fn equal(m1: &CGMixture, m2: &CGMixture, tol: f64) -> Result<bool, SemanticsError> {
    let tol = if m1.is_exact() && m2.is_exact() { 0.0 } else { tol };
    Ok(deviation(m1, m2, tol)?.is_some_and(|d| d <= tol))
}

/// Largest absolute parameter difference between matched components, or
/// `None` when the component structure differs (count or Boolean tags).
/// Exact rational equality yields `Some(0.0)`.
pub fn deviation(m1: &CGMixture, m2: &CGMixture, tol: f64) -> Result<Option<f64>, SemanticsError> {
    if m1.in_word != m2.in_word || m1.out_word != m2.out_word {
        return Err(SemanticsError::TypeMismatch {
            left: m1.in_word.concat(&m1.out_word),
            right: m2.in_word.concat(&m2.out_word),
        });
    }
    let (c1, c2) = (m1.canonicalize(tol), m2.canonicalize(tol));
    let mut worst: f64 = 0.0;
    for (r1, r2) in c1.rows.iter().zip(&c2.rows) {
        if r1.len() != r2.len() {
            return Ok(None);
        }
        let g2: Vec<Matrix> = r2.iter().map(|c| c.cov.gram()).collect();
        let mut used = vec![false; r2.len()];
        for a in r1 {
            let ga = a.cov.gram();
            let mut best: Option<(usize, f64)> = None;
            for (j, b) in r2.iter().enumerate() {
                if used[j] || a.bool_out != b.bool_out || a.a.shape() != b.a.shape() {
                    continue;
                }
                let d = component_distance(a, b, &ga, &g2[j]);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            match best {
                Some((j, d)) => {
                    used[j] = true;
                    worst = worst.max(d);
                }
                None => return Ok(None),
            }
        }
    }
    Ok(Some(worst))
}

fn component_distance(a: &GaussComponent, b: &GaussComponent, ga: &Matrix, gb: &Matrix) -> f64 {
    let both_exact = a.is_exact() && b.is_exact();
    if both_exact && a.weight == b.weight && a.a == b.a && a.mu == b.mu && ga == gb {
        return 0.0;
    }
    let d = (a.weight.to_f64() - b.weight.to_f64())
        .abs()
        .max(a.a.max_abs_diff(&b.a))
        .max(a.mu.max_abs_diff(&b.mu))
        .max(ga.max_abs_diff(gb));
    // Distinct rationals never count as equal, however close.
    if both_exact { d.max(f64::MIN_POSITIVE) } else { d }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(w: Scalar, mu: i64, var_root: i64) -> GaussComponent {
        GaussComponent::new(
            w,
            BitVec::empty(),
            Matrix::zeros(1, 0),
            Matrix::from_ints(&[&[mu]]),
            CovFactor::new(Matrix::from_ints(&[&[var_root]])),
        )
    }

    #[test]
    fn bitvec_indexing() {
        let b = BitVec::parse("011").unwrap();
        assert_eq!(b.to_index(), 3);
        assert_eq!(BitVec::from_index(3, 3), b);
        assert_eq!(BitVec::all(2).map(|b| b.to_string()).collect::<Vec<_>>(), ["00", "01", "10", "11"]);
    }

    #[test]
    fn merge_duplicates() {
        let row = vec![gauss(Scalar::ratio(1, 2), 0, 1), gauss(Scalar::ratio(1, 2), 0, -1)];
        let c = canonicalize_row(row, 1e-9);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].weight, Scalar::one());
    }

    #[test]
    fn sort_places_smaller_mean_first() {
        let row = vec![gauss(Scalar::ratio(3, 10), 3, 1), gauss(Scalar::ratio(7, 10), 0, 2)];
        let c = canonicalize_row(row, 1e-9);
        assert_eq!(c[0].weight, Scalar::ratio(7, 10));
        assert_eq!(canonicalize_row(c.clone(), 1e-9), c);
    }

    #[test]
    fn zero_weights_dropped() {
        let row = vec![gauss(Scalar::zero(), 1, 1), gauss(Scalar::one(), 0, 1)];
        assert_eq!(canonicalize_row(row, 1e-9).len(), 1);
    }

    #[test]
    fn composition_closed_form() {
        // x ↦ N(2x+1, 1) then y ↦ N(3y, 4) is x ↦ N(6x+3, 13).
        let f = CGMixture::gaussian_map(
            Matrix::from_ints(&[&[2]]),
            Matrix::from_ints(&[&[1]]),
            CovFactor::new(Matrix::from_ints(&[&[1]])),
        )
        .unwrap();
        let g = CGMixture::gaussian_map(
            Matrix::from_ints(&[&[3]]),
            Matrix::from_ints(&[&[0]]),
            CovFactor::new(Matrix::from_ints(&[&[2]])),
        )
        .unwrap();
        let h = compose(&f, &g, 1e-9).unwrap();
        let c = &h.rows()[0][0];
        assert_eq!(c.a, Matrix::from_ints(&[&[6]]));
        assert_eq!(c.mu, Matrix::from_ints(&[&[3]]));
        assert_eq!(c.cov.gram(), Matrix::from_ints(&[&[13]]));
    }

    #[test]
    fn float_tolerance() {
        let one = |v: f64| {
            CGMixture::gaussian_map(
                Matrix::zeros(1, 0),
                Matrix::from_ints(&[&[0]]).to_float(),
                CovFactor::new(Matrix::from_vec(1, 1, vec![Scalar::float(v)]).unwrap()),
            )
            .unwrap()
        };
        assert!(!equal(&one(1.0), &one(1.0001f64.sqrt()), 1e-9).unwrap());
        assert!(equal(&one(1.0), &one(1.0 + 1e-13), 1e-9).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let m = CGMixture::new(
            TypeWord::empty(),
            TypeWord::parse("R").unwrap(),
            vec![vec![gauss(Scalar::ratio(3, 10), 3, 1), gauss(Scalar::ratio(7, 10), 0, 2)]],
        )
        .unwrap()
        .canonicalize(1e-9);
        let back = CGMixture::from_json(&m.to_json()).unwrap();
        assert!(equal(&m, &back, 1e-9).unwrap());
        assert!(back.is_exact());
    }
}
