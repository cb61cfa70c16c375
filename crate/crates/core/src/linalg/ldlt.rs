use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};

use super::{LinalgError, Matrix, Scalar};

/// `Σ = L·D·Lᵀ` with `L` unit lower-triangular and `D` nonnegative diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Ldlt {
    pub lower: Matrix,
    pub diag: Vec<Scalar>,
}

impl Ldlt {
    pub fn reconstruct(&self) -> Matrix {
        let n = self.diag.len();
        let mut ld = self.lower.clone();
        for i in 0..n {
            for j in 0..n {
                let v = self.lower.get(i, j) * &self.diag[j];
                ld.set(i, j, v);
            }
        }
        ld.mat_mul(&self.lower.transpose()).expect("square factors")
    }

    /// A factor `F` with `F·Fᵀ = L·D·Lᵀ`, one column group per positive
    /// pivot. Exact pivots are split into rational squares, so no square
    /// root is taken; float pivots contribute `√d·L[:, j]`.
    pub fn factor(&self) -> Matrix {
        let n = self.diag.len();
        let mut cols: Vec<Vec<Scalar>> = Vec::new();
        for (j, d) in self.diag.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            let scales: Vec<Scalar> = match d.as_rational() {
                Some(r) => rational_sum_of_squares(r).into_iter().map(Scalar::Rat).collect(),
                None => vec![d.sqrt_float()],
            };
            for s in scales {
                cols.push((0..n).map(|i| self.lower.get(i, j) * &s).collect());
            }
        }
        let mut m = Matrix::zeros(n, cols.len());
        for (j, col) in cols.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }
}

/// Square-root-free Cholesky in natural pivot order.
///
/// A zero pivot leaves the unit column `e_j` in `L` and `d_j = 0`; any
/// nonzero entry below a zero pivot means the input is not PSD. Under the
/// rational backend everything is exact and `tol` only applies to floats.
pub fn ldlt(sigma: &Matrix, tol: f64) -> Result<Ldlt, LinalgError> {
    let n = sigma.rows();
    if sigma.cols() != n {
        return Err(LinalgError::DimensionMismatch { op: "ldlt", left: sigma.shape(), right: sigma.shape() });
    }
    if !sigma.is_symmetric(tol) {
        return Err(LinalgError::NotPsd { reason: "matrix is not symmetric".into() });
    }
    let mut lower = Matrix::identity(n);
    let mut diag = vec![Scalar::zero(); n];
    for j in 0..n {
        let mut d = sigma.get(j, j).clone();
        for k in 0..j {
            let l = lower.get(j, k);
            d = d - &(l * l) * &diag[k];
        }
        match d.signum_tol(tol) {
            std::cmp::Ordering::Less => {
                return Err(LinalgError::NotPsd { reason: format!("negative pivot {} at index {j}", d) });
            }
            std::cmp::Ordering::Equal => {
                diag[j] = if d.is_rational() { Scalar::zero() } else { Scalar::Float(0.0) };
            }
            std::cmp::Ordering::Greater => diag[j] = d,
        }
        for i in j + 1..n {
            let mut v = sigma.get(i, j).clone();
            for k in 0..j {
                v = v - &(lower.get(i, k) * lower.get(j, k)) * &diag[k];
            }
            if diag[j].is_zero() {
                if v.signum_tol(tol) != std::cmp::Ordering::Equal {
                    return Err(LinalgError::NotPsd {
                        reason: format!("nonzero entry {v} below zero pivot at ({i}, {j})"),
                    });
                }
            } else {
                lower.set(i, j, v / &diag[j]);
            }
        }
    }
    Ok(Ldlt { lower, diag })
}

/// Writes a nonnegative rational as a sum of at most four rational squares,
/// returning the roots. Every nonnegative rational admits such a
/// decomposition, so noise for an exact pivot can be injected without
/// irrational scale factors.
pub fn rational_sum_of_squares(d: &BigRational) -> Vec<BigRational> {
    assert!(!d.is_negative(), "sum of squares of a negative number");
    if d.is_zero() {
        return Vec::new();
    }
    if let (Some(a), Some(b)) = (exact_sqrt(d.numer()), exact_sqrt(d.denom())) {
        return vec![BigRational::new(a, b)];
    }
    // d = a/b = (a·b)/b²; decompose the integer a·b.
    let den = d.denom().clone();
    let target = d.numer() * &den;
    integer_sum_of_squares(&target)
        .into_iter()
        .map(|s| BigRational::new(s, den.clone()))
        .collect()
}

fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

/// Deterministic decomposition of `n ≥ 1` into at most four positive squares.
pub fn integer_sum_of_squares(n: &BigInt) -> Vec<BigInt> {
    if let Some(r) = exact_sqrt(n) {
        return vec![r];
    }
    // The two-square search is linear in sqrt(n); only worth it for small n.
    if n.bits() <= 40 {
        if let Some((a, b)) = two_squares(n) {
            return vec![a, b];
        }
    }
    // Greedy first root; the remainder is small and needs at most three squares
    // unless it has the form 4^a(8b+7), in which case step down.
    let mut first = n.sqrt();
    loop {
        let rest = n - &first * &first;
        if let Some(mut tail) = three_squares(&rest) {
            let mut out = vec![first.clone()];
            out.append(&mut tail);
            out.retain(|s| !s.is_zero());
            return out;
        }
        first -= BigInt::one();
    }
}

fn three_squares(n: &BigInt) -> Option<Vec<BigInt>> {
    if n.is_zero() {
        return Some(Vec::new());
    }
    if n.is_negative() || is_excluded_from_three(n) {
        return None;
    }
    if let Some(r) = exact_sqrt(n) {
        return Some(vec![r]);
    }
    let mut a = n.sqrt();
    while !a.is_negative() {
        let rest = n - &a * &a;
        if let Some((b, c)) = two_squares(&rest) {
            let mut v = vec![a.clone(), b, c];
            v.retain(|s| !s.is_zero());
            return Some(v);
        }
        a -= BigInt::one();
    }
    None
}

fn is_excluded_from_three(n: &BigInt) -> bool {
    let four = BigInt::from(4);
    let mut m = n.clone();
    while !m.is_zero() && m.is_multiple_of(&four) {
        m /= &four;
    }
    m.mod_floor(&BigInt::from(8)) == BigInt::from(7)
}

fn two_squares(n: &BigInt) -> Option<(BigInt, BigInt)> {
    if n.is_negative() {
        return None;
    }
    if n.is_zero() {
        return Some((BigInt::zero(), BigInt::zero()));
    }
    if !two_square_representable(n) {
        return None;
    }
    let mut a = n.sqrt();
    loop {
        let rest = n - &a * &a;
        if &rest > &(&a * &a) {
            return None;
        }
        if let Some(b) = exact_sqrt(&rest) {
            return Some((a, b));
        }
        if a.is_zero() {
            return None;
        }
        a -= BigInt::one();
    }
}

/// Cheap necessary test: no prime `≡ 3 (mod 4)` dividing to an odd power,
/// checked for small primes only. A `true` answer may still fail the search.
fn two_square_representable(n: &BigInt) -> bool {
    let mut m = n.clone();
    for p in [3u32, 7, 11, 19, 23, 31, 43, 47, 59, 67, 71, 79, 83] {
        let p = BigInt::from(p);
        let mut count = 0;
        while m.is_multiple_of(&p) {
            m /= &p;
            count += 1;
        }
        if count % 2 == 1 {
            return false;
        }
    }
    !m.mod_floor(&BigInt::from(4)).eq(&BigInt::from(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn scalar_pivot() {
        let f = ldlt(&Matrix::from_ints(&[&[4]]), 1e-9).unwrap();
        assert_eq!(f.lower, Matrix::identity(1));
        assert_eq!(f.diag, vec![Scalar::int(4)]);
    }

    #[test]
    fn rank_one() {
        let f = ldlt(&Matrix::from_ints(&[&[1, 1], &[1, 1]]), 1e-9).unwrap();
        assert_eq!(f.lower, Matrix::from_ints(&[&[1, 0], &[1, 1]]));
        assert_eq!(f.diag, vec![Scalar::int(1), Scalar::int(0)]);
    }

    #[test]
    fn indefinite_is_rejected() {
        let err = ldlt(&Matrix::from_ints(&[&[0, 1], &[1, 0]]), 1e-9).unwrap_err();
        assert!(matches!(err, LinalgError::NotPsd { .. }));
        assert!(ldlt(&Matrix::from_ints(&[&[1, 2], &[3, 1]]), 1e-9).is_err());
        assert!(ldlt(&Matrix::from_ints(&[&[-1]]), 1e-9).is_err());
    }

    #[test]
    fn zero_pivot_keeps_unit_column() {
        let s = Matrix::from_ints(&[&[0, 0, 0], &[0, 2, 1], &[0, 1, 1]]);
        let f = ldlt(&s, 1e-9).unwrap();
        assert_eq!(f.diag[0], Scalar::zero());
        assert_eq!(f.lower.col(0), vec![Scalar::one(), Scalar::zero(), Scalar::zero()]);
        assert_eq!(f.reconstruct(), s);
    }

    #[test]
    fn squares_reconstruct() {
        for (n, d) in [(1, 1), (2, 1), (3, 1), (7, 1), (2, 3), (13, 12), (4, 9), (1, 5), (999_983, 1), (15, 7)] {
            let x = r(n, d);
            let roots = rational_sum_of_squares(&x);
            assert!(roots.len() <= 4, "{n}/{d} -> {roots:?}");
            let total: BigRational = roots.iter().map(|s| s * s).sum();
            assert_eq!(total, x);
        }
        assert_eq!(rational_sum_of_squares(&r(4, 9)), vec![r(2, 3)]);
        assert!(rational_sum_of_squares(&r(0, 1)).is_empty());
    }

    #[test]
    fn factor_reproduces_gram() {
        let s = Matrix::from_ratios(&[&[(2, 1), (1, 3)], &[(1, 3), (5, 7)]]);
        let f = ldlt(&s, 1e-9).unwrap().factor();
        assert!(f.is_exact());
        assert_eq!(f.mat_mul(&f.transpose()).unwrap(), s);
    }

    #[test]
    fn seven_needs_four_squares() {
        let roots = integer_sum_of_squares(&BigInt::from(7));
        assert_eq!(roots.len(), 4);
    }
}
