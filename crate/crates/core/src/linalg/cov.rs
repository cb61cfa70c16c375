use super::{LinalgError, Matrix};

/// Covariance in factored form: the factor `L` (`n×k`) stands for `L·Lᵀ`.
///
/// `k` is unconstrained; `k = 0` is the zero covariance. Keeping the factor
/// means composition never needs a square root.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CovFactor {
    factor: Matrix,
}

impl CovFactor {
    pub fn new(factor: Matrix) -> Self {
        CovFactor { factor }
    }

    /// Factors a PSD matrix through [`super::ldlt`]; exact input gives an
    /// exact factor.
    pub fn from_gram(sigma: &Matrix, tol: f64) -> Result<Self, LinalgError> {
        Ok(CovFactor { factor: super::ldlt(sigma, tol)?.factor() })
    }

    /// The zero covariance on `n` dimensions.
    pub fn zero(n: usize) -> Self {
        CovFactor { factor: Matrix::zeros(n, 0) }
    }

    pub fn dim(&self) -> usize {
        self.factor.rows()
    }

    pub fn width(&self) -> usize {
        self.factor.cols()
    }

    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    pub fn into_factor(self) -> Matrix {
        self.factor
    }

    /// `L·Lᵀ`, symmetric PSD by construction.
    pub fn gram(&self) -> Matrix {
        self.factor
            .mat_mul(&self.factor.transpose())
            .expect("factor times its transpose is always conformable")
    }

    /// Factor of `B·Σ·Bᵀ + Θ`: `[B·L_Σ | L_Θ]`.
    pub fn compose(b: &Matrix, sigma: &CovFactor, theta: &CovFactor) -> Result<CovFactor, LinalgError> {
        if b.cols() != sigma.dim() || b.rows() != theta.dim() {
            return Err(LinalgError::DimensionMismatch {
                op: "covCompose",
                left: b.shape(),
                right: (sigma.dim(), theta.dim()),
            });
        }
        let pushed = b.mat_mul(&sigma.factor)?;
        Ok(CovFactor { factor: pushed.hstack(&theta.factor)? })
    }

    /// Factor of the block-diagonal covariance `diag(Σ₁, Σ₂)`.
    pub fn block_diag(&self, other: &CovFactor) -> CovFactor {
        CovFactor { factor: self.factor.block_diag(&other.factor) }
    }

    /// Drops columns that are identically zero; the gram matrix is unchanged.
    pub fn compress(&self) -> CovFactor {
        let f = &self.factor;
        CovFactor { factor: f.filter_cols(|j| (0..f.rows()).any(|i| !f.get(i, j).is_zero())) }
    }

    pub fn is_zero(&self) -> bool {
        self.factor.is_zero()
    }

    pub fn to_float(&self) -> CovFactor {
        CovFactor { factor: self.factor.to_float() }
    }

    pub fn to_exact(&self) -> CovFactor {
        CovFactor { factor: self.factor.to_exact() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_scalar_case() {
        // B = 3, Σ = 1, Θ = 4 (factor 2) → 9 + 4 = 13.
        let b = Matrix::from_ints(&[&[3]]);
        let s = CovFactor::new(Matrix::from_ints(&[&[1]]));
        let t = CovFactor::new(Matrix::from_ints(&[&[2]]));
        let c = CovFactor::compose(&b, &s, &t).unwrap();
        assert_eq!(c.gram(), Matrix::from_ints(&[&[13]]));
    }

    #[test]
    fn compose_zero_factors() {
        let b = Matrix::from_ints(&[&[1, 2], &[3, 4]]);
        let c = CovFactor::compose(&b, &CovFactor::zero(2), &CovFactor::zero(2)).unwrap();
        assert!(c.gram().is_zero());
        assert_eq!(c.compress().width(), 0);
    }

    #[test]
    fn compose_identity_keeps_sigma() {
        let s = CovFactor::new(Matrix::from_ints(&[&[1, 0], &[2, 3]]));
        let c = CovFactor::compose(&Matrix::identity(2), &s, &CovFactor::zero(2)).unwrap();
        assert_eq!(c.gram(), s.gram());
    }

    #[test]
    fn compose_checks_dimensions() {
        let b = Matrix::zeros(1, 2);
        assert!(CovFactor::compose(&b, &CovFactor::zero(3), &CovFactor::zero(1)).is_err());
    }

    #[test]
    fn gram_examples() {
        let f = CovFactor::new(Matrix::from_ints(&[&[1], &[1]]));
        assert_eq!(f.gram(), Matrix::from_ints(&[&[1, 1], &[1, 1]]));
        assert_eq!(CovFactor::zero(2).gram(), Matrix::zeros(2, 2));
    }

    #[test]
    fn gram_invariant_under_signed_permutation() {
        let l = Matrix::from_ratios(&[&[(1, 2), (3, 1), (-1, 1)], &[(0, 1), (2, 3), (5, 1)]]);
        // Q permutes columns (0 2 1) and flips the sign of the middle one.
        let q = Matrix::from_ints(&[&[0, 0, 1], &[1, 0, 0], &[0, -1, 0]]);
        let lq = l.mat_mul(&q).unwrap();
        assert_eq!(CovFactor::new(l).gram(), CovFactor::new(lq).gram());
    }
}
