use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::mixture::{BitVec, CGMixture, GaussComponent};
use super::SemanticsError;
use crate::exec::Execution;
use crate::linalg::{Matrix, Scalar};

/// Exact first and second moments of one row of a mixture at a fixed input.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub bool_marginal: BTreeMap<BitVec, Scalar>,
    pub mean: Matrix,
    pub cov: Matrix,
}

fn check_input(m: &CGMixture, a: &BitVec, x_len: usize) -> Result<(), SemanticsError> {
    let (p, mm, _, _) = m.arity();
    if a.len() != p || x_len != mm {
        return Err(SemanticsError::DimensionMismatch(format!(
            "input ({a}, {x_len} reals) for a kernel {} -> {}",
            m.in_word(),
            m.out_word()
        )));
    }
    Ok(())
}

/// Boolean marginal, mixture mean `Σ wᵢ(Aᵢx + μᵢ)` and covariance by the law
/// of total variance.
pub fn moments(m: &CGMixture, a: &BitVec, x: &[Scalar]) -> Result<Moments, SemanticsError> {
    check_input(m, a, x.len())?;
    let n = m.arity().3;
    let xv = Matrix::column(x.to_vec());
    let mut bool_marginal: BTreeMap<BitVec, Scalar> = BTreeMap::new();
    let mut mean = Matrix::zeros(n, 1);
    let mut second = Matrix::zeros(n, n);
    for c in m.row(a) {
        let e = bool_marginal.entry(c.bool_out.clone()).or_insert_with(Scalar::zero);
        *e = &*e + &c.weight;
        let mi = c.a.mat_mul(&xv).and_then(|v| v.mat_add(&c.mu)).expect("dimensions checked");
        mean = mean.mat_add(&mi.scale(&c.weight)).expect("n x 1");
        let outer = mi.mat_mul(&mi.transpose()).expect("outer product");
        let s = c.cov.gram().mat_add(&outer).expect("n x n");
        second = second.mat_add(&s.scale(&c.weight)).expect("n x n");
    }
    let cov = second.mat_sub(&mean.mat_mul(&mean.transpose()).expect("outer")).expect("n x n");
    Ok(Moments { bool_marginal, mean, cov })
}

/// One row prepared for repeated float sampling.
#[derive(Clone, Debug)]
pub struct RowSampler {
    cumulative: Vec<f64>,
    comps: Vec<(BitVec, Vec<f64>, Vec<f64>, usize)>,
    n: usize,
}

impl RowSampler {
    pub fn new(m: &CGMixture, a: &BitVec, x: &[f64]) -> Result<Self, SemanticsError> {
        check_input(m, a, x.len())?;
        let n = m.arity().3;
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        let mut comps = Vec::new();
        for c in m.row(a) {
            acc += c.weight.to_f64();
            cumulative.push(acc);
            comps.push(prepare(c, x));
        }
        Ok(RowSampler { cumulative, comps, n })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (BitVec, Vec<f64>) {
        let total = *self.cumulative.last().expect("rows are never empty");
        let u: f64 = rng.random::<f64>() * total;
        let i = self.cumulative.iter().position(|&c| u < c).unwrap_or(self.comps.len() - 1);
        let (bits, centre, factor, k) = &self.comps[i];
        let z: Vec<f64> = (0..*k).map(|_| rng.sample(StandardNormal)).collect();
        let mut y = centre.clone();
        for (r, yr) in y.iter_mut().enumerate().take(self.n) {
            for (j, zj) in z.iter().enumerate() {
                *yr += factor[r * k + j] * zj;
            }
        }
        (bits.clone(), y)
    }
}

fn prepare(c: &GaussComponent, x: &[f64]) -> (BitVec, Vec<f64>, Vec<f64>, usize) {
    let (n, m) = c.a.shape();
    let centre = (0..n)
        .map(|r| c.mu.get(r, 0).to_f64() + (0..m).map(|j| c.a.get(r, j).to_f64() * x[j]).sum::<f64>())
        .collect();
    (c.bool_out.clone(), centre, c.cov.factor().to_f64_vec(), c.cov.width())
}

/// `(boolOut, A·x + μ + L·z)` for a component drawn by weight.
pub fn sample(m: &CGMixture, a: &BitVec, x: &[f64], seed: u64) -> Result<(BitVec, Vec<f64>), SemanticsError> {
    let s = RowSampler::new(m, a, x)?;
    Ok(s.draw(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Draws per chunk of this size share one RNG stream.
pub const SAMPLE_CHUNK: usize = 4096;

/// `count` draws, reproducible from `seed` whatever the execution mode:
/// chunk `i` uses stream `i` of the seeded generator.
pub fn sample_many(
    m: &CGMixture,
    a: &BitVec,
    x: &[f64],
    count: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<(BitVec, Vec<f64>)>, SemanticsError> {
    let s = RowSampler::new(m, a, x)?;
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts = exec.map_indexed(chunks, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let len = SAMPLE_CHUNK.min(count - i * SAMPLE_CHUNK);
        (0..len).map(|_| s.draw(&mut rng)).collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}
