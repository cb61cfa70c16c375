//! Random well-typed terms and scalars for property tests and soundness
//! trials.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::diagram::gadgets::{discard, gen};
use crate::diagram::{par_all, permutation, seq_all, Colour, Generator, Term, TypeWord};
use crate::linalg::Scalar;

/// Which generators a random term may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fragment {
    /// Boolean generators only.
    Boolean,
    /// Gaussian generators only.
    Gaussian,
    /// Everything, including `ite`.
    Mixed,
}

#[derive(Clone, Copy, Debug)]
pub struct TermConfig {
    /// Number of generator layers before the boundary is adapted.
    pub depth: usize,
    /// Soft cap on the number of wires alive between layers.
    pub max_wires: usize,
    pub fragment: Fragment,
    /// Emit float literals instead of rationals.
    pub floats: bool,
}

impl Default for TermConfig {
    fn default() -> Self {
        TermConfig { depth: 4, max_wires: 5, fragment: Fragment::Mixed, floats: false }
    }
}

/// A bias in `[0, 1]`: usually a small-denominator rational in `(0, 1)`,
/// now and then exactly 0 or 1.
pub fn random_bias<R: Rng + ?Sized>(rng: &mut R) -> Scalar {
    match rng.random_range(0..12) {
        0 => Scalar::zero(),
        1 => Scalar::one(),
        _ => random_open_unit(rng),
    }
}

/// A rational in the open interval `(0, 1)`.
pub fn random_open_unit<R: Rng + ?Sized>(rng: &mut R) -> Scalar {
    let d = rng.random_range(2..=7);
    let n = rng.random_range(1..d);
    Scalar::ratio(n, d)
}

/// A small rational coefficient in `[-3, 3]`, occasionally 0 or 1.
pub fn random_coefficient<R: Rng + ?Sized>(rng: &mut R) -> Scalar {
    match rng.random_range(0..10) {
        0 => Scalar::zero(),
        1 => Scalar::one(),
        _ => {
            let d = rng.random_range(1..=4);
            let n = rng.random_range(-3 * d..=3 * d);
            Scalar::ratio(n, d)
        }
    }
}

fn candidates(fragment: Fragment) -> Vec<Generator> {
    let boolean = [Generator::BoolDiscard, Generator::BoolCopy, Generator::And, Generator::Not, Generator::Flip(Scalar::zero())];
    let gaussian = [
        Generator::RealDiscard,
        Generator::RealCopy,
        Generator::Zero,
        Generator::Add,
        Generator::Scalar(Scalar::zero()),
        Generator::One,
        Generator::StdNormal,
    ];
    match fragment {
        Fragment::Boolean => boolean.to_vec(),
        Fragment::Gaussian => gaussian.to_vec(),
        Fragment::Mixed => boolean.into_iter().chain(gaussian).chain([Generator::Ite, Generator::Ite]).collect(),
    }
}

fn with_random_param<R: Rng + ?Sized>(g: &Generator, rng: &mut R, floats: bool) -> Generator {
    let v = match g {
        Generator::Flip(_) => random_bias(rng),
        Generator::Scalar(_) => random_coefficient(rng),
        _ => return g.clone(),
    };
    g.with_param(if floats { v.to_float() } else { v })
}

/// Positions of `word` to feed a generator with domain `need`, in the
/// order of `need`, or `None` if the word lacks the colours.
fn pick_wires<R: Rng + ?Sized>(word: &TypeWord, need: &TypeWord, rng: &mut R) -> Option<Vec<usize>> {
    let mut pools: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &c) in word.colours().iter().enumerate() {
        pools[(c == Colour::R) as usize].push(i);
    }
    pools[0].shuffle(rng);
    pools[1].shuffle(rng);
    need.colours().iter().map(|&c| pools[(c == Colour::R) as usize].pop()).collect()
}

/// Brings `chosen` to the front (in order), then applies `g ⊗ id(rest)`.
fn apply_front(word: &TypeWord, chosen: &[usize], g: Term) -> Term {
    let mut perm = chosen.to_vec();
    perm.extend((0..word.len()).filter(|i| !chosen.contains(i)));
    let rest = TypeWord::new(perm[chosen.len()..].iter().map(|&i| word.colours()[i]).collect());
    let front = permutation(word, &perm);
    seq_all([front, Term::par(&g, &Term::id(rest))]).expect("permuted layer")
}

fn source<R: Rng + ?Sized>(c: Colour, rng: &mut R, floats: bool) -> Term {
    let g = match c {
        Colour::B => Generator::Flip(Scalar::zero()),
        Colour::R => match rng.random_range(0..4) {
            0 => Generator::Zero,
            1 => Generator::One,
            _ => Generator::StdNormal,
        },
    };
    gen(with_random_param(&g, rng, floats))
}

/// A random term of type `dom → cod`.
pub fn random_term<R: Rng + ?Sized>(rng: &mut R, dom: &TypeWord, cod: &TypeWord, cfg: &TermConfig) -> Term {
    let gens = candidates(cfg.fragment);
    let mut layers = vec![Term::id(dom.clone())];
    let mut word = dom.clone();
    for _ in 0..cfg.depth {
        for _attempt in 0..8 {
            let g = with_random_param(gens.choose(rng).expect("nonempty"), rng, cfg.floats);
            let t = gen(g);
            let grows = t.cod().len() > t.dom().len();
            if grows && word.len() + t.cod().len() > cfg.max_wires + t.dom().len() {
                continue;
            }
            if let Some(chosen) = pick_wires(&word, t.dom(), rng) {
                let layer = apply_front(&word, &chosen, t);
                word = layer.cod().clone();
                layers.push(layer);
                break;
            }
        }
    }
    layers.push(adapt(rng, &word, cod, cfg.floats));
    seq_all(layers).expect("layers are typed by construction")
}

/// Discards surplus wires, creates missing ones from sources, then permutes
/// into `cod`.
fn adapt<R: Rng + ?Sized>(rng: &mut R, word: &TypeWord, cod: &TypeWord, floats: bool) -> Term {
    let mut layers = Vec::new();
    let mut w = word.clone();
    for c in [Colour::B, Colour::R] {
        while w.count(c) > cod.count(c) {
            let chosen = pick_wires(&w, &TypeWord::single(c), rng).expect("surplus wire");
            let layer = apply_front(&w, &chosen, discard(c));
            w = layer.cod().clone();
            layers.push(layer);
        }
        while w.count(c) < cod.count(c) {
            let layer = Term::par(&source(c, rng, floats), &Term::id(w.clone()));
            w = layer.cod().clone();
            layers.push(layer);
        }
    }
    // Match colours position by position, shuffling wires within a colour.
    let mut pools: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &c) in w.colours().iter().enumerate() {
        pools[(c == Colour::R) as usize].push(i);
    }
    pools[0].shuffle(rng);
    pools[1].shuffle(rng);
    let perm: Vec<usize> =
        cod.colours().iter().map(|&c| pools[(c == Colour::R) as usize].pop().expect("counts match")).collect();
    layers.push(permutation(&w, &perm));
    seq_all(layers).expect("adapter layers compose")
}

/// A random word with at most `max_b` B's and `max_r` R's, shuffled.
pub fn random_word<R: Rng + ?Sized>(rng: &mut R, max_b: usize, max_r: usize) -> TypeWord {
    let b = rng.random_range(0..=max_b);
    let r = rng.random_range(0..=max_r);
    let mut cs: Vec<Colour> = std::iter::repeat_n(Colour::B, b).chain(std::iter::repeat_n(Colour::R, r)).collect();
    cs.shuffle(rng);
    TypeWord::new(cs)
}

/// `p·q·…` of random sources, one per wire of `cod`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, cod: &TypeWord, floats: bool) -> Term {
    par_all(cod.colours().iter().map(|&c| source(c, rng, floats)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn terms_have_requested_type() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let dom = random_word(&mut rng, 3, 3);
            let cod = random_word(&mut rng, 3, 3);
            for fragment in [Fragment::Mixed, Fragment::Boolean, Fragment::Gaussian] {
                let (d, c) = match fragment {
                    Fragment::Boolean => (TypeWord::repeat(Colour::B, dom.bools()), TypeWord::repeat(Colour::B, cod.bools())),
                    Fragment::Gaussian => (TypeWord::repeat(Colour::R, dom.reals()), TypeWord::repeat(Colour::R, cod.reals())),
                    Fragment::Mixed => (dom.clone(), cod.clone()),
                };
                let cfg = TermConfig { fragment, ..TermConfig::default() };
                let t = random_term(&mut rng, &d, &c, &cfg);
                assert_eq!(t.type_of(), (d, c));
            }
        }
    }

    #[test]
    fn ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let b = random_bias(&mut rng).to_f64();
            assert!((0.0..=1.0).contains(&b));
            let u = random_open_unit(&mut rng).to_f64();
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
