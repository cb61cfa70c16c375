use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AxiomError, AxiomSchema, Binding, Bound, Builder, MetaKind, MetaVar, Sampler};
use crate::diagram::{gadgets::gen, par_all, seq_all, swap_words, thick_ite, Colour, Generator, Term, TypeWord};
use crate::dsl::parse;
use crate::linalg::Scalar;
use crate::random::{random_bias, random_coefficient, random_term, random_word, Fragment, TermConfig};

fn p(src: &str) -> Term {
    parse(src).unwrap_or_else(|e| panic!("catalog term `{src}`: {e}"))
}

fn seq(a: &Term, b: &Term) -> Term {
    Term::seq(a, b).expect("catalog terms are well typed")
}

/// Post-composes a shift on the first output wire: `+1` on a real, negation
/// on a Boolean. Identity on an empty codomain.
fn bump_first_output(t: &Term) -> Term {
    let cs = t.cod().colours();
    let Some(&first) = cs.first() else {
        return t.clone();
    };
    let rest = Term::id(TypeWord::new(cs[1..].to_vec()));
    let bump = match first {
        Colour::R => p("id(R) * one ; add"),
        Colour::B => p("not"),
    };
    seq(t, &Term::par(&bump, &rest))
}

fn generic_mutant(builder: Builder) -> Builder {
    Arc::new(move |b| {
        let (l, r) = builder(b)?;
        Ok((l, bump_first_output(&r)))
    })
}

const BUMP: &str = "rhs followed by +1 on the first real output (or not on the first Boolean output)";

fn no_binding() -> Sampler {
    Arc::new(|_| Binding::new())
}

fn fixed(name: &str, description: &'static str, lhs: &str, rhs: &str) -> AxiomSchema {
    let (l, r) = (p(lhs), p(rhs));
    let builder: Builder = Arc::new(move |_| Ok((l.clone(), r.clone())));
    AxiomSchema::new(name, description, vec![], builder.clone(), no_binding(), generic_mutant(builder), BUMP)
}

/// A fixed schema whose codomain is empty, so every same-typed variant is
/// trivially equal; the mutant drops the trailing discard instead.
fn discarding(name: &str, description: &'static str, lhs: &str, rhs: &str, mutant: (&str, &str), why: &'static str) -> AxiomSchema {
    let (l, r) = (p(lhs), p(rhs));
    let (ml, mr) = (p(mutant.0), p(mutant.1));
    AxiomSchema::new(
        name,
        description,
        vec![],
        Arc::new(move |_| Ok((l.clone(), r.clone()))),
        no_binding(),
        Arc::new(move |_| Ok((ml.clone(), mr.clone()))),
        why,
    )
}

fn scalar_var(name: &'static str, range: &'static str) -> MetaVar {
    MetaVar { name, kind: MetaKind::Scalar(range) }
}

fn circuit_var(name: &'static str, constraint: &'static str) -> MetaVar {
    MetaVar { name, kind: MetaKind::Circuit(constraint) }
}

fn bias(b: &Binding, name: &str) -> Result<Scalar, AxiomError> {
    let v = b.scalar(name)?.clone();
    if v.to_f64() < 0.0 || v.to_f64() > 1.0 {
        return Err(AxiomError::InadmissibleBinding(format!("{name} = {v} is not in [0, 1]")));
    }
    Ok(v)
}

fn only_reals(t: &Term, name: &str, side: &str) -> Result<(), AxiomError> {
    let w = if side == "domain" { t.dom() } else { t.cod() };
    if w.bools() > 0 {
        return Err(AxiomError::InadmissibleBinding(format!("{name} must have no Boolean {side}, got {w}")));
    }
    Ok(())
}

fn reals(n: usize) -> TypeWord {
    TypeWord::repeat(Colour::R, n)
}

fn random_circuit(rng: &mut ChaCha8Rng, dom: &TypeWord, cod: &TypeWord) -> Term {
    let depth = rng.random_range(1..=4);
    random_term(rng, dom, cod, &TermConfig { depth, max_wires: 5, fragment: Fragment::Mixed, floats: false })
}

pub fn build_catalog() -> Vec<AxiomSchema> {
    let mut out = Vec::new();

    out.push(fixed("A1", "real copy is coassociative", "copyR ; id(R) * copyR", "copyR ; copyR * id(R)"));
    out.push(fixed("A2l", "real copy is counital on the left", "copyR ; delR * id(R)", "id(R)"));
    out.push(fixed("A2r", "real copy is counital on the right", "copyR ; id(R) * delR", "id(R)"));
    out.push(fixed("A3", "real copy is cocommutative", "copyR ; swap(R,R)", "copyR"));
    out.push(fixed("B1", "Boolean copy is coassociative", "copyB ; id(B) * copyB", "copyB ; copyB * id(B)"));
    out.push(fixed("B2l", "Boolean copy is counital on the left", "copyB ; delB * id(B)", "id(B)"));
    out.push(fixed("B2r", "Boolean copy is counital on the right", "copyB ; id(B) * delB", "id(B)"));
    out.push(fixed("B3", "Boolean copy is cocommutative", "copyB ; swap(B,B)", "copyB"));

    out.push(fixed("C1[zero]", "zero can be copied", "zero ; copyR", "zero * zero"));
    out.push(fixed(
        "C1[add]",
        "addition can be copied",
        "add ; copyR",
        "copyR * copyR ; id(R) * swap(R,R) * id(R) ; add * add",
    ));
    out.push(scaled("C1[scal]", "scaling can be copied", |k| (format!("scal({k}) ; copyR"), format!("copyR ; scal({k}) * scal({k})")), None));
    out.push(fixed("C1[one]", "one can be copied", "one ; copyR", "one * one"));

    out.push(discarding("D1[zero]", "zero can be discarded", "zero ; delR", "id()", ("zero", "one"), "zero against one"));
    out.push(discarding(
        "D1[add]",
        "addition can be discarded",
        "add ; delR",
        "delR * delR",
        ("add", "delR * id(R)"),
        "add against projection onto its second input",
    ));
    out.push(scaled(
        "D1[scal]",
        "scaling can be discarded",
        |k| (format!("scal({k}) ; delR"), "delR".to_string()),
        Some(|k: &Scalar| (format!("scal({k})"), format!("scal({})", k + &Scalar::one()))),
    ));
    out.push(discarding("D1[one]", "one can be discarded", "one ; delR", "id()", ("one", "zero"), "one against zero"));
    out.push(discarding(
        "D1[stdnormal]",
        "a standard normal sample can be discarded",
        "stdnormal ; delR",
        "id()",
        ("stdnormal", "zero"),
        "standard normal against zero",
    ));

    out.push(fixed(
        "C2[and]",
        "conjunction can be copied",
        "and ; copyB",
        "copyB * copyB ; id(B) * swap(B,B) * id(B) ; and * and",
    ));
    out.push(fixed("C2[not]", "negation can be copied", "not ; copyB", "copyB ; not * not"));
    out.push(discarding(
        "D2[and]",
        "conjunction can be discarded",
        "and ; delB",
        "delB * delB",
        ("and", "delB * id(B)"),
        "and against projection onto its second input",
    ));
    out.push(discarding("D2[not]", "negation can be discarded", "not ; delB", "delB", ("not", "id(B)"), "not against identity"));
    out.push(flip_discard());

    let e1_simple = "id(BR) * delR * id(R) ; ite";
    out.push(fixed(
        "E1l",
        "a guard retested in the then-branch is redundant",
        "copyB * id(RRR) ; id(B) * ite * id(R) ; ite",
        e1_simple,
    ));
    out.push(fixed(
        "E1r",
        "a guard retested in the else-branch is redundant",
        "copyB * id(RRR) ; id(B) * swap(B,R) * id(RR) ; id(BR) * ite ; ite",
        e1_simple,
    ));
    out.push(fixed("E2", "a true guard selects the then-branch", "flip(1) * id(RR) ; ite", "id(R) * delR"));
    out.push(fixed("E2z", "a false guard selects the else-branch", "flip(0) * id(RR) ; ite", "delR * id(R)"));
    let e3_spread = "id(B) * copyB * id(RRRR) ; id(BB) * swap(B,R) * id(RRR) ; id(BBR) * swap(B,R) * id(RR) ; id(B) * ite * ite ; ite";
    out.push(fixed(
        "E3",
        "nested conditionals commute when the guards are exchanged",
        e3_spread,
        &format!("swap(B,B) * id(RRRR) ; id(BBR) * swap(R,R) * id(R) ; {e3_spread}"),
    ));
    out.push(e4());
    out.push(e5());
    out.push(fixed("E6", "negating the guard swaps the branches", "not * id(RR) ; ite", "id(B) * swap(R,R) ; ite"));
    out.push(fixed(
        "E7",
        "a conjunctive guard unfolds into nested tests",
        "and * id(RR) ; ite",
        "id(BBR) * copyR ; id(B) * ite * id(R) ; ite",
    ));
    out.push(fixed("E8", "equal branches make the guard irrelevant", "id(B) * copyR ; ite", "delB * id(R)"));
    out.push(discarding(
        "E9",
        "a discarded conditional discards its inputs",
        "ite ; delR",
        "delB * delR * delR",
        ("ite", "delB * id(R) * delR"),
        "ite against projection onto the then-branch",
    ));
    out.push(e10());

    out.extend(smc_laws());
    out
}

#[allow(clippy::type_complexity)]
fn scaled(
    name: &str,
    description: &'static str,
    sides: fn(&Scalar) -> (String, String),
    mutant: Option<fn(&Scalar) -> (String, String)>,
) -> AxiomSchema {
    let builder: Builder = Arc::new(move |b| {
        let k = b.scalar("k")?;
        let (l, r) = sides(k);
        Ok((p(&l), p(&r)))
    });
    let (mutant, why): (Builder, &'static str) = match mutant {
        Some(m) => (
            Arc::new(move |b| {
                let (l, r) = m(b.scalar("k")?);
                Ok((p(&l), p(&r)))
            }),
            "scal(k) against scal(k+1)",
        ),
        None => (generic_mutant(builder.clone()), BUMP),
    };
    AxiomSchema::new(
        name,
        description,
        vec![scalar_var("k", "any rational")],
        builder,
        Arc::new(|rng| Binding::new().with("k", Bound::Scalar(random_coefficient(rng)))),
        mutant,
        why,
    )
}

fn flip_discard() -> AxiomSchema {
    AxiomSchema::new(
        "D2[flip]",
        "a coin flip can be discarded",
        vec![scalar_var("p", "[0, 1]")],
        Arc::new(|b| {
            let p_ = bias(b, "p")?;
            Ok((p(&format!("flip({p_}) ; delB")), p("id()")))
        }),
        Arc::new(|rng| Binding::new().with("p", Bound::Scalar(random_bias(rng)))),
        Arc::new(|b| {
            let p_ = bias(b, "p")?;
            let other = if p_.is_zero() { Scalar::one() } else { &p_ / &Scalar::int(2) };
            Ok((p(&format!("flip({p_})")), p(&format!("flip({other})"))))
        }),
        "flip(p) against flip(p/2), or flip(1) when p = 0",
    )
}

/// Block of `n` reals fed by the then-branch `c` and else-branch `d` that
/// share (lhs) or do not share (rhs) one standard normal sample.
fn e4() -> AxiomSchema {
    fn sides(b: &Binding) -> Result<(Term, Term), AxiomError> {
        let (c, d) = (b.term("c")?, b.term("d")?);
        for (t, name) in [(c, "c"), (d, "d")] {
            only_reals(t, name, "domain")?;
            only_reals(t, name, "codomain")?;
            if t.dom().is_empty() {
                return Err(AxiomError::InadmissibleBinding(format!("{name} needs at least one real input")));
            }
        }
        if c.cod() != d.cod() {
            return Err(AxiomError::InadmissibleBinding(format!("c and d disagree on codomain: {} vs {}", c.cod(), d.cod())));
        }
        let (j, k, n) = (c.dom().len() - 1, d.dom().len() - 1, c.cod().len());
        // b z z' x y → b z x z' y
        let word = TypeWord::single(Colour::B).concat(&reals(2 + j + k));
        let perm: Vec<usize> = [0, 1].into_iter().chain(3..3 + j).chain([2]).chain(3 + j..3 + j + k).collect();
        let route = crate::diagram::permutation(&word, &perm);
        let tail = seq_all([route, par_all([Term::id_colour(Colour::B), c.clone(), d.clone()]), thick_ite(1, n)])
            .expect("E4 tail");
        let wrap = |noise: Term| {
            let front = par_all([Term::id_colour(Colour::B), noise, Term::id(reals(j + k))]);
            seq(&front, &tail)
        };
        let shared = seq(&gen(Generator::StdNormal), &gen(Generator::RealCopy));
        let split = Term::par(&gen(Generator::StdNormal), &gen(Generator::StdNormal));
        Ok((wrap(shared), wrap(split)))
    }
    AxiomSchema::new(
        "E4",
        "branches of a conditional may sample their noise independently",
        vec![
            circuit_var("c", "R·R^j → R^n, no Boolean wires on the boundary"),
            circuit_var("d", "R·R^k → R^n, no Boolean wires on the boundary"),
        ],
        Arc::new(sides),
        Arc::new(|rng| {
            let (j, k, n) = (rng.random_range(0..=1), rng.random_range(0..=1), rng.random_range(1..=2));
            let c = random_circuit(rng, &reals(1 + j), &reals(n));
            let d = random_circuit(rng, &reals(1 + k), &reals(n));
            Binding::new().with("c", Bound::Term(c)).with("d", Bound::Term(d))
        }),
        generic_mutant(Arc::new(sides)),
        BUMP,
    )
}

fn e5() -> AxiomSchema {
    fn sides(b: &Binding) -> Result<(Term, Term), AxiomError> {
        let c = b.term("c")?;
        only_reals(c, "c", "domain")?;
        only_reals(c, "c", "codomain")?;
        let (m, n) = (c.dom().len(), c.cod().len());
        let lhs = seq(&par_all([Term::id_colour(Colour::B), c.clone(), c.clone()]), &thick_ite(1, n));
        let rhs = seq(&thick_ite(1, m), c);
        Ok((lhs, rhs))
    }
    AxiomSchema::new(
        "E5",
        "any circuit commutes with selection",
        vec![circuit_var("c", "R^m → R^n")],
        Arc::new(sides),
        Arc::new(|rng| {
            let (m, n) = (rng.random_range(0..=2), rng.random_range(1..=2));
            Binding::new().with("c", Bound::Term(random_circuit(rng, &reals(m), &reals(n))))
        }),
        generic_mutant(Arc::new(sides)),
        BUMP,
    )
}

fn e10_weights(p_: &Scalar, q: &Scalar) -> Result<(Scalar, Scalar), AxiomError> {
    let pt = p_ * q;
    if pt.is_one() || (!pt.is_rational() && (pt.to_f64() - 1.0).abs() < 1e-12) {
        return Err(AxiomError::InadmissibleBinding(format!("E10 needs pq != 1, got p = {p_}, q = {q}")));
    }
    let qt = &(q * &(&Scalar::one() - p_)) / &(&Scalar::one() - &pt);
    Ok((pt, qt))
}

fn mix_layers(outer: &Scalar, inner: &Scalar, skewed: bool) -> Term {
    if skewed {
        p(&format!("flip({outer}) * id(R) * flip({inner}) * id(RR) ; id(BR) * ite ; ite"))
    } else {
        p(&format!("flip({outer}) * flip({inner}) * id(RRR) ; id(B) * ite * id(R) ; ite"))
    }
}

/// Skew associativity of binary mixtures:
/// `mix_q(mix_p(x1, x2), x3) = mix_p̃(x1, mix_q̃(x2, x3))`.
fn e10() -> AxiomSchema {
    AxiomSchema::new(
        "E10",
        "binary mixtures reassociate with reweighting, p~ = pq != 1, q~ = q(1-p)/(1-pq)",
        vec![scalar_var("p", "[0, 1], pq != 1"), scalar_var("q", "[0, 1], pq != 1")],
        Arc::new(|b| {
            let (p_, q) = (bias(b, "p")?, bias(b, "q")?);
            let (pt, qt) = e10_weights(&p_, &q)?;
            Ok((mix_layers(&q, &p_, false), mix_layers(&pt, &qt, true)))
        }),
        Arc::new(|rng| loop {
            let (p_, q) = (random_bias(rng), random_bias(rng));
            if !(&p_ * &q).is_one() {
                return Binding::new().with("p", Bound::Scalar(p_)).with("q", Bound::Scalar(q));
            }
        }),
        Arc::new(|b| {
            let (p_, q) = (bias(b, "p")?, bias(b, "q")?);
            let (pt, _) = e10_weights(&p_, &q)?;
            Ok((mix_layers(&q, &p_, false), mix_layers(&pt, &q, true)))
        }),
        "q~ replaced by q",
    )
}

/// Inner mixture weights of E10's right-hand side, exposed for tests.
pub fn e10_rhs_weights(p_: &Scalar, q: &Scalar) -> Result<(Scalar, Scalar), AxiomError> {
    e10_weights(p_, q)
}

fn smc_sampler(names: &'static [&'static str], chain: bool) -> Sampler {
    Arc::new(move |rng| {
        let mut b = Binding::new();
        let mut dom = random_word(rng, 2, 2);
        for name in names {
            let cod = random_word(rng, 2, 2);
            b = b.with(name, Bound::Term(random_circuit(rng, &dom, &cod)));
            if chain {
                dom = cod;
            } else {
                dom = random_word(rng, 2, 2);
            }
        }
        b
    })
}

fn smc(name: &str, description: &'static str, vars: &'static [&'static str], chain: bool, f: fn(&Binding) -> Result<(Term, Term), AxiomError>) -> AxiomSchema {
    let builder: Builder = Arc::new(f);
    AxiomSchema::new(
        name,
        description,
        vars.iter().map(|v| circuit_var(v, "any circuit")).collect(),
        builder.clone(),
        smc_sampler(vars, chain),
        generic_mutant(builder),
        BUMP,
    )
}

fn composable(a: &Term, b: &Term, what: &str) -> Result<Term, AxiomError> {
    Term::seq(a, b).map_err(|e| AxiomError::InadmissibleBinding(format!("{what}: {e}")))
}

fn smc_laws() -> Vec<AxiomSchema> {
    let colour_pair = |rng: &mut ChaCha8Rng| {
        let pick = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { Colour::B } else { Colour::R };
        (pick(rng), pick(rng))
    };
    let mut out = vec![
        smc("par-assoc", "tensor is associative", &["c1", "c2", "c3"], false, |b| {
            let (c1, c2, c3) = (b.term("c1")?, b.term("c2")?, b.term("c3")?);
            Ok((Term::par(c1, &Term::par(c2, c3)), Term::par(&Term::par(c1, c2), c3)))
        }),
        smc("seq-assoc", "sequential composition is associative", &["c", "d", "e"], true, |b| {
            let (c, d, e) = (b.term("c")?, b.term("d")?, b.term("e")?);
            let l = composable(&composable(c, d, "c ; d")?, e, "(c ; d) ; e")?;
            let r = composable(c, &composable(d, e, "d ; e")?, "c ; (d ; e)")?;
            Ok((l, r))
        }),
        smc("seq-unit-l", "identity is a left unit of ;", &["c"], false, |b| {
            let c = b.term("c")?;
            Ok((seq(&Term::id(c.dom().clone()), c), c.clone()))
        }),
        smc("seq-unit-r", "identity is a right unit of ;", &["c"], false, |b| {
            let c = b.term("c")?;
            Ok((seq(c, &Term::id(c.cod().clone())), c.clone()))
        }),
        smc("par-unit-l", "the empty identity is a left unit of the tensor", &["c"], false, |b| {
            let c = b.term("c")?;
            Ok((Term::par(&Term::id(TypeWord::empty()), c), c.clone()))
        }),
        smc("par-unit-r", "the empty identity is a right unit of the tensor", &["c"], false, |b| {
            let c = b.term("c")?;
            Ok((Term::par(c, &Term::id(TypeWord::empty())), c.clone()))
        }),
        smc("interchange", "(c1 * c2) ; (d1 * d2) = (c1 ; d1) * (c2 ; d2)", &["c1", "d1", "c2", "d2"], true, |b| {
            let (c1, c2, d1, d2) = (b.term("c1")?, b.term("c2")?, b.term("d1")?, b.term("d2")?);
            let l = composable(&Term::par(c1, c2), &Term::par(d1, d2), "(c1 * c2) ; (d1 * d2)")?;
            let r = Term::par(&composable(c1, d1, "c1 ; d1")?, &composable(c2, d2, "c2 ; d2")?);
            Ok((l, r))
        }),
    ];
    // The interchange sampler must chain c1→d1 and c2→d2 independently.
    let last = out.pop().expect("interchange");
    let interchange_sampler: Sampler = Arc::new(|rng| {
        let (u1, v1, w1) = (random_word(rng, 2, 2), random_word(rng, 2, 2), random_word(rng, 2, 2));
        let (u2, v2, w2) = (random_word(rng, 1, 2), random_word(rng, 1, 2), random_word(rng, 1, 2));
        Binding::new()
            .with("c1", Bound::Term(random_circuit(rng, &u1, &v1)))
            .with("d1", Bound::Term(random_circuit(rng, &v1, &w1)))
            .with("c2", Bound::Term(random_circuit(rng, &u2, &v2)))
            .with("d2", Bound::Term(random_circuit(rng, &v2, &w2)))
    });
    out.push(AxiomSchema { sampler: interchange_sampler, ..last });

    out.push(AxiomSchema::new(
        "swap-natural",
        "crossings are natural: (id(x) * c) ; swap = swap ; (c * id(x))",
        vec![circuit_var("c", "any circuit"), MetaVar { name: "x", kind: MetaKind::Colour }],
        Arc::new(swap_natural),
        Arc::new(move |rng| {
            let (x, _) = colour_pair(rng);
            let (u, v) = (random_word(rng, 2, 2), random_word(rng, 2, 2));
            Binding::new().with("c", Bound::Term(random_circuit(rng, &u, &v))).with("x", Bound::Colour(x))
        }),
        generic_mutant(Arc::new(swap_natural)),
        BUMP,
    ));
    out.push(AxiomSchema::new(
        "swap-involutive",
        "crossing twice is the identity",
        vec![MetaVar { name: "x", kind: MetaKind::Colour }, MetaVar { name: "y", kind: MetaKind::Colour }],
        Arc::new(|b| {
            let (x, y) = (b.colour("x")?, b.colour("y")?);
            Ok((seq(&Term::swap(x, y), &Term::swap(y, x)), Term::id(TypeWord::new(vec![x, y]))))
        }),
        Arc::new(move |rng| {
            let (x, y) = colour_pair(rng);
            Binding::new().with("x", Bound::Colour(x)).with("y", Bound::Colour(y))
        }),
        generic_mutant(Arc::new(|b| {
            let (x, y) = (b.colour("x")?, b.colour("y")?);
            Ok((seq(&Term::swap(x, y), &Term::swap(y, x)), Term::id(TypeWord::new(vec![x, y]))))
        })),
        BUMP,
    ));
    out
}

fn swap_natural(b: &Binding) -> Result<(Term, Term), AxiomError> {
    let (c, x) = (b.term("c")?, b.colour("x")?);
    let xw = TypeWord::single(x);
    let l = seq(&Term::par(&Term::id(xw.clone()), c), &swap_words(&xw, c.cod()));
    let r = seq(&swap_words(&xw, c.dom()), &Term::par(c, &Term::id(xw)));
    Ok((l, r))
}
