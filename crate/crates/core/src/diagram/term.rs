use std::fmt;
use std::sync::Arc;

use crate::linalg::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Colour {
    /// Boolean wire.
    B,
    /// Real wire.
    R,
}

impl Colour {
    pub fn from_char(c: char) -> Option<Colour> {
        match c {
            'B' => Some(Colour::B),
            'R' => Some(Colour::R),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Colour::B => 'B',
            Colour::R => 'R',
        }
    }
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A boundary word over `{B, R}`. The empty word is the monoidal unit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeWord(Vec<Colour>);

impl TypeWord {
    pub fn new(colours: Vec<Colour>) -> Self {
        TypeWord(colours)
    }

    pub fn empty() -> Self {
        TypeWord(Vec::new())
    }

    pub fn single(c: Colour) -> Self {
        TypeWord(vec![c])
    }

    pub fn repeat(c: Colour, n: usize) -> Self {
        TypeWord(vec![c; n])
    }

    /// `B^p R^m`.
    pub fn bool_first(p: usize, m: usize) -> Self {
        let mut v = vec![Colour::B; p];
        v.extend(std::iter::repeat_n(Colour::R, m));
        TypeWord(v)
    }

    /// Parses `BRR`-style words; the empty string is the empty word.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars().map(Colour::from_char).collect::<Option<Vec<_>>>().map(TypeWord)
    }

    pub fn colours(&self) -> &[Colour] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, c: Colour) -> usize {
        self.0.iter().filter(|&&x| x == c).count()
    }

    pub fn bools(&self) -> usize {
        self.count(Colour::B)
    }

    pub fn reals(&self) -> usize {
        self.count(Colour::R)
    }

    pub fn concat(&self, other: &TypeWord) -> TypeWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        TypeWord(v)
    }

    /// The same multiset of colours with every `B` before every `R`.
    pub fn sorted(&self) -> TypeWord {
        TypeWord::bool_first(self.bools(), self.reals())
    }

    /// Letters as a plain string (`""` for the empty word).
    pub fn letters(&self) -> String {
        self.0.iter().map(|c| c.as_char()).collect()
    }
}

impl fmt::Display for TypeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("ε")
        } else {
            f.write_str(&self.letters())
        }
    }
}

impl From<Vec<Colour>> for TypeWord {
    fn from(v: Vec<Colour>) -> Self {
        TypeWord(v)
    }
}

/// Parameter-free generator kinds, used by [`Term::generator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    BoolDiscard,
    BoolCopy,
    And,
    Not,
    Flip,
    RealDiscard,
    RealCopy,
    Zero,
    Add,
    Scalar,
    One,
    StdNormal,
    Ite,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 13] = [
        GeneratorKind::BoolDiscard,
        GeneratorKind::BoolCopy,
        GeneratorKind::And,
        GeneratorKind::Not,
        GeneratorKind::Flip,
        GeneratorKind::RealDiscard,
        GeneratorKind::RealCopy,
        GeneratorKind::Zero,
        GeneratorKind::Add,
        GeneratorKind::Scalar,
        GeneratorKind::One,
        GeneratorKind::StdNormal,
        GeneratorKind::Ite,
    ];

    pub fn takes_param(self) -> bool {
        matches!(self, GeneratorKind::Flip | GeneratorKind::Scalar)
    }

    /// Concrete-syntax keyword.
    pub fn keyword(self) -> &'static str {
        match self {
            GeneratorKind::BoolDiscard => "delB",
            GeneratorKind::BoolCopy => "copyB",
            GeneratorKind::And => "and",
            GeneratorKind::Not => "not",
            GeneratorKind::Flip => "flip",
            GeneratorKind::RealDiscard => "delR",
            GeneratorKind::RealCopy => "copyR",
            GeneratorKind::Zero => "zero",
            GeneratorKind::Add => "add",
            GeneratorKind::Scalar => "scal",
            GeneratorKind::One => "one",
            GeneratorKind::StdNormal => "stdnormal",
            GeneratorKind::Ite => "ite",
        }
    }

    pub fn from_keyword(s: &str) -> Option<GeneratorKind> {
        GeneratorKind::ALL.into_iter().find(|k| k.keyword() == s)
    }

    pub fn signature(self) -> (TypeWord, TypeWord) {
        use Colour::{B, R};
        let w = |v: &[Colour]| TypeWord(v.to_vec());
        match self {
            GeneratorKind::BoolDiscard => (w(&[B]), w(&[])),
            GeneratorKind::BoolCopy => (w(&[B]), w(&[B, B])),
            GeneratorKind::And => (w(&[B, B]), w(&[B])),
            GeneratorKind::Not => (w(&[B]), w(&[B])),
            GeneratorKind::Flip => (w(&[]), w(&[B])),
            GeneratorKind::RealDiscard => (w(&[R]), w(&[])),
            GeneratorKind::RealCopy => (w(&[R]), w(&[R, R])),
            GeneratorKind::Zero => (w(&[]), w(&[R])),
            GeneratorKind::Add => (w(&[R, R]), w(&[R])),
            GeneratorKind::Scalar => (w(&[R]), w(&[R])),
            GeneratorKind::One => (w(&[]), w(&[R])),
            GeneratorKind::StdNormal => (w(&[]), w(&[R])),
            GeneratorKind::Ite => (w(&[B, R, R]), w(&[R])),
        }
    }
}

/// A generator with its parameter, if any.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    BoolDiscard,
    BoolCopy,
    And,
    Not,
    /// Emits true with the given probability.
    Flip(Scalar),
    RealDiscard,
    RealCopy,
    Zero,
    Add,
    Scalar(Scalar),
    One,
    StdNormal,
    /// If-then-else: guard, then-branch, else-branch.
    Ite,
}

impl Generator {
    pub fn kind(&self) -> GeneratorKind {
        match self {
            Generator::BoolDiscard => GeneratorKind::BoolDiscard,
            Generator::BoolCopy => GeneratorKind::BoolCopy,
            Generator::And => GeneratorKind::And,
            Generator::Not => GeneratorKind::Not,
            Generator::Flip(_) => GeneratorKind::Flip,
            Generator::RealDiscard => GeneratorKind::RealDiscard,
            Generator::RealCopy => GeneratorKind::RealCopy,
            Generator::Zero => GeneratorKind::Zero,
            Generator::Add => GeneratorKind::Add,
            Generator::Scalar(_) => GeneratorKind::Scalar,
            Generator::One => GeneratorKind::One,
            Generator::StdNormal => GeneratorKind::StdNormal,
            Generator::Ite => GeneratorKind::Ite,
        }
    }

    pub fn param(&self) -> Option<&Scalar> {
        match self {
            Generator::Flip(p) | Generator::Scalar(p) => Some(p),
            _ => None,
        }
    }

    pub fn with_param(&self, value: Scalar) -> Generator {
        match self {
            Generator::Flip(_) => Generator::Flip(value),
            Generator::Scalar(_) => Generator::Scalar(value),
            g => g.clone(),
        }
    }

    /// Generators of the Boolean fragment.
    pub fn is_boolean(&self) -> bool {
        matches!(
            self,
            Generator::BoolDiscard | Generator::BoolCopy | Generator::And | Generator::Not | Generator::Flip(_)
        )
    }

    /// Generators of the Gaussian fragment.
    pub fn is_gaussian(&self) -> bool {
        matches!(
            self,
            Generator::RealDiscard
                | Generator::RealCopy
                | Generator::Zero
                | Generator::Add
                | Generator::Scalar(_)
                | Generator::One
                | Generator::StdNormal
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TermError {
    #[error("type mismatch: codomain {left_cod} does not match domain {right_dom}")]
    TypeMismatch { left_cod: TypeWord, right_dom: TypeWord },
    #[error("flip bias {0} is outside [0, 1]")]
    BiasOutOfRange(Scalar),
    #[error("generator `{0}` needs a parameter")]
    MissingParam(&'static str),
    #[error("generator `{0}` takes no parameter")]
    UnexpectedParam(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Gen(Generator),
    Id(TypeWord),
    Swap(Colour, Colour),
    Seq(Term, Term),
    Par(Term, Term),
}

#[derive(Debug, PartialEq)]
struct Inner {
    node: Node,
    dom: TypeWord,
    cod: TypeWord,
}

/// An immutable, well-typed circuit term.
///
/// Equality is structural: `(a ; b) ; c` and `a ; (b ; c)` are different
/// terms with the same semantics. Cloning is cheap (shared `Arc`).
#[derive(Clone, Debug, PartialEq)]
pub struct Term(Arc<Inner>);

impl Term {
    fn make(node: Node, dom: TypeWord, cod: TypeWord) -> Term {
        Term(Arc::new(Inner { node, dom, cod }))
    }

    pub fn gen(g: Generator) -> Result<Term, TermError> {
        if let Generator::Flip(p) = &g {
            if p.signum_tol(0.0) == std::cmp::Ordering::Less || (p - &Scalar::one()).signum_tol(0.0).is_gt() {
                return Err(TermError::BiasOutOfRange(p.clone()));
            }
        }
        let (dom, cod) = g.kind().signature();
        Ok(Term::make(Node::Gen(g), dom, cod))
    }

    /// Builds a generator from a kind and an optional parameter.
    pub fn generator(kind: GeneratorKind, param: Option<Scalar>) -> Result<Term, TermError> {
        let g = match (kind, param) {
            (GeneratorKind::Flip, Some(p)) => Generator::Flip(p),
            (GeneratorKind::Scalar, Some(k)) => Generator::Scalar(k),
            (k, None) if k.takes_param() => return Err(TermError::MissingParam(k.keyword())),
            (k, Some(_)) if !k.takes_param() => return Err(TermError::UnexpectedParam(k.keyword())),
            (GeneratorKind::BoolDiscard, None) => Generator::BoolDiscard,
            (GeneratorKind::BoolCopy, None) => Generator::BoolCopy,
            (GeneratorKind::And, None) => Generator::And,
            (GeneratorKind::Not, None) => Generator::Not,
            (GeneratorKind::RealDiscard, None) => Generator::RealDiscard,
            (GeneratorKind::RealCopy, None) => Generator::RealCopy,
            (GeneratorKind::Zero, None) => Generator::Zero,
            (GeneratorKind::Add, None) => Generator::Add,
            (GeneratorKind::One, None) => Generator::One,
            (GeneratorKind::StdNormal, None) => Generator::StdNormal,
            (GeneratorKind::Ite, None) => Generator::Ite,
            _ => unreachable!("parameter handling covered above"),
        };
        Term::gen(g)
    }

    pub fn id(word: TypeWord) -> Term {
        Term::make(Node::Id(word.clone()), word.clone(), word)
    }

    pub fn id_colour(c: Colour) -> Term {
        Term::id(TypeWord::single(c))
    }

    pub fn swap(a: Colour, b: Colour) -> Term {
        Term::make(Node::Swap(a, b), TypeWord(vec![a, b]), TypeWord(vec![b, a]))
    }

    pub fn seq(s: &Term, t: &Term) -> Result<Term, TermError> {
        if s.cod() != t.dom() {
            return Err(TermError::TypeMismatch { left_cod: s.cod().clone(), right_dom: t.dom().clone() });
        }
        Ok(Term::make(Node::Seq(s.clone(), t.clone()), s.dom().clone(), t.cod().clone()))
    }

    pub fn par(s: &Term, t: &Term) -> Term {
        Term::make(Node::Par(s.clone(), t.clone()), s.dom().concat(t.dom()), s.cod().concat(t.cod()))
    }

    /// Method form of [`Term::seq`].
    pub fn then(&self, t: &Term) -> Result<Term, TermError> {
        Term::seq(self, t)
    }

    /// Method form of [`Term::par`].
    pub fn tensor(&self, t: &Term) -> Term {
        Term::par(self, t)
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn dom(&self) -> &TypeWord {
        &self.0.dom
    }

    pub fn cod(&self) -> &TypeWord {
        &self.0.cod
    }

    pub fn type_of(&self) -> (TypeWord, TypeWord) {
        (self.0.dom.clone(), self.0.cod.clone())
    }

    /// Address of the shared node; stable for the lifetime of the term.
    pub fn node_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn children(&self) -> Vec<&Term> {
        match self.node() {
            Node::Seq(a, b) | Node::Par(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Visits every generator occurrence, left to right.
    pub fn for_each_generator(&self, f: &mut impl FnMut(&Generator)) {
        match self.node() {
            Node::Gen(g) => f(g),
            Node::Seq(a, b) | Node::Par(a, b) => {
                a.for_each_generator(f);
                b.for_each_generator(f);
            }
            Node::Id(_) | Node::Swap(..) => {}
        }
    }

    pub fn generator_count(&self) -> usize {
        let mut n = 0;
        self.for_each_generator(&mut |_| n += 1);
        n
    }

    pub fn count_kind(&self, kind: GeneratorKind) -> usize {
        let mut n = 0;
        self.for_each_generator(&mut |g| {
            if g.kind() == kind {
                n += 1
            }
        });
        n
    }

    /// True when every parameter literal is an exact rational.
    pub fn is_exact(&self) -> bool {
        let mut exact = true;
        self.for_each_generator(&mut |g| {
            if let Some(p) = g.param() {
                exact &= p.is_rational();
            }
        });
        exact
    }

    /// Rebuilds the term with every parameter passed through `f`.
    pub fn map_params(&self, f: &impl Fn(&Scalar) -> Scalar) -> Term {
        match self.node() {
            Node::Gen(g) => match g.param() {
                Some(p) => Term::make(Node::Gen(g.with_param(f(p))), self.dom().clone(), self.cod().clone()),
                None => self.clone(),
            },
            Node::Seq(a, b) => Term::make(
                Node::Seq(a.map_params(f), b.map_params(f)),
                self.dom().clone(),
                self.cod().clone(),
            ),
            Node::Par(a, b) => Term::make(
                Node::Par(a.map_params(f), b.map_params(f)),
                self.dom().clone(),
                self.cod().clone(),
            ),
            Node::Id(_) | Node::Swap(..) => self.clone(),
        }
    }

    /// Subterm reached by following child indices (0 = left, 1 = right).
    pub fn at_path(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            cur = *cur.children().get(i)?;
        }
        Some(cur)
    }

    /// Replaces the subterm at `path`; `replacement` must have the same
    /// boundary words as the subterm it replaces.
    pub fn replace_at(&self, path: &[usize], replacement: &Term) -> Option<Term> {
        let Some((&first, rest)) = path.split_first() else {
            return (replacement.dom() == self.dom() && replacement.cod() == self.cod())
                .then(|| replacement.clone());
        };
        match self.node() {
            Node::Seq(a, b) => match first {
                0 => Term::seq(&a.replace_at(rest, replacement)?, b).ok(),
                1 => Term::seq(a, &b.replace_at(rest, replacement)?).ok(),
                _ => None,
            },
            Node::Par(a, b) => match first {
                0 => Some(Term::par(&a.replace_at(rest, replacement)?, b)),
                1 => Some(Term::par(a, &b.replace_at(rest, replacement)?)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        match self.node() {
            Node::Seq(a, b) | Node::Par(a, b) => 1 + a.depth().max(b.depth()),
            _ => 0,
        }
    }
}

/// Debug-friendly rendering in the concrete syntax.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::dsl::print(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(kind: GeneratorKind) -> Term {
        Term::generator(kind, None).unwrap()
    }

    #[test]
    fn generator_signatures() {
        let flip = Term::generator(GeneratorKind::Flip, Some(Scalar::ratio(1, 2))).unwrap();
        assert_eq!(flip.type_of(), (TypeWord::empty(), TypeWord::parse("B").unwrap()));
        assert_eq!(g(GeneratorKind::Ite).type_of(), (TypeWord::parse("BRR").unwrap(), TypeWord::parse("R").unwrap()));
        assert_eq!(g(GeneratorKind::Add).type_of(), (TypeWord::parse("RR").unwrap(), TypeWord::parse("R").unwrap()));
    }

    #[test]
    fn parameter_errors() {
        assert_eq!(
            Term::generator(GeneratorKind::Flip, Some(Scalar::ratio(3, 2))),
            Err(TermError::BiasOutOfRange(Scalar::ratio(3, 2)))
        );
        assert!(matches!(Term::generator(GeneratorKind::Flip, Some(Scalar::Float(-0.1))), Err(TermError::BiasOutOfRange(_))));
        assert_eq!(Term::generator(GeneratorKind::Scalar, None), Err(TermError::MissingParam("scal")));
        assert_eq!(
            Term::generator(GeneratorKind::And, Some(Scalar::one())),
            Err(TermError::UnexpectedParam("and"))
        );
        assert!(Term::generator(GeneratorKind::Flip, Some(Scalar::one())).is_ok());
        assert!(Term::generator(GeneratorKind::Flip, Some(Scalar::zero())).is_ok());
    }

    #[test]
    fn sequential_typing() {
        let flip = Term::generator(GeneratorKind::Flip, Some(Scalar::ratio(3, 10))).unwrap();
        let t = Term::seq(&flip, &g(GeneratorKind::Not)).unwrap();
        assert_eq!(t.type_of(), (TypeWord::empty(), TypeWord::parse("B").unwrap()));

        let t = Term::seq(&Term::id_colour(Colour::R), &g(GeneratorKind::RealCopy)).unwrap();
        assert_eq!(t.type_of(), (TypeWord::parse("R").unwrap(), TypeWord::parse("RR").unwrap()));

        let err = Term::seq(&g(GeneratorKind::And), &g(GeneratorKind::RealCopy)).unwrap_err();
        assert_eq!(
            err,
            TermError::TypeMismatch { left_cod: TypeWord::parse("B").unwrap(), right_dom: TypeWord::parse("R").unwrap() }
        );
    }

    #[test]
    fn parallel_typing() {
        let t = Term::par(&Term::id_colour(Colour::B), &g(GeneratorKind::StdNormal));
        assert_eq!(t.type_of(), (TypeWord::parse("B").unwrap(), TypeWord::parse("BR").unwrap()));

        let unit = Term::par(&Term::id(TypeWord::empty()), &g(GeneratorKind::Ite));
        assert_eq!(unit.type_of(), g(GeneratorKind::Ite).type_of());

        let p = Term::generator(GeneratorKind::Flip, Some(Scalar::ratio(1, 3))).unwrap();
        let q = Term::generator(GeneratorKind::Flip, Some(Scalar::ratio(1, 4))).unwrap();
        assert_eq!(Term::par(&p, &q).cod(), &TypeWord::parse("BB").unwrap());
    }

    #[test]
    fn boundary_types_of_plumbing() {
        assert_eq!(Term::id(TypeWord::empty()).type_of(), (TypeWord::empty(), TypeWord::empty()));
        assert_eq!(
            Term::swap(Colour::B, Colour::R).type_of(),
            (TypeWord::parse("BR").unwrap(), TypeWord::parse("RB").unwrap())
        );
    }

    #[test]
    fn paths_and_replacement() {
        let t = Term::seq(&g(GeneratorKind::RealCopy), &Term::par(&Term::id_colour(Colour::R), &g(GeneratorKind::RealCopy))).unwrap();
        assert_eq!(t.at_path(&[1, 1]), Some(&g(GeneratorKind::RealCopy)));
        assert!(t.at_path(&[0, 0]).is_none());
        let r = t.replace_at(&[1, 0], &Term::seq(&Term::id_colour(Colour::R), &Term::id_colour(Colour::R)).unwrap()).unwrap();
        assert_eq!(r.type_of(), t.type_of());
        assert!(t.replace_at(&[1, 0], &g(GeneratorKind::RealCopy)).is_none());
    }
}
