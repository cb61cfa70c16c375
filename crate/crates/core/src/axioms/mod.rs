//! The equational theory as data: axiom schemas with metavariables, a
//! randomized soundness harness, and single-step rewriting.

mod catalog;
mod rewrite;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub use catalog::{build_catalog, e10_rhs_weights};
pub use rewrite::{flatten, parse_script, rewrite_at, run_script, Direction, RewriteStep, ScriptError};

use crate::diagram::{Colour, Term};
use crate::exec::Execution;
use crate::linalg::Scalar;
use crate::semantics::{deviation, eval, EvalOptions, SemanticsError};

#[derive(Clone, Debug, PartialEq)]
pub enum MetaKind {
    /// A circuit; the constraint is described in words and checked by the
    /// schema's builder.
    Circuit(&'static str),
    /// A scalar with a range constraint.
    Scalar(&'static str),
    Colour,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaVar {
    pub name: &'static str,
    pub kind: MetaKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Bound {
    Term(Term),
    Scalar(Scalar),
    Colour(Colour),
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Term(t) => write!(f, "{{{t}}}"),
            Bound::Scalar(s) => write!(f, "{s}"),
            Bound::Colour(c) => write!(f, "{c}"),
        }
    }
}

/// Metavariable assignment, ordered by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Binding(pub BTreeMap<String, Bound>);

impl Binding {
    pub fn new() -> Self {
        Binding::default()
    }

    pub fn with(mut self, name: &str, value: Bound) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn term(&self, name: &str) -> Result<&Term, AxiomError> {
        match self.0.get(name) {
            Some(Bound::Term(t)) => Ok(t),
            _ => Err(AxiomError::MissingBinding(name.to_string())),
        }
    }

    pub fn scalar(&self, name: &str) -> Result<&Scalar, AxiomError> {
        match self.0.get(name) {
            Some(Bound::Scalar(s)) => Ok(s),
            _ => Err(AxiomError::MissingBinding(name.to_string())),
        }
    }

    pub fn colour(&self, name: &str) -> Result<Colour, AxiomError> {
        match self.0.get(name) {
            Some(Bound::Colour(c)) => Ok(*c),
            _ => Err(AxiomError::MissingBinding(name.to_string())),
        }
    }

    /// `p=1/2 c={copyR ; add}` style dump, parseable by rewrite scripts.
    pub fn dump(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AxiomError {
    #[error("inadmissible binding: {0}")]
    InadmissibleBinding(String),
    #[error("metavariable `{0}` is unbound or has the wrong kind")]
    MissingBinding(String),
    #[error("unknown axiom `{0}`")]
    UnknownAxiom(String),
    #[error("no subterm at path {0:?}")]
    InvalidPath(Vec<usize>),
    #[error("no match at {position}: expected `{expected}`, found `{found}`")]
    NoMatch { position: String, expected: String, found: String },
    #[error("rewrite changed the semantics at step {0}")]
    Unsound(usize),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

pub type Builder = Arc<dyn Fn(&Binding) -> Result<(Term, Term), AxiomError> + Send + Sync>;
pub type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Binding + Send + Sync>;

/// One equation schema `lhs = rhs`.
#[derive(Clone)]
pub struct AxiomSchema {
    pub name: String,
    pub description: &'static str,
    pub metavars: Vec<MetaVar>,
    builder: Builder,
    sampler: Sampler,
    mutant: Builder,
    pub mutant_description: &'static str,
}

impl fmt::Debug for AxiomSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AxiomSchema").field("name", &self.name).field("metavars", &self.metavars).finish()
    }
}

impl AxiomSchema {
    pub fn new(
        name: impl Into<String>,
        description: &'static str,
        metavars: Vec<MetaVar>,
        builder: Builder,
        sampler: Sampler,
        mutant: Builder,
        mutant_description: &'static str,
    ) -> Self {
        AxiomSchema { name: name.into(), description, metavars, builder, sampler, mutant, mutant_description }
    }

    /// Closed `(lhs, rhs)` for the binding.
    pub fn instantiate(&self, b: &Binding) -> Result<(Term, Term), AxiomError> {
        let (l, r) = (self.builder)(b)?;
        debug_assert_eq!(l.type_of(), r.type_of(), "schema {} is ill-typed", self.name);
        Ok((l, r))
    }

    /// A deliberately wrong variant, used to show the harness can fail.
    pub fn instantiate_mutant(&self, b: &Binding) -> Result<(Term, Term), AxiomError> {
        (self.mutant)(b)
    }

    pub fn sample_binding(&self, rng: &mut ChaCha8Rng) -> Binding {
        (self.sampler)(rng)
    }

    /// Reads a binding from `name=value` pairs according to the metavariable
    /// kinds of this schema.
    pub fn parse_binding(&self, src: &str) -> Result<Binding, AxiomError> {
        let raw = crate::dsl::split_bindings(src).map_err(AxiomError::InadmissibleBinding)?;
        let mut b = Binding::new();
        for (name, value) in raw {
            let mv = self
                .metavars
                .iter()
                .find(|m| m.name == name)
                .ok_or_else(|| AxiomError::InadmissibleBinding(format!("`{name}` is not a metavariable of {}", self.name)))?;
            let bound = match mv.kind {
                MetaKind::Scalar(_) => Bound::Scalar(
                    value.parse().map_err(|e| AxiomError::InadmissibleBinding(format!("{name}: {e}")))?,
                ),
                MetaKind::Circuit(_) => Bound::Term(
                    crate::dsl::parse(&value).map_err(|e| AxiomError::InadmissibleBinding(format!("{name}: {e}")))?,
                ),
                MetaKind::Colour => Bound::Colour(
                    value
                        .chars()
                        .next()
                        .filter(|_| value.len() == 1)
                        .and_then(Colour::from_char)
                        .ok_or_else(|| AxiomError::InadmissibleBinding(format!("{name}: `{value}` is not a colour")))?,
                ),
            };
            b.0.insert(name, bound);
        }
        Ok(b)
    }
}

/// The full catalog, built once.
pub fn list_axioms() -> &'static [AxiomSchema] {
    static CATALOG: OnceLock<Vec<AxiomSchema>> = OnceLock::new();
    CATALOG.get_or_init(build_catalog)
}

pub fn find_axiom(name: &str) -> Result<&'static AxiomSchema, AxiomError> {
    list_axioms().iter().find(|a| a.name == name).ok_or_else(|| AxiomError::UnknownAxiom(name.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialFailure {
    pub trial: usize,
    pub binding: String,
    pub lhs: Value,
    pub rhs: Value,
    /// `None` when the component structure already differs.
    pub deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoundnessReport {
    pub axiom: String,
    pub trials: usize,
    pub failures: Vec<TrialFailure>,
    /// Largest deviation seen in any trial that was structurally comparable.
    pub max_deviation: f64,
}

impl SoundnessReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.axiom,
            "trials": self.trials,
            "failures": self.failures.iter().map(|f| json!({
                "bindingDump": f.binding,
                "deviation": f.deviation,
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SoundnessOptions {
    pub eval: EvalOptions,
    /// Convert every literal to a float before evaluating.
    pub floats: bool,
    pub exec: Execution,
    /// Check the schema's mutant instead of the schema.
    pub mutant: bool,
}

impl Default for SoundnessOptions {
    fn default() -> Self {
        SoundnessOptions { eval: EvalOptions::default(), floats: false, exec: Execution::default(), mutant: false }
    }
}

/// The RNG for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Evaluates both sides of `trials` random instances and reports every
/// disagreement. Exact instances must agree exactly; float instances within
/// the tolerance.
pub fn check_soundness(schema: &AxiomSchema, trials: usize, seed: u64, opts: &SoundnessOptions) -> SoundnessReport {
    let outcomes = opts.exec.map_indexed(trials, |i| run_trial(schema, i, seed, opts));
    let mut failures = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for o in outcomes {
        match o {
            Ok(d) => max_deviation = max_deviation.max(d),
            Err(f) => {
                if let Some(d) = f.deviation {
                    max_deviation = max_deviation.max(d);
                }
                failures.push(f);
            }
        }
    }
    SoundnessReport { axiom: schema.name.clone(), trials, failures, max_deviation }
}

fn run_trial(schema: &AxiomSchema, trial: usize, seed: u64, opts: &SoundnessOptions) -> Result<f64, TrialFailure> {
    let mut rng = trial_rng(seed, trial);
    let binding = schema.sample_binding(&mut rng);
    let fail = |lhs: Value, rhs: Value, deviation| TrialFailure {
        trial,
        binding: binding.dump(),
        lhs,
        rhs,
        deviation,
    };
    let pair = if opts.mutant { schema.instantiate_mutant(&binding) } else { schema.instantiate(&binding) };
    let (mut l, mut r) = pair.map_err(|e| fail(json!(e.to_string()), Value::Null, None))?;
    if opts.floats {
        l = l.map_params(&Scalar::to_float);
        r = r.map_params(&Scalar::to_float);
    }
    let (ml, mr) = match (eval(&l, &opts.eval), eval(&r, &opts.eval)) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            let show = |m: Result<_, SemanticsError>| match m {
                Ok(m) => crate::semantics::CGMixture::to_json(&m),
                Err(e) => json!(e.to_string()),
            };
            return Err(fail(show(a), show(b), None));
        }
    };
    let exact = ml.is_exact() && mr.is_exact();
    let tol = if exact { 0.0 } else { opts.eval.tolerance };
    match deviation(&ml, &mr, tol) {
        Ok(Some(d)) if d <= tol => Ok(d),
        Ok(d) => Err(fail(ml.to_json(), mr.to_json(), d)),
        Err(_) => Err(fail(ml.to_json(), mr.to_json(), None)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_shape() {
        let names: Vec<&str> = list_axioms().iter().map(|a| a.name.as_str()).collect();
        for n in ["A1", "A2l", "A2r", "A3", "B1", "B3", "C1[add]", "C2[not]", "D2[flip]", "E1l", "E2z", "E10", "interchange"] {
            assert!(names.contains(&n), "{n} missing");
        }
        let unique: std::collections::BTreeSet<_> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
    }

    #[test]
    fn e10_weights() {
        let e10 = find_axiom("E10").unwrap();
        let b = Binding::new().with("p", Bound::Scalar(Scalar::ratio(1, 2))).with("q", Bound::Scalar(Scalar::ratio(1, 2)));
        let (_, rhs) = e10.instantiate(&b).unwrap();
        let text = rhs.to_string();
        assert!(text.contains("flip(1/4)") && text.contains("flip(1/3)"), "{text}");
        let b = Binding::new().with("p", Bound::Scalar(Scalar::one())).with("q", Bound::Scalar(Scalar::one()));
        assert!(matches!(e10.instantiate(&b), Err(AxiomError::InadmissibleBinding(_))));
    }

    #[test]
    fn e4_rejects_boolean_input() {
        let e4 = find_axiom("E4").unwrap();
        let c = crate::dsl::parse("add").unwrap();
        let d = crate::dsl::parse("delB * id(R)").unwrap();
        let b = Binding::new().with("c", Bound::Term(c)).with("d", Bound::Term(d));
        assert!(matches!(e4.instantiate(&b), Err(AxiomError::InadmissibleBinding(_))));
    }

    #[test]
    fn quick_soundness_and_mutants() {
        let opts = SoundnessOptions::default();
        for a in list_axioms() {
            let r = check_soundness(a, 10, 5, &opts);
            assert!(r.passed(), "{}: {:?}", a.name, r.failures.first());
            let m = check_soundness(a, 30, 5, &SoundnessOptions { mutant: true, ..opts });
            assert!(!m.passed(), "mutant of {} survived", a.name);
        }
    }

    #[test]
    fn binding_parse_round_trip() {
        let e5 = find_axiom("E5").unwrap();
        let b = e5.parse_binding("c={copyR ; add}").unwrap();
        assert_eq!(e5.parse_binding(&b.dump()).unwrap(), b);
    }
}
