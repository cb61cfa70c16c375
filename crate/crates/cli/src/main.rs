//! `cgm`: parse, evaluate, compare, normalize, sample and render circuits.
//!
//! Exit codes: 0 success, 1 parse/type/usage error, 2 Boolean input cap
//! exceeded, 3 not equivalent (or an axiom/rewrite check failed), 4 boundary
//! mismatch, 5 rewrite pattern did not match.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use cgm_core::axioms::{check_soundness, find_axiom, list_axioms, parse_script, run_script, AxiomError, SoundnessOptions};
use cgm_core::diagram::Term;
use cgm_core::dsl::{export_dot, parse_named, print, to_json_ast, DslError};
use cgm_core::exec::Execution;
use cgm_core::linalg::{Matrix, Scalar};
use cgm_core::normalform::{decide_equiv, disintegrate, emit_nf, NfError, NfTree};
use cgm_core::semantics::{
    eval, eval_row, sample_many, BitVec, CGMixture, EvalOptions, GaussComponent, SemanticsError,
    DEFAULT_BOOL_INPUT_CAP, DEFAULT_TOLERANCE,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Backend {
    /// Rational when every literal is rational, float otherwise.
    Auto,
    Rational,
    Float,
}

#[derive(Parser, Debug)]
#[command(name = "cgm", version, about = "String diagrams for conditional Gaussian mixtures")]
struct Cli {
    /// Equality tolerance for float computations (overrides CGM_TOLERANCE).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Maximum number of Boolean inputs for full-table evaluation.
    #[arg(long, global = true, default_value_t = DEFAULT_BOOL_INPUT_CAP)]
    cap: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true, value_enum, default_value_t = Backend::Auto)]
    backend: Backend,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the denotation of a circuit.
    Eval {
        file: PathBuf,
        /// Only the row for this Boolean input, e.g. `01`.
        #[arg(long)]
        input: Option<String>,
    },
    /// Decide whether two circuits denote the same mixture.
    Equiv { left: PathBuf, right: PathBuf },
    /// Write the normal-form circuit and its certificate.
    Normalize {
        file: PathBuf,
        /// Output circuit path; the certificate goes next to it as `.json`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the randomized soundness suite.
    Axioms {
        #[arg(long)]
        axiom: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Check the deliberately broken variants instead.
        #[arg(long)]
        mutant: bool,
        /// List the schemas and exit.
        #[arg(long)]
        list: bool,
    },
    /// Draw samples, one `(bits, reals)` line each.
    Sample {
        file: PathBuf,
        #[arg(short = 'n', default_value_t = 10)]
        count: usize,
        #[arg(long)]
        input: Option<String>,
        /// Real inputs, comma separated (zeros by default).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        reals: Vec<f64>,
    },
    /// Graphviz (default) or JSON rendering of the term.
    Render { file: PathBuf },
    /// Apply a rewrite script, checking the semantics after every step.
    Rewrite {
        file: PathBuf,
        script: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<DslError> for Failure {
    fn from(e: DslError) -> Self {
        Failure::new(1, e.to_string())
    }
}

impl From<SemanticsError> for Failure {
    fn from(e: SemanticsError) -> Self {
        match e {
            SemanticsError::InputCapExceeded { .. } => Failure::new(2, e.to_string()),
            _ => Failure::new(1, e.to_string()),
        }
    }
}

impl From<NfError> for Failure {
    fn from(e: NfError) -> Self {
        match e {
            NfError::TypeMismatch { .. } => Failure::new(4, e.to_string()),
            NfError::Semantics(s) => s.into(),
            _ => Failure::new(1, e.to_string()),
        }
    }
}

impl From<AxiomError> for Failure {
    fn from(e: AxiomError) -> Self {
        match e {
            AxiomError::NoMatch { .. } | AxiomError::InvalidPath(_) => Failure::new(5, e.to_string()),
            AxiomError::Unsound(_) => Failure::new(3, e.to_string()),
            AxiomError::Semantics(s) => s.into(),
            _ => Failure::new(1, e.to_string()),
        }
    }
}

struct Ctx {
    opts: EvalOptions,
    seed: u64,
    format: Format,
    backend: Backend,
}

impl Ctx {
    fn from_cli(cli: &Cli) -> Result<Self, Failure> {
        let tolerance = match cli.tolerance {
            Some(t) => t,
            None => match std::env::var("CGM_TOLERANCE") {
                Ok(s) => s.trim().parse().map_err(|_| Failure::new(1, format!("CGM_TOLERANCE=`{s}` is not a number")))?,
                Err(_) => DEFAULT_TOLERANCE,
            },
        };
        if !(tolerance > 0.0) {
            return Err(Failure::new(1, format!("tolerance must be positive, got {tolerance}")));
        }
        Ok(Ctx {
            opts: EvalOptions { tolerance, bool_input_cap: cli.cap },
            seed: cli.seed,
            format: cli.format,
            backend: cli.backend,
        })
    }

    fn load(&self, path: &Path) -> Result<Term, Failure> {
        let src = read(path)?;
        let t = parse_named(&src, &path.display().to_string())?;
        Ok(match self.backend {
            Backend::Auto => t,
            Backend::Rational => t.map_params(&Scalar::to_exact),
            Backend::Float => t.map_params(&Scalar::to_float),
        })
    }

    fn json(&self) -> bool {
        self.format == Format::Json
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

fn parse_bits(s: &str, expected: usize) -> Result<BitVec, Failure> {
    let bits = BitVec::parse(s).ok_or_else(|| Failure::new(1, format!("`{s}` is not a bit string")))?;
    if bits.len() != expected {
        return Err(Failure::new(1, format!("input `{s}` has {} bits, the circuit takes {expected}", bits.len())));
    }
    Ok(bits)
}

fn certificate_hash(nf: &NfTree) -> String {
    let canonical = serde_json::to_string(&nf.to_json()).expect("JSON values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// `[1, 2; 3, 4]`, or `[]` for an empty matrix.
fn matrix_text(m: &Matrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))
        .collect();
    if m.cols() == 0 {
        return "[]".into();
    }
    format!("[{}]", rows.join("; "))
}

fn component_line(c: &GaussComponent) -> String {
    format!(
        "{} * [{}] N(A={}, mu={}, cov={})",
        c.weight,
        c.bool_out,
        matrix_text(&c.a),
        matrix_text(&c.mu),
        matrix_text(&c.cov.gram())
    )
}

fn print_mixture(m: &CGMixture) {
    println!("{} -> {}", m.in_word(), m.out_word());
    let p = m.in_word().bools();
    for (a, row) in m.rows().iter().enumerate() {
        println!("[{}]", BitVec::from_index(a, p));
        for c in row {
            println!("  {}", component_line(c));
        }
    }
}

fn cmd_eval(ctx: &Ctx, file: &Path, input: Option<&str>) -> Result<(), Failure> {
    let t = ctx.load(file)?;
    match input {
        Some(bits) => {
            let a = parse_bits(bits, t.dom().bools())?;
            let row = eval_row(&t, &a, &ctx.opts)?;
            if ctx.json() {
                let comps: Vec<Value> = row.iter().map(GaussComponent::to_json).collect();
                println!("{}", json!({ "input": a.to_string(), "components": comps }));
            } else {
                println!("[{a}]");
                for c in &row {
                    println!("  {}", component_line(c));
                }
            }
        }
        None => {
            let m = eval(&t, &ctx.opts)?;
            if ctx.json() {
                println!("{}", m.to_json());
            } else {
                print_mixture(&m);
            }
        }
    }
    Ok(())
}

fn cmd_equiv(ctx: &Ctx, left: &Path, right: &Path) -> Result<(), Failure> {
    let (l, r) = (ctx.load(left)?, ctx.load(right)?);
    let e = decide_equiv(&l, &r, &ctx.opts)?;
    let hashes = (certificate_hash(&e.left), certificate_hash(&e.right));
    if ctx.json() {
        println!(
            "{}",
            json!({
                "equivalent": e.equivalent,
                "reordered": e.reordered,
                "leftHash": hashes.0,
                "rightHash": hashes.1,
                "difference": e.difference,
            })
        );
    } else if e.equivalent {
        println!("EQUIVALENT sha256:{}", hashes.0);
        if e.reordered {
            println!("note: boundary words agree up to wire reordering");
        }
    } else {
        println!("NOT EQUIVALENT: {}", e.difference.as_deref().unwrap_or("certificates differ"));
    }
    if e.equivalent {
        Ok(())
    } else {
        Err(Failure::new(3, String::new()))
    }
}

fn cmd_normalize(ctx: &Ctx, file: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let t = ctx.load(file)?;
    let nf = disintegrate(&eval(&t, &ctx.opts)?, ctx.opts.tolerance);
    let emitted = emit_nf(&nf, ctx.opts.tolerance)?;
    let out = match output {
        Some(p) => p.to_path_buf(),
        None => file.with_extension("nf.cgm"),
    };
    let cert_path = out.with_extension("json");
    let cert = serde_json::to_string_pretty(&nf.to_json()).expect("JSON values serialize");
    write(&out, &format!("{}\n", print(&emitted)))?;
    write(&cert_path, &format!("{cert}\n"))?;
    let hash = certificate_hash(&nf);
    if ctx.json() {
        println!("{}", json!({ "circuit": out.display().to_string(), "certificate": cert_path.display().to_string(), "hash": hash }));
    } else {
        println!("wrote {} and {}", out.display(), cert_path.display());
        println!("certificate sha256:{hash}");
    }
    Ok(())
}

fn cmd_axioms(ctx: &Ctx, axiom: Option<&str>, trials: usize, mutant: bool, list: bool) -> Result<(), Failure> {
    let schemas = match axiom {
        Some(name) => vec![find_axiom(name)?],
        None => list_axioms().iter().collect(),
    };
    if list {
        for s in &schemas {
            let vars: Vec<&str> = s.metavars.iter().map(|m| m.name).collect();
            println!("{:<18} [{}] {}", s.name, vars.join(","), s.description);
        }
        return Ok(());
    }
    let opts = SoundnessOptions {
        eval: ctx.opts,
        floats: ctx.backend == Backend::Float,
        exec: Execution::default(),
        mutant,
    };
    let reports: Vec<_> = schemas.iter().map(|s| check_soundness(s, trials, ctx.seed, &opts)).collect();
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if ctx.json() {
        let all: Vec<Value> = reports.iter().map(|r| r.to_json()).collect();
        println!("{}", Value::Array(all));
    } else {
        for r in &reports {
            let verdict = if r.passed() { "PASS" } else { "FAIL" };
            println!(
                "{verdict} {:<18} {} trials, {} failures, max deviation {:e}",
                r.axiom,
                r.trials,
                r.failures.len(),
                r.max_deviation
            );
            for f in r.failures.iter().take(3) {
                println!("    trial {}: {}", f.trial, f.binding);
            }
        }
        println!("{} of {} schemas passed", reports.len() - failed, reports.len());
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::new(3, format!("{failed} schema(s) failed")))
    }
}

fn cmd_sample(ctx: &Ctx, file: &Path, count: usize, input: Option<&str>, reals: &[f64]) -> Result<(), Failure> {
    let t = ctx.load(file)?;
    let p = t.dom().bools();
    let a = match input {
        Some(bits) => parse_bits(bits, p)?,
        None => BitVec::new(vec![false; p]),
    };
    let m = t.dom().reals();
    let x = if reals.is_empty() { vec![0.0; m] } else { reals.to_vec() };
    if x.len() != m {
        return Err(Failure::new(1, format!("{} real inputs given, the circuit takes {m}", x.len())));
    }
    let mix = eval(&t, &ctx.opts)?;
    let draws = sample_many(&mix, &a, &x, count, ctx.seed, Execution::default())?;
    let mut out = String::with_capacity(draws.len() * 32);
    for (bits, ys) in draws {
        if ctx.json() {
            out.push_str(&json!({ "bits": bits.to_string(), "reals": ys }).to_string());
        } else {
            let ys: Vec<String> = ys.iter().map(|y| y.to_string()).collect();
            out.push_str(&format!("({bits}, [{}])", ys.join(", ")));
        }
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

fn cmd_render(ctx: &Ctx, file: &Path) -> Result<(), Failure> {
    let t = ctx.load(file)?;
    if ctx.json() {
        println!("{}", to_json_ast(&t));
    } else {
        print!("{}", export_dot(&t));
    }
    Ok(())
}

fn cmd_rewrite(ctx: &Ctx, file: &Path, script: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let t = ctx.load(file)?;
    let steps = parse_script(&read(script)?).map_err(|e| Failure::new(1, format!("{}: {e}", script.display())))?;
    let trace = run_script(&t, &steps, &ctx.opts).map_err(|(line, e)| {
        let f = Failure::from(e);
        Failure::new(f.code, format!("{}:{line}: {}", script.display(), f.message))
    })?;
    let last = print(trace.last().expect("trace starts with the input"));
    if let Some(p) = output {
        write(p, &format!("{last}\n"))?;
    }
    if ctx.json() {
        let terms: Vec<String> = trace.iter().map(print).collect();
        println!("{}", json!({ "steps": steps.len(), "trace": terms }));
    } else {
        for (i, term) in trace.iter().enumerate().skip(1) {
            println!("# after step {i} ({})", steps[i - 1].axiom);
            println!("{}", print(term));
        }
        if trace.len() == 1 {
            println!("{last}");
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let ctx = Ctx::from_cli(cli)?;
    match &cli.command {
        Command::Eval { file, input } => cmd_eval(&ctx, file, input.as_deref()),
        Command::Equiv { left, right } => cmd_equiv(&ctx, left, right),
        Command::Normalize { file, output } => cmd_normalize(&ctx, file, output.as_deref()),
        Command::Axioms { axiom, trials, mutant, list } => cmd_axioms(&ctx, axiom.as_deref(), *trials, *mutant, *list),
        Command::Sample { file, count, input, reals } => cmd_sample(&ctx, file, *count, input.as_deref(), reals),
        Command::Render { file } => cmd_render(&ctx, file),
        Command::Rewrite { file, script, output } => cmd_rewrite(&ctx, file, script, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("cgm: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
