//! `tclab`: build, evaluate, measure and analyze threshold circuits.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage or
//! input errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use tclab::analyzer::{self, FamilyBound};
use tclab::boolmat::{builtin_oracle, comm_matrix, BuiltinFunction, DEFAULT_ROW_LIMIT};
use tclab::circuit::{self, Assignment};
use tclab::compiler::{compile, CompileOptions};
use tclab::constructions::{build_conj_circuit, build_disj_circuit, build_eq_circuit};
use tclab::corpus::{self, CorpusConfig, ThresholdMode};
use tclab::{DiscretizedCircuit, ThresholdCircuit};

#[derive(Parser)]
#[command(name = "tclab", version, about = "Threshold circuit lab")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a CONJ, DISJ or EQ circuit of given energy and depth.
    Build(BuildArgs),
    /// Evaluate a circuit on one assignment.
    Eval(EvalArgs),
    /// Size, depth, energy and weight of a circuit.
    Measure(CircuitArg),
    /// F2 rank of a circuit's or a named function's communication matrix.
    Rank(RankArgs),
    /// Compare log2 rank with e d (log2 s + log2 w + log2 n).
    CheckBound(CircuitArg),
    /// Check the internal-representation decomposition exhaustively.
    VerifyDecomposition(DecompositionArgs),
    /// Compile a discretized circuit into a threshold circuit.
    Compile(CompileArgs),
    /// Bound sweep over seeded random circuits, as CSV.
    Corpus(CorpusArgs),
    /// Bound for the built CONJ circuit against 4n + C e d log2 n.
    Tightness(TightnessArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Conj,
    Disj,
    Eq,
}

#[derive(Args)]
struct BuildArgs {
    target: TargetArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    e: usize,
    #[arg(long)]
    d: usize,
    /// Circuit JSON destination; without it the circuit is printed with the measures.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CircuitArg {
    #[arg(long)]
    circuit: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Bitstring for x, first character is x_1.
    #[arg(long)]
    a: String,
    /// Bitstring for y, first character is y_1.
    #[arg(long)]
    b: String,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long, conflicts_with_all = ["function", "n"], required_unless_present = "function")]
    circuit: Option<PathBuf>,
    /// conj, and_or, eq, ip, disj or disj_k.
    #[arg(long, requires = "n")]
    function: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Weight cap for disj_k; defaults to n.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    /// |T| <= e - 1
    #[value(name = "e-1")]
    EnergyMinusOne,
    /// |T| <= e
    #[value(name = "e")]
    Energy,
    /// every T between Q_l and T_l
    All,
}

#[derive(Args)]
struct DecompositionArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Size cap on the sets T entering H[Q_l].
    #[arg(long, value_enum, default_value = "e-1")]
    family: FamilyArg,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Threshold circuit JSON destination; without it the circuit is printed with the report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the exhaustive equivalence check.
    #[arg(long)]
    no_verify: bool,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    min_size: usize,
    #[arg(long, default_value_t = 8)]
    max_size: usize,
    #[arg(long, default_value_t = 3)]
    weight: i128,
    /// Draw thresholds low so most gates fire.
    #[arg(long)]
    eager: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TightnessArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    e: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = analyzer::DEFAULT_TIGHTNESS_C)]
    c: f64,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
}

type Outcome = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Failed(_) => 1,
                CliError::Usage(_) => 2,
            })
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Build(a) => build(a),
        Command::Eval(a) => eval(a),
        Command::Measure(a) => measure(a),
        Command::Rank(a) => rank(a),
        Command::CheckBound(a) => check_bound(a),
        Command::VerifyDecomposition(a) => verify_decomposition(a),
        Command::Compile(a) => compile_cmd(a),
        Command::Corpus(a) => corpus_cmd(a),
        Command::Tightness(a) => tightness(a),
    }
}

/// JSON number when exactly representable as a double, else a string.
fn num(v: i128) -> Value {
    if v.unsigned_abs() < 1 << 53 {
        json!(v as i64)
    } else {
        json!(v.to_string())
    }
}

/// Writes to stdout; a closed pipe ends output quietly.
fn emit(text: &str) -> Outcome {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::usage(e)),
        _ => Ok(()),
    }
}

fn print_json(v: &impl serde::Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(v).map_err(CliError::usage)?;
    emit(&format!("{text}\n"))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

enum Loaded {
    Threshold(ThresholdCircuit),
    Discretized(DiscretizedCircuit),
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if value.get("kind").and_then(Value::as_str) == Some("discretized") {
        DiscretizedCircuit::from_json(&text).map(Loaded::Discretized).map_err(CliError::usage)
    } else {
        ThresholdCircuit::from_json(&text).map(Loaded::Threshold).map_err(CliError::usage)
    }
}

fn load_threshold(path: &Path) -> Result<ThresholdCircuit, CliError> {
    match load(path)? {
        Loaded::Threshold(c) => Ok(c),
        Loaded::Discretized(_) => Err(CliError::Usage("expected a threshold circuit".into())),
    }
}

fn build(a: BuildArgs) -> Outcome {
    let built = match a.target {
        TargetArg::Conj => build_conj_circuit(a.n, a.e, a.d),
        TargetArg::Disj => build_disj_circuit(a.n, a.e, a.d),
        TargetArg::Eq => build_eq_circuit(a.n, a.e, a.d),
    }
    .map_err(CliError::usage)?;
    let report = built.report();
    match a.out {
        Some(path) => {
            write_file(&path, &built.circuit.to_json())?;
            print_json(&report)?;
        }
        None => {
            let circuit: Value = serde_json::from_str(&built.circuit.to_json()).map_err(CliError::usage)?;
            print_json(&json!({ "circuit": circuit, "measures": report }))?;
        }
    }
    if report.bounds_ok {
        Ok(())
    } else {
        Err(CliError::Failed("measured values exceed the construction bounds".into()))
    }
}

fn eval(a: EvalArgs) -> Outcome {
    let input = Assignment::from_bitstrings(&a.a, &a.b).map_err(CliError::usage)?;
    let out = match load(&a.circuit)? {
        Loaded::Threshold(c) => {
            let t = c.evaluate(&input).map_err(CliError::usage)?;
            let gates: Vec<Value> = c
                .gates()
                .iter()
                .enumerate()
                .map(|(i, g)| json!({ "id": g.id, "potential": num(t.potentials[i]), "fires": t.bits[i] }))
                .collect();
            json!({ "output": t.output as u8, "trace": gates })
        }
        Loaded::Discretized(c) => {
            let t = c.evaluate(&input).map_err(CliError::usage)?;
            let gates: Vec<Value> = (0..c.hidden())
                .map(|i| json!({ "id": c.gate(i).id, "potential": num(t.potentials[i]), "code": num(t.codes[i]) }))
                .collect();
            json!({ "output": t.output as u8, "trace": gates })
        }
    };
    print_json(&out)
}

fn measure(a: CircuitArg) -> Outcome {
    match load(&a.circuit)? {
        Loaded::Threshold(c) => print_json(&circuit::measure(&c).map_err(CliError::usage)?),
        Loaded::Discretized(c) => print_json(&c.measure().map_err(CliError::usage)?),
    }
}

fn rank(a: RankArgs) -> Outcome {
    let report = match (a.circuit, a.function) {
        (Some(path), _) => match load(&path)? {
            Loaded::Threshold(c) => circuit::profile(&c).map_err(CliError::usage)?.matrix.rank_report(),
            Loaded::Discretized(c) => c.comm_matrix().map_err(CliError::usage)?.rank_report(),
        },
        (None, Some(name)) => {
            let n = a.n.ok_or_else(|| CliError::Usage("--function needs --n".into()))?;
            let k = if name.eq_ignore_ascii_case("disj") { a.k.or(Some(n)) } else { a.k };
            let name = if name.eq_ignore_ascii_case("disj") { "disj_k".to_string() } else { name };
            let function = BuiltinFunction::parse(&name, k).map_err(CliError::usage)?;
            let oracle = builtin_oracle(function, n).map_err(CliError::usage)?;
            comm_matrix(&oracle, DEFAULT_ROW_LIMIT).map_err(CliError::usage)?.rank_report()
        }
        (None, None) => return Err(CliError::Usage("give --circuit or --function".into())),
    };
    print_json(&report)
}

fn check_bound(a: CircuitArg) -> Outcome {
    let c = load_threshold(&a.circuit)?;
    let report = analyzer::check_bound(&c).map_err(CliError::usage)?;
    print_json(&report)?;
    if report.violation {
        return Err(CliError::Failed(format!(
            "log2 rank {:.6} exceeds {:.6} inside the hypotheses",
            report.lhs, report.rhs
        )));
    }
    Ok(())
}

fn verify_decomposition(a: DecompositionArgs) -> Outcome {
    let c = load_threshold(&a.circuit)?;
    let bound = match a.family {
        FamilyArg::EnergyMinusOne => FamilyBound::EnergyMinusOne,
        FamilyArg::Energy => FamilyBound::Energy,
        FamilyArg::All => FamilyBound::Unbounded,
    };
    let report = analyzer::verify_decomposition(&c, bound).map_err(CliError::usage)?;
    print_json(&report)?;
    if report.holds {
        Ok(())
    } else {
        let first = report.failures.first().and_then(|f| f.witness.as_ref());
        Err(CliError::Failed(match first {
            Some(w) => format!("decomposition check failed; first witness a={} b={}", w.a, w.b),
            None => "decomposition check failed".into(),
        }))
    }
}

fn compile_cmd(a: CompileArgs) -> Outcome {
    let source = match load(&a.circuit)? {
        Loaded::Discretized(c) => c,
        Loaded::Threshold(_) => return Err(CliError::Usage("expected a discretized circuit".into())),
    };
    let options = CompileOptions { verify: !a.no_verify };
    let compiled = compile(&source, options).map_err(|e| match e {
        tclab::CompileError::Mismatch { .. } => CliError::Failed(e.to_string()),
        other => CliError::usage(other),
    })?;
    match a.out {
        Some(path) => {
            write_file(&path, &compiled.circuit.to_json())?;
            print_json(&compiled.report)
        }
        None => {
            let circuit: Value = serde_json::from_str(&compiled.circuit.to_json()).map_err(CliError::usage)?;
            let report = serde_json::to_value(&compiled.report).map_err(CliError::usage)?;
            print_json(&json!({ "circuit": circuit, "report": report }))
        }
    }
}

fn corpus_cmd(a: CorpusArgs) -> Outcome {
    if a.min_size == 0 || a.min_size > a.max_size || a.weight < 1 || a.n == 0 {
        return Err(CliError::Usage("need n >= 1, weight >= 1 and 1 <= min-size <= max-size".into()));
    }
    let cfg = CorpusConfig {
        min_size: a.min_size,
        max_size: a.max_size,
        weight: a.weight,
        mode: if a.eager { ThresholdMode::Eager } else { ThresholdMode::Balanced },
        ..CorpusConfig::new(a.seed, a.count, a.n)
    };
    let reports = corpus::bound_corpus(&cfg).map_err(CliError::usage)?;
    let csv = corpus::to_csv(&reports);
    match a.out {
        Some(path) => write_file(&path, &csv)?,
        None => emit(&csv)?,
    }
    let summary = corpus::summarize(&reports);
    eprintln!("{}", serde_json::to_string(&summary).map_err(CliError::usage)?);
    if summary.violations > 0 {
        return Err(CliError::Failed(format!("{} circuits violate the bound", summary.violations)));
    }
    Ok(())
}

fn tightness(a: TightnessArgs) -> Outcome {
    let report = analyzer::tightness_report_with(a.n, a.e, a.d, a.c).map_err(CliError::usage)?;
    print_json(&report)?;
    if report.check.within {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "rhs {:.6} exceeds 4n + C e d log2 n = {:.6}",
            report.rhs, report.check.budget
        )))
    }
}
