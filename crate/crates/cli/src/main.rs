use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpa_core::axioms::{
    self, check_axiom, fuzz_axiom, merge_problem, reduce_problem, split_problem, Axiom, CheckError,
    MergeSpec, SpecBudget, SplitSpec, SubsetSpec, Witness,
};
use cpa_core::cpa::{decompose, solve_cpa};
use cpa_core::doc::TraceDoc;
use cpa_core::gen::{gen_problem, GenParams};
use cpa_core::problem::{check_binding, normalize, ValidationReport};
use cpa_core::rational::parse_rational;
use cpa_core::{Allocation, Problem, ProblemDoc, Rule, RuleId};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "cpa", version, about = "Exact allocation rules for problems with crossed claims")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Allocate a problem with one rule.
    Solve(SolveArgs),
    /// Check an axiom on one problem, fuzz it on generated ones, or replay a witness.
    Check(CheckArgs),
    /// Reduce a problem to a subset of claimants, charging the others' awards.
    Reduce(ReduceArgs),
    /// Split one claimant into several.
    Split(SplitArgs),
    /// Merge homologous claimants into one.
    Merge(MergeArgs),
    /// Generate a random valid problem.
    Gen(GenArgs),
    /// Split a problem into independent components.
    Decompose(InputArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Problem document.
    #[arg(short, long)]
    input: PathBuf,
    /// Write output here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RuleArgs {
    #[arg(long, default_value = "cpa", value_parser = parse_rule)]
    rule: RuleId,
    /// Priority order, e.g. `C3,C1,C2`.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<String>>,
}

impl RuleArgs {
    fn resolve(&self) -> Result<RuleId, Failure> {
        match (&self.rule, &self.order) {
            (RuleId::Priority { .. }, order) => Ok(RuleId::Priority { order: order.clone() }),
            (_, Some(_)) => Err(Failure::usage("--order only applies to --rule priority")),
            (rule, None) => Ok(rule.clone()),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    rule: RuleArgs,
    /// Include the step trace (cpa only).
    #[arg(long)]
    trace: bool,
    /// Drop non-binding issues before solving.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value = "cpa", value_parser = parse_rule)]
    rule: RuleId,
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<String>>,
    #[arg(long, required_unless_present = "replay")]
    axiom: Option<Axiom>,
    /// Check this problem; without it, fuzz generated problems.
    #[arg(short, long, conflicts_with = "replay")]
    input: Option<PathBuf>,
    /// Number of generated problems to try.
    #[arg(long, default_value_t = 1000)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "2..6", value_parser = parse_range)]
    claimants: RangeInclusive<usize>,
    #[arg(long, default_value = "1..4", value_parser = parse_range)]
    issues: RangeInclusive<usize>,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 100)]
    max_claim: u64,
    #[arg(long, default_value_t = 64)]
    max_denominator: u64,
    /// Random subsets tried on top of all |N|-1 subsets.
    #[arg(long, default_value_t = 3)]
    extra_subsets: usize,
    #[arg(long, default_value_t = 5)]
    splits: usize,
    #[arg(long, default_value_t = 5)]
    merges: usize,
    /// Re-run a recorded witness.
    #[arg(long, conflicts_with_all = ["axiom"])]
    replay: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    io: InputArgs,
    /// Claimants to keep.
    #[arg(long, value_delimiter = ',', required = true)]
    keep: Vec<String>,
    /// Allocation to charge; defaults to the rule's own.
    #[arg(long)]
    allocation: Option<PathBuf>,
    #[command(flatten)]
    rule: RuleArgs,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long)]
    target: String,
    /// Parts as `id=claim`, e.g. `C1a=2,C1b=3/2`.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_part)]
    parts: Vec<(String, String)>,
}

#[derive(Args)]
struct MergeArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    sources: Vec<String>,
    /// Id of the merged claimant; defaults to the first source.
    #[arg(long)]
    id: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "3..8", value_parser = parse_range)]
    claimants: RangeInclusive<usize>,
    #[arg(long, default_value = "1..4", value_parser = parse_range)]
    issues: RangeInclusive<usize>,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 100)]
    max_claim: u64,
    #[arg(long, default_value_t = 64)]
    max_denominator: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_rule(s: &str) -> Result<RuleId, String> {
    s.parse().map_err(|e: cpa_core::rules::RuleError| e.to_string())
}

/// `a..b` (inclusive) or a single number.
fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once("..") {
        Some((a, b)) => Ok(num(a)?..=num(b.trim_start_matches('='))?),
        None => num(s).map(|n| n..=n),
    }
}

fn parse_part(s: &str) -> Result<(String, String), String> {
    let (id, claim) = s.split_once('=').ok_or_else(|| format!("expected id=claim, got {s:?}"))?;
    Ok((id.to_owned(), claim.to_owned()))
}

/// Everything that ends a command early, with its exit status.
enum Failure {
    Input { code: &'static str, message: String, violations: Option<ValidationReport> },
    Violation(Value),
}

impl Failure {
    fn input(code: &'static str, message: impl ToString) -> Self {
        Failure::Input { code, message: message.to_string(), violations: None }
    }

    fn usage(message: impl ToString) -> Self {
        Failure::input("USAGE", message)
    }
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Contract { rule, problem } => Failure::Violation(json!({
                "tool": "cpa",
                "version": VERSION,
                "contract_violation": { "rule": rule, "problem": problem },
            })),
            CheckError::Rule(e) => Failure::input("RULE_ERROR", e),
            CheckError::Transform(e) => Failure::input("TRANSFORM_ERROR", e),
            CheckError::NotReproduced(m) => Failure::input("WITNESS_NOT_REPRODUCED", m),
        }
    }
}

struct Input {
    value: Value,
    digest: String,
}

fn read_json(path: &PathBuf) -> Result<Input, Failure> {
    let bytes =
        std::fs::read(path).map_err(|e| Failure::input("IO_ERROR", format!("{}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes).map_err(|e| Failure::input("SCHEMA_ERROR", e))?;
    Ok(Input { value, digest: digest(&bytes) })
}

fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// Accepts a bare problem or any document of this tool with a `problem` field.
fn problem_doc(value: &Value) -> Result<ProblemDoc, Failure> {
    let inner = match value.get("problem") {
        Some(p) if value.get("issues").is_none() => p,
        _ => value,
    };
    serde_json::from_value(inner.clone()).map_err(|e| Failure::input("SCHEMA_ERROR", e))
}

fn invalid(report: ValidationReport) -> Failure {
    Failure::Input { code: "INVALID_PROBLEM", message: report.to_string(), violations: Some(report) }
}

/// Structural checks only; transformed problems may legitimately be non-binding.
fn load_any(path: &PathBuf) -> Result<(Problem, String), Failure> {
    let input = read_json(path)?;
    let problem = Problem::from_doc(&problem_doc(&input.value)?).map_err(invalid)?;
    Ok((problem, input.digest))
}

fn load_valid(path: &PathBuf) -> Result<(Problem, String), Failure> {
    let (problem, digest) = load_any(path)?;
    Ok((check_binding(problem).map_err(invalid)?, digest))
}

fn envelope(digest: Option<&str>) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), "cpa".into());
    m.insert("version".into(), VERSION.into());
    if let Some(d) = digest {
        m.insert("input_digest".into(), d.into());
    }
    m
}

fn insert_rule(doc: &mut serde_json::Map<String, Value>, rule: &RuleId) {
    doc.insert("rule".into(), rule.label().into());
    if rule.is_reconstructed() {
        doc.insert("reconstructed".into(), true.into());
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("documents serialize")
}

fn emit(doc: &Value, output: Option<&PathBuf>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc).expect("documents serialize");
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::input("IO_ERROR", format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn allocate(rule: &RuleId, problem: &Problem) -> Result<Allocation, Failure> {
    rule.allocate(problem).map_err(|e| Failure::input("RULE_ERROR", e))
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let rule = args.rule.resolve()?;
    if args.trace && rule != RuleId::Cpa {
        return Err(Failure::usage("--trace is only available for --rule cpa"));
    }
    let (problem, digest) =
        if args.normalize { load_any(&args.io.input)? } else { load_valid(&args.io.input)? };
    let mut doc = envelope(Some(&digest));
    insert_rule(&mut doc, &rule);
    let (target, normalized) = if args.normalize {
        let n = normalize(&problem);
        doc.insert(
            "normalization".into(),
            json!({
                "removed_issues": n.removed_issues,
                "unconstrained": n.unconstrained.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>(),
            }),
        );
        (n.problem.clone(), Some(n))
    } else {
        (problem, None)
    };
    let (inner, trace) = if args.trace {
        let (x, t) = solve_cpa(&target);
        (x, Some(TraceDoc::from(&t)))
    } else {
        (allocate(&rule, &target)?, None)
    };
    let allocation = match &normalized {
        Some(n) => n.complete(&inner),
        None => inner,
    };
    doc.insert("allocation".into(), to_value(&allocation));
    if let Some(t) = trace {
        doc.insert("trace".into(), to_value(&t));
    }
    emit(&Value::Object(doc), args.io.output.as_ref())
}

fn check_rule(args: &CheckArgs) -> Result<RuleId, Failure> {
    RuleArgs { rule: args.rule.clone(), order: args.order.clone() }.resolve()
}

/// Exit 1 when a witness was found, after the document has been written.
fn verdict_outcome(doc: Value, found: bool, output: Option<&PathBuf>) -> Result<(), Failure> {
    if found {
        Err(Failure::Violation(doc))
    } else {
        emit(&doc, output)
    }
}

fn witness_digest(w: &Witness) -> String {
    digest(serde_json::to_string(w).expect("documents serialize").as_bytes())
}

fn check(args: &CheckArgs) -> Result<(), Failure> {
    if let Some(path) = &args.replay {
        return replay(path);
    }
    let axiom = args.axiom.expect("clap requires --axiom without --replay");
    let rule = check_rule(args)?;
    let budget = SpecBudget { extra_subsets: args.extra_subsets, splits: args.splits, merges: args.merges };
    match &args.input {
        Some(path) => {
            let (problem, digest) = load_valid(path)?;
            let verdict = check_axiom(&rule, axiom, &problem, budget, args.seed)?;
            let mut doc = envelope(Some(&digest));
            insert_rule(&mut doc, &rule);
            doc.insert("seed".into(), args.seed.into());
            doc.insert("verdict".into(), to_value(&verdict));
            if let Some(w) = &verdict.witness {
                doc.insert("witness_digest".into(), witness_digest(w).into());
            }
            verdict_outcome(Value::Object(doc), !verdict.holds, args.output.as_ref())
        }
        None => {
            let params = GenParams {
                claimants: args.claimants.clone(),
                issues: args.issues.clone(),
                density: args.density,
                max_claim: args.max_claim,
                max_denominator: args.max_denominator,
                seed: args.seed,
            };
            gen_problem(&params).map_err(Failure::usage)?;
            let report = fuzz_axiom(&rule, axiom, &params, args.budget, args.seed)?;
            let mut doc = envelope(None);
            insert_rule(&mut doc, &rule);
            doc.insert("params".into(), to_value(&params));
            if let Some(w) = &report.witness {
                doc.insert("witness_digest".into(), witness_digest(w).into());
            }
            let found = report.witness.is_some();
            doc.insert("fuzz".into(), to_value(&report));
            verdict_outcome(Value::Object(doc), found, args.output.as_ref())
        }
    }
}

/// Finds the witness in a verdict document, a fuzz report, or a bare witness.
fn find_witness(value: &Value) -> Option<&Value> {
    value
        .pointer("/verdict/witness")
        .or_else(|| value.pointer("/fuzz/witness"))
        .or_else(|| value.get("witness"))
        .or_else(|| value.get("axiom").map(|_| value))
}

/// A reproduced witness is a confirmed violation, so it exits 1 like the original check.
fn replay(path: &PathBuf) -> Result<(), Failure> {
    let input = read_json(path)?;
    let raw =
        find_witness(&input.value).ok_or_else(|| Failure::input("SCHEMA_ERROR", "no witness in document"))?;
    let witness: Witness =
        serde_json::from_value(raw.clone()).map_err(|e| Failure::input("SCHEMA_ERROR", e))?;
    if let Some(recorded) = input.value.get("witness_digest").and_then(Value::as_str) {
        if recorded != witness_digest(&witness) {
            return Err(Failure::input("DIGEST_MISMATCH", "witness does not match its recorded digest"));
        }
    }
    witness.replay()?;
    let mut doc = envelope(Some(&input.digest));
    doc.insert("replayed".into(), true.into());
    doc.insert("witness".into(), to_value(&witness));
    Err(Failure::Violation(Value::Object(doc)))
}

fn problem_output(problem: &Problem, digest: &str, extra: &[(&str, Value)]) -> Value {
    let mut doc = envelope(Some(digest));
    for (k, v) in extra {
        doc.insert((*k).into(), v.clone());
    }
    doc.insert("problem".into(), to_value(&problem.to_doc()));
    let flagged: Vec<&str> =
        problem.non_binding_issues().into_iter().map(|i| problem.issues()[i].id.as_str()).collect();
    if !flagged.is_empty() {
        doc.insert("non_binding_issues".into(), to_value(&flagged));
    }
    Value::Object(doc)
}

fn transform_failure(e: axioms::TransformError) -> Failure {
    Failure::input("TRANSFORM_ERROR", e)
}

fn reduce(args: &ReduceArgs) -> Result<(), Failure> {
    let (problem, digest) = load_any(&args.io.input)?;
    let (x, source) = match &args.allocation {
        Some(path) => {
            let input = read_json(path)?;
            let value = input.value.get("allocation").unwrap_or(&input.value);
            let x: Allocation =
                serde_json::from_value(value.clone()).map_err(|e| Failure::input("SCHEMA_ERROR", e))?;
            (x, json!({ "file": input.digest }))
        }
        None => {
            let rule = args.rule.resolve()?;
            (allocate(&rule, &problem)?, json!({ "rule": rule.label() }))
        }
    };
    let spec = SubsetSpec { keep: args.keep.clone() };
    let reduced = reduce_problem(&problem, &x, &spec).map_err(transform_failure)?;
    let doc = problem_output(&reduced, &digest, &[("spec", to_value(&spec)), ("charged", source)]);
    emit(&doc, args.io.output.as_ref())
}

fn split(args: &SplitArgs) -> Result<(), Failure> {
    let (problem, digest) = load_any(&args.io.input)?;
    let parts = args
        .parts
        .iter()
        .map(|(id, claim)| {
            let q = parse_rational(claim).map_err(|e| Failure::usage(format!("{id}: {e}")))?;
            Ok((id.clone(), q))
        })
        .collect::<Result<_, Failure>>()?;
    let spec = SplitSpec { target: args.target.clone(), parts };
    let out = split_problem(&problem, &spec).map_err(transform_failure)?;
    emit(&problem_output(&out, &digest, &[("spec", to_value(&spec))]), args.io.output.as_ref())
}

fn merge(args: &MergeArgs) -> Result<(), Failure> {
    let (problem, digest) = load_any(&args.io.input)?;
    let merged_id = args.id.clone().unwrap_or_else(|| args.sources[0].clone());
    let spec = MergeSpec { sources: args.sources.clone(), merged_id };
    let out = merge_problem(&problem, &spec).map_err(transform_failure)?;
    emit(&problem_output(&out, &digest, &[("spec", to_value(&spec))]), args.io.output.as_ref())
}

fn gen(args: &GenArgs) -> Result<(), Failure> {
    let params = GenParams {
        claimants: args.claimants.clone(),
        issues: args.issues.clone(),
        density: args.density,
        max_claim: args.max_claim,
        max_denominator: args.max_denominator,
        seed: args.seed,
    };
    let problem = gen_problem(&params).map_err(Failure::usage)?;
    let mut doc = envelope(None);
    doc.insert("params".into(), to_value(&params));
    doc.insert("problem".into(), to_value(&problem.to_doc()));
    emit(&Value::Object(doc), args.output.as_ref())
}

fn decompose_cmd(args: &InputArgs) -> Result<(), Failure> {
    let (problem, digest) = load_any(&args.input)?;
    let parts: Vec<ProblemDoc> = decompose(&problem).iter().map(Problem::to_doc).collect();
    let mut doc = envelope(Some(&digest));
    doc.insert("components".into(), to_value(&parts));
    emit(&Value::Object(doc), args.output.as_ref())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Check(a) => check(a),
        Command::Reduce(a) => reduce(a),
        Command::Split(a) => split(a),
        Command::Merge(a) => merge(a),
        Command::Gen(a) => gen(a),
        Command::Decompose(a) => decompose_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = json!({ "error": { "code": "USAGE", "message": e.to_string().trim_end() } });
            eprintln!("{}", serde_json::to_string_pretty(&err).unwrap());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(doc)) => {
            let output = match &cli.command {
                Command::Check(a) => a.output.as_ref(),
                _ => None,
            };
            match emit(&doc, output) {
                Ok(()) => ExitCode::from(1),
                Err(_) => ExitCode::from(2),
            }
        }
        Err(Failure::Input { code, message, violations }) => {
            let mut err = json!({ "code": code, "message": message });
            if let Some(report) = violations {
                err["violations"] = to_value(&report.violations);
            }
            eprintln!("{}", serde_json::to_string_pretty(&json!({ "error": err })).unwrap());
            ExitCode::from(2)
        }
    }
}
