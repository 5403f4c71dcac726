//! The `stlc` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or contract error,
//! 3 divergence in `optsim`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::generator::{gen_dataset_with_workers, split_dataset, GenConfig, SplitMode, Splits};
use crate::grammar::{build_rule_table, exact_match, RuleTable};
use crate::infer::infer_type;
use crate::io::{
    dataset_jsonl, read_dataset, read_jsonl, sha256_hex, write_jsonl, DatasetRecord,
    DecodedRecord, EvalReport, IoError, Manifest, PredictionRecord, SplitCounts, SCHEMA_VERSION,
};
use crate::optim::{simulate, Defaults, Objective, OptimizerKind, ScheduleSpec};
use crate::rename::MAX_BOUND_NAMES;
use crate::syntax::{parse_term, parse_type, Type, TypingContext};
use crate::tokenizer::{encode_example, EncodedExample, Vocab, PATH_LEN};

#[derive(Parser, Debug)]
#[command(name = "stlc", version, about = "Simply typed lambda calculus dataset and optimizer tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset with splits, rules, vocab and manifest.
    Gen(GenArgs),
    /// Print the inferred type of each term.
    Typecheck(TypecheckArgs),
    /// Turn a dataset file into model-ready encoded JSONL.
    Encode(EncodeArgs),
    /// Greedily decode a predictions file into types.
    Decode(DecodeArgs),
    /// Score predictions against a dataset.
    Eval(EvalArgs),
    /// Run an optimizer on an analytic objective and print the trajectory CSV.
    Optsim(OptsimArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitModeArg {
    Type,
    Term,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    max_type_depth: usize,
    #[arg(long, default_value_t = 7)]
    max_term_depth: usize,
    #[arg(long, default_value_t = 0.5)]
    p_branch: f64,
    /// Train, validation and test ratios.
    #[arg(long, default_value = "0.8,0.1,0.1", value_parser = parse_split)]
    split: [f64; 3],
    #[arg(long, value_enum, default_value_t = SplitModeArg::Type)]
    split_mode: SplitModeArg,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; output does not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write encoded_{train,val,test}.jsonl.
    #[arg(long)]
    encode: bool,
}

#[derive(Args, Debug)]
struct TypecheckArgs {
    /// Terms to check; without any, one term per line is read from --input
    /// or stdin.
    terms: Vec<String>,
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = PATH_LEN)]
    path_len: usize,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Score rows / argmax IDs, or `decode` output with printed types.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OptsimArgs {
    #[arg(long, default_value = "adam", value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<OptimizerKind>()))]
    optimizer: OptimizerKind,
    /// const, warmup:K, noam, anneal or anneal:K. Without it Adam and RAdam
    /// use a constant rate and Adafactor its own relative step.
    #[arg(long, value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<ScheduleSpec>()))]
    schedule: Option<ScheduleSpec>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    steps: u64,
    #[arg(long, default_value = "bowl", value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<Objective>()))]
    objective: Objective,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra `key = value` file layered over the built-in defaults.
    #[arg(long)]
    defaults: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_split(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected three comma-separated ratios, got `{s}`"));
    };
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{x}` is not a number"))
    };
    Ok([num(a)?, num(b)?, num(c)?])
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Diverged(u64),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Diverged(_) => 3,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn data<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Data(e.to_string())
}

/// Runs the command line with `args` (program name first) and returns the
/// process exit code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a, err),
        Command::Typecheck(a) => typecheck(a, out, err),
        Command::Encode(a) => encode(a, out, err),
        Command::Decode(a) => decode(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Optsim(a) => optsim(a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = match &f {
                Failure::Usage(m) => writeln!(err, "error: {m}"),
                Failure::Data(m) => writeln!(err, "error: {m}"),
                Failure::Diverged(step) => writeln!(err, "diverged at step {step}"),
            };
            f.code()
        }
    }
}

fn global_table() -> (TypingContext, RuleTable, Vocab) {
    let ctx = TypingContext::global();
    let table = build_rule_table(&ctx, MAX_BOUND_NAMES);
    let vocab = Vocab::from_rule_table(&table).expect("global vocabulary is unambiguous");
    (ctx, table, vocab)
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{} is not a readable file", path.display())))
    }
}

fn require_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Failure::Usage(format!(
            "directory {} does not exist",
            p.display()
        ))),
        _ => Ok(()),
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>, Failure> {
    Ok(BufReader::new(fs::File::open(path)?))
}

fn emit(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => out.write_all(bytes)?,
    }
    Ok(())
}

fn gen(a: GenArgs, err: &mut dyn Write) -> Result<(), Failure> {
    let cfg = GenConfig {
        seed: a.seed,
        max_type_depth: a.max_type_depth,
        max_term_depth: a.max_term_depth,
        p_branch: a.p_branch,
        n_examples: a.n,
        split_ratios: a.split,
        split_mode: match a.split_mode {
            SplitModeArg::Type => SplitMode::TypeDisjoint,
            SplitModeArg::Term => SplitMode::TermDisjoint,
        },
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if a.out.exists() && !a.out.is_dir() {
        return Err(Failure::Usage(format!("{} is not a directory", a.out.display())));
    }
    fs::create_dir_all(&a.out)?;

    let workers = a.workers.unwrap_or_else(rayon::current_num_threads);
    let examples = gen_dataset_with_workers(&cfg, workers).map_err(data)?;
    let splits = if examples.is_empty() {
        Splits::default()
    } else {
        split_dataset(&examples, &cfg).map_err(data)?
    };

    let (_, table, vocab) = global_table();
    let rules = table.to_rules_text();
    let vocab_json = vocab.to_json();

    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("dataset.jsonl".into(), dataset_jsonl(&examples).into_bytes()),
        ("train.jsonl".into(), dataset_jsonl(&splits.train).into_bytes()),
        ("val.jsonl".into(), dataset_jsonl(&splits.val).into_bytes()),
        ("test.jsonl".into(), dataset_jsonl(&splits.test).into_bytes()),
        ("rules.txt".into(), rules.clone().into_bytes()),
        ("vocab.json".into(), vocab_json.clone().into_bytes()),
    ];
    if a.encode {
        for (name, part) in [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)] {
            let encoded = part
                .iter()
                .map(|e| encode_example(e.id, &e.term, &e.target_type, &table, &vocab, PATH_LEN))
                .collect::<Result<Vec<_>, _>>()
                .map_err(data)?;
            let mut buf = Vec::new();
            write_jsonl(&mut buf, &encoded)?;
            files.push((format!("encoded_{name}.jsonl"), buf));
        }
    }

    let manifest = Manifest {
        schema: SCHEMA_VERSION,
        config: cfg,
        examples: examples.len(),
        splits: SplitCounts {
            train: splits.train.len(),
            val: splits.val.len(),
            test: splits.test.len(),
        },
        path_len: PATH_LEN,
        num_rule_ids: table.num_ids(),
        rules_sha256: sha256_hex(rules.as_bytes()),
        vocab_sha256: sha256_hex(vocab_json.as_bytes()),
        files: files
            .iter()
            .map(|(name, bytes)| (name.clone(), sha256_hex(bytes)))
            .collect::<BTreeMap<_, _>>(),
    };
    let mut manifest_json = serde_json::to_string_pretty(&manifest).map_err(data)?;
    manifest_json.push('\n');
    files.push(("manifest.json".into(), manifest_json.into_bytes()));

    for (name, bytes) in &files {
        fs::write(a.out.join(name), bytes)?;
    }
    let _ = writeln!(
        err,
        "wrote {} examples ({} train, {} val, {} test) to {}",
        examples.len(),
        splits.train.len(),
        splits.val.len(),
        splits.test.len(),
        a.out.display()
    );
    Ok(())
}

fn typecheck(a: TypecheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let terms: Vec<String> = if !a.terms.is_empty() {
        if a.input.is_some() {
            return Err(Failure::Usage("give terms or --input, not both".into()));
        }
        a.terms
    } else {
        let reader: Box<dyn BufRead> = match &a.input {
            Some(p) => {
                require_file(p)?;
                Box::new(open(p)?)
            }
            None => Box::new(io::stdin().lock()),
        };
        reader
            .lines()
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|l| !l.trim().is_empty())
            .collect()
    };

    let ctx = TypingContext::global();
    let mut failed = 0;
    for (i, text) in terms.iter().enumerate() {
        let result = parse_term(text, &ctx)
            .map_err(|e| e.to_string())
            .and_then(|t| infer_type(&t, &ctx).map_err(|e| e.to_string()));
        match result {
            Ok(ty) => writeln!(out, "{ty}")?,
            Err(e) => {
                failed += 1;
                writeln!(out, "{}", Type::Error)?;
                let _ = writeln!(err, "term {}: {e}", i + 1);
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Data(format!("{failed} of {} terms did not type-check", terms.len())));
    }
    Ok(())
}

fn encode(a: EncodeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    require_file(&a.input)?;
    if let Some(p) = &a.out {
        require_parent(p)?;
    }
    if a.path_len == 0 {
        return Err(Failure::Usage("--path-len must be positive".into()));
    }
    let (ctx, table, vocab) = global_table();
    let examples = read_dataset(open(&a.input)?, &ctx)?;
    let encoded: Vec<EncodedExample> = examples
        .iter()
        .map(|e| {
            encode_example(e.id, &e.term, &e.target_type, &table, &vocab, a.path_len)
                .map_err(|x| Failure::Data(format!("example {}: {x}", e.id)))
        })
        .collect::<Result<_, _>>()?;
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &encoded)?;
    emit(a.out.as_deref(), &buf, out)?;
    let _ = writeln!(err, "encoded {} examples", encoded.len());
    Ok(())
}

fn decode(a: DecodeArgs, out: &mut dyn Write) -> Result<(), Failure> {
    require_file(&a.predictions)?;
    if let Some(p) = &a.out {
        require_parent(p)?;
    }
    let (_, table, _) = global_table();
    let preds: Vec<PredictionRecord> = read_jsonl(open(&a.predictions)?)?;
    let decoded: Vec<DecodedRecord> = preds
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.decode(&table, i + 1).map(|ty| DecodedRecord {
                id: p.id,
                ty: ty.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &decoded)?;
    emit(a.out.as_deref(), &buf, out)
}

/// Reads either raw predictions or `decode` output into `(id, type)` pairs.
fn predicted_types(path: &Path, table: &RuleTable, ctx: &TypingContext) -> Result<Vec<(u64, Type)>, Failure> {
    let values: Vec<serde_json::Value> = read_jsonl(open(path)?)?;
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let line = i + 1;
            if v.get("type").is_some() {
                let r: DecodedRecord = serde_json::from_value(v).map_err(|source| IoError::Json { line, source })?;
                let ty = if r.ty == Type::Error.to_string() {
                    Type::Error
                } else {
                    parse_type(&r.ty, ctx).map_err(|source| IoError::Parse { line, source })?
                };
                Ok((r.id, ty))
            } else {
                let p: PredictionRecord =
                    serde_json::from_value(v).map_err(|source| IoError::Json { line, source })?;
                Ok((p.id, p.decode(table, line)?))
            }
        })
        .collect()
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), Failure> {
    require_file(&a.predictions)?;
    require_file(&a.dataset)?;
    if let Some(p) = &a.out {
        require_parent(p)?;
    }
    let (ctx, table, _) = global_table();
    let records: Vec<DatasetRecord> = read_jsonl(open(&a.dataset)?)?;
    let mut targets = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let ty = parse_type(&r.ty, &ctx).map_err(|source| IoError::Parse { line: i + 1, source })?;
        if targets.insert(r.id, ty).is_some() {
            return Err(Failure::Data(format!("dataset repeats id {}", r.id)));
        }
    }

    let preds = predicted_types(&a.predictions, &table, &ctx)?;
    let mut seen = BTreeMap::new();
    for (id, ty) in preds {
        if !targets.contains_key(&id) {
            return Err(Failure::Data(format!("prediction for unknown id {id}")));
        }
        if seen.insert(id, ty).is_some() {
            return Err(Failure::Data(format!("two predictions for id {id}")));
        }
    }
    if let Some(id) = targets.keys().find(|id| !seen.contains_key(id)) {
        return Err(Failure::Data(format!("no prediction for id {id}")));
    }
    if targets.is_empty() {
        return Err(Failure::Data("nothing to evaluate".into()));
    }

    let correct = targets
        .iter()
        .filter(|(id, t)| exact_match(&seen[*id], t))
        .count();
    let errors = seen.values().filter(|t| t.is_error()).count();
    let report = EvalReport {
        schema: SCHEMA_VERSION,
        total: targets.len(),
        correct,
        errors,
        accuracy: correct as f64 / targets.len() as f64,
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(data)?;
    json.push('\n');
    emit(a.out.as_deref(), json.as_bytes(), out)
}

fn optsim(a: OptsimArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    if let Some(p) = &a.out {
        require_parent(p)?;
    }
    let mut defaults = Defaults::builtin().clone();
    if let Some(path) = &a.defaults {
        require_file(path)?;
        let extra = Defaults::parse(&fs::read_to_string(path)?).map_err(|e| Failure::Usage(e.to_string()))?;
        defaults = defaults.overlay(&extra);
    }
    let lr = match a.lr {
        Some(lr) => lr,
        None => match a.optimizer {
            OptimizerKind::Adam => defaults.f64("adam.lr"),
            OptimizerKind::RAdam => defaults.f64("radam.lr"),
            OptimizerKind::Adafactor => Ok(1e-2),
        }
        .map_err(|e| Failure::Usage(e.to_string()))?,
    };
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Failure::Usage(format!("--lr {lr} must be positive")));
    }
    let schedule = match a.schedule {
        Some(spec) => Some(spec.build(lr, &defaults).map_err(|e| Failure::Usage(e.to_string()))?),
        None if a.optimizer == OptimizerKind::Adafactor && a.lr.is_none() => None,
        None => Some(ScheduleSpec::Const.build(lr, &defaults).map_err(|e| Failure::Usage(e.to_string()))?),
    };

    let traj = simulate(a.optimizer, schedule, a.objective, a.steps, a.seed, &defaults)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    emit(a.out.as_deref(), traj.to_csv().as_bytes(), out)?;
    match traj.rows.last() {
        Some(r) if traj.diverged => Err(Failure::Diverged(r.step)),
        Some(r) => {
            let _ = writeln!(err, "final loss {:e} after {} steps", r.loss, r.step);
            Ok(())
        }
        None => Ok(()),
    }
}
