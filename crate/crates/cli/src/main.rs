mod backend;
mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use pact_core::eval::{run_eval, topk_accuracy, EvalOptions, NamingRow};
use pact_core::extract::{extract_all, ingest_raw_json, write_jsonl, ExtractionConfig};
use pact_core::fixtures::{default_patterns, logic_env, parse_patterns, parse_scripts};
use pact_core::kernel::{Declaration, Environment};
use pact_core::scan::{Scanner, DEFAULT_CHUNK};
use pact_core::search::{prove_theorem, Prover, SearchConfig, SearchStatus};
use pact_core::split::{split_dataset, Bucket};
use pact_core::tasks::{derive_all, Casing, TaskConfig, TaskExample};
use serde::Serialize;

use backend::{Backend, RemoteOptions};
use config::{Config, Limit, Timeout};

#[derive(Parser)]
#[command(name = "pact", version, about = "Proof-artifact extraction, task encoding and proof search")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Flat `key = value` file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Declaration file to load instead of the bundled corpus.
    #[arg(long, global = true)]
    env: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine raw datapoints from every theorem's proof term.
    Extract(ExtractArgs),
    /// Encode raw datapoints (and optionally tactic scripts) as prompt/completion pairs.
    Tasks(TasksArgs),
    /// Route JSONL records to train/valid/test by declaration-name hash.
    Split(SplitArgs),
    /// Search for a proof of one theorem.
    Prove(ProveArgs),
    /// Search for proofs of many theorems over several runs.
    Eval(EvalArgs),
    /// Top-K accuracy of theorem-name predictions.
    NameEval(NameEvalArgs),
    /// Count pattern occurrences in a corpus.
    Scan(ScanArgs),
    /// Serve a backend over the `/candidates` HTTP protocol.
    ServeOracle(ServeArgs),
}

#[derive(Args)]
struct ReportArg {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated theorem names; all theorems when omitted.
    #[arg(long, value_delimiter = ',')]
    theorems: Vec<String>,
    /// [default: 1]
    #[arg(long)]
    min_subterm_size: Option<usize>,
    /// Print depth cutoff, or `none`. [default: none]
    #[arg(long)]
    max_depth: Option<Limit>,
    /// [default: true]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    skip_sorts: Option<bool>,
    /// [default: true]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    emit_verbose: Option<bool>,
    /// [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dedup_premises: Option<bool>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct TasksArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Tactic scripts (`== theorem` sections) to replay into proofstep examples.
    #[arg(long)]
    scripts: Option<PathBuf>,
    /// Emit a single `text` field per example instead of prompt and completion.
    #[arg(long)]
    concat: bool,
    /// Fraction of negative premise examples to keep. [default: all]
    #[arg(long)]
    neg_ratio: Option<f64>,
    /// `title` or `upper` classification labels. [default: title]
    #[arg(long)]
    casing: Option<String>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Writes `<p>.train.jsonl`, `<p>.valid.jsonl`, `<p>.test.jsonl` and `<p>.manifest.json`.
    #[arg(long)]
    out_prefix: String,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct SearchArgs {
    /// tidy, refl, scripted:<file> or remote:<url>. [default: tidy]
    #[arg(long)]
    backend: Option<Backend>,
    /// Queue-size insertion guard, or `none`. [default: 16]
    #[arg(long)]
    w_max: Option<Limit>,
    /// Maximum proof depth, or `none`. [default: 128]
    #[arg(long)]
    d_max: Option<Limit>,
    /// [default: 512]
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Per-tactic timeout such as `5s`, or `none`. [default: 5s]
    #[arg(long)]
    tactic_timeout: Option<Timeout>,
    /// Per-search timeout, or `none`. [default: 600s]
    #[arg(long)]
    global_timeout: Option<Timeout>,
    /// [default: 16]
    #[arg(long)]
    candidates_per_query: Option<usize>,
    /// HTTP timeout for the remote backend. [default: 30s]
    #[arg(long)]
    remote_timeout: Option<Timeout>,
    /// Extra attempts per remote query. [default: 0]
    #[arg(long)]
    remote_retries: Option<u32>,
}

#[derive(Args)]
struct ProveArgs {
    #[arg(long)]
    theorem: String,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    search: SearchArgs,
    /// [default: 1]
    #[arg(long)]
    runs: Option<usize>,
    /// [default: available parallelism]
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated theorem names; all theorems when omitted.
    #[arg(long, value_delimiter = ',')]
    theorems: Vec<String>,
    /// Evaluate only theorems from this declaration on, each searched
    /// against the environment before it.
    #[arg(long)]
    holdout_cutoff: Option<String>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct NameEvalArgs {
    /// JSONL rows `{"truth": name, "candidates": [[name, logprob], ...]}`.
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,3,10,16")]
    k: Vec<usize>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct ScanArgs {
    /// One pattern per line, raw bytes. [default: bundled patterns]
    #[arg(long)]
    patterns: Option<PathBuf>,
    /// Files or directories.
    #[arg(long, num_args = 1.., required = true)]
    corpus: Vec<PathBuf>,
    /// Collapse whitespace runs to one space before matching. [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    normalize_ws: Option<bool>,
    /// Read size in bytes. [default: 1048576]
    #[arg(long)]
    chunk_size: Option<usize>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct ServeArgs {
    /// tidy, refl or scripted:<file>. [default: tidy]
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long, default_value = "127.0.0.1:8765")]
    addr: SocketAddr,
    /// Fraction of requests answered with 503.
    #[arg(long, default_value_t = 0.0)]
    failure_rate: f64,
}

/// Errors that exit with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(Usage(format!("{e:#}")))
}

struct Ctx {
    cfg: Config,
    env_path: Option<PathBuf>,
    cancel: Arc<AtomicBool>,
}

impl Ctx {
    fn env(&self) -> Result<Environment> {
        let path = self.env_path.clone().or_else(|| self.cfg.raw("env").map(PathBuf::from));
        match path {
            None => Ok(logic_env()),
            Some(p) => {
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                Environment::load_str(&text).map_err(|e| anyhow!("{}: {e}", p.display()))
            }
        }
    }

    fn report_path(&self, r: &ReportArg) -> Option<PathBuf> {
        r.report.clone().or_else(|| self.cfg.raw("report").map(PathBuf::from))
    }

    fn search(&self, a: &SearchArgs) -> Result<(Backend, SearchConfig, RemoteOptions)> {
        let d = SearchConfig::default();
        let c = &self.cfg;
        let backend = c.pick(a.backend.clone(), "backend", Backend::Tidy)?;
        let cfg = SearchConfig {
            w_max: c.pick(a.w_max, "w_max", Limit(d.w_max))?.0,
            d_max: c.pick(a.d_max, "d_max", Limit(d.d_max))?.0,
            max_iterations: c.pick(a.max_iterations, "max_iterations", d.max_iterations)?,
            tactic_timeout: c.pick(a.tactic_timeout, "tactic_timeout", Timeout(d.tactic_timeout))?.0,
            global_timeout: c.pick(a.global_timeout, "global_timeout", Timeout(d.global_timeout))?.0,
            candidates_per_query: c.pick(a.candidates_per_query, "candidates_per_query", d.candidates_per_query)?,
            cancel: Some(self.cancel.clone()),
        };
        let remote = RemoteOptions {
            timeout: c.pick(a.remote_timeout, "remote_timeout", Timeout(std::time::Duration::from_secs(30)))?.0,
            retries: c.pick(a.remote_retries, "remote_retries", 0)?,
            n: cfg.candidates_per_query,
        };
        Ok((backend, cfg, remote))
    }
}

fn emit<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn select<'e>(env: &'e Environment, names: &[String]) -> Result<Vec<&'e Declaration>> {
    if names.is_empty() {
        return Ok(env.theorems().collect());
    }
    names.iter().map(|n| env.get(n).ok_or_else(|| usage(anyhow!("unknown theorem `{n}`")))).collect()
}

#[derive(Serialize)]
struct ExtractReport {
    schema_version: u32,
    theorems: usize,
    datapoints: usize,
}

fn cmd_extract(ctx: &Ctx, a: &ExtractArgs) -> Result<bool> {
    let d = ExtractionConfig::default();
    let c = &ctx.cfg;
    let cfg = (|| -> Result<ExtractionConfig> {
        Ok(ExtractionConfig {
            min_subterm_size: c.pick(a.min_subterm_size, "min_subterm_size", d.min_subterm_size)?,
            skip_sorts: c.pick(a.skip_sorts, "skip_sorts", d.skip_sorts)?,
            emit_verbose: c.pick(a.emit_verbose, "emit_verbose", d.emit_verbose)?,
            dedup_premises: c.pick(a.dedup_premises, "dedup_premises", d.dedup_premises)?,
            max_depth: c.pick(a.max_depth, "max_depth", Limit(d.max_depth))?.0,
        })
    })()
    .map_err(usage)?;
    let env = ctx.env()?;
    let decls = select(&env, &a.theorems)?;
    let dps = extract_all(&decls, &env, &cfg)?;
    let mut w = create(&a.out)?;
    write_jsonl(&mut w, &dps)?;
    w.flush()?;
    emit(ctx.report_path(&a.report).as_deref(), &ExtractReport { schema_version: 1, theorems: decls.len(), datapoints: dps.len() })?;
    Ok(true)
}

#[derive(Serialize)]
struct ConcatRecord<'a> {
    text: String,
    task: pact_core::tasks::Task,
    mix: pact_core::tasks::Mix,
    decl_nm: &'a str,
}

#[derive(Serialize)]
struct TasksReport {
    schema_version: u32,
    datapoints: usize,
    examples: usize,
    per_task: BTreeMap<String, usize>,
}

fn cmd_tasks(ctx: &Ctx, a: &TasksArgs) -> Result<bool> {
    let c = &ctx.cfg;
    let cfg = (|| -> Result<TaskConfig> {
        let casing = match c.pick(a.casing.clone(), "casing", "title".to_string())?.as_str() {
            "title" => Casing::Title,
            "upper" => Casing::Upper,
            other => bail!("casing must be `title` or `upper`, got `{other}`"),
        };
        let neg_ratio = c.pick_with(a.neg_ratio.map(Some), "neg_ratio", None, |s| Ok(Some(s.parse::<f64>()?)))?;
        if neg_ratio.is_some_and(|r| !(0.0..=1.0).contains(&r)) {
            bail!("neg_ratio must lie in [0, 1]");
        }
        Ok(TaskConfig { casing, neg_ratio, ..TaskConfig::default() })
    })()
    .map_err(usage)?;
    let dps = ingest_raw_json(open(&a.input)?)?;
    let mut examples = derive_all(&dps, &cfg)?;
    if let Some(path) = &a.scripts {
        let env = ctx.env()?;
        let prover = Prover::new(&env);
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (name, script) in parse_scripts(&text) {
            let decl = env.get(&name).ok_or_else(|| anyhow!("script for unknown declaration `{name}`"))?;
            let steps = prover
                .proofstep_examples(decl, &script)
                .map_err(|(i, e)| anyhow!("{name}: step {} (`{}`): {e}", i + 1, script[i]))?;
            examples.extend(steps);
        }
    }
    let mut w = create(&a.out)?;
    if a.concat {
        let recs: Vec<ConcatRecord> = examples
            .iter()
            .map(|e: &TaskExample| ConcatRecord { text: e.text(), task: e.task, mix: e.mix, decl_nm: &e.decl_nm })
            .collect();
        write_jsonl(&mut w, &recs)?;
    } else {
        write_jsonl(&mut w, &examples)?;
    }
    w.flush()?;
    let mut per_task = BTreeMap::new();
    for e in &examples {
        *per_task.entry(e.task.keyword().to_string()).or_insert(0) += 1;
    }
    let report = TasksReport { schema_version: 1, datapoints: dps.len(), examples: examples.len(), per_task };
    emit(ctx.report_path(&a.report).as_deref(), &report)?;
    Ok(true)
}

fn cmd_split(ctx: &Ctx, a: &SplitArgs) -> Result<bool> {
    let mut records = Vec::new();
    for (i, line) in open(&a.input)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", a.input.display(), i + 1))?);
    }
    let (buckets, manifest) = split_dataset(records)?;
    for b in Bucket::ALL {
        let path = PathBuf::from(format!("{}.{}.jsonl", a.out_prefix, b.as_str()));
        let mut w = create(&path)?;
        write_jsonl(&mut w, &buckets[&b])?;
        w.flush()?;
    }
    emit(Some(Path::new(&format!("{}.manifest.json", a.out_prefix))), &manifest)?;
    emit(ctx.report_path(&a.report).as_deref(), &manifest)?;
    Ok(true)
}

#[derive(Serialize)]
struct ProveReport {
    schema_version: u32,
    theorem: String,
    status: SearchStatus,
    proof: Option<Vec<String>>,
    iterations: usize,
    nodes_expanded: usize,
    max_queue_at_insert: usize,
    max_expanded_depth: usize,
    interrupted: bool,
}

fn cmd_prove(ctx: &Ctx, a: &ProveArgs) -> Result<bool> {
    let (backend, cfg, remote) = ctx.search(&a.search).map_err(usage)?;
    let env = ctx.env()?;
    if env.get(&a.theorem).is_none() {
        return Err(usage(anyhow!("unknown theorem `{}`", a.theorem)));
    }
    let oracle = backend::build(&backend, &env, Some(&a.theorem), &remote)?;
    let r = prove_theorem(&env, &a.theorem, &*oracle, &cfg, None).expect("theorem exists");
    tracing::info!(theorem = %a.theorem, status = ?r.status, wall_time = ?r.wall_time, "search finished");
    let report = ProveReport {
        schema_version: 1,
        theorem: a.theorem.clone(),
        status: r.status,
        proof: r.proof,
        iterations: r.iterations,
        nodes_expanded: r.nodes_expanded,
        max_queue_at_insert: r.max_queue_at_insert,
        max_expanded_depth: r.max_expanded_depth,
        interrupted: r.cancelled,
    };
    emit(ctx.report_path(&a.report).as_deref(), &report)?;
    Ok(!r.cancelled)
}

fn cmd_eval(ctx: &Ctx, a: &EvalArgs) -> Result<bool> {
    let (backend, cfg, remote) = ctx.search(&a.search).map_err(usage)?;
    let c = &ctx.cfg;
    let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let runs = c.pick(a.runs, "runs", 1usize).map_err(usage)?;
    let workers = c.pick(a.workers, "workers", default_workers).map_err(usage)?;
    if runs == 0 || workers == 0 {
        return Err(usage(anyhow!("runs and workers must be positive")));
    }
    let env = ctx.env()?;
    let mut theorems = select(&env, &a.theorems)?;
    let mut env_cutoff = None;
    if let Some(name) = &a.holdout_cutoff {
        let cut = env.get(name).ok_or_else(|| usage(anyhow!("unknown declaration `{name}`")))?.order_index;
        theorems.retain(|d| d.order_index >= cut);
        env_cutoff = Some(cut);
    }
    let oracle = backend::build(&backend, &env, None, &remote)?;
    let opts = EvalOptions { runs, workers, env_cutoff, cancel: Some(ctx.cancel.clone()) };
    let report = run_eval(&env, &theorems, |_| |s: &str, n: usize| oracle.query(s, n), &cfg, &opts);
    tracing::info!(pass_rate = report.pass_rate, aborts = report.aborts, "evaluation finished");
    emit(ctx.report_path(&a.report).as_deref(), &report)?;
    Ok(!report.interrupted)
}

#[derive(Serialize)]
struct NameEvalReport {
    schema_version: u32,
    rows: usize,
    accuracy: BTreeMap<usize, f64>,
}

fn cmd_name_eval(ctx: &Ctx, a: &NameEvalArgs) -> Result<bool> {
    if a.k.contains(&0) {
        return Err(usage(anyhow!("K values must be positive")));
    }
    let mut rows = Vec::new();
    for (i, line) in open(&a.candidates)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: NamingRow =
            serde_json::from_str(&line).with_context(|| format!("{}:{}", a.candidates.display(), i + 1))?;
        rows.push(row);
    }
    let accuracy = topk_accuracy(&rows, &a.k);
    emit(ctx.report_path(&a.report).as_deref(), &NameEvalReport { schema_version: 1, rows: rows.len(), accuracy })?;
    Ok(true)
}

fn cmd_scan(ctx: &Ctx, a: &ScanArgs) -> Result<bool> {
    let c = &ctx.cfg;
    let normalize = c.pick(a.normalize_ws, "normalize_ws", false).map_err(usage)?;
    let chunk = c.pick(a.chunk_size, "chunk_size", DEFAULT_CHUNK).map_err(usage)?;
    let patterns = match &a.patterns {
        Some(p) => parse_patterns(&std::fs::read(p).with_context(|| format!("reading {}", p.display()))?),
        None => default_patterns(),
    };
    let scanner = Scanner::with_options(&patterns, chunk, normalize).map_err(|e| usage(e.into()))?;
    let report = scanner.scan_paths(&a.corpus);
    for f in &report.io_errors {
        tracing::warn!(path = %f.path, error = %f.error, "unreadable corpus file");
    }
    emit(ctx.report_path(&a.report).as_deref(), &report)?;
    Ok(report.io_errors.is_empty())
}

fn cmd_serve(ctx: &Ctx, a: &ServeArgs) -> Result<bool> {
    let backend = ctx.cfg.pick(a.backend.clone(), "backend", Backend::Tidy).map_err(usage)?;
    if matches!(backend, Backend::Remote(_)) {
        return Err(usage(anyhow!("serve-oracle cannot proxy a remote backend")));
    }
    if !(0.0..=1.0).contains(&a.failure_rate) {
        return Err(usage(anyhow!("failure rate must lie in [0, 1]")));
    }
    let env = ctx.env()?;
    let remote = RemoteOptions { timeout: std::time::Duration::ZERO, retries: 0, n: 0 };
    let oracle = backend::build(&backend, &env, None, &remote)?;
    pact_oracle_server::run_forever(a.addr, oracle, a.failure_rate)?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(usage)?,
        None => Config::default(),
    };
    let cancel = Arc::new(AtomicBool::new(false));
    if matches!(cli.cmd, Command::Prove(_) | Command::Eval(_)) {
        let flag = cancel.clone();
        ctrlc::set_handler(move || {
            if flag.swap(true, Ordering::SeqCst) {
                std::process::exit(130);
            }
            eprintln!("interrupted: finishing in-flight searches");
        })?;
    }
    let ctx = Ctx { cfg, env_path: cli.env.clone(), cancel };
    match &cli.cmd {
        Command::Extract(a) => cmd_extract(&ctx, a),
        Command::Tasks(a) => cmd_tasks(&ctx, a),
        Command::Split(a) => cmd_split(&ctx, a),
        Command::Prove(a) => cmd_prove(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::NameEval(a) => cmd_name_eval(&ctx, a),
        Command::Scan(a) => cmd_scan(&ctx, a),
        Command::ServeOracle(a) => cmd_serve(&ctx, a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}\n\n{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
