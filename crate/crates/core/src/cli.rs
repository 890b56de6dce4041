//! The `clgnet` command line.
//!
//! Exit codes: 0 success, 2 input or parse errors, 3 fitting or learning
//! errors, 4 query errors. Every subcommand writes a JSON run manifest
//! recording its arguments, seed, and the SHA-256 of each input and output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{self, binarize, correlation_matrix, summarize, CsvOptions, Cutoff, Dataset};
use crate::fit::{fit_network, FitOptions};
use crate::graph::{Dag, NodeId};
use crate::infer::{self, joint_state_distribution, parse_evidence, parse_target, query_prob, QueryOptions};
use crate::learn::{hill_climb, LearnConfig};
use crate::model::{dag_to_json, load_dag, Network};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FIT: i32 = 3;
pub const EXIT_QUERY: i32 = 4;

const DEFAULT_SEED: u64 = infer::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "clgnet", version, about = "Hybrid Bayesian networks: fit, learn, sample and query")]
pub struct Cli {
    /// Where to write the run manifest.
    #[arg(long, global = true, default_value = "clgnet-manifest.json")]
    pub manifest: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptive statistics and the correlation table of a dataset.
    Describe(DescribeArgs),
    /// Fit parameters for a fixed graph and save the model.
    Fit(FitArgs),
    /// Learn a graph by BIC hill climbing.
    Learn(LearnArgs),
    /// Conditional probability queries on a saved model.
    Query(QueryArgs),
    /// Forward-sample a saved model to CSV.
    Sample(SampleArgs),
    /// Graphviz DOT for a model or graph file.
    ExportDot(ExportDotArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON schema file listing the columns.
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    /// Cell text treated as missing (empty cells always are).
    #[arg(long, default_value = "NA")]
    pub missing: String,
    /// Continuous 0–100 column to turn into a binary one. Repeatable.
    #[arg(long)]
    pub binarize: Vec<String>,
    /// Cutoff for `--binarize`; values at or above it map to 1.
    #[arg(long, default_value_t = 50.0)]
    pub threshold: f64,
    /// Use a strict `>` cutoff instead of `>=`.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Continuous columns for the correlation table (default: all continuous).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// Emit JSON instead of aligned text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Graph file (`{"nodes": [...], "edges": [[from, to], ...]}`).
    #[arg(long)]
    pub dag: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Pseudo-count added to each discrete table cell.
    #[arg(long, default_value_t = 0.0)]
    pub pseudo_count: f64,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Output graph file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also fit and save the model for the learned graph.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// JSON file with optional `whitelist` and `blacklist` arrays of `[from, to]` pairs.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long, default_value_t = 3)]
    pub perturbation: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Auto,
    Exact,
    Rejection,
    Lw,
}

impl From<MethodArg> for infer::Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => infer::Method::Auto,
            MethodArg::Exact => infer::Method::Exact,
            MethodArg::Rejection => infer::Method::Rejection,
            MethodArg::Lw => infer::Method::LikelihoodWeighting,
        }
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated constraints, e.g. `Mean_HR>100,Resp_rate>20` or `x in [0,1]`.
    #[arg(long, default_value = "")]
    pub evidence: String,
    /// Discrete nodes whose joint distribution is tabulated, e.g. `ML,AF`.
    #[arg(long, value_delimiter = ',', conflicts_with = "target", required_unless_present = "target")]
    pub targets: Vec<String>,
    /// A single event, e.g. `ML=1`.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    #[arg(long, default_value_t = infer::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(short, long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportDotArgs {
    #[arg(long, conflicts_with = "dag", required_unless_present = "dag")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dag: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed run: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }

    fn fit(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_FIT, message: e.to_string() }
    }

    fn query(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_QUERY, message: e.to_string() }
    }
}

#[derive(Debug, Serialize)]
struct FileRecord {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    args: Vec<String>,
    seed: Option<u64>,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
    started_unix: u64,
    finished_unix: u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn record(path: &Path) -> FileRecord {
    let sha256 = fs::read(path).map(|b| sha256_hex(&b)).unwrap_or_default();
    FileRecord { path: path.display().to_string(), sha256 }
}

/// What a subcommand touched, for the manifest.
#[derive(Default)]
struct Run {
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    stdout: String,
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        eprintln!("seed: {DEFAULT_SEED} (default)");
        DEFAULT_SEED
    })
}

fn load_data(a: &DataArgs, run: &mut Run) -> Result<Dataset, Failure> {
    if !a.delimiter.is_ascii() {
        return Err(Failure::input("delimiter must be a single ASCII character"));
    }
    let schema = data::load_schema(&a.schema).map_err(|e| Failure::input(format!("{}: {e}", a.schema.display())))?;
    let opts = CsvOptions { delimiter: a.delimiter as u8, missing_token: a.missing.clone() };
    let (mut d, report) =
        data::load_csv(&a.data, &schema, &opts).map_err(|e| Failure::input(format!("{}: {e}", a.data.display())))?;
    if !report.ignored_columns.is_empty() {
        eprintln!("ignored columns not in the schema: {}", report.ignored_columns.join(", "));
    }
    let cutoff = if a.strict { Cutoff::Greater } else { Cutoff::GreaterOrEqual };
    for c in &a.binarize {
        d = binarize(&d, c, a.threshold, cutoff).map_err(Failure::input)?;
    }
    run.inputs.push(a.schema.clone());
    run.inputs.push(a.data.clone());
    Ok(d)
}

fn describe(a: &DescribeArgs, run: &mut Run) -> Result<(), Failure> {
    let d = load_data(&a.input, run)?;
    let stats = summarize(&d);
    let names: Vec<&str> = if a.columns.is_empty() {
        d.schema().iter().filter(|c| !c.kind.is_discrete()).map(|c| c.name.as_str()).collect()
    } else {
        a.columns.iter().map(String::as_str).collect()
    };
    let corr = if names.len() >= 2 {
        match correlation_matrix(&d, &names) {
            Ok(m) => Ok(m),
            Err(e @ (data::DataError::InsufficientData(..) | data::DataError::ZeroVariance(_))) => Err(e.to_string()),
            Err(e) => return Err(Failure::input(e)),
        }
    } else {
        Err("fewer than two continuous columns".to_string())
    };
    if a.json {
        #[derive(Serialize)]
        struct Report<'a> {
            summary: &'a data::SummaryStats,
            correlation: Option<&'a data::CorrelationMatrix>,
            provenance: &'a [String],
        }
        let r = Report { summary: &stats, correlation: corr.as_ref().ok(), provenance: &d.provenance };
        run.stdout = serde_json::to_string_pretty(&r).expect("report serializes") + "\n";
    } else {
        let mut out = stats.render();
        out.push('\n');
        match &corr {
            Ok(m) => {
                out.push_str("correlation (pairwise complete)\n");
                out.push_str(&m.render());
            }
            Err(why) => {
                let _ = writeln!(out, "correlation: not available ({why})");
            }
        }
        for p in &d.provenance {
            let _ = writeln!(out, "# {p}");
        }
        run.stdout = out;
    }
    Ok(())
}

fn fit(a: &FitArgs, run: &mut Run) -> Result<(), Failure> {
    let d = load_data(&a.input, run)?;
    let dag = load_dag(&a.dag).map_err(|e| Failure::input(format!("{}: {e}", a.dag.display())))?;
    run.inputs.push(a.dag.clone());
    let report = fit_network(&d, &dag, &FitOptions { pseudo_count: a.pseudo_count }).map_err(Failure::fit)?;
    let mut net = report.network.clone();
    net.notes.push(format!("fitted from {} ({} rows)", a.input.data.display(), d.n_rows()));
    net.save(&a.out).map_err(Failure::input)?;
    run.outputs.push(a.out.clone());
    run.stdout = report.render();
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintFile {
    #[serde(default)]
    whitelist: Vec<(String, String)>,
    #[serde(default)]
    blacklist: Vec<(String, String)>,
}

fn learn(a: &LearnArgs, run: &mut Run) -> Result<(), Failure> {
    let d = load_data(&a.input, run)?;
    let seed = resolve_seed(a.seed);
    run.seed = Some(seed);
    let cons = match &a.constraints {
        Some(p) => {
            run.inputs.push(p.clone());
            let text = fs::read_to_string(p).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<ConstraintFile>(&text).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?
        }
        None => ConstraintFile::default(),
    };
    let pairs = |v: Vec<(String, String)>| v.into_iter().map(|(f, t)| (NodeId::from(f), NodeId::from(t))).collect();
    let config = LearnConfig {
        max_iterations: a.max_iterations,
        restarts: a.restarts,
        perturbation_size: a.perturbation,
        seed,
        whitelist: pairs(cons.whitelist),
        blacklist: pairs(cons.blacklist),
    };
    let result = hill_climb(&d, &config).map_err(Failure::fit)?;
    write_file(&a.out, &dag_to_json(&result.dag))?;
    run.outputs.push(a.out.clone());
    if let Some(p) = &a.trace {
        write_file(p, &result.trace_text())?;
        run.outputs.push(p.clone());
    }
    if let Some(p) = &a.dot {
        write_file(p, &result.dag.to_dot())?;
        run.outputs.push(p.clone());
    }
    if let Some(p) = &a.model {
        let report = fit_network(&d, &result.dag, &FitOptions::default()).map_err(Failure::fit)?;
        report.network.save(p).map_err(Failure::input)?;
        run.outputs.push(p.clone());
    }
    let mut out = format!(
        "BIC {:.3} after {} moves (restart {}), {} edges\n",
        result.score,
        result.trace.len(),
        result.restart,
        result.dag.edge_count()
    );
    for (f, t) in result.dag.edges() {
        let _ = writeln!(out, "  {f} -> {t}");
    }
    run.stdout = out;
    Ok(())
}

fn load_model(path: &Path, run: &mut Run) -> Result<Network, Failure> {
    let net = Network::load(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    run.inputs.push(path.to_path_buf());
    Ok(net)
}

fn query(a: &QueryArgs, run: &mut Run) -> Result<(), Failure> {
    let net = load_model(&a.model, run)?;
    let seed = resolve_seed(a.seed);
    run.seed = Some(seed);
    let opts = QueryOptions { method: a.method.into(), n_samples: a.samples, seed };
    let evidence = parse_evidence(&a.evidence, &net).map_err(Failure::query)?;
    run.stdout = match &a.target {
        Some(t) => {
            let target = parse_target(t).map_err(Failure::query)?;
            let r = query_prob(&net, &target, &evidence, &opts).map_err(Failure::query)?;
            r.render(t.trim(), &evidence) + "\n"
        }
        None => {
            let names: Vec<&str> = a.targets.iter().map(|s| s.trim()).collect();
            joint_state_distribution(&net, &names, &evidence, &opts).map_err(Failure::query)?.render(&evidence)
        }
    };
    Ok(())
}

fn sample(a: &SampleArgs, run: &mut Run) -> Result<(), Failure> {
    let net = load_model(&a.model, run)?;
    let seed = resolve_seed(a.seed);
    run.seed = Some(seed);
    let d = net.forward_sample(a.n, seed);
    let mut buf = Vec::new();
    d.write_csv(&mut buf, &CsvOptions::default()).map_err(Failure::input)?;
    let text = String::from_utf8(buf).expect("csv output is utf-8");
    match &a.out {
        Some(p) => {
            write_file(p, &text)?;
            run.outputs.push(p.clone());
        }
        None => run.stdout = text,
    }
    Ok(())
}

fn export_dot(a: &ExportDotArgs, run: &mut Run) -> Result<(), Failure> {
    let dag: Dag = match (&a.model, &a.dag) {
        (Some(m), _) => load_model(m, run)?.dag().clone(),
        (None, Some(p)) => {
            run.inputs.push(p.clone());
            load_dag(p).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?
        }
        (None, None) => return Err(Failure::input("either --model or --dag is required")),
    };
    let dot = dag.to_dot();
    match &a.out {
        Some(p) => {
            write_file(p, &dot)?;
            run.outputs.push(p.clone());
        }
        None => run.stdout = dot,
    }
    Ok(())
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Describe(_) => "describe",
        Command::Fit(_) => "fit",
        Command::Learn(_) => "learn",
        Command::Query(_) => "query",
        Command::Sample(_) => "sample",
        Command::ExportDot(_) => "export-dot",
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    let started = unix_now();
    let mut run = Run::default();
    let result = match &cli.command {
        Command::Describe(a) => describe(a, &mut run),
        Command::Fit(a) => fit(a, &mut run),
        Command::Learn(a) => learn(a, &mut run),
        Command::Query(a) => query(a, &mut run),
        Command::Sample(a) => sample(a, &mut run),
        Command::ExportDot(a) => export_dot(a, &mut run),
    };
    if let Err(f) = result {
        eprintln!("error: {}", f.message);
        return f.code;
    }
    print!("{}", run.stdout);
    let manifest = Manifest {
        tool: "clgnet",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: subcommand_name(&cli.command),
        args: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        seed: run.seed,
        inputs: run.inputs.iter().map(|p| record(p)).collect(),
        outputs: run.outputs.iter().map(|p| record(p)).collect(),
        started_unix: started,
        finished_unix: unix_now(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    if let Err(e) = fs::write(&cli.manifest, text) {
        eprintln!("error: cannot write manifest {}: {e}", cli.manifest.display());
        return EXIT_INPUT;
    }
    0
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
