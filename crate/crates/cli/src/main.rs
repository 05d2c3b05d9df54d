use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrsynth::ancilla::{ancilla_synth, ParityTable};
use lrsynth::bench::{self, BenchConfig, BenchRow};
use lrsynth::bruteforce::{bfs_depth_classes, BlockTables};
use lrsynth::portfolio::{Method, Portfolio};
use lrsynth::qc::QcCircuit;
use lrsynth::resynth::{parse_sidecar, resynthesize_qc};
use lrsynth::{BitMatrix, Error};

const DEFAULT_BENCH_METHODS: &str = "gaussian,kutin,dacsynth";

#[derive(Parser)]
#[command(
    name = "lrsynth",
    version,
    about = "Depth-oriented synthesis of CNOT circuits"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one square operator and keep the best circuit.
    Synth(SynthArgs),
    /// Random-operator benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Count k×k matrix classes by minimal reduction depth.
    Table2(Table2Args),
    /// Re-synthesize the CNOT chunks of a `.qc` circuit.
    Resynth(ResynthArgs),
    /// Map an input parity table to an output table using ancilla wires.
    Ancilla(AncillaArgs),
}

#[derive(Args)]
struct MethodArgs {
    /// Comma-separated method tags. Defaults: every square method for synth
    /// and resynth, `gaussian,kutin,dacsynth` for bench, `dacsynth` for ancilla.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl MethodArgs {
    fn portfolio(&self, default: Option<&str>) -> Result<Portfolio, Error> {
        match self.methods.as_deref().or(default) {
            Some(list) => Portfolio::parse(list, self.seed),
            None => Ok(Portfolio::full(self.seed)),
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Matrix file: `<rows> <cols>` header, then rows of 0/1.
    input: PathBuf,
    #[command(flatten)]
    methods: MethodArgs,
    /// Output `.qc` file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-method statistics as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Operators from random depth-2n circuits for each n in a range.
    Worst(WorstArgs),
    /// Operators from random circuits over a range of depths at fixed n.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct BenchCommon {
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[command(flatten)]
    methods: MethodArgs,
    /// CSV output (standard output when absent).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record wall time per run in the `ms` column.
    #[arg(long)]
    timing: bool,
}

impl BenchCommon {
    fn config(&self) -> Result<BenchConfig, Error> {
        let portfolio = self.methods.portfolio(Some(DEFAULT_BENCH_METHODS))?;
        let methods: Vec<Method> = portfolio.square_methods().collect();
        if methods.is_empty() {
            return Err(Error::UnknownMethod("no square method given".into()));
        }
        Ok(BenchConfig {
            methods,
            samples: self.samples,
            seed: self.methods.seed,
            timing: self.timing,
        })
    }
}

#[derive(Args)]
struct WorstArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..))]
    n_min: u64,
    #[arg(long)]
    n_max: u64,
    #[command(flatten)]
    common: BenchCommon,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    #[arg(long, default_value_t = 1)]
    depth_min: usize,
    #[arg(long)]
    depth_max: usize,
    #[command(flatten)]
    common: BenchCommon,
}

#[derive(Args)]
struct Table2Args {
    /// Block size, or an inclusive range such as `1..4`.
    #[arg(long)]
    k: String,
    /// Stop the search after this many layers.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Write the reduction tables for the largest k to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ResynthArgs {
    /// Input `.qc` circuit.
    input: PathBuf,
    #[command(flatten)]
    methods: MethodArgs,
    /// Parity tables for chunks with ancillas.
    #[arg(long)]
    ancilla: Option<PathBuf>,
    /// Output `.qc` file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AncillaArgs {
    /// Output parity table (`p×n`).
    #[arg(long)]
    a_out: PathBuf,
    /// Input parity table; defaults to the inputs on the first n wires.
    #[arg(long)]
    a_in: Option<PathBuf>,
    /// Methods for the diagonal blocks.
    #[command(flatten)]
    methods: MethodArgs,
    /// Output `.qc` file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Lib(Error),
    Io(PathBuf, io::Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Lib(Error::UnknownMethod(_)) => 1,
            CliError::Lib(Error::NoMethodSucceeded) => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn read_matrix(path: &Path) -> Result<BitMatrix, CliError> {
    Ok(read(path)?.parse()?)
}

/// Writes to `path`, or standard output.
fn emit(path: Option<&Path>, data: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, data).map_err(|e| CliError::Io(p.to_path_buf(), e)),
        None => io::stdout()
            .write_all(data)
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
    }
}

/// Reports go to standard output unless it already carries the data.
fn report(data_on_stdout: bool, line: &str) {
    if data_on_stdout {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

fn write_rows(rows: &[BenchRow], path: Option<&Path>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    bench::write_csv(rows, &mut buf).map_err(|e| CliError::Io(PathBuf::from("<csv>"), e))?;
    emit(path, &buf)
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let a = read_matrix(&args.input)?;
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!("{}x{} operator", a.rows(), a.cols())).into());
    }
    let portfolio = args.methods.portfolio(None)?;
    let outcome = portfolio.run(&a)?;
    let to_stdout = args.out.is_none();
    let mut rows = Vec::new();
    for run in &outcome.runs {
        let line = match &run.result {
            Some(r) => format!(
                "{:<20} depth {:>5}  cnots {:>6}  {} ms",
                run.method, r.depth, r.cnot_count, run.ms
            ),
            None => format!("{:<20} no result", run.method),
        };
        report(to_stdout, &line);
        rows.push(BenchRow {
            n: a.rows(),
            method: run.method.to_string(),
            sample: 0,
            gen_depth: 0,
            depth: run.result.as_ref().map(|r| r.depth),
            cnots: run.result.as_ref().map(|r| r.cnot_count),
            ms: run.ms,
        });
    }
    if let Some(p) = &args.csv {
        write_rows(&rows, Some(p))?;
    }
    let best = outcome.best().ok_or(Error::NoMethodSucceeded)?;
    report(
        to_stdout,
        &format!(
            "selected {} (depth {}, cnots {})",
            best.method, best.depth, best.cnot_count
        ),
    );
    let mut qc = QcCircuit::with_default_names(best.circuit.clone());
    qc.push_out_perm(&best.out_permutation.inverse());
    emit(args.out.as_deref(), qc.write().as_bytes())
}

fn cmd_bench(cmd: &BenchCommand) -> Result<(), CliError> {
    let (rows, csv) = match cmd {
        BenchCommand::Worst(w) => {
            if w.n_max < w.n_min {
                return Err(CliError::Usage("--n-max is below --n-min".into()));
            }
            let cfg = w.common.config()?;
            (
                bench::bench_worst(w.n_min as usize, w.n_max as usize, &cfg)?,
                &w.common.csv,
            )
        }
        BenchCommand::Sweep(s) => {
            if s.depth_max < s.depth_min {
                return Err(CliError::Usage("--depth-max is below --depth-min".into()));
            }
            let cfg = s.common.config()?;
            (
                bench::bench_sweep(s.n as usize, s.depth_min, s.depth_max, &cfg)?,
                &s.common.csv,
            )
        }
    };
    log::info!("{} rows", rows.len());
    write_rows(&rows, csv.as_deref())
}

fn parse_k_range(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("invalid --k `{s}`"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let k = s.trim().parse().map_err(|_| bad())?;
            (k, k)
        }
    };
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn cmd_table2(args: &Table2Args) -> Result<(), CliError> {
    let (lo, hi) = parse_k_range(&args.k)?;
    for k in lo..=hi {
        let counts = bfs_depth_classes(k, k, args.max_depth.unwrap_or(usize::MAX))?.counts;
        let cells: Vec<String> = counts.iter().map(usize::to_string).collect();
        println!("k={k}: {}", cells.join(" "));
    }
    if let Some(p) = &args.out {
        let tables = BlockTables::build(hi)?;
        emit(Some(p), &tables.to_bytes())?;
        log::info!("wrote tables for k={hi} to {}", p.display());
    }
    Ok(())
}

fn cmd_resynth(args: &ResynthArgs) -> Result<(), CliError> {
    let qc = QcCircuit::parse(&read(&args.input)?)?;
    let portfolio = args.methods.portfolio(None)?;
    let tables = match &args.ancilla {
        Some(p) => parse_sidecar(&read(p)?)?,
        None => HashMap::new(),
    };
    let (out_qc, out) = resynthesize_qc(&qc, &portfolio, &tables)?;
    let to_stdout = args.out.is_none();
    let (b, a) = (out.before, out.after);
    report(to_stdout, &format!("chunks   {}", out.chunks));
    report(to_stdout, &format!("depth    {} -> {}", b.depth, a.depth));
    report(to_stdout, &format!("cnots    {} -> {}", b.cnots, a.cnots));
    report(
        to_stdout,
        &format!("t-count  {} -> {}", b.t_count, a.t_count),
    );
    report(
        to_stdout,
        &format!("t-depth  {} -> {}", b.t_depth, a.t_depth),
    );
    for (m, w) in &out.wins {
        let sole = out.sole_wins.get(m).copied().unwrap_or(0);
        report(
            to_stdout,
            &format!("best {m:<20} {w:>4} chunks ({sole} alone)"),
        );
    }
    emit(args.out.as_deref(), out_qc.write().as_bytes())
}

fn cmd_ancilla(args: &AncillaArgs) -> Result<(), CliError> {
    let a_out = ParityTable::new(read_matrix(&args.a_out)?)?;
    let a_in = match &args.a_in {
        Some(p) => ParityTable::new(read_matrix(p)?)?,
        None => ParityTable::fresh(a_out.vars(), a_out.wires()),
    };
    let portfolio = args.methods.portfolio(Some("dacsynth"))?;
    let r = ancilla_synth(&a_in, &a_out, |d| portfolio.synthesize(d))?;
    let to_stdout = args.out.is_none();
    report(
        to_stdout,
        &format!(
            "depth {} (prep {} + {}, blocks {}, relabel {}), cnots {}",
            r.depth,
            r.prep_in.depth(),
            r.prep_out_inverse.depth(),
            r.d_phase.depth(),
            r.relabel.depth(),
            r.cnot_count
        ),
    );
    emit(
        args.out.as_deref(),
        QcCircuit::with_default_names(r.circuit).write().as_bytes(),
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(b) => cmd_bench(b),
        Command::Table2(a) => cmd_table2(a),
        Command::Resynth(a) => cmd_resynth(a),
        Command::Ancilla(a) => cmd_ancilla(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
