use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ranklab::harness::{self, Format, Mode, RunConfig, RunReport, TournamentSource};
use ranklab::maxent::SolveStatus;
use ranklab::{Error, Result};

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "ranklab", version, about = "Entropy bounds for orders that agree with a tournament")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a tournament in the text format.
    Gen(GenArgs),
    /// Build the decomposition tree and check its invariants.
    Decompose(RunArgs),
    /// Crossing-count entropy checks on a subset distribution.
    Mpc(RunArgs),
    /// Solve the max-entropy program for a tournament.
    Maxent(RunArgs),
    /// Replay the general argument on an explicit distribution.
    Replay(RunArgs),
    /// Run the dyadic-block pipeline on a transitive tournament.
    Transitive(RunArgs),
    /// Validate a JSONL report and re-export or summarize it.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Transitive,
    Random,
    Rotational,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Jsonl => Format::Jsonl,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `transitive:N`, `random:N`, `rotational:N` or `file:PATH`.
    #[arg(long)]
    tournament: Option<String>,
    /// `maxent`, `uniform`, `identity` or `file:PATH`.
    #[arg(long)]
    distribution: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    leaf_threshold: Option<usize>,
    #[arg(long)]
    floor_fraction: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Subset distribution file (`mpc`).
    #[arg(long)]
    input: Option<String>,
    /// Generate a seeded subset distribution on `[2m]` (`mpc`).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) | Error::FloorUnreachable { .. } | Error::PartitionFailed { .. } => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

fn build_config(mode: Mode, args: &RunArgs) -> Result<(RunConfig, Option<PathBuf>, Format)> {
    let default_source = match mode {
        Mode::Decompose => TournamentSource::Transitive(81),
        _ => TournamentSource::Transitive(4),
    };
    let mut config = RunConfig::new(mode, default_source);
    let mut out = None;
    let mut format = Format::Jsonl;
    if let Some(path) = &args.config {
        let extra = config.apply_file(&std::fs::read_to_string(path)?)?;
        if let Some(o) = extra.get("out") {
            out = Some(PathBuf::from(o));
        }
        if let Some(f) = extra.get("format") {
            format = f.parse()?;
        }
        config.mode = mode;
    }
    if let Some(t) = &args.tournament {
        config.tournament = t.parse()?;
    }
    if let Some(d) = &args.distribution {
        config.distribution = d.parse()?;
    }
    macro_rules! override_with {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field.clone() {
                config.$field = v.into();
            }
        )*};
    }
    override_with!(epsilon, floor_fraction, margin, samples, tolerance, max_iterations);
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    if args.delta.is_some() {
        config.delta = args.delta;
    }
    if args.leaf_threshold.is_some() {
        config.leaf_threshold = args.leaf_threshold;
    }
    if args.input.is_some() {
        config.input = args.input.clone();
    }
    if args.m.is_some() {
        config.m = args.m;
    }
    if let Some(o) = &args.out {
        out = Some(o.clone());
    }
    if let Some(f) = args.format {
        format = f.into();
    }
    config.validate()?;
    Ok((config, out, format))
}

fn emit(report: &RunReport, out: Option<&PathBuf>, format: Format) -> Result<()> {
    let text = harness::render_report(report, format)?;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    eprint!("{}", report.summary());
    Ok(())
}

fn run_mode(mode: Mode, args: &RunArgs) -> Result<u8> {
    let (config, out, format) = build_config(mode, args)?;
    let report = harness::run(&config)?;
    emit(&report, out.as_ref(), format)?;
    let solver_failed = report.records.iter().any(|r| {
        matches!(r, harness::Record::Solver(s) if !s.feasible || s.status == SolveStatus::NotConverged)
    });
    if solver_failed {
        return Ok(EXIT_INFEASIBLE);
    }
    Ok(if report.all_passed() { 0 } else { EXIT_VIOLATION })
}

fn gen(args: &GenArgs) -> Result<u8> {
    let t = match args.kind {
        Kind::Transitive => ranklab::tournament::Tournament::transitive(args.n),
        Kind::Rotational => ranklab::tournament::Tournament::rotational(args.n),
        Kind::Random => {
            let seed = args
                .seed
                .ok_or_else(|| Error::Config("random tournaments need --seed".into()))?;
            ranklab::tournament::Tournament::random(args.n, seed)
        }
    };
    match &args.out {
        Some(path) => std::fs::write(path, t.to_text())?,
        None => print!("{}", t.to_text()),
    }
    Ok(0)
}

fn report(args: &ReportArgs) -> Result<u8> {
    let report = harness::parse_report(&std::fs::read_to_string(&args.input)?)?;
    emit(&report, args.out.as_ref(), args.format.map_or(Format::Jsonl, Format::from))?;
    Ok(if report.all_passed() { 0 } else { EXIT_VIOLATION })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Decompose(a) => run_mode(Mode::Decompose, a),
        Command::Mpc(a) => run_mode(Mode::Mpc, a),
        Command::Maxent(a) => run_mode(Mode::Maxent, a),
        Command::Replay(a) => run_mode(Mode::Replay, a),
        Command::Transitive(a) => run_mode(Mode::Transitive, a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
