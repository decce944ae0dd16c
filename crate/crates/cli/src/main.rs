use clap::{Parser, ValueEnum};
use parabolic_cli::{error_report, read_scenario, run_command, write_outputs, CliError, Command};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Check,
    SolveGreen,
    SolveBand,
    Asnorm,
    Spectrum,
    Certify,
    Nonlinear,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Check => Command::Check,
            Cmd::SolveGreen => Command::SolveGreen,
            Cmd::SolveBand => Command::SolveBand,
            Cmd::Asnorm => Command::AsNorm,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Certify => Command::Certify,
            Cmd::Nonlinear => Command::Nonlinear,
        }
    }
}

/// Bounded whole-line solutions of x' = Ax + y from a JSON scenario.
///
/// The report goes to stdout. Exit status 0 on success, 2 when the scenario
/// or a solver precondition is rejected, 1 on internal failure.
/// DICHOTOMY_THREADS caps the worker pool.
#[derive(Debug, Parser)]
#[command(name = "parabolic", version)]
struct Args {
    command: Cmd,
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json and solution.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the sampled solution as CSV (to --out, else the working directory).
    #[arg(long)]
    csv: bool,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DICHOTOMY_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Scenario(format!("DICHOTOMY_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))
}

/// Writes to stdout; a closed pipe is not an error worth dying over.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|_| out.flush());
}

fn run(args: &Args) -> Result<(), CliError> {
    init_threads()?;
    let mut scenario = read_scenario(&args.config)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let outcome = run_command(args.command.into(), &scenario)?;
    let text = serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Internal(e.to_string()))?;
    emit(&text);
    match &args.out {
        Some(dir) => write_outputs(&outcome, dir, args.csv)?,
        None if args.csv => write_outputs(&outcome, &PathBuf::from("."), true)?,
        None => {}
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command: Command = args.command.into();
    let result =
        std::panic::catch_unwind(|| run(&args)).unwrap_or_else(|_| Err(CliError::Internal("solver panicked".into())));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = error_report(Some(command), &e);
            emit(&serde_json::to_string_pretty(&doc).unwrap_or_default());
            eprintln!("error: {} ({})", e, e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
