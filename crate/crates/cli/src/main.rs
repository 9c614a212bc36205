//! `pjx`: classify parameters, evaluate exact solutions, estimate blow-up and
//! rerun the worked examples from the command line.

mod commands;
mod output;
mod samples;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pjx_core::{Error, ErrorKind};

#[derive(Parser, Debug)]
#[command(name = "pjx", version, about = "Generalized inviscid Proudman-Johnson equation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Regularity verdict for (lambda, q) with L^p verdicts at each p.
    Classify(ClassifyArgs),
    /// Grid dumps of the exact solution at sampled clock values.
    Solve(SolveArgs),
    /// Blow-up time, type and locations for a profile.
    Blowup(BlowupArgs),
    /// Reruns a worked example and checks it against its reference numbers.
    Example(ExampleArgs),
    /// Norms and energy along a sweep of clock values.
    Sweep(SweepArgs),
    /// Method-of-lines snapshots of the PDE, for comparison with the formula.
    Mol(MolArgs),
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, allow_negative_numbers = true)]
    q: f64,
    /// Exponents for the L^p verdicts (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0])]
    p: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ProfileArgs {
    /// Name of a built-in profile.
    #[arg(long, conflicts_with = "profile_json", required_unless_present = "profile_json")]
    pub builtin: Option<String>,
    /// Profile description: inline JSON or a path to a JSON file.
    #[arg(long)]
    pub profile_json: Option<String>,
    /// Defaults to the profile's suggested value.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Absolute quadrature tolerance.
    #[arg(long)]
    pub tol_abs: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    pub tol_rel: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    /// Clock values `a:b:step` or a single value.
    #[arg(long, conflicts_with = "t")]
    pub eta: Option<String>,
    /// Physical times `a:b:step` or a single value.
    #[arg(long)]
    pub t: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    samples: SampleArgs,
    /// Number of alpha intervals per frame.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    samples: SampleArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BlowupArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ExampleArgs {
    /// 1a, 1b, 2a, 2b, 3, 4, 5 or 6 (1 and 2 mean 1a and 2a).
    id: String,
    /// Directory for the frames CSV and report JSON.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct MolArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Snapshot times `a:b:step` or a single value.
    #[arg(long)]
    t: String,
    /// Number of cells (a power of two, at least 256).
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(std::io::Error),
    /// An example ran but missed its reference numbers.
    Failed,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed => 1,
            CliError::Io(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Domain => 2,
                ErrorKind::Range => 3,
                ErrorKind::Numerical => 4,
            },
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PJX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Parameter(format!("PJX_THREADS = `{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Classify(a) => commands::classify(a.lambda, a.q, &a.p, &a.output),
        Command::Solve(a) => commands::solve(&a.profile, &a.samples, a.grid, &a.output),
        Command::Sweep(a) => commands::sweep(&a.profile, &a.samples, &a.output),
        Command::Blowup(a) => commands::blowup(&a.profile, &a.output),
        Command::Example(a) => commands::example(&a.id, a.out.as_deref()),
        Command::Mol(a) => commands::mol(&a.profile, &a.t, a.grid, &a.output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Core(err) => eprintln!("pjx: {err}"),
                CliError::Io(err) => eprintln!("pjx: {err}"),
                CliError::Failed => {}
            }
            ExitCode::from(e.exit_code())
        }
    }
}
