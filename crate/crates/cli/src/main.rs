//! `spectrex`: extremality checks, bounds, decompositions, grid POVM splitting
//! and the reproduction suite from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{Job, Task};

#[derive(Parser)]
#[command(name = "spectrex", version, about = "Extreme points of spectrahedra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide membership and extremality of a point.
    Check(JobArgs),
    /// Audit the dimension and rank bounds at a point.
    Bounds(JobArgs),
    /// Write a point as a convex combination of extreme points.
    Decompose {
        #[command(flatten)]
        job: JobArgs,
        /// Upper limit on the number of components.
        #[arg(long, default_value_t = 64)]
        max_components: usize,
    },
    /// Split an oversupported grid POVM, or compress and test a small one.
    PovmSplit(JobArgs),
    /// Run the bundled reproduction suite.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct JobArgs {
    /// Input files, processed in order.
    #[arg(short, long = "input", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    tolerance_ker: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tolerance_psd: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long, env = "SPECTREX_SEED", default_value_t = spectrex::reproduce::DEFAULT_SEED)]
    seed: u64,
    /// Criteria to run, by key or number (comma separated or repeated).
    #[arg(long)]
    only: Vec<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn job(args: JobArgs, task: Task) -> Job {
    Job {
        task,
        inputs: args.inputs,
        output: args.output,
        tolerance_ker: args.tolerance_ker,
        tolerance_psd: args.tolerance_psd,
        format: args.format,
    }
}

fn main() -> ExitCode {
    // Usage errors share the input-error exit code.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_INPUT } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Check(a) => commands::run_job(job(a, Task::Check)),
        Command::Bounds(a) => commands::run_job(job(a, Task::Bounds)),
        Command::Decompose { job: a, max_components } => commands::run_job(job(a, Task::Decompose { max_components })),
        Command::PovmSplit(a) => commands::run_job(job(a, Task::PovmSplit)),
        Command::Reproduce(a) => commands::run_reproduce(a.seed, &a.only, a.output, a.format),
    };
    ExitCode::from(code)
}
