use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod delta;
mod fit;

use votepriv_core::checks::{run_suite, CheckConfig};
use votepriv_core::geometric::{exact_dp_ratio, truncated_geometric, utility};
use votepriv_core::{format_rational, parse_rational, Error};

#[derive(Parser)]
#[command(
    name = "votepriv",
    version,
    about = "Exact distributional privacy of voting rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact δ for a range of electorate sizes.
    Delta(delta::DeltaArgs),
    /// Fit δ(n) = 1/sqrt(a·n + b) to a CSV produced by `delta`.
    Fit(fit::FitArgs),
    /// Run a randomized verification suite.
    Check(CheckArgs),
    /// Truncated geometric mechanism: matrix, exact DP ratio, utility.
    Geom(GeomArgs),
}

#[derive(clap::Args)]
struct CheckArgs {
    /// trails | oracle | postprocess | lemma1 | geom | bounds
    suite: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    #[arg(long, default_value_t = 8)]
    n_max: u32,
}

#[derive(clap::Args)]
struct GeomArgs {
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    gamma: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

/// A failure carrying its process exit code.
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ResourceGuard(_) => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn check(args: CheckArgs) -> Result<ExitCode, Failure> {
    let report = run_suite(
        &args.suite,
        &CheckConfig {
            seed: args.seed,
            cases: args.cases,
            n_max: args.n_max,
        },
    )?;
    print!("{report}");
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn geom(args: GeomArgs) -> Result<ExitCode, Failure> {
    let alpha = parse_rational(&args.alpha)?;
    let mx = truncated_geometric(&alpha, args.n)?;
    println!("{mx}");
    let ratio = exact_dp_ratio(&mx);
    println!("dp ratio: {ratio} (epsilon {:.6})", ratio.epsilon());
    if let Some(gamma) = args.gamma {
        let gamma = parse_rational(&gamma)?;
        let u = utility(&mx, &gamma)?;
        println!(
            "utility: {} ({:.6})",
            format_rational(&u),
            votepriv_core::rational::to_f64(&u)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Delta(args) => delta::run(args),
        Command::Fit(args) => fit::run(args),
        Command::Check(args) => check(args),
        Command::Geom(args) => geom(args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
