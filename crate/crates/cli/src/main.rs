use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use esg_cli::{
    run_check_ssd, run_classify_profile, run_compute, run_gaussian, run_optimize, write_output,
    CliError, ComputeArgs, Mode,
};
use esg_core::adjusted::DEFAULT_GAUSSIAN_ATOMS;

#[derive(Parser)]
#[command(name = "esg", version, about = "Adjusted Expected Shortfall toolkit")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rolling-window VaR, ES and adjusted ES of a date,value series.
    Compute {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "returns")]
        mode: Mode,
        #[arg(long)]
        window: usize,
        /// Trailing simple-mean length applied to the report rows.
        #[arg(long, default_value_t = 0)]
        smooth: usize,
        #[arg(long)]
        profile: PathBuf,
        /// Level for the var_p1 and es_p1 columns (defaults to the profile's first threshold).
        #[arg(long)]
        level: Option<f64>,
    },
    /// Does the sample in --x dominate the sample in --z in second order?
    CheckSsd {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        z: PathBuf,
        #[arg(long, value_enum, default_value = "losses")]
        mode: Mode,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Report the class of a risk profile.
    ClassifyProfile {
        #[arg(long)]
        profile: PathBuf,
    },
    /// Solve an optimization problem on a finite market.
    Optimize {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        request: PathBuf,
    },
    /// Adjusted ES of a Gaussian loss.
    Gaussian {
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GAUSSIAN_ATOMS)]
        atoms: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let text = match &cli.command {
        Command::Compute { input, mode, window, smooth, profile, level } => run_compute(&ComputeArgs {
            input,
            mode: *mode,
            window: *window,
            smoothing: *smooth,
            profile,
            level: *level,
        })?,
        Command::CheckSsd { x, z, mode, tol } => run_check_ssd(x, z, *mode, *tol)?,
        Command::ClassifyProfile { profile } => run_classify_profile(profile)?,
        Command::Optimize { market, request } => run_optimize(market, request)?,
        Command::Gaussian { mu, sigma, profile, atoms } => run_gaussian(*mu, *sigma, profile, *atoms)?,
    };
    write_output(cli.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("ERROR 2: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("ERROR {code}: {e}");
            ExitCode::from(code as u8)
        }
    }
}
