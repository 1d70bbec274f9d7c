use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sastra::cli::{dispatch, parse_config, DispatchOptions, Mode};
use sastra::Error;

#[derive(Parser)]
#[command(name = "sastra", version, about = "Stochastic optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated trials at a fixed sample budget.
    Run(Common),
    /// Sample complexity N(epsilon, beta) for each epsilon.
    Complexity(Common),
    /// Sample complexity over a decreasing epsilon list with a fitted exponent.
    Curve(Common),
    /// Built-in invariant checks.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Exit nonzero on saturated searches, failed trials or non-monotone curves.
    #[arg(long)]
    strict: bool,
    /// Report path; overrides the config's output key.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Run(c) => (Mode::Run, c),
        Command::Complexity(c) => (Mode::Complexity, c),
        Command::Curve(c) => (Mode::Curve, c),
        Command::Verify(c) => (Mode::Verify, c),
    };
    match run(mode, common) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match &e {
                Error::Config(list) => {
                    eprintln!("error: invalid config");
                    for m in list {
                        eprintln!("  {m}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(2)
        }
    }
}

fn run(mode: Mode, c: Common) -> sastra::Result<u8> {
    let text = std::fs::read_to_string(&c.config).map_err(|source| Error::Io {
        path: c.config.clone(),
        source,
    })?;
    let config = parse_config(&text)?;
    let outcome = dispatch(
        &config,
        mode,
        &DispatchOptions {
            strict: c.strict,
            out: c.out,
        },
    )?;
    eprintln!("{}", outcome.summary);
    Ok(outcome.exit_code as u8)
}
