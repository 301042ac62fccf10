use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod error;
mod run;
mod summary;

use error::CliError;
use run::{Invocation, Outcome};

/// Edgeworth corrector polynomials and the Monte Carlo experiments that check them.
///
/// Exit status: 0 on success, 2 on invalid input, 3 when a numerical guard aborts a run.
#[derive(Parser)]
#[command(name = "edgeworth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the corrector polynomial of a model as JSON.
    Expand(ExpandArgs),
    /// Error of the order-N expansion against exact moments or Monte Carlo, over n.
    Rate(RunArgs),
    /// Boxed-probability density estimate against the corrected Gaussian density.
    Density(RunArgs),
    /// Occupation time of a random walk against its Gaussian and Brownian counterparts.
    Occupation(RunArgs),
    /// Real roots of random trigonometric polynomials against the Kac–Rice limit.
    Roots(RunArgs),
    /// Small-ball probabilities of a random trigonometric sum.
    Smallball(RunArgs),
    /// Splitting draws against direct draws for a Doeblin certificate.
    Nummelin(RunArgs),
    /// Build the super kernel and write its grid and moments.
    Kernel(KernelArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config worker count.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExpandArgs {
    /// Config with `"experiment": "expand"`.
    #[arg(long, conflicts_with_all = ["model", "order"], required_unless_present = "model")]
    config: Option<PathBuf>,
    /// Model file (JSON), used together with --order.
    #[arg(long, requires = "order")]
    model: Option<PathBuf>,
    #[arg(long)]
    order: Option<usize>,
    /// Rescale the model to unit average covariance first.
    #[arg(long, requires = "model")]
    normalize: bool,
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel config; the default kernel is built without one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let (name, args) = match command {
        Command::Expand(a) => {
            let poly = match (a.config, a.model) {
                (Some(config), _) => match run::run(&Invocation {
                    subcommand: "expand",
                    config: Some(&config),
                    seed: None,
                    workers: None,
                    out_dir: Path::new("."),
                })? {
                    Outcome::Expansion(p) => p,
                    _ => unreachable!("expand configs yield an expansion"),
                },
                (None, Some(model)) => run::expand_model(&model, a.order.unwrap_or(0), a.normalize)?,
                (None, None) => unreachable!("clap requires --config or --model"),
            };
            let text = serde_json::to_string_pretty(&poly).map_err(|e| CliError::config("output", e.to_string()))?;
            println!("{text}");
            return Ok(());
        }
        Command::Kernel(a) => {
            let outcome = run::run(&Invocation {
                subcommand: "kernel",
                config: a.config.as_deref(),
                seed: None,
                workers: None,
                out_dir: &a.out_dir,
            })?;
            if let Outcome::Kernel { summary, files } = outcome {
                println!("kernel: mass {}  l1 {}", summary["mass"], summary["l1_norm"]);
                for (k, m) in summary["moments"].as_array().into_iter().flatten().enumerate().skip(1) {
                    println!("  moment {k}: {m}");
                }
                for f in files {
                    println!("wrote {}", f.display());
                }
            }
            return Ok(());
        }
        Command::Rate(a) => ("rate", a),
        Command::Density(a) => ("density", a),
        Command::Occupation(a) => ("occupation", a),
        Command::Roots(a) => ("roots", a),
        Command::Smallball(a) => ("smallball", a),
        Command::Nummelin(a) => ("nummelin", a),
    };
    let outcome = run::run(&Invocation {
        subcommand: name,
        config: Some(&args.config),
        seed: args.seed,
        workers: args.workers,
        out_dir: &args.out_dir,
    })?;
    if let Outcome::Experiment { result, files } = outcome {
        print!("{}", summary::render(&result, &files));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
