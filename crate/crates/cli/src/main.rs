use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qlatent::problem::{preset, Mode, OverlapMode};
use qlatent_cli::run::{apply_overrides, execute, load_config, Overrides};
use qlatent_cli::{artifacts, report, CliError};

#[derive(Parser)]
#[command(name = "qlatent", version, about = "Solve differential equations with latent-space quantum models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem in a config file and write artifacts.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// variational | lse
        #[arg(long)]
        mode: Option<String>,
        /// exact | shots:N
        #[arg(long)]
        overlap: Option<String>,
        /// Output directory (default: runs/<problem name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show a built-in problem, or print it as a config file with --emit.
    Preset {
        name: String,
        #[arg(long)]
        emit: bool,
    },
    /// Summarize the artifacts in a run directory.
    Report { dir: PathBuf },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seed, epochs, mode, overlap, out } => {
            let overrides = Overrides {
                seed,
                epochs,
                mode: mode.map(|m| m.parse::<Mode>()).transpose()?,
                overlap: overlap.map(|o| o.parse::<OverlapMode>()).transpose()?,
            };
            let problem = apply_overrides(load_config(&config)?, &overrides)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("runs").join(&problem.name));
            let outcome = execute(&problem)?;
            artifacts::write_all(&dir, &problem, &outcome)?;
            println!("wrote {}", dir.display());
            print!("{}", report::load(&dir)?.render());
        }
        Command::Preset { name, emit } => {
            let p = preset(&name)?;
            if emit {
                print!("{}", p.to_toml_string()?);
            } else {
                println!("name: {}", p.name);
                println!("qubits: {}", p.dimensions.iter().map(|d| d.qubits.to_string()).collect::<Vec<_>>().join("+"));
                println!("terms: {}", p.terms.len());
                println!("epochs: {}", p.train.epochs);
            }
        }
        Command::Report { dir } => print!("{}", report::load(&dir)?.render()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
