use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "tbkit", version, about = "Run config-driven experiments and write JSON/CSV reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for `<subcommand>.json` and `<subcommand>.csv`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check size, accretivity and compatibility of a built-in system.
    CheckSystem(Io),
    /// Stopping-time decomposition of a cube.
    Decompose(Io),
    /// Carleson norm of the theta measure over a dyadic family.
    Carleson(Io),
    /// Square-function bound ratio across dilations.
    Sqfn(Io),
    /// Cancellation and kernel checks for a paraproduct.
    Paraproduct(Io),
    /// Local testing condition for an operator against a system.
    TbCondition(Io),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, io) = match &cli.command {
        Command::CheckSystem(io) => ("check-system", io),
        Command::Decompose(io) => ("decompose", io),
        Command::Carleson(io) => ("carleson", io),
        Command::Sqfn(io) => ("sqfn", io),
        Command::Paraproduct(io) => ("paraproduct", io),
        Command::TbCondition(io) => ("tb-condition", io),
    };
    let (code, summary) = tbkit::cli::run_cli(name, &io.config, &io.out);
    if code == 2 {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    ExitCode::from(code as u8)
}
