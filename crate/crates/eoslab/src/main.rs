use clap::{Args, Parser, Subcommand};
use eoslab::cli_io::{self, CommandKind};
use eoslab::EosError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "eoslab", about = "Electro-optic sampling statistics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the declarative run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed override for stochastic commands.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Photon-number distribution of the configured probe.
    ProbeDist(RunArgs),
    /// Photocount-difference distributions, susceptibilities, and D curves.
    Eos(RunArgs),
    /// Calibrate the signal coupling to a target peak-to-peak D amplitude.
    Calibrate(RunArgs),
    /// D curves and advantage ratios across detector efficiencies.
    EtaSweep(RunArgs),
    /// Radial Wigner cut, normalization, and negativity volume.
    Wigner(RunArgs),
    /// Band-scheme threshold sweep and local search.
    Bandopt(RunArgs),
}

fn main() {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::ProbeDist(a) => (CommandKind::ProbeDist, a),
        Command::Eos(a) => (CommandKind::Eos, a),
        Command::Calibrate(a) => (CommandKind::Calibrate, a),
        Command::EtaSweep(a) => (CommandKind::EtaSweep, a),
        Command::Wigner(a) => (CommandKind::Wigner, a),
        Command::Bandopt(a) => (CommandKind::Bandopt, a),
    };
    match cli_io::run(kind, &args.config, &args.out, args.seed) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                EosError::Config(_) | EosError::Domain(_) => 2,
                _ => 3,
            };
            std::process::exit(code);
        }
    }
}
