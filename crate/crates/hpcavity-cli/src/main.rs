use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hpcavity_cli::{run, Command, Overrides};

#[derive(Parser)]
#[command(name = "hpcavity", version, about = "Helicity-preserving metasurface cavity simulations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cavity transmission over a detuning or length-shift grid.
    TransmissionSweep(Common),
    /// Riemann–Silberstein map or on-axis field profile.
    FieldMap(Common),
    /// Simulated homodyne trace of molecules crossing the cavity.
    Sense(Common),
    /// Several routes on one grid, with per-point deviations.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output CSV; stdout when neither this nor the scenario sets one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (1 runs sequentially).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, c) = match cli.cmd {
        Cmd::TransmissionSweep(c) => (Command::TransmissionSweep, c),
        Cmd::FieldMap(c) => (Command::FieldMap, c),
        Cmd::Sense(c) => (Command::Sense, c),
        Cmd::Compare(c) => (Command::Compare, c),
    };
    let ov = Overrides { out: c.out, seed: c.seed, threads: c.threads };
    match run(cmd, &c.scenario, &ov) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
