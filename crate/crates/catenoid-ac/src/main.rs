use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use catenoid_ac::harness;

#[derive(Parser)]
#[command(
    name = "catenoid-ac",
    version,
    about = "Multi-layer Allen-Cahn dynamics on an N-dimensional catenoid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print beta, the spacing constants b_l, and the centering constants
    /// gamma_j as `name,value` lines.
    Constants {
        #[arg(long)]
        k: usize,
        /// Ambient dimension.
        #[arg(long = "N")]
        n: u32,
    },
    /// Integrate the gap profile down to a target time and write
    /// `t,eta,eta_prime` per accepted step.
    Eta {
        #[arg(long = "t-end", allow_negative_numbers = true)]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Toda flow from the construction's layer positions and write
    /// `t,rho_1..rho_k,h_1..h_k` per accepted step.
    Toda {
        #[arg(long)]
        k: usize,
        #[arg(long = "N")]
        n: u32,
        #[arg(long, allow_negative_numbers = true)]
        t0: f64,
        #[arg(long = "t-end", allow_negative_numbers = true)]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full PDE experiment described by a key=value config file;
    /// writes track.csv, snapshots.csv, and manifest.txt.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate the weighted ansatz-error diagnostic at the given times and
    /// write `t,sup_E_over_phi,ratio`.
    ErrorCheck {
        #[arg(long)]
        k: usize,
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        sigma: f64,
        /// Comma-separated sample times.
        #[arg(long = "t", value_delimiter = ',', allow_hyphen_values = true)]
        t: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> catenoid_ac::Result<()> {
    match cli.command {
        Command::Constants { k, n } => {
            for line in harness::constants_lines(k, n)? {
                println!("{line}");
            }
        }
        Command::Eta { t_end, out } => {
            harness::run_eta_csv(t_end, &out)?;
        }
        Command::Toda {
            k,
            n,
            t0,
            t_end,
            out,
        } => {
            harness::run_toda_csv(k, n, t0, t_end, &out)?;
        }
        Command::Simulate { config } => {
            let cfg = harness::RunConfig::from_file(&config)?;
            let report = harness::run_experiment(&cfg)?;
            println!(
                "wrote {} snapshots to {} (max deviation from Toda: {:.6})",
                report.track.times.len(),
                cfg.output_dir.display(),
                report.track.max_deviation()
            );
        }
        Command::ErrorCheck {
            k,
            n,
            sigma,
            t,
            out,
        } => {
            harness::run_error_check(k, n, sigma, &t, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
