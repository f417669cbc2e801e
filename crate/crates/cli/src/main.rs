//! `qinfo` command-line front end.

mod commands;
mod files;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

const EXIT_VALIDATION: u8 = 2;
const EXIT_CHECK: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "qinfo", version, about = "Quantum information toolkit")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "QINFO_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Print CSV rows instead of aligned tables.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Run the acceptance criteria and exit 3 if any fails.
    #[arg(long)]
    pub check: bool,
    /// Restrict --check to these criteria (comma separated).
    #[arg(long, value_delimiter = ',', requires = "check")]
    pub criterion: Vec<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Von Neumann entropy and spectrum of a state.
    Entropy(EntropyArgs),
    /// Trace distance, fidelity and derived metrics between two states.
    Distance(DistanceArgs),
    /// Apply channels to states.
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Process tomography.
    #[command(subcommand)]
    Tomography(TomographyCmd),
    /// Two-qubit entanglement.
    #[command(subcommand)]
    Entangle(EntangleCmd),
    /// Schumacher compression.
    #[command(subcommand)]
    Compress(CompressCmd),
    /// Error-correcting codes.
    #[command(subcommand)]
    Qec(QecCmd),
    /// Coherent information capacity bounds.
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Teleportation and superdense coding.
    #[command(subcommand)]
    Protocols(ProtocolsCmd),
    /// Randomized inequality checks.
    #[command(subcommand)]
    Fuzz(FuzzCmd),
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    /// Density matrix file.
    #[arg(long, conflicts_with = "diag", required_unless_present = "diag")]
    pub state: Option<PathBuf>,
    /// Diagonal state from comma-separated probabilities.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub diag: Vec<f64>,
    /// Keep only these subsystems before computing.
    #[arg(long, value_delimiter = ',')]
    pub keep: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub sigma: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum ChannelCmd {
    /// Apply a channel to a state and report the entropy budget.
    Apply {
        /// Channel file or spec such as `amplitude_damping:0.3`.
        #[arg(long)]
        channel: String,
        /// Input state file; defaults to the maximally mixed state.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Write the normalized output state here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum TomographyCmd {
    /// Simulate process tomography of a channel and print χ.
    Run {
        #[arg(long)]
        channel: String,
        /// Probe a single measurement branch (trace-decreasing data).
        #[arg(long)]
        incomplete: bool,
        /// Write the reconstructed Kraus operators as a channel file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum EntangleCmd {
    /// Concurrence and entanglement of formation of the thermal two-qubit state.
    ThermalCurve {
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        #[arg(long, default_value_t = 0.05)]
        tmin: f64,
        #[arg(long, default_value_t = 3.0)]
        tmax: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum CompressCmd {
    /// Typical-subspace mass, rank and fidelity over block lengths.
    Sweep {
        /// Source eigenvalues.
        #[arg(long, value_delimiter = ',', default_value = "0.9,0.1")]
        probs: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "4,8,12,16,20")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
}

#[derive(Subcommand, Debug)]
pub enum QecCmd {
    /// Syndrome table and one correction cycle under noise.
    Demo {
        /// bit_flip, phase_flip or shor9
        #[arg(long, default_value = "bit_flip")]
        code: String,
        /// Error probability per qubit.
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        /// Random pure inputs for the minimum fidelity.
        #[arg(long, default_value_t = 50)]
        inputs: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum CapacityCmd {
    /// Maximize coherent information over inputs to n channel uses.
    Estimate {
        #[arg(long)]
        channel: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = qinfo::capacity::DEFAULT_RESTARTS)]
        restarts: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum ProtocolsCmd {
    /// Teleport a qubit; random input from the seed unless angles are given.
    Teleport {
        /// Polar angle of the input on the Bloch sphere.
        #[arg(long, requires = "phi", allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long, requires = "theta", allow_hyphen_values = true)]
        phi: Option<f64>,
    },
    /// Send two classical bits with one qubit.
    Superdense {
        #[arg(long)]
        bits: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum FuzzCmd {
    /// Random instances of every inequality family.
    Inequalities {
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if cli.check {
        return if commands::check(cli.seed, &cli.criterion) { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CHECK) };
    }
    let Some(command) = &cli.command else {
        use clap::CommandFactory;
        let _ = Cli::command().print_help();
        return ExitCode::from(EXIT_USAGE);
    };
    match commands::run(command, cli.seed) {
        Ok(tables) => {
            print!("{}", output::render(&tables, cli.csv, cli.seed));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
