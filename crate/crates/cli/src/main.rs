//! `rydqubo`: build QUBO instances, encode them for a Rydberg-atom annealer,
//! optimize annealing schedules and report hardness.

mod commands;
mod exit;
mod instance;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::instance::Penalties;

#[derive(Parser, Debug)]
#[command(
    name = "rydqubo",
    version,
    about = "QUBO problems on a simulated Rydberg-atom annealer"
)]
pub struct Cli {
    /// Seed for layout restarts and optimizer restarts.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON file with `limits`, `plan`, `propagation` and `layout` sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Ideal)]
    pub mode: Mode,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Target interactions used as given; signed couplings allowed.
    Ideal,
    /// Van der Waals couplings only, realized through an atom layout.
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConventionArg {
    /// Ising energies without the constant offset.
    Ising,
    /// QUBO cost including constants.
    Cost,
}

#[derive(Args, Debug, Clone)]
pub struct PenaltyArgs {
    /// Penalty weight for two-SAT, mixed and set packing.
    #[arg(long)]
    pub penalty: Option<f64>,
    /// First penalty for QAP and protein.
    #[arg(long)]
    pub p1: Option<f64>,
    /// Second penalty for QAP and protein.
    #[arg(long)]
    pub p2: Option<f64>,
}

impl PenaltyArgs {
    fn penalties(&self) -> Penalties {
        Penalties {
            penalty: self.penalty,
            p1: self.p1,
            p2: self.p2,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Reference instance name, problem-instance JSON or model JSON.
    #[arg(long)]
    pub instance: String,
    #[command(flatten)]
    pub penalties: PenaltyArgs,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a QUBO model file.
    Problem {
        /// One of the built-in reference instances.
        #[arg(long, conflicts_with = "family")]
        reference: Option<String>,
        /// two_sat, xor_sat, mixed, set_packing, qap, clustering or protein.
        #[arg(long, required_unless_present = "reference")]
        family: Option<String>,
        /// Instance body as JSON (the family's fields).
        #[arg(long)]
        params: Option<String>,
        /// Two-SAT clauses as signed one-based literals, e.g. `[[1,-2],[2,3]]`.
        #[arg(long)]
        clauses: Option<String>,
        /// XOR constraints as `[i, j, parity]` triples, e.g. `[[0,1,1]]`.
        #[arg(long)]
        constraints: Option<String>,
        /// Variable count for `--clauses` / `--constraints` (inferred when absent).
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        penalties: PenaltyArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Map a model to detunings and interactions within the hardware limits.
    Encode {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Place atoms so that van der Waals interactions match the encoding.
    Layout {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a layout against the encoded interactions (exit 4 on failure).
    Validate {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate the energy levels of a model.
    Spectrum {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, value_enum, default_value_t = ConventionArg::Ising)]
        convention: ConventionArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral hardness parameter of a model.
    Hardness {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value_t = rydberg_qubo::hardness::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        energy_shift: f64,
        #[arg(long, value_enum, default_value_t = ConventionArg::Ising)]
        convention: ConventionArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate one schedule and write its trajectory.
    Anneal {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Schedule JSON; the plan's starting schedule when absent.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize the schedule for one instance.
    Optimize {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode, optimize and analyze one instance; exit 4 when R is below the threshold.
    Pipeline {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value_t = 0.98)]
        threshold: f64,
    },
    /// Hardness table from result files, reference instances or summary values.
    Report {
        /// JSON files written by `hardness` or `pipeline`.
        files: Vec<PathBuf>,
        /// Add a row for every reference instance.
        #[arg(long)]
        all: bool,
        /// `name:E0:G:D_opt:D[@x][,D[@x]...]`, threats given by degeneracy and
        /// offset from the ground energy in units of the gap (default 1).
        #[arg(long = "from-spectral", allow_hyphen_values = true)]
        from_spectral: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e.err);
            ExitCode::from(e.code)
        }
    }
}
