//! gibbsite: partition functions and free energies of small spin systems
//! via variational imaginary-time evolution.
//!
//! Three subcommands cover the pipeline: `evolve` integrates the flow and
//! writes the trajectory, `partition` reconstructs Z(beta) and F(beta) from
//! trajectory overlaps, and `exact` emits the diagonalization baseline.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

// Validation guards are written `!(x > 0.0)` so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};

use crate::commands::SweepLists;
use crate::config::{
    load_config_file, CliError, CliResult, DegSourceArg, MethodArg, OverlapModeArg, Resolved,
};

#[derive(Parser)]
#[command(
    name = "gibbsite",
    version,
    about = "Partition functions of small spin systems via variational imaginary-time evolution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the imaginary-time flow and write the trajectory as CSV
    Evolve(EvolveArgs),
    /// Reconstruct a partition-function curve from trajectory overlaps
    Partition(PartitionArgs),
    /// Exact-diagonalization curve over a beta grid
    Exact(ExactArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Key=value config file; flags override its entries
    #[arg(long, value_name = "FILE")]
    config: Option<String>,
    /// Inline Pauli-sum text (whitespace separated) or a file containing one
    #[arg(long, value_name = "TEXT|FILE", allow_hyphen_values = true)]
    hamiltonian: Option<String>,
    /// Sites in the built-in Heisenberg chain
    #[arg(long)]
    sites: Option<usize>,
    /// Coupling J of the built-in chain
    #[arg(long, allow_hyphen_values = true)]
    coupling: Option<f64>,
    /// Base RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
}

#[derive(Args)]
struct FlowArgs {
    /// Circuit file; defaults to the paired two-register ansatz
    #[arg(long, value_name = "FILE")]
    ansatz: Option<String>,
    /// Layers in the default ansatz weight block
    #[arg(long)]
    layers: Option<usize>,
    /// Imaginary-time step
    #[arg(long)]
    dtau: Option<f64>,
    /// Euler steps to integrate
    #[arg(long)]
    steps: Option<usize>,
    /// Tikhonov ridge added to the metric before solving
    #[arg(long)]
    ridge: Option<f64>,
    /// Energy-rate threshold for convergence detection
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    flow: FlowArgs,
    /// Compare each grid point against the exact flow; adds a fidelity column
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    flow: FlowArgs,
    /// Reconstruction route
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Overlap evaluation mode
    #[arg(long, value_enum, value_name = "MODE")]
    overlap_mode: Option<OverlapModeArg>,
    /// Shots per sampled overlap
    #[arg(long)]
    shots: Option<u64>,
    /// Taylor order of the recurrence seed
    #[arg(long)]
    taylor_order: Option<usize>,
    /// Seed the recurrence with the exact A(dtau) instead of the Taylor value
    #[arg(long)]
    exact_init: bool,
    /// Where the ground-state degeneracy comes from
    #[arg(long, value_enum, value_name = "SOURCE")]
    degeneracy_source: Option<DegSourceArg>,
    /// Fix the degeneracy instead of measuring it
    #[arg(long)]
    degeneracy: Option<usize>,
    /// Shots for the two-copy degeneracy measurement
    #[arg(long)]
    swap_shots: Option<u64>,
    /// Override the anchor energy E0 of the reversed route
    #[arg(long, allow_hyphen_values = true)]
    ground_energy: Option<f64>,
    /// Fan out (coupling, method, seed) combinations across threads
    #[arg(long)]
    sweep: bool,
    /// Comma-separated couplings for --sweep
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    couplings: Option<String>,
    /// Comma-separated methods for --sweep
    #[arg(long, value_name = "LIST")]
    methods: Option<String>,
    /// Comma-separated seeds for --sweep
    #[arg(long, value_name = "LIST")]
    seeds: Option<String>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Smallest beta on the grid
    #[arg(long)]
    beta_min: Option<f64>,
    /// Largest beta on the grid
    #[arg(long)]
    beta_max: Option<f64>,
    /// Number of grid points
    #[arg(long)]
    beta_points: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Evolve(args) => {
            let mut cfg = Resolved::default();
            apply_common(&args.common, &mut cfg)?;
            apply_flow(&args.flow, &mut cfg);
            if args.oracle {
                cfg.oracle = true;
            }
            commands::run_evolve(&cfg)
        }
        Command::Partition(args) => {
            let mut cfg = Resolved::default();
            apply_common(&args.common, &mut cfg)?;
            apply_flow(&args.flow, &mut cfg);
            if let Some(method) = args.method {
                cfg.method = Some(method);
            }
            if let Some(mode) = args.overlap_mode {
                cfg.overlap_mode = mode;
            }
            if let Some(shots) = args.shots {
                cfg.shots = shots;
            }
            if let Some(order) = args.taylor_order {
                cfg.taylor_order = order;
            }
            if args.exact_init {
                cfg.exact_init = true;
            }
            if let Some(source) = args.degeneracy_source {
                cfg.degeneracy_source = source;
            }
            if let Some(m) = args.degeneracy {
                cfg.degeneracy = Some(m);
            }
            if let Some(shots) = args.swap_shots {
                cfg.swap_shots = shots;
            }
            if let Some(e0) = args.ground_energy {
                cfg.ground_energy = Some(e0);
            }
            let lists = SweepLists {
                couplings: parse_list(&args.couplings, "couplings")?,
                methods: parse_method_list(&args.methods)?,
                seeds: parse_list(&args.seeds, "seeds")?,
            };
            commands::run_partition(&cfg, args.sweep, &lists)
        }
        Command::Exact(args) => {
            let mut cfg = Resolved::default();
            apply_common(&args.common, &mut cfg)?;
            if let Some(beta_min) = args.beta_min {
                cfg.beta_min = beta_min;
            }
            if let Some(beta_max) = args.beta_max {
                cfg.beta_max = beta_max;
            }
            if let Some(points) = args.beta_points {
                cfg.beta_points = points;
            }
            commands::run_exact(&cfg)
        }
    }
}

fn apply_common(args: &CommonArgs, cfg: &mut Resolved) -> CliResult<()> {
    if let Some(path) = &args.config {
        load_config_file(path, cfg)?;
    }
    if let Some(hamiltonian) = &args.hamiltonian {
        cfg.hamiltonian = Some(hamiltonian.clone());
    }
    if let Some(sites) = args.sites {
        cfg.sites = sites;
    }
    if let Some(coupling) = args.coupling {
        cfg.coupling = coupling;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    Ok(())
}

fn apply_flow(args: &FlowArgs, cfg: &mut Resolved) {
    if let Some(ansatz) = &args.ansatz {
        cfg.ansatz = Some(ansatz.clone());
    }
    if let Some(layers) = args.layers {
        cfg.layers = layers;
    }
    if let Some(dtau) = args.dtau {
        cfg.dtau = dtau;
    }
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    if let Some(ridge) = args.ridge {
        cfg.ridge = ridge;
    }
    if let Some(epsilon) = args.epsilon {
        cfg.epsilon = Some(epsilon);
    }
}

fn parse_list<T: std::str::FromStr>(
    raw: &Option<String>,
    what: &str,
) -> CliResult<Option<Vec<T>>> {
    let Some(text) = raw else {
        return Ok(None);
    };
    let mut values = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        values.push(
            token
                .parse()
                .map_err(|_| CliError::Config(format!("bad {what} entry '{token}'")))?,
        );
    }
    if values.is_empty() {
        return Err(CliError::Config(format!("the {what} list is empty")));
    }
    Ok(Some(values))
}

fn parse_method_list(raw: &Option<String>) -> CliResult<Option<Vec<MethodArg>>> {
    let Some(text) = raw else {
        return Ok(None);
    };
    let mut values = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        values.push(match token {
            "rfm" => MethodArg::Rfm,
            "rom" => MethodArg::Rom,
            _ => {
                return Err(CliError::Config(format!(
                    "bad methods entry '{token}', expected rfm or rom"
                )))
            }
        });
    }
    if values.is_empty() {
        return Err(CliError::Config("the methods list is empty".into()));
    }
    Ok(Some(values))
}
