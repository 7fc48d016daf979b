//! Run configuration: defaults, key=value config files, flag overrides.
//!
//! Precedence is defaults < config file < command-line flags. The config
//! file is a flat list of `key = value` lines using the same key names as
//! the long flags (underscores instead of dashes); `#` starts a comment.

use std::fmt;
use std::fs;

/// Failure split by exit code: configuration problems exit 2, numerical
/// failures (non-convergence, starved estimators) exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Numerical(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<gibbsite::Error> for CliError {
    fn from(err: gibbsite::Error) -> Self {
        if err.is_numerical() {
            CliError::Numerical(err.to_string())
        } else {
            CliError::Config(err.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    /// Recurrence route seeded at A(dtau)
    Rfm,
    /// Reversed route anchored on the converged state
    Rom,
}

impl MethodArg {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodArg::Rfm => "rfm",
            MethodArg::Rom => "rom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OverlapModeArg {
    /// Statevector inner products
    Exact,
    /// Shot-sampled inversion-test estimates
    Sampled,
}

impl OverlapModeArg {
    pub fn as_str(self) -> &'static str {
        match self {
            OverlapModeArg::Exact => "exact",
            OverlapModeArg::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DegSourceArg {
    /// Two-copy destructive measurement on the converged state
    Swap,
    /// Exact diagonalization
    Oracle,
}

/// Fully resolved run configuration shared by all subcommands. Fields a
/// subcommand does not use are carried along unchanged so config files can
/// serve several commands.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// Inline Pauli-sum text or a file path; `None` selects the built-in chain.
    pub hamiltonian: Option<String>,
    pub sites: usize,
    pub coupling: f64,
    /// Circuit file path; `None` selects the default paired ansatz.
    pub ansatz: Option<String>,
    pub layers: usize,
    pub dtau: f64,
    pub steps: usize,
    pub ridge: f64,
    pub seed: u64,
    /// Energy-rate threshold; `None` means the scale-aware default.
    pub epsilon: Option<f64>,
    pub overlap_mode: OverlapModeArg,
    pub shots: u64,
    pub taylor_order: usize,
    pub exact_init: bool,
    pub method: Option<MethodArg>,
    pub degeneracy_source: DegSourceArg,
    /// Explicit degeneracy override; skips measurement entirely.
    pub degeneracy: Option<usize>,
    pub swap_shots: u64,
    /// Anchor energy override for the reversed route.
    pub ground_energy: Option<f64>,
    pub oracle: bool,
    pub out: Option<String>,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_points: usize,
}

impl Default for Resolved {
    fn default() -> Self {
        Resolved {
            hamiltonian: None,
            sites: 2,
            coupling: 1.0,
            ansatz: None,
            layers: 1,
            dtau: 0.025,
            steps: 120,
            ridge: 1e-6,
            seed: 0,
            epsilon: None,
            overlap_mode: OverlapModeArg::Exact,
            shots: 10_000,
            taylor_order: 4,
            exact_init: false,
            method: None,
            degeneracy_source: DegSourceArg::Swap,
            degeneracy: None,
            swap_shots: 100_000,
            ground_energy: None,
            oracle: false,
            out: None,
            beta_min: 0.0,
            beta_max: 10.0,
            beta_points: 21,
        }
    }
}

pub fn load_config_file(path: &str, resolved: &mut Resolved) -> CliResult<()> {
    let text = fs::read_to_string(path)
        .map_err(|err| CliError::Config(format!("cannot read config file {path}: {err}")))?;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{path}:{}: expected key = value", idx + 1))
        })?;
        apply_key(resolved, key.trim(), value.trim())
            .map_err(|msg| CliError::Config(format!("{path}:{}: {msg}", idx + 1)))?;
    }
    Ok(())
}

fn apply_key(resolved: &mut Resolved, key: &str, value: &str) -> Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("bad value '{value}' for {key}"))
    }
    fn boolean(key: &str, value: &str) -> Result<bool, String> {
        match value {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(format!("bad value '{value}' for {key}, expected true or false")),
        }
    }
    match key {
        "hamiltonian" => resolved.hamiltonian = Some(value.to_string()),
        "sites" => resolved.sites = num(key, value)?,
        "coupling" => resolved.coupling = num(key, value)?,
        "ansatz" => resolved.ansatz = Some(value.to_string()),
        "layers" => resolved.layers = num(key, value)?,
        "dtau" => resolved.dtau = num(key, value)?,
        "steps" => resolved.steps = num(key, value)?,
        "ridge" => resolved.ridge = num(key, value)?,
        "seed" => resolved.seed = num(key, value)?,
        "epsilon" => resolved.epsilon = Some(num(key, value)?),
        "overlap_mode" => {
            resolved.overlap_mode = match value {
                "exact" => OverlapModeArg::Exact,
                "sampled" => OverlapModeArg::Sampled,
                _ => return Err(format!("bad value '{value}' for overlap_mode")),
            }
        }
        "shots" => resolved.shots = num(key, value)?,
        "taylor_order" => resolved.taylor_order = num(key, value)?,
        "exact_init" => resolved.exact_init = boolean(key, value)?,
        "method" => {
            resolved.method = Some(match value {
                "rfm" => MethodArg::Rfm,
                "rom" => MethodArg::Rom,
                _ => return Err(format!("bad value '{value}' for method, expected rfm or rom")),
            })
        }
        "degeneracy_source" => {
            resolved.degeneracy_source = match value {
                "swap" => DegSourceArg::Swap,
                "oracle" => DegSourceArg::Oracle,
                _ => return Err(format!("bad value '{value}' for degeneracy_source")),
            }
        }
        "degeneracy" => resolved.degeneracy = Some(num(key, value)?),
        "swap_shots" => resolved.swap_shots = num(key, value)?,
        "ground_energy" => resolved.ground_energy = Some(num(key, value)?),
        "oracle" => resolved.oracle = boolean(key, value)?,
        "out" => resolved.out = Some(value.to_string()),
        "beta_min" => resolved.beta_min = num(key, value)?,
        "beta_max" => resolved.beta_max = num(key, value)?,
        "beta_points" => resolved.beta_points = num(key, value)?,
        _ => return Err(format!("unknown config key '{key}'")),
    }
    Ok(())
}
