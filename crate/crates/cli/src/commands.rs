//! Subcommand pipelines: resolve inputs, run, emit CSV with config headers.
//!
//! Every output file starts with `#`-prefixed comments echoing the fully
//! resolved configuration (defaults, config file, and flags merged) plus
//! any derived quantities, so a file alone suffices to rerun the job.

use std::fs;
use std::thread;

use gibbsite::ansatz::{build_default_ansatz, parse_circuit, AnsatzCircuit};
use gibbsite::hamiltonian::{heisenberg_chain, parse_pauli_sum, PauliSum};
use gibbsite::oracle::{diagonalize, fidelity};
use gibbsite::partition::{
    estimate_degeneracy, free_energy, initial_a_taylor, rfm_partition, rom_partition,
    stream_seed, OverlapMode, PartitionCurve, PartitionMethod, PartitionSample,
};
use gibbsite::statevector::StateVector;
use gibbsite::varqite::{default_rate_threshold, detect_tau_inf, evolve, EvolveConfig};

use crate::config::{CliError, CliResult, DegSourceArg, MethodArg, OverlapModeArg, Resolved};

/// Stream index reserved for the degeneracy measurement, far above any
/// overlap grid index so the draws never collide with overlap sampling.
const DEGENERACY_STREAM: u64 = 1 << 32;

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn require_out(cfg: &Resolved) -> CliResult<String> {
    cfg.out.clone().ok_or_else(|| {
        CliError::Config("an output path is required (--out or out= in the config file)".into())
    })
}

fn write_out(path: &str, content: &str) -> CliResult<()> {
    fs::write(path, content).map_err(|err| CliError::Config(format!("cannot write {path}: {err}")))
}

fn validate_flow(cfg: &Resolved) -> CliResult<()> {
    if !(cfg.dtau > 0.0) {
        return Err(CliError::Config(format!(
            "dtau must be positive, got {}",
            cfg.dtau
        )));
    }
    if cfg.steps == 0 {
        return Err(CliError::Config("steps must be at least 1".into()));
    }
    if cfg.ridge < 0.0 {
        return Err(CliError::Config(format!(
            "ridge must be non-negative, got {}",
            cfg.ridge
        )));
    }
    if cfg.layers == 0 {
        return Err(CliError::Config("layers must be at least 1".into()));
    }
    if let Some(epsilon) = cfg.epsilon {
        if !(epsilon > 0.0) {
            return Err(CliError::Config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
    }
    Ok(())
}

/// An inline Hamiltonian always has at least two whitespace-separated
/// tokens (a coefficient and a letter string); a single token is a path.
fn resolve_hamiltonian(cfg: &Resolved) -> CliResult<(PauliSum, String)> {
    match &cfg.hamiltonian {
        None => {
            if cfg.sites < 2 {
                return Err(CliError::Config(format!(
                    "the built-in chain needs at least 2 sites, got {}",
                    cfg.sites
                )));
            }
            let h = heisenberg_chain(cfg.sites, cfg.coupling)?;
            Ok((
                h,
                format!(
                    "builtin chain sites={} coupling={}",
                    cfg.sites,
                    fmt_f(cfg.coupling)
                ),
            ))
        }
        Some(value) if value.split_whitespace().count() > 1 => {
            let h = parse_pauli_sum(value)?;
            let flat = value.split_whitespace().collect::<Vec<_>>().join(" ");
            Ok((h, format!("inline {flat}")))
        }
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|err| {
                CliError::Config(format!("cannot read hamiltonian file {path}: {err}"))
            })?;
            let h = parse_pauli_sum(&text)?;
            Ok((h, format!("file {path}")))
        }
    }
}

fn resolve_circuit(cfg: &Resolved, h: &PauliSum) -> CliResult<(AnsatzCircuit, String)> {
    let (circuit, desc) = match &cfg.ansatz {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|err| {
                CliError::Config(format!("cannot read ansatz file {path}: {err}"))
            })?;
            (parse_circuit(&text)?, format!("file {path}"))
        }
        None => (
            build_default_ansatz(h.num_qubits(), cfg.layers)?,
            format!("default pairs={} layers={}", h.num_qubits(), cfg.layers),
        ),
    };
    let needed = 2 * h.num_qubits();
    if circuit.num_qubits() != needed {
        return Err(CliError::Config(format!(
            "ansatz acts on {} qubits but the doubled register needs {needed}",
            circuit.num_qubits()
        )));
    }
    Ok((circuit, desc))
}

fn header(tool: &str, fields: &[(&'static str, String)]) -> String {
    let mut buf = format!("# gibbsite {tool}\n");
    for (key, value) in fields {
        buf.push_str(&format!("# {key} = {value}\n"));
    }
    buf
}

/// Config fields shared by every flow-driven run.
fn flow_fields(
    cfg: &Resolved,
    h_desc: &str,
    ansatz_desc: &str,
    threshold: f64,
    out: &str,
) -> Vec<(&'static str, String)> {
    vec![
        ("hamiltonian", h_desc.to_string()),
        ("sites", cfg.sites.to_string()),
        ("coupling", fmt_f(cfg.coupling)),
        ("ansatz", ansatz_desc.to_string()),
        ("layers", cfg.layers.to_string()),
        ("dtau", fmt_f(cfg.dtau)),
        ("steps", cfg.steps.to_string()),
        ("ridge", fmt_f(cfg.ridge)),
        ("epsilon", fmt_f(threshold)),
        ("seed", cfg.seed.to_string()),
        ("out", out.to_string()),
    ]
}

pub fn run_evolve(cfg: &Resolved) -> CliResult<()> {
    validate_flow(cfg)?;
    let out = require_out(cfg)?;
    let (h, h_desc) = resolve_hamiltonian(cfg)?;
    let (circuit, ansatz_desc) = resolve_circuit(cfg, &h)?;
    let evolve_cfg = EvolveConfig {
        dtau: cfg.dtau,
        steps: cfg.steps,
        ridge: cfg.ridge,
    };
    let traj = evolve(&circuit, &h, circuit.theta0(), &evolve_cfg)?;
    let threshold = cfg.epsilon.unwrap_or_else(|| default_rate_threshold(&h));
    let tau_inf = detect_tau_inf(&traj, threshold)?;

    let fidelities = if cfg.oracle {
        let decomp = diagonalize(&h)?;
        let psi0 = StateVector::maximally_entangled(h.num_qubits())?;
        let mut values = Vec::with_capacity(traj.points().len());
        for point in traj.points() {
            let (exact, _) = decomp.evolve_doubled(&psi0, point.tau)?;
            let prepared = circuit.prepare_state(&point.theta)?;
            values.push(fidelity(&prepared, &exact)?);
        }
        Some(values)
    } else {
        None
    };

    let mut fields = flow_fields(cfg, &h_desc, &ansatz_desc, threshold, &out);
    fields.push(("oracle", cfg.oracle.to_string()));
    fields.push(("tau_inf", fmt_f(tau_inf)));
    let mut buf = header("evolve", &fields);

    let mut columns: Vec<String> = vec!["tau".into(), "energy".into()];
    columns.extend((0..circuit.num_params()).map(|i| format!("theta_{i}")));
    if fidelities.is_some() {
        columns.push("fidelity".into());
    }
    buf.push_str(&columns.join(","));
    buf.push('\n');
    for (idx, point) in traj.points().iter().enumerate() {
        let mut row = vec![fmt_f(point.tau), fmt_f(point.energy)];
        row.extend(point.theta.iter().map(|&t| fmt_f(t)));
        if let Some(values) = &fidelities {
            row.push(fmt_f(values[idx]));
        }
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    write_out(&out, &buf)?;

    let last = traj.final_point();
    let mut summary = format!(
        "final_energy={} tau_inf={} residual={} rows={} out={out}",
        fmt_f(last.energy),
        fmt_f(tau_inf),
        fmt_f(last.residual),
        traj.points().len()
    );
    if let Some(values) = &fidelities {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        summary.push_str(&format!(" min_fidelity={}", fmt_f(min)));
    }
    println!("{summary}");
    Ok(())
}

fn run_partition_single(cfg: &Resolved, out: &str) -> CliResult<String> {
    validate_flow(cfg)?;
    let method = cfg
        .method
        .ok_or_else(|| CliError::Config("partition needs --method rfm or --method rom".into()))?;
    let (h, h_desc) = resolve_hamiltonian(cfg)?;
    let (circuit, ansatz_desc) = resolve_circuit(cfg, &h)?;
    let (mode, shots) = match cfg.overlap_mode {
        OverlapModeArg::Exact => (OverlapMode::Exact, None),
        OverlapModeArg::Sampled => {
            if cfg.shots == 0 {
                return Err(CliError::Config("sampled overlaps need shots >= 1".into()));
            }
            (OverlapMode::Sampled, Some(cfg.shots))
        }
    };
    let evolve_cfg = EvolveConfig {
        dtau: cfg.dtau,
        steps: cfg.steps,
        ridge: cfg.ridge,
    };
    let traj = evolve(&circuit, &h, circuit.theta0(), &evolve_cfg)?;
    let threshold = cfg.epsilon.unwrap_or_else(|| default_rate_threshold(&h));

    let mut extras: Vec<(&'static str, String)> = Vec::new();
    let curve = match method {
        MethodArg::Rfm => {
            let a_init = if cfg.exact_init {
                let decomp = diagonalize(&h)?;
                let psi0 = StateVector::maximally_entangled(h.num_qubits())?;
                decomp.evolve_doubled(&psi0, cfg.dtau)?.1
            } else {
                if cfg.taylor_order == 0 {
                    return Err(CliError::Config("taylor_order must be at least 1".into()));
                }
                initial_a_taylor(&h, cfg.dtau, cfg.taylor_order)?
            };
            extras.push((
                "a_init_source",
                if cfg.exact_init {
                    "exact".to_string()
                } else {
                    format!("taylor order {}", cfg.taylor_order)
                },
            ));
            rfm_partition(&circuit, &traj, a_init, mode, shots, cfg.seed)?
        }
        MethodArg::Rom => {
            let tau_inf = detect_tau_inf(&traj, threshold)?;
            let (m, source) = if let Some(m) = cfg.degeneracy {
                if m == 0 {
                    return Err(CliError::Config("degeneracy must be at least 1".into()));
                }
                (m, "fixed".to_string())
            } else {
                match cfg.degeneracy_source {
                    DegSourceArg::Oracle => (diagonalize(&h)?.degeneracy, "oracle".to_string()),
                    DegSourceArg::Swap => {
                        if cfg.swap_shots == 0 {
                            return Err(CliError::Config(
                                "the two-copy measurement needs swap_shots >= 1".into(),
                            ));
                        }
                        let anchor = traj.point_at(tau_inf)?;
                        let state = circuit.prepare_state(&anchor.theta)?;
                        let est = estimate_degeneracy(
                            &state,
                            cfg.swap_shots,
                            stream_seed(cfg.seed, DEGENERACY_STREAM),
                        )?;
                        extras.push(("degeneracy_measurement", est.report_line()));
                        (est.degeneracy, "swap".to_string())
                    }
                }
            };
            extras.push(("degeneracy_source", source));
            rom_partition(
                &circuit,
                &traj,
                m,
                cfg.ground_energy,
                tau_inf,
                mode,
                shots,
                cfg.seed,
            )?
        }
    };

    let mut fields = vec![("method", method.as_str().to_string())];
    fields.extend(flow_fields(cfg, &h_desc, &ansatz_desc, threshold, out));
    fields.push(("overlap_mode", cfg.overlap_mode.as_str().to_string()));
    fields.push(("shots", cfg.shots.to_string()));
    fields.push(("taylor_order", cfg.taylor_order.to_string()));
    fields.push(("exact_init", cfg.exact_init.to_string()));
    if let Some(a_init) = curve.a_init {
        fields.push(("a_init", fmt_f(a_init)));
    }
    if let Some(m) = curve.degeneracy {
        fields.push(("degeneracy", m.to_string()));
    }
    if let Some(e0) = curve.ground_energy {
        fields.push(("ground_energy", fmt_f(e0)));
    }
    if let Some(tau_inf) = curve.tau_inf {
        fields.push(("tau_inf", fmt_f(tau_inf)));
    }
    fields.extend(extras);
    let mut buf = header("partition", &fields);
    buf.push_str(&curve.to_csv());
    write_out(out, &buf)?;

    let last = curve
        .samples
        .last()
        .expect("curves always have at least one row");
    Ok(format!(
        "method={} rows={} beta_max={} F_max={} out={out}",
        method.as_str(),
        curve.samples.len(),
        fmt_f(last.beta),
        fmt_f(last.f)
    ))
}

/// Comma-separated sweep axes; `None` falls back to the base config value.
pub struct SweepLists {
    pub couplings: Option<Vec<f64>>,
    pub methods: Option<Vec<MethodArg>>,
    pub seeds: Option<Vec<u64>>,
}

pub fn run_partition(cfg: &Resolved, sweep: bool, lists: &SweepLists) -> CliResult<()> {
    let out = require_out(cfg)?;
    if !sweep {
        if lists.couplings.is_some() || lists.methods.is_some() || lists.seeds.is_some() {
            return Err(CliError::Config(
                "--couplings, --methods, and --seeds need --sweep".into(),
            ));
        }
        let summary = run_partition_single(cfg, &out)?;
        println!("{summary}");
        return Ok(());
    }

    if cfg.hamiltonian.is_some() && lists.couplings.is_some() {
        return Err(CliError::Config(
            "a couplings sweep needs the built-in chain, not an explicit hamiltonian".into(),
        ));
    }
    let couplings = lists
        .couplings
        .clone()
        .unwrap_or_else(|| vec![cfg.coupling]);
    let methods = match &lists.methods {
        Some(methods) => methods.clone(),
        None => vec![cfg.method.ok_or_else(|| {
            CliError::Config("partition needs --method rfm or --method rom".into())
        })?],
    };
    let seeds = lists.seeds.clone().unwrap_or_else(|| vec![cfg.seed]);

    struct Combo {
        cfg: Resolved,
        path: String,
    }
    let mut combos = Vec::new();
    for &coupling in &couplings {
        for &method in &methods {
            for &seed in &seeds {
                let mut run = cfg.clone();
                run.coupling = coupling;
                run.method = Some(method);
                run.seed = seed;
                combos.push(Combo {
                    path: sweep_path(&out, coupling, method, seed),
                    cfg: run,
                });
            }
        }
    }

    // Runs are fully independent; one worker per combo, joined in order so
    // summaries print deterministically.
    let results: Vec<CliResult<String>> = thread::scope(|scope| {
        let handles: Vec<_> = combos
            .iter()
            .map(|combo| scope.spawn(move || run_partition_single(&combo.cfg, &combo.path)))
            .collect();
        handles
            .into_iter()
            .map(|handle| handle.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut failures = 0usize;
    let mut numerical = false;
    for (combo, result) in combos.iter().zip(results) {
        match result {
            Ok(summary) => println!("{summary}"),
            Err(err) => {
                eprintln!("error in {}: {err}", combo.path);
                failures += 1;
                numerical |= matches!(err, CliError::Numerical(_));
            }
        }
    }
    if failures == 0 {
        Ok(())
    } else {
        let msg = format!("{failures} of {} sweep runs failed", combos.len());
        if numerical {
            Err(CliError::Numerical(msg))
        } else {
            Err(CliError::Config(msg))
        }
    }
}

fn sweep_path(base: &str, coupling: f64, method: MethodArg, seed: u64) -> String {
    let (stem, ext) = match base.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() && !ext.contains('/') => {
            (stem, format!(".{ext}"))
        }
        _ => (base, String::new()),
    };
    format!("{stem}_J{coupling}_{}_s{seed}{ext}", method.as_str())
}

pub fn run_exact(cfg: &Resolved) -> CliResult<()> {
    let out = require_out(cfg)?;
    if cfg.beta_points == 0 {
        return Err(CliError::Config("the beta grid needs at least 1 point".into()));
    }
    if !(cfg.beta_min >= 0.0) {
        return Err(CliError::Config(format!(
            "beta_min must be non-negative, got {}",
            cfg.beta_min
        )));
    }
    if cfg.beta_points > 1 && !(cfg.beta_max > cfg.beta_min) {
        return Err(CliError::Config(format!(
            "beta_max must exceed beta_min, got {} <= {}",
            cfg.beta_max, cfg.beta_min
        )));
    }
    let (h, h_desc) = resolve_hamiltonian(cfg)?;
    let decomp = diagonalize(&h)?;
    let mut samples = Vec::with_capacity(cfg.beta_points);
    for i in 0..cfg.beta_points {
        let beta = if cfg.beta_points == 1 {
            cfg.beta_min
        } else {
            cfg.beta_min
                + (cfg.beta_max - cfg.beta_min) * i as f64 / (cfg.beta_points - 1) as f64
        };
        let z = decomp.partition(beta)?;
        let f = if beta > 0.0 {
            free_energy(z, beta)?
        } else {
            f64::NEG_INFINITY
        };
        samples.push(PartitionSample { beta, z, f });
    }
    let curve = PartitionCurve {
        method: PartitionMethod::Exact,
        num_sites: h.num_qubits(),
        samples,
        a_init: None,
        degeneracy: Some(decomp.degeneracy),
        ground_energy: Some(decomp.ground_energy()),
        tau_inf: None,
    };

    let fields = vec![
        ("hamiltonian", h_desc),
        ("sites", cfg.sites.to_string()),
        ("coupling", fmt_f(cfg.coupling)),
        ("beta_min", fmt_f(cfg.beta_min)),
        ("beta_max", fmt_f(cfg.beta_max)),
        ("beta_points", cfg.beta_points.to_string()),
        ("seed", cfg.seed.to_string()),
        ("out", out.clone()),
        ("degeneracy", decomp.degeneracy.to_string()),
        ("ground_energy", fmt_f(decomp.ground_energy())),
    ];
    let mut buf = header("exact", &fields);
    buf.push_str(&curve.to_csv());
    write_out(&out, &buf)?;
    println!(
        "rows={} ground_energy={} degeneracy={} out={out}",
        curve.samples.len(),
        fmt_f(decomp.ground_energy()),
        decomp.degeneracy
    );
    Ok(())
}
