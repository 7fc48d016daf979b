//! End-to-end tests driving the compiled binary: output files, exit codes,
//! config precedence, and the documented accuracy contracts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

static DIR_COUNTER: AtomicU32 = AtomicU32::new(0);

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "gibbsite-cli-{}-{}-{tag}",
        std::process::id(),
        DIR_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn gibbsite(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbsite"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn comments(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|line| line.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

/// CSV body split into (header cells, data rows), comments skipped.
fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(str::to_string).collect();
        if header.is_empty() {
            header = cells;
        } else {
            rows.push(cells);
        }
    }
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let idx = header
        .iter()
        .position(|cell| cell == name)
        .unwrap_or_else(|| panic!("no column named {name}"));
    rows.iter().map(|row| row[idx].parse().unwrap()).collect()
}

fn value_at(header: &[String], rows: &[Vec<String>], beta: f64, name: &str) -> f64 {
    let betas = column(header, rows, "beta");
    let values = column(header, rows, name);
    let idx = betas
        .iter()
        .position(|&b| (b - beta).abs() < 1e-9)
        .unwrap_or_else(|| panic!("no row at beta = {beta}"));
    values[idx]
}

#[test]
fn evolve_writes_monotone_trajectory_with_config_header() {
    let dir = scratch_dir("evolve");
    let output = gibbsite(&dir, &["evolve", "--out", "traj.csv"]);
    assert!(output.status.success(), "{}", stderr_of(&output));

    let text = stdout_of(&output);
    assert!(text.contains("final_energy="));
    assert!(text.contains("tau_inf="));

    let path = dir.join("traj.csv");
    let head = comments(&path);
    assert!(head.contains("# gibbsite evolve"));
    for key in [
        "# hamiltonian = builtin chain sites=2",
        "# ansatz = default pairs=2 layers=1",
        "# dtau = ",
        "# steps = 120",
        "# ridge = ",
        "# epsilon = ",
        "# seed = 0",
        "# layers = 1",
    ] {
        assert!(head.contains(key), "missing header line {key}");
    }

    let (header, rows) = read_rows(&path);
    assert_eq!(header[..2], ["tau".to_string(), "energy".to_string()]);
    assert_eq!(header.len(), 7, "tau, energy, five angles");
    assert_eq!(rows.len(), 121);
    let energies = column(&header, &rows, "energy");
    for pair in energies.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-9, "energy must not increase");
    }
    assert!((energies.last().unwrap() + 1.0).abs() < 0.02);
    let taus = column(&header, &rows, "tau");
    assert!((taus[0] - 0.0).abs() < 1e-15);
    assert!((taus.last().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn evolve_oracle_adds_fidelity_column() {
    let dir = scratch_dir("oracle");
    let output = gibbsite(&dir, &["evolve", "--oracle", "--out", "traj.csv"]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(stdout_of(&output).contains("min_fidelity="));

    let (header, rows) = read_rows(&dir.join("traj.csv"));
    assert_eq!(header.last().unwrap(), "fidelity");
    let fidelities = column(&header, &rows, "fidelity");
    for value in fidelities {
        assert!(value > 0.999 && value <= 1.0 + 1e-12);
    }
}

#[test]
fn evolve_rejects_zero_steps() {
    let dir = scratch_dir("steps0");
    let output = gibbsite(&dir, &["evolve", "--steps", "0", "--out", "x.csv"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("steps"));
}

#[test]
fn evolve_names_missing_hamiltonian_file() {
    let dir = scratch_dir("missingham");
    let output = gibbsite(
        &dir,
        &["evolve", "--hamiltonian", "./no_such_ham.txt", "--out", "x.csv"],
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("no_such_ham.txt"));
}

#[test]
fn evolve_flags_unconverged_flow() {
    let dir = scratch_dir("noconv");
    let output = gibbsite(
        &dir,
        &[
            "evolve",
            "--steps",
            "10",
            "--epsilon",
            "1e-12",
            "--out",
            "x.csv",
        ],
    );
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_of(&output).contains("never settles"));
}

#[test]
fn evolve_accepts_circuit_file() {
    let dir = scratch_dir("circuitfile");
    let rendered = gibbsite::ansatz::build_default_ansatz(2, 1).unwrap().render();
    fs::write(dir.join("circuit.txt"), rendered).unwrap();
    let output = gibbsite(&dir, &["evolve", "--ansatz", "circuit.txt", "--out", "t.csv"]);
    assert!(output.status.success(), "{}", stderr_of(&output));

    let path = dir.join("t.csv");
    assert!(comments(&path).contains("# ansatz = file circuit.txt"));
    let (header, rows) = read_rows(&path);
    let energies = column(&header, &rows, "energy");
    assert!((energies.last().unwrap() + 1.0).abs() < 0.02);
}

#[test]
fn evolve_rejects_wrong_width_circuit() {
    let dir = scratch_dir("narrow");
    fs::write(dir.join("half.txt"), "qubits 2\nry 0 0 0.5\n").unwrap();
    let output = gibbsite(&dir, &["evolve", "--ansatz", "half.txt", "--out", "x.csv"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("doubled register"));
}

#[test]
fn evolve_accepts_inline_hamiltonian() {
    let dir = scratch_dir("inline");
    let output = gibbsite(
        &dir,
        &[
            "evolve",
            "--hamiltonian",
            "-1 XX -1 YY -1 ZZ",
            "--out",
            "t.csv",
        ],
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let path = dir.join("t.csv");
    assert!(comments(&path).contains("# hamiltonian = inline -1 XX"));
    let (header, rows) = read_rows(&path);
    let energies = column(&header, &rows, "energy");
    assert!((energies.last().unwrap() + 1.0).abs() < 0.02);
}

#[test]
fn partition_requires_method() {
    let dir = scratch_dir("nomethod");
    let output = gibbsite(&dir, &["partition", "--out", "p.csv"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("method"));
}

#[test]
fn partition_rfm_exact_init_hits_free_energy_anchor() {
    let dir = scratch_dir("rfmanchor");
    let output = gibbsite(
        &dir,
        &[
            "partition",
            "--method",
            "rfm",
            "--exact-init",
            "--dtau",
            "0.0125",
            "--steps",
            "80",
            "--out",
            "p.csv",
        ],
    );
    assert!(output.status.success(), "{}", stderr_of(&output));

    let path = dir.join("p.csv");
    let head = comments(&path);
    assert!(head.contains("# method = rfm"));
    assert!(head.contains("# exact_init = true"));
    assert!(head.contains("# a_init = "));
    assert!(head.contains("# a_init_source = exact"));

    let (header, rows) = read_rows(&path);
    assert_eq!(header, ["method", "beta", "Z", "F"]);
    assert!((value_at(&header, &rows, 0.0, "Z") - 4.0).abs() < 1e-12);
    assert_eq!(value_at(&header, &rows, 0.0, "F"), f64::NEG_INFINITY);

    // Two-site chain, J = 1: F(1) = -ln(3e + e^-3).
    let f_exact = -(3.0 * std::f64::consts::E + (-3.0_f64).exp()).ln();
    let f = value_at(&header, &rows, 1.0, "F");
    assert!(
        (f - f_exact).abs() <= 0.01 * f_exact.abs(),
        "F(1) = {f} vs exact {f_exact}"
    );
}

#[test]
fn partition_seed_choice_diverges_with_beta() {
    let dir = scratch_dir("seeddiv");
    for (name, extra) in [("exact.csv", Some("--exact-init")), ("taylor.csv", None)] {
        let mut args = vec!["partition", "--method", "rfm", "--out", name];
        if let Some(flag) = extra {
            args.push(flag);
        }
        let output = gibbsite(&dir, &args);
        assert!(output.status.success(), "{}", stderr_of(&output));
    }
    let (header_e, rows_e) = read_rows(&dir.join("exact.csv"));
    let (header_t, rows_t) = read_rows(&dir.join("taylor.csv"));
    let gap = |beta: f64| {
        let ze = value_at(&header_e, &rows_e, beta, "Z");
        let zt = value_at(&header_t, &rows_t, beta, "Z");
        (zt - ze).abs() / ze
    };
    // Identical trajectories, different recurrence seeds: the curves pull
    // apart in proportion to the chain depth.
    assert!(gap(3.0) > gap(0.5));
    assert!(gap(3.0) > 0.0);
}

#[test]
fn partition_rom_swap_header_records_triple_degeneracy() {
    let dir = scratch_dir("romswap");
    let output = gibbsite(&dir, &["partition", "--method", "rom", "--out", "r.csv"]);
    assert!(output.status.success(), "{}", stderr_of(&output));

    let path = dir.join("r.csv");
    let head = comments(&path);
    assert!(head.contains("# degeneracy = 3"));
    assert!(head.contains("# degeneracy_source = swap"));
    assert!(head.contains("# degeneracy_measurement = purity="));
    assert!(head.contains("m=3"));
    assert!(head.contains("# tau_inf = "));
    assert!(head.contains("# ground_energy = "));

    let (header, rows) = read_rows(&path);
    let z5_exact = 3.0 * (5.0_f64).exp() + (-15.0_f64).exp();
    let f5_exact = -z5_exact.ln() / 5.0;
    let f5 = value_at(&header, &rows, 5.0, "F");
    assert!(
        (f5 - f5_exact).abs() <= 0.02 * f5_exact.abs(),
        "F(5) = {f5} vs exact {f5_exact}"
    );
}

#[test]
fn partition_rom_oracle_source_for_reversed_coupling() {
    let dir = scratch_dir("romoracle");
    let output = gibbsite(
        &dir,
        &[
            "partition",
            "--method",
            "rom",
            "--coupling",
            "-1",
            "--degeneracy-source",
            "oracle",
            "--out",
            "r.csv",
        ],
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let head = comments(&dir.join("r.csv"));
    assert!(head.contains("# degeneracy = 1"));
    assert!(head.contains("# degeneracy_source = oracle"));
    assert!(!head.contains("degeneracy_measurement"));
}

#[test]
fn partition_sampled_overlaps_track_the_exact_curve() {
    let dir = scratch_dir("sampled");
    let output = gibbsite(
        &dir,
        &[
            "partition",
            "--method",
            "rfm",
            "--exact-init",
            "--overlap-mode",
            "sampled",
            "--shots",
            "4000",
            "--steps",
            "40",
            "--seed",
            "3",
            "--out",
            "s.csv",
        ],
    );
    assert!(output.status.success(), "{}", stderr_of(&output));

    let path = dir.join("s.csv");
    let head = comments(&path);
    assert!(head.contains("# overlap_mode = sampled"));
    assert!(head.contains("# shots = 4000"));

    let (header, rows) = read_rows(&path);
    let z_exact = 3.0 * (0.5_f64).exp() + (-1.5_f64).exp();
    let z = value_at(&header, &rows, 0.5, "Z");
    assert!(
        (z.ln() - z_exact.ln()).abs() < 0.5,
        "Z(0.5) = {z} vs exact {z_exact}"
    );
}

#[test]
fn exact_grid_hits_known_values_and_is_deterministic() {
    let dir_a = scratch_dir("exacta");
    let dir_b = scratch_dir("exactb");
    let args = [
        "exact",
        "--beta-min",
        "0",
        "--beta-max",
        "1",
        "--beta-points",
        "2",
        "--out",
        "exact.csv",
    ];
    for dir in [&dir_a, &dir_b] {
        let output = gibbsite(dir, &args);
        assert!(output.status.success(), "{}", stderr_of(&output));
    }
    let bytes_a = fs::read(dir_a.join("exact.csv")).unwrap();
    let bytes_b = fs::read(dir_b.join("exact.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b, "exact output must be byte-identical");

    let path = dir_a.join("exact.csv");
    let head = comments(&path);
    assert!(head.contains("# degeneracy = 3"));
    assert!(head.contains("# ground_energy = -1.0000000000000000e0"));

    let (header, rows) = read_rows(&path);
    assert_eq!(rows[0][0], "exact");
    assert!((value_at(&header, &rows, 0.0, "Z") - 4.0).abs() < 1e-12);
    let z1_exact = 3.0 * std::f64::consts::E + (-3.0_f64).exp();
    let z1 = value_at(&header, &rows, 1.0, "Z");
    assert!((z1 - z1_exact).abs() < 1e-9 * z1_exact);
    assert_eq!(value_at(&header, &rows, 0.0, "F"), f64::NEG_INFINITY);
}

#[test]
fn exact_rejects_empty_beta_grid() {
    let dir = scratch_dir("grid0");
    let output = gibbsite(&dir, &["exact", "--beta-points", "0", "--out", "x.csv"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("beta grid"));
}

#[test]
fn exact_rejects_oversized_system() {
    let dir = scratch_dir("toobig");
    let output = gibbsite(&dir, &["exact", "--sites", "9", "--out", "x.csv"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains('8'));
}

#[test]
fn config_file_feeds_defaults_and_flags_override() {
    let dir = scratch_dir("config");
    fs::write(
        dir.join("run.cfg"),
        "# trial configuration\nsteps = 130\ncoupling = -1\nout = from_config.csv\n",
    )
    .unwrap();
    let output = gibbsite(
        &dir,
        &["evolve", "--config", "run.cfg", "--steps", "120"],
    );
    assert!(output.status.success(), "{}", stderr_of(&output));

    let path = dir.join("from_config.csv");
    assert!(path.exists(), "out= from the config file must be honored");
    let head = comments(&path);
    assert!(head.contains("# steps = 120"), "flag must beat the config file");
    assert!(head.contains("# coupling = -1.0000000000000000e0"));
    let (_, rows) = read_rows(&path);
    assert_eq!(rows.len(), 121);
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = scratch_dir("badkey");
    fs::write(dir.join("run.cfg"), "stepz = 3\n").unwrap();
    let output = gibbsite(&dir, &["evolve", "--config", "run.cfg", "--out", "x.csv"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("stepz"));
}

#[test]
fn sweep_fans_out_per_combo_files() {
    let dir = scratch_dir("sweep");
    let output = gibbsite(
        &dir,
        &[
            "partition",
            "--sweep",
            "--couplings",
            "1,-1",
            "--methods",
            "rfm",
            "--seeds",
            "0,1",
            "--exact-init",
            "--steps",
            "40",
            "--out",
            "sw.csv",
        ],
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let names = [
        "sw_J1_rfm_s0.csv",
        "sw_J1_rfm_s1.csv",
        "sw_J-1_rfm_s0.csv",
        "sw_J-1_rfm_s1.csv",
    ];
    for name in names {
        assert!(dir.join(name).exists(), "missing sweep output {name}");
    }
    assert_eq!(
        stdout_of(&output).lines().filter(|l| l.contains("out=sw_")).count(),
        4
    );
    let reversed = comments(&dir.join("sw_J-1_rfm_s0.csv"));
    assert!(reversed.contains("# coupling = -1.0000000000000000e0"));
}

#[test]
fn sweep_lists_require_sweep_flag() {
    let dir = scratch_dir("sweepguard");
    let output = gibbsite(
        &dir,
        &[
            "partition",
            "--method",
            "rfm",
            "--couplings",
            "1,-1",
            "--out",
            "x.csv",
        ],
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("--sweep"));
}
