//! Partition-function estimators driven by circuit overlaps.
//!
//! The normalization factor `A(tau)` of the doubled-register imaginary-time
//! flow carries the partition function: `Z(beta) = 2^n A(beta / 2)` for `n`
//! sites. `A` itself is never measured directly; what a device can measure
//! is the squared overlap `D(tau, tau')` of two trajectory states, obtained
//! as the all-zeros probability after running one preparation circuit
//! forward and the other in reverse. Two estimators rebuild `Z` from those
//! overlaps:
//!
//! * the recurrence route chains `A(n dtau)` from a single classically
//!   computed seed `A(dtau)` and the overlaps `D(j dtau, (j-2) dtau)`,
//!   exact as algebra but accumulating input error as `n` grows;
//! * the reversed route anchors on the converged end of the trajectory,
//!   `Z(2 tau) = m exp(-2 E0 tau) / D(tau, tau_inf)`, needing only one
//!   overlap per temperature plus the ground degeneracy `m` and energy `E0`,
//!   accurate once the neglected excited weight has decayed.
//!
//! The degeneracy comes from a destructive two-copy measurement: Bell-basis
//! readout across matching qubits of two state copies estimates the purity
//! of the reduced state, whose inverse is `m` at convergence.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::ansatz::AnsatzCircuit;
use crate::error::Error;
use crate::hamiltonian::PauliSum;
use crate::math;
use crate::statevector::StateVector;
use crate::varqite::Trajectory;
use crate::Result;

/// How an overlap is obtained: exactly from amplitudes, or estimated from
/// measurement shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapMode {
    Exact,
    Sampled,
}

/// A squared overlap `D(tau, tau')` between two trajectory states.
///
/// `shots` and `std_error` are present exactly when the value was sampled;
/// the standard error is the binomial `sqrt(D (1 - D) / shots)`. Grid times
/// are stamped by the trajectory-driven estimators and both zero when the
/// overlap was taken directly between parameter vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapEstimate {
    pub tau: f64,
    pub tau_prime: f64,
    pub value: f64,
    pub mode: OverlapMode,
    pub shots: Option<u64>,
    pub std_error: Option<f64>,
}

/// Which estimator produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMethod {
    Rfm,
    Rom,
    Exact,
}

impl PartitionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PartitionMethod::Rfm => "rfm",
            PartitionMethod::Rom => "rom",
            PartitionMethod::Exact => "exact",
        }
    }
}

/// One `(beta, Z, F)` row of a curve. `f` is negative infinity on the
/// `beta = 0` endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSample {
    pub beta: f64,
    pub z: f64,
    pub f: f64,
}

/// A partition-function curve over a temperature grid, with the inputs that
/// anchored it.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionCurve {
    pub method: PartitionMethod,
    pub num_sites: usize,
    pub samples: Vec<PartitionSample>,
    /// Seed value `A(dtau)` (recurrence route only).
    pub a_init: Option<f64>,
    /// Ground degeneracy anchor (reversed route only).
    pub degeneracy: Option<usize>,
    /// Ground energy anchor (reversed route only).
    pub ground_energy: Option<f64>,
    /// Convergence time anchor (reversed route only).
    pub tau_inf: Option<f64>,
}

impl PartitionCurve {
    /// CSV rows `method,beta,Z,F`, floats at full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,beta,Z,F\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                self.method.as_str(),
                s.beta,
                s.z,
                s.f
            ));
        }
        out
    }
}

/// Purity-based ground-degeneracy estimate from a two-copy measurement.
///
/// `degeneracy` is `1 / purity` rounded to the nearest integer;
/// `integer_gap` is how far the unrounded value sat from that integer, and
/// `ambiguous` flags a gap above `0.25`, where the rounding is no longer
/// trustworthy.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyEstimate {
    pub purity: f64,
    pub degeneracy: usize,
    pub shots: u64,
    pub std_error: f64,
    pub integer_gap: f64,
    pub ambiguous: bool,
}

impl DegeneracyEstimate {
    /// Single-line key=value record.
    pub fn report_line(&self) -> String {
        format!(
            "purity={:.16e} m={} shots={} stderr={:.16e} gap={:.16e} flagged={}",
            self.purity, self.degeneracy, self.shots, self.std_error, self.integer_gap,
            self.ambiguous
        )
    }
}

/// `F = -ln(Z) / beta`.
pub fn free_energy(z: f64, beta: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::NonPositive("Z", z));
    }
    if !(beta > 0.0) {
        return Err(Error::NonPositive("beta", beta));
    }
    Ok(-math::ln(z) / beta)
}

/// Seed for the sample stream at one grid index. The odd-constant multiply
/// keeps the per-index seeds of different base seeds disjoint, so runs with
/// nearby bases draw independent sample streams. Callers adding their own
/// streams should derive them the same way with indices outside the overlap
/// grid range.
pub fn stream_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn sample_for(beta: f64, z: f64) -> PartitionSample {
    let f = if beta > 0.0 {
        -math::ln(z) / beta
    } else {
        f64::NEG_INFINITY
    };
    PartitionSample { beta, z, f }
}

/// Squared overlap of the two circuit states at `theta_a` and `theta_b`.
///
/// Exact mode takes `|<phi_b|phi_a>|^2` from amplitudes. Sampled mode runs
/// the measurable protocol instead: prepare with `theta_a`, un-prepare with
/// `theta_b`, and estimate the probability of reading all zeros.
pub fn overlap(
    circuit: &AnsatzCircuit,
    theta_a: &[f64],
    theta_b: &[f64],
    mode: OverlapMode,
    shots: Option<u64>,
    seed: u64,
) -> Result<OverlapEstimate> {
    let state_a = circuit.prepare_state(theta_a)?;
    match mode {
        OverlapMode::Exact => {
            let state_b = circuit.prepare_state(theta_b)?;
            let value = state_b.inner_product(&state_a)?.norm_sqr().min(1.0);
            Ok(OverlapEstimate {
                tau: 0.0,
                tau_prime: 0.0,
                value,
                mode,
                shots: None,
                std_error: None,
            })
        }
        OverlapMode::Sampled => {
            let shots = shots.filter(|s| *s > 0).ok_or(Error::ZeroShots)?;
            let reversed = circuit.apply_inverse(&state_a, theta_b)?;
            let record = reversed.sample_bitstrings(shots, seed)?;
            let zeros = record.count(&"0".repeat(circuit.num_qubits()));
            let value = zeros as f64 / shots as f64;
            Ok(OverlapEstimate {
                tau: 0.0,
                tau_prime: 0.0,
                value,
                mode,
                shots: Some(shots),
                std_error: Some(math::sqrt(value * (1.0 - value) / shots as f64)),
            })
        }
    }
}

/// Overlap between two grid points of a trajectory, stamped with their times.
pub fn overlap_at(
    circuit: &AnsatzCircuit,
    traj: &Trajectory,
    tau: f64,
    tau_prime: f64,
    mode: OverlapMode,
    shots: Option<u64>,
    seed: u64,
) -> Result<OverlapEstimate> {
    let theta_a = &traj.point_at(tau)?.theta;
    let theta_b = &traj.point_at(tau_prime)?.theta;
    let mut est = overlap(circuit, theta_a, theta_b, mode, shots, seed)?;
    est.tau = tau;
    est.tau_prime = tau_prime;
    Ok(est)
}

/// Taylor seed for the recurrence: `A(dtau)` from normalized Hamiltonian
/// moments, `sum_k (-2 dtau)^k / k! <H^k>` up to `order`.
pub fn initial_a_taylor(h: &PauliSum, dtau: f64, order: usize) -> Result<f64> {
    if order == 0 {
        return Err(Error::NonPositive("order", 0.0));
    }
    if !(dtau >= 0.0) {
        return Err(Error::NonPositive("dtau", dtau));
    }
    let mut acc = 0.0;
    let mut term = 1.0; // (-2 dtau)^k / k!
    for k in 0..=order {
        if k > 0 {
            term *= -2.0 * dtau / k as f64;
        }
        acc += term * h.moment_trace(k)?;
    }
    Ok(acc)
}

/// Rebuilds the normalization chain from its seed and overlap inputs.
///
/// `d_chain[i]` is `D((i + 2) dtau, i dtau)`. With `A(0) = 1` and
/// `A(dtau) = a_init`, each further step satisfies
///
/// ```text
/// A(n dtau) = A((n-1) dtau) * A(dtau) / prod_{j=2}^{n} D(j dtau, (j-2) dtau)
/// ```
///
/// an algebraic identity for exact inputs. Accumulation runs on logarithms;
/// a nonpositive `D` aborts as shot starvation.
pub fn rfm_from_overlaps(
    num_sites: usize,
    dtau: f64,
    a_init: f64,
    d_chain: &[f64],
) -> Result<PartitionCurve> {
    if num_sites == 0 {
        return Err(Error::NonPositive("num_sites", 0.0));
    }
    if !(dtau > 0.0) {
        return Err(Error::NonPositive("dtau", dtau));
    }
    if !(a_init > 0.0) {
        return Err(Error::NonPositive("A(dtau)", a_init));
    }
    let scale = (1u64 << num_sites) as f64;
    let ln_a1 = math::ln(a_init);
    let mut samples = Vec::with_capacity(d_chain.len() + 2);
    samples.push(sample_for(0.0, scale));
    samples.push(sample_for(2.0 * dtau, scale * a_init));
    let mut ln_a = ln_a1;
    let mut ln_d_sum = 0.0;
    for (i, d) in d_chain.iter().enumerate() {
        let n = i + 2;
        if !(*d > 0.0) {
            return Err(Error::ShotStarvation);
        }
        ln_d_sum += math::ln(*d);
        ln_a = ln_a + ln_a1 - ln_d_sum;
        let beta = 2.0 * n as f64 * dtau;
        let z = scale * math::exp(ln_a);
        if !z.is_finite() {
            return Err(Error::Numerical(format!(
                "recurrence overflowed at beta = {beta}"
            )));
        }
        samples.push(sample_for(beta, z));
    }
    Ok(PartitionCurve {
        method: PartitionMethod::Rfm,
        num_sites,
        samples,
        a_init: Some(a_init),
        degeneracy: None,
        ground_energy: None,
        tau_inf: None,
    })
}

/// Recurrence-route curve over a trajectory's full grid.
///
/// Overlaps `D(j dtau, (j-2) dtau)` are measured between trajectory states;
/// in sampled mode each overlap draws from a seed derived from the base seed
/// and its grid index, so the chain is reproducible and distinct base seeds
/// stay independent. Needs at least three grid points.
pub fn rfm_partition(
    circuit: &AnsatzCircuit,
    traj: &Trajectory,
    a_init: f64,
    mode: OverlapMode,
    shots: Option<u64>,
    seed: u64,
) -> Result<PartitionCurve> {
    let points = traj.points();
    if points.len() < 3 {
        return Err(Error::DimensionMismatch(format!(
            "recurrence needs at least 3 trajectory points, got {}",
            points.len()
        )));
    }
    let mut d_chain = Vec::with_capacity(points.len() - 2);
    for j in 2..points.len() {
        let est = overlap(
            circuit,
            &points[j].theta,
            &points[j - 2].theta,
            mode,
            shots,
            stream_seed(seed, j as u64),
        )?;
        d_chain.push(est.value);
    }
    rfm_from_overlaps(circuit.num_qubits() / 2, traj.dtau(), a_init, &d_chain)
}

/// Reversed-route curve anchored on the converged state at `tau_inf`.
///
/// Emits `Z(2 tau) = m exp(-2 E0 tau) / D(tau, tau_inf)` for every grid
/// `tau`. `e0` falls back to the trajectory energy at `tau_inf`. Only the
/// low-temperature tail (`2 tau` past `2 tau_inf`) is trustworthy; earlier
/// rows are emitted anyway since the formula stays well defined there.
#[allow(clippy::too_many_arguments)]
pub fn rom_partition(
    circuit: &AnsatzCircuit,
    traj: &Trajectory,
    degeneracy: usize,
    e0: Option<f64>,
    tau_inf: f64,
    mode: OverlapMode,
    shots: Option<u64>,
    seed: u64,
) -> Result<PartitionCurve> {
    if degeneracy == 0 {
        return Err(Error::NonPositive("degeneracy", 0.0));
    }
    let anchor = traj.point_at(tau_inf)?;
    let e0 = e0.unwrap_or(anchor.energy);
    let m = degeneracy as f64;
    let mut samples = Vec::with_capacity(traj.points().len());
    for (k, point) in traj.points().iter().enumerate() {
        let est = overlap(
            circuit,
            &point.theta,
            &anchor.theta,
            mode,
            shots,
            stream_seed(seed, k as u64),
        )?;
        if !(est.value > 0.0) {
            return Err(Error::ShotStarvation);
        }
        let z = m * math::exp(-2.0 * e0 * point.tau) / est.value;
        if !z.is_finite() {
            return Err(Error::Numerical(format!(
                "reversed-route value overflowed at tau = {}",
                point.tau
            )));
        }
        samples.push(sample_for(2.0 * point.tau, z));
    }
    Ok(PartitionCurve {
        method: PartitionMethod::Rom,
        num_sites: circuit.num_qubits() / 2,
        samples,
        a_init: None,
        degeneracy: Some(degeneracy),
        ground_energy: Some(e0),
        tau_inf: Some(tau_inf),
    })
}

/// Bell-basis two-copy estimator of `Tr[rho sigma]`.
///
/// For each pair `(c, d)`, applies `CNOT(c -> d)` then `H(c)` and reads the
/// computational basis; the pair contributes `-1` when it reads `(1, 1)`
/// (the singlet outcome) and `+1` otherwise. The product over pairs,
/// averaged over shots, estimates the two-copy swap expectation.
pub fn bell_measure(
    joint: &StateVector,
    pairs: &[(usize, usize)],
    shots: u64,
    seed: u64,
) -> Result<f64> {
    let n = joint.num_qubits();
    let mut used = vec![false; n];
    for &(c, d) in pairs {
        if c >= n || d >= n || c == d || used[c] || used[d] {
            return Err(Error::BadPairs);
        }
        used[c] = true;
        used[d] = true;
    }
    let mut rotated = joint.clone();
    for &(c, d) in pairs {
        rotated = rotated.apply_cnot(c, d)?.apply_h(c)?;
    }
    let record = rotated.sample_bitstrings(shots, seed)?;
    let mut acc: i64 = 0;
    for (bits, count) in &record.counts {
        let bytes = bits.as_bytes();
        let mut negative = false;
        for &(c, d) in pairs {
            if bytes[c] == b'1' && bytes[d] == b'1' {
                negative = !negative;
            }
        }
        acc += if negative { -(*count as i64) } else { *count as i64 };
    }
    Ok(acc as f64 / shots as f64)
}

/// Ground-degeneracy estimate from two copies of a converged doubled state.
///
/// The state covers system and ancilla halves; purity of the reduced system
/// state is measured by pairing the system qubits of two full copies, which
/// marginalizes the unmeasured ancilla qubits exactly as a partial trace
/// would.
pub fn estimate_degeneracy(
    state: &StateVector,
    shots: u64,
    seed: u64,
) -> Result<DegeneracyEstimate> {
    let double_n = state.num_qubits();
    if !double_n.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "doubled register must have an even qubit count, got {double_n}"
        )));
    }
    let n = double_n / 2;
    let joint = state.tensor(state)?;
    let pairs: Vec<(usize, usize)> = (0..n).map(|k| (k, double_n + k)).collect();
    let purity = bell_measure(&joint, &pairs, shots, seed)?;
    if !(purity > 0.0) {
        return Err(Error::ShotStarvation);
    }
    let inverse = 1.0 / purity;
    let degeneracy = math::round(inverse).max(1.0) as usize;
    let integer_gap = math::abs(inverse - degeneracy as f64);
    Ok(DegeneracyEstimate {
        purity,
        degeneracy,
        shots,
        std_error: math::sqrt((1.0 - purity * purity).max(0.0) / shots as f64),
        integer_gap,
        ambiguous: integer_gap > 0.25,
    })
}
