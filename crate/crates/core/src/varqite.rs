//! Variational imaginary-time evolution.
//!
//! The circuit state `|phi(theta)>` tracks normalized imaginary-time flow by
//! projecting it onto the tangent space of the parameterization: at each step
//! solve `M thetadot = C` with
//!
//! ```text
//! M_pq = Re <d_p phi | d_q phi>          (quantum metric, real symmetric PSD)
//! C_p  = -Re <d_p phi | H | phi>         (equals -1/2 dE/dtheta_p)
//! ```
//!
//! then take an Euler step `theta += dtau * thetadot`. `M` is typically
//! singular (redundant parameter directions), so the solve is regularized:
//! a ridge term by default, a spectral-cutoff pseudo-inverse when the ridge
//! is zero. The residual `||M thetadot - C||` is recorded per step as a
//! projection-quality diagnostic.
//!
//! Energy along the trajectory is non-increasing when the projection is
//! faithful; the trajectory records a flag instead of failing when small
//! violations appear, since a too-rigid circuit is a modeling problem, not a
//! numerical one.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::ansatz::AnsatzCircuit;
use crate::error::Error;
use crate::hamiltonian::PauliSum;
use crate::linalg::ridge_solve_symmetric;
use crate::math;
use crate::Result;

/// Step size, step count, and solver regularization for `evolve`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    /// Imaginary-time step.
    pub dtau: f64,
    /// Number of Euler steps; the trajectory has `steps + 1` grid points.
    pub steps: usize,
    /// Ridge weight added to the metric before solving; `0` switches to a
    /// spectral-cutoff pseudo-inverse.
    pub ridge: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            dtau: 0.025,
            steps: 120,
            ridge: 1e-6,
        }
    }
}

/// One grid point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub tau: f64,
    pub theta: Vec<f64>,
    /// `<phi | H | phi>` at this point.
    pub energy: f64,
    /// `||M thetadot - C||` for the regularized solve at this point.
    pub residual: f64,
}

/// Euler trajectory on the uniform grid `tau_k = k * dtau`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dtau: f64,
    points: Vec<TrajectoryPoint>,
    monotonic: bool,
}

impl Trajectory {
    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn final_point(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory has at least one point")
    }

    /// Whether energy was non-increasing along the whole trajectory, with
    /// `1e-6` slack per step.
    pub fn energy_monotonic(&self) -> bool {
        self.monotonic
    }

    /// Grid index of `tau`, which must sit on the grid to within `1e-9`.
    pub fn index_of_tau(&self, tau: f64) -> Result<usize> {
        let idx = math::round(tau / self.dtau);
        let k = idx as usize;
        if idx < 0.0 || k >= self.points.len() || math::abs(idx * self.dtau - tau) > 1e-9 {
            return Err(Error::DimensionMismatch(format!(
                "tau {} is not on the trajectory grid (dtau {}, {} points)",
                tau,
                self.dtau,
                self.points.len()
            )));
        }
        Ok(k)
    }

    pub fn point_at(&self, tau: f64) -> Result<&TrajectoryPoint> {
        Ok(&self.points[self.index_of_tau(tau)?])
    }
}

/// Quantum metric `M` at `theta`, row-major `d x d`.
pub fn compute_m(circuit: &AnsatzCircuit, theta: &[f64]) -> Result<Vec<f64>> {
    let tangents = all_tangents(circuit, theta)?;
    Ok(gram(&tangents))
}

/// Driving vector `C` at `theta`.
pub fn compute_c(circuit: &AnsatzCircuit, h: &PauliSum, theta: &[f64]) -> Result<Vec<f64>> {
    let state = circuit.prepare_state(theta)?;
    let h_state = h.apply(&state)?;
    let tangents = all_tangents(circuit, theta)?;
    Ok(driving(&tangents, &h_state))
}

fn all_tangents(circuit: &AnsatzCircuit, theta: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    (0..circuit.num_params())
        .map(|p| circuit.derivative_state(theta, p))
        .collect()
}

fn gram(tangents: &[Vec<Complex64>]) -> Vec<f64> {
    let d = tangents.len();
    let mut m = alloc::vec![0.0; d * d];
    for p in 0..d {
        for q in p..d {
            let mut acc = 0.0;
            for (a, b) in tangents[p].iter().zip(&tangents[q]) {
                acc += (a.conj() * b).re;
            }
            m[p * d + q] = acc;
            m[q * d + p] = acc;
        }
    }
    m
}

fn driving(tangents: &[Vec<Complex64>], h_state: &[Complex64]) -> Vec<f64> {
    tangents
        .iter()
        .map(|t| {
            let mut acc = 0.0;
            for (a, b) in t.iter().zip(h_state) {
                acc -= (a.conj() * b).re;
            }
            acc
        })
        .collect()
}

/// Solves the regularized tangent projection; returns `(thetadot, residual)`.
///
/// `m` is row-major `d x d` with `d = c.len()`. The metric must be PSD up to
/// rounding; a clearly negative eigenvalue means the Gram computation broke.
pub fn solve_update(m: &[f64], c: &[f64], ridge: f64) -> Result<(Vec<f64>, f64)> {
    let d = c.len();
    if m.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "metric has {} entries, expected {}",
            m.len(),
            d * d
        )));
    }
    if ridge < 0.0 {
        return Err(Error::NonPositive("ridge", ridge));
    }
    let (x, min_eig) = ridge_solve_symmetric(m, d, c, ridge)?;
    if min_eig < -1e-9 {
        return Err(Error::Numerical(format!(
            "quantum metric has negative eigenvalue {min_eig:e}"
        )));
    }
    let mut res_sqr = 0.0;
    for i in 0..d {
        let mut r = -c[i];
        for j in 0..d {
            r += m[i * d + j] * x[j];
        }
        res_sqr += r * r;
    }
    Ok((x, math::sqrt(res_sqr)))
}

/// Runs Euler-stepped variational imaginary-time evolution from `theta0`.
///
/// Records `steps + 1` grid points; the solve also runs at the final point so
/// every point carries a residual diagnostic.
pub fn evolve(
    circuit: &AnsatzCircuit,
    h: &PauliSum,
    theta0: &[f64],
    config: &EvolveConfig,
) -> Result<Trajectory> {
    if !(config.dtau > 0.0) {
        return Err(Error::NonPositive("dtau", config.dtau));
    }
    if config.ridge < 0.0 {
        return Err(Error::NonPositive("ridge", config.ridge));
    }
    let mut theta = theta0.to_vec();
    let mut points = Vec::with_capacity(config.steps + 1);
    let mut monotonic = true;
    let mut last_energy = f64::INFINITY;
    for k in 0..=config.steps {
        let tau = k as f64 * config.dtau;
        let state = circuit.prepare_state(&theta)?;
        let h_state = h.apply(&state)?;
        let energy: f64 = state
            .amplitudes()
            .iter()
            .zip(&h_state)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        if !energy.is_finite() {
            return Err(Error::Numerical(format!("energy diverged at tau = {tau}")));
        }
        if energy > last_energy + 1e-6 {
            monotonic = false;
        }
        last_energy = energy;
        let tangents = all_tangents(circuit, &theta)?;
        let m = gram(&tangents);
        let c = driving(&tangents, &h_state);
        let (thetadot, residual) = solve_update(&m, &c, config.ridge)?;
        points.push(TrajectoryPoint {
            tau,
            theta: theta.clone(),
            energy,
            residual,
        });
        if k < config.steps {
            for (t, dt) in theta.iter_mut().zip(&thetadot) {
                *t += config.dtau * dt;
            }
            if theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::Numerical(format!(
                    "parameters diverged after tau = {tau}"
                )));
            }
        }
    }
    Ok(Trajectory {
        dtau: config.dtau,
        points,
        monotonic,
    })
}

/// Relaxation threshold matched to the Hamiltonian's energy scale:
/// `1e-7 * max|coefficient|^2`.
pub fn default_rate_threshold(h: &PauliSum) -> f64 {
    let scale = h
        .terms()
        .iter()
        .map(|(c, _)| math::abs(*c))
        .fold(0.0f64, f64::max);
    1e-7 * scale * scale
}

/// Smallest grid time after which the energy rate `|dE/dtau|` stays below
/// `epsilon` for the rest of the trajectory.
///
/// Rates are backward differences, so the returned time is at least one step
/// into the trajectory. Fails with the final rate when the tail never
/// settles.
pub fn detect_tau_inf(trajectory: &Trajectory, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositive("epsilon", epsilon));
    }
    let points = trajectory.points();
    if points.len() < 2 {
        return Err(Error::NotConverged(f64::INFINITY));
    }
    let rates: Vec<f64> = points
        .windows(2)
        .map(|w| math::abs(w[1].energy - w[0].energy) / trajectory.dtau())
        .collect();
    let mut settle_idx = None;
    for (i, rate) in rates.iter().enumerate().rev() {
        if *rate >= epsilon {
            break;
        }
        settle_idx = Some(i + 1);
    }
    match settle_idx {
        Some(k) => Ok(points[k].tau),
        None => Err(Error::NotConverged(*rates.last().expect("len >= 2"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_default_ansatz, AnsatzCircuit, Gate};
    use crate::hamiltonian::{heisenberg_chain, parse_pauli_sum};
    use crate::linalg::{eigh, DenseMatrix};
    use alloc::vec::Vec;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_ry() -> AnsatzCircuit {
        AnsatzCircuit::new(1, alloc::vec![Gate::Ry { qubit: 0, slot: 0 }]).unwrap()
    }

    #[test]
    fn metric_of_single_rotation_is_quarter() {
        let c = single_ry();
        for theta in [0.0, 0.7, -2.1] {
            let m = compute_m(&c, &[theta]).unwrap();
            assert!((m[0] - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn driving_vector_matches_closed_form_for_rotation_against_z() {
        // |phi> = [cos(t/2), sin(t/2)], E = cos t, C = -E'/2 = sin(t)/2.
        let c = single_ry();
        let h = parse_pauli_sum("1.0 Z").unwrap();
        for theta in [0.0, 0.5, core::f64::consts::FRAC_PI_2, 2.0] {
            let cv = compute_c(&c, &h, &[theta]).unwrap();
            assert!(
                (cv[0] - theta.sin() / 2.0).abs() < 1e-12,
                "theta={theta}: C={}",
                cv[0]
            );
        }
    }

    #[test]
    fn driving_vector_is_half_negative_energy_gradient() {
        let circuit = build_default_ansatz(2, 2).unwrap();
        let h = heisenberg_chain(2, 1.0).unwrap();
        let eps = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..3 {
            let theta: Vec<f64> = (0..circuit.num_params())
                .map(|_| (rng.gen::<f64>() - 0.5) * core::f64::consts::PI)
                .collect();
            let c = compute_c(&circuit, &h, &theta).unwrap();
            for p in 0..circuit.num_params() {
                let mut plus = theta.clone();
                plus[p] += eps;
                let mut minus = theta.clone();
                minus[p] -= eps;
                let ep = h.expectation(&circuit.prepare_state(&plus).unwrap()).unwrap();
                let em = h.expectation(&circuit.prepare_state(&minus).unwrap()).unwrap();
                let fd = -0.5 * (ep - em) / (2.0 * eps);
                assert!((c[p] - fd).abs() < 1e-6, "param {p}: {} vs {}", c[p], fd);
            }
        }
    }

    #[test]
    fn metric_is_symmetric_and_positive_semidefinite() {
        let circuit = build_default_ansatz(2, 2).unwrap();
        let d = circuit.num_params();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let theta: Vec<f64> = (0..d).map(|_| (rng.gen::<f64>() - 0.5) * 3.0).collect();
        let m = compute_m(&circuit, &theta).unwrap();
        for p in 0..d {
            for q in 0..d {
                assert_eq!(m[p * d + q], m[q * d + p]);
            }
        }
        let mut dense = DenseMatrix::zeros(d);
        for p in 0..d {
            for q in 0..d {
                dense.add_assign_at(p, q, Complex64::new(m[p * d + q], 0.0));
            }
        }
        let (eigs, _) = eigh(&dense).unwrap();
        assert!(eigs[0] > -1e-12, "metric eigenvalue {}", eigs[0]);
        // Diagonal entries are tangent norms, at most 1/4 for these gates.
        for p in 0..d {
            assert!(m[p * d + p] <= 0.25 + 1e-12);
        }
    }

    #[test]
    fn solve_update_handles_singular_metric() {
        // Rank-one metric: minimum-norm solution lives along [1, 1].
        let m = [0.25, 0.25, 0.25, 0.25];
        let c = [0.25, 0.25];
        let (x, residual) = solve_update(&m, &c, 0.0).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12);
        assert!((x[1] - 0.5).abs() < 1e-12);
        assert!(residual < 1e-12);
        let (x_ridge, _) = solve_update(&m, &c, 1e-6).unwrap();
        assert!((x_ridge[0] - 0.5).abs() < 1e-5);
        assert!((x_ridge[0] - x_ridge[1]).abs() < 1e-12);
        assert!(matches!(
            solve_update(&m, &c, -1.0),
            Err(Error::NonPositive("ridge", _))
        ));
        assert!(matches!(
            solve_update(&m, &c[..1], 0.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn relaxation_detection_on_synthetic_energies() {
        let energies = [3.0, 1.0, 0.5, 0.4, 0.39, 0.389, 0.3889];
        let points: Vec<TrajectoryPoint> = energies
            .iter()
            .enumerate()
            .map(|(k, &e)| TrajectoryPoint {
                tau: k as f64,
                theta: alloc::vec![],
                energy: e,
                residual: 0.0,
            })
            .collect();
        let traj = Trajectory {
            dtau: 1.0,
            points,
            monotonic: true,
        };
        assert_eq!(detect_tau_inf(&traj, 0.05).unwrap(), 4.0);
        assert_eq!(detect_tau_inf(&traj, 3.0).unwrap(), 1.0);
        match detect_tau_inf(&traj, 1e-5) {
            Err(Error::NotConverged(rate)) => assert!((rate - 1e-4).abs() < 1e-12),
            other => panic!("expected NotConverged, got {other:?}"),
        }
        assert!(matches!(
            detect_tau_inf(&traj, 0.0),
            Err(Error::NonPositive("epsilon", _))
        ));
    }

    #[test]
    fn coupled_pair_evolution_relaxes_to_ground_energy() {
        // Ground energy of the two-site chain at J = 1 is -1 (triplet).
        let circuit = build_default_ansatz(2, 1).unwrap();
        let h = heisenberg_chain(2, 1.0).unwrap();
        let config = EvolveConfig::default();
        let traj = evolve(&circuit, &h, circuit.theta0(), &config).unwrap();
        assert_eq!(traj.points().len(), config.steps + 1);
        assert!((traj.points()[0].energy - 0.0).abs() < 1e-12, "traceless start");
        assert!(traj.energy_monotonic(), "energy must not increase");
        let e_mid = traj.point_at(2.5).unwrap().energy;
        assert!(
            (e_mid - (-1.0)).abs() <= 1e-4,
            "energy at tau 2.5: {e_mid}"
        );
        let threshold = default_rate_threshold(&h);
        assert!((threshold - 1e-7).abs() < 1e-20);
        let tau_inf = detect_tau_inf(&traj, threshold).unwrap();
        assert!(
            (2.0..=3.0).contains(&tau_inf),
            "relaxation time {tau_inf}"
        );
    }

    #[test]
    fn reversed_sign_chain_relaxes_toward_singlet_energy() {
        // J = -1 has a unique ground state at energy -3.
        let circuit = build_default_ansatz(2, 1).unwrap();
        let h = heisenberg_chain(2, -1.0).unwrap();
        let traj = evolve(&circuit, &h, circuit.theta0(), &EvolveConfig::default()).unwrap();
        let e_final = traj.final_point().energy;
        assert!(
            (e_final - (-3.0)).abs() <= 1e-4,
            "final energy {e_final}"
        );
        assert!(traj.energy_monotonic());
        let tau_inf = detect_tau_inf(&traj, default_rate_threshold(&h)).unwrap();
        assert!(
            (2.0..=3.0).contains(&tau_inf),
            "relaxation time {tau_inf}"
        );
    }

    #[test]
    fn grid_lookup_rejects_off_grid_times() {
        let circuit = single_ry();
        let h = parse_pauli_sum("1.0 Z").unwrap();
        let traj = evolve(
            &circuit,
            &h,
            &[0.3],
            &EvolveConfig {
                dtau: 0.1,
                steps: 5,
                ridge: 1e-6,
            },
        )
        .unwrap();
        assert_eq!(traj.index_of_tau(0.0).unwrap(), 0);
        assert_eq!(traj.index_of_tau(0.5).unwrap(), 5);
        assert!(traj.point_at(0.25).is_err());
        assert!(traj.point_at(0.7).is_err());
        assert!(traj.point_at(-0.1).is_err());
    }

    #[test]
    fn evolve_validates_config() {
        let circuit = single_ry();
        let h = parse_pauli_sum("1.0 Z").unwrap();
        let bad_dtau = EvolveConfig {
            dtau: 0.0,
            ..EvolveConfig::default()
        };
        assert!(matches!(
            evolve(&circuit, &h, &[0.0], &bad_dtau),
            Err(Error::NonPositive("dtau", _))
        ));
        let bad_ridge = EvolveConfig {
            ridge: -1e-6,
            ..EvolveConfig::default()
        };
        assert!(matches!(
            evolve(&circuit, &h, &[0.0], &bad_ridge),
            Err(Error::NonPositive("ridge", _))
        ));
    }
}
