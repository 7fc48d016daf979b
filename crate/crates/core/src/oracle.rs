//! Exact references from dense diagonalization.
//!
//! Everything here is the classically computable ground truth the estimators
//! are judged against: the full spectrum, the partition function summed over
//! eigenvalues, imaginary-time flow applied spectrally to a doubled register,
//! state fidelity, and von Neumann entropy. Limited to small registers by
//! the dense representation.
//!
//! The flow acts on the first half of a doubled register: for an `n`-qubit
//! Hamiltonian the input state lives on `2n` qubits and evolves under
//! `exp(-H tau) (x) I`. Starting from the uniformly correlated state (all
//! basis pairs with equal amplitude), the squared norm `A(tau)` of the
//! unnormalized flow ties to the partition function as
//! `Z(beta) = 2^n A(beta / 2)`, which is the identity the estimators exploit
//! and the oracle cross-checks.

use alloc::vec::Vec;
use alloc::{format, vec};
use num_complex::Complex64;

use crate::error::Error;
use crate::hamiltonian::PauliSum;
use crate::math;
use crate::statevector::{DensityMatrix, StateVector};
use crate::Result;

/// Eigenvalues are equal when they differ by at most this much; spectra here
/// are small integer multiples of the coupling, so this only absorbs
/// floating-point error.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Full spectral data of a Hamiltonian, plus how the uniformly correlated
/// doubled start distributes over the eigenbasis.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors, matching `energies` by index.
    pub eigenstates: Vec<StateVector>,
    /// Weight of each eigenvector in the uniformly correlated doubled start;
    /// structurally `1 / 2^n` per vector, so they sum to one.
    pub initial_weights: Vec<f64>,
    /// How many eigenvalues tie with the lowest one.
    pub degeneracy: usize,
}

impl EigenDecomposition {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// `Z(beta)`: sum of `exp(-beta E_i)` over the spectrum, computed with
    /// shifted exponents so large `beta` cannot overflow prematurely.
    pub fn partition(&self, beta: f64) -> Result<f64> {
        if !(beta >= 0.0) {
            return Err(Error::NonPositive("beta", beta));
        }
        let e0 = self.ground_energy();
        let mut acc = 0.0;
        for &e in &self.energies {
            acc += math::exp(-beta * (e - e0));
        }
        Ok(math::exp(-beta * e0) * acc)
    }

    /// Applies `exp(-H tau) (x) I` to a doubled-register state and
    /// renormalizes; returns the state and the squared norm `A(tau)` the
    /// normalization removed.
    pub fn evolve_doubled(&self, psi0: &StateVector, tau: f64) -> Result<(StateVector, f64)> {
        if !(tau >= 0.0) {
            return Err(Error::NonPositive("tau", tau));
        }
        let dim_a = self.energies.len();
        if !psi0.dim().is_multiple_of(dim_a) || psi0.dim() / dim_a != dim_a {
            return Err(Error::DimensionMismatch(format!(
                "doubled state has dimension {}, expected {}",
                psi0.dim(),
                dim_a * dim_a
            )));
        }
        let dim_b = dim_a;
        let e0 = self.ground_energy();
        // Project the A register onto the eigenbasis, damp each eigenline by
        // exp(-(E_i - E_0) tau), and map back. The common factor
        // exp(-E_0 tau) is carried outside so the amplitudes stay bounded.
        let mut raw = vec![Complex64::new(0.0, 0.0); psi0.dim()];
        for (i, phi) in self.eigenstates.iter().enumerate() {
            let damp = math::exp(-(self.energies[i] - e0) * tau);
            for b in 0..dim_b {
                let mut coeff = Complex64::new(0.0, 0.0);
                for x in 0..dim_a {
                    coeff += phi.amplitude(x).conj() * psi0.amplitude(x * dim_b + b);
                }
                coeff *= damp;
                for x in 0..dim_a {
                    raw[x * dim_b + b] += phi.amplitude(x) * coeff;
                }
            }
        }
        let norm_sqr: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return Err(Error::Numerical(format!(
                "imaginary-time flow annihilated the state at tau = {tau}"
            )));
        }
        let shift = math::exp(-e0 * tau);
        let a_tau = shift * shift * norm_sqr;
        if !a_tau.is_finite() {
            return Err(Error::Numerical(format!(
                "normalization factor overflowed at tau = {tau}"
            )));
        }
        let state = StateVector::from_amplitudes_normalized(raw)?;
        Ok((state, a_tau))
    }
}

/// Dense diagonalization of `h`. Fails above the dense size limit.
pub fn diagonalize(h: &PauliSum) -> Result<EigenDecomposition> {
    let dense = h.to_dense()?;
    let (energies, vectors) = crate::linalg::eigh(&dense)?;
    let dim = energies.len();
    let mut eigenstates = Vec::with_capacity(dim);
    let mut initial_weights = Vec::with_capacity(dim);
    for i in 0..dim {
        let column: Vec<Complex64> = (0..dim).map(|r| vectors.get(r, i)).collect();
        // Weight of eigenvector i in the uniformly correlated doubled start:
        // sum over the B register of the squared projection amplitudes.
        let weight: f64 = column.iter().map(|a| a.norm_sqr()).sum::<f64>() / dim as f64;
        eigenstates.push(StateVector::from_amplitudes_normalized(column)?);
        initial_weights.push(weight);
    }
    let e0 = energies[0];
    let degeneracy = energies
        .iter()
        .take_while(|&&e| e - e0 <= DEGENERACY_TOLERANCE)
        .count();
    Ok(EigenDecomposition {
        energies,
        eigenstates,
        initial_weights,
        degeneracy,
    })
}

/// `Z(beta)` by diagonalizing `h` once; use [`EigenDecomposition::partition`]
/// directly when sweeping a grid of temperatures.
pub fn exact_partition(h: &PauliSum, beta: f64) -> Result<f64> {
    diagonalize(h)?.partition(beta)
}

/// One-shot doubled-register flow; see [`EigenDecomposition::evolve_doubled`].
pub fn exact_imaginary_evolve(
    h: &PauliSum,
    psi0: &StateVector,
    tau: f64,
) -> Result<(StateVector, f64)> {
    diagonalize(h)?.evolve_doubled(psi0, tau)
}

/// `|<a|b>|^2`, clamped into `[0, 1]` against rounding.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    let overlap = a.inner_product(b)?;
    Ok(overlap.norm_sqr().min(1.0))
}

/// `-Tr[rho ln rho]` over the eigenvalues, treating anything at or below
/// `1e-14` as an exact zero.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let eigs = rho.eigenvalues()?;
    let mut acc = 0.0;
    for p in eigs {
        if p < -1e-9 {
            return Err(Error::BadDensityMatrix(format!(
                "negative eigenvalue {p:e}"
            )));
        }
        if p > 1e-14 {
            acc -= p * math::ln(p);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::heisenberg_chain;
    use crate::linalg::DenseMatrix;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn two_site_spectra_and_degeneracies() {
        let ferro = diagonalize(&heisenberg_chain(2, 1.0).unwrap()).unwrap();
        for (got, want) in ferro.energies.iter().zip([-1.0, -1.0, -1.0, 3.0]) {
            assert_close(*got, want, 1e-9);
        }
        assert_eq!(ferro.degeneracy, 3);

        let anti = diagonalize(&heisenberg_chain(2, -1.0).unwrap()).unwrap();
        for (got, want) in anti.energies.iter().zip([-3.0, 1.0, 1.0, 1.0]) {
            assert_close(*got, want, 1e-9);
        }
        assert_eq!(anti.degeneracy, 1);
    }

    #[test]
    fn eigenpairs_satisfy_the_eigenvalue_equation() {
        for j in [1.0, -1.0] {
            let h = heisenberg_chain(2, j).unwrap();
            let decomp = diagonalize(&h).unwrap();
            for (e, phi) in decomp.energies.iter().zip(&decomp.eigenstates) {
                let h_phi = h.apply(phi).unwrap();
                let mut defect = 0.0f64;
                for (got, amp) in h_phi.iter().zip(phi.amplitudes()) {
                    defect += (got - amp * e).norm_sqr();
                }
                assert!(defect.sqrt() < 1e-9, "eigenpair defect {}", defect.sqrt());
            }
        }
    }

    #[test]
    fn initial_weights_are_uniform_and_sum_to_one() {
        let decomp = diagonalize(&heisenberg_chain(2, 1.0).unwrap()).unwrap();
        let mut total = 0.0;
        for w in &decomp.initial_weights {
            assert_close(*w, 0.25, 1e-12);
            total += w;
        }
        assert_close(total, 1.0, 1e-12);
    }

    #[test]
    fn null_hamiltonian_is_fully_degenerate() {
        let decomp = diagonalize(&PauliSum::zero(2).unwrap()).unwrap();
        assert_eq!(decomp.degeneracy, 4);
        for e in &decomp.energies {
            assert_close(*e, 0.0, 1e-12);
        }
        assert_close(decomp.partition(7.0).unwrap(), 4.0, 1e-12);
    }

    #[test]
    fn partition_values_match_the_spectrum() {
        let decomp = diagonalize(&heisenberg_chain(2, 1.0).unwrap()).unwrap();
        assert_close(decomp.partition(0.0).unwrap(), 4.0, 1e-12);
        let e = core::f64::consts::E;
        assert_close(decomp.partition(1.0).unwrap(), 3.0 * e + (-3.0f64).exp(), 1e-9);
        // Large beta: the ground manifold dominates, with the gap setting the
        // relative error of the degenerate-ground approximation.
        let beta = 20.0;
        let z = decomp.partition(beta).unwrap();
        let approx = 3.0 * (beta * 1.0f64).exp();
        assert!(((z - approx) / z).abs() < (-beta * 4.0f64).exp() * 2.0);
        assert!(decomp.partition(-1.0).is_err());
    }

    #[test]
    fn doubled_flow_normalization_matches_closed_form() {
        let h = heisenberg_chain(2, 1.0).unwrap();
        let start = StateVector::maximally_entangled(2).unwrap();
        let (state, a0) = exact_imaginary_evolve(&h, &start, 0.0).unwrap();
        assert_close(a0, 1.0, 1e-12);
        for (a, b) in state.amplitudes().iter().zip(start.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
        // A(tau) = (3 exp(2 tau) + exp(-6 tau)) / 4 for the two-site chain.
        let (state, a) = exact_imaginary_evolve(&h, &start, 0.5).unwrap();
        assert_close(a, 2.051158, 1e-6);
        assert_close(a, (3.0 * 1.0f64.exp() + (-3.0f64).exp()) / 4.0, 1e-12);
        assert_close(state.norm_sqr(), 1.0, 1e-12);
    }

    #[test]
    fn doubled_flow_composes_as_a_semigroup() {
        let h = heisenberg_chain(2, 1.0).unwrap();
        let decomp = diagonalize(&h).unwrap();
        let start = StateVector::maximally_entangled(2).unwrap();
        let (mid, a_first) = decomp.evolve_doubled(&start, 0.7).unwrap();
        let (end, a_second) = decomp.evolve_doubled(&mid, 0.4).unwrap();
        let (direct, a_total) = decomp.evolve_doubled(&start, 1.1).unwrap();
        assert_close(a_first * a_second, a_total, a_total * 1e-10);
        for (a, b) in end.amplitudes().iter().zip(direct.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn doubled_partition_identity_holds_across_sizes_and_signs() {
        for n in [2usize, 3] {
            for j in [1.0, -1.0] {
                let h = heisenberg_chain(n, j).unwrap();
                let decomp = diagonalize(&h).unwrap();
                let start = StateVector::maximally_entangled(n).unwrap();
                for k in 0..=10 {
                    let beta = k as f64;
                    let (_, a) = decomp.evolve_doubled(&start, beta / 2.0).unwrap();
                    let z = decomp.partition(beta).unwrap();
                    let lhs = (1u64 << n) as f64 * a;
                    assert!(
                        ((lhs - z) / z).abs() <= 1e-10,
                        "n={n} j={j} beta={beta}: {lhs} vs {z}"
                    );
                }
            }
        }
    }

    #[test]
    fn evolve_rejects_mismatched_and_negative_inputs() {
        let h = heisenberg_chain(2, 1.0).unwrap();
        let decomp = diagonalize(&h).unwrap();
        let narrow = StateVector::zero(2).unwrap();
        assert!(matches!(
            decomp.evolve_doubled(&narrow, 0.5),
            Err(Error::DimensionMismatch(_))
        ));
        let start = StateVector::maximally_entangled(2).unwrap();
        assert!(matches!(
            decomp.evolve_doubled(&start, -0.1),
            Err(Error::NonPositive("tau", _))
        ));
    }

    #[test]
    fn fidelity_basics() {
        let zero = StateVector::zero(2).unwrap();
        let one = StateVector::basis(2, 3).unwrap();
        assert_close(fidelity(&zero, &zero).unwrap(), 1.0, 1e-15);
        assert_close(fidelity(&zero, &one).unwrap(), 0.0, 1e-15);
        let bell = StateVector::maximally_entangled(1).unwrap();
        assert_close(fidelity(&bell, &StateVector::zero(2).unwrap()).unwrap(), 0.5, 1e-12);
        assert!(fidelity(&zero, &StateVector::zero(3).unwrap()).is_err());
    }

    #[test]
    fn entropy_of_pure_and_maximally_mixed_states() {
        let pure = StateVector::zero(2).unwrap().partial_trace(&[0]).unwrap();
        assert_close(von_neumann_entropy(&pure).unwrap(), 0.0, 1e-12);
        let mixed = StateVector::maximally_entangled(2)
            .unwrap()
            .partial_trace(&[0, 1])
            .unwrap();
        assert_close(von_neumann_entropy(&mixed).unwrap(), (4.0f64).ln(), 1e-10);
    }

    #[test]
    fn gibbs_state_thermodynamics_are_consistent() {
        // F = E - S / beta must agree with -ln(Z) / beta.
        let h = heisenberg_chain(2, 1.0).unwrap();
        let decomp = diagonalize(&h).unwrap();
        let beta = 1.0;
        let z = decomp.partition(beta).unwrap();
        let dim = decomp.energies.len();
        let mut gibbs = DenseMatrix::zeros(dim);
        let mut energy = 0.0;
        for (e, phi) in decomp.energies.iter().zip(&decomp.eigenstates) {
            let p = math::exp(-beta * e) / z;
            energy += p * e;
            for r in 0..dim {
                for c in 0..dim {
                    gibbs.add_assign_at(
                        r,
                        c,
                        phi.amplitude(r) * phi.amplitude(c).conj() * p,
                    );
                }
            }
        }
        let rho = DensityMatrix::from_matrix(gibbs).unwrap();
        let s = von_neumann_entropy(&rho).unwrap();
        let f_thermo = energy - s / beta;
        let f_direct = -math::ln(z) / beta;
        assert_close(f_thermo, f_direct, 1e-9);
    }
}
