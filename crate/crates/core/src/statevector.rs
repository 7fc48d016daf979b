//! Dense statevector simulation.
//!
//! States live on up to 16 qubits. Qubit 0 maps to the MOST significant bit
//! of the basis index, so a register split into an `A` half (qubits `0..N`)
//! and a `B` half (qubits `N..2N`) has basis label `|i>_A |j>_B` at index
//! `(i << N) | j`. All operations are pure: they never mutate their input and
//! return fresh values. Randomness enters only through explicit seeds.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::{vec, vec::Vec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::linalg::DenseMatrix;
use crate::math;
use crate::Result;

/// Hard cap on register width; a dense state at this width is 1 MiB.
pub const MAX_QUBITS: usize = 16;

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// A pure state on `num_qubits` qubits as a dense amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Outcome histogram of repeated computational-basis measurements.
///
/// Keys are bitstrings with the qubit-0 outcome first. Counts over all keys
/// sum to `shots`, and `seed` reproduces the draw exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
}

/// Reduced density matrix on a subset of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: DenseMatrix,
}

impl StateVector {
    /// The all-zeros computational basis state `|0...0>`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::check_width(num_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amplitudes })
    }

    /// A single computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        Self::check_width(num_qubits)?;
        if index >= (1 << num_qubits) {
            return Err(Error::BadDimension(index));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amplitudes })
    }

    /// Builds a state from raw amplitudes. The length must be a power of two
    /// and the vector must already be normalized to within `1e-8`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::BadDimension(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        Self::check_width(num_qubits)?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if math::abs(norm_sqr - 1.0) > 1e-8 {
            return Err(Error::NotNormalized(math::sqrt(norm_sqr)));
        }
        Ok(StateVector { num_qubits, amplitudes })
    }

    /// Builds a state from raw amplitudes, rescaling to unit norm.
    pub fn from_amplitudes_normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::BadDimension(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        Self::check_width(num_qubits)?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return Err(Error::NotNormalized(math::sqrt(norm_sqr)));
        }
        let scale = 1.0 / math::sqrt(norm_sqr);
        let amplitudes = amplitudes.into_iter().map(|a| a * scale).collect();
        Ok(StateVector { num_qubits, amplitudes })
    }

    /// The uniformly correlated two-register state
    /// `2^{-N/2} sum_i |i>_A |i>_B` on `2 * pair_qubits` qubits.
    pub fn maximally_entangled(pair_qubits: usize) -> Result<Self> {
        Self::check_width(2 * pair_qubits)?;
        if pair_qubits == 0 {
            return Err(Error::BadDimension(0));
        }
        let dim_a = 1usize << pair_qubits;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim_a * dim_a];
        let w = 1.0 / math::sqrt(dim_a as f64);
        for i in 0..dim_a {
            amplitudes[(i << pair_qubits) | i] = Complex64::new(w, 0.0);
        }
        Ok(StateVector {
            num_qubits: 2 * pair_qubits,
            amplitudes,
        })
    }

    fn check_width(num_qubits: usize) -> Result<()> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits, MAX_QUBITS));
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    /// Probability of observing basis state `index`.
    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    /// Squared norm; 1 for any state produced by this module's constructors
    /// and preserved by every gate.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Index-space bit mask addressing `qubit` (qubit 0 = most significant).
    #[inline]
    fn mask(&self, qubit: usize) -> usize {
        1usize << (self.num_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Tensor product `self (x) other`, with `other`'s qubits appended after
    /// this state's qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let total = self.num_qubits + other.num_qubits;
        Self::check_width(total)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.dim() * other.dim()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let base = i << other.num_qubits;
            for (j, b) in other.amplitudes.iter().enumerate() {
                amplitudes[base | j] = a * b;
            }
        }
        Ok(StateVector {
            num_qubits: total,
            amplitudes,
        })
    }

    /// Hadamard on one qubit.
    pub fn apply_h(&self, qubit: usize) -> Result<StateVector> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        let mut out = self.amplitudes.clone();
        for i in 0..out.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a = out[i];
                let b = out[j];
                out[i] = (a + b) * FRAC_1_SQRT_2;
                out[j] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Controlled-NOT with the given control and target qubits.
    pub fn apply_cnot(&self, control: usize, target: usize) -> Result<StateVector> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::DuplicateQubit(control));
        }
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        let mut out = self.amplitudes.clone();
        for i in 0..out.len() {
            if i & cmask != 0 && i & tmask == 0 {
                out.swap(i, i | tmask);
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Rotation about Y: `Ry(theta) = exp(-i theta sigma_y / 2)`.
    pub fn apply_ry(&self, qubit: usize, theta: f64) -> Result<StateVector> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        let (c, s) = (math::cos(theta / 2.0), math::sin(theta / 2.0));
        let mut out = self.amplitudes.clone();
        for i in 0..out.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a = out[i];
                let b = out[j];
                out[i] = a * c - b * s;
                out[j] = a * s + b * c;
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Controlled `Ry(theta)` on the target, active when the control is `|1>`.
    pub fn apply_cry(&self, control: usize, target: usize, theta: f64) -> Result<StateVector> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::DuplicateQubit(control));
        }
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        let (c, s) = (math::cos(theta / 2.0), math::sin(theta / 2.0));
        let mut out = self.amplitudes.clone();
        for i in 0..out.len() {
            if i & cmask != 0 && i & tmask == 0 {
                let j = i | tmask;
                let a = out[i];
                let b = out[j];
                out[i] = a * c - b * s;
                out[j] = a * s + b * c;
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Applies a Pauli-string unitary given in index-space mask form:
    /// `flip_mask` collects X/Y positions, `phase_mask` collects Z/Y
    /// positions, and `y_count` is the number of Y factors. The action on a
    /// basis state is `i^y_count * (-1)^{popcount(b & phase_mask)}
    /// |b XOR flip_mask>`.
    pub fn apply_pauli_masks(
        &self,
        flip_mask: usize,
        phase_mask: usize,
        y_count: u32,
    ) -> Result<StateVector> {
        let dim = self.dim();
        if flip_mask >= dim || phase_mask >= dim {
            return Err(Error::QubitOutOfRange {
                index: self.num_qubits,
                num_qubits: self.num_qubits,
            });
        }
        let global = match y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (b, a) in self.amplitudes.iter().enumerate() {
            let sign = if (b & phase_mask).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            out[b ^ flip_mask] = a * sign * global;
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Inner product `<self|other>` (conjugate-linear in `self`).
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::MixedStringLength(self.num_qubits, other.num_qubits));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.amplitudes.iter().zip(other.amplitudes.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }

    /// Draws `shots` computational-basis samples using a ChaCha stream seeded
    /// from `seed`. Identical inputs give identical records.
    pub fn sample_bitstrings(&self, shots: u64, seed: u64) -> Result<MeasurementRecord> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let dim = self.dim();
        let mut cumulative = Vec::with_capacity(dim);
        let mut acc = 0.0f64;
        for a in &self.amplitudes {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let total = acc;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut index_counts: BTreeMap<usize, u64> = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.gen::<f64>() * total;
            let idx = cumulative.partition_point(|&c| c <= u).min(dim - 1);
            *index_counts.entry(idx).or_insert(0) += 1;
        }
        let counts = index_counts
            .into_iter()
            .map(|(idx, n)| (self.format_bitstring(idx), n))
            .collect();
        Ok(MeasurementRecord { counts, shots, seed })
    }

    /// Renders a basis index as a bitstring, qubit 0 first.
    pub fn format_bitstring(&self, index: usize) -> String {
        let mut s = String::with_capacity(self.num_qubits);
        for q in 0..self.num_qubits {
            let bit = (index >> (self.num_qubits - 1 - q)) & 1;
            s.push(if bit == 1 { '1' } else { '0' });
        }
        s
    }

    /// Reduced density matrix over `keep` (strictly increasing qubit list);
    /// all other qubits are traced out. Reduced qubit `j` is the `j`-th
    /// entry of `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() || keep.len() > self.num_qubits {
            return Err(Error::BadKeepSet);
        }
        for w in keep.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::BadKeepSet);
            }
        }
        if *keep.last().expect("non-empty") >= self.num_qubits {
            return Err(Error::BadKeepSet);
        }
        let k = keep.len();
        let env: Vec<usize> = (0..self.num_qubits).filter(|q| !keep.contains(q)).collect();
        let e = env.len();
        // Index contributions of each reduced/environment configuration.
        let keep_contrib: Vec<usize> = (0..1usize << k)
            .map(|r| {
                let mut idx = 0;
                for (j, &q) in keep.iter().enumerate() {
                    if (r >> (k - 1 - j)) & 1 == 1 {
                        idx |= self.mask(q);
                    }
                }
                idx
            })
            .collect();
        let env_contrib: Vec<usize> = (0..1usize << e)
            .map(|x| {
                let mut idx = 0;
                for (j, &q) in env.iter().enumerate() {
                    if (x >> (e - 1 - j)) & 1 == 1 {
                        idx |= self.mask(q);
                    }
                }
                idx
            })
            .collect();
        let dim_k = 1usize << k;
        let mut matrix = DenseMatrix::zeros(dim_k);
        for r in 0..dim_k {
            for c in 0..dim_k {
                let mut acc = Complex64::new(0.0, 0.0);
                for &ec in &env_contrib {
                    acc += self.amplitudes[keep_contrib[r] | ec]
                        * self.amplitudes[keep_contrib[c] | ec].conj();
                }
                matrix.set(r, c, acc);
            }
        }
        Ok(DensityMatrix {
            num_qubits: k,
            matrix,
        })
    }
}

impl MeasurementRecord {
    /// Number of times `bitstring` was observed.
    pub fn count(&self, bitstring: &str) -> u64 {
        self.counts.get(bitstring).copied().unwrap_or(0)
    }

    /// Observed frequency of `bitstring`.
    pub fn frequency(&self, bitstring: &str) -> f64 {
        self.count(bitstring) as f64 / self.shots as f64
    }
}

impl DensityMatrix {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix.get(row, col)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Builds a density matrix from an explicit dense matrix, checking
    /// Hermiticity and unit trace.
    pub fn from_matrix(matrix: DenseMatrix) -> Result<Self> {
        let dim = matrix.dim();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::BadDensityMatrix(alloc::format!(
                "dimension {dim} is not a power of two"
            )));
        }
        let defect = matrix.hermiticity_defect();
        if defect > 1e-9 {
            return Err(Error::BadDensityMatrix(alloc::format!(
                "not Hermitian (defect {defect:e})"
            )));
        }
        let tr = matrix.trace();
        if math::abs(tr.re - 1.0) > 1e-9 || math::abs(tr.im) > 1e-9 {
            return Err(Error::BadDensityMatrix(alloc::format!(
                "trace {} + {}i differs from 1",
                tr.re,
                tr.im
            )));
        }
        Ok(DensityMatrix {
            num_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    /// `Tr rho`, which is 1 for any valid density matrix.
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr rho^2`; 1 exactly for pure states, `1/dim` for the maximally
    /// mixed state.
    pub fn purity(&self) -> f64 {
        let n = self.matrix.dim();
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                acc += self.matrix.get(r, c).norm_sqr();
            }
        }
        acc
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (eigs, _) = crate::linalg::eigh(&self.matrix)?;
        Ok(eigs)
    }
}
