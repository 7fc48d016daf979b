//! Pauli-string Hamiltonians.
//!
//! Strings are stored symplectically as an X bitmask and a Z bitmask (bit `k`
//! describes qubit `k`; X and Z both set means Y), which makes products of
//! strings O(1) bit arithmetic plus a phase mod 4. A Hamiltonian is a real
//! linear combination of strings. Normalized spectral moments `Tr[H^k]/2^N`
//! are evaluated symbolically: only the identity string carries trace.
//!
//! Text form, used by files and the CLI: one term per line or `+`-separated,
//! each term `<coefficient> <letters>` with letters from `I X Y Z` (leftmost
//! letter = qubit 0), and `#` starting a comment. Example:
//!
//! ```text
//! # two-site exchange
//! -1.0 XX + -1.0 YY
//! -1.0 ZZ
//! ```

use alloc::string::{String, ToString};
use alloc::{collections::BTreeMap, format, vec::Vec};
use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::DenseMatrix;
use crate::statevector::{StateVector, MAX_QUBITS};
use crate::Result;

/// Highest spectral-moment order `moment_trace` will evaluate.
pub const MAX_MOMENT_ORDER: usize = 16;

/// Largest register `to_dense` will materialize (a 256 x 256 matrix).
pub const MAX_DENSE_QUBITS: usize = 8;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(ch: char) -> Option<Pauli> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis over a fixed register width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    num_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    /// The identity string on `num_qubits` qubits.
    pub fn identity(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits, MAX_QUBITS));
        }
        Ok(PauliString {
            num_qubits,
            x_mask: 0,
            z_mask: 0,
        })
    }

    /// Builds a string from letters, leftmost letter on qubit 0.
    pub fn from_letters(letters: &str) -> Result<Self> {
        let mut s = PauliString::identity(letters.chars().count())?;
        for (q, ch) in letters.chars().enumerate() {
            let p = Pauli::from_char(ch).ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("invalid Pauli letter '{ch}'"),
            })?;
            s = s.with_letter(q, p);
        }
        Ok(s)
    }

    /// Builds a string that is identity except at the listed qubits.
    pub fn from_pairs(num_qubits: usize, pairs: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = PauliString::identity(num_qubits)?;
        for &(q, p) in pairs {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits,
                });
            }
            s = s.with_letter(q, p);
        }
        Ok(s)
    }

    fn with_letter(mut self, qubit: usize, p: Pauli) -> Self {
        let bit = 1u64 << qubit;
        self.x_mask &= !bit;
        self.z_mask &= !bit;
        match p {
            Pauli::I => {}
            Pauli::X => self.x_mask |= bit,
            Pauli::Y => {
                self.x_mask |= bit;
                self.z_mask |= bit;
            }
            Pauli::Z => self.z_mask |= bit,
        }
        self
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Letter on the given qubit.
    pub fn letter(&self, qubit: usize) -> Pauli {
        let bit = 1u64 << qubit;
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Letters as text, qubit 0 first.
    pub fn letters(&self) -> String {
        (0..self.num_qubits).map(|q| self.letter(q).as_char()).collect()
    }

    fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    /// Index-space masks for applying this string to a state of
    /// `state_qubits >= num_qubits` qubits; the string occupies the leading
    /// qubits `0..num_qubits`.
    fn index_masks(&self, state_qubits: usize) -> (usize, usize) {
        let mut flip = 0usize;
        let mut phase = 0usize;
        for q in 0..self.num_qubits {
            let bit = 1u64 << q;
            let pos = state_qubits - 1 - q;
            if self.x_mask & bit != 0 {
                flip |= 1 << pos;
            }
            if self.z_mask & bit != 0 {
                phase |= 1 << pos;
            }
        }
        (flip, phase)
    }

    /// Applies the string as a unitary to `state` (string on the leading
    /// qubits, identity elsewhere).
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.num_qubits() < self.num_qubits {
            return Err(Error::MixedStringLength(self.num_qubits, state.num_qubits()));
        }
        let (flip, phase) = self.index_masks(state.num_qubits());
        state.apply_pauli_masks(flip, phase, self.y_count())
    }

    /// Expectation `<psi| P (x) I |psi>` without materializing the matrix.
    fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.num_qubits() < self.num_qubits {
            return Err(Error::MixedStringLength(self.num_qubits, state.num_qubits()));
        }
        let (flip, phase) = self.index_masks(state.num_qubits());
        let global = phase_factor(self.y_count() % 4);
        let amps = state.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, a) in amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let sign = if (b & phase).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += amps[b ^ flip].conj() * a * sign * global;
        }
        Ok(acc.re)
    }
}

#[inline]
fn phase_factor(p: u32) -> Complex64 {
    match p {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Product of two strings on the same register: `a * b = phase * c`.
///
/// The returned phase is a power of `i`; it is `+-1` whenever the product is
/// Hermitian. The string part is the letterwise product with phases stripped.
pub fn multiply_strings(a: &PauliString, b: &PauliString) -> Result<(Complex64, PauliString)> {
    if a.num_qubits != b.num_qubits {
        return Err(Error::MixedStringLength(a.num_qubits, b.num_qubits));
    }
    let (phase_exp, x, z) = multiply_masks(a.x_mask, a.z_mask, b.x_mask, b.z_mask);
    Ok((
        phase_factor(phase_exp),
        PauliString {
            num_qubits: a.num_qubits,
            x_mask: x,
            z_mask: z,
        },
    ))
}

/// Mask-level product: writing each string as `i^y X^x Z^z`, reordering the
/// middle `Z^z1 X^x2` pair contributes `(-1)^{|z1 & x2|}`, and recanonicalizing
/// the Y letters of the result adjusts by `i^{y1 + y2 - y3}`.
#[inline]
fn multiply_masks(x1: u64, z1: u64, x2: u64, z2: u64) -> (u32, u64, u64) {
    let x3 = x1 ^ x2;
    let z3 = z1 ^ z2;
    let y1 = (x1 & z1).count_ones();
    let y2 = (x2 & z2).count_ones();
    let y3 = (x3 & z3).count_ones();
    let anti = (z1 & x2).count_ones();
    let phase = (y1 + y2 + 2 * anti + 4 - (y3 % 4)) % 4;
    (phase, x3, z3)
}

/// Real linear combination of Pauli strings on a common register.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    num_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    /// The zero operator on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits, MAX_QUBITS));
        }
        Ok(PauliSum {
            num_qubits,
            terms: Vec::new(),
        })
    }

    /// Builds a sum from `(coefficient, string)` pairs. Duplicate strings are
    /// merged by adding coefficients; widths must agree.
    pub fn from_terms(terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut iter = terms.into_iter();
        let first = match iter.next() {
            Some(t) => t,
            None => return Err(Error::EmptyHamiltonian),
        };
        let num_qubits = first.1.num_qubits;
        let mut sum = PauliSum {
            num_qubits,
            terms: Vec::new(),
        };
        sum.merge_term(first.0, first.1)?;
        for (coeff, string) in iter {
            sum.merge_term(coeff, string)?;
        }
        Ok(sum)
    }

    fn merge_term(&mut self, coeff: f64, string: PauliString) -> Result<()> {
        if string.num_qubits != self.num_qubits {
            return Err(Error::MixedStringLength(self.num_qubits, string.num_qubits));
        }
        if !coeff.is_finite() {
            return Err(Error::Numerical("non-finite coefficient".to_string()));
        }
        for (c, s) in self.terms.iter_mut() {
            if *s == string {
                *c += coeff;
                return Ok(());
            }
        }
        self.terms.push((coeff, string));
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// Text form that `parse_pauli_sum` reads back; terms joined by ` + `.
    pub fn pretty(&self) -> String {
        if self.terms.is_empty() {
            return format!("0 {}", PauliString { num_qubits: self.num_qubits, x_mask: 0, z_mask: 0 }.letters());
        }
        let rendered: Vec<String> = self
            .terms
            .iter()
            .map(|(c, s)| format!("{} {}", c, s.letters()))
            .collect();
        rendered.join(" + ")
    }

    /// Expectation `<psi| H (x) I |psi>` with the sum acting on the leading
    /// qubits of the (possibly wider) state.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let mut acc = 0.0;
        for (coeff, string) in &self.terms {
            acc += coeff * string.expectation(state)?;
        }
        Ok(acc)
    }

    /// `(H (x) I) |psi>` as an unnormalized amplitude vector.
    pub fn apply(&self, state: &StateVector) -> Result<Vec<Complex64>> {
        let dim = state.dim();
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); dim];
        for (coeff, string) in &self.terms {
            let applied = string.apply(state)?;
            for (o, a) in out.iter_mut().zip(applied.amplitudes()) {
                *o += a * *coeff;
            }
        }
        Ok(out)
    }

    /// Normalized spectral moment `Tr[H^k] / 2^N`, evaluated symbolically by
    /// repeated string products; exact up to floating point.
    pub fn moment_trace(&self, order: usize) -> Result<f64> {
        if order > MAX_MOMENT_ORDER {
            return Err(Error::MomentOrderTooLarge(order, MAX_MOMENT_ORDER));
        }
        if order == 0 {
            return Ok(1.0);
        }
        let mut current: BTreeMap<(u64, u64), Complex64> = BTreeMap::new();
        current.insert((0, 0), Complex64::new(1.0, 0.0));
        for _ in 0..order {
            let mut next: BTreeMap<(u64, u64), Complex64> = BTreeMap::new();
            for (&(x1, z1), &acc_coeff) in &current {
                for (coeff, string) in &self.terms {
                    let (p, x3, z3) = multiply_masks(x1, z1, string.x_mask, string.z_mask);
                    let contrib = acc_coeff * phase_factor(p) * *coeff;
                    *next.entry((x3, z3)).or_insert(Complex64::new(0.0, 0.0)) += contrib;
                }
            }
            current = next;
        }
        let ident = current
            .get(&(0, 0))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0));
        if libm::fabs(ident.im) > 1e-9 * (1.0 + libm::fabs(ident.re)) {
            return Err(Error::Numerical(format!(
                "moment trace picked up an imaginary part {:e}",
                ident.im
            )));
        }
        Ok(ident.re)
    }

    /// Dense matrix form, row/column indices in the same most-significant-
    /// qubit-first convention as `StateVector`.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        if self.num_qubits > MAX_DENSE_QUBITS {
            return Err(Error::TooManyQubits(self.num_qubits, MAX_DENSE_QUBITS));
        }
        let dim = 1usize << self.num_qubits;
        let mut m = DenseMatrix::zeros(dim);
        for (coeff, string) in &self.terms {
            let (flip, phase) = string.index_masks(self.num_qubits);
            let global = phase_factor(string.y_count() % 4) * *coeff;
            for col in 0..dim {
                let sign = if (col & phase).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m.add_assign_at(col ^ flip, col, global * sign);
            }
        }
        Ok(m)
    }
}

/// Nearest-neighbor exchange chain `-J sum_i (X_i X_{i+1} + Y_i Y_{i+1} +
/// Z_i Z_{i+1})` on `n_sites >= 2` sites with open boundaries.
pub fn heisenberg_chain(n_sites: usize, j: f64) -> Result<PauliSum> {
    if n_sites < 2 {
        return Err(Error::ChainTooShort(n_sites));
    }
    if n_sites > MAX_QUBITS {
        return Err(Error::TooManyQubits(n_sites, MAX_QUBITS));
    }
    let mut terms = Vec::with_capacity(3 * (n_sites - 1));
    for i in 0..n_sites - 1 {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push((-j, PauliString::from_pairs(n_sites, &[(i, p), (i + 1, p)])?));
        }
    }
    PauliSum::from_terms(terms)
}

/// Parses the text form described in the module docs.
///
/// `#` starts a comment; terms are `<coefficient> <letters>` separated by `+`
/// or newlines; all strings must have the same width; duplicates merge.
pub fn parse_pauli_sum(text: &str) -> Result<PauliSum> {
    let mut terms: Vec<(f64, PauliString)> = Vec::new();
    for (line_idx, raw_line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let mut tokens = line.split_whitespace().peekable();
        while tokens.peek().is_some() {
            let mut tok = tokens.next().expect("peeked");
            if tok == "+" {
                tok = match tokens.next() {
                    Some(t) => t,
                    None => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "dangling '+' separator".to_string(),
                        })
                    }
                };
            }
            let coeff: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("expected a coefficient, found '{tok}'"),
            })?;
            let letters = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("coefficient {coeff} has no Pauli letters"),
            })?;
            let string = PauliString::from_letters(letters).map_err(|e| match e {
                Error::Parse { message, .. } => Error::Parse {
                    line: line_no,
                    message,
                },
                other => other,
            })?;
            terms.push((coeff, string));
        }
    }
    if terms.is_empty() {
        return Err(Error::EmptyHamiltonian);
    }
    PauliSum::from_terms(terms)
}
