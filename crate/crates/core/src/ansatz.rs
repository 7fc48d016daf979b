//! Parameterized circuits and their tangent states.
//!
//! A circuit is a gate list over `H`, `CNOT`, `Ry`, and `CRy`. Each rotation
//! owns one slot in the parameter vector, and every slot is owned by exactly
//! one gate. All four gates are real in the computational basis, so circuits
//! built here keep real amplitudes real. A circuit also carries `theta0`,
//! the angles at which downstream evolution starts.
//!
//! The default circuit doubles a register of `n_pairs` sites into system
//! copies A (qubits `0..n`) and B (qubits `n..2n`) in three stages:
//!
//! 1. a weight block on A: `layers` repetitions of an Ry row plus a
//!    nearest-neighbor CRy ladder, carrying the spectral weights;
//! 2. pairwise CNOTs copying A onto B;
//! 3. matching alignment cascades (CRy at a quarter turn, then CNOT) applied
//!    identically to A and to B, rotating both halves into the same local
//!    pair basis.
//!
//! At `theta0` the alignment cascades are a fixed real rotation applied to
//! both halves of a computational-basis pair state, which leaves it exactly
//! maximally entangled for every width. The payoff is dynamical: tangents of
//! the weight block reach the circuit state through the copy CNOTs and both
//! cascades, so they move the Schmidt weights in the aligned basis without
//! twisting one register against the other. Normalized imaginary-time flow
//! is exactly such a weight motion, which is what lets the projected
//! evolution track it to high fidelity.
//!
//! Tangent states come from the generator picture: `d/dt exp(-i t P / 2)` at
//! the gate inserts `-i P / 2`, with the controlled rotation splitting into
//! two Pauli insertions through `|1><1| = (I - Z) / 2`.
//!
//! Text form, used by files and the CLI: one gate per line, `#` comments,
//! optional leading `qubits <n>` directive (otherwise the width is inferred
//! from the highest qubit index used). Rotations take an optional trailing
//! initial angle in radians, default 0:
//!
//! ```text
//! qubits 2
//! ry 0 0 1.5707963267948966
//! cry 0 1 1
//! cnot 0 1
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::FRAC_PI_2;
use num_complex::Complex64;

use crate::error::Error;
use crate::hamiltonian::{Pauli, PauliString};
use crate::statevector::{StateVector, MAX_QUBITS};
use crate::Result;

/// One circuit element. `slot` indexes the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H { qubit: usize },
    Cnot { control: usize, target: usize },
    Ry { qubit: usize, slot: usize },
    Cry { control: usize, target: usize, slot: usize },
}

impl Gate {
    /// Parameter slot, if the gate is a rotation.
    pub fn slot(&self) -> Option<usize> {
        match self {
            Gate::Ry { slot, .. } | Gate::Cry { slot, .. } => Some(*slot),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Gate::H { .. } => "h",
            Gate::Cnot { .. } => "cnot",
            Gate::Ry { .. } => "ry",
            Gate::Cry { .. } => "cry",
        }
    }
}

/// One Pauli insertion of a gate derivative: the tangent contribution is
/// `f * U_after * u * U_upto |0>`.
#[derive(Debug, Clone)]
pub struct DerivativeTerm {
    pub f: Complex64,
    pub u: PauliString,
}

/// Validated gate list with a fixed register width, parameter count, and
/// initial angles.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzCircuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    num_params: usize,
    theta0: Vec<f64>,
}

impl AnsatzCircuit {
    /// Validates widths and the slot bijection: with `k` rotations present,
    /// the slots must be exactly `0..k`, each used once. Initial angles
    /// default to zero; see [`AnsatzCircuit::with_theta0`].
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits, MAX_QUBITS));
        }
        let check = |q: usize| -> Result<()> {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits,
                });
            }
            Ok(())
        };
        let num_params = gates.iter().filter(|g| g.slot().is_some()).count();
        let mut seen = vec![false; num_params];
        for gate in &gates {
            match *gate {
                Gate::H { qubit } => check(qubit)?,
                Gate::Ry { qubit, .. } => check(qubit)?,
                Gate::Cnot { control, target } | Gate::Cry { control, target, .. } => {
                    check(control)?;
                    check(target)?;
                    if control == target {
                        return Err(Error::DuplicateQubit(control));
                    }
                }
            }
            if let Some(slot) = gate.slot() {
                if slot >= num_params {
                    return Err(Error::BadParamSlots {
                        expected: num_params,
                        slot,
                        problem: "slot index out of range",
                    });
                }
                if seen[slot] {
                    return Err(Error::BadParamSlots {
                        expected: num_params,
                        slot,
                        problem: "slot used by two gates",
                    });
                }
                seen[slot] = true;
            }
        }
        Ok(AnsatzCircuit {
            num_qubits,
            gates,
            num_params,
            theta0: vec![0.0; num_params],
        })
    }

    /// Replaces the initial angles.
    pub fn with_theta0(mut self, theta0: Vec<f64>) -> Result<Self> {
        if theta0.len() != self.num_params {
            return Err(Error::ThetaLengthMismatch(theta0.len(), self.num_params));
        }
        self.theta0 = theta0;
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params {
            return Err(Error::ThetaLengthMismatch(theta.len(), self.num_params));
        }
        Ok(())
    }

    fn apply_gate(&self, state: &StateVector, gate: &Gate, theta: &[f64]) -> Result<StateVector> {
        match *gate {
            Gate::H { qubit } => state.apply_h(qubit),
            Gate::Cnot { control, target } => state.apply_cnot(control, target),
            Gate::Ry { qubit, slot } => state.apply_ry(qubit, theta[slot]),
            Gate::Cry { control, target, slot } => state.apply_cry(control, target, theta[slot]),
        }
    }

    /// Runs the circuit on `|0...0>`.
    pub fn prepare_state(&self, theta: &[f64]) -> Result<StateVector> {
        self.check_theta(theta)?;
        let mut state = StateVector::zero(self.num_qubits)?;
        for gate in &self.gates {
            state = self.apply_gate(&state, gate, theta)?;
        }
        Ok(state)
    }

    /// Applies the inverse circuit to `state`: gates reversed, angles negated.
    /// `V_inverse(theta) V(theta) |0> = |0>` underlies sampled overlaps.
    pub fn apply_inverse(&self, state: &StateVector, theta: &[f64]) -> Result<StateVector> {
        self.check_theta(theta)?;
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch(format!(
                "state has {} qubits, circuit has {}",
                state.num_qubits(),
                self.num_qubits
            )));
        }
        let negated: Vec<f64> = theta.iter().map(|t| -t).collect();
        let mut out = state.clone();
        for gate in self.gates.iter().rev() {
            out = self.apply_gate(&out, gate, &negated)?;
        }
        Ok(out)
    }

    /// Pauli insertions for a rotation gate's derivative.
    ///
    /// `Ry(t) = exp(-i t Y / 2)` contributes `(-i/2) Y` on its qubit.
    /// `CRy(t) = exp(-i t (I - Z_c) Y_t / 4)` splits into `(-i/4) Y_t` and
    /// `(+i/4) Z_c Y_t`. Both insertions commute with their own gate.
    pub fn gate_derivative_decomposition(&self, gate: &Gate) -> Result<Vec<DerivativeTerm>> {
        match *gate {
            Gate::Ry { qubit, .. } => Ok(vec![DerivativeTerm {
                f: Complex64::new(0.0, -0.5),
                u: PauliString::from_pairs(self.num_qubits, &[(qubit, Pauli::Y)])?,
            }]),
            Gate::Cry { control, target, .. } => Ok(vec![
                DerivativeTerm {
                    f: Complex64::new(0.0, -0.25),
                    u: PauliString::from_pairs(self.num_qubits, &[(target, Pauli::Y)])?,
                },
                DerivativeTerm {
                    f: Complex64::new(0.0, 0.25),
                    u: PauliString::from_pairs(
                        self.num_qubits,
                        &[(control, Pauli::Z), (target, Pauli::Y)],
                    )?,
                },
            ]),
            other => Err(Error::GateNotParameterized(other.name().to_string())),
        }
    }

    /// Exact tangent `d|phi(theta)> / d theta_p` as raw amplitudes
    /// (unnormalized; its norm is at most 1/2 for these gates).
    ///
    /// Replays the prefix up to the slot's gate, applies each Pauli insertion
    /// as a branch, then pushes every branch through the remaining gates.
    pub fn derivative_state(&self, theta: &[f64], p: usize) -> Result<Vec<Complex64>> {
        self.check_theta(theta)?;
        if p >= self.num_params {
            return Err(Error::ParamOutOfRange(p, self.num_params));
        }
        let owner = self
            .gates
            .iter()
            .position(|g| g.slot() == Some(p))
            .expect("validated slot bijection");
        let mut prefix = StateVector::zero(self.num_qubits)?;
        for gate in &self.gates[..owner] {
            prefix = self.apply_gate(&prefix, gate, theta)?;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); prefix.dim()];
        for term in self.gate_derivative_decomposition(&self.gates[owner])? {
            let mut branch = term.u.apply(&prefix)?;
            for gate in &self.gates[owner..] {
                branch = self.apply_gate(&branch, gate, theta)?;
            }
            for (o, a) in out.iter_mut().zip(branch.amplitudes()) {
                *o += a * term.f;
            }
        }
        Ok(out)
    }

    /// Text form that `parse_circuit` reads back, initial angles included.
    pub fn render(&self) -> String {
        let mut lines = Vec::with_capacity(self.gates.len() + 1);
        lines.push(format!("qubits {}", self.num_qubits));
        for gate in &self.gates {
            lines.push(match *gate {
                Gate::H { qubit } => format!("h {qubit}"),
                Gate::Cnot { control, target } => format!("cnot {control} {target}"),
                Gate::Ry { qubit, slot } => {
                    format!("ry {qubit} {slot} {}", self.theta0[slot])
                }
                Gate::Cry { control, target, slot } => {
                    format!("cry {control} {target} {slot} {}", self.theta0[slot])
                }
            });
        }
        lines.join("\n")
    }
}

/// Builds the default doubled-register circuit described in the module docs.
///
/// Parameter count is `layers * (2 * n_pairs - 1) + 2 * (n_pairs - 1)`. The
/// initial angles put the first Ry row and the alignment rotations at a
/// quarter turn and everything else at zero, which prepares the uniformly
/// correlated pair state exactly.
pub fn build_default_ansatz(n_pairs: usize, layers: usize) -> Result<AnsatzCircuit> {
    if n_pairs == 0 {
        return Err(Error::NonPositive("n_pairs", 0.0));
    }
    if layers == 0 {
        return Err(Error::NonPositive("layers", 0.0));
    }
    let nq = 2 * n_pairs;
    if nq > MAX_QUBITS {
        return Err(Error::TooManyQubits(nq, MAX_QUBITS));
    }
    let mut gates = Vec::new();
    let mut theta0 = Vec::new();
    let mut slot = 0;
    for layer in 0..layers {
        for q in 0..n_pairs {
            gates.push(Gate::Ry { qubit: q, slot });
            theta0.push(if layer == 0 { FRAC_PI_2 } else { 0.0 });
            slot += 1;
        }
        for q in 0..n_pairs.saturating_sub(1) {
            gates.push(Gate::Cry { control: q, target: q + 1, slot });
            theta0.push(0.0);
            slot += 1;
        }
    }
    for k in 0..n_pairs {
        gates.push(Gate::Cnot {
            control: k,
            target: n_pairs + k,
        });
    }
    for base in [0, n_pairs] {
        for k in (1..n_pairs).rev() {
            gates.push(Gate::Cry {
                control: base + k,
                target: base + k - 1,
                slot,
            });
            theta0.push(FRAC_PI_2);
            slot += 1;
            gates.push(Gate::Cnot {
                control: base + k - 1,
                target: base + k,
            });
        }
    }
    AnsatzCircuit::new(nq, gates)?.with_theta0(theta0)
}

/// Parses the text form described in the module docs.
pub fn parse_circuit(text: &str) -> Result<AnsatzCircuit> {
    let mut declared_qubits: Option<usize> = None;
    let mut max_qubit: Option<usize> = None;
    let mut gates: Vec<Gate> = Vec::new();
    let mut angles: Vec<(usize, f64)> = Vec::new();
    for (line_idx, raw_line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let parse_index = |tok: &str| -> Result<usize> {
            tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("expected a qubit or slot index, found '{tok}'"),
            })
        };
        let parse_angle = |tok: &str| -> Result<f64> {
            tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("expected an angle in radians, found '{tok}'"),
            })
        };
        let arity = |min: usize, max: usize| -> Result<()> {
            let got = tokens.len() - 1;
            if got < min || got > max {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "'{}' takes {min} to {max} arguments, found {got}",
                        tokens[0].to_ascii_lowercase()
                    ),
                });
            }
            Ok(())
        };
        let keyword = tokens[0].to_ascii_lowercase();
        let gate = match keyword.as_str() {
            "qubits" => {
                arity(1, 1)?;
                if declared_qubits.is_some() || !gates.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "'qubits' must appear once, before any gate".to_string(),
                    });
                }
                declared_qubits = Some(parse_index(tokens[1])?);
                continue;
            }
            "h" => {
                arity(1, 1)?;
                Gate::H {
                    qubit: parse_index(tokens[1])?,
                }
            }
            "cnot" => {
                arity(2, 2)?;
                Gate::Cnot {
                    control: parse_index(tokens[1])?,
                    target: parse_index(tokens[2])?,
                }
            }
            "ry" => {
                arity(2, 3)?;
                let slot = parse_index(tokens[2])?;
                if let Some(tok) = tokens.get(3) {
                    angles.push((slot, parse_angle(tok)?));
                }
                Gate::Ry {
                    qubit: parse_index(tokens[1])?,
                    slot,
                }
            }
            "cry" => {
                arity(3, 4)?;
                let slot = parse_index(tokens[3])?;
                if let Some(tok) = tokens.get(4) {
                    angles.push((slot, parse_angle(tok)?));
                }
                Gate::Cry {
                    control: parse_index(tokens[1])?,
                    target: parse_index(tokens[2])?,
                    slot,
                }
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown gate '{}'", tokens[0]),
                })
            }
        };
        let top = match gate {
            Gate::H { qubit } | Gate::Ry { qubit, .. } => qubit,
            Gate::Cnot { control, target } | Gate::Cry { control, target, .. } => {
                control.max(target)
            }
        };
        max_qubit = Some(max_qubit.map_or(top, |m: usize| m.max(top)));
        gates.push(gate);
    }
    if gates.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "circuit has no gates".to_string(),
        });
    }
    let num_qubits = match declared_qubits {
        Some(n) => n,
        None => max_qubit.expect("gates nonempty") + 1,
    };
    let circuit = AnsatzCircuit::new(num_qubits, gates)?;
    let mut theta0 = vec![0.0; circuit.num_params()];
    for (slot, angle) in angles {
        theta0[slot] = angle;
    }
    circuit.with_theta0(theta0)
}
