//! A small statevector simulator with classical control, and the superdense
//! coding and teleportation protocols built on it.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use rand::Rng;

use crate::capacity::ObservedChannel;
use crate::error::{QinfoError, Result};
use crate::linalg::{
    apply_local, c, cnot, hadamard, identity, max_abs, partial_trace, pauli_x, pauli_y, pauli_z, tensor_vec, unit,
    ComplexMatrix, ComplexVector, DensityOperator, PureState, SystemShape,
};
use crate::ops::QuantumOperation;
use crate::random::seeded;

/// Allowed norm drift per gate.
pub const NORM_TOL: f64 = 1e-12;
/// Branches below this probability are dropped when enumerating outcomes.
pub const BRANCH_TOL: f64 = 1e-14;
/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H,
    S,
    X,
    Y,
    Z,
    /// First target is the control.
    Cnot,
    Cz,
    /// exp(−iθY/2)
    Ry(f64),
    Custom(ComplexMatrix),
}

impl Gate {
    /// A custom gate, checked for unitarity on a power-of-two dimension.
    pub fn custom(u: ComplexMatrix) -> Result<Self> {
        let d = u.nrows();
        if !u.is_square() || !d.is_power_of_two() || d < 2 {
            return Err(QinfoError::DimensionMismatch(format!("gate of size {}x{}", u.nrows(), u.ncols())));
        }
        if max_abs(&(u.adjoint() * &u - identity(d))) > NORM_TOL {
            return Err(QinfoError::InvalidParameter("gate is not unitary".into()));
        }
        Ok(Self::Custom(u))
    }

    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            Self::H => hadamard(),
            Self::S => crate::linalg::diag(&[1.0, 0.0]) + unit(2, 1, 1) * c(0.0, 1.0),
            Self::X => pauli_x(),
            Self::Y => pauli_y(),
            Self::Z => pauli_z(),
            Self::Cnot => cnot(),
            Self::Cz => crate::linalg::diag(&[1.0, 1.0, 1.0, -1.0]),
            Self::Ry(theta) => {
                let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                crate::linalg::real_matrix(2, 2, &[co, -si, si, co])
            }
            Self::Custom(u) => u.clone(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Self::Cnot | Self::Cz => 2,
            Self::Custom(u) => u.nrows().trailing_zeros() as usize,
            _ => 1,
        }
    }
}

fn named_gates_checked() -> bool {
    static CHECKED: OnceLock<bool> = OnceLock::new();
    *CHECKED.get_or_init(|| {
        [Gate::H, Gate::S, Gate::X, Gate::Y, Gate::Z, Gate::Cnot, Gate::Cz, Gate::Ry(0.7)].iter().all(|g| {
            let u = g.matrix();
            max_abs(&(u.adjoint() * &u - identity(u.nrows()))) <= NORM_TOL
        })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Gate { gate: Gate, targets: Vec<usize>, condition: Option<usize> },
    Measure { qubit: usize, bit: usize },
}

/// Ordered gates and computational-basis measurements on a qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    qubit_count: usize,
    bit_count: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(qubit_count: usize) -> Result<Self> {
        assert!(named_gates_checked(), "named gate table is not unitary");
        if qubit_count == 0 || qubit_count > MAX_QUBITS {
            return Err(QinfoError::InvalidParameter(format!("{qubit_count} qubits outside 1..={MAX_QUBITS}")));
        }
        Ok(Self { qubit_count, bit_count: 0, instructions: vec![] })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn bit_count(&self) -> usize {
        self.bit_count
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    fn check_targets(&self, gate: &Gate, targets: &[usize]) -> Result<()> {
        let mut seen = targets.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if targets.len() != gate.arity() || seen.len() != targets.len() {
            return Err(QinfoError::InvalidSubsystem(format!("{gate:?} on {targets:?}")));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= self.qubit_count) {
            return Err(QinfoError::InvalidSubsystem(format!("qubit {t} of {}", self.qubit_count)));
        }
        Ok(())
    }

    pub fn gate(mut self, gate: Gate, targets: &[usize]) -> Result<Self> {
        self.check_targets(&gate, targets)?;
        self.instructions.push(Instruction::Gate { gate, targets: targets.to_vec(), condition: None });
        Ok(self)
    }

    /// A gate applied only when classical bit `bit` reads 1.
    pub fn gate_if(mut self, gate: Gate, targets: &[usize], bit: usize) -> Result<Self> {
        self.check_targets(&gate, targets)?;
        if bit >= self.bit_count {
            return Err(QinfoError::InvalidSubsystem(format!("classical bit {bit} not yet measured")));
        }
        self.instructions.push(Instruction::Gate { gate, targets: targets.to_vec(), condition: Some(bit) });
        Ok(self)
    }

    /// Measure a qubit into the next classical bit.
    pub fn measure(mut self, qubit: usize) -> Result<Self> {
        if qubit >= self.qubit_count {
            return Err(QinfoError::InvalidSubsystem(format!("qubit {qubit} of {}", self.qubit_count)));
        }
        self.instructions.push(Instruction::Measure { qubit, bit: self.bit_count });
        self.bit_count += 1;
        Ok(self)
    }
}

/// One measurement record and the state it leaves behind.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub state: PureState,
    pub bits: Vec<bool>,
    /// Probability of this record given the input.
    pub probability: f64,
}

fn apply_gate(v: &ComplexVector, gate: &Gate, targets: &[usize], dims: &[usize]) -> Result<ComplexVector> {
    let m = ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let out = apply_local(&gate.matrix(), targets, dims, &m)?;
    let out = ComplexVector::from_column_slice(out.as_slice());
    if (out.norm() - v.norm()).abs() > NORM_TOL * v.norm().max(1.0) {
        return Err(QinfoError::Nonphysical(format!("{gate:?} changed the norm")));
    }
    Ok(out)
}

/// Unnormalized projection of `v` onto qubit `q` reading `one`.
fn project(v: &ComplexVector, q: usize, n: usize, one: bool) -> ComplexVector {
    let shift = n - 1 - q;
    ComplexVector::from_fn(v.len(), |i, _| if ((i >> shift) & 1 == 1) == one { v[i] } else { c(0.0, 0.0) })
}

fn check_input(circuit: &Circuit, input: &PureState) -> Result<()> {
    if input.amplitudes().len() != 1 << circuit.qubit_count {
        return Err(QinfoError::DimensionMismatch(format!(
            "input of dimension {} for {} qubits",
            input.amplitudes().len(),
            circuit.qubit_count
        )));
    }
    Ok(())
}

fn finish(circuit: &Circuit, v: ComplexVector, bits: Vec<bool>, probability: f64) -> Result<Run> {
    let n = v.norm();
    let state = PureState::new(v / c(n, 0.0), SystemShape::qubits(circuit.qubit_count))?;
    Ok(Run { state, bits, probability })
}

/// Run the circuit once, sampling measurement outcomes from `seed`.
pub fn simulate(circuit: &Circuit, input: &PureState, seed: u64) -> Result<Run> {
    check_input(circuit, input)?;
    let n = circuit.qubit_count;
    let dims = vec![2; n];
    let mut rng = seeded(seed);
    let mut v = input.amplitudes().clone();
    let mut bits = vec![false; circuit.bit_count];
    let mut probability = 1.0;
    for ins in &circuit.instructions {
        match ins {
            Instruction::Gate { gate, targets, condition } => {
                if condition.is_none_or(|b| bits[b]) {
                    v = apply_gate(&v, gate, targets, &dims)?;
                }
            }
            Instruction::Measure { qubit, bit } => {
                let one = project(&v, *qubit, n, true);
                let p1 = one.norm_squared();
                let outcome = rng.random::<f64>() < p1;
                let kept = if outcome { one } else { project(&v, *qubit, n, false) };
                let p = kept.norm_squared();
                probability *= if outcome { p1 } else { 1.0 - p1 };
                bits[*bit] = outcome;
                v = kept / c(p.sqrt(), 0.0);
            }
        }
    }
    finish(circuit, v, bits, probability)
}

/// Every measurement record with probability above `BRANCH_TOL`, with exact probabilities.
pub fn branches(circuit: &Circuit, input: &PureState) -> Result<Vec<Run>> {
    check_input(circuit, input)?;
    let n = circuit.qubit_count;
    let dims = vec![2; n];
    // unnormalized amplitudes carry the branch probability as their squared norm
    let mut live = vec![(input.amplitudes().clone(), vec![false; circuit.bit_count])];
    for ins in &circuit.instructions {
        match ins {
            Instruction::Gate { gate, targets, condition } => {
                for (v, bits) in live.iter_mut() {
                    if condition.is_none_or(|b| bits[b]) {
                        *v = apply_gate(v, gate, targets, &dims)?;
                    }
                }
            }
            Instruction::Measure { qubit, bit } => {
                let mut next = vec![];
                for (v, bits) in live {
                    for one in [false, true] {
                        let w = project(&v, *qubit, n, one);
                        if w.norm_squared() > BRANCH_TOL {
                            let mut b = bits.clone();
                            b[*bit] = one;
                            next.push((w, b));
                        }
                    }
                }
                live = next;
            }
        }
    }
    live.into_iter()
        .map(|(v, bits)| {
            let p = v.norm_squared();
            finish(circuit, v, bits, p)
        })
        .collect()
}

/// |⟨a|b⟩|², which ignores global phase.
pub fn overlap(a: &ComplexVector, b: &ComplexVector) -> f64 {
    a.dotc(b).norm_sqr()
}

fn bell_prep(circuit: Circuit, control: usize, data: usize) -> Result<Circuit> {
    circuit.gate(Gate::Ry(FRAC_PI_2), &[control])?.gate(Gate::Cnot, &[control, data])
}

/// Parse a two-character message such as "10".
pub fn parse_bits(s: &str) -> Result<[bool; 2]> {
    let b: Vec<bool> = s
        .chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(QinfoError::InvalidParameter(format!("bad bit {ch:?} in {s:?}"))),
        })
        .collect::<Result<_>>()?;
    match b[..] {
        [a, b] => Ok([a, b]),
        _ => Err(QinfoError::InvalidParameter(format!("expected two bits, got {s:?}"))),
    }
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Alice's encoding: nothing, X, Z or ZX = iY on her half of (|00⟩ + |11⟩)/√2.
fn superdense_encoding(circuit: Circuit, bits: [bool; 2]) -> Result<Circuit> {
    let mut circuit = circuit;
    if bits[1] {
        circuit = circuit.gate(Gate::X, &[0])?;
    }
    if bits[0] {
        circuit = circuit.gate(Gate::Z, &[0])?;
    }
    Ok(circuit)
}

/// The shared pair after Alice encodes `bits`; qubit 0 is Alice's.
pub fn superdense_state(bits: [bool; 2]) -> Result<PureState> {
    let circuit = superdense_encoding(bell_prep(Circuit::new(2)?, 0, 1)?, bits)?;
    let run = simulate(&circuit, &PureState::basis(SystemShape::qubits(2), 0), 0)?;
    Ok(run.state)
}

/// Full protocol circuit: share, encode, then Bob's Bell measurement.
pub fn superdense_circuit(bits: [bool; 2]) -> Result<Circuit> {
    let circuit = superdense_encoding(bell_prep(Circuit::new(2)?, 0, 1)?, bits)?;
    circuit.gate(Gate::Cnot, &[0, 1])?.gate(Gate::Ry(-FRAC_PI_2), &[0])?.measure(0)?.measure(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuperdenseRun {
    pub sent: [bool; 2],
    pub decoded: [bool; 2],
    pub probability: f64,
}

pub fn superdense(bits: [bool; 2], seed: u64) -> Result<SuperdenseRun> {
    let run = simulate(&superdense_circuit(bits)?, &PureState::basis(SystemShape::qubits(2), 0), seed)?;
    Ok(SuperdenseRun { sent: bits, decoded: [run.bits[0], run.bits[1]], probability: run.probability })
}

/// What an eavesdropper holding Alice's qubit in transit sees.
pub fn intercept_state(bits: [bool; 2]) -> Result<DensityOperator> {
    partial_trace(&superdense_state(bits)?.density(), &[0])
}

/// Teleportation on data (0), ancilla (1) and target (2).
///
/// With `coherent` the classically controlled X and Z become CNOT and CZ
/// from the unmeasured data and ancilla qubits.
pub fn teleport_circuit(coherent: bool) -> Result<Circuit> {
    let circuit = bell_prep(Circuit::new(3)?, 2, 1)?.gate(Gate::Cnot, &[0, 1])?.gate(Gate::Ry(-FRAC_PI_2), &[0])?;
    if coherent {
        circuit.gate(Gate::Cnot, &[1, 2])?.gate(Gate::Cz, &[0, 2])
    } else {
        circuit.measure(0)?.measure(1)?.gate_if(Gate::X, &[2], 1)?.gate_if(Gate::Z, &[2], 0)
    }
}

/// The circuit up to the measurement, with no corrections.
fn teleport_unitary_part() -> Result<Circuit> {
    bell_prep(Circuit::new(3)?, 2, 1)?.gate(Gate::Cnot, &[0, 1])?.gate(Gate::Ry(-FRAC_PI_2), &[0])
}

fn teleport_input(psi: &PureState) -> Result<PureState> {
    if psi.amplitudes().len() != 2 {
        return Err(QinfoError::DimensionMismatch("teleportation input must be one qubit".into()));
    }
    PureState::new(tensor_vec(psi.amplitudes(), &crate::linalg::ket(4, 0)), SystemShape::qubits(3))
}

/// Target qubit amplitudes once data and ancilla read `bits`.
fn target_state(state: &PureState, bits: [bool; 2]) -> Result<PureState> {
    let base = (usize::from(bits[0]) << 2) | (usize::from(bits[1]) << 1);
    let a = state.amplitudes();
    PureState::from_unnormalized(ComplexVector::from_vec(vec![a[base], a[base + 1]]), SystemShape::qubits(1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Teleport {
    pub bob_state: PureState,
    pub bits: [bool; 2],
    pub probability: f64,
}

impl Teleport {
    pub fn fidelity(&self, psi: &PureState) -> f64 {
        overlap(psi.amplitudes(), self.bob_state.amplitudes())
    }
}

fn teleport_from_run(run: &Run) -> Result<Teleport> {
    let bits = [run.bits[0], run.bits[1]];
    Ok(Teleport { bob_state: target_state(&run.state, bits)?, bits, probability: run.probability })
}

pub fn teleport(psi: &PureState, seed: u64) -> Result<Teleport> {
    let run = simulate(&teleport_circuit(false)?, &teleport_input(psi)?, seed)?;
    teleport_from_run(&run)
}

/// All four measurement branches with exact probabilities.
pub fn teleport_branches(psi: &PureState) -> Result<Vec<Teleport>> {
    branches(&teleport_circuit(false)?, &teleport_input(psi)?)?.iter().map(teleport_from_run).collect()
}

/// Bob's uncorrected state for each record, in the order 00, 01, 10, 11.
pub fn teleport_outcome_table(psi: &PureState) -> Result<Vec<([bool; 2], f64, PureState)>> {
    let run = simulate(&teleport_unitary_part()?, &teleport_input(psi)?, 0)?;
    let mut out = vec![];
    for bits in [[false, false], [false, true], [true, false], [true, true]] {
        let base = (usize::from(bits[0]) << 2) | (usize::from(bits[1]) << 1);
        let a = run.state.amplitudes();
        let p = a[base].norm_sqr() + a[base + 1].norm_sqr();
        out.push((bits, p, target_state(&run.state, bits)?));
    }
    Ok(out)
}

/// Target-qubit state when the measurement is replaced by coherent control.
pub fn coherent_teleport(psi: &PureState) -> Result<DensityOperator> {
    let run = simulate(&teleport_circuit(true)?, &teleport_input(psi)?, 0)?;
    partial_trace(&run.state.density(), &[2])
}

/// Teleportation with the classical message withheld from Bob, as observed branches.
///
/// Branch m has Kraus operator (⟨m| ⊗ I)V, where V is the isometry taking the
/// data qubit through the circuit up to the measurement.
pub fn teleport_as_operations() -> Result<ObservedChannel> {
    let circuit = teleport_unitary_part()?;
    let cols: Vec<ComplexVector> = (0..2)
        .map(|i| {
            let input = PureState::basis(SystemShape::qubits(1), i);
            simulate(&circuit, &teleport_input(&input)?, 0).map(|r| r.state.amplitudes().clone())
        })
        .collect::<Result<_>>()?;
    let mut ops = vec![];
    for m in 0..4 {
        let k = ComplexMatrix::from_fn(2, 2, |r, col| cols[col][2 * m + r]);
        ops.push(QuantumOperation::new(vec![k], SystemShape::qubits(1), SystemShape::qubits(1))?);
    }
    ObservedChannel::new(ops)
}
