//! Process tomography: χ matrix and Kraus operators from probe input/output data.

use crate::error::{QinfoError, Result};
use crate::linalg::{
    c, eigh, hermitize, identity, ket, max_abs, pauli_x, pauli_y, pauli_z, projector, tensor_all, unit,
    zeros, ComplexMatrix, ComplexVector, SystemShape, EIG_TOL, C64,
};
use crate::ops::{classify, Completeness, QuantumOperation, MIN_PROBABILITY};

/// Pseudoinverse singular-value cutoff.
pub const PINV_CUTOFF: f64 = 1e-10;
/// χ eigenvalues in [−CHI_NEG_TOL, 0) are clipped; below that the data is unphysical.
pub const CHI_NEG_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct TomographyBasis {
    pub fixed_ops: Vec<ComplexMatrix>,
    pub probe_states: Vec<ComplexMatrix>,
    pub shape: SystemShape,
}

/// {I, X, −iY, Z}
pub fn pauli_fixed_ops() -> [ComplexMatrix; 4] {
    [identity(2), pauli_x(), pauli_y() * c(0.0, -1.0), pauli_z()]
}

impl TomographyBasis {
    /// Tensor powers of {I, X, −iY, Z} with matrix-unit probes |n⟩⟨m| at index n·d + m.
    pub fn pauli(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(QinfoError::InvalidParameter("need at least one qubit".into()));
        }
        let one = pauli_fixed_ops();
        let d = 1usize << n_qubits;
        let fixed_ops = (0..d * d)
            .map(|idx| {
                let factors: Vec<ComplexMatrix> = (0..n_qubits)
                    .map(|q| one[(idx >> (2 * (n_qubits - 1 - q))) & 3].clone())
                    .collect();
                tensor_all(&factors)
            })
            .collect();
        Ok(Self { fixed_ops, probe_states: matrix_units(d), shape: SystemShape::qubits(n_qubits) })
    }

    pub fn new(fixed_ops: Vec<ComplexMatrix>, probe_states: Vec<ComplexMatrix>, shape: SystemShape) -> Result<Self> {
        let d = shape.total();
        let ok = |ms: &[ComplexMatrix]| ms.len() == d * d && ms.iter().all(|m| m.nrows() == d && m.ncols() == d);
        if !ok(&fixed_ops) || !ok(&probe_states) {
            return Err(QinfoError::DimensionMismatch(format!("basis needs {} operators of size {d}x{d}", d * d)));
        }
        Ok(Self { fixed_ops, probe_states, shape })
    }

    pub fn dim(&self) -> usize {
        self.shape.total()
    }
}

pub fn matrix_units(d: usize) -> Vec<ComplexMatrix> {
    (0..d * d).map(|j| unit(d, j / d, j % d)).collect()
}

fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_iterator(m.len(), m.transpose().iter().copied())
}

fn vec_max_abs(v: &ComplexVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn columns(ms: &[ComplexMatrix]) -> ComplexMatrix {
    let n = ms[0].len();
    let mut out = zeros(n, ms.len());
    for (k, m) in ms.iter().enumerate() {
        out.set_column(k, &vectorize(m));
    }
    out
}

/// Coordinates of matrices in the probe basis.
struct ProbeCoordinates {
    inverse: ComplexMatrix,
}

impl ProbeCoordinates {
    fn new(probes: &[ComplexMatrix]) -> Result<Self> {
        let p = columns(probes);
        let sv = p.clone().singular_values();
        let (hi, lo) = (sv.max(), sv.min());
        if !(lo > PINV_CUTOFF * hi.max(1.0)) {
            return Err(QinfoError::SingularBasis);
        }
        Ok(Self { inverse: p.try_inverse().ok_or(QinfoError::SingularBasis)? })
    }

    fn of(&self, m: &ComplexMatrix) -> ComplexVector {
        &self.inverse * vectorize(m)
    }
}

/// β with row j·D + k and column m·D + n, where Ẽ_m ρ_j Ẽ_n† = Σ_k β^{mn}_{jk} ρ_k.
pub fn beta_matrix(basis: &TomographyBasis) -> Result<ComplexMatrix> {
    let coords = ProbeCoordinates::new(&basis.probe_states)?;
    let dd = basis.fixed_ops.len();
    let mut beta = zeros(dd * dd, dd * dd);
    for (j, rho) in basis.probe_states.iter().enumerate() {
        for (m, em) in basis.fixed_ops.iter().enumerate() {
            let left = em * rho;
            for (n, en) in basis.fixed_ops.iter().enumerate() {
                let col = coords.of(&(&left * en.adjoint()));
                for k in 0..dd {
                    beta[(j * dd + k, m * dd + n)] = col[k];
                }
            }
        }
    }
    Ok(beta)
}

/// λ with ℰ(ρ_j) = Σ_k λ_jk ρ_k, flattened as j·D + k.
pub fn lambda_vector(basis: &TomographyBasis, outputs: &[ComplexMatrix]) -> Result<ComplexVector> {
    let dd = basis.probe_states.len();
    if outputs.len() != dd {
        return Err(QinfoError::DimensionMismatch(format!("{} outputs for {dd} probes", outputs.len())));
    }
    let d = basis.dim();
    if let Some(o) = outputs.iter().find(|o| o.nrows() != d || o.ncols() != d) {
        return Err(QinfoError::DimensionMismatch(format!("output is {}x{}, expected {d}x{d}", o.nrows(), o.ncols())));
    }
    let coords = ProbeCoordinates::new(&basis.probe_states)?;
    let mut lambda = ComplexVector::zeros(dd * dd);
    for (j, out) in outputs.iter().enumerate() {
        lambda.rows_mut(j * dd, dd).copy_from(&coords.of(out));
    }
    Ok(lambda)
}

#[derive(Clone, Debug)]
pub struct ChiResult {
    pub chi: ComplexMatrix,
    /// None when χ has an eigenvalue below −CHI_NEG_TOL.
    pub kraus: Option<QuantumOperation>,
    /// max |βχ − λ|
    pub residual: f64,
    /// Outcome probability of each prepared input (incomplete mode only).
    pub probabilities: Vec<f64>,
}

/// β and its pseudoinverse κ for a fixed basis, reusable across data sets.
#[derive(Clone, Debug)]
pub struct TomographySolver {
    pub basis: TomographyBasis,
    beta: ComplexMatrix,
    kappa: ComplexMatrix,
}

impl TomographySolver {
    pub fn new(basis: TomographyBasis) -> Result<Self> {
        let beta = beta_matrix(&basis)?;
        let kappa = beta.clone().pseudo_inverse(PINV_CUTOFF).map_err(|e| QinfoError::Optimizer(e.to_string()))?;
        Ok(Self { basis, beta, kappa })
    }

    /// χ = κλ.
    pub fn recover(&self, outputs: &[ComplexMatrix]) -> Result<ChiResult> {
        let lambda = lambda_vector(&self.basis, outputs)?;
        let chi_vec = &self.kappa * &lambda;
        let residual = vec_max_abs(&(&self.beta * &chi_vec - &lambda));
        let dd = self.basis.fixed_ops.len();
        let chi = hermitize(&ComplexMatrix::from_fn(dd, dd, |m, n| chi_vec[m * dd + n]));
        let kraus = kraus_from_chi(&chi, &self.basis).ok();
        Ok(ChiResult { chi, kraus, residual, probabilities: vec![] })
    }

    /// max |βκβ − β|
    pub fn generalized_inverse_residual(&self) -> f64 {
        max_abs(&(&self.beta * &self.kappa * &self.beta - &self.beta))
    }
}

pub fn recover_chi(basis: &TomographyBasis, outputs: &[ComplexMatrix]) -> Result<ChiResult> {
    TomographySolver::new(basis.clone())?.recover(outputs)
}

/// E_i = √d_i Σ_j U_ji Ẽ_j from χ = U diag(d) U†.
pub fn kraus_from_chi(chi: &ComplexMatrix, basis: &TomographyBasis) -> Result<QuantumOperation> {
    let e = eigh(chi);
    if let Some(&min) = e.values.last() {
        if min < -CHI_NEG_TOL {
            return Err(QinfoError::UnphysicalData(format!("chi has eigenvalue {min:.3e}")));
        }
    }
    let d = basis.dim();
    let mut kraus = vec![];
    for (i, &v) in e.values.iter().enumerate() {
        if v <= EIG_TOL {
            continue;
        }
        let mut k = zeros(d, d);
        for (j, ej) in basis.fixed_ops.iter().enumerate() {
            k += ej * e.vectors[(j, i)];
        }
        kraus.push(k * c(v.sqrt(), 0.0));
    }
    if kraus.is_empty() {
        kraus.push(zeros(d, d));
    }
    QuantumOperation::new(kraus, basis.shape.clone(), basis.shape.clone())
}

/// max |Σ_mn χ_mn Ẽ_n†Ẽ_m − I|; zero for trace-preserving data.
pub fn trace_preservation_residual(chi: &ComplexMatrix, basis: &TomographyBasis) -> f64 {
    let d = basis.dim();
    let mut s = zeros(d, d);
    for (m, em) in basis.fixed_ops.iter().enumerate() {
        for (n, en) in basis.fixed_ops.iter().enumerate() {
            s += en.adjoint() * em * chi[(m, n)];
        }
    }
    max_abs(&(s - identity(d)))
}

/// ρ′₁..ρ′₄ = ℰ(|0⟩⟨0|), ℰ(|0⟩⟨1|), ℰ(|1⟩⟨0|), ℰ(|1⟩⟨1|) from the outputs on the prepared
/// inputs |0⟩, |1⟩, |+⟩ = (|0⟩+|1⟩)/√2 and |−⟩ = (|0⟩+i|1⟩)/√2.
pub fn one_qubit_outputs(
    out0: &ComplexMatrix,
    out1: &ComplexMatrix,
    out_plus: &ComplexMatrix,
    out_minus: &ComplexMatrix,
) -> [ComplexMatrix; 4] {
    let diag = (out0 + out1) * c(0.5, 0.0);
    let r2 = out_plus + out_minus * c(0.0, 1.0) - &diag * c(1.0, 1.0);
    let r3 = out_plus - out_minus * c(0.0, 1.0) - &diag * c(1.0, -1.0);
    [out0.clone(), r2, r3, out1.clone()]
}

/// χ = Λ [[ρ′₁, ρ′₂], [ρ′₃, ρ′₄]] Λ with Λ = ½[[I, X], [X, −I]], in the {I, X, −iY, Z} basis.
pub fn one_qubit_chi(r1: &ComplexMatrix, r2: &ComplexMatrix, r3: &ComplexMatrix, r4: &ComplexMatrix) -> Result<ChiResult> {
    if [r1, r2, r3, r4].iter().any(|r| r.nrows() != 2 || r.ncols() != 2) {
        return Err(QinfoError::DimensionMismatch("one-qubit outputs must be 2x2".into()));
    }
    let mut block = zeros(4, 4);
    block.view_mut((0, 0), (2, 2)).copy_from(r1);
    block.view_mut((0, 2), (2, 2)).copy_from(r2);
    block.view_mut((2, 0), (2, 2)).copy_from(r3);
    block.view_mut((2, 2), (2, 2)).copy_from(r4);
    let x = pauli_x();
    let mut lam = zeros(4, 4);
    lam.view_mut((0, 0), (2, 2)).copy_from(&identity(2));
    lam.view_mut((0, 2), (2, 2)).copy_from(&x);
    lam.view_mut((2, 0), (2, 2)).copy_from(&x);
    lam.view_mut((2, 2), (2, 2)).copy_from(&(-identity(2)));
    let lam = lam * c(0.5, 0.0);
    let raw = &lam * block * &lam;
    let basis = TomographyBasis::pauli(1)?;
    let beta = beta_matrix(&basis)?;
    let lambda = lambda_vector(&basis, &[r1.clone(), r2.clone(), r3.clone(), r4.clone()])?;
    let chi_vec = ComplexVector::from_iterator(16, raw.transpose().iter().copied());
    let residual = vec_max_abs(&(&beta * chi_vec - lambda));
    let chi = hermitize(&raw);
    let kraus = kraus_from_chi(&chi, &basis).ok();
    Ok(ChiResult { chi, kraus, residual, probabilities: vec![] })
}

/// Amplitude-damping χ in the Pauli basis: ¼[[(1+s)², 0, 0, γ], [0, γ, −γ, 0], [0, −γ, γ, 0], [γ, 0, 0, (1−s)²]], s = √(1−γ).
pub fn amplitude_damping_chi(gamma: f64) -> ComplexMatrix {
    let s = (1.0 - gamma).sqrt();
    #[rustfmt::skip]
    let v = [
        (1.0 + s).powi(2), 0.0, 0.0, gamma,
        0.0, gamma, -gamma, 0.0,
        0.0, -gamma, gamma, 0.0,
        gamma, 0.0, 0.0, (1.0 - s).powi(2),
    ];
    ComplexMatrix::from_row_slice(4, 4, &v.map(|x| c(x / 4.0, 0.0)))
}

/// The four measured output matrices for amplitude damping with parameter γ.
pub fn amplitude_damping_outputs(gamma: f64) -> [ComplexMatrix; 4] {
    let s = c((1.0 - gamma).sqrt(), 0.0);
    let z = c(0.0, 0.0);
    [
        ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), z, z, z]),
        ComplexMatrix::from_row_slice(2, 2, &[z, s, z, z]),
        ComplexMatrix::from_row_slice(2, 2, &[z, z, s, z]),
        ComplexMatrix::from_row_slice(2, 2, &[c(gamma, 0.0), z, z, c(1.0 - gamma, 0.0)]),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TomographyMode {
    Complete,
    /// One measurement branch: outputs are reported as p_m ρ′ per prepared input.
    Incomplete,
}

/// Physical inputs |n⟩, (|n⟩+|m⟩)/√2 and (|n⟩+i|m⟩)/√2 for n < m.
pub fn prepared_states(d: usize) -> Vec<ComplexVector> {
    let mut out: Vec<ComplexVector> = (0..d).map(|n| ket(d, n)).collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for n in 0..d {
        for m in n + 1..d {
            out.push((ket(d, n) + ket(d, m)) * c(s, 0.0));
            out.push((ket(d, n) + ket(d, m) * c(0.0, 1.0)) * c(s, 0.0));
        }
    }
    out
}

/// Probe, apply, and reconstruct. Outputs on |n⟩⟨m| are assembled from the physical
/// inputs by ℰ(|n⟩⟨m|) = ℰ(+) + iℰ(−) − (1+i)(ℰ(|n⟩⟨n|) + ℰ(|m⟩⟨m|))/2.
pub fn simulate_tomography(op: &QuantumOperation, mode: TomographyMode) -> Result<ChiResult> {
    let n_qubits = op.in_dim().trailing_zeros() as usize;
    if op.in_dim() != 1 << n_qubits {
        return Err(QinfoError::DimensionMismatch(format!("dimension {} is not a power of two", op.in_dim())));
    }
    simulate_tomography_with(&TomographySolver::new(TomographyBasis::pauli(n_qubits)?)?, op, mode)
}

pub fn simulate_tomography_with(solver: &TomographySolver, op: &QuantumOperation, mode: TomographyMode) -> Result<ChiResult> {
    let class = classify(op);
    match (class.class, mode) {
        (Completeness::Nonphysical, _) => {
            return Err(QinfoError::Nonphysical(format!(
                "completeness eigenvalue {:.3e}, Choi eigenvalue {:.3e}",
                class.max_completeness_eigenvalue, class.choi_min_eigenvalue
            )))
        }
        (Completeness::PhysicalIncomplete, TomographyMode::Complete) => {
            return Err(QinfoError::Nonphysical("operation is not trace preserving; use incomplete mode".into()))
        }
        _ => {}
    }
    if op.in_dim() != op.out_dim() {
        return Err(QinfoError::DimensionMismatch("tomography needs equal input and output dimensions".into()));
    }
    let d = op.in_dim();
    if d != solver.basis.dim() {
        return Err(QinfoError::DimensionMismatch(format!("operation on {d} dimensions, basis on {}", solver.basis.dim())));
    }
    let mut probabilities = vec![];
    let mut measured = vec![];
    for psi in prepared_states(d) {
        let raw = op.apply_matrix(&projector(&psi));
        let p = raw.trace().re;
        probabilities.push(p);
        // State tomography reports ρ′ and the branch frequency reports p_m.
        let out = if p > MIN_PROBABILITY { hermitize(&(raw / c(p, 0.0))) * c(p, 0.0) } else { zeros(d, d) };
        measured.push(out);
    }
    let mut outputs = vec![zeros(d, d); d * d];
    for n in 0..d {
        outputs[n * d + n] = measured[n].clone();
    }
    let mut k = d;
    for n in 0..d {
        for m in n + 1..d {
            let (plus, minus) = (&measured[k], &measured[k + 1]);
            let diag = (&measured[n] + &measured[m]) * c(0.5, 0.0);
            outputs[n * d + m] = plus + minus * c(0.0, 1.0) - &diag * c(1.0, 1.0);
            outputs[m * d + n] = plus - minus * c(0.0, 1.0) - &diag * c(1.0, -1.0);
            k += 2;
        }
    }
    let mut res = solver.recover(&outputs)?;
    if mode == TomographyMode::Incomplete {
        res.probabilities = probabilities;
    }
    Ok(res)
}

/// Map given by χ: ρ ↦ Σ_mn χ_mn Ẽ_m ρ Ẽ_n†.
pub fn apply_chi(chi: &ComplexMatrix, basis: &TomographyBasis, rho: &ComplexMatrix) -> ComplexMatrix {
    let d = basis.dim();
    let mut out = zeros(d, d);
    for (m, em) in basis.fixed_ops.iter().enumerate() {
        let left = em * rho;
        for (n, en) in basis.fixed_ops.iter().enumerate() {
            let w: C64 = chi[(m, n)];
            if w.norm() > 0.0 {
                out += &left * en.adjoint() * w;
            }
        }
    }
    out
}
