//! Repetition codes and the nine-qubit code, syndrome/recovery cycles,
//! reversal of operations that lose no information, and the entropy ledger
//! of the error-correcting demon.
//!
//! A code carries its recovery as a list of syndrome stages. Each stage
//! measures a complete set of projectors on a few physical qubits and applies
//! the matching unitary. Nine-qubit recovery is three bit-flip stages (one per
//! block) followed by a sign stage on the block parities.

use rand::Rng;

use crate::entropy::{entropy_exchange, shannon, vn_entropy};
use crate::error::{QinfoError, Result};
use crate::linalg::{
    apply_local, c, eigh, embed, hadamard, identity, ket, max_abs, pauli_x, pauli_y, pauli_z, tensor_all,
    tensor_vec, unit, zeros, ComplexMatrix, ComplexVector, DensityOperator, SystemShape, EIG_TOL,
};
use crate::metrics::{dynamic_fidelity, MetricReport};
use crate::ops::{canonical_kraus, channels, QuantumOperation, MAP_TOL, MIN_PROBABILITY};
use crate::random::{ginibre, haar_unitary, random_channel_on, random_density, random_pure, seeded};

/// Branches whose Frobenius norm falls below this are dropped while folding.
pub const BRANCH_TOL: f64 = 1e-14;
/// Most Kraus branches carried through a cycle.
pub const BRANCH_BUDGET: usize = 1 << 14;
/// Largest register whose recovery or noise is assembled as a dense operation.
pub const DENSE_QUBITS: usize = 6;
/// Residual below which a reversibility condition is met.
pub const REVERSIBLE_TOL: f64 = 1e-8;
/// Random support vectors added to the eigenvectors when probing constancy.
pub const SUPPORT_PROBES: usize = 8;

/// One syndrome measurement with its conditional recovery.
#[derive(Clone, Debug, PartialEq)]
pub struct SyndromeStage {
    /// Physical qubits the matrices act on, in matrix factor order.
    pub targets: Vec<usize>,
    pub projectors: Vec<ComplexMatrix>,
    /// Applied after the outcome with the same index.
    pub recoveries: Vec<ComplexMatrix>,
    branches: Vec<ComplexMatrix>,
}

impl SyndromeStage {
    /// Checks that the projectors are complete and orthogonal and the recoveries unitary.
    ///
    /// Idempotence and unitarity are tested on a fixed block of random vectors,
    /// which keeps construction quadratic in the stage dimension.
    pub fn new(targets: Vec<usize>, projectors: Vec<ComplexMatrix>, recoveries: Vec<ComplexMatrix>) -> Result<Self> {
        let d = 1usize << targets.len();
        if projectors.is_empty() || projectors.len() != recoveries.len() {
            return Err(QinfoError::DimensionMismatch("projectors and recoveries must pair up".into()));
        }
        let probe = ginibre(d, 4, &mut seeded(0));
        let mut total = zeros(d, d);
        for (p, r) in projectors.iter().zip(&recoveries) {
            if p.shape() != (d, d) || r.shape() != (d, d) {
                return Err(QinfoError::DimensionMismatch(format!("stage matrices must be {d}x{d}")));
            }
            let pv = p * &probe;
            if max_abs(&(p * &pv - &pv)) > MAP_TOL * d as f64 || max_abs(&(p.adjoint() - p)) > MAP_TOL {
                return Err(QinfoError::InvalidParameter("syndrome element is not a projector".into()));
            }
            let rv = r * &probe;
            if max_abs(&(rv.adjoint() * &rv - probe.adjoint() * &probe)) > MAP_TOL * d as f64 {
                return Err(QinfoError::InvalidParameter("recovery is not unitary".into()));
            }
            total += p;
        }
        if max_abs(&(total - identity(d))) > MAP_TOL {
            return Err(QinfoError::InvalidParameter("syndrome projectors are not complete".into()));
        }
        let branches = projectors.iter().zip(&recoveries).map(|(p, r)| r * p).collect();
        Ok(Self { targets, projectors, recoveries, branches })
    }

    /// R_s P_s for each outcome s.
    pub fn branches(&self) -> &[ComplexMatrix] {
        &self.branches
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Code {
    pub name: String,
    pub n_qubits: usize,
    /// 2^n × 2 isometry; columns are |0_L⟩ and |1_L⟩.
    pub encoder: ComplexMatrix,
    /// Run in order on the noisy register.
    pub stages: Vec<SyndromeStage>,
}

impl Code {
    pub fn dims(&self) -> Vec<usize> {
        vec![2; self.n_qubits]
    }

    pub fn shape(&self) -> SystemShape {
        SystemShape::qubits(self.n_qubits)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn logical(&self, bit: usize) -> ComplexVector {
        self.encoder.column(bit).into_owned()
    }

    /// Projector onto the code space.
    pub fn code_projector(&self) -> ComplexMatrix {
        &self.encoder * self.encoder.adjoint()
    }

    pub fn encode(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != 2 {
            return Err(QinfoError::DimensionMismatch(format!("code input must be one qubit, got dimension {}", rho.dim())));
        }
        DensityOperator::new(&self.encoder * rho.matrix() * self.encoder.adjoint(), self.shape())
    }

    /// Syndrome measurement of one stage as a family of incomplete operations on the register.
    pub fn syndrome_branches(&self, stage: usize) -> Result<Vec<QuantumOperation>> {
        let st = self
            .stages
            .get(stage)
            .ok_or_else(|| QinfoError::InvalidParameter(format!("code has {} stages", self.stages.len())))?;
        st.projectors
            .iter()
            .map(|p| QuantumOperation::new(vec![embed(p, &st.targets, &self.dims())?], self.shape(), self.shape()))
            .collect()
    }

    /// Every stage composed into one complete operation on the register.
    pub fn recovery_operation(&self) -> Result<QuantumOperation> {
        if self.n_qubits > DENSE_QUBITS {
            return Err(QinfoError::BudgetExceeded(format!(
                "dense recovery limited to {DENSE_QUBITS} qubits, code has {}",
                self.n_qubits
            )));
        }
        let mut kraus = vec![identity(self.dim())];
        for st in &self.stages {
            kraus = split(&kraus, st.branches(), &st.targets, &self.dims())?;
        }
        QuantumOperation::new(kraus, self.shape(), self.shape())
    }
}

fn bit_flip_projectors() -> Vec<ComplexMatrix> {
    // outcome s ≥ 1 flags a flip on the s-th qubit
    [(0, 7), (4, 3), (2, 5), (1, 6)].iter().map(|&(a, b)| unit(8, a, a) + unit(8, b, b)).collect()
}

fn bit_flip_stage(targets: Vec<usize>) -> Result<SyndromeStage> {
    let (i, x) = (identity(2), pauli_x());
    let recoveries = vec![
        identity(8),
        tensor_all(&[x.clone(), i.clone(), i.clone()]),
        tensor_all(&[i.clone(), x.clone(), i.clone()]),
        tensor_all(&[i.clone(), i, x]),
    ];
    SyndromeStage::new(targets, bit_flip_projectors(), recoveries)
}

fn repetition_encoder() -> ComplexMatrix {
    let mut v = zeros(8, 2);
    v[(0, 0)] = c(1.0, 0.0);
    v[(7, 1)] = c(1.0, 0.0);
    v
}

fn bit_flip_code() -> Result<Code> {
    Ok(Code {
        name: "bit_flip".into(),
        n_qubits: 3,
        encoder: repetition_encoder(),
        stages: vec![bit_flip_stage(vec![0, 1, 2])?],
    })
}

fn phase_flip_code() -> Result<Code> {
    let h = hadamard();
    let h3 = tensor_all(&[h.clone(), h.clone(), h]);
    let base = bit_flip_stage(vec![0, 1, 2])?;
    let conj = |m: &ComplexMatrix| &h3 * m * &h3;
    let stage = SyndromeStage::new(
        base.targets,
        base.projectors.iter().map(conj).collect(),
        base.recoveries.iter().map(conj).collect(),
    )?;
    Ok(Code { name: "phase_flip".into(), n_qubits: 3, encoder: &h3 * repetition_encoder(), stages: vec![stage] })
}

fn shor_code() -> Result<Code> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = (ket(8, 0) + ket(8, 7)) * c(s, 0.0);
    let minus = (ket(8, 0) - ket(8, 7)) * c(s, 0.0);
    let zero_l = tensor_vec(&tensor_vec(&plus, &plus), &plus);
    let one_l = tensor_vec(&tensor_vec(&minus, &minus), &minus);
    let mut encoder = zeros(512, 2);
    encoder.set_column(0, &zero_l);
    encoder.set_column(1, &one_l);

    let mut stages = vec![];
    for b in 0..3 {
        stages.push(bit_flip_stage(vec![3 * b, 3 * b + 1, 3 * b + 2])?);
    }
    let (i, x) = (identity(2), pauli_x());
    let s1 = tensor_all(&[vec![x.clone(); 6], vec![i.clone(); 3]].concat());
    let s2 = tensor_all(&[vec![i.clone(); 3], vec![x.clone(); 6]].concat());
    let s12 = tensor_all(&[vec![x.clone(); 3], vec![i; 3], vec![x; 3]].concat());
    let id = identity(512);
    // (a, b) are the parities of blocks 0,1 and 1,2; a single sign error on
    // block k is undone by Z on its first qubit
    let outcomes = [(1.0, 1.0, None), (-1.0, 1.0, Some(0)), (-1.0, -1.0, Some(3)), (1.0, -1.0, Some(6))];
    let dims = vec![2; 9];
    let mut projectors = vec![];
    let mut recoveries = vec![];
    for (a, b, fix) in outcomes {
        // (I + a S1)(I + b S2)/4 with S1 S2 = S12
        projectors.push((&id + &s1 * c(a, 0.0) + &s2 * c(b, 0.0) + &s12 * c(a * b, 0.0)) * c(0.25, 0.0));
        recoveries.push(match fix {
            Some(q) => embed(&pauli_z(), &[q], &dims)?,
            None => id.clone(),
        });
    }
    stages.push(SyndromeStage::new((0..9).collect(), projectors, recoveries)?);
    Ok(Code { name: "shor9".into(), n_qubits: 9, encoder, stages })
}

/// `bit_flip`, `phase_flip` or `shor9`.
pub fn make_code(name: &str) -> Result<Code> {
    match name {
        "bit_flip" => bit_flip_code(),
        "phase_flip" => phase_flip_code(),
        "shor9" => shor_code(),
        other => Err(QinfoError::UnknownCode(other.into())),
    }
}

/// Noise on a physical register as a sequence of local operations.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalNoise {
    layers: Vec<(QuantumOperation, Vec<usize>)>,
}

impl PhysicalNoise {
    /// `op` acting on the listed qubits, in that factor order.
    pub fn local(op: QuantumOperation, targets: Vec<usize>) -> Result<Self> {
        Self { layers: vec![] }.then(op, targets)
    }

    pub fn then(mut self, op: QuantumOperation, targets: Vec<usize>) -> Result<Self> {
        let d = 1usize << targets.len();
        if op.in_dim() != d || op.out_dim() != d {
            return Err(QinfoError::DimensionMismatch(format!(
                "noise on {} qubits must act on dimension {d}, got {}→{}",
                targets.len(),
                op.in_dim(),
                op.out_dim()
            )));
        }
        self.layers.push((op, targets));
        Ok(self)
    }

    /// The same one-qubit operation on each of n qubits.
    pub fn iid(op: &QuantumOperation, n: usize) -> Result<Self> {
        let mut noise = Self { layers: vec![] };
        for q in 0..n {
            noise = noise.then(op.clone(), vec![q])?;
        }
        Ok(noise)
    }

    /// Unitary error on one qubit.
    pub fn unitary(u: ComplexMatrix, qubit: usize) -> Result<Self> {
        Self::local(QuantumOperation::unitary(u, SystemShape::qubits(1))?, vec![qubit])
    }

    pub fn layers(&self) -> &[(QuantumOperation, Vec<usize>)] {
        &self.layers
    }

    fn check(&self, n: usize) -> Result<()> {
        for (_, t) in &self.layers {
            if t.iter().any(|&q| q >= n) {
                return Err(QinfoError::DimensionMismatch(format!("noise targets {t:?} on a {n}-qubit register")));
            }
        }
        Ok(())
    }

    /// All layers as one operation on an n-qubit register.
    pub fn dense(&self, n: usize) -> Result<QuantumOperation> {
        self.check(n)?;
        if n > DENSE_QUBITS {
            return Err(QinfoError::BudgetExceeded(format!("dense noise limited to {DENSE_QUBITS} qubits")));
        }
        let dims = vec![2; n];
        let mut kraus = vec![identity(1 << n)];
        for (op, t) in &self.layers {
            kraus = split(&kraus, op.kraus(), t, &dims)?;
        }
        QuantumOperation::new(kraus, SystemShape::qubits(n), SystemShape::qubits(n))
    }
}

/// {A_k M} for every branch M and local operator A_k, dropping negligible terms.
fn split(ms: &[ComplexMatrix], ops: &[ComplexMatrix], targets: &[usize], dims: &[usize]) -> Result<Vec<ComplexMatrix>> {
    let mut out = vec![];
    for m in ms {
        for a in ops {
            let next = apply_local(a, targets, dims, m)?;
            if next.norm() >= BRANCH_TOL {
                out.push(next);
            }
        }
        if out.len() > BRANCH_BUDGET {
            return Err(QinfoError::BudgetExceeded(format!("more than {BRANCH_BUDGET} cycle branches")));
        }
    }
    if out.is_empty() {
        out.push(zeros(ms[0].nrows(), ms[0].ncols()));
    }
    Ok(out)
}

/// Encode, noise, every syndrome stage, then decode, as an operation on one qubit.
///
/// Decoding is the encoder adjoint on the code space; weight left outside the
/// code space is reset to |0⟩ so that complete noise gives a complete cycle.
pub fn cycle_channel(code: &Code, noise: &PhysicalNoise) -> Result<QuantumOperation> {
    noise.check(code.n_qubits)?;
    let dims = code.dims();
    let mut branches = vec![code.encoder.clone()];
    for (op, t) in noise.layers() {
        branches = split(&branches, op.kraus(), t, &dims)?;
    }
    for st in &code.stages {
        branches = split(&branches, st.branches(), &st.targets, &dims)?;
    }
    let vd = code.encoder.adjoint();
    let mut kraus = vec![];
    for l in &branches {
        let inside = &vd * l;
        let outside = l - &code.encoder * &inside;
        kraus.push(inside);
        let g = eigh(&(outside.adjoint() * &outside));
        for (j, &w) in g.values.iter().enumerate() {
            if w > BRANCH_TOL * BRANCH_TOL {
                let b = g.vectors.column(j).into_owned();
                kraus.push(ket(2, 0) * b.adjoint() * c(w.sqrt(), 0.0));
            }
        }
    }
    QuantumOperation::new(kraus, SystemShape::qubits(1), SystemShape::qubits(1))
}

#[derive(Clone, Debug)]
pub struct CycleResult {
    pub output: DensityOperator,
    /// Dynamic fidelity of the whole cycle on the input.
    pub fidelity: f64,
    pub channel: QuantumOperation,
}

pub fn correct_cycle(code: &Code, noise: &PhysicalNoise, input: &DensityOperator) -> Result<CycleResult> {
    if input.dim() != 2 {
        return Err(QinfoError::DimensionMismatch(format!("cycle input must be one qubit, got dimension {}", input.dim())));
    }
    let channel = cycle_channel(code, noise)?;
    let output = channel.apply_normalized(input)?;
    let fidelity = dynamic_fidelity(input, &channel)?;
    Ok(CycleResult { output, fidelity, channel })
}

/// Minimum cycle fidelity of the bit-flip code under independent flips.
pub fn bit_flip_fidelity_bound(p: f64) -> f64 {
    1.0 - 3.0 * p * p + 2.0 * p * p * p
}

/// Pure-input fidelities ⟨ψ|cycle(ψ)|ψ⟩ for random inputs, with their minimum.
pub fn min_pure_cycle_fidelity<R: Rng + ?Sized>(channel: &QuantumOperation, inputs: usize, rng: &mut R) -> Result<f64> {
    let mut min = f64::INFINITY;
    for _ in 0..inputs {
        let psi = random_pure(2, rng);
        let rho = DensityOperator::new(&psi * psi.adjoint(), SystemShape::qubits(1))?;
        min = min.min(dynamic_fidelity(&rho, channel)?);
    }
    Ok(min)
}

/// Random one-qubit channels placed at every position; cycle fidelities on I/2.
///
/// Each channel has between one and four Kraus operators from a Haar isometry.
pub fn arbitrary_error_fidelities<R: Rng + ?Sized>(code: &Code, channels: usize, rng: &mut R) -> Result<Vec<(usize, f64)>> {
    let mixed = DensityOperator::maximally_mixed(SystemShape::qubits(1));
    let mut out = vec![];
    for _ in 0..channels {
        let k = rng.random_range(1..=4);
        let op = random_channel_on(2, k, rng).with_shapes(SystemShape::qubits(1), SystemShape::qubits(1))?;
        for q in 0..code.n_qubits {
            let noise = PhysicalNoise::local(op.clone(), vec![q])?;
            out.push((q, dynamic_fidelity(&mixed, &cycle_channel(code, &noise)?)?));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyndromeRow {
    pub error: String,
    /// Outcome observed at each stage.
    pub outcomes: Vec<usize>,
    /// Cycle fidelity on I/2.
    pub fidelity: f64,
}

/// Syndromes and cycle fidelity for every single-qubit Pauli error.
pub fn syndrome_table(code: &Code) -> Result<Vec<SyndromeRow>> {
    let dims = code.dims();
    let mixed = DensityOperator::maximally_mixed(SystemShape::qubits(1));
    let probe = (code.logical(0) + code.logical(1)) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut errors = vec![("I".to_string(), None)];
    for q in 0..code.n_qubits {
        for (label, m) in [("X", pauli_x()), ("Y", pauli_y()), ("Z", pauli_z())] {
            errors.push((format!("{label}{q}"), Some((m, q))));
        }
    }
    let mut rows = vec![];
    for (error, e) in errors {
        let (u, q) = e.unwrap_or((identity(2), 0));
        let noise = PhysicalNoise::unitary(u.clone(), q)?;
        let mut v = apply_local(&u, &[q], &dims, &ComplexMatrix::from_column_slice(probe.len(), 1, probe.as_slice()))?;
        let mut outcomes = vec![];
        for st in &code.stages {
            let projected: Vec<ComplexMatrix> = st
                .projectors
                .iter()
                .map(|p| apply_local(p, &st.targets, &dims, &v))
                .collect::<Result<_>>()?;
            let s = (0..projected.len())
                .max_by(|&a, &b| projected[a].norm().total_cmp(&projected[b].norm()))
                .unwrap_or(0);
            let w = apply_local(&st.recoveries[s], &st.targets, &dims, &projected[s])?;
            v = &w * c(1.0 / w.norm(), 0.0);
            outcomes.push(s);
        }
        let fidelity = dynamic_fidelity(&mixed, &cycle_channel(code, &noise)?)?;
        rows.push(SyndromeRow { error, outcomes, fidelity });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReversibilityVerdict {
    /// S(ρ) − S(ρ′) + S(ρ, ℰ); nonnegative, zero when reversible.
    pub entropy_residual: f64,
    /// Spread of tr ℰ(|ψ⟩⟨ψ|) over support probes; only for incomplete operations.
    pub constancy_residual: Option<f64>,
    pub reversible: bool,
}

fn support(rho: &DensityOperator) -> (Vec<f64>, ComplexMatrix) {
    let e = eigh(rho.matrix());
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > EIG_TOL).collect();
    let mut vecs = zeros(rho.dim(), keep.len());
    for (k, &i) in keep.iter().enumerate() {
        vecs.set_column(k, &e.vectors.column(i));
    }
    (keep.iter().map(|&i| e.values[i]).collect(), vecs)
}

pub fn reversibility_check<R: Rng + ?Sized>(
    op: &QuantumOperation,
    rho: &DensityOperator,
    rng: &mut R,
) -> Result<ReversibilityVerdict> {
    let applied = op.apply(rho)?;
    if applied.trace <= MIN_PROBABILITY {
        return Err(QinfoError::ZeroProbability(applied.trace));
    }
    let out = op.apply_normalized(rho)?;
    let entropy_residual = vn_entropy(rho) - vn_entropy(&out) + entropy_exchange(rho, op)?;
    let constancy_residual = if op.is_complete() {
        None
    } else {
        let (_, vecs) = support(rho);
        let comp = op.completeness_operator();
        let mut probes: Vec<ComplexVector> = vecs.column_iter().map(|v| v.into_owned()).collect();
        for _ in 0..SUPPORT_PROBES {
            let a = random_pure(vecs.ncols(), rng);
            probes.push(&vecs * a);
        }
        let traces: Vec<f64> = probes.iter().map(|v| (v.adjoint() * &comp * v)[(0, 0)].re).collect();
        let hi = traces.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = traces.iter().copied().fold(f64::INFINITY, f64::min);
        Some(hi - lo)
    };
    let reversible = entropy_residual.abs() < REVERSIBLE_TOL && constancy_residual.is_none_or(|r| r < REVERSIBLE_TOL);
    Ok(ReversibilityVerdict { entropy_residual, constancy_residual, reversible })
}

/// Complete operation ℛ with F(ρ, ℛ∘ℰ) = 1.
///
/// The canonical Kraus operators F_j of ℰ at ρ send the support eigenvectors
/// |i⟩ to orthogonal vectors √(q_j t)|i,j⟩. ℛ measures P_j = Σ_i |i,j⟩⟨i,j|
/// and rotates |i,j⟩ back to |i⟩; the unused part of the output space is
/// either kept (equal dimensions) or sent to the first support vector.
pub fn construct_reversal<R: Rng + ?Sized>(
    op: &QuantumOperation,
    rho: &DensityOperator,
    rng: &mut R,
) -> Result<QuantumOperation> {
    let verdict = reversibility_check(op, rho, rng)?;
    if !verdict.reversible {
        return Err(QinfoError::NotReversible(format!(
            "entropy residual {:.3e}, constancy residual {:.3e}",
            verdict.entropy_residual,
            verdict.constancy_residual.unwrap_or(0.0)
        )));
    }
    let t = op.apply(rho)?.trace;
    let (_, basis) = support(rho);
    let r = basis.ncols();
    let canon = canonical_kraus(op, rho)?;
    let mut cols = vec![];
    for f in canon.kraus() {
        let fb = f * &basis;
        let q = (0..r).map(|i| fb.column(i).norm_squared()).sum::<f64>() / (r as f64 * t);
        if q > EIG_TOL {
            for i in 0..r {
                cols.push(fb.column(i) * c(1.0 / (q * t).sqrt(), 0.0));
            }
        }
    }
    let dout = op.out_dim();
    let mut q = zeros(dout, cols.len());
    for (k, v) in cols.iter().enumerate() {
        q.set_column(k, v);
    }
    let gram_dev = max_abs(&(q.adjoint() * &q - identity(cols.len())));
    if gram_dev > 1e-6 {
        return Err(QinfoError::NotReversible(format!("branch images not orthonormal (deviation {gram_dev:.3e})")));
    }
    // nearest isometry with the same labels
    let svd = q.clone().svd(true, true);
    let q = svd.u.expect("requested") * svd.v_t.expect("requested");

    let mut kraus = vec![];
    for j in 0..cols.len() / r {
        kraus.push(&basis * q.columns(j * r, r).adjoint());
    }
    let rest = identity(dout) - &q * q.adjoint();
    if max_abs(&rest) > MAP_TOL {
        if dout == op.in_dim() {
            kraus.push(rest);
        } else {
            let e = eigh(&rest);
            let home = basis.column(0).into_owned();
            for (j, &w) in e.values.iter().enumerate() {
                if w > 0.5 {
                    kraus.push(&home * e.vectors.column(j).adjoint());
                }
            }
        }
    }
    QuantumOperation::new(kraus, op.out_shape().clone(), op.in_shape().clone())
}

/// Which Kraus set of the reversal the demon measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decomposition {
    AsGiven,
    Canonical,
}

/// Entropy bookkeeping for one error-correction stage, in bits.
#[derive(Clone, Debug, PartialEq)]
pub struct DemonLedger {
    pub p_m: Vec<f64>,
    /// H(p_m), the stored cost of the measurement record.
    pub shannon_record: f64,
    /// S(ρⁿ, ℛ).
    pub entropy_exchange: f64,
    /// S(ℛ(ρⁿ)) − S(ρⁿ).
    pub delta_s_c: f64,
    /// H(p_m) + ΔS^c.
    pub total: f64,
}

impl DemonLedger {
    /// H(p_m) − S_e, zero for a canonical record.
    pub fn record_slack(&self) -> f64 {
        self.shannon_record - self.entropy_exchange
    }

    /// S_e + ΔS^c, zero when the reversal corrects perfectly.
    pub fn second_law(&self) -> f64 {
        self.entropy_exchange + self.delta_s_c
    }
}

/// Ledger of a reversal ℛ applied to the noisy state ρⁿ.
pub fn demon_accounting(reversal: &QuantumOperation, rho_n: &DensityOperator, decomposition: Decomposition) -> Result<DemonLedger> {
    if reversal.in_dim() != reversal.out_dim() || !reversal.is_complete() {
        return Err(QinfoError::InvalidParameter(
            "invalid decomposition: the reversal must be a complete operation on one space".into(),
        ));
    }
    let ops = match decomposition {
        Decomposition::AsGiven => reversal.clone(),
        Decomposition::Canonical => canonical_kraus(reversal, rho_n)?,
    };
    let p_m: Vec<f64> = ops
        .kraus()
        .iter()
        .map(|k| (k * rho_n.matrix() * k.adjoint()).trace().re.max(0.0))
        .collect();
    let shannon_record = shannon(&p_m);
    let s_e = entropy_exchange(rho_n, reversal)?;
    let delta_s_c = vn_entropy(&reversal.apply_normalized(rho_n)?) - vn_entropy(rho_n);
    Ok(DemonLedger { p_m, shannon_record, entropy_exchange: s_e, delta_s_c, total: shannon_record + delta_s_c })
}

/// ℰ(encode(ρ)) on the register, for codes small enough to hold densely.
pub fn noisy_register(code: &Code, noise: &PhysicalNoise, input: &DensityOperator) -> Result<DensityOperator> {
    noise.dense(code.n_qubits)?.apply_normalized(&code.encode(input)?)
}

/// Three-qubit noise that flips at most one qubit: I w.p. 1 − 3q, X_k w.p. q each.
pub fn single_flip_noise(q: f64, n: usize) -> Result<PhysicalNoise> {
    if !(0.0..=1.0 / n as f64).contains(&q) {
        return Err(QinfoError::InvalidParameter(format!("flip weight {q} outside [0, 1/{n}]")));
    }
    let dims = vec![2; n];
    let mut kraus = vec![identity(1 << n) * c((1.0 - n as f64 * q).sqrt(), 0.0)];
    for k in 0..n {
        kraus.push(embed(&pauli_x(), &[k], &dims)? * c(q.sqrt(), 0.0));
    }
    let op = QuantumOperation::new(kraus, SystemShape::qubits(n), SystemShape::qubits(n))?;
    PhysicalNoise::local(op, (0..n).collect())
}

/// Same channel as `op` with its Kraus operators mixed by a Haar unitary.
pub fn rebranch<R: Rng + ?Sized>(op: &QuantumOperation, rng: &mut R) -> Result<QuantumOperation> {
    let n = op.kraus().len();
    let u = haar_unitary(n, rng);
    let kraus = (0..n)
        .map(|i| {
            let mut k = zeros(op.out_dim(), op.in_dim());
            for (j, e) in op.kraus().iter().enumerate() {
                k += e * u[(i, j)];
            }
            k
        })
        .collect();
    QuantumOperation::new(kraus, op.in_shape().clone(), op.out_shape().clone())
}

/// Demon-ledger checks on random three-qubit cycles.
///
/// Each sample draws a repetition code, a flip probability and a mixed input,
/// then checks the canonical record equality, the nonnegative totals for the
/// textbook and a rebranched record, and the second-law equality for noise
/// flipping at most one qubit.
pub fn demon_reports<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> Result<Vec<MetricReport>> {
    let codes = [make_code("bit_flip")?, make_code("phase_flip")?];
    let recoveries = [codes[0].recovery_operation()?, codes[1].recovery_operation()?];
    let mut out = vec![];
    for s in 0..samples {
        let which = s % 2;
        let (code, rec) = (&codes[which], &recoveries[which]);
        let p = rng.random_range(0.01..0.4);
        let flip = if which == 0 { channels::bit_flip(p)? } else { channels::phase_flip(p)? };
        let input = random_density(&SystemShape::qubits(1), rng);
        let rho_n = noisy_register(code, &PhysicalNoise::iid(&flip, 3)?, &input)?;

        let canon = demon_accounting(rec, &rho_n, Decomposition::Canonical)?;
        out.push(MetricReport::equality("demon_canonical_record", canon.shannon_record, canon.entropy_exchange));
        out.push(MetricReport::inequality("demon_total_canonical", 0.0, canon.total));
        out.push(MetricReport::inequality("demon_second_law", 0.0, canon.second_law()));
        let given = demon_accounting(rec, &rho_n, Decomposition::AsGiven)?;
        out.push(MetricReport::inequality("demon_record_bound", given.entropy_exchange, given.shannon_record));
        out.push(MetricReport::inequality("demon_total_textbook", 0.0, given.total));
        let mixed = demon_accounting(&rebranch(rec, rng)?, &rho_n, Decomposition::AsGiven)?;
        out.push(MetricReport::inequality("demon_total_rebranched", 0.0, mixed.total));

        // phase-flip code: flips happen in the Hadamard frame
        let q = rng.random_range(0.0..1.0 / 3.0);
        let mut perfect = single_flip_noise(q, 3)?;
        if which == 1 {
            let h3 = tensor_all(&vec![hadamard(); 3]);
            let op = &perfect.layers[0].0;
            let conj = op.kraus().iter().map(|k| &h3 * k * &h3).collect();
            perfect = PhysicalNoise::local(QuantumOperation::new(conj, code.shape(), code.shape())?, vec![0, 1, 2])?;
        }
        let rho_p = noisy_register(code, &perfect, &input)?;
        let ledger = demon_accounting(rec, &rho_p, Decomposition::Canonical)?;
        out.push(MetricReport::equality("demon_perfect_correction", ledger.second_law(), 0.0));
        out.push(MetricReport::inequality("demon_total_perfect", 0.0, ledger.total));
    }
    Ok(out)
}
