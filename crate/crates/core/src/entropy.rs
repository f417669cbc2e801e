//! Entropies in bits, entropy exchange, coherent information and the
//! inequality fuzz families.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{QinfoError, Result};
use crate::linalg::{
    c, eigh, ket, partial_trace, projector, tensor, ComplexMatrix, ComplexVector, DensityOperator,
    SystemShape, LOG_ZERO,
};
use crate::metrics::{dynamic_fidelity, MetricReport};
use crate::ops::{compose, w_matrix, QuantumOperation, MIN_PROBABILITY};
use crate::random::{haar_unitary, random_channel, random_channel_on, random_density_env, QRng};

/// Projected trace of ρ onto ker σ above which S(ρ‖σ) is infinite.
pub const SUPPORT_TOL: f64 = 1e-9;

/// −Σ p log₂ p, skipping entries at or below `LOG_ZERO`.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > LOG_ZERO).map(|&x| -x * x.log2()).sum()
}

pub fn binary_entropy(p: f64) -> f64 {
    shannon(&[p, 1.0 - p])
}

/// Entropy of a Hermitian positive matrix's spectrum (no normalization).
pub fn entropy_matrix(m: &ComplexMatrix) -> f64 {
    shannon(&eigh(m).values)
}

pub fn vn_entropy(rho: &DensityOperator) -> f64 {
    entropy_matrix(rho.matrix())
}

/// S(ρ‖σ) = tr ρ log ρ − tr ρ log σ, or +∞ when supp ρ ⊄ supp σ.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    relative_entropy_matrix(rho.matrix(), sigma.matrix())
}

/// Relative entropy of positive operators, tr A log A − tr A log B.
pub fn relative_entropy_matrix(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(QinfoError::DimensionMismatch("relative entropy of differently sized operators".into()));
    }
    let eb = eigh(b);
    let mut cross = 0.0;
    let mut kernel = 0.0;
    for (j, &lam) in eb.values.iter().enumerate() {
        let v: ComplexVector = eb.vectors.column(j).into_owned();
        let w = (v.adjoint() * a * &v)[(0, 0)].re;
        if lam > LOG_ZERO {
            cross += w * lam.log2();
        } else {
            kernel += w;
        }
    }
    if kernel > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    let self_term: f64 = eigh(a).values.iter().filter(|&&x| x > LOG_ZERO).map(|&x| x * x.log2()).sum();
    Ok(self_term - cross)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalMutual {
    pub a_given_b: f64,
    pub b_given_a: f64,
    pub mutual: f64,
}

/// S(A|B), S(B|A) and S(A:B) with A the factors before `cut`.
pub fn conditional_mutual(rho: &DensityOperator, cut: usize) -> Result<ConditionalMutual> {
    let n = rho.shape().len();
    if cut == 0 || cut >= n {
        return Err(QinfoError::InvalidSubsystem(format!("cut {cut} does not split {n} factors")));
    }
    let a: Vec<usize> = (0..cut).collect();
    let b: Vec<usize> = (cut..n).collect();
    let sab = vn_entropy(rho);
    let sa = vn_entropy(&partial_trace(rho, &a)?);
    let sb = vn_entropy(&partial_trace(rho, &b)?);
    Ok(ConditionalMutual { a_given_b: sab - sb, b_given_a: sab - sa, mutual: sa + sb - sab })
}

/// S(ρ, ℰ) = S(W).
pub fn entropy_exchange(rho: &DensityOperator, op: &QuantumOperation) -> Result<f64> {
    Ok(entropy_matrix(&w_matrix(op, rho)?))
}

/// I(ρ, ℰ) = S(ℰ(ρ)/tr) − S(ρ, ℰ).
pub fn coherent_information(rho: &DensityOperator, op: &QuantumOperation) -> Result<f64> {
    Ok(vn_entropy(&op.apply_normalized(rho)?) - entropy_exchange(rho, op)?)
}

/// Labeled entropic quantities for one (ρ, ℰ) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyBudget {
    pub entries: Vec<(String, f64)>,
}

impl EntropyBudget {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|(l, _)| l == label).map(|(_, v)| *v)
    }
}

pub fn entropy_budget(rho: &DensityOperator, op: &QuantumOperation) -> Result<EntropyBudget> {
    let s_in = vn_entropy(rho);
    let out = op.apply_normalized(rho)?;
    let s_out = vn_entropy(&out);
    let se = entropy_exchange(rho, op)?;
    Ok(EntropyBudget {
        entries: vec![
            ("S(rho)".into(), s_in),
            ("S(rho')".into(), s_out),
            ("S_e".into(), se),
            ("I".into(), s_out - se),
            ("dS+S_e".into(), s_out - s_in + se),
        ],
    })
}

/// {p_x, ρ_x}
#[derive(Clone, Debug)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<DensityOperator>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(QinfoError::DimensionMismatch("weights and states differ in length".into()));
        }
        if weights.iter().any(|&w| w < -crate::linalg::STATE_TOL || w.is_nan()) {
            return Err(QinfoError::InvalidParameter("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > crate::linalg::STATE_TOL {
            return Err(QinfoError::InvalidParameter(format!("weights sum to {total}, expected 1")));
        }
        let d = states[0].dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(QinfoError::DimensionMismatch("ensemble members differ in dimension".into()));
        }
        Ok(Self { weights, states })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    /// Σ p_x ρ_x
    pub fn average(&self) -> DensityOperator {
        let d = self.states[0].dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (w, s) in self.weights.iter().zip(&self.states) {
            m += s.matrix() * c(*w, 0.0);
        }
        DensityOperator::new(m, self.states[0].shape().clone()).expect("mixture of states")
    }

    /// Apply a complete operation to every member.
    pub fn map(&self, op: &QuantumOperation) -> Result<Self> {
        let states = self.states.iter().map(|s| op.apply_normalized(s)).collect::<Result<Vec<_>>>()?;
        Self::new(self.weights.clone(), states)
    }
}

/// χ = S(Σ p_x ρ_x) − Σ p_x S(ρ_x).
pub fn holevo_chi(ens: &Ensemble) -> f64 {
    let mixed: f64 = ens.weights.iter().zip(&ens.states).map(|(w, s)| w * vn_entropy(s)).sum();
    vn_entropy(&ens.average()) - mixed
}

/// H(X|Y) ≤ h(p_e) + p_e log(|X| − 1) for the guess X̂ = Y; `joint[x][y]` = p(x, y).
pub fn classical_fano(joint: &[Vec<f64>]) -> Result<MetricReport> {
    let n = joint.len();
    if n < 2 || joint.iter().any(|r| r.len() != n) {
        return Err(QinfoError::DimensionMismatch("joint distribution must be square, at least 2x2".into()));
    }
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    if flat.iter().any(|&p| p < 0.0) || (flat.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(QinfoError::InvalidParameter("not a probability distribution".into()));
    }
    let py: Vec<f64> = (0..n).map(|y| (0..n).map(|x| joint[x][y]).sum()).collect();
    let h_x_given_y = shannon(&flat) - shannon(&py);
    let pe = 1.0 - (0..n).map(|i| joint[i][i]).sum::<f64>();
    let pe = pe.clamp(0.0, 1.0);
    Ok(MetricReport::inequality("classical_fano", h_x_given_y, binary_entropy(pe) + pe * ((n - 1) as f64).log2()))
}

/// S(ρ, ℰ) ≤ h(F) + (1 − F) log(d² − 1) with F the dynamic fidelity.
pub fn quantum_fano(rho: &DensityOperator, op: &QuantumOperation) -> Result<MetricReport> {
    let f = dynamic_fidelity(rho, op)?.clamp(0.0, 1.0);
    let d = rho.dim() as f64;
    let se = entropy_exchange(rho, op)?;
    Ok(MetricReport::inequality("quantum_fano", se, binary_entropy(f) + (1.0 - f) * (d * d - 1.0).log2()))
}

// ---------------------------------------------------------------------------
// Two-stage processes ρ → ρ′ → ρ″ and the purified state R″Q″E₁″E₂″.

/// Subsystem bit masks of R″Q″E₁″E₂″.
pub const SUB_Q: u8 = 1;
pub const SUB_R: u8 = 2;
pub const SUB_E1: u8 = 4;
pub const SUB_E2: u8 = 8;
const ALL_SUBS: u8 = 15;

/// System quantities that every subsystem entropy of R″Q″E₁″E₂″ reduces to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// S(ρ)
    S,
    /// S(ρ′)
    S1,
    /// S(ρ″)
    S2,
    /// S(ρ, ℰ₁)
    Se1,
    /// S(ρ′, ℰ₂)
    Se2,
    /// S(ρ, ℰ₂∘ℰ₁)
    Se21,
    /// C(ρ, ℰ₁, ℰ₂) = S(Q″E₁″)
    Corr,
}

/// The quantity equal to S(X) for a nonempty proper subset X.
pub fn quantity_of(mask: u8) -> Option<Quantity> {
    let m = if mask.count_ones() == 3 { ALL_SUBS & !mask } else { mask };
    Some(match m {
        SUB_R => Quantity::S,
        SUB_Q => Quantity::S2,
        SUB_E1 => Quantity::Se1,
        SUB_E2 => Quantity::Se2,
        x if x == SUB_R | SUB_Q || x == SUB_E1 | SUB_E2 => Quantity::Se21,
        x if x == SUB_R | SUB_E1 || x == SUB_Q | SUB_E2 => Quantity::S1,
        x if x == SUB_R | SUB_E2 || x == SUB_Q | SUB_E1 => Quantity::Corr,
        _ => return None,
    })
}

#[derive(Clone, Debug)]
pub struct TwoStage {
    pub s: f64,
    pub s1: f64,
    pub s2: f64,
    pub se1: f64,
    pub se2: f64,
    pub se21: f64,
    /// Correlation entropy from the explicit matrix U.
    pub corr: f64,
    /// |ψ⟩ on Q ⊗ R ⊗ E₁ ⊗ E₂.
    psi: ComplexVector,
    dims: [usize; 4],
}

impl TwoStage {
    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::S => self.s,
            Quantity::S1 => self.s1,
            Quantity::S2 => self.s2,
            Quantity::Se1 => self.se1,
            Quantity::Se2 => self.se2,
            Quantity::Se21 => self.se21,
            Quantity::Corr => self.corr,
        }
    }

    /// Entropy of a subsystem computed directly from the pure state.
    pub fn subsystem_entropy(&self, mask: u8) -> f64 {
        let keep: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        if keep.is_empty() || keep.len() == 4 {
            return 0.0;
        }
        entropy_matrix(&reduced_of_pure(&self.psi, &self.dims, &keep))
    }
}

/// Reduced density matrix of a pure state: Ψ Ψ† with kept factors as rows.
fn reduced_of_pure(psi: &ComplexVector, dims: &[usize], keep: &[usize]) -> ComplexMatrix {
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let dk: usize = keep.iter().map(|&i| dims[i]).product();
    let dt: usize = traced.iter().map(|&i| dims[i]).product();
    let mut m = ComplexMatrix::zeros(dk, dt);
    for (idx, z) in psi.iter().enumerate() {
        let ds = crate::linalg::digits(idx, dims);
        let r = keep.iter().fold(0, |acc, &i| acc * dims[i] + ds[i]);
        let col = traced.iter().fold(0, |acc, &i| acc * dims[i] + ds[i]);
        m[(r, col)] = *z;
    }
    &m * m.adjoint()
}

fn require_complete(op: &QuantumOperation) -> Result<()> {
    if !op.is_complete() {
        return Err(QinfoError::InvalidParameter("two-stage tables need complete operations".into()));
    }
    Ok(())
}

/// U_{ik,jl} = Σ_m ⟨k|E²_m E¹_i ρ E¹_j† E²_m†|l⟩ / tr, indexed (i, k).
pub fn correlation_matrix(rho: &DensityOperator, e1: &QuantumOperation, e2: &QuantumOperation) -> Result<ComplexMatrix> {
    let k1 = e1.kraus().len();
    let dq = e2.out_dim();
    let mut u = ComplexMatrix::zeros(k1 * dq, k1 * dq);
    for i in 0..k1 {
        for j in 0..k1 {
            let inner = &e1.kraus()[i] * rho.matrix() * e1.kraus()[j].adjoint();
            let block = e2.apply_matrix(&inner);
            for k in 0..dq {
                for l in 0..dq {
                    u[(i * dq + k, j * dq + l)] = block[(k, l)];
                }
            }
        }
    }
    let tr = u.trace().re;
    if tr <= MIN_PROBABILITY {
        return Err(QinfoError::ZeroProbability(tr));
    }
    Ok(u / c(tr, 0.0))
}

pub fn two_stage(rho: &DensityOperator, e1: &QuantumOperation, e2: &QuantumOperation) -> Result<TwoStage> {
    require_complete(e1)?;
    require_complete(e2)?;
    let second_after_first = compose(e2, e1)?;
    let rho1 = e1.apply_normalized(rho)?;
    let rho2 = second_after_first.apply_normalized(rho)?;
    let d = rho.dim();
    let (k1, k2, dq) = (e1.kraus().len(), e2.kraus().len(), e2.out_dim());
    let purified = crate::linalg::purify(rho);
    let m = ComplexMatrix::from_fn(d, d, |s, r| purified.amplitudes()[s * d + r]);
    let dims = [dq, d, k1, k2];
    let mut psi = ComplexVector::zeros(dq * d * k1 * k2);
    for (i, a) in e1.kraus().iter().enumerate() {
        for (mm, b) in e2.kraus().iter().enumerate() {
            let block = b * a * &m;
            for q in 0..dq {
                for r in 0..d {
                    psi[((q * d + r) * k1 + i) * k2 + mm] = block[(q, r)];
                }
            }
        }
    }
    Ok(TwoStage {
        s: vn_entropy(rho),
        s1: vn_entropy(&rho1),
        s2: vn_entropy(&rho2),
        se1: entropy_exchange(rho, e1)?,
        se2: entropy_exchange(&rho1, e2)?,
        se21: entropy_exchange(rho, &second_after_first)?,
        corr: entropy_matrix(&correlation_matrix(rho, e1, e2)?),
        psi,
        dims,
    })
}

/// Row (X:Y) of the subadditivity table: S(XY) ≤ S(X) + S(Y).
#[derive(Clone, Copy, Debug)]
pub struct SaRow {
    pub label: &'static str,
    pub x: u8,
    pub y: u8,
    pub lhs: Quantity,
    pub rhs: [Quantity; 2],
}

/// Row (X:Y:Z) of the strong-subadditivity table: S(XYZ) + S(Y) ≤ S(XY) + S(YZ).
#[derive(Clone, Copy, Debug)]
pub struct SsaRow {
    pub label: &'static str,
    pub x: u8,
    pub y: u8,
    pub z: u8,
    pub lhs: [Quantity; 2],
    pub rhs: [Quantity; 2],
}

use Quantity::{Corr, Se1, Se2, Se21, S, S1, S2};

pub const SA_TABLE: [SaRow; 18] = [
    SaRow { label: "R:Q", x: SUB_R, y: SUB_Q, lhs: Se21, rhs: [S, S2] },
    SaRow { label: "R:E1", x: SUB_R, y: SUB_E1, lhs: S1, rhs: [S, Se1] },
    SaRow { label: "R:E2", x: SUB_R, y: SUB_E2, lhs: Corr, rhs: [S, Se2] },
    SaRow { label: "Q:E1", x: SUB_Q, y: SUB_E1, lhs: Corr, rhs: [S2, Se1] },
    SaRow { label: "Q:E2", x: SUB_Q, y: SUB_E2, lhs: S1, rhs: [S2, Se2] },
    SaRow { label: "E1:E2", x: SUB_E1, y: SUB_E2, lhs: Se21, rhs: [Se1, Se2] },
    SaRow { label: "RQ:E1", x: SUB_R | SUB_Q, y: SUB_E1, lhs: Se2, rhs: [Se21, Se1] },
    SaRow { label: "RQ:E2", x: SUB_R | SUB_Q, y: SUB_E2, lhs: Se1, rhs: [Se21, Se2] },
    SaRow { label: "RE1:Q", x: SUB_R | SUB_E1, y: SUB_Q, lhs: Se2, rhs: [S1, S2] },
    SaRow { label: "RE1:E2", x: SUB_R | SUB_E1, y: SUB_E2, lhs: S2, rhs: [S1, Se2] },
    SaRow { label: "RE2:Q", x: SUB_R | SUB_E2, y: SUB_Q, lhs: Se1, rhs: [Corr, S2] },
    SaRow { label: "RE2:E1", x: SUB_R | SUB_E2, y: SUB_E1, lhs: S2, rhs: [Corr, Se1] },
    SaRow { label: "QE1:R", x: SUB_Q | SUB_E1, y: SUB_R, lhs: Se2, rhs: [Corr, S] },
    SaRow { label: "QE1:E2", x: SUB_Q | SUB_E1, y: SUB_E2, lhs: S, rhs: [Corr, Se2] },
    SaRow { label: "QE2:R", x: SUB_Q | SUB_E2, y: SUB_R, lhs: Se1, rhs: [S1, S] },
    SaRow { label: "QE2:E1", x: SUB_Q | SUB_E2, y: SUB_E1, lhs: S, rhs: [S1, Se1] },
    SaRow { label: "E1E2:R", x: SUB_E1 | SUB_E2, y: SUB_R, lhs: S2, rhs: [Se21, S] },
    SaRow { label: "E1E2:Q", x: SUB_E1 | SUB_E2, y: SUB_Q, lhs: S, rhs: [Se21, S2] },
];

pub const SSA_TABLE: [SsaRow; 12] = [
    SsaRow { label: "R:Q:E1", x: SUB_R, y: SUB_Q, z: SUB_E1, lhs: [Se2, S2], rhs: [Se21, Corr] },
    SsaRow { label: "Q:E1:R", x: SUB_Q, y: SUB_E1, z: SUB_R, lhs: [Se2, Se1], rhs: [Corr, S1] },
    // S(E1R) = S(ρ′) on the right-hand side.
    SsaRow { label: "E1:R:Q", x: SUB_E1, y: SUB_R, z: SUB_Q, lhs: [Se2, S], rhs: [S1, Se21] },
    SsaRow { label: "R:Q:E2", x: SUB_R, y: SUB_Q, z: SUB_E2, lhs: [Se1, S2], rhs: [Se21, S1] },
    SsaRow { label: "Q:E2:R", x: SUB_Q, y: SUB_E2, z: SUB_R, lhs: [Se1, Se2], rhs: [S1, Corr] },
    SsaRow { label: "E2:R:Q", x: SUB_E2, y: SUB_R, z: SUB_Q, lhs: [Se1, S], rhs: [Corr, Se21] },
    SsaRow { label: "R:E1:E2", x: SUB_R, y: SUB_E1, z: SUB_E2, lhs: [S2, Se1], rhs: [S1, Se21] },
    SsaRow { label: "E1:E2:R", x: SUB_E1, y: SUB_E2, z: SUB_R, lhs: [S2, Se2], rhs: [Se21, Corr] },
    SsaRow { label: "E2:R:E1", x: SUB_E2, y: SUB_R, z: SUB_E1, lhs: [S2, S], rhs: [Corr, S1] },
    SsaRow { label: "Q:E1:E2", x: SUB_Q, y: SUB_E1, z: SUB_E2, lhs: [S, Se1], rhs: [Corr, Se21] },
    SsaRow { label: "E1:E2:Q", x: SUB_E1, y: SUB_E2, z: SUB_Q, lhs: [S, Se2], rhs: [Se21, S1] },
    SsaRow { label: "E2:Q:E1", x: SUB_E2, y: SUB_Q, z: SUB_E1, lhs: [S, S2], rhs: [S1, Corr] },
];

/// Every table row evaluated on one two-stage process, plus the check that
/// each tabulated quantity equals the direct subsystem entropy.
pub fn two_stage_reports(ts: &TwoStage) -> Vec<MetricReport> {
    let mut out = vec![];
    let direct = |m: u8| ts.subsystem_entropy(m);
    for row in SA_TABLE {
        let lhs = ts.get(row.lhs);
        let rhs = ts.get(row.rhs[0]) + ts.get(row.rhs[1]);
        out.push(MetricReport::inequality(format!("sa({})", row.label), lhs, rhs));
        let dl = direct(row.x | row.y);
        let dr = direct(row.x) + direct(row.y);
        out.push(MetricReport::equality(format!("sa_terms({})", row.label), lhs + rhs, dl + dr));
    }
    for row in SSA_TABLE {
        let lhs = ts.get(row.lhs[0]) + ts.get(row.lhs[1]);
        let rhs = ts.get(row.rhs[0]) + ts.get(row.rhs[1]);
        out.push(MetricReport::inequality(format!("ssa({})", row.label), lhs, rhs));
        let dl = direct(row.x | row.y | row.z) + direct(row.y);
        let dr = direct(row.x | row.y) + direct(row.y | row.z);
        out.push(MetricReport::equality(format!("ssa_terms({})", row.label), lhs + rhs, dl + dr));
    }
    out.push(MetricReport::equality("correlation_entropy", ts.corr, direct(SUB_Q | SUB_E1)));
    out
}

// ---------------------------------------------------------------------------
// Fuzz families.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyFamily {
    Subadditivity,
    StrongSubadditivity,
    ConditionalConcavity,
    JointEntropy,
    MeasurementIncreases,
    EnsembleBound,
    StrengthenedConvexity,
    RelativeJointConvexity,
    ConditionalSubadditivity,
    SecondEntrySubadditivity,
    DataProcessing,
    SecondLaw,
    HolevoMonotone,
    QuantumFano,
    TwoStageTables,
}

impl EntropyFamily {
    pub const ALL: [EntropyFamily; 15] = [
        Self::Subadditivity,
        Self::StrongSubadditivity,
        Self::ConditionalConcavity,
        Self::JointEntropy,
        Self::MeasurementIncreases,
        Self::EnsembleBound,
        Self::StrengthenedConvexity,
        Self::RelativeJointConvexity,
        Self::ConditionalSubadditivity,
        Self::SecondEntrySubadditivity,
        Self::DataProcessing,
        Self::SecondLaw,
        Self::HolevoMonotone,
        Self::QuantumFano,
        Self::TwoStageTables,
    ];
}

/// Reduced state of a Haar-random pure state with a random environment size.
pub fn fuzz_state(shape: &SystemShape, rng: &mut QRng) -> DensityOperator {
    let env = rng.random_range(1..=shape.total());
    random_density_env(shape, env, rng)
}

/// Stinespring channel with a Haar-random isometry and 1..=4 Kraus operators.
pub fn fuzz_channel(d: usize, rng: &mut QRng) -> QuantumOperation {
    let k = rng.random_range(1..=4);
    random_channel_on(d, k, rng)
}

fn full_rank(d: usize, rng: &mut QRng) -> DensityOperator {
    random_density_env(&SystemShape::single(d), d, rng)
}

fn small_dim(rng: &mut QRng) -> usize {
    if rng.random_bool(0.7) {
        2
    } else {
        3
    }
}

fn random_weights(n: usize, rng: &mut QRng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / t).collect()
}

fn mixture(w: &[f64], states: &[DensityOperator]) -> DensityOperator {
    Ensemble::new(w.to_vec(), states.to_vec()).expect("valid ensemble").average()
}

fn entropy_of(rho: &DensityOperator, keep: &[usize]) -> Result<f64> {
    Ok(vn_entropy(&partial_trace(rho, keep)?))
}

/// One random instance of an entropy inequality family.
pub fn entropy_family_instance(family: EntropyFamily, rng: &mut QRng) -> Result<Vec<MetricReport>> {
    Ok(match family {
        EntropyFamily::Subadditivity => {
            let (da, db) = (small_dim(rng), small_dim(rng));
            let rho = fuzz_state(&SystemShape::new(vec![da, db])?, rng);
            let (sa, sb, sab) = (entropy_of(&rho, &[0])?, entropy_of(&rho, &[1])?, vn_entropy(&rho));
            vec![
                MetricReport::inequality("subadditivity", sab, sa + sb),
                MetricReport::inequality("araki_lieb", (sa - sb).abs(), sab),
            ]
        }
        EntropyFamily::StrongSubadditivity => {
            let rho = fuzz_state(&SystemShape::qubits(3), rng);
            let lhs = vn_entropy(&rho) + entropy_of(&rho, &[1])?;
            let rhs = entropy_of(&rho, &[0, 1])? + entropy_of(&rho, &[1, 2])?;
            vec![MetricReport::inequality("strong_subadditivity", lhs, rhs)]
        }
        EntropyFamily::ConditionalConcavity => {
            let shape = SystemShape::qubits(2);
            let n = rng.random_range(2..=3);
            let states: Vec<DensityOperator> = (0..n).map(|_| fuzz_state(&shape, rng)).collect();
            let w = random_weights(n, rng);
            let mut avg = 0.0;
            for (p, s) in w.iter().zip(&states) {
                avg += p * conditional_mutual(s, 1)?.a_given_b;
            }
            let mixed = conditional_mutual(&mixture(&w, &states), 1)?.a_given_b;
            vec![MetricReport::inequality("conditional_concavity", avg, mixed)]
        }
        EntropyFamily::JointEntropy => {
            let n = rng.random_range(2..=4);
            let d = small_dim(rng);
            let w = random_weights(n, rng);
            let states: Vec<DensityOperator> = (0..n).map(|_| fuzz_state(&SystemShape::single(d), rng)).collect();
            let mut m = ComplexMatrix::zeros(n * d, n * d);
            for (i, (p, s)) in w.iter().zip(&states).enumerate() {
                m += tensor(&projector(&ket(n, i)), s.matrix()) * c(*p, 0.0);
            }
            let joint = entropy_matrix(&m);
            let rhs = shannon(&w) + w.iter().zip(&states).map(|(p, s)| p * vn_entropy(s)).sum::<f64>();
            vec![MetricReport::equality("joint_entropy", joint, rhs)]
        }
        EntropyFamily::MeasurementIncreases => {
            let d = rng.random_range(2..=4);
            let rho = fuzz_state(&SystemShape::single(d), rng);
            let u = haar_unitary(d, rng);
            // Random coarse-graining of a random orthonormal basis into projectors.
            let mut cols: Vec<usize> = (0..d).collect();
            cols.shuffle(rng);
            let groups = rng.random_range(2..=d);
            let mut projs = vec![ComplexMatrix::zeros(d, d); groups];
            for (k, &col) in cols.iter().enumerate() {
                let v: ComplexVector = u.column(col).into_owned();
                projs[k % groups] += projector(&v);
            }
            let mut out = ComplexMatrix::zeros(d, d);
            for p in &projs {
                out += p * rho.matrix() * p;
            }
            vec![MetricReport::inequality("measurement_increases_entropy", vn_entropy(&rho), entropy_matrix(&out))]
        }
        EntropyFamily::EnsembleBound => {
            let n = rng.random_range(2..=4);
            let d = small_dim(rng);
            let w = random_weights(n, rng);
            let states: Vec<DensityOperator> = (0..n).map(|_| fuzz_state(&SystemShape::single(d), rng)).collect();
            let rhs = shannon(&w) + w.iter().zip(&states).map(|(p, s)| p * vn_entropy(s)).sum::<f64>();
            let ens = Ensemble::new(w, states)?;
            let chi = holevo_chi(&ens);
            let s_avg = vn_entropy(&ens.average());
            vec![
                MetricReport::inequality("ensemble_bound", s_avg, rhs),
                MetricReport::inequality("holevo_nonnegative", 0.0, chi),
                MetricReport::inequality("holevo_below_entropy", chi, s_avg),
                MetricReport::inequality("entropy_below_log_d", s_avg, (d as f64).log2()),
            ]
        }
        EntropyFamily::StrengthenedConvexity => {
            let n = rng.random_range(2..=3);
            let d = small_dim(rng);
            let p = random_weights(n, rng);
            let q = random_weights(n, rng);
            let a: Vec<DensityOperator> = (0..n).map(|_| fuzz_state(&SystemShape::single(d), rng)).collect();
            let b: Vec<DensityOperator> = (0..n).map(|_| full_rank(d, rng)).collect();
            let lhs = relative_entropy(&mixture(&p, &a), &mixture(&q, &b))?;
            let mut rhs: f64 = p.iter().zip(&q).map(|(x, y)| x * (x / y).log2()).sum();
            for i in 0..n {
                rhs += p[i] * relative_entropy(&a[i], &b[i])?;
            }
            vec![MetricReport::inequality("strengthened_convexity", lhs, rhs)]
        }
        EntropyFamily::RelativeJointConvexity => {
            let d = small_dim(rng);
            let p = random_weights(2, rng);
            let a: Vec<DensityOperator> = (0..2).map(|_| fuzz_state(&SystemShape::single(d), rng)).collect();
            let b: Vec<DensityOperator> = (0..2).map(|_| full_rank(d, rng)).collect();
            let lhs = relative_entropy(&mixture(&p, &a), &mixture(&p, &b))?;
            let rhs = p[0] * relative_entropy(&a[0], &b[0])? + p[1] * relative_entropy(&a[1], &b[1])?;
            vec![
                MetricReport::inequality("relative_joint_convexity", lhs, rhs),
                MetricReport::inequality("klein", 0.0, relative_entropy(&a[0], &b[0])?),
            ]
        }
        EntropyFamily::ConditionalSubadditivity => {
            // Factors ordered A1 A2 B1 B2.
            let rho = fuzz_state(&SystemShape::qubits(4), rng);
            let lhs = vn_entropy(&rho) - entropy_of(&rho, &[2, 3])?;
            let rhs = entropy_of(&rho, &[0, 2])? - entropy_of(&rho, &[2])? + entropy_of(&rho, &[1, 3])?
                - entropy_of(&rho, &[3])?;
            vec![MetricReport::inequality("conditional_subadditivity", lhs, rhs)]
        }
        EntropyFamily::SecondEntrySubadditivity => {
            let rho = fuzz_state(&SystemShape::qubits(3), rng);
            let lhs = vn_entropy(&rho) + entropy_of(&rho, &[1])? + entropy_of(&rho, &[2])?;
            let rhs = entropy_of(&rho, &[0, 1])? + entropy_of(&rho, &[1, 2])? + entropy_of(&rho, &[0, 2])?;
            vec![MetricReport::inequality("second_entry_subadditivity", lhs, rhs)]
        }
        EntropyFamily::DataProcessing => {
            let d = small_dim(rng);
            let rho = fuzz_state(&SystemShape::single(d), rng);
            let e1 = fuzz_channel(d, rng);
            let e2 = fuzz_channel(d, rng);
            let i1 = coherent_information(&rho, &e1)?;
            let i21 = coherent_information(&rho, &compose(&e2, &e1)?)?;
            vec![
                MetricReport::inequality("data_processing_first", i1, vn_entropy(&rho)),
                MetricReport::inequality("data_processing_second", i21, i1),
            ]
        }
        EntropyFamily::SecondLaw => {
            let d = small_dim(rng);
            let rho = fuzz_state(&SystemShape::single(d), rng);
            let e = fuzz_channel(d, rng);
            let b = entropy_budget(&rho, &e)?;
            vec![MetricReport::inequality("second_law", 0.0, b.get("dS+S_e").unwrap_or(f64::NAN))]
        }
        EntropyFamily::HolevoMonotone => {
            let n = rng.random_range(2..=4);
            let d = small_dim(rng);
            let w = random_weights(n, rng);
            let states: Vec<DensityOperator> = (0..n).map(|_| fuzz_state(&SystemShape::single(d), rng)).collect();
            let ens = Ensemble::new(w, states)?;
            let dout = small_dim(rng);
            let k = rng.random_range(1..=4).max(d.div_ceil(dout));
            let e = random_channel(&SystemShape::single(d), &SystemShape::single(dout), k, rng);
            vec![MetricReport::inequality("holevo_monotone", holevo_chi(&ens.map(&e)?), holevo_chi(&ens))]
        }
        EntropyFamily::QuantumFano => {
            let d = small_dim(rng);
            let rho = fuzz_state(&SystemShape::single(d), rng);
            let e = fuzz_channel(d, rng);
            vec![quantum_fano(&rho, &e)?]
        }
        EntropyFamily::TwoStageTables => {
            let d = 2;
            let rho = fuzz_state(&SystemShape::single(d), rng);
            let e1 = fuzz_channel(d, rng);
            let e2 = fuzz_channel(d, rng);
            two_stage_reports(&two_stage(&rho, &e1, &e2)?)
        }
    })
}

/// `samples` instances of every family.
pub fn entropy_inequality_suite(samples: usize, rng: &mut QRng) -> Result<Vec<MetricReport>> {
    let mut out = vec![];
    for family in EntropyFamily::ALL {
        for _ in 0..samples {
            out.extend(entropy_family_instance(family, rng)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::linalg::{hadamard, identity, partial_trace_matrix, pauli_x, unit, PureState};
    use crate::ops::channels::{decohering, pauli_randomizer};
    use crate::ops::{environment_model, tensor_ops};
    use crate::random::{random_density, seeded};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bell() -> DensityOperator {
        let mut v = ComplexVector::zeros(4);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.);
        v[3] = c(std::f64::consts::FRAC_1_SQRT_2, 0.);
        PureState::new(v, SystemShape::qubits(2)).unwrap().density()
    }

    #[test]
    fn entropy_values() {
        assert_abs_diff_eq!(vn_entropy(&DensityOperator::maximally_mixed(SystemShape::single(8))), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vn_entropy(&bell()), 0.0, epsilon = 1e-12);
        let rho = DensityOperator::diagonal(&[0.75, 0.25]).unwrap();
        let oracle = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert_abs_diff_eq!(vn_entropy(&rho), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(vn_entropy(&rho), 0.811_278_124_459_132_8, epsilon = 1e-12);
        assert_abs_diff_eq!(binary_entropy(0.0), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.5), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn relative_entropy_values() {
        let mut rng = seeded(2);
        let rho = random_density(&SystemShape::single(3), &mut rng);
        assert_abs_diff_eq!(relative_entropy(&rho, &rho).unwrap(), 0.0, epsilon = 1e-10);
        let mixed = DensityOperator::maximally_mixed(SystemShape::single(3));
        assert_abs_diff_eq!(relative_entropy(&rho, &mixed).unwrap(), 3f64.log2() - vn_entropy(&rho), epsilon = 1e-10);
        let z0 = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        let z1 = DensityOperator::diagonal(&[0.0, 1.0]).unwrap();
        assert_eq!(relative_entropy(&z0, &z1).unwrap(), f64::INFINITY);
        assert!(relative_entropy(&z0, &mixed).is_err());
    }

    #[test]
    fn conditional_examples() {
        let b = conditional_mutual(&bell(), 1).unwrap();
        assert_abs_diff_eq!(b.a_given_b, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.b_given_a, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.mutual, 2.0, epsilon = 1e-12);
        let mut rng = seeded(4);
        let prod = random_density(&SystemShape::single(2), &mut rng).tensor(&random_density(&SystemShape::single(3), &mut rng));
        assert_abs_diff_eq!(conditional_mutual(&prod, 1).unwrap().mutual, 0.0, epsilon = 1e-10);
        let cl = DensityOperator::new(diag4(&[0.5, 0.0, 0.0, 0.5]), SystemShape::qubits(2)).unwrap();
        let r = conditional_mutual(&cl, 1).unwrap();
        assert_abs_diff_eq!(r.a_given_b, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.mutual, 1.0, epsilon = 1e-12);
        assert!(conditional_mutual(&cl, 2).is_err());
    }

    fn diag4(v: &[f64]) -> ComplexMatrix {
        crate::linalg::diag(v)
    }

    #[test]
    fn exchange_examples() {
        let half = DensityOperator::maximally_mixed(SystemShape::single(2));
        let u = QuantumOperation::unitary(hadamard(), SystemShape::single(2)).unwrap();
        assert_abs_diff_eq!(entropy_exchange(&half, &u).unwrap(), 0.0, epsilon = 1e-12);
        let plus = DensityOperator::from_matrix(hadamard() * unit(2, 0, 0) * hadamard()).unwrap();
        assert_abs_diff_eq!(entropy_exchange(&plus, &decohering()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(coherent_information(&half, &pauli_randomizer()).unwrap(), -1.0, epsilon = 1e-12);
        let mut rng = seeded(6);
        let rho = random_density(&SystemShape::single(3), &mut rng);
        let id = QuantumOperation::identity(SystemShape::single(3));
        assert_abs_diff_eq!(coherent_information(&rho, &id).unwrap(), vn_entropy(&rho), epsilon = 1e-10);
    }

    #[test]
    fn classical_channel_embedding_exchange() {
        // Binary channel p(y|x) on input distribution p(x); Kraus √p(y|x)|y⟩⟨x|.
        let px = [0.3, 0.7];
        let pyx = [[0.9, 0.1], [0.2, 0.8]];
        let mut kraus = vec![];
        for x in 0..2 {
            for y in 0..2 {
                kraus.push(unit(2, y, x) * c(pyx[x][y], 0.0).sqrt());
            }
        }
        let op = QuantumOperation::from_kraus(kraus).unwrap();
        let rho = DensityOperator::diagonal(&px).unwrap();
        let joint: Vec<f64> = (0..4).map(|k| px[k / 2] * pyx[k / 2][k % 2]).collect();
        assert_abs_diff_eq!(entropy_exchange(&rho, &op).unwrap(), shannon(&joint), epsilon = 1e-12);
        let py = [joint[0] + joint[2], joint[1] + joint[3]];
        assert_abs_diff_eq!(coherent_information(&rho, &op).unwrap(), shannon(&py) - shannon(&joint), epsilon = 1e-12);
        let w = w_matrix(&op, &rho).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { joint[i] } else { 0.0 };
                assert_abs_diff_eq!(w[(i, j)].norm(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn holevo_examples() {
        let zero = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        for k in 0..=10 {
            let th = std::f64::consts::PI * k as f64 / 10.0;
            let v = ComplexVector::from_vec(vec![c(th.cos(), 0.), c(th.sin(), 0.)]);
            let other = DensityOperator::from_matrix(projector(&v)).unwrap();
            let ens = Ensemble::new(vec![0.5, 0.5], vec![zero.clone(), other]).unwrap();
            assert_abs_diff_eq!(holevo_chi(&ens), binary_entropy((1.0 + th.cos()) / 2.0), epsilon = 1e-9);
        }
        let same = Ensemble::new(vec![0.4, 0.6], vec![zero.clone(), zero.clone()]).unwrap();
        assert_abs_diff_eq!(holevo_chi(&same), 0.0, epsilon = 1e-12);
        assert!(Ensemble::new(vec![0.4, 0.4], vec![zero.clone(), zero]).is_err());
    }

    #[test]
    fn fano_examples() {
        let half = DensityOperator::maximally_mixed(SystemShape::single(2));
        let u = QuantumOperation::unitary(pauli_x(), SystemShape::single(2)).unwrap();
        let r = quantum_fano(&half, &u).unwrap();
        assert!(r.holds());
        assert_abs_diff_eq!(r.bound.unwrap().lhs, 0.0, epsilon = 1e-12);
        let r = quantum_fano(&half, &pauli_randomizer()).unwrap();
        let b = r.bound.unwrap();
        assert_abs_diff_eq!(b.lhs, 2.0, epsilon = 1e-12);
        // d = 2, so log(d² − 1) = log 3 and the bound is met with equality.
        assert_abs_diff_eq!(b.rhs, binary_entropy(0.25) + 0.75 * 3f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.rhs, 2.0, epsilon = 1e-12);
        // Perfect guessing: p_e = 0 forces H(X|Y) = 0.
        let r = classical_fano(&[vec![0.3, 0.0], vec![0.0, 0.7]]).unwrap();
        assert_abs_diff_eq!(r.bound.unwrap().lhs, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.bound.unwrap().rhs, 0.0, epsilon = 1e-12);
        assert!(classical_fano(&[vec![0.2, 0.1, 0.0], vec![0.05, 0.3, 0.05], vec![0.0, 0.1, 0.2]]).unwrap().holds());
    }

    #[test]
    fn quantity_masks_cover_all_subsets() {
        for m in 1u8..15 {
            assert!(quantity_of(m).is_some(), "{m}");
        }
        assert_eq!(quantity_of(SUB_R | SUB_Q | SUB_E1), Some(Quantity::Se2));
    }

    #[test]
    fn two_stage_tables_consistent() {
        let mut rng = seeded(7);
        for _ in 0..20 {
            let rho = fuzz_state(&SystemShape::single(2), &mut rng);
            let e1 = fuzz_channel(2, &mut rng);
            let e2 = fuzz_channel(2, &mut rng);
            let ts = two_stage(&rho, &e1, &e2).unwrap();
            for m in 1u8..15 {
                let q = quantity_of(m).unwrap();
                assert_abs_diff_eq!(ts.get(q), ts.subsystem_entropy(m), epsilon = 1e-9);
            }
            for r in two_stage_reports(&ts) {
                assert!(r.holds(), "{r:?}");
            }
        }
    }

    #[test]
    fn exchange_equals_environment_entropy() {
        let mut rng = seeded(9);
        for _ in 0..10 {
            let rho = random_density(&SystemShape::single(2), &mut rng);
            let e = random_channel_on(2, 3, &mut rng);
            let model = environment_model(&e).unwrap();
            let d = model.system_dim;
            let m = model.env_dim;
            let init = tensor(rho.matrix(), &(&model.env_initial * model.env_initial.adjoint()));
            let out = &model.unitary * init * model.unitary.adjoint();
            let env = partial_trace_matrix(&out, &[d, m], &[1]).unwrap();
            assert_abs_diff_eq!(entropy_exchange(&rho, &e).unwrap(), entropy_matrix(&env), epsilon = 1e-9);
        }
    }

    #[test]
    fn small_suite_passes() {
        let mut rng = seeded(10);
        for r in entropy_inequality_suite(10, &mut rng).unwrap() {
            assert!(r.holds(), "{r:?}");
        }
    }

    #[test]
    fn triangle_equality_for_pure_states() {
        let mut rng = seeded(11);
        let psi = PureState::new(crate::random::random_pure(6, &mut rng), SystemShape::new(vec![2, 3]).unwrap()).unwrap();
        let rho = psi.density();
        let sa = entropy_of(&rho, &[0]).unwrap();
        let sb = entropy_of(&rho, &[1]).unwrap();
        assert_abs_diff_eq!(vn_entropy(&rho), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((sa - sb).abs(), 0.0, epsilon = 1e-9);
        let _ = identity(2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn chi_never_increases(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            for r in entropy_family_instance(EntropyFamily::HolevoMonotone, &mut rng).unwrap() {
                prop_assert!(r.holds(), "{:?}", r);
            }
        }

        #[test]
        fn coherent_information_convex_in_operation(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let rho = random_density(&SystemShape::single(2), &mut rng);
            let e1 = random_channel_on(2, 2, &mut rng);
            let e2 = random_channel_on(2, 3, &mut rng);
            let p: f64 = rng.random_range(0.0..1.0);
            let mix = QuantumOperation::sum(&[e1.scaled(p), e2.scaled(1.0 - p)]).unwrap();
            let lhs = coherent_information(&rho, &mix).unwrap();
            let rhs = p * coherent_information(&rho, &e1).unwrap() + (1.0 - p) * coherent_information(&rho, &e2).unwrap();
            prop_assert!(lhs <= rhs + 1e-9);
        }

        #[test]
        fn coherent_information_additive(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let r1 = random_density(&SystemShape::single(2), &mut rng);
            let r2 = random_density(&SystemShape::single(2), &mut rng);
            let e1 = random_channel_on(2, 2, &mut rng);
            let e2 = random_channel_on(2, 2, &mut rng);
            let joint = coherent_information(&r1.tensor(&r2), &tensor_ops(&e1, &e2)).unwrap();
            let sep = coherent_information(&r1, &e1).unwrap() + coherent_information(&r2, &e2).unwrap();
            prop_assert!((joint - sep).abs() < 1e-9);
        }

        #[test]
        fn relative_entropy_joint_convexity(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            for r in entropy_family_instance(EntropyFamily::RelativeJointConvexity, &mut rng).unwrap() {
                prop_assert!(r.holds(), "{:?}", r);
            }
        }
    }
}
