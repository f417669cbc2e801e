//! Capacity bounds from coherent-information maximization, observed channels,
//! the counterexamples for the coherent information, the qubit communication
//! region and Schmidt-number bounds on communication cost.

use rand::Rng;
use rayon::prelude::*;

use crate::entropy::{binary_entropy, coherent_information, holevo_chi, vn_entropy, Ensemble};
use crate::error::{QinfoError, Result};
use crate::linalg::{
    c, digits, identity, ket, max_abs, partial_trace, pauli_x, pauli_y, pauli_z, projector, schmidt_operator, unit,
    ComplexMatrix, ComplexVector, DensityOperator, SystemShape, C64,
};
use crate::metrics::{dynamic_fidelity, MetricReport};
use crate::ops::{compose, tensor_ops, QuantumOperation, MAP_TOL, MIN_PROBABILITY};
use crate::optimize::nelder_mead;
use crate::random::{haar_unitary, random_channel, random_channel_on, random_density, random_pure, seeded, QRng};

/// Default random restarts for each maximization.
pub const DEFAULT_RESTARTS: usize = 30;
/// Objective value standing in for a failed evaluation.
const PENALTY: f64 = 1e6;

/// Settings for a gradient-free maximization over input states.
#[derive(Clone, Debug)]
pub struct CapacityBudget {
    pub restarts: usize,
    /// Iterations per Nelder–Mead pass; each restart runs two passes.
    pub max_iters: u64,
    pub tol: f64,
    pub seed: u64,
    /// Extra starting states tried before the random restarts.
    pub starts: Vec<DensityOperator>,
}

impl Default for CapacityBudget {
    fn default() -> Self {
        Self { restarts: DEFAULT_RESTARTS, max_iters: 4000, tol: 1e-10, seed: 0, starts: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartRecord {
    pub restart: usize,
    pub value: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Best value found; a lower bound on the block quantity, not a certified maximum.
#[derive(Clone, Debug)]
pub struct CapacityEstimate {
    pub n: usize,
    /// Bits per block of n channel uses.
    pub value: f64,
    pub argmax_state: DensityOperator,
    pub optimizer_trace: Vec<RestartRecord>,
}

impl CapacityEstimate {
    pub fn per_use(&self) -> f64 {
        self.value / self.n as f64
    }
}

/// ρ = AA†/tr(AA†) with A read from 2d² reals (real parts first).
fn state_from_params(p: &[f64], d: usize) -> Option<DensityOperator> {
    let a = ComplexMatrix::from_fn(d, d, |i, j| c(p[i * d + j], p[d * d + i * d + j]));
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    if !(tr > 1e-300) || !tr.is_finite() {
        return None;
    }
    DensityOperator::new(m / c(tr, 0.0), SystemShape::single(d)).ok()
}

fn params_from_matrix(a: &ComplexMatrix) -> Vec<f64> {
    let d = a.nrows();
    let mut p = vec![0.0; 2 * d * d];
    for i in 0..d {
        for j in 0..d {
            p[i * d + j] = a[(i, j)].re;
            p[d * d + i * d + j] = a[(i, j)].im;
        }
    }
    p
}

/// Maximize f over density operators on dimension d, as a partial trace of a
/// Haar-initialized pure state, with two Nelder–Mead passes per restart.
pub fn maximize_over_states(
    d: usize,
    f: &(dyn Fn(&DensityOperator) -> Result<f64> + Sync),
    budget: &CapacityBudget,
) -> Result<(f64, DensityOperator, Vec<RestartRecord>)> {
    let obj = |p: &[f64]| match state_from_params(p, d).map(|r| f(&r)) {
        Some(Ok(v)) if v.is_finite() => -v,
        _ => PENALTY,
    };
    let mut rng = seeded(budget.seed);
    let mut x0s = vec![];
    for s in &budget.starts {
        if s.dim() != d {
            return Err(QinfoError::DimensionMismatch(format!("start state of dimension {} for search in {d}", s.dim())));
        }
        x0s.push(params_from_matrix(&crate::linalg::sqrt_psd(s.matrix())));
    }
    for _ in 0..budget.restarts {
        let psi = random_pure(d * d, &mut rng);
        x0s.push(params_from_matrix(&ComplexMatrix::from_fn(d, d, |i, j| psi[i * d + j])));
    }
    let runs = x0s
        .par_iter()
        .enumerate()
        .map(|(restart, x0)| {
            let first = nelder_mead(&obj, x0, 0.3, budget.max_iters, budget.tol)?;
            let second = nelder_mead(&obj, &first.x, 0.05, budget.max_iters, budget.tol)?;
            let iterations = first.iterations + second.iterations;
            let converged = second.iterations < budget.max_iters;
            let m = if second.value <= first.value { second } else { first };
            Ok((RestartRecord { restart, value: -m.value, iterations, converged }, m.x))
        })
        .collect::<Result<Vec<_>>>()?;
    let (v, x) = best_restart(&runs)?;
    let trace = runs.into_iter().map(|r| r.0).collect();
    let state = state_from_params(&x, d).ok_or_else(|| QinfoError::Optimizer("degenerate optimum".into()))?;
    Ok((v, state, trace))
}

/// Highest value, earliest restart on ties, so the merge does not depend on scheduling.
fn best_restart(runs: &[(RestartRecord, Vec<f64>)]) -> Result<(f64, Vec<f64>)> {
    if !runs.iter().any(|r| r.0.converged) {
        return Err(QinfoError::Optimizer("budget exhausted without convergence".into()));
    }
    let best = runs
        .iter()
        .max_by(|a, b| a.0.value.total_cmp(&b.0.value).then(b.0.restart.cmp(&a.0.restart)))
        .ok_or_else(|| QinfoError::Optimizer("no restarts".into()))?;
    Ok((best.0.value, best.1.clone()))
}

/// n-fold tensor power of an operation.
pub fn tensor_power(op: &QuantumOperation, n: usize) -> Result<QuantumOperation> {
    if n == 0 {
        return Err(QinfoError::InvalidParameter("block size must be at least 1".into()));
    }
    let mut out = op.clone();
    for _ in 1..n {
        out = tensor_ops(&out, op);
    }
    Ok(out)
}

/// Operations whose input is a single factor of the total dimension.
fn flatten_input(op: &QuantumOperation) -> Result<QuantumOperation> {
    op.with_shapes(SystemShape::single(op.in_dim()), op.out_shape().clone())
}

/// max_ρ I(ρ, 𝒩^{⊗n}); the unitary-encoding bound C_n.
pub fn coherent_info_max(channel: &QuantumOperation, n: usize, budget: &CapacityBudget) -> Result<CapacityEstimate> {
    if !channel.is_complete() {
        return Err(QinfoError::Nonphysical("capacity estimate needs a complete channel".into()));
    }
    let block = flatten_input(&tensor_power(channel, n)?)?;
    let d = block.in_dim();
    let f = |rho: &DensityOperator| coherent_information(rho, &block);
    let (value, argmax_state, optimizer_trace) = maximize_over_states(d, &f, budget)?;
    Ok(CapacityEstimate { n, value, argmax_state, optimizer_trace })
}

/// Isometry (as Kraus operators) from the columns of a Stiefel point.
fn encoding_from_params(p: &[f64], d_src: usize, d_in: usize, kraus: usize) -> QuantumOperation {
    let rows = d_in * kraus;
    let half = rows * d_src;
    let m = ComplexMatrix::from_fn(rows, d_src, |i, j| c(p[i * d_src + j], p[half + i * d_src + j]));
    let svd = m.svd(true, true);
    let v = svd.u.expect("requested") * svd.v_t.expect("requested");
    let ks = (0..kraus).map(|k| v.rows(k * d_in, d_in).into_owned()).collect();
    QuantumOperation::new(ks, SystemShape::single(d_src), SystemShape::single(d_in)).expect("consistent shapes")
}

/// max over source states ρ and encodings 𝒞 of I(ρ, 𝒩^{⊗n} ∘ 𝒞); the general-encoding bound.
///
/// Encodings are parametrized as isometries into d_in ⊗ C^kraus, searched
/// jointly with ρ. Reported separately from `coherent_info_max`.
pub fn general_encoding_max(
    channel: &QuantumOperation,
    n: usize,
    source_dim: usize,
    encoding_kraus: usize,
    budget: &CapacityBudget,
) -> Result<CapacityEstimate> {
    if !channel.is_complete() {
        return Err(QinfoError::Nonphysical("capacity estimate needs a complete channel".into()));
    }
    let block = flatten_input(&tensor_power(channel, n)?)?;
    let (ds, di, k) = (source_dim, block.in_dim(), encoding_kraus.max(1));
    let n_rho = 2 * ds * ds;
    let n_enc = 2 * di * k * ds;
    let eval = |p: &[f64]| -> Option<(f64, DensityOperator)> {
        let rho = state_from_params(&p[..n_rho], ds)?;
        let enc = encoding_from_params(&p[n_rho..], ds, di, k);
        let total = compose(&block, &enc).ok()?;
        let v = coherent_information(&rho, &total).ok()?;
        v.is_finite().then_some((v, rho))
    };
    let obj = |p: &[f64]| eval(p).map_or(PENALTY, |(v, _)| -v);
    let mut rng = seeded(budget.seed);
    let x0s: Vec<Vec<f64>> = (0..budget.restarts)
        .map(|_| {
            let mut x0: Vec<f64> = (0..n_rho + n_enc).map(|_| rng.random_range(-1.0..1.0)).collect();
            let psi = random_pure(ds * ds, &mut rng);
            x0[..n_rho].copy_from_slice(&params_from_matrix(&ComplexMatrix::from_fn(ds, ds, |i, j| psi[i * ds + j])));
            x0
        })
        .collect();
    let runs = x0s
        .par_iter()
        .enumerate()
        .map(|(restart, x0)| {
            let first = nelder_mead(&obj, x0, 0.3, budget.max_iters, budget.tol)?;
            let second = nelder_mead(&obj, &first.x, 0.05, budget.max_iters, budget.tol)?;
            let converged = second.iterations < budget.max_iters;
            let iterations = first.iterations + second.iterations;
            let m = if second.value <= first.value { second } else { first };
            Ok((RestartRecord { restart, value: -m.value, iterations, converged }, m.x))
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, x) = best_restart(&runs)?;
    let trace = runs.into_iter().map(|r| r.0).collect();
    let (value, argmax_state) = eval(&x).ok_or_else(|| QinfoError::Optimizer("degenerate optimum".into()))?;
    Ok(CapacityEstimate { n, value, argmax_state, optimizer_trace: trace })
}

/// A channel together with a classical record: branches 𝒩_m summing to a complete operation.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedChannel {
    branches: Vec<QuantumOperation>,
}

impl ObservedChannel {
    pub fn new(branches: Vec<QuantumOperation>) -> Result<Self> {
        let sum = QuantumOperation::sum(&branches)?;
        if !sum.is_complete() {
            return Err(QinfoError::Nonphysical("observed branches do not sum to a complete operation".into()));
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[QuantumOperation] {
        &self.branches
    }

    /// 𝒩 = Σ_m 𝒩_m, forgetting the record.
    pub fn unobserved(&self) -> Result<QuantumOperation> {
        QuantumOperation::sum(&self.branches)
    }

    /// ℳ(ρ) = Σ_m 𝒩_m(ρ) ⊗ |m⟩⟨m|.
    pub fn embed(&self) -> Result<QuantumOperation> {
        let m = self.branches.len();
        let first = &self.branches[0];
        let mut kraus = vec![];
        for (i, b) in self.branches.iter().enumerate() {
            let flag = ComplexMatrix::from_column_slice(m, 1, ket(m, i).as_slice());
            for k in b.kraus() {
                kraus.push(k.kronecker(&flag));
            }
        }
        let out = if m >= 2 { first.out_shape().concat(&SystemShape::single(m)) } else { first.out_shape().clone() };
        QuantumOperation::new(kraus, first.in_shape().clone(), out)
    }

    /// Branches of n independent uses, one per record (m_1, …, m_n).
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(QinfoError::InvalidParameter("block size must be at least 1".into()));
        }
        let mut out = self.branches.clone();
        for _ in 1..n {
            out = out.iter().flat_map(|a| self.branches.iter().map(move |b| tensor_ops(a, b))).collect();
        }
        Self::new(out)
    }

    /// Σ_m tr(𝒩_m(ρ)) I(ρ, 𝒩_m), skipping branches that never occur.
    pub fn average_coherent_information(&self, rho: &DensityOperator) -> Result<f64> {
        let mut total = 0.0;
        for b in &self.branches {
            let p = b.apply(rho)?.trace;
            if p > MIN_PROBABILITY {
                total += p * coherent_information(rho, b)?;
            }
        }
        Ok(total)
    }
}

fn qubit_op(kraus: Vec<ComplexMatrix>) -> QuantumOperation {
    QuantumOperation::new(kraus, SystemShape::qubits(1), SystemShape::qubits(1)).expect("qubit Kraus")
}

/// Teleportation without the classical message: branch m applies σ_m with weight ¼.
pub fn teleportation_observed() -> ObservedChannel {
    let ops = [identity(2), pauli_x(), pauli_y(), pauli_z()];
    ObservedChannel::new(ops.iter().map(|s| qubit_op(vec![s * c(0.5, 0.0)])).collect()).expect("complete")
}

fn erase_branch(p: f64) -> QuantumOperation {
    qubit_op(vec![unit(2, 0, 0) * c(p.sqrt(), 0.0), unit(2, 0, 1) * c(p.sqrt(), 0.0)])
}

fn dephase_branch(p: f64) -> QuantumOperation {
    qubit_op(vec![unit(2, 0, 0) * c(p.sqrt(), 0.0), unit(2, 1, 1) * c(p.sqrt(), 0.0)])
}

fn keep_branch(p: f64) -> QuantumOperation {
    qubit_op(vec![identity(2) * c(p.sqrt(), 0.0)])
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QinfoError::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

/// With probability ε the qubit is replaced by |0⟩ and the observer learns it.
pub fn observed_erasure(eps: f64) -> Result<ObservedChannel> {
    check_prob("epsilon", eps)?;
    ObservedChannel::new(vec![keep_branch(1.0 - eps), erase_branch(eps)])
}

/// With probability δ the qubit is dephased and the observer learns it.
pub fn observed_phase_erasure(delta: f64) -> Result<ObservedChannel> {
    check_prob("delta", delta)?;
    ObservedChannel::new(vec![keep_branch(1.0 - delta), dephase_branch(delta)])
}

pub fn observed_mixed_erasure(eps: f64, delta: f64) -> Result<ObservedChannel> {
    check_prob("epsilon", eps)?;
    check_prob("delta", delta)?;
    check_prob("epsilon + delta", eps + delta)?;
    ObservedChannel::new(vec![keep_branch(1.0 - eps - delta), erase_branch(eps), dephase_branch(delta)])
}

/// max_ρ Σ_m tr(𝒩_m(ρ)) I(ρ, 𝒩_m) over blocks of n uses.
pub fn observed_bound(oc: &ObservedChannel, n: usize, budget: &CapacityBudget) -> Result<CapacityEstimate> {
    let block = oc.tensor_power(n)?;
    let flat: Vec<QuantumOperation> = block.branches.iter().map(flatten_input).collect::<Result<_>>()?;
    let block = ObservedChannel { branches: flat };
    let d = block.branches[0].in_dim();
    let f = |rho: &DensityOperator| block.average_coherent_information(rho);
    let (value, argmax_state, optimizer_trace) = maximize_over_states(d, &f, budget)?;
    Ok(CapacityEstimate { n, value, argmax_state, optimizer_trace })
}

/// The four-dimensional coding and channel operations (𝒩, 𝒞) of the first counterexample.
///
/// U swaps the blocks {|1⟩,|2⟩} and {|3⟩,|4⟩}; 𝒩 folds the second block back
/// onto the first, and 𝒞 spreads a state on the first block evenly over both.
pub fn example1_operations() -> (QuantumOperation, QuantumOperation) {
    let u = unit(4, 2, 0) + unit(4, 3, 1) + unit(4, 0, 2) + unit(4, 1, 3);
    let p12 = unit(4, 0, 0) + unit(4, 1, 1);
    let p34 = unit(4, 2, 2) + unit(4, 3, 3);
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let s = SystemShape::single(4);
    let n = QuantumOperation::new(vec![p12.clone(), u.adjoint() * &p34], s.clone(), s.clone()).expect("4x4");
    let cop = QuantumOperation::new(vec![&p12 * h, &u * &p12 * h, p34], s.clone(), s).expect("4x4");
    (n, cop)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example1Values {
    pub entropy: f64,
    /// I(ρ, 𝒩∘𝒞)
    pub composite: f64,
    /// I(𝒞(ρ), 𝒩)
    pub channel_only: f64,
}

/// Both coherent informations for ρ = diag(p, 1 − p) on the first block.
pub fn example1(p: f64) -> Result<Example1Values> {
    check_prob("p", p)?;
    let rho = DensityOperator::new(crate::linalg::diag(&[p, 1.0 - p, 0.0, 0.0]), SystemShape::single(4))?;
    let (n, cop) = example1_operations();
    let composite = coherent_information(&rho, &compose(&n, &cop)?)?;
    let encoded = cop.apply_normalized(&rho)?;
    let channel_only = coherent_information(&encoded, &n)?;
    Ok(Example1Values { entropy: vn_entropy(&rho), composite, channel_only })
}

/// (I(ρ₁₂, ℰ⊗ℰ), I(ρ₁, ℰ), I(ρ₂, ℰ)) for the reset channel on pairs sharing a Bell state.
pub fn example2() -> Result<(f64, f64, f64)> {
    // qubits A, B, C, D; B and D share (|00⟩ + |11⟩)/√2, A and C maximally mixed
    let dims = [2usize; 4];
    let rho = ComplexMatrix::from_fn(16, 16, |r, s| {
        let (x, y) = (digits(r, &dims), digits(s, &dims));
        if x[0] == y[0] && x[2] == y[2] && x[1] == x[3] && y[1] == y[3] {
            c(0.125, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let rho12 = DensityOperator::new(rho, SystemShape::qubits(4))?;
    let id = identity(2);
    let reset = QuantumOperation::new(
        vec![id.kronecker(&unit(2, 0, 0)), id.kronecker(&unit(2, 0, 1))],
        SystemShape::qubits(2),
        SystemShape::qubits(2),
    )?;
    let both = tensor_ops(&reset, &reset);
    let rho1 = partial_trace(&rho12, &[0, 1])?;
    let rho2 = partial_trace(&rho12, &[2, 3])?;
    Ok((
        coherent_information(&rho12, &both)?,
        coherent_information(&rho1, &reset)?,
        coherent_information(&rho2, &reset)?,
    ))
}

/// Reports for both counterexamples over the given diagonal inputs.
///
/// `example1_channel_closed_form` compares I(𝒞(ρ), 𝒩) with 2S(ρ) − 1;
/// `example1_channel_direct` compares it with S(ρ) − 1, which follows from
/// S(𝒩(𝒞(ρ))) = S(ρ) and a diagonal W = diag(½, ½).
pub fn counterexample_suite(ps: &[f64]) -> Result<Vec<MetricReport>> {
    let mut out = vec![];
    for &p in ps {
        let v = example1(p)?;
        out.push(MetricReport::equality("example1_composite", v.composite, v.entropy));
        out.push(MetricReport::equality("example1_channel_closed_form", v.channel_only, 2.0 * v.entropy - 1.0));
        out.push(MetricReport::equality("example1_channel_direct", v.channel_only, v.entropy - 1.0));
        out.push(MetricReport::inequality("example1_pipelining_violated", v.channel_only, v.composite));
    }
    let (joint, a, b) = example2()?;
    out.push(MetricReport::equality("example2_joint", joint, 2.0));
    out.push(MetricReport::equality("example2_first", a, 0.0));
    out.push(MetricReport::equality("example2_second", b, 0.0));
    Ok(out)
}

/// χ for the equal mixture of |0⟩ and cos θ|0⟩ + sin θ|1⟩.
pub fn holevo_example(theta: f64) -> Result<f64> {
    let a = ket(2, 0);
    let b = ComplexVector::from_vec(vec![c(theta.cos(), 0.0), c(theta.sin(), 0.0)]);
    let s = SystemShape::qubits(1);
    let ens = Ensemble::new(
        vec![0.5, 0.5],
        vec![DensityOperator::new(projector(&a), s.clone())?, DensityOperator::new(projector(&b), s)?],
    )?;
    Ok(holevo_chi(&ens))
}

/// (θ, χ(θ)) at `points` evenly spaced angles in [0, π].
pub fn holevo_curve(points: usize) -> Result<Vec<(f64, f64)>> {
    let step = std::f64::consts::PI / (points.max(2) - 1) as f64;
    (0..points).map(|i| Ok((i as f64 * step, holevo_example(i as f64 * step)?))).collect()
}

/// Sending n classical bits with n_ab qubits from A to B and n_ba from B to A:
/// n_ab ≥ ⌈n/2⌉ and n_ab + n_ba ≥ n.
pub fn capacity_region_qubits(n_bits: u64, n_ab: u64, n_ba: u64) -> bool {
    n_ab >= n_bits.div_ceil(2) && n_ab + n_ba >= n_bits
}

/// Bits delivered by the best superdense schedule: B sends k ≤ n_ba halves of
/// Bell pairs, A returns k of them encoded with two bits each and sends the
/// rest of its qubits plainly.
pub fn superdense_schedule_bits(n_ab: u64, n_ba: u64) -> u64 {
    let k = n_ab.min(n_ba);
    2 * k + (n_ab - k)
}

/// Number of terms in the operator-Schmidt decomposition across the cut.
pub fn operator_schmidt_number(u: &ComplexMatrix, shape: &SystemShape, cut: usize) -> Result<usize> {
    Ok(schmidt_operator(u, shape, cut)?.term_count())
}

/// ⌈log₄ Sch(U)⌉ qubits of communication needed to implement U across the cut.
pub fn comm_lower_bound(u: &ComplexMatrix, shape: &SystemShape, cut: usize) -> Result<u32> {
    if !u.is_square() || max_abs(&(u.adjoint() * u - identity(u.nrows()))) > MAP_TOL {
        return Err(QinfoError::InvalidParameter("communication bound needs a unitary".into()));
    }
    let sch = operator_schmidt_number(u, shape, cut)?;
    let mut q = 0u32;
    while 4usize.pow(q) < sch {
        q += 1;
    }
    Ok(q)
}

fn random_shape_channel(din: usize, dout: usize, rng: &mut QRng) -> QuantumOperation {
    let k = rng.random_range(1..=din * dout);
    random_channel(&SystemShape::single(din), &SystemShape::single(dout), k.max(din.div_ceil(dout)), rng)
}

/// A complete operation close to the unitary u: (1 − η) u·u† + η 𝒳 for a random channel 𝒳.
fn near_unitary(u: &ComplexMatrix, eta: f64, rng: &mut QRng) -> QuantumOperation {
    let d = u.nrows();
    let noise = random_channel_on(d, 2, rng);
    let mut kraus = vec![u * c((1.0 - eta).sqrt(), 0.0)];
    kraus.extend(noise.kraus().iter().map(|k| k * c(eta.sqrt(), 0.0)));
    QuantumOperation::new(kraus, SystemShape::single(d), SystemShape::single(d)).expect("square")
}

/// Random (ρ, 𝒞, 𝒟) triples for S(ρ) ≤ I(ρ,𝒞) + 2 + 4(1 − F(ρ, 𝒟∘𝒞)) log d
/// and its sharper form with 2h(F) + 2(1 − F) log(d² − 1).
///
/// Half of the samples use a near-unitary 𝒞 with its inverse as 𝒟, so that
/// high-fidelity regimes are exercised as well as random ones.
pub fn entropy_fidelity_reports(samples: usize, rng: &mut QRng) -> Result<Vec<MetricReport>> {
    let mut out = vec![];
    for s in 0..samples {
        let d = rng.random_range(2..=3);
        let rho = random_density(&SystemShape::single(d), rng);
        let (cop, dop) = if s % 2 == 0 {
            let u = haar_unitary(d, rng);
            let eta = rng.random_range(0.0..0.3);
            let back = QuantumOperation::unitary(u.adjoint(), SystemShape::single(d))?;
            (near_unitary(&u, eta, rng), back)
        } else {
            let mid = rng.random_range(2..=4);
            (random_shape_channel(d, mid, rng), random_shape_channel(mid, d, rng))
        };
        let i = coherent_information(&rho, &cop)?;
        let f = dynamic_fidelity(&rho, &compose(&dop, &cop)?)?;
        let sr = vn_entropy(&rho);
        let log_d = (d as f64).log2();
        out.push(MetricReport::inequality("entropy_fidelity", sr, i + 2.0 + 4.0 * (1.0 - f) * log_d));
        let sharp = 2.0 * binary_entropy(f.clamp(0.0, 1.0)) + 2.0 * (1.0 - f) * ((d * d - 1) as f64).log2();
        out.push(MetricReport::inequality("entropy_fidelity_sharp", sr - i, sharp));
    }
    Ok(out)
}

/// Split the Kraus operators of a random complete operation into m branches.
fn random_observed(d: usize, branches: usize, rng: &mut QRng) -> Result<ObservedChannel> {
    let per = rng.random_range(1..=2);
    let op = random_channel_on(d, branches * per, rng);
    let ops = op
        .kraus()
        .chunks(per)
        .map(|ks| QuantumOperation::new(ks.to_vec(), SystemShape::single(d), SystemShape::single(d)))
        .collect::<Result<Vec<_>>>()?;
    ObservedChannel::new(ops)
}

/// S(ρ) ≤ Σ_m tr(ℰ_m(ρ)) I(ρ, ℰ_m) + 2 + 4(1 − F(ρ, 𝒯)) log d with 𝒯 = Σ_m 𝒟_m∘ℰ_m.
///
/// Half of the samples use branches √p_m U_m with decoders U_m†, which makes 𝒯
/// the identity.
pub fn generalized_entropy_fidelity_reports(samples: usize, rng: &mut QRng) -> Result<Vec<MetricReport>> {
    let mut out = vec![];
    for s in 0..samples {
        let d = rng.random_range(2..=3);
        let m = rng.random_range(2..=4);
        let rho = random_density(&SystemShape::single(d), rng);
        let sh = SystemShape::single(d);
        let (oc, decoders) = if s % 2 == 0 {
            let mut w: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let tot: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= tot);
            let us: Vec<ComplexMatrix> = (0..m).map(|_| haar_unitary(d, rng)).collect();
            let eta = rng.random_range(0.0..0.2);
            let branches = us
                .iter()
                .zip(&w)
                .map(|(u, &p)| near_unitary(u, eta, rng).scaled(p))
                .collect::<Vec<_>>();
            let decs = us
                .iter()
                .map(|u| QuantumOperation::unitary(u.adjoint(), sh.clone()))
                .collect::<Result<Vec<_>>>()?;
            (ObservedChannel::new(branches)?, decs)
        } else {
            let oc = random_observed(d, m, rng)?;
            let decs = (0..m).map(|_| random_channel_on(d, rng.random_range(1..=3), rng)).collect();
            (oc, decs)
        };
        let mut t_kraus = vec![];
        for (b, dm) in oc.branches().iter().zip(&decoders) {
            t_kraus.extend(compose(dm, b)?.kraus().iter().cloned());
        }
        let t = QuantumOperation::new(t_kraus, sh.clone(), sh.clone())?;
        let f = dynamic_fidelity(&rho, &t)?;
        let avg = oc.average_coherent_information(&rho)?;
        let rhs = avg + 2.0 + 4.0 * (1.0 - f) * (d as f64).log2();
        out.push(MetricReport::inequality("generalized_entropy_fidelity", vn_entropy(&rho), rhs));
        // the embedding carries the same coherent information
        let emb = oc.embed()?;
        out.push(MetricReport::equality("observed_embedding_identity", coherent_information(&rho, &emb)?, avg));
    }
    Ok(out)
}

/// Unit complex number helper for tests and callers building phases.
pub fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cnot, qft, swap_gate, tensor};
    use crate::ops::{channels, maps_equal};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn quick() -> CapacityBudget {
        CapacityBudget { restarts: 6, ..CapacityBudget::default() }
    }

    #[test]
    fn identity_channel_capacity_is_one() {
        let id = QuantumOperation::identity(SystemShape::qubits(1));
        let e = coherent_info_max(&id, 1, &quick()).unwrap();
        assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-6);
        assert!(max_abs(&(e.argmax_state.matrix() - identity(2) * c(0.5, 0.0))) < 1e-3);
        assert_eq!(e.optimizer_trace.len(), 6);
    }

    #[test]
    fn constant_channel_has_no_coherent_information() {
        let e = coherent_info_max(&channels::pauli_randomizer(), 1, &CapacityBudget::default()).unwrap();
        assert!(e.value <= 1e-6, "{}", e.value);
        assert!(e.value >= -1e-6);
    }

    #[test]
    fn erasure_one_shot_value() {
        let e = coherent_info_max(&channels::erasure(0.25).unwrap(), 1, &quick()).unwrap();
        assert_abs_diff_eq!(e.value, 0.5, epsilon = 1e-4);
        // above one half the best input is pure and the value is zero
        let e = coherent_info_max(&channels::erasure(0.7).unwrap(), 1, &quick()).unwrap();
        assert_abs_diff_eq!(e.value, 0.0, epsilon = 1e-4);
    }

    #[test]
    fn embedding_matches_flagged_channels() {
        for (oc, op) in [
            (observed_erasure(0.3).unwrap(), channels::erasure(0.3).unwrap()),
            (observed_phase_erasure(0.2).unwrap(), channels::phase_erasure(0.2).unwrap()),
            (observed_mixed_erasure(0.1, 0.25).unwrap(), channels::mixed_erasure(0.1, 0.25).unwrap()),
        ] {
            assert!(maps_equal(&oc.embed().unwrap(), &op));
        }
    }

    #[test]
    fn embedding_coherent_information_is_branch_average() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let d = rng.random_range(2..=3);
            let oc = random_observed(d, rng.random_range(2..=4), &mut rng).unwrap();
            let rho = random_density(&SystemShape::single(d), &mut rng);
            let a = coherent_information(&rho, &oc.embed().unwrap()).unwrap();
            assert_abs_diff_eq!(a, oc.average_coherent_information(&rho).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn teleportation_observed_and_unobserved() {
        let oc = teleportation_observed();
        let half = DensityOperator::maximally_mixed(SystemShape::qubits(1));
        assert_abs_diff_eq!(oc.average_coherent_information(&half).unwrap(), 1.0, epsilon = 1e-12);
        let un = coherent_info_max(&oc.unobserved().unwrap(), 1, &quick()).unwrap();
        assert!(un.value <= 1e-6);
        let ob = observed_bound(&oc, 1, &quick()).unwrap();
        assert_abs_diff_eq!(ob.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn erasure_family_observed_values() {
        for eps in [0.1, 0.25] {
            for delta in [0.1, 0.25] {
                let e = observed_bound(&observed_erasure(eps).unwrap(), 1, &quick()).unwrap();
                assert_abs_diff_eq!(e.value, 1.0 - 2.0 * eps, epsilon = 1e-4);
                let p = observed_bound(&observed_phase_erasure(delta).unwrap(), 1, &quick()).unwrap();
                assert_abs_diff_eq!(p.value, 1.0 - delta, epsilon = 1e-4);
                let m = observed_bound(&observed_mixed_erasure(eps, delta).unwrap(), 1, &quick()).unwrap();
                assert_abs_diff_eq!(m.value, 1.0 - 2.0 * eps - delta, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn observing_never_lowers_the_bound() {
        let mut rng = seeded(8);
        for _ in 0..3 {
            let oc = random_observed(2, 2, &mut rng).unwrap();
            let un = coherent_info_max(&oc.unobserved().unwrap(), 1, &quick()).unwrap();
            let ob = observed_bound(&oc, 1, &quick()).unwrap();
            assert!(ob.value >= un.value - 1e-6, "{} < {}", ob.value, un.value);
            // pointwise as well, at the unobserved optimum
            let at = oc.average_coherent_information(&un.argmax_state).unwrap();
            assert!(at >= un.value - 1e-9);
        }
    }

    #[test]
    fn two_uses_at_least_double_one_use() {
        let ch = channels::amplitude_damping(0.2).unwrap();
        let one = coherent_info_max(&ch, 1, &quick()).unwrap();
        let budget = CapacityBudget {
            restarts: 2,
            starts: vec![one.argmax_state.tensor(&one.argmax_state)],
            ..CapacityBudget::default()
        };
        let two = coherent_info_max(&ch, 2, &budget).unwrap();
        assert!(two.value >= 2.0 * one.value - 1e-4, "{} < 2 × {}", two.value, one.value);
        assert!(two.value <= 2.0 + 1e-9);
    }

    #[test]
    fn unitary_pre_encoding_leaves_value_unchanged() {
        let mut rng = seeded(4);
        let ch = channels::amplitude_damping(0.3).unwrap();
        let u = QuantumOperation::unitary(haar_unitary(2, &mut rng), SystemShape::qubits(1)).unwrap();
        let a = coherent_info_max(&ch, 1, &quick()).unwrap();
        let b = coherent_info_max(&compose(&ch, &u).unwrap(), 1, &quick()).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-6);
    }

    #[test]
    fn general_encodings_reach_unitary_bound() {
        let ch = channels::depolarizing(0.05).unwrap();
        let unit_bound = coherent_info_max(&ch, 1, &quick()).unwrap();
        let budget = CapacityBudget { restarts: 4, max_iters: 6000, ..CapacityBudget::default() };
        let general = general_encoding_max(&ch, 1, 2, 2, &budget).unwrap();
        assert!(general.value >= unit_bound.value - 1e-3, "{} vs {}", general.value, unit_bound.value);
        assert!(general.value <= 1.0 + 1e-9);
    }

    #[test]
    fn concurrent_restarts_are_reproducible() {
        let ch = channels::amplitude_damping(0.25).unwrap();
        let budget = CapacityBudget { seed: 17, ..quick() };
        let a = coherent_info_max(&ch, 1, &budget).unwrap();
        let b = coherent_info_max(&ch, 1, &budget).unwrap();
        assert_eq!(a.optimizer_trace, b.optimizer_trace);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let best = a.optimizer_trace.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, a.value);
    }

    #[test]
    fn nonconvergence_is_an_error() {
        let budget = CapacityBudget { restarts: 1, max_iters: 3, ..CapacityBudget::default() };
        let r = coherent_info_max(&channels::amplitude_damping(0.3).unwrap(), 1, &budget);
        assert!(matches!(r, Err(QinfoError::Optimizer(_))));
        let partial = QuantumOperation::from_kraus(vec![unit(2, 0, 0)]).unwrap();
        assert!(coherent_info_max(&partial, 1, &quick()).is_err());
    }

    #[test]
    fn example1_values() {
        let (n, cop) = example1_operations();
        assert!(n.is_complete() && cop.is_complete());
        // 𝒩∘𝒞 is the identity on the first block
        let mut rng = seeded(5);
        let psi = random_pure(2, &mut rng);
        let v = ComplexVector::from_vec(vec![psi[0], psi[1], c(0.0, 0.0), c(0.0, 0.0)]);
        let rho = DensityOperator::new(projector(&v), SystemShape::single(4)).unwrap();
        let back = compose(&n, &cop).unwrap().apply_normalized(&rho).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-12);

        let v = example1(0.8).unwrap();
        let h = binary_entropy(0.2);
        assert_abs_diff_eq!(v.entropy, h, epsilon = 1e-12);
        assert_abs_diff_eq!(v.composite, h, epsilon = 1e-9);
        assert_abs_diff_eq!(v.channel_only, h - 1.0, epsilon = 1e-9);
        assert!(v.channel_only < v.composite);
        // pure input: 0 and −1, where 2S − 1 and S − 1 agree
        let v = example1(1.0).unwrap();
        assert_abs_diff_eq!(v.composite, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.channel_only, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn example1_channel_term_by_hand() {
        // 𝒞(ρ) = diag(p, 1−p, p, 1−p)/2; 𝒩 sends it to diag(p, 1−p); W = diag(½, ½)
        let p = 0.3;
        let (n, cop) = example1_operations();
        let rho = DensityOperator::new(crate::linalg::diag(&[p, 1.0 - p, 0.0, 0.0]), SystemShape::single(4)).unwrap();
        let enc = cop.apply_normalized(&rho).unwrap();
        let expect = crate::linalg::diag(&[p / 2.0, (1.0 - p) / 2.0, p / 2.0, (1.0 - p) / 2.0]);
        assert!(max_abs(&(enc.matrix() - expect)) < 1e-15);
        let w = crate::ops::w_matrix(&n, &enc).unwrap();
        assert!(max_abs(&(w - identity(2) * c(0.5, 0.0))) < 1e-15);
        let out = n.apply_normalized(&enc).unwrap();
        assert_abs_diff_eq!(vn_entropy(&out), binary_entropy(p), epsilon = 1e-12);
    }

    #[test]
    fn example2_values() {
        let (joint, a, b) = example2().unwrap();
        assert_abs_diff_eq!(joint, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn counterexample_suite_flags_only_the_closed_form() {
        let ps: Vec<f64> = (0..10).map(|i| 0.5 + 0.05 * i as f64).collect();
        let reports = counterexample_suite(&ps).unwrap();
        for r in &reports {
            if r.name == "example1_channel_closed_form" {
                continue;
            }
            assert!(r.holds(), "{r:?}");
        }
        // 2S − 1 and S − 1 differ by S, so only the pure input agrees
        let closed: Vec<&MetricReport> = reports.iter().filter(|r| r.name == "example1_channel_closed_form").collect();
        assert_eq!(closed.iter().filter(|r| r.holds()).count(), 0);
        let last = counterexample_suite(&[1.0]).unwrap();
        assert!(last.iter().all(|r| r.holds()));
    }

    #[test]
    fn holevo_curve_matches_closed_form() {
        let curve = holevo_curve(50).unwrap();
        for (t, chi) in &curve {
            assert_abs_diff_eq!(*chi, binary_entropy((1.0 + t.cos()) / 2.0), epsilon = 1e-9);
        }
        assert_abs_diff_eq!(holevo_example(std::f64::consts::FRAC_PI_2).unwrap(), 1.0, epsilon = 1e-12);
        let best = curve.iter().map(|x| x.1).fold(0.0, f64::max);
        assert!(best <= 1.0 + 1e-12);
    }

    #[test]
    fn capacity_region_examples() {
        assert!(capacity_region_qubits(2, 1, 1));
        assert!(!capacity_region_qubits(2, 1, 0));
        assert!(capacity_region_qubits(0, 0, 0));
        assert!(!capacity_region_qubits(3, 1, 5));
    }

    #[test]
    fn capacity_region_matches_superdense_counting() {
        for n in 0..=8u64 {
            for ab in 0..=n + 2 {
                for ba in 0..=n + 2 {
                    assert_eq!(capacity_region_qubits(n, ab, ba), superdense_schedule_bits(ab, ba) >= n, "{n} {ab} {ba}");
                }
            }
        }
    }

    #[test]
    fn schmidt_numbers_and_bounds() {
        let two = SystemShape::qubits(2);
        assert_eq!(operator_schmidt_number(&cnot(), &two, 1).unwrap(), 2);
        assert_eq!(comm_lower_bound(&cnot(), &two, 1).unwrap(), 1);
        let sw = swap_gate(2, 2);
        assert_eq!(operator_schmidt_number(&sw, &two, 1).unwrap(), 4);
        assert_eq!(comm_lower_bound(&sw, &two, 1).unwrap(), 1);
        let four = SystemShape::qubits(4);
        let sw4 = swap_gate(4, 4);
        assert_eq!(operator_schmidt_number(&sw4, &four, 2).unwrap(), 16);
        assert_eq!(comm_lower_bound(&sw4, &four, 2).unwrap(), 2);
        let f = qft(16);
        assert_eq!(operator_schmidt_number(&f, &four, 2).unwrap(), 16);
        assert_eq!(comm_lower_bound(&f, &four, 2).unwrap(), 2);
        // local gates need no communication
        let local = tensor(&qft(2), &crate::linalg::hadamard());
        assert_eq!(comm_lower_bound(&local, &two, 1).unwrap(), 0);
        assert!(comm_lower_bound(&(cnot() * c(2.0, 0.0)), &two, 1).is_err());
    }

    #[test]
    fn swap_gate_exchanges_factors() {
        let mut rng = seeded(1);
        let (a, b) = (random_pure(2, &mut rng), random_pure(3, &mut rng));
        let out = swap_gate(2, 3) * a.kronecker(&b);
        assert!((out - b.kronecker(&a)).norm() < 1e-14);
    }

    #[test]
    fn qft_is_unitary_and_maps_zero_to_uniform() {
        let f = qft(8);
        assert!(max_abs(&(f.adjoint() * &f - identity(8))) < 1e-12);
        let v = &f * ket(8, 0);
        assert!(v.iter().all(|z| (z - c(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-14));
        assert!((f[(1, 1)] - phase(std::f64::consts::PI / 4.0) / c(8f64.sqrt(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn entropy_fidelity_suites_hold() {
        let mut rng = seeded(6);
        for r in entropy_fidelity_reports(200, &mut rng).unwrap() {
            assert!(r.holds(), "{r:?}");
        }
        for r in generalized_entropy_fidelity_reports(200, &mut rng).unwrap() {
            assert!(r.holds(), "{r:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn coherent_information_at_most_log_d(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let d = rng.random_range(2..=3);
            let ch = random_channel_on(d, rng.random_range(1..=3), &mut rng);
            let rho = random_density(&SystemShape::single(d), &mut rng);
            prop_assert!(coherent_information(&rho, &ch).unwrap() <= (d as f64).log2() + 1e-9);
        }
    }
}
