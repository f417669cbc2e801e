//! Schumacher compression on i.i.d. sources, enumerated by type class.

use crate::entropy::vn_entropy;
use crate::error::{QinfoError, Result};
use crate::linalg::{
    c, digits, eigh, identity, max_abs, tensor_all, zeros, ComplexMatrix, DensityOperator, SystemShape,
};
use crate::ops::QuantumOperation;

/// Largest number of type classes enumerated.
pub const TYPE_BUDGET: usize = 10_000_000;
/// Largest d^n materialized as a per-sequence table.
pub const SEQUENCE_BUDGET: usize = 1 << 20;
/// Largest d^n materialized as dense matrices.
pub const DENSE_BUDGET: usize = 256;
/// Slack on the typicality window, for sequences sitting exactly on its edge.
const WINDOW_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct IIDSource {
    rho: DensityOperator,
    /// Eigenvalues in the order of `basis` columns.
    eigenvalues: Vec<f64>,
    basis: ComplexMatrix,
    diagonal: bool,
}

impl IIDSource {
    /// Sources diagonal in the computational basis keep that basis (and its order);
    /// others use the descending eigenbasis.
    pub fn new(rho: DensityOperator) -> Self {
        let d = rho.dim();
        let m = rho.matrix();
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || m[(i, j)].norm() < 1e-14));
        let (eigenvalues, basis) = if diagonal {
            ((0..d).map(|i| m[(i, i)].re.max(0.0)).collect(), identity(d))
        } else {
            let e = eigh(m);
            (e.values.iter().map(|v| v.max(0.0)).collect(), e.vectors)
        };
        Self { rho, eigenvalues, basis, diagonal }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Ok(Self::new(DensityOperator::diagonal(probs)?))
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn entropy(&self) -> f64 {
        vn_entropy(&self.rho)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Probability of an eigen-sequence.
    pub fn sequence_probability(&self, seq: &[usize]) -> f64 {
        seq.iter().map(|&i| self.eigenvalues[i]).product()
    }

    fn is_typical(&self, seq_log2_prob: f64, n: usize, epsilon: f64) -> bool {
        seq_log2_prob.is_finite() && (-seq_log2_prob / n as f64 - self.entropy()).abs() <= epsilon + WINDOW_TOL
    }
}

/// Eigenvalue composition (k_0, …, k_{d−1}) with Σk = n.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeClass {
    pub counts: Vec<usize>,
    /// Number of sequences with these counts.
    pub multiplicity: f64,
    /// log₂ probability of each sequence in the class.
    pub log2_prob: f64,
}

impl TypeClass {
    pub fn mass(&self) -> f64 {
        if self.log2_prob == f64::NEG_INFINITY {
            0.0
        } else {
            (self.multiplicity.ln() + self.log2_prob * std::f64::consts::LN_2).exp()
        }
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for i in 1..=n {
        t[i] = t[i - 1] + (i as f64).ln();
    }
    t
}

fn compositions(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(left - k, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    rec(n, d, &mut vec![], &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Every type class of ρ^{⊗n}, with multiplicities and probabilities.
pub fn type_classes(src: &IIDSource, n: usize) -> Result<Vec<TypeClass>> {
    let d = src.dim();
    let count = binomial(n + d - 1, d - 1);
    if count > TYPE_BUDGET as f64 {
        return Err(QinfoError::BudgetExceeded(format!("{count:.3e} type classes for n = {n}, d = {d}")));
    }
    let lf = ln_factorials(n);
    let logs: Vec<f64> = src.eigenvalues.iter().map(|&l| if l > 0.0 { l.log2() } else { f64::NEG_INFINITY }).collect();
    Ok(compositions(n, d)
        .into_iter()
        .map(|counts| {
            let ln_mult = lf[n] - counts.iter().map(|&k| lf[k]).sum::<f64>();
            let log2_prob =
                counts.iter().zip(&logs).map(|(&k, &l)| if k == 0 { 0.0 } else { k as f64 * l }).sum::<f64>();
            TypeClass { counts, multiplicity: ln_mult.exp().round(), log2_prob }
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct TypicalSubspace {
    pub n: usize,
    pub epsilon: f64,
    pub entropy: f64,
    /// Typical type classes.
    pub classes: Vec<TypeClass>,
    pub projector_rank: f64,
    /// tr(ρ^{⊗n} P)
    pub mass: f64,
}

impl TypicalSubspace {
    pub fn rank_exponent(&self) -> f64 {
        self.projector_rank.log2()
    }

    /// n(S + ε), the exponent of the rank bound.
    pub fn rank_bound_exponent(&self) -> f64 {
        self.n as f64 * (self.entropy + self.epsilon)
    }

    pub fn rank_bound_holds(&self) -> bool {
        self.projector_rank <= self.rank_bound_exponent().exp2()
    }

    fn contains(&self, counts: &[usize]) -> bool {
        self.classes.iter().any(|t| t.counts == counts)
    }
}

pub fn typical_projector(src: &IIDSource, n: usize, epsilon: f64) -> Result<TypicalSubspace> {
    if n == 0 || !(epsilon > 0.0) {
        return Err(QinfoError::InvalidParameter(format!("need n ≥ 1 and ε > 0, got n = {n}, ε = {epsilon}")));
    }
    let classes: Vec<TypeClass> =
        type_classes(src, n)?.into_iter().filter(|t| src.is_typical(t.log2_prob, n, epsilon)).collect();
    let projector_rank = classes.iter().map(|t| t.multiplicity).sum();
    let mass = classes.iter().map(TypeClass::mass).sum();
    Ok(TypicalSubspace { n, epsilon, entropy: src.entropy(), classes, projector_rank, mass })
}

fn counts_of(seq: &[usize], d: usize) -> Vec<usize> {
    let mut k = vec![0; d];
    for &i in seq {
        k[i] += 1;
    }
    k
}

/// Sequence table for d^n ≤ SEQUENCE_BUDGET: probability and typicality of every eigen-sequence,
/// in lexicographic order.
#[derive(Clone, Debug)]
pub struct SequenceTable {
    pub n: usize,
    pub d: usize,
    pub probabilities: Vec<f64>,
    pub typical: Vec<bool>,
}

pub fn sequence_table(src: &IIDSource, sub: &TypicalSubspace) -> Result<SequenceTable> {
    let (d, n) = (src.dim(), sub.n);
    let total = (d as f64).powi(n as i32);
    if total > SEQUENCE_BUDGET as f64 {
        return Err(QinfoError::BudgetExceeded(format!("{total:.3e} sequences")));
    }
    let dims = vec![d; n];
    let mut probabilities = Vec::with_capacity(total as usize);
    let mut typical = Vec::with_capacity(total as usize);
    for idx in 0..total as usize {
        let seq = digits(idx, &dims);
        probabilities.push(src.sequence_probability(&seq));
        typical.push(sub.contains(&counts_of(&seq, d)));
    }
    Ok(SequenceTable { n, d, probabilities, typical })
}

/// Typical eigen-sequences in lexicographic order (needs d^n ≤ SEQUENCE_BUDGET).
pub fn basis_sequences(src: &IIDSource, sub: &TypicalSubspace) -> Result<Vec<Vec<usize>>> {
    let t = sequence_table(src, sub)?;
    let dims = vec![t.d; t.n];
    Ok((0..t.typical.len()).filter(|&i| t.typical[i]).map(|i| digits(i, &dims)).collect())
}

/// Projection scheme at rate R: keep a fixed set of eigen-sequences and send anything
/// outside it to a standard state.
#[derive(Clone, Debug)]
pub struct CompressionScheme {
    pub n: usize,
    pub epsilon: f64,
    pub rate: f64,
    /// Kept eigen-sequence indices, lexicographic.
    pub kept: Vec<usize>,
    /// Index of the standard state substituted on failure.
    pub standard: usize,
    /// ⌈nR⌉ qubits.
    pub code_qubits: usize,
    /// Dynamic fidelity of decode∘encode on ρ^{⊗n}.
    pub fidelity: f64,
}

impl CompressionScheme {
    pub fn code_dim(&self) -> usize {
        1 << self.code_qubits
    }

    /// Encode and decode as explicit operations (dense; d^n ≤ DENSE_BUDGET).
    pub fn materialize(&self, src: &IIDSource) -> Result<(QuantumOperation, QuantumOperation)> {
        let (d, n) = (src.dim(), self.n);
        let big = d.pow(n as u32);
        if big > DENSE_BUDGET {
            return Err(QinfoError::BudgetExceeded(format!("dense scheme on {big} dimensions")));
        }
        let u = tensor_all(&vec![src.basis.clone(); n]);
        let m = self.code_dim();
        let slot = |x: usize| self.kept.iter().position(|&k| k == x);
        let s_code = slot(self.standard).unwrap_or(0);
        // Encode: typical sequence x ↦ |slot(x)⟩; others ↦ |slot(standard)⟩.
        let mut enc = vec![];
        let mut v = zeros(m, big);
        for (j, &x) in self.kept.iter().enumerate() {
            v[(j, x)] = c(1.0, 0.0);
        }
        enc.push(&v * u.adjoint());
        for x in (0..big).filter(|x| slot(*x).is_none()) {
            let mut k = zeros(m, big);
            k[(s_code, x)] = c(1.0, 0.0);
            enc.push(k * u.adjoint());
        }
        // Decode: |j⟩ ↦ kept[j]; unused code states ↦ standard.
        let mut dec = vec![&u * v.adjoint()];
        for j in self.kept.len()..m {
            let mut k = zeros(big, m);
            k[(self.standard, j)] = c(1.0, 0.0);
            dec.push(&u * k);
        }
        let sys = SystemShape::new(vec![d; n])?;
        let code = SystemShape::single(m.max(2));
        if m < 2 {
            return Err(QinfoError::RateTooSmall("materialized code space needs at least one qubit".into()));
        }
        Ok((QuantumOperation::new(enc, sys.clone(), code.clone())?, QuantumOperation::new(dec, code, sys)?))
    }
}

/// F = (Σ_kept p_x)² for a scheme diagonal in the eigen-sequence basis; the failure branch
/// Kraus operators |s⟩⟨x| contribute ⟨x|ρ^{⊗n}|s⟩ = 0.
fn projection_fidelity(kept_mass: f64) -> f64 {
    kept_mass * kept_mass
}

fn code_qubits(n: usize, rate: f64) -> usize {
    (n as f64 * rate - 1e-12).ceil().max(0.0) as usize
}

/// Keep the typical subspace if it fits in ⌈nR⌉ qubits.
pub fn schumacher_scheme(src: &IIDSource, n: usize, epsilon: f64, rate: f64) -> Result<CompressionScheme> {
    let sub = typical_projector(src, n, epsilon)?;
    let q = code_qubits(n, rate);
    if sub.projector_rank > (q as f64).exp2() {
        return Err(QinfoError::RateTooSmall(format!(
            "typical rank {} exceeds 2^{q} at R = {rate}",
            sub.projector_rank
        )));
    }
    let table = sequence_table(src, &sub)?;
    let kept: Vec<usize> = (0..table.typical.len()).filter(|&i| table.typical[i]).collect();
    let standard = kept.first().copied().unwrap_or(0);
    Ok(CompressionScheme { n, epsilon, rate, kept, standard, code_qubits: q, fidelity: projection_fidelity(sub.mass) })
}

/// The ⌊2^{nR}⌋ most probable eigen-sequences (the best projection scheme at rate R).
pub fn best_effort_scheme(src: &IIDSource, n: usize, rate: f64) -> Result<CompressionScheme> {
    let keep = (n as f64 * rate).exp2().floor().max(1.0) as usize;
    let sub = typical_projector(src, n, 1.0)?;
    let table = sequence_table(src, &sub)?;
    let mut order: Vec<usize> = (0..table.probabilities.len()).collect();
    order.sort_by(|&a, &b| table.probabilities[b].total_cmp(&table.probabilities[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
    kept.sort_unstable();
    let mass: f64 = kept.iter().map(|&i| table.probabilities[i]).sum();
    let standard = kept[0];
    Ok(CompressionScheme {
        n,
        epsilon: f64::NAN,
        rate,
        kept,
        standard,
        code_qubits: code_qubits(n, rate),
        fidelity: projection_fidelity(mass),
    })
}

/// Measurement-augmented scheme: the type class is sent over a classical side channel and each
/// branch keeps its ⌊2^{nR}⌋ most probable sequences. Returns F = Σ_m (kept mass in branch m)².
pub fn side_channel_fidelity(src: &IIDSource, n: usize, rate: f64) -> Result<f64> {
    let keep = (n as f64 * rate).exp2().floor().max(1.0);
    Ok(type_classes(src, n)?
        .iter()
        .map(|t| {
            let m = t.multiplicity.min(keep) * (t.log2_prob * std::f64::consts::LN_2).exp();
            m * m
        })
        .sum())
}

/// 2^{−n(S − R − ε)} + ε
pub fn strong_converse_bound(src: &IIDSource, n: usize, rate: f64, epsilon: f64) -> f64 {
    (-(n as f64) * (src.entropy() - rate - epsilon)).exp2() + epsilon
}

/// Finite-n form min_ε [2^{−n(S − R − ε)} + 1 − tr(ρ^{⊗n}P^n_ε)] over a grid of ε; bounds the
/// fidelity of any projection or side-channel scheme whose branches keep at most 2^{nR} sequences.
pub fn strong_converse_envelope(src: &IIDSource, n: usize, rate: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for i in 1..=200 {
        let eps = i as f64 * 0.01;
        let sub = typical_projector(src, n, eps)?;
        best = best.min((-(n as f64) * (src.entropy() - rate - eps)).exp2() + (1.0 - sub.mass).max(0.0));
    }
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct LadderSourceReport {
    pub entropy: f64,
    /// Pr(stop at r | this source), r = 1..=M, then the give-up branch.
    pub stop_probabilities: Vec<f64>,
    /// |tr(P_i Q_{i−1}…Q_1 ρ_i^{⊗n})|²
    pub fidelity_bound: f64,
    /// Σ_r |tr(R_r ρ_i^{⊗n})|² + give-up contribution, with R_r = P_r Q_{r−1}…Q_1.
    pub fidelity: f64,
    /// tr(P_i P_1 ρ_i^{⊗n}) and its bound 2^{n(S_1 − S_i + 2ε)}, for i > 1.
    pub cross_mass: Option<(f64, f64)>,
}

impl LadderSourceReport {
    pub fn identification_probability(&self, index: usize) -> f64 {
        self.stop_probabilities[index]
    }
}

#[derive(Clone, Debug)]
pub struct LadderReport {
    pub n: usize,
    pub epsilon: f64,
    pub sources: Vec<LadderSourceReport>,
}

fn check_ladder(sources: &[IIDSource], margin: f64) -> Result<()> {
    if sources.is_empty() {
        return Err(QinfoError::InvalidParameter("no sources".into()));
    }
    let d = sources[0].dim();
    if sources.iter().any(|s| s.dim() != d) {
        return Err(QinfoError::DimensionMismatch("sources differ in dimension".into()));
    }
    for w in sources.windows(2) {
        let gap = w[1].entropy() - w[0].entropy();
        if !(gap >= margin) {
            return Err(QinfoError::EntropyMargin(format!(
                "consecutive entropies {:.6} and {:.6} differ by less than {margin}",
                w[0].entropy(),
                w[1].entropy()
            )));
        }
    }
    Ok(())
}

/// Sequential {P_i, Q_i} measurements in ascending-entropy order, per-source decode.
pub fn universal_ladder(sources: &[IIDSource], n: usize, epsilon: f64, margin: f64) -> Result<LadderReport> {
    check_ladder(sources, margin)?;
    let d = sources[0].dim();
    let common = sources.iter().all(|s| s.is_diagonal());
    let big = (d as f64).powi(n as i32);
    if common && big <= SEQUENCE_BUDGET as f64 {
        ladder_diagonal(sources, n, epsilon)
    } else if big <= DENSE_BUDGET as f64 {
        ladder_dense(sources, n, epsilon)
    } else {
        Err(QinfoError::BudgetExceeded(format!("ladder on {big:.3e} dimensions with non-diagonal sources")))
    }
}

fn ladder_diagonal(sources: &[IIDSource], n: usize, epsilon: f64) -> Result<LadderReport> {
    let mut tables = vec![];
    for s in sources {
        tables.push(sequence_table(s, &typical_projector(s, n, epsilon)?)?);
    }
    let m = sources.len();
    let len = tables[0].probabilities.len();
    // First ladder index at which each sequence is typical (m = give up).
    let stop: Vec<usize> = (0..len).map(|x| (0..m).find(|&i| tables[i].typical[x]).unwrap_or(m)).collect();
    let s1 = sources[0].entropy();
    let mut reports = vec![];
    for (i, src) in sources.iter().enumerate() {
        let probs = &tables[i].probabilities;
        let mut stop_p = vec![0.0; m + 1];
        for x in 0..len {
            stop_p[stop[x]] += probs[x];
        }
        let fidelity_bound = stop_p[i] * stop_p[i];
        let fidelity = stop_p[..m].iter().map(|p| p * p).sum();
        let cross_mass = (i > 0).then(|| {
            let cm: f64 = (0..len).filter(|&x| tables[0].typical[x] && tables[i].typical[x]).map(|x| probs[x]).sum();
            (cm, (n as f64 * (s1 - src.entropy() + 2.0 * epsilon)).exp2())
        });
        reports.push(LadderSourceReport {
            entropy: src.entropy(),
            stop_probabilities: stop_p,
            fidelity_bound,
            fidelity,
            cross_mass,
        });
    }
    Ok(LadderReport { n, epsilon, sources: reports })
}

/// Dense projector onto the ε-typical subspace of ρ^{⊗n}.
pub fn dense_projector(src: &IIDSource, n: usize, epsilon: f64) -> Result<ComplexMatrix> {
    let sub = typical_projector(src, n, epsilon)?;
    let table = sequence_table(src, &sub)?;
    let big = table.typical.len();
    if big > DENSE_BUDGET {
        return Err(QinfoError::BudgetExceeded(format!("dense projector on {big} dimensions")));
    }
    let u = tensor_all(&vec![src.basis.clone(); n]);
    let mut diag = zeros(big, big);
    for x in 0..big {
        if table.typical[x] {
            diag[(x, x)] = c(1.0, 0.0);
        }
    }
    Ok(&u * diag * u.adjoint())
}

fn ladder_dense(sources: &[IIDSource], n: usize, epsilon: f64) -> Result<LadderReport> {
    let projs = sources.iter().map(|s| dense_projector(s, n, epsilon)).collect::<Result<Vec<_>>>()?;
    let big = projs[0].nrows();
    let id = identity(big);
    // R_r = P_r Q_{r−1}…Q_1 and the give-up operator G = Q_M…Q_1.
    let mut chain = id.clone();
    let mut branches = vec![];
    for p in &projs {
        branches.push(p * &chain);
        chain = (&id - p) * chain;
    }
    let give_up = chain;
    // Standard state: first typical eigen-sequence of the lowest-entropy source.
    let t0 = sequence_table(&sources[0], &typical_projector(&sources[0], n, epsilon)?)?;
    let first = t0.typical.iter().position(|&b| b).unwrap_or(0);
    let u0 = tensor_all(&vec![sources[0].basis.clone(); n]);
    let s_vec = u0.column(first).into_owned();
    let s1 = sources[0].entropy();
    let mut reports = vec![];
    for (i, src) in sources.iter().enumerate() {
        let rho = tensor_all(&vec![src.rho.matrix().clone(); n]);
        let mut stop_p: Vec<f64> = branches.iter().map(|r| (r * &rho * r.adjoint()).trace().re).collect();
        stop_p.push((&give_up * &rho * give_up.adjoint()).trace().re);
        let amps: Vec<f64> = branches.iter().map(|r| (r * &rho).trace().norm_sqr()).collect();
        let fidelity = amps.iter().sum::<f64>() + (&give_up * &rho * &s_vec).norm_squared();
        let cross_mass = (i > 0).then(|| {
            let cm = (&projs[i] * &projs[0] * &rho).trace().norm();
            (cm, (n as f64 * (s1 - src.entropy() + 2.0 * epsilon)).exp2())
        });
        reports.push(LadderSourceReport {
            entropy: src.entropy(),
            stop_probabilities: stop_p,
            fidelity_bound: amps[i],
            fidelity,
            cross_mass,
        });
    }
    Ok(LadderReport { n, epsilon, sources: reports })
}

/// (n, mass, rank exponent, fidelity) for Schumacher schemes sized to the typical rank.
pub fn compression_sweep(src: &IIDSource, ns: &[usize], epsilon: f64) -> Result<Vec<(usize, f64, f64, f64)>> {
    ns.iter()
        .map(|&n| {
            let sub = typical_projector(src, n, epsilon)?;
            Ok((n, sub.mass, sub.rank_exponent(), projection_fidelity(sub.mass)))
        })
        .collect()
}

/// max |[P, ρ^{⊗n}]| for the dense typical projector.
pub fn commutator_norm(src: &IIDSource, n: usize, epsilon: f64) -> Result<f64> {
    let p = dense_projector(src, n, epsilon)?;
    let rho = tensor_all(&vec![src.rho.matrix().clone(); n]);
    Ok(max_abs(&(&p * &rho - &rho * &p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::binary_entropy;
    use crate::linalg::{purify, schmidt_pure, PureState};
    use crate::metrics::dynamic_fidelity;
    use crate::ops::compose;
    use crate::random::{random_density, seeded};
    use approx::assert_abs_diff_eq;

    fn binomial_mass(n: usize, p: f64, eps: f64) -> (f64, f64) {
        // Direct binomial-tail oracle over the number of minority outcomes.
        let s = binary_entropy(p);
        let (mut mass, mut rank) = (0.0, 0.0);
        for k in 0..=n {
            let lp = (n - k) as f64 * (1.0 - p).log2() + k as f64 * p.log2();
            if (-lp / n as f64 - s).abs() <= eps + 1e-12 {
                let b = binomial(n, k);
                rank += b;
                mass += b * lp.exp2();
            }
        }
        (mass, rank)
    }

    #[test]
    fn pure_and_maximally_mixed() {
        let pure = IIDSource::diagonal(&[1.0, 0.0]).unwrap();
        for eps in [0.01, 0.3] {
            let t = typical_projector(&pure, 10, eps).unwrap();
            assert_eq!(t.projector_rank, 1.0);
            assert_abs_diff_eq!(t.mass, 1.0, epsilon = 1e-15);
        }
        let mixed = IIDSource::diagonal(&[0.5, 0.5]).unwrap();
        let t = typical_projector(&mixed, 12, 0.01).unwrap();
        assert_eq!(t.projector_rank, 4096.0);
        assert_abs_diff_eq!(t.mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn binomial_oracle() {
        let src = IIDSource::diagonal(&[0.9, 0.1]).unwrap();
        for n in [4, 8, 12, 16, 20, 40] {
            for eps in [0.05, 0.1, 0.35] {
                let t = typical_projector(&src, n, eps).unwrap();
                let (mass, rank) = binomial_mass(n, 0.1, eps);
                assert_abs_diff_eq!(t.mass, mass, epsilon = 1e-12);
                assert_eq!(t.projector_rank, rank);
                assert!(t.rank_bound_holds());
            }
        }
    }

    #[test]
    fn desk_scale_masses() {
        // At ε = 0.1 the window holds only one or two binomial classes for n ≤ 20.
        let src = IIDSource::diagonal(&[0.9, 0.1]).unwrap();
        let m: Vec<f64> = [4, 8, 12, 16, 20].iter().map(|&n| typical_projector(&src, n, 0.1).unwrap().mass).collect();
        let expect = [0.0, 0.3826, 0.3766, 0.2745, 0.2852];
        for (a, b) in m.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-4);
        }
        let t = typical_projector(&src, 16, 0.1).unwrap();
        assert!(t.projector_rank <= (16.0 * (binary_entropy(0.1) + 0.1)).exp2());
        // Mass does approach 1 at larger n or wider windows.
        assert!(typical_projector(&src, 400, 0.1).unwrap().mass > 0.9);
        assert!(typical_projector(&src, 16, 0.35).unwrap().mass > 0.9);
    }

    #[test]
    fn general_eigenbasis_matches_diagonal() {
        let mut rng = seeded(31);
        let rho = random_density(&SystemShape::single(3), &mut rng);
        let src = IIDSource::new(rho.clone());
        assert!(!src.is_diagonal());
        let diag = IIDSource::diagonal(&rho.eigenvalues()).unwrap();
        for n in [3, 5] {
            let a = typical_projector(&src, n, 0.2).unwrap();
            let b = typical_projector(&diag, n, 0.2).unwrap();
            assert_abs_diff_eq!(a.mass, b.mass, epsilon = 1e-12);
            assert_eq!(a.projector_rank, b.projector_rank);
        }
        assert!(commutator_norm(&src, 4, 0.2).unwrap() < 1e-12);
        let p = dense_projector(&src, 4, 0.2).unwrap();
        let rho4 = tensor_all(&vec![rho.matrix().clone(); 4]);
        assert_abs_diff_eq!((&p * &rho4).trace().re, typical_projector(&src, 4, 0.2).unwrap().mass, epsilon = 1e-12);
    }

    #[test]
    fn budget() {
        let src = IIDSource::diagonal(&[0.25; 4]).unwrap();
        assert!(matches!(typical_projector(&src, 2000, 0.1), Err(QinfoError::BudgetExceeded(_))));
        let q = IIDSource::diagonal(&[0.9, 0.1]).unwrap();
        let t = typical_projector(&q, 30, 0.1).unwrap();
        assert!(matches!(sequence_table(&q, &t), Err(QinfoError::BudgetExceeded(_))));
    }

    #[test]
    fn basis_sequences_are_typical() {
        let src = IIDSource::diagonal(&[0.9, 0.1]).unwrap();
        let t = typical_projector(&src, 6, 0.2).unwrap();
        let seqs = basis_sequences(&src, &t).unwrap();
        assert_eq!(seqs.len() as f64, t.projector_rank);
        assert!(seqs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn schumacher_examples() {
        let pure = IIDSource::diagonal(&[1.0, 0.0]).unwrap();
        let s = schumacher_scheme(&pure, 8, 0.1, 0.0).unwrap();
        assert_eq!(s.fidelity, 1.0);
        let mixed = IIDSource::diagonal(&[0.5, 0.5]).unwrap();
        let s = schumacher_scheme(&mixed, 8, 0.1, 1.0).unwrap();
        assert_abs_diff_eq!(s.fidelity, 1.0, epsilon = 1e-12);
        let src = IIDSource::diagonal(&[0.9, 0.1]).unwrap();
        let eps = 0.6 - binary_entropy(0.1);
        let s = schumacher_scheme(&src, 12, eps, 0.6).unwrap();
        let mass = typical_projector(&src, 12, eps).unwrap().mass;
        assert!(s.fidelity >= mass * mass - 1e-12);
        assert!(s.kept.len() <= s.code_dim());
        assert!(matches!(schumacher_scheme(&mixed, 8, 0.1, 0.5), Err(QinfoError::RateTooSmall(_))));
    }

    #[test]
    fn materialized_scheme_matches_closed_form() {
        let mut rng = seeded(32);
        let rho = random_density(&SystemShape::single(2), &mut rng);
        let src = IIDSource::new(rho.clone());
        let n = 4;
        let s = schumacher_scheme(&src, n, 0.4, 0.8).unwrap();
        let (enc, dec) = s.materialize(&src).unwrap();
        assert!(enc.is_complete() && dec.is_complete());
        let rho_n = DensityOperator::new(tensor_all(&vec![rho.matrix().clone(); n]), SystemShape::qubits(n)).unwrap();
        let f = dynamic_fidelity(&rho_n, &compose(&dec, &enc).unwrap()).unwrap();
        assert_abs_diff_eq!(f, s.fidelity, epsilon = 1e-10);
        // Schmidt-number accounting.
        let code = enc.apply_normalized(&rho_n).unwrap();
        let rank = code.eigenvalues().iter().filter(|&&x| x > 1e-12).count();
        assert!(rank <= s.code_dim());
        let psi = purify(&rho_n);
        let full = compose(&dec, &enc).unwrap();
        let d = rho_n.dim();
        for k in full.kraus() {
            let v = crate::linalg::tensor(k, &identity(d)) * psi.amplitudes();
            if v.norm() < 1e-12 {
                continue;
            }
            let ps = PureState::from_unnormalized(v, SystemShape::new(vec![d, d]).unwrap()).unwrap();
            assert!(schmidt_pure(&ps, 1).unwrap().schmidt_number() <= s.code_dim());
        }
    }

    #[test]
    fn strong_converse_examples() {
        let mixed = IIDSource::diagonal(&[0.5, 0.5]).unwrap();
        let b = strong_converse_bound(&mixed, 20, 0.3, 0.05);
        assert_abs_diff_eq!(b, (-20.0 * 0.65f64).exp2() + 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.0500, epsilon = 1e-3);
        assert!(strong_converse_bound(&mixed, 20, 1.0, 0.05) >= 1.0);
        let best = best_effort_scheme(&mixed, 20, 0.3).unwrap();
        assert!(best.fidelity <= b);
    }

    #[test]
    fn converse_and_side_channel_grid() {
        let src = IIDSource::diagonal(&[0.9, 0.1]).unwrap();
        let s = binary_entropy(0.1);
        for n in [4, 8, 12, 16, 20] {
            for rate in [0.2, 0.3, s - 0.05] {
                let env = strong_converse_envelope(&src, n, rate).unwrap();
                let best = best_effort_scheme(&src, n, rate).unwrap().fidelity;
                let side = side_channel_fidelity(&src, n, rate).unwrap();
                assert!(best <= env + 1e-12, "n={n} R={rate}: {best} > {env}");
                assert!(side <= env + 1e-12, "n={n} R={rate}: side {side} > {env}");
                if (rate - 0.3).abs() < 1e-12 {
                    assert!(best <= strong_converse_bound(&src, n, rate, 0.1));
                    assert!(side <= strong_converse_bound(&src, n, rate, 0.1));
                }
            }
        }
    }

    #[test]
    fn ladder_two_sources() {
        let s1 = IIDSource::diagonal(&[0.9, 0.1]).unwrap();
        let s2 = IIDSource::diagonal(&[0.5, 0.5]).unwrap();
        let rep = universal_ladder(&[s1.clone(), s2.clone()], 16, 0.35, 0.1).unwrap();
        assert!(rep.sources[0].identification_probability(0) > 0.9);
        assert!(rep.sources[1].identification_probability(1) > 0.9);
        for eps in [0.1, 0.2, 0.35] {
            let r = universal_ladder(&[s1.clone(), s2.clone()], 16, eps, 0.1).unwrap();
            let (cm, bound) = r.sources[1].cross_mass.unwrap();
            assert!(cm <= bound, "eps {eps}: {cm} > {bound}");
            // 65536 summands.
            for src in &r.sources {
                assert!(src.fidelity >= src.fidelity_bound - 1e-12);
                assert_abs_diff_eq!(src.stop_probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
            }
        }
        assert!(matches!(universal_ladder(&[s2.clone(), s1.clone()], 8, 0.1, 0.1), Err(QinfoError::EntropyMargin(_))));
    }

    #[test]
    fn ladder_single_source_is_schumacher() {
        let src = IIDSource::diagonal(&[0.8, 0.2]).unwrap();
        let r = universal_ladder(std::slice::from_ref(&src), 10, 0.2, 0.1).unwrap();
        let mass = typical_projector(&src, 10, 0.2).unwrap().mass;
        assert_abs_diff_eq!(r.sources[0].fidelity, mass * mass, epsilon = 1e-12);
    }

    #[test]
    fn ladder_dense_matches_diagonal() {
        let s1 = IIDSource::diagonal(&[0.9, 0.1]).unwrap();
        let s2 = IIDSource::diagonal(&[0.6, 0.4]).unwrap();
        let a = ladder_diagonal(&[s1.clone(), s2.clone()], 6, 0.3).unwrap();
        let b = ladder_dense(&[s1, s2], 6, 0.3).unwrap();
        for (x, y) in a.sources.iter().zip(&b.sources) {
            assert_abs_diff_eq!(x.fidelity, y.fidelity, epsilon = 1e-12);
            assert_abs_diff_eq!(x.fidelity_bound, y.fidelity_bound, epsilon = 1e-12);
            for (p, q) in x.stop_probabilities.iter().zip(&y.stop_probabilities) {
                assert_abs_diff_eq!(p, q, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ladder_non_commuting() {
        let mut rng = seeded(33);
        let s1 = IIDSource::diagonal(&[0.95, 0.05]).unwrap();
        let s2 = IIDSource::new(random_density(&SystemShape::single(2), &mut rng));
        assert!(s2.entropy() > s1.entropy() + 0.05);
        let r = universal_ladder(&[s1, s2], 6, 0.3, 0.05).unwrap();
        for src in &r.sources {
            assert!(src.fidelity >= src.fidelity_bound - 1e-12);
            assert_abs_diff_eq!(src.stop_probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }
}
