//! Quantum operations in operator-sum form.

pub mod channels;

use nalgebra::{Matrix3, Vector3};

pub use channels::{standard_channel, StandardChannel};

use crate::error::{QinfoError, Result};
use crate::linalg::{
    c, eigh, eigh_raw, hermitize, identity, ket, max_abs, partial_trace_matrix, pauli_x, pauli_y, pauli_z,
    sqrt_psd, tensor, zeros, ComplexMatrix, ComplexVector, DensityOperator, SystemShape, C64,
};

/// Tolerance for map equality and completeness tests.
pub const MAP_TOL: f64 = 1e-9;
/// Below this trace an operation is treated as never occurring.
pub const MIN_PROBABILITY: f64 = 1e-14;

/// ρ ↦ Σ E_i ρ E_i†.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumOperation {
    kraus: Vec<ComplexMatrix>,
    in_shape: SystemShape,
    out_shape: SystemShape,
}

/// Output of `apply`: the unnormalized image and its trace.
#[derive(Clone, Debug)]
pub struct Applied {
    pub matrix: ComplexMatrix,
    pub trace: f64,
}

impl QuantumOperation {
    pub fn new(kraus: Vec<ComplexMatrix>, in_shape: SystemShape, out_shape: SystemShape) -> Result<Self> {
        if kraus.is_empty() {
            return Err(QinfoError::DimensionMismatch("no Kraus operators".into()));
        }
        let (r, cl) = (out_shape.total(), in_shape.total());
        if let Some(k) = kraus.iter().find(|k| k.nrows() != r || k.ncols() != cl) {
            return Err(QinfoError::DimensionMismatch(format!(
                "Kraus operator is {}x{}, expected {r}x{cl}",
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(Self { kraus, in_shape, out_shape })
    }

    /// Square Kraus operators on a single factor of their dimension.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let d = kraus.first().map_or(0, |k| k.nrows());
        let di = kraus.first().map_or(0, |k| k.ncols());
        if d < 2 || di < 2 {
            return Err(QinfoError::DimensionMismatch("dimension must be at least 2".into()));
        }
        Self::new(kraus, SystemShape::single(di), SystemShape::single(d))
    }

    pub fn unitary(u: ComplexMatrix, shape: SystemShape) -> Result<Self> {
        Self::new(vec![u], shape.clone(), shape)
    }

    pub fn identity(shape: SystemShape) -> Self {
        let d = shape.total();
        Self { kraus: vec![identity(d)], in_shape: shape.clone(), out_shape: shape }
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn in_shape(&self) -> &SystemShape {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &SystemShape {
        &self.out_shape
    }

    pub fn in_dim(&self) -> usize {
        self.in_shape.total()
    }

    pub fn out_dim(&self) -> usize {
        self.out_shape.total()
    }

    pub fn with_shapes(&self, in_shape: SystemShape, out_shape: SystemShape) -> Result<Self> {
        Self::new(self.kraus.clone(), in_shape, out_shape)
    }

    /// Σ E_i ρ E_i† on a bare matrix.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = zeros(self.out_dim(), self.out_dim());
        for e in &self.kraus {
            out += e * rho * e.adjoint();
        }
        out
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<Applied> {
        if rho.dim() != self.in_dim() {
            return Err(QinfoError::DimensionMismatch(format!(
                "state of dimension {} into operation on dimension {}",
                rho.dim(),
                self.in_dim()
            )));
        }
        let matrix = hermitize(&self.apply_matrix(rho.matrix()));
        let trace = matrix.trace().re;
        Ok(Applied { matrix, trace })
    }

    /// ℰ(ρ)/tr ℰ(ρ).
    pub fn apply_normalized(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let a = self.apply(rho)?;
        if a.trace <= MIN_PROBABILITY {
            return Err(QinfoError::ZeroProbability(a.trace));
        }
        DensityOperator::new(a.matrix / c(a.trace, 0.0), self.out_shape.clone())
    }

    /// Σ E_i† E_i
    pub fn completeness_operator(&self) -> ComplexMatrix {
        let mut s = zeros(self.in_dim(), self.in_dim());
        for e in &self.kraus {
            s += e.adjoint() * e;
        }
        s
    }

    pub fn is_complete(&self) -> bool {
        max_abs(&(self.completeness_operator() - identity(self.in_dim()))) < MAP_TOL
    }

    /// Choi operator (I ⊗ ℰ)(|α⟩⟨α|) with |α⟩ = Σ|ii⟩/√d.
    pub fn choi(&self) -> ComplexMatrix {
        choi_of_map(self.in_dim(), |m| self.apply_matrix(m))
    }

    /// Each Kraus operator multiplied by √p.
    pub fn scaled(&self, p: f64) -> Self {
        let s = c(p.max(0.0).sqrt(), 0.0);
        Self { kraus: self.kraus.iter().map(|k| k * s).collect(), ..self.clone() }
    }

    /// The operation ρ ↦ Σ_k ℰ_k(ρ).
    pub fn sum(ops: &[QuantumOperation]) -> Result<Self> {
        let first = ops.first().ok_or_else(|| QinfoError::DimensionMismatch("empty sum".into()))?;
        let mut kraus = vec![];
        for op in ops {
            if op.in_dim() != first.in_dim() || op.out_dim() != first.out_dim() {
                return Err(QinfoError::DimensionMismatch("summands differ in shape".into()));
            }
            kraus.extend(op.kraus.iter().cloned());
        }
        Self::new(kraus, first.in_shape.clone(), first.out_shape.clone())
    }

    /// Drop Kraus operators whose entries all lie below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let kept: Vec<ComplexMatrix> = self.kraus.iter().filter(|k| max_abs(k) > tol).cloned().collect();
        if kept.is_empty() {
            return Self { kraus: vec![self.kraus[0].clone() * c(0.0, 0.0)], ..self.clone() };
        }
        Self { kraus: kept, ..self.clone() }
    }
}

/// Choi operator of an arbitrary linear map on d×d matrices.
pub fn choi_of_map(d: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let mut blocks = vec![];
    for i in 0..d {
        for j in 0..d {
            let mut e = zeros(d, d);
            e[(i, j)] = c(1.0, 0.0);
            blocks.push(f(&e));
        }
    }
    let dout = blocks[0].nrows();
    let mut out = zeros(d * dout, d * dout);
    for i in 0..d {
        for j in 0..d {
            let b = &blocks[i * d + j];
            out.view_mut((i * dout, j * dout), (dout, dout)).copy_from(b);
        }
    }
    out / c(d as f64, 0.0)
}

pub fn maps_equal(a: &QuantumOperation, b: &QuantumOperation) -> bool {
    a.in_dim() == b.in_dim() && a.out_dim() == b.out_dim() && max_abs(&(a.choi() - b.choi())) < MAP_TOL
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Completeness {
    Complete,
    PhysicalIncomplete,
    Nonphysical,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub class: Completeness,
    /// Largest eigenvalue of Σ E†E (or of d·tr_out Choi for maps).
    pub max_completeness_eigenvalue: f64,
    /// Smallest eigenvalue of the Choi operator.
    pub choi_min_eigenvalue: f64,
    pub choi_eigenvalues: Vec<f64>,
}

fn classify_parts(completeness: &ComplexMatrix, choi: &ComplexMatrix) -> Classification {
    let ce = eigh_raw(choi).values;
    let min = *ce.last().unwrap();
    let s = eigh_raw(completeness).values;
    let (hi, lo) = (s[0], *s.last().unwrap());
    let class = if min < -MAP_TOL || hi > 1.0 + MAP_TOL {
        Completeness::Nonphysical
    } else if lo > 1.0 - MAP_TOL {
        Completeness::Complete
    } else {
        Completeness::PhysicalIncomplete
    };
    Classification { class, max_completeness_eigenvalue: hi, choi_min_eigenvalue: min, choi_eigenvalues: ce }
}

pub fn classify(op: &QuantumOperation) -> Classification {
    classify_parts(&op.completeness_operator(), &op.choi())
}

/// Classify a linear map given only by its action on d×d matrices.
pub fn classify_map(d: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Classification {
    let choi = choi_of_map(d, f);
    let dout = choi.nrows() / d;
    // tr_out of the Choi operator is (Σ E†E)ᵀ/d for Kraus maps.
    let red = partial_trace_matrix(&choi, &[d, dout], &[0]).expect("square");
    classify_parts(&(red.transpose() * c(d as f64, 0.0)), &choi)
}

/// Kraus set {F_j E_i} of ρ ↦ second(first(ρ)).
pub fn compose(second: &QuantumOperation, first: &QuantumOperation) -> Result<QuantumOperation> {
    if second.in_dim() != first.out_dim() {
        return Err(QinfoError::DimensionMismatch(format!(
            "cannot feed dimension {} into {}",
            first.out_dim(),
            second.in_dim()
        )));
    }
    let mut kraus = vec![];
    for f in &second.kraus {
        for e in &first.kraus {
            kraus.push(f * e);
        }
    }
    QuantumOperation::new(kraus, first.in_shape.clone(), second.out_shape.clone())
}

/// Kraus set {E_i ⊗ F_j}.
pub fn tensor_ops(a: &QuantumOperation, b: &QuantumOperation) -> QuantumOperation {
    let mut kraus = vec![];
    for e in &a.kraus {
        for f in &b.kraus {
            kraus.push(tensor(e, f));
        }
    }
    QuantumOperation {
        kraus,
        in_shape: a.in_shape.concat(&b.in_shape),
        out_shape: a.out_shape.concat(&b.out_shape),
    }
}

fn kraus_columns(op: &QuantumOperation, n: usize) -> ComplexMatrix {
    let (r, cl) = (op.out_dim(), op.in_dim());
    let mut m = zeros(r * cl, n);
    for (k, e) in op.kraus.iter().enumerate() {
        for i in 0..r {
            for j in 0..cl {
                m[(i * cl + j, k)] = e[(i, j)];
            }
        }
    }
    m
}

/// Complete a partial isometry to a unitary by replacing its singular values with ones.
fn unitary_completion(w0: &ComplexMatrix) -> ComplexMatrix {
    let svd = w0.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Unitary u with E_j = Σ_k u_jk F_k when `a` and `b` are the same map.
///
/// The shorter Kraus list is padded with zero operators.
pub fn kraus_equivalent(a: &QuantumOperation, b: &QuantumOperation) -> Option<ComplexMatrix> {
    if !maps_equal(a, b) {
        return None;
    }
    let n = a.kraus.len().max(b.kraus.len());
    let am = kraus_columns(a, n);
    let bm = kraus_columns(b, n);
    let pinv = bm.clone().pseudo_inverse(1e-10).ok()?;
    let w = unitary_completion(&(pinv * &am));
    if max_abs(&(&bm * &w - &am)) > 1e-8 {
        return None;
    }
    Some(w.transpose())
}

/// System–environment unitary reproducing an operation.
#[derive(Clone, Debug)]
pub struct EnvironmentModel {
    /// Acts on system ⊗ environment, system first.
    pub unitary: ComplexMatrix,
    pub system_dim: usize,
    pub env_dim: usize,
    pub env_initial: ComplexVector,
    /// Selects the non-padding branches for incomplete operations.
    pub projector: Option<ComplexMatrix>,
}

/// Orthonormal basis of the complement of the column space of an isometry.
fn complement_basis(v: &ComplexMatrix) -> Vec<ComplexVector> {
    let n = v.nrows();
    let e = eigh(&(identity(n) - v * v.adjoint()));
    (0..n)
        .filter(|&j| e.values[j] > 0.5)
        .map(|j| e.vectors.column(j).into_owned())
        .collect()
}

/// U|ψ⟩|0⟩ = Σ_i E_i|ψ⟩|i⟩, with E_∞ = √(I − ΣE†E) appended for incomplete operations.
pub fn environment_model(op: &QuantumOperation) -> Result<EnvironmentModel> {
    let cl = classify(op);
    if cl.class == Completeness::Nonphysical {
        return Err(QinfoError::Nonphysical(format!(
            "completeness eigenvalue {:.3e}",
            cl.max_completeness_eigenvalue
        )));
    }
    if op.in_dim() != op.out_dim() {
        return Err(QinfoError::DimensionMismatch(
            "environment models need equal input and output dimensions".into(),
        ));
    }
    let d = op.in_dim();
    let mut kraus = op.kraus.clone();
    let incomplete = cl.class == Completeness::PhysicalIncomplete;
    if incomplete {
        kraus.push(sqrt_psd(&(identity(d) - op.completeness_operator())));
    }
    let m = kraus.len();
    let mut u = zeros(d * m, d * m);
    let mut iso = zeros(d * m, d);
    for (i, e) in kraus.iter().enumerate() {
        for a in 0..d {
            for j in 0..d {
                iso[(a * m + i, j)] = e[(a, j)];
            }
        }
    }
    let rest = complement_basis(&iso);
    let mut fill = rest.into_iter();
    for col in 0..d * m {
        if col % m == 0 {
            u.set_column(col, &iso.column(col / m));
        } else {
            u.set_column(col, &fill.next().expect("complement has the right size"));
        }
    }
    let projector = incomplete.then(|| {
        let mut p = zeros(m, m);
        for i in 0..m - 1 {
            p[(i, i)] = c(1.0, 0.0);
        }
        p
    });
    Ok(EnvironmentModel { unitary: u, system_dim: d, env_dim: m, env_initial: ket(m, 0), projector })
}

/// E_jk = √q_j ⟨k|P U|j⟩ for an environment starting in Σ q_j |j⟩⟨j|.
pub fn kraus_from_unitary(
    u: &ComplexMatrix,
    system_dim: usize,
    env_rho: &ComplexMatrix,
    projector: Option<&ComplexMatrix>,
) -> Result<QuantumOperation> {
    let (d, m) = (system_dim, env_rho.nrows());
    if u.nrows() != d * m || !u.is_square() {
        return Err(QinfoError::DimensionMismatch("unitary does not act on system ⊗ environment".into()));
    }
    let p = projector.cloned().unwrap_or_else(|| identity(m));
    let pu = tensor(&identity(d), &p) * u;
    let e = eigh(env_rho);
    let mut kraus = vec![];
    for (jj, &q) in e.values.iter().enumerate() {
        if q <= 1e-14 {
            continue;
        }
        let env_j: ComplexVector = e.vectors.column(jj).into_owned();
        let block = &pu * tensor(&identity(d), &ComplexMatrix::from_column_slice(m, 1, env_j.as_slice()));
        for k in 0..m {
            let ek = ComplexMatrix::from_fn(d, d, |a, b| block[(a * m + k, b)] * c(q.sqrt(), 0.0));
            if max_abs(&ek) > 1e-14 {
                kraus.push(ek);
            }
        }
    }
    if kraus.is_empty() {
        kraus.push(zeros(d, d));
    }
    QuantumOperation::new(kraus, SystemShape::single(d), SystemShape::single(d))
}

/// Recover the operation selected by `outcome` (default: the model's projector).
pub fn kraus_from_environment(model: &EnvironmentModel, outcome: Option<&ComplexMatrix>) -> Result<QuantumOperation> {
    let env_rho = &model.env_initial * model.env_initial.adjoint();
    kraus_from_unitary(&model.unitary, model.system_dim, &env_rho, outcome.or(model.projector.as_ref()))
}

/// W_ij = tr(E_i ρ E_j†)/tr ℰ(ρ).
pub fn w_matrix(op: &QuantumOperation, rho: &DensityOperator) -> Result<ComplexMatrix> {
    let a = op.apply(rho)?;
    if a.trace <= MIN_PROBABILITY {
        return Err(QinfoError::ZeroProbability(a.trace));
    }
    let n = op.kraus.len();
    let er: Vec<ComplexMatrix> = op.kraus.iter().map(|e| e * rho.matrix()).collect();
    let mut w = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // tr(E_i ρ E_j†) = Σ_ab (E_i ρ)_ab conj(E_j)_ab
            let mut s = C64::new(0.0, 0.0);
            for (x, y) in er[i].iter().zip(op.kraus[j].iter()) {
                s += x * y.conj();
            }
            w[(i, j)] = s / a.trace;
        }
    }
    Ok(hermitize(&w))
}

/// Kraus set whose W matrix at ρ is diagonal, ordered by descending weight.
pub fn canonical_kraus(op: &QuantumOperation, rho: &DensityOperator) -> Result<QuantumOperation> {
    let w = w_matrix(op, rho)?;
    let e = eigh(&w);
    let n = op.kraus.len();
    let kraus = (0..n)
        .map(|j| {
            let mut f = zeros(op.out_dim(), op.in_dim());
            for i in 0..n {
                f += &op.kraus[i] * e.vectors[(i, j)].conj();
            }
            f
        })
        .collect();
    QuantumOperation::new(kraus, op.in_shape.clone(), op.out_shape.clone())
}

/// Bloch-sphere action λ ↦ Mλ + c of a qubit operation.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMapQubit {
    pub m: Matrix3<f64>,
    pub c: Vector3<f64>,
}

impl AffineMapQubit {
    pub fn apply(&self, bloch: &Vector3<f64>) -> Vector3<f64> {
        self.m * bloch + self.c
    }
}

pub fn paulis() -> [ComplexMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

pub fn bloch_vector(rho: &ComplexMatrix) -> Vector3<f64> {
    let p = paulis();
    Vector3::new((&p[0] * rho).trace().re, (&p[1] * rho).trace().re, (&p[2] * rho).trace().re)
}

pub fn bloch_state(v: &Vector3<f64>) -> ComplexMatrix {
    let p = paulis();
    (identity(2) + &p[0] * c(v[0], 0.0) + &p[1] * c(v[1], 0.0) + &p[2] * c(v[2], 0.0)) * c(0.5, 0.0)
}

/// M_jk = ½ tr(σ_j ℰ(σ_k)), c_j = ½ tr(σ_j ℰ(I)).
pub fn qubit_affine(op: &QuantumOperation) -> Result<AffineMapQubit> {
    if op.in_dim() != 2 || op.out_dim() != 2 {
        return Err(QinfoError::DimensionMismatch("qubit_affine needs a one-qubit operation".into()));
    }
    if !op.is_complete() {
        return Err(QinfoError::InvalidParameter("qubit_affine needs a complete operation".into()));
    }
    let p = paulis();
    let img: Vec<ComplexMatrix> = p.iter().map(|s| op.apply_matrix(s)).collect();
    let m = Matrix3::from_fn(|j, k| 0.5 * (&p[j] * &img[k]).trace().re);
    let id = op.apply_matrix(&identity(2));
    let cv = Vector3::from_fn(|j, _| 0.5 * (&p[j] * &id).trace().re);
    Ok(AffineMapQubit { m, c: cv })
}

/// Positive operator valued measure.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let d = elements.first().map_or(0, |e| e.nrows());
        let mut sum = zeros(d, d);
        for e in &elements {
            if e.nrows() != d || !e.is_square() {
                return Err(QinfoError::DimensionMismatch("POVM elements differ in size".into()));
            }
            let ev = eigh_raw(e).values;
            if crate::linalg::hermiticity_deviation(e) > MAP_TOL || *ev.last().unwrap() < -MAP_TOL {
                return Err(QinfoError::InvalidParameter("POVM element is not positive".into()));
            }
            sum += e;
        }
        if d == 0 || max_abs(&(sum - identity(d))) > 1e-8 {
            return Err(QinfoError::InvalidParameter("POVM elements do not sum to the identity".into()));
        }
        Ok(Self { elements })
    }

    /// M_m = Σ_i E_mi† E_mi for each branch operation.
    pub fn from_branches(branches: &[QuantumOperation]) -> Result<Self> {
        Self::new(branches.iter().map(|b| b.completeness_operator()).collect())
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }
}

/// p(m) = tr(M_m ρ)
pub fn povm_outcomes(povm: &Povm, rho: &DensityOperator) -> Result<Vec<f64>> {
    if povm.elements[0].nrows() != rho.dim() {
        return Err(QinfoError::DimensionMismatch("POVM and state differ in dimension".into()));
    }
    Ok(povm.elements.iter().map(|m| (m * rho.matrix()).trace().re).collect())
}

#[cfg(test)]
mod tests {
    use super::channels::*;
    use super::*;
    use crate::linalg::{diag, projector, real_matrix, unit};
    use crate::random::{random_channel_on, random_density, seeded};
    use approx::assert_relative_eq;

    fn plus() -> ComplexVector {
        ComplexVector::from_vec(vec![c(1., 0.), c(1., 0.)]) / c(2f64.sqrt(), 0.)
    }

    fn q(d: usize) -> SystemShape {
        SystemShape::single(d)
    }

    #[test]
    fn apply_examples() {
        let rho = DensityOperator::from_matrix(projector(&plus())).unwrap();
        let out = decohering().apply(&rho).unwrap();
        assert!(max_abs(&(out.matrix - diag(&[0.5, 0.5]))) < 1e-12);
        assert_relative_eq!(out.trace, 1.0, epsilon = 1e-12);
        let branch = QuantumOperation::from_kraus(vec![unit(2, 0, 0)]).unwrap();
        let out = branch.apply(&DensityOperator::diagonal(&[0.75, 0.25]).unwrap()).unwrap();
        assert_relative_eq!(out.trace, 0.75, epsilon = 1e-12);
        let mut rng = seeded(1);
        let u = crate::random::haar_unitary(2, &mut rng);
        let rho = random_density(&q(2), &mut rng);
        let out = QuantumOperation::unitary(u.clone(), q(2)).unwrap().apply(&rho).unwrap();
        assert!(max_abs(&(out.matrix - &u * rho.matrix() * u.adjoint())) < 1e-12);
        assert!(branch.apply(&DensityOperator::maximally_mixed(q(3))).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(classify(&depolarizing(0.4).unwrap()).class, Completeness::Complete);
        let p0 = QuantumOperation::from_kraus(vec![unit(2, 0, 0)]).unwrap();
        assert_eq!(classify(&p0).class, Completeness::PhysicalIncomplete);
        let big = QuantumOperation::from_kraus(vec![identity(2) * c(1.1, 0.)]).unwrap();
        assert_eq!(classify(&big).class, Completeness::Nonphysical);
        let t = classify_map(2, |m| m.transpose());
        assert_eq!(t.class, Completeness::Nonphysical);
        let ev = t.choi_eigenvalues;
        assert_relative_eq!(ev[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(ev[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(ev[2], 0.5, epsilon = 1e-12);
        assert_relative_eq!(ev[3], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn composition() {
        let mut rng = seeded(2);
        let u = crate::random::haar_unitary(2, &mut rng);
        let a = QuantumOperation::unitary(u.clone(), q(2)).unwrap();
        let b = QuantumOperation::unitary(u.adjoint(), q(2)).unwrap();
        assert!(maps_equal(&compose(&b, &a).unwrap(), &QuantumOperation::identity(q(2))));
        let zx = compose(&phase_flip(1.0).unwrap(), &bit_flip(1.0).unwrap()).unwrap();
        let y = QuantumOperation::unitary(pauli_y(), q(2)).unwrap();
        assert!(maps_equal(&zx.pruned(1e-14), &y));
        let e1 = random_channel_on(3, 2, &mut rng);
        let e2 = random_channel_on(3, 3, &mut rng);
        let rho = random_density(&q(3), &mut rng);
        let lhs = compose(&e2, &e1).unwrap().apply_matrix(rho.matrix());
        let rhs = e2.apply_matrix(&e1.apply_matrix(rho.matrix()));
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
        assert!(compose(&e2, &depolarizing(0.1).unwrap()).is_err());
        let t = tensor_ops(&e1, &depolarizing(0.2).unwrap());
        assert_eq!(t.kraus().len(), 8);
        assert_eq!(t.in_shape().dims(), &[3, 2]);
    }

    #[test]
    fn unitary_freedom_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = QuantumOperation::from_kraus(vec![identity(2) * c(s, 0.), pauli_z() * c(s, 0.)]).unwrap();
        let u = kraus_equivalent(&a, &decohering()).unwrap();
        let want = real_matrix(2, 2, &[s, s, s, -s]);
        assert!(max_abs(&(u - want)) < 1e-10);
        let d = depolarizing(0.3).unwrap();
        let u = kraus_equivalent(&d, &d).unwrap();
        assert!(max_abs(&(u - identity(4))) < 1e-10);
        assert!(kraus_equivalent(&bit_flip(0.3).unwrap(), &phase_flip(0.3).unwrap()).is_none());
    }

    #[test]
    fn environment_round_trips() {
        let ad = amplitude_damping(0.3).unwrap();
        let model = environment_model(&ad).unwrap();
        assert!(max_abs(&(&model.unitary * model.unitary.adjoint() - identity(4))) < 1e-12);
        let back = kraus_from_environment(&model, None).unwrap();
        assert!(max_abs(&(back.choi() - ad.choi())) < 1e-9);

        let mut rng = seeded(3);
        let u = crate::random::haar_unitary(2, &mut rng);
        let model = environment_model(&QuantumOperation::unitary(u, q(2)).unwrap()).unwrap();
        assert_eq!(model.env_dim, 1);

        let p0 = QuantumOperation::from_kraus(vec![unit(2, 0, 0) * c(0.8, 0.)]).unwrap();
        let model = environment_model(&p0).unwrap();
        assert!(model.projector.is_some());
        assert!(maps_equal(&kraus_from_environment(&model, None).unwrap(), &p0));
    }

    #[test]
    fn cnot_coupling_decoheres() {
        let cnot = real_matrix(4, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.]);
        let op = kraus_from_unitary(&cnot, 2, &unit(2, 0, 0), None).unwrap();
        assert!(maps_equal(&op, &decohering()));
    }

    #[test]
    fn w_matrix_examples() {
        let mut rng = seeded(4);
        let u = crate::random::haar_unitary(3, &mut rng);
        let rho = random_density(&q(3), &mut rng);
        let w = w_matrix(&QuantumOperation::unitary(u, q(3)).unwrap(), &rho).unwrap();
        assert!(max_abs(&(w - identity(1))) < 1e-12);

        let op = random_channel_on(2, 3, &mut rng);
        let rho = random_density(&q(2), &mut rng);
        let w = w_matrix(&op, &rho).unwrap();
        assert_relative_eq!(w.trace().re, 1.0, epsilon = 1e-12);
        // Environment output of the dilation has the spectrum of W.
        let model = environment_model(&op).unwrap();
        let env0 = tensor(rho.matrix(), &(&model.env_initial * model.env_initial.adjoint()));
        let out = &model.unitary * env0 * model.unitary.adjoint();
        let env = partial_trace_matrix(&out, &[2, model.env_dim], &[1]).unwrap();
        let (a, b) = (eigh(&w).values, eigh(&env).values);
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-10);
        }
        let p1 = QuantumOperation::from_kraus(vec![unit(2, 1, 1)]).unwrap();
        assert!(matches!(
            w_matrix(&p1, &DensityOperator::diagonal(&[1.0, 0.0]).unwrap()),
            Err(QinfoError::ZeroProbability(_))
        ));
    }

    #[test]
    fn canonical_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let op = QuantumOperation::from_kraus(vec![identity(2) * c(s, 0.), pauli_z() * c(s, 0.)]).unwrap();
        // At |+⟩ the off-diagonal entry ⟨+|Z|+⟩/2 vanishes, so W is already diagonal there.
        let plus_state = DensityOperator::from_matrix(projector(&plus())).unwrap();
        let w = w_matrix(&op, &plus_state).unwrap();
        assert!(w[(0, 1)].norm() < 1e-12);
        let rho = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        let w = w_matrix(&op, &rho).unwrap();
        assert!((w[(0, 1)].re - 0.5).abs() < 1e-12);
        let can = canonical_kraus(&op, &rho).unwrap();
        let w = w_matrix(&can, &rho).unwrap();
        assert!(w[(0, 1)].norm() < 1e-12);
        assert!(maps_equal(&can, &op));

        let already = decohering();
        let rho = DensityOperator::diagonal(&[0.7, 0.3]).unwrap();
        let can = canonical_kraus(&already, &rho).unwrap();
        for (a, b) in can.kraus().iter().zip(already.kraus()) {
            assert!(max_abs(&(a - b)) < 1e-12);
        }
    }

    #[test]
    fn affine_examples() {
        let a = qubit_affine(&decohering()).unwrap();
        assert!((a.m - Matrix3::from_diagonal(&Vector3::new(0., 0., 1.))).norm() < 1e-12);
        assert!(a.c.norm() < 1e-12);
        let a = qubit_affine(&QuantumOperation::identity(q(2))).unwrap();
        assert!((a.m - Matrix3::identity()).norm() < 1e-12);
        let gamma: f64 = 0.35;
        let ad = amplitude_damping(gamma).unwrap();
        let a = qubit_affine(&ad).unwrap();
        // Oracle: apply to the six axis states and read off the affine map.
        let axis = |k: usize, s: f64| {
            let mut v = Vector3::zeros();
            v[k] = s;
            bloch_vector(&ad.apply_matrix(&bloch_state(&v)))
        };
        for k in 0..3 {
            let (p, m) = (axis(k, 1.0), axis(k, -1.0));
            let col = (p - m) / 2.0;
            let off = (p + m) / 2.0;
            for j in 0..3 {
                assert_relative_eq!(a.m[(j, k)], col[j], epsilon = 1e-12);
                assert_relative_eq!(a.c[j], off[j], epsilon = 1e-12);
            }
        }
        let g = (1.0 - gamma).sqrt();
        assert!((a.m - Matrix3::from_diagonal(&Vector3::new(g, g, 1.0 - gamma))).norm() < 1e-12);
        assert!((a.c - Vector3::new(0., 0., gamma)).norm() < 1e-12);
        assert!(qubit_affine(&random_channel_on(3, 2, &mut seeded(1))).is_err());
    }

    #[test]
    fn povm_examples() {
        let rho = DensityOperator::diagonal(&[0.75, 0.25]).unwrap();
        let p = Povm::new(vec![unit(2, 0, 0), unit(2, 1, 1)]).unwrap();
        assert_eq!(povm_outcomes(&p, &rho).unwrap(), vec![0.75, 0.25]);
        let mut rng = seeded(5);
        let op = random_channel_on(2, 4, &mut rng);
        let branches: Vec<QuantumOperation> = op
            .kraus()
            .chunks(2)
            .map(|k| QuantumOperation::from_kraus(k.to_vec()).unwrap())
            .collect();
        let povm = Povm::from_branches(&branches).unwrap();
        let r = random_density(&q(2), &mut rng);
        for (pm, b) in povm_outcomes(&povm, &r).unwrap().iter().zip(&branches) {
            assert_relative_eq!(*pm, b.apply(&r).unwrap().trace, epsilon = 1e-12);
        }
        // Trine POVM.
        let trine: Vec<ComplexMatrix> = (0..3)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                let v = ComplexVector::from_vec(vec![c((t / 2.0).cos(), 0.), c((t / 2.0).sin(), 0.)]);
                projector(&v) * c(2.0 / 3.0, 0.)
            })
            .collect();
        let povm = Povm::new(trine).unwrap();
        for p in povm_outcomes(&povm, &DensityOperator::maximally_mixed(q(2))).unwrap() {
            assert_relative_eq!(p, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert!(Povm::new(vec![unit(2, 0, 0)]).is_err());
    }

    mod props {
        use super::*;
        use crate::random::{haar_unitary, random_bloch};
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn complete_affine_maps_stay_in_ball(seed in any::<u64>(), k in 1usize..4) {
                let mut rng = seeded(seed);
                let op = random_channel_on(2, k, &mut rng);
                let a = qubit_affine(&op).unwrap();
                for _ in 0..20 {
                    let b = random_bloch(&mut rng);
                    prop_assert!(a.apply(&Vector3::new(b[0], b[1], b[2])).norm() <= 1.0 + 1e-9);
                }
            }

            #[test]
            fn standard_channels_have_psd_choi(p in 0.0f64..1.0) {
                for op in [depolarizing(p).unwrap(), amplitude_damping(p).unwrap(), bit_flip(p).unwrap(),
                           phase_flip(p).unwrap(), erasure(p).unwrap(), phase_erasure(p).unwrap(),
                           mixed_erasure(p / 2.0, p / 2.0).unwrap(), pauli_randomizer()] {
                    let cl = classify(&op);
                    prop_assert!(cl.choi_min_eigenvalue > -1e-9);
                    prop_assert_eq!(cl.class, Completeness::Complete);
                    let red = partial_trace_matrix(&op.choi(), &[op.in_dim(), op.out_dim()], &[0]).unwrap();
                    prop_assert!(max_abs(&(red - identity(op.in_dim()) / c(op.in_dim() as f64, 0.))) < 1e-9);
                }
            }

            #[test]
            fn kraus_mixing_is_recovered(seed in any::<u64>(), k in 1usize..4) {
                let mut rng = seeded(seed);
                let op = random_channel_on(2, k, &mut rng);
                let n = k + 1;
                let u = haar_unitary(n, &mut rng);
                let mut padded = op.kraus().to_vec();
                padded.push(zeros(2, 2));
                let mixed: Vec<ComplexMatrix> = (0..n)
                    .map(|j| (0..n).fold(zeros(2, 2), |acc, l| acc + &padded[l] * u[(j, l)]))
                    .collect();
                let other = QuantumOperation::from_kraus(mixed).unwrap();
                let w = kraus_equivalent(&other, &op).unwrap();
                prop_assert!(max_abs(&(&w * w.adjoint() - identity(n))) < 1e-9);
                for j in 0..n {
                    let rebuilt = (0..n).fold(zeros(2, 2), |acc, l| {
                        acc + padded.get(l).cloned().unwrap_or_else(|| zeros(2, 2)) * w[(j, l)]
                    });
                    prop_assert!(max_abs(&(rebuilt - &other.kraus()[j])) < 1e-8);
                }
            }

            #[test]
            fn canonical_preserves_map_and_diagonalizes(seed in any::<u64>(), k in 1usize..5) {
                let mut rng = seeded(seed);
                let op = random_channel_on(2, k, &mut rng);
                let rho = random_density(&q(2), &mut rng);
                let can = canonical_kraus(&op, &rho).unwrap();
                prop_assert!(max_abs(&(can.choi() - op.choi())) < 1e-9);
                let w = w_matrix(&can, &rho).unwrap();
                let mut off = w.clone();
                off.fill_diagonal(c(0., 0.));
                prop_assert!(max_abs(&off) < 1e-9);
                prop_assert!((0..k).all(|i| w[(i, i)].re > -1e-12));
                prop_assert!((1..k).all(|i| w[(i - 1, i - 1)].re >= w[(i, i)].re - 1e-12));
            }

            #[test]
            fn environment_round_trip_random(seed in any::<u64>(), k in 1usize..4) {
                let mut rng = seeded(seed);
                let op = random_channel_on(3, k, &mut rng).scaled(0.9);
                let model = environment_model(&op).unwrap();
                let back = kraus_from_environment(&model, None).unwrap();
                prop_assert!(max_abs(&(back.choi() - op.choi())) < 1e-9);
            }
        }
    }
}
