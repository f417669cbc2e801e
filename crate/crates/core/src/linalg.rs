//! Dense complex linear algebra over small multipartite Hilbert spaces.
//!
//! Matrices are `nalgebra` values; every function returns a fresh value.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QinfoError, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Eigenvalues within this distance below zero are clipped to zero.
pub const EIG_TOL: f64 = 1e-10;
/// Tolerance used when validating density operators.
pub const STATE_TOL: f64 = 1e-8;
/// Schmidt and operator-Schmidt cutoff.
pub const SCHMIDT_CUTOFF: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(r, c)
}

/// Build a matrix from row-major real entries.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn diag(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        values.len(),
        values.iter().map(|&x| c(x, 0.0)),
    ))
}

pub fn pauli_x() -> ComplexMatrix {
    real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> ComplexMatrix {
    real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    real_matrix(2, 2, &[s, s, s, -s])
}

/// Controlled-NOT with the first qubit as control.
pub fn cnot() -> ComplexMatrix {
    let mut m = zeros(4, 4);
    for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, col)] = c(1.0, 0.0);
    }
    m
}

/// Exchange of factors A and B: |a⟩|b⟩ ↦ |b⟩|a⟩, mapping A⊗B to B⊗A.
pub fn swap_gate(da: usize, db: usize) -> ComplexMatrix {
    let mut m = zeros(da * db, da * db);
    for a in 0..da {
        for b in 0..db {
            m[(b * da + a, a * db + b)] = c(1.0, 0.0);
        }
    }
    m
}

/// Discrete Fourier transform on dimension d, entries ω^{jk}/√d with ω = e^{2πi/d}.
pub fn qft(d: usize) -> ComplexMatrix {
    let s = 1.0 / (d as f64).sqrt();
    ComplexMatrix::from_fn(d, d, |j, k| {
        let phase = 2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
        C64::from_polar(s, phase)
    })
}

/// Computational basis vector |i⟩ in dimension d.
pub fn ket(d: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[i] = c(1.0, 0.0);
    v
}

/// |a⟩⟨b|
pub fn outer(a: &ComplexVector, b: &ComplexVector) -> ComplexMatrix {
    a * b.adjoint()
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    outer(v, v)
}

/// Matrix unit |i⟩⟨j|.
pub fn unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = zeros(d, d);
    m[(i, j)] = c(1.0, 0.0);
    m
}

/// Kronecker product.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn tensor_all(ms: &[ComplexMatrix]) -> ComplexMatrix {
    ms.iter()
        .fold(identity(1), |acc, m| acc.kronecker(m))
}

pub fn tensor_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

/// Largest absolute entry.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    hermiticity_deviation(m) <= tol * max_abs(m).max(1.0)
}

pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Ordered list of subsystem dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemShape {
    dims: Vec<usize>,
}

impl SystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(QinfoError::InvalidSubsystem(format!(
                "subsystem dimensions must be at least 2, got {dims:?}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn single(d: usize) -> Self {
        Self { dims: vec![d] }
    }

    pub fn qubits(n: usize) -> Self {
        Self { dims: vec![2; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &SystemShape) -> SystemShape {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        SystemShape { dims }
    }

    /// Sub-shape formed by the given subsystem indices, in ascending order.
    pub fn select(&self, keep: &[usize]) -> Result<SystemShape> {
        let keep = normalize_keep(keep, self.len())?;
        Ok(SystemShape { dims: keep.iter().map(|&k| self.dims[k]).collect() })
    }

    /// Split into the first `cut` factors and the rest.
    pub fn split(&self, cut: usize) -> Result<(SystemShape, SystemShape)> {
        if cut == 0 || cut >= self.len() {
            return Err(QinfoError::InvalidSubsystem(format!(
                "cut {cut} does not split a shape with {} factors",
                self.len()
            )));
        }
        Ok((
            SystemShape { dims: self.dims[..cut].to_vec() },
            SystemShape { dims: self.dims[cut..].to_vec() },
        ))
    }
}

fn normalize_keep(keep: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut k = keep.to_vec();
    k.sort_unstable();
    k.dedup();
    if k.len() != keep.len() {
        return Err(QinfoError::InvalidSubsystem(format!("repeated index in {keep:?}")));
    }
    if let Some(&bad) = k.iter().find(|&&i| i >= n) {
        return Err(QinfoError::InvalidSubsystem(format!(
            "index {bad} out of range for {n} subsystems"
        )));
    }
    Ok(k)
}

/// Hermitian, positive semidefinite, unit-trace matrix with its tensor shape.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    shape: SystemShape,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix, shape: SystemShape) -> Result<Self> {
        Self::with_tolerance(matrix, shape, STATE_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, shape: SystemShape, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != shape.total() {
            return Err(QinfoError::DimensionMismatch(format!(
                "matrix {}x{} does not match shape {:?}",
                matrix.nrows(),
                matrix.ncols(),
                shape.dims()
            )));
        }
        let dev = hermiticity_deviation(&matrix);
        if dev > tol {
            return Err(QinfoError::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(QinfoError::InvalidState(format!(
                "trace is {:.3e}{:+.3e}i, expected 1",
                tr.re, tr.im
            )));
        }
        let matrix = hermitize(&matrix);
        let min = eigh(&matrix).values.last().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(QinfoError::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix, shape })
    }

    /// Single-factor shape inferred from the matrix size.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let d = matrix.nrows();
        if d < 2 {
            return Err(QinfoError::DimensionMismatch("dimension must be at least 2".into()));
        }
        Self::new(matrix, SystemShape::single(d))
    }

    /// Rescale a positive matrix to unit trace.
    pub fn normalized(matrix: &ComplexMatrix, shape: SystemShape) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr <= 0.0 {
            return Err(QinfoError::ZeroProbability(tr));
        }
        Self::new(matrix / c(tr, 0.0), shape)
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::from_matrix(diag(probs))
    }

    pub fn maximally_mixed(shape: SystemShape) -> Self {
        let d = shape.total();
        Self { matrix: identity(d) / c(d as f64, 0.0), shape }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self { matrix: projector(psi.amplitudes()), shape: psi.shape().clone() }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues in descending order, clipped at zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.matrix).values
    }

    pub fn with_shape(&self, shape: SystemShape) -> Result<Self> {
        if shape.total() != self.dim() {
            return Err(QinfoError::DimensionMismatch(format!(
                "shape {:?} does not fit dimension {}",
                shape.dims(),
                self.dim()
            )));
        }
        Ok(Self { matrix: self.matrix.clone(), shape })
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        Self {
            matrix: tensor(&self.matrix, &other.matrix),
            shape: self.shape.concat(&other.shape),
        }
    }
}

/// Unit-norm state vector with its tensor shape.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: ComplexVector,
    shape: SystemShape,
}

impl PureState {
    pub fn new(amplitudes: ComplexVector, shape: SystemShape) -> Result<Self> {
        if amplitudes.len() != shape.total() {
            return Err(QinfoError::DimensionMismatch(format!(
                "{} amplitudes for shape {:?}",
                amplitudes.len(),
                shape.dims()
            )));
        }
        let n = amplitudes.norm();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(QinfoError::InvalidState(format!("norm is {n}, expected 1")));
        }
        Ok(Self { amplitudes, shape })
    }

    /// Normalizes the given vector.
    pub fn from_unnormalized(v: ComplexVector, shape: SystemShape) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(QinfoError::InvalidState("zero vector".into()));
        }
        Self::new(v / c(n, 0.0), shape)
    }

    pub fn basis(shape: SystemShape, index: usize) -> Self {
        Self { amplitudes: ket(shape.total(), index), shape }
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }
}

/// Hermitian eigendecomposition with descending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Columns are eigenvectors, aligned with `values`.
    pub vectors: ComplexMatrix,
}

fn lex_cmp(a: &ComplexVector, b: &ComplexVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

fn fix_phase(v: &mut ComplexVector) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-9 * scale.max(1e-300)).copied() {
        let phase = first.conj() / first.norm();
        *v *= phase;
    }
}

/// Eigendecomposition of the Hermitian part of `m`.
///
/// Eigenvalues come out descending; values within `EIG_TOL` below zero are
/// not clipped here (see `eigh`). Within a degenerate run the vectors are
/// ordered lexicographically after fixing the phase of their first nonzero
/// component to be real positive.
pub fn eigh_raw(m: &ComplexMatrix) -> Eigh {
    let h = hermitize(m);
    let n = h.nrows();
    let se = h.symmetric_eigen();
    let mut pairs: Vec<(f64, ComplexVector)> = (0..n)
        .map(|i| {
            let mut v: ComplexVector = se.eigenvectors.column(i).into_owned();
            fix_phase(&mut v);
            (se.eigenvalues[i], v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end - 1].0 - pairs[end].0).abs() < EIG_TOL {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        start = end;
    }
    let mut vectors = zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (j, (val, v)) in pairs.into_iter().enumerate() {
        values.push(val);
        vectors.set_column(j, &v);
    }
    Eigh { values, vectors }
}

/// `eigh_raw` with eigenvalues in `[-EIG_TOL, 0)` clipped to zero.
pub fn eigh(m: &ComplexMatrix) -> Eigh {
    let mut e = eigh_raw(m);
    for v in e.values.iter_mut() {
        if *v < 0.0 && *v >= -EIG_TOL {
            *v = 0.0;
        }
    }
    e
}

/// Rebuild V diag(f(λ)) V† from an eigendecomposition.
pub fn spectral(e: &Eigh, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = e.values.len();
    let mut scaled = e.vectors.clone();
    for j in 0..n {
        let s = c(f(e.values[j]), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * e.vectors.adjoint()
}

/// Spectral functions accepted by `func_hermitian`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HermitianFn {
    SqrtPsd,
    /// Base-two logarithm; zero eigenvalues map to zero.
    Log2,
    /// |A| = √(A†A); accepts any matrix.
    Abs,
}

/// Eigenvalues treated as zero by `HermitianFn::Log2`.
pub const LOG_ZERO: f64 = 1e-12;

pub fn func_hermitian(m: &ComplexMatrix, f: HermitianFn) -> Result<ComplexMatrix> {
    match f {
        HermitianFn::Abs => {
            let e = eigh(&(m.adjoint() * m));
            Ok(spectral(&e, |x| x.max(0.0).sqrt()))
        }
        HermitianFn::SqrtPsd | HermitianFn::Log2 => {
            if !is_hermitian(m, STATE_TOL) {
                return Err(QinfoError::NotHermitian(hermiticity_deviation(m)));
            }
            let e = eigh(m);
            if let Some(&min) = e.values.last() {
                if min < -STATE_TOL {
                    return Err(QinfoError::InvalidState(format!(
                        "matrix is not positive semidefinite (eigenvalue {min:.3e})"
                    )));
                }
            }
            Ok(match f {
                HermitianFn::SqrtPsd => spectral(&e, |x| x.max(0.0).sqrt()),
                _ => spectral(&e, |x| if x > LOG_ZERO { x.log2() } else { 0.0 }),
            })
        }
    }
}

/// Square root of a positive semidefinite Hermitian matrix, no validation.
pub fn sqrt_psd(m: &ComplexMatrix) -> ComplexMatrix {
    spectral(&eigh(m), |x| x.max(0.0).sqrt())
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if is_hermitian(m, 1e-12) {
        eigh_raw(m).values.iter().map(|x| x.abs()).sum()
    } else {
        m.clone().singular_values().iter().sum()
    }
}

/// Row-major multi-index of `index` in `dims`.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

pub fn undigits(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Full indices laid out as `table[kept][traced]`.
fn index_table(dims: &[usize], keep: &[usize]) -> (usize, usize, Vec<Vec<usize>>) {
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let kd: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
    let td: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let nk: usize = kd.iter().product();
    let nt: usize = td.iter().product();
    let mut table = vec![vec![0; nt]; nk];
    let mut full = vec![0; dims.len()];
    for (a, row) in table.iter_mut().enumerate() {
        let da = digits(a, &kd);
        for (t, slot) in row.iter_mut().enumerate() {
            let dt = digits(t, &td);
            for (p, &i) in keep.iter().enumerate() {
                full[i] = da[p];
            }
            for (p, &i) in traced.iter().enumerate() {
                full[i] = dt[p];
            }
            *slot = undigits(&full, dims);
        }
    }
    (nk, nt, table)
}

/// Partial trace of any square matrix over the subsystems not in `keep`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != total {
        return Err(QinfoError::DimensionMismatch(format!(
            "matrix {}x{} does not match dims {dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    let keep = normalize_keep(keep, dims.len())?;
    let (nk, nt, table) = index_table(dims, &keep);
    let mut out = zeros(nk, nk);
    for a in 0..nk {
        for b in 0..nk {
            let mut s = C64::new(0.0, 0.0);
            for t in 0..nt {
                s += m[(table[a][t], table[b][t])];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(QinfoError::InvalidSubsystem("nothing kept".into()));
    }
    let m = partial_trace_matrix(rho.matrix(), rho.shape().dims(), keep)?;
    let shape = rho.shape().select(keep)?;
    Ok(DensityOperator { matrix: hermitize(&m), shape })
}

/// Apply `op` to the `targets` factors of every column of `m`.
///
/// `op` acts on the targets in the order listed.
pub fn apply_local(op: &ComplexMatrix, targets: &[usize], dims: &[usize], m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if m.nrows() != total {
        return Err(QinfoError::DimensionMismatch(format!(
            "{} rows for dims {dims:?}",
            m.nrows()
        )));
    }
    let mut seen = targets.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != targets.len() || targets.iter().any(|&t| t >= dims.len()) {
        return Err(QinfoError::InvalidSubsystem(format!("bad targets {targets:?}")));
    }
    let td: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let nt: usize = td.iter().product();
    if op.nrows() != nt || op.ncols() != nt {
        return Err(QinfoError::DimensionMismatch(format!(
            "operator {}x{} on targets of size {nt}",
            op.nrows(),
            op.ncols()
        )));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !targets.contains(i)).collect();
    let rd: Vec<usize> = rest.iter().map(|&i| dims[i]).collect();
    let nr: usize = rd.iter().product();
    let mut out = zeros(total, m.ncols());
    let mut full = vec![0; dims.len()];
    let mut idx = vec![0; nt];
    for r in 0..nr {
        let dr = digits(r, &rd);
        for (t, slot) in idx.iter_mut().enumerate() {
            let dt = digits(t, &td);
            for (p, &i) in rest.iter().enumerate() {
                full[i] = dr[p];
            }
            for (p, &i) in targets.iter().enumerate() {
                full[i] = dt[p];
            }
            *slot = undigits(&full, dims);
        }
        for col in 0..m.ncols() {
            for (a, &ia) in idx.iter().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for (b, &ib) in idx.iter().enumerate() {
                    let x = op[(a, b)];
                    if x.re != 0.0 || x.im != 0.0 {
                        s += x * m[(ib, col)];
                    }
                }
                out[(ia, col)] = s;
            }
        }
    }
    Ok(out)
}

/// The full-space matrix of `op` acting on `targets`.
pub fn embed(op: &ComplexMatrix, targets: &[usize], dims: &[usize]) -> Result<ComplexMatrix> {
    apply_local(op, targets, dims, &identity(dims.iter().product()))
}

/// Schmidt decomposition of a bipartite pure state.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Descending, strictly positive.
    pub coefficients: Vec<f64>,
    pub basis_a: Vec<ComplexVector>,
    pub basis_b: Vec<ComplexVector>,
}

impl SchmidtDecomposition {
    pub fn schmidt_number(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> ComplexVector {
        let da = self.basis_a.first().map_or(0, |v| v.len());
        let db = self.basis_b.first().map_or(0, |v| v.len());
        let mut psi = ComplexVector::zeros(da * db);
        for ((l, a), b) in self.coefficients.iter().zip(&self.basis_a).zip(&self.basis_b) {
            psi += tensor_vec(a, b) * c(*l, 0.0);
        }
        psi
    }
}

/// Amplitudes of a bipartite vector as a dA × dB matrix.
fn reshape_state(v: &ComplexVector, da: usize, db: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(da, db, |a, b| v[a * db + b])
}

pub fn schmidt_pure(psi: &PureState, cut: usize) -> Result<SchmidtDecomposition> {
    let (sa, sb) = psi.shape().split(cut)?;
    let (da, db) = (sa.total(), sb.total());
    let m = reshape_state(psi.amplitudes(), da, db);
    let e = eigh(&(&m * m.adjoint()));
    let mut out = SchmidtDecomposition { coefficients: vec![], basis_a: vec![], basis_b: vec![] };
    for (i, &lam) in e.values.iter().enumerate() {
        if lam <= SCHMIDT_CUTOFF {
            break;
        }
        let s = lam.sqrt();
        let u: ComplexVector = e.vectors.column(i).into_owned();
        let v = m.transpose() * u.conjugate() / c(s, 0.0);
        out.coefficients.push(s);
        out.basis_a.push(u);
        out.basis_b.push(v);
    }
    Ok(out)
}

/// Σ √p_i |e_i⟩|i⟩ with a reference of the same dimension as `rho`.
pub fn purify(rho: &DensityOperator) -> PureState {
    let d = rho.dim();
    let e = eigh(rho.matrix());
    let mut psi = ComplexVector::zeros(d * d);
    for i in 0..d {
        let p = e.values[i].max(0.0);
        if p == 0.0 {
            continue;
        }
        let v: ComplexVector = e.vectors.column(i).into_owned();
        psi += tensor_vec(&v, &ket(d, i)) * c(p.sqrt(), 0.0);
    }
    let norm = psi.norm();
    psi /= c(norm, 0.0);
    PureState { amplitudes: psi, shape: rho.shape().concat(&SystemShape::single(d)) }
}

/// Operator-Schmidt decomposition U = Σ s_i A_i ⊗ B_i under the trace inner product.
#[derive(Clone, Debug)]
pub struct OperatorSchmidt {
    pub coefficients: Vec<f64>,
    pub ops_a: Vec<ComplexMatrix>,
    pub ops_b: Vec<ComplexMatrix>,
}

impl OperatorSchmidt {
    pub fn term_count(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let da = self.ops_a[0].nrows();
        let db = self.ops_b[0].nrows();
        let mut u = zeros(da * db, da * db);
        for ((s, a), b) in self.coefficients.iter().zip(&self.ops_a).zip(&self.ops_b) {
            u += tensor(a, b) * c(*s, 0.0);
        }
        u
    }
}

/// Rearrange U on A⊗B so that entry ((i,j),(k,l)) = ⟨ik|U|jl⟩.
pub fn reshuffle(u: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(da * da, db * db, |r, s| {
        let (i, j) = (r / da, r % da);
        let (k, l) = (s / db, s % db);
        u[(i * db + k, j * db + l)]
    })
}

pub fn schmidt_operator(u: &ComplexMatrix, shape: &SystemShape, cut: usize) -> Result<OperatorSchmidt> {
    if !u.is_square() || u.nrows() != shape.total() {
        return Err(QinfoError::DimensionMismatch(format!(
            "operator {}x{} does not match shape {:?}",
            u.nrows(),
            u.ncols(),
            shape.dims()
        )));
    }
    let (sa, sb) = shape.split(cut)?;
    let (da, db) = (sa.total(), sb.total());
    let r = reshuffle(u, da, db);
    let svd = r.svd(true, true);
    let uu = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = OperatorSchmidt { coefficients: vec![], ops_a: vec![], ops_b: vec![] };
    for k in order {
        let s = svd.singular_values[k];
        if s <= SCHMIDT_CUTOFF {
            continue;
        }
        let a = ComplexMatrix::from_fn(da, da, |i, j| uu[(i * da + j, k)]);
        let b = ComplexMatrix::from_fn(db, db, |i, j| vt[(k, i * db + j)]);
        out.coefficients.push(s);
        out.ops_a.push(a);
        out.ops_b.push(b);
    }
    Ok(out)
}

/// Residuals of the mixed-state Schmidt constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedSchmidtReport {
    /// ‖Σ_k a^k Q a^k† − I‖
    pub left: f64,
    /// ‖Σ_k a^k† P a^k − I‖
    pub right: f64,
    /// max |tr(a^k† P a^k' Q) − ⟨k|k'⟩|
    pub gram: f64,
    /// max over k ≠ k' of |tr(a^k† P a^k' Q)|
    pub orthogonality: f64,
    /// ‖Σ_k |k⟩⟨k| − ρ‖
    pub reconstruction: f64,
}

impl MixedSchmidtReport {
    pub fn max_residual(&self) -> f64 {
        [self.left, self.right, self.gram, self.orthogonality, self.reconstruction]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Local eigenbases used by the mixed-state Schmidt form.
pub struct LocalEigen {
    pub p: Vec<f64>,
    pub e: ComplexMatrix,
    pub q: Vec<f64>,
    pub f: ComplexMatrix,
}

fn bipartite_dims(rho: &DensityOperator) -> Result<(usize, usize)> {
    let dims = rho.shape().dims();
    if dims.len() != 2 {
        return Err(QinfoError::DimensionMismatch(format!(
            "expected a bipartite shape, got {dims:?}"
        )));
    }
    Ok((dims[0], dims[1]))
}

pub fn local_eigen(rho: &DensityOperator) -> Result<LocalEigen> {
    bipartite_dims(rho)?;
    let ea = eigh(partial_trace(rho, &[0])?.matrix());
    let eb = eigh(partial_trace(rho, &[1])?.matrix());
    Ok(LocalEigen { p: ea.values, e: ea.vectors, q: eb.values, f: eb.vectors })
}

/// Coefficient matrices a^k_ij = ⟨e_i f_j|k⟩/√(p_i q_j) with |k⟩ = √μ_k |v_k⟩.
///
/// Requires both reduced states to have full rank.
pub fn mixed_schmidt_coefficients(rho: &DensityOperator) -> Result<Vec<ComplexMatrix>> {
    let (da, db) = bipartite_dims(rho)?;
    let le = local_eigen(rho)?;
    if le.p.iter().chain(&le.q).any(|&x| x <= SCHMIDT_CUTOFF) {
        return Err(QinfoError::InvalidState("reduced states must have full rank".into()));
    }
    let basis = tensor(&le.e, &le.f);
    let e = eigh(rho.matrix());
    let mut out = vec![];
    for (k, &mu) in e.values.iter().enumerate() {
        if mu <= SCHMIDT_CUTOFF {
            break;
        }
        let v: ComplexVector = e.vectors.column(k).into_owned() * c(mu.sqrt(), 0.0);
        let amps = basis.adjoint() * v;
        out.push(ComplexMatrix::from_fn(da, db, |i, j| {
            amps[i * db + j] / c((le.p[i] * le.q[j]).sqrt(), 0.0)
        }));
    }
    Ok(out)
}

pub fn mixed_schmidt_verify(rho: &DensityOperator, a: &[ComplexMatrix]) -> Result<MixedSchmidtReport> {
    let (da, db) = bipartite_dims(rho)?;
    if a.iter().any(|m| m.nrows() != da || m.ncols() != db) {
        return Err(QinfoError::DimensionMismatch(format!(
            "coefficient matrices must be {da}x{db}"
        )));
    }
    let le = local_eigen(rho)?;
    let pm = diag(&le.p);
    let qm = diag(&le.q);
    let basis = tensor(&le.e, &le.f);
    let mut left = -identity(da);
    let mut right = -identity(db);
    for ak in a {
        left += ak * &qm * ak.adjoint();
        right += ak.adjoint() * &pm * ak;
    }
    let kets: Vec<ComplexVector> = a
        .iter()
        .map(|ak| {
            let amps = ComplexVector::from_fn(da * db, |r, _| {
                let (i, j) = (r / db, r % db);
                ak[(i, j)] * c((le.p[i] * le.q[j]).sqrt(), 0.0)
            });
            &basis * amps
        })
        .collect();
    let mut gram = 0.0f64;
    let mut orth = 0.0f64;
    for (k, ak) in a.iter().enumerate() {
        for (l, al) in a.iter().enumerate() {
            let g = (ak.adjoint() * &pm * al * &qm).trace();
            let ip = kets[k].dotc(&kets[l]);
            gram = gram.max((g - ip).norm());
            if k != l {
                orth = orth.max(g.norm());
            }
        }
    }
    let mut recon = -rho.matrix().clone();
    for v in &kets {
        recon += projector(v);
    }
    Ok(MixedSchmidtReport {
        left: max_abs(&left),
        right: max_abs(&right),
        gram,
        orthogonality: orth,
        reconstruction: max_abs(&recon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, random_density, random_pure, seeded};
    use approx::assert_relative_eq;

    fn bell() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(
            ComplexVector::from_vec(vec![c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]),
            SystemShape::qubits(2),
        )
        .unwrap()
    }

    #[test]
    fn tensor_identities() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
        let x_i = tensor(&pauli_x(), &identity(2));
        assert_eq!(&x_i * ket(4, 0), ket(4, 2));
    }

    #[test]
    fn tensor_mixed_product() {
        let mut rng = seeded(1);
        let m: Vec<ComplexMatrix> = (0..4).map(|_| haar_unitary(2, &mut rng) * c(0.7, 0.2)).collect();
        let lhs = tensor(&m[0], &m[1]) * tensor(&m[2], &m[3]);
        let rhs = tensor(&(&m[0] * &m[2]), &(&m[1] * &m[3]));
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let r = partial_trace(&bell().density(), &[0]).unwrap();
        assert!(max_abs(&(r.matrix() - identity(2) * c(0.5, 0.))) < 1e-12);
    }

    #[test]
    fn product_partial_trace() {
        let mut rng = seeded(2);
        let a = random_density(&SystemShape::single(2), &mut rng);
        let b = random_density(&SystemShape::single(3), &mut rng);
        let r = partial_trace(&a.tensor(&b), &[0]).unwrap();
        assert!(max_abs(&(r.matrix() - a.matrix())) < 1e-12);
        let r = partial_trace(&a.tensor(&b), &[1]).unwrap();
        assert!(max_abs(&(r.matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn three_qubit_complementary_spectra() {
        let mut rng = seeded(3);
        let psi = PureState::new(random_pure(8, &mut rng), SystemShape::qubits(3)).unwrap();
        let rho = psi.density();
        let a = partial_trace(&rho, &[0]).unwrap().eigenvalues();
        let bc = partial_trace(&rho, &[1, 2]).unwrap().eigenvalues();
        assert_relative_eq!(a[0], bc[0], epsilon = 1e-10);
        assert_relative_eq!(a[1], bc[1], epsilon = 1e-10);
        assert!(bc[2].abs() < 1e-10 && bc[3].abs() < 1e-10);
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        let rho = DensityOperator::maximally_mixed(SystemShape::qubits(2));
        assert!(matches!(partial_trace(&rho, &[2]), Err(QinfoError::InvalidSubsystem(_))));
    }

    #[test]
    fn spectral_functions() {
        let a = func_hermitian(&diag(&[1.0, -1.0]), HermitianFn::Abs).unwrap();
        assert!(max_abs(&(a - identity(2))) < 1e-12);
        let s = func_hermitian(&diag(&[4.0, 9.0]), HermitianFn::SqrtPsd).unwrap();
        assert!(max_abs(&(s - diag(&[2.0, 3.0]))) < 1e-12);
        let l = func_hermitian(&diag(&[0.5, 0.0]), HermitianFn::Log2).unwrap();
        assert!(max_abs(&(l - diag(&[-1.0, 0.0]))) < 1e-12);
        assert!(func_hermitian(&(pauli_y() * pauli_x()), HermitianFn::SqrtPsd).is_err());
    }

    #[test]
    fn pure_pair_trace_distance() {
        // |a⟩ = |0⟩, |b⟩ = cos θ|0⟩ + sin θ|1⟩
        for &theta in &[0.1, 0.7, 1.3, std::f64::consts::FRAC_PI_2] {
            let a = projector(&ket(2, 0));
            let b = ComplexVector::from_vec(vec![c(f64::cos(theta), 0.), c(f64::sin(theta), 0.)]);
            let d = func_hermitian(&(a - projector(&b)), HermitianFn::Abs).unwrap().trace().re;
            assert_relative_eq!(d, 2.0 * theta.sin().abs(), epsilon = 1e-10);
        }
    }

    #[test]
    fn eigh_is_deterministic_and_sorted() {
        let e = eigh(&identity(3));
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert!(max_abs(&(e.vectors.clone() - identity(3))) < 1e-12);
        let mut rng = seeded(4);
        let rho = random_density(&SystemShape::single(4), &mut rng);
        let e = eigh(rho.matrix());
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for j in 0..4 {
            let col = e.vectors.column(j);
            let first = col.iter().find(|z| z.norm() > 1e-9).unwrap();
            assert!(first.im.abs() < 1e-12 && first.re > 0.0);
        }
        let rebuilt = spectral(&e, |x| x);
        assert!(max_abs(&(rebuilt - rho.matrix())) < 1e-12);
    }

    #[test]
    fn schmidt_of_bell_and_product() {
        let s = schmidt_pure(&bell(), 1).unwrap();
        assert_eq!(s.schmidt_number(), 2);
        for &x in &s.coefficients {
            assert_relative_eq!(x, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        }
        let plus = ComplexVector::from_vec(vec![c(1., 0.), c(1., 0.)]) / c(2f64.sqrt(), 0.);
        let prod = PureState::new(tensor_vec(&ket(2, 0), &plus), SystemShape::qubits(2)).unwrap();
        let s = schmidt_pure(&prod, 1).unwrap();
        assert_eq!(s.schmidt_number(), 1);
        assert_relative_eq!(s.coefficients[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn schmidt_two_qutrits_matches_reduced_spectrum() {
        let mut rng = seeded(5);
        let shape = SystemShape::new(vec![3, 3]).unwrap();
        let psi = PureState::new(random_pure(9, &mut rng), shape).unwrap();
        let s = schmidt_pure(&psi, 1).unwrap();
        let ev = partial_trace(&psi.density(), &[1]).unwrap().eigenvalues();
        for (l, p) in s.coefficients.iter().zip(&ev) {
            assert_relative_eq!(l * l, *p, epsilon = 1e-10);
        }
        assert!((s.reconstruct() - psi.amplitudes()).norm() < 1e-10);
        assert!(schmidt_pure(&psi, 2).is_err());
    }

    #[test]
    fn purification_examples() {
        let rho = DensityOperator::diagonal(&[0.75, 0.25]).unwrap();
        let psi = purify(&rho);
        let want = ComplexVector::from_vec(vec![c(0.75f64.sqrt(), 0.), c(0., 0.), c(0., 0.), c(0.5, 0.)]);
        assert!((psi.amplitudes() - want).norm() < 1e-12);

        let pure = PureState::basis(SystemShape::single(2), 1).density();
        let psi = purify(&pure);
        assert!((psi.amplitudes() - tensor_vec(&ket(2, 1), &ket(2, 0))).norm() < 1e-12);
    }

    #[test]
    fn purifications_related_by_reference_unitary() {
        let mut rng = seeded(6);
        let rho = random_density(&SystemShape::single(3), &mut rng);
        let psi = purify(&rho);
        let v = haar_unitary(3, &mut rng);
        let phi = tensor(&identity(3), &v) * psi.amplitudes();
        // Solve for the reference unitary from the two amplitude matrices: M_phi = M_psi Wᵀ.
        let mp = reshape_state(psi.amplitudes(), 3, 3);
        let mf = reshape_state(&phi, 3, 3);
        let w = (mp.clone().try_inverse().unwrap() * mf).transpose();
        assert!(max_abs(&(&w * w.adjoint() - identity(3))) < 1e-8);
        let back = tensor(&identity(3), &w) * psi.amplitudes();
        assert!((back - &phi).norm() < 1e-9);
        let red = partial_trace_matrix(&projector(&phi), &[3, 3], &[0]).unwrap();
        assert!(max_abs(&(red - rho.matrix())) < 1e-12);
    }

    fn cnot() -> ComplexMatrix {
        real_matrix(4, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.])
    }

    fn swap() -> ComplexMatrix {
        real_matrix(4, 4, &[1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.])
    }

    #[test]
    fn operator_schmidt_counts() {
        let sh = SystemShape::qubits(2);
        let s = schmidt_operator(&cnot(), &sh, 1).unwrap();
        assert_eq!(s.term_count(), 2);
        assert!(max_abs(&(s.reconstruct() - cnot())) < 1e-12);
        // |0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ X: both A factors are rank-one projectors.
        for a in &s.ops_a {
            assert_eq!(a.clone().rank(1e-9), 1);
        }
        assert_eq!(schmidt_operator(&identity(4), &sh, 1).unwrap().term_count(), 1);
        let s = schmidt_operator(&swap(), &sh, 1).unwrap();
        assert_eq!(s.term_count(), 4);
        assert!(max_abs(&(s.reconstruct() - swap())) < 1e-12);
    }

    #[test]
    fn mixed_schmidt_product_state_from_matrix_units() {
        let mut rng = seeded(7);
        let a = random_density(&SystemShape::single(2), &mut rng);
        let b = random_density(&SystemShape::single(2), &mut rng);
        let rho = a.tensor(&b);
        let coeffs: Vec<ComplexMatrix> =
            (0..2).flat_map(|i| (0..2).map(move |j| unit(2, i, j))).collect();
        let rep = mixed_schmidt_verify(&rho, &coeffs).unwrap();
        assert!(rep.max_residual() < 1e-9, "{rep:?}");
    }

    #[test]
    fn mixed_schmidt_random_states() {
        let mut rng = seeded(8);
        for _ in 0..5 {
            let rho = random_density(&SystemShape::qubits(2), &mut rng);
            let a = mixed_schmidt_coefficients(&rho).unwrap();
            let rep = mixed_schmidt_verify(&rho, &a).unwrap();
            assert!(rep.max_residual() < 1e-9, "{rep:?}");
        }
    }

    #[test]
    fn mixed_schmidt_pure_case() {
        let mut rng = seeded(9);
        let psi = PureState::new(random_pure(4, &mut rng), SystemShape::qubits(2)).unwrap();
        let rho = psi.density();
        let le = local_eigen(&rho).unwrap();
        for (p, q) in le.p.iter().zip(&le.q) {
            assert_relative_eq!(p, q, epsilon = 1e-10);
        }
        let a = mixed_schmidt_coefficients(&rho).unwrap();
        assert_eq!(a.len(), 1);
        // In the local eigenbases, |a| is Q^{-1/2}: diagonal magnitudes 1/λ_i.
        let sch = schmidt_pure(&psi, 1).unwrap();
        for i in 0..2 {
            assert_relative_eq!(a[0][(i, i)].norm(), 1.0 / sch.coefficients[i], epsilon = 1e-8);
        }
        assert!(a[0][(0, 1)].norm() < 1e-8 && a[0][(1, 0)].norm() < 1e-8);
        assert!(mixed_schmidt_verify(&rho, &a).unwrap().max_residual() < 1e-9);
    }

    #[test]
    fn apply_local_matches_embedding() {
        let mut rng = seeded(10);
        let u = haar_unitary(4, &mut rng);
        let dims = [2, 3, 2];
        let full = embed(&u, &[2, 0], &dims).unwrap();
        // Oracle: permute to (2,0,1) order, apply u ⊗ I, permute back.
        let perm = ComplexMatrix::from_fn(12, 12, |r, s| {
            let d = digits(s, &dims);
            if r == undigits(&[d[2], d[0], d[1]], &[2, 2, 3]) { c(1., 0.) } else { c(0., 0.) }
        });
        let want = perm.adjoint() * tensor(&u, &identity(3)) * &perm;
        assert!(max_abs(&(full - want)) < 1e-12);
    }

    #[test]
    fn density_validation_names_trace() {
        let err = DensityOperator::from_matrix(diag(&[0.5, 0.501])).unwrap_err();
        assert!(err.to_string().contains("trace"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn partial_trace_preserves_trace_and_positivity(seed in any::<u64>(), keep in 0usize..3) {
                let mut rng = seeded(seed);
                let rho = random_density(&SystemShape::new(vec![2, 3, 2]).unwrap(), &mut rng);
                let r = partial_trace(&rho, &[keep]).unwrap();
                prop_assert!((r.matrix().trace().re - 1.0).abs() < 1e-9);
                prop_assert!(*r.eigenvalues().last().unwrap() > -1e-9);
            }

            #[test]
            fn schmidt_reconstructs(seed in any::<u64>()) {
                let mut rng = seeded(seed);
                let psi = PureState::new(random_pure(6, &mut rng), SystemShape::new(vec![2, 3]).unwrap()).unwrap();
                let s = schmidt_pure(&psi, 1).unwrap();
                prop_assert!((s.reconstruct() - psi.amplitudes()).norm() < 1e-9);
                let rank = partial_trace(&psi.density(), &[0]).unwrap()
                    .eigenvalues().iter().filter(|&&x| x > 1e-10).count();
                prop_assert_eq!(s.schmidt_number(), rank);
                let a = partial_trace(&psi.density(), &[0]).unwrap().eigenvalues();
                let b = partial_trace(&psi.density(), &[1]).unwrap().eigenvalues();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }

            #[test]
            fn purify_round_trip(seed in any::<u64>()) {
                let mut rng = seeded(seed);
                let rho = random_density(&SystemShape::single(3), &mut rng);
                let psi = purify(&rho);
                let back = partial_trace(&psi.density(), &[0]).unwrap();
                prop_assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-9);
            }

            #[test]
            fn operator_schmidt_matches_reshuffled_svd(seed in any::<u64>()) {
                let mut rng = seeded(seed);
                let u = haar_unitary(6, &mut rng);
                let sh = SystemShape::new(vec![2, 3]).unwrap();
                let s = schmidt_operator(&u, &sh, 1).unwrap();
                prop_assert!(max_abs(&(s.reconstruct() - &u)) < 1e-9);
                let mut sv: Vec<f64> = reshuffle(&u, 2, 3).singular_values().iter().copied().collect();
                sv.sort_by(|a, b| b.total_cmp(a));
                for (a, b) in s.coefficients.iter().zip(&sv) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
