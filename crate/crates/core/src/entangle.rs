//! Two-qubit concurrence and entanglement of formation, and the thermal two-spin model.

use rand::Rng;

use crate::entropy::{binary_entropy, holevo_chi, vn_entropy, Ensemble};
use crate::error::{QinfoError, Result};
use crate::linalg::{
    c, eigh, partial_trace_matrix, projector, spectral, tensor, ComplexMatrix, ComplexVector, DensityOperator,
    SystemShape, EIG_TOL,
};
use crate::metrics::{exp_i_hermitian, hermitian_from_params, MetricReport};
use crate::optimize::polish;
use crate::random::{haar_unitary, random_density_env, QRng};

/// Eigenvalues of R below this are treated as zero.
pub const R_CLIP: f64 = 1e-12;

/// Columns |a⟩, |b⟩, |c⟩, |d⟩ of the magic basis in the computational basis.
pub fn magic_basis() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    #[rustfmt::skip]
    let m = ComplexMatrix::from_row_slice(4, 4, &[
        c(s, 0.0), c(0.0, s),  z,          c(0.0, 0.0),
        z,         z,          c(0.0, s),  c(s, 0.0),
        z,         z,          c(0.0, s),  c(-s, 0.0),
        c(s, 0.0), c(0.0, -s), z,          z,
    ]);
    m
}

/// ρ̃: complex conjugation of ρ taken in the magic basis.
pub fn magic_conjugate(rho: &ComplexMatrix) -> ComplexMatrix {
    let m = magic_basis();
    let in_magic = m.adjoint() * rho * &m;
    &m * in_magic.conjugate() * m.adjoint()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcurrenceReport {
    pub concurrence: f64,
    pub eof: f64,
    /// Eigenvalues of R, descending.
    pub r_eigenvalues: Vec<f64>,
    /// λ₁ − λ₂ − λ₃ − λ₄ before clamping at zero.
    pub witness: f64,
}

fn check_two_qubit(rho: &DensityOperator) -> Result<()> {
    if rho.dim() != 4 {
        return Err(QinfoError::DimensionMismatch(format!("two-qubit state expected, got dimension {}", rho.dim())));
    }
    Ok(())
}

/// ℱ = H(½ + ½√(1 − c²)).
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy(0.5 + 0.5 * (1.0 - c * c).max(0.0).sqrt())
}

pub fn concurrence(rho: &DensityOperator) -> Result<ConcurrenceReport> {
    check_two_qubit(rho)?;
    // R² = √ρ ρ̃ √ρ = B B† with B = √ρ S conj(√ρ), where ρ̃ = S ρ* S†.
    // The singular values of B are the eigenvalues of R without a second square root,
    // and tiny eigenvalues of ρ enter B only through products of their roots.
    let m = magic_basis();
    let flip = &m * m.transpose();
    let sq = spectral(&eigh(rho.matrix()), |x| x.max(0.0).sqrt());
    let b = &sq * flip * sq.conjugate();
    let mut r: Vec<f64> = b.singular_values().iter().map(|&x| if x < R_CLIP { 0.0 } else { x }).collect();
    r.sort_by(|x, y| y.total_cmp(x));
    let witness = r[0] - r[1] - r[2] - r[3];
    let conc = witness.clamp(0.0, 1.0);
    Ok(ConcurrenceReport { concurrence: conc, eof: eof_from_concurrence(conc), r_eigenvalues: r, witness })
}

pub fn eof_two_qubit(rho: &DensityOperator) -> Result<f64> {
    Ok(concurrence(rho)?.eof)
}

/// Two spins with H = (a/2)(Z⊗I + I⊗Z) + (b/4)(XX + YY + ZZ), a = 1, at temperature `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalModel {
    pub b: f64,
    pub t: f64,
}

impl ThermalModel {
    pub fn new(b: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(QinfoError::InvalidParameter(format!("temperature must be positive, got {t}")));
        }
        if !b.is_finite() {
            return Err(QinfoError::InvalidParameter(format!("coupling must be finite, got {b}")));
        }
        Ok(Self { b, t })
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        let (x, y, z) = (crate::linalg::pauli_x(), crate::linalg::pauli_y(), crate::linalg::pauli_z());
        let id = crate::linalg::identity(2);
        let field = (tensor(&z, &id) + tensor(&id, &z)) * c(0.5, 0.0);
        let exchange = (tensor(&x, &x) + tensor(&y, &y) + tensor(&z, &z)) * c(self.b / 4.0, 0.0);
        field + exchange
    }

    /// E₁..E₄ for |d⟩, |11⟩, |c⟩, |00⟩.
    pub fn energies(&self) -> [f64; 4] {
        let b = self.b;
        [-0.75 * b, b / 4.0 - 1.0, b / 4.0, b / 4.0 + 1.0]
    }
}

/// exp(−H/T)/Z, computed from the spectrum of H shifted by its ground energy.
pub fn thermal_state(model: &ThermalModel) -> Result<DensityOperator> {
    let model = ThermalModel::new(model.b, model.t)?;
    let e = eigh(&model.hamiltonian());
    let e0 = e.values.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = e.values.iter().map(|&x| (-(x - e0) / model.t).exp()).sum();
    let rho = spectral(&e, |x| (-(x - e0) / model.t).exp() / z);
    DensityOperator::new(rho, SystemShape::qubits(2))
}

/// (e^{b/T} − 3)/(1 + e^{b/T} + 2cosh(1/T)), clamped at zero; evaluated with the
/// largest exponent factored out.
pub fn thermal_concurrence(model: &ThermalModel) -> f64 {
    let (b, t) = (model.b, model.t);
    let m = (b / t).max(1.0 / t).max(0.0);
    let num = (b / t - m).exp() - 3.0 * (-m).exp();
    let den = (-m).exp() + (b / t - m).exp() + (1.0 / t - m).exp() + (-1.0 / t - m).exp();
    (num / den).max(0.0)
}

/// T_e = b/ln 3.
pub fn critical_temperature(b: f64) -> f64 {
    b / 3f64.ln()
}

/// Root in T of the concurrence witness of `thermal_state(b, T)`, by bisection.
pub fn concurrence_root(b: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let w = |t: f64| -> Result<f64> { Ok(concurrence(&thermal_state(&ThermalModel::new(b, t)?)?)?.witness) };
    let (mut a, mut z) = (lo, hi);
    let (wa, wz) = (w(a)?, w(z)?);
    if !(wa > 0.0 && wz < 0.0) {
        return Err(QinfoError::InvalidParameter(format!(
            "witness does not change sign on [{lo}, {hi}] ({wa:.3e}, {wz:.3e})"
        )));
    }
    while z - a > tol {
        let mid = 0.5 * (a + z);
        if w(mid)? > 0.0 {
            a = mid;
        } else {
            z = mid;
        }
    }
    Ok(0.5 * (a + z))
}

/// (T, concurrence, eof) on `steps` evenly spaced temperatures in [tmin, tmax].
pub fn thermal_curve(b: f64, tmin: f64, tmax: f64, steps: usize) -> Result<Vec<(f64, f64, f64)>> {
    if steps == 0 || !(tmax >= tmin) {
        return Err(QinfoError::InvalidParameter(format!("bad sweep [{tmin}, {tmax}] with {steps} steps")));
    }
    (0..steps)
        .map(|i| {
            let t = if steps == 1 { tmin } else { tmin + (tmax - tmin) * i as f64 / (steps - 1) as f64 };
            let r = concurrence(&thermal_state(&ThermalModel::new(b, t)?)?)?;
            Ok((t, r.concurrence, r.eof))
        })
        .collect()
}

/// Pure-state decomposition {p_j, ψ_j} of ρ obtained by mixing √λ_i|v_i⟩ with the first
/// rank(ρ) columns of the m×m unitary `u`.
pub fn pure_decomposition(rho: &DensityOperator, u: &ComplexMatrix) -> Result<Vec<(f64, ComplexVector)>> {
    let e = eigh(rho.matrix());
    let support: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > EIG_TOL).collect();
    if u.nrows() != u.ncols() || u.nrows() < support.len() {
        return Err(QinfoError::DimensionMismatch(format!(
            "mixing matrix {}x{} is too small for rank {}",
            u.nrows(),
            u.ncols(),
            support.len()
        )));
    }
    let d = rho.dim();
    let mut out = vec![];
    for j in 0..u.nrows() {
        let mut psi = ComplexVector::zeros(d);
        for (k, &i) in support.iter().enumerate() {
            psi += e.vectors.column(i) * (u[(j, k)] * e.values[i].sqrt());
        }
        let p = psi.norm_squared();
        if p > 1e-300 {
            out.push((p, psi / c(p.sqrt(), 0.0)));
        }
    }
    Ok(out)
}

fn reduced_entropy_a(psi: &ComplexVector) -> f64 {
    let ra = partial_trace_matrix(&projector(psi), &[2, 2], &[0]).expect("two-qubit vector");
    crate::entropy::entropy_matrix(&ra)
}

/// Σ_j p_j S(A_j) for the decomposition generated by `u`.
pub fn decomposition_average(rho: &DensityOperator, u: &ComplexMatrix) -> Result<f64> {
    check_two_qubit(rho)?;
    Ok(pure_decomposition(rho, u)?.iter().map(|(p, psi)| p * reduced_entropy_a(psi)).sum())
}

/// Smallest decomposition average found from `starts` Haar-random 4×4 mixing unitaries,
/// the best few refined by Nelder–Mead over U·exp(iH).
pub fn eof_search(rho: &DensityOperator, starts: usize, rng: &mut QRng) -> Result<f64> {
    check_two_qubit(rho)?;
    let mut seeds = vec![];
    for _ in 0..starts {
        let u = haar_unitary(4, rng);
        seeds.push((decomposition_average(rho, &u)?, u));
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = seeds.first().map_or(f64::INFINITY, |s| s.0);
    for (_, u0) in seeds.iter().take(5) {
        let cost = |p: &[f64]| {
            let u = u0 * exp_i_hermitian(&hermitian_from_params(p, 4));
            decomposition_average(rho, &u).unwrap_or(f64::INFINITY)
        };
        let m = polish(&cost, &[0.0; 16], 0.3, 6000, 1e-13, 4)?;
        best = best.min(m.value);
    }
    Ok(best)
}

/// Random two-qubit state; environment sizes 1..=4 cover pure, low-rank and full-rank cases.
pub fn random_two_qubit(rng: &mut QRng) -> DensityOperator {
    let env = rng.random_range(1..=4);
    random_density_env(&SystemShape::qubits(2), env, rng)
}

fn reduced(rho: &DensityOperator, keep: usize) -> DensityOperator {
    let m = partial_trace_matrix(rho.matrix(), &[2, 2], &[keep]).expect("two-qubit state");
    DensityOperator::from_matrix(m).expect("reduced state")
}

/// Entanglement inequalities on one two-qubit state; the preparation for the
/// accessible-information check is a random pure-state decomposition of ρ.
pub fn entanglement_reports(rho: &DensityOperator, rng: &mut QRng) -> Result<Vec<MetricReport>> {
    check_two_qubit(rho)?;
    let f = eof_two_qubit(rho)?;
    let (ra, rb) = (reduced(rho, 0), reduced(rho, 1));
    let (sa, sb, sab) = (vn_entropy(&ra), vn_entropy(&rb), vn_entropy(rho));
    let mut out = vec![
        MetricReport::inequality("entropy_entanglement_ab", -(sab - sb), f),
        MetricReport::inequality("entropy_entanglement_ba", -(sab - sa), f),
        MetricReport::inequality("entropy_bounded", f, sa.min(sb)),
    ];
    let m = rng.random_range(4..=6);
    let parts = pure_decomposition(rho, &haar_unitary(m, rng))?;
    let weights: Vec<f64> = parts.iter().map(|(p, _)| *p).collect();
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let states = |keep: usize| -> Vec<DensityOperator> {
        parts.iter().map(|(_, psi)| reduced(&DensityOperator::from_matrix(projector(psi)).expect("pure"), keep)).collect()
    };
    let chi_b = holevo_chi(&Ensemble::new(weights.clone(), states(1))?);
    let chi_a = holevo_chi(&Ensemble::new(weights.clone(), states(0))?);
    let avg: f64 = parts.iter().map(|(p, psi)| p * reduced_entropy_a(psi)).sum::<f64>() / total;
    out.push(MetricReport::inequality("accessible_information_b", chi_b, sb - f));
    out.push(MetricReport::inequality("accessible_information_a", chi_a, sa - f));
    out.push(MetricReport::inequality("eof_below_decomposition", f, avg));
    Ok(out)
}

pub fn entanglement_inequality_suite(samples: usize, rng: &mut QRng) -> Result<Vec<MetricReport>> {
    let mut out = vec![];
    for _ in 0..samples {
        let rho = random_two_qubit(rng);
        out.extend(entanglement_reports(&rho, rng)?);
    }
    Ok(out)
}
