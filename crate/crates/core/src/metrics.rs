//! Static and dynamic distance measures.

use rand::Rng;

use crate::error::{QinfoError, Result};
use crate::linalg::{
    c, eigh, spectral, trace_norm, EIG_TOL, ComplexMatrix, ComplexVector, DensityOperator, PureState, C64,
};
use crate::ops::{compose, QuantumOperation, MIN_PROBABILITY};
use crate::optimize::polish;
use crate::random::{haar_unitary, random_channel_on, random_density_env, random_pure, QRng};

/// Reports with slack below `-SLACK_TOL` count as violations.
pub const SLACK_TOL: f64 = 1e-9;

/// lhs ≤ rhs, with slack = rhs − lhs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundContext {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub name: String,
    pub value: f64,
    pub bound: Option<BoundContext>,
}

impl MetricReport {
    pub fn value(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, bound: None }
    }

    /// Report for lhs ≤ rhs; `value` carries the slack.
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Self { name: name.into(), value: slack, bound: Some(BoundContext { lhs, rhs, slack }) }
    }

    /// Report for an identity a = b, encoded as |a − b| ≤ 0.
    pub fn equality(name: impl Into<String>, a: f64, b: f64) -> Self {
        Self::inequality(name, (a - b).abs(), 0.0)
    }

    pub fn holds(&self) -> bool {
        self.bound.is_none_or(|b| b.slack >= -SLACK_TOL && !b.slack.is_nan())
    }
}

fn check_same(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(QinfoError::DimensionMismatch(format!(
            "states of dimension {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// D(ρ, σ) = tr|ρ − σ|, in [0, 2].
pub fn absolute_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_same(rho, sigma)?;
    Ok(trace_norm(&(rho.matrix() - sigma.matrix())))
}

pub(crate) fn clipped_sqrt(x: f64) -> f64 {
    if x > EIG_TOL {
        x.sqrt()
    } else {
        0.0
    }
}

/// F(ρ, σ) = tr √(√ρ σ √ρ).
///
/// Eigenvalues at or below `EIG_TOL` count as zero in both square roots;
/// otherwise rounding noise of order 1e-16 would surface as 1e-8 in F.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_same(rho, sigma)?;
    let s = spectral(&eigh(rho.matrix()), clipped_sqrt);
    let inner = &s * sigma.matrix() * &s;
    let f: f64 = eigh(&inner).values.iter().map(|&x| clipped_sqrt(x)).sum();
    Ok(f.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedMetrics {
    /// arccos F
    pub angle: f64,
    /// 1 − F²
    pub error: f64,
}

pub fn derived_metrics(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DerivedMetrics> {
    let f = fidelity(rho, sigma)?;
    Ok(DerivedMetrics { angle: f.acos(), error: 1.0 - f * f })
}

/// Σ_i |tr(ρ E_i)|² / tr ℰ(ρ).
pub fn dynamic_fidelity(rho: &DensityOperator, op: &QuantumOperation) -> Result<f64> {
    if op.in_dim() != op.out_dim() {
        return Err(QinfoError::DimensionMismatch("dynamic fidelity needs equal input and output spaces".into()));
    }
    let a = op.apply(rho)?;
    if a.trace <= MIN_PROBABILITY {
        return Err(QinfoError::ZeroProbability(a.trace));
    }
    let num: f64 = op.kraus().iter().map(|e| (e * rho.matrix()).trace().norm_sqr()).sum();
    Ok(num / a.trace)
}

/// Purification amplitudes ψ written as a d_sys × d_ref matrix.
fn as_matrix(psi: &ComplexVector, d_sys: usize) -> ComplexMatrix {
    let d_ref = psi.len() / d_sys;
    ComplexMatrix::from_fn(d_sys, d_ref, |s, r| psi[s * d_ref + r])
}

fn as_vector(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_iterator(m.len(), m.transpose().iter().copied())
}

/// (ℰ ⊗ I)(|ψ⟩⟨ψ|) for ψ on system ⊗ reference, with its trace.
pub fn extended_output(psi: &ComplexVector, op: &QuantumOperation) -> Result<(ComplexMatrix, f64)> {
    let d = op.in_dim();
    if psi.len() % d != 0 {
        return Err(QinfoError::DimensionMismatch(format!(
            "vector of length {} is not system ⊗ reference for system dimension {d}",
            psi.len()
        )));
    }
    let m = as_matrix(psi, d);
    let n = op.out_dim() * m.ncols();
    let mut out = ComplexMatrix::zeros(n, n);
    for e in op.kraus() {
        let v = as_vector(&(e * &m));
        out += &v * v.adjoint();
    }
    let tr = out.trace().re;
    Ok((out, tr))
}

/// Dynamic fidelity computed on an arbitrary purification ψ (system factor first).
pub fn dynamic_fidelity_purified(psi: &ComplexVector, op: &QuantumOperation) -> Result<f64> {
    let (out, tr) = extended_output(psi, op)?;
    if tr <= MIN_PROBABILITY {
        return Err(QinfoError::ZeroProbability(tr));
    }
    if op.in_dim() != op.out_dim() {
        return Err(QinfoError::DimensionMismatch("dynamic fidelity needs equal input and output spaces".into()));
    }
    Ok((psi.adjoint() * out * psi)[(0, 0)].re / tr)
}

/// D(RQ, R′Q′) on an arbitrary purification ψ.
pub fn dynamic_distance_purified(psi: &ComplexVector, op: &QuantumOperation) -> Result<f64> {
    if op.in_dim() != op.out_dim() {
        return Err(QinfoError::DimensionMismatch("dynamic distance needs equal input and output spaces".into()));
    }
    let (out, tr) = extended_output(psi, op)?;
    if tr <= MIN_PROBABILITY {
        return Err(QinfoError::ZeroProbability(tr));
    }
    Ok(trace_norm(&(psi * psi.adjoint() - out / c(tr, 0.0))))
}

/// D(ρ, ℰ) = D(RQ, R′Q′) on the canonical purification.
pub fn dynamic_distance(rho: &DensityOperator, op: &QuantumOperation) -> Result<f64> {
    dynamic_distance_purified(crate::linalg::purify(rho).amplitudes(), op)
}

pub fn hermitian_from_params(p: &[f64], d: usize) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        h[(i, i)] = c(p[k], 0.0);
        k += 1;
    }
    for i in 0..d {
        for j in i + 1..d {
            let z = c(p[k], p[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// exp(iH) for Hermitian H.
pub fn exp_i_hermitian(h: &ComplexMatrix) -> ComplexMatrix {
    let e = eigh(h);
    let n = e.values.len();
    let mut scaled = e.vectors.clone();
    for j in 0..n {
        let ph = C64::from_polar(1.0, e.values[j]);
        for i in 0..n {
            scaled[(i, j)] *= ph;
        }
    }
    &scaled * e.vectors.adjoint()
}

#[derive(Clone, Debug)]
pub struct UhlmannCheck {
    /// max_U |⟨ψ_ρ|(I ⊗ U)|ψ_σ⟩| found by search.
    pub optimized: f64,
    pub closed_form: f64,
    pub restarts: usize,
}

/// Maximize the purification overlap over reference unitaries U = exp(iH).
pub fn uhlmann_check(rho: &DensityOperator, sigma: &DensityOperator, restarts: usize, rng: &mut QRng) -> Result<UhlmannCheck> {
    let closed_form = fidelity(rho, sigma)?;
    let d = rho.dim();
    let a = as_matrix(crate::linalg::purify(rho).amplitudes(), d);
    let b = as_matrix(crate::linalg::purify(sigma).amplitudes(), d);
    let ab = a.adjoint() * b;
    let overlap = |p: &[f64]| -> f64 {
        let u = exp_i_hermitian(&hermitian_from_params(p, d));
        (&ab * u.transpose()).trace().norm()
    };
    let cost = |p: &[f64]| 1.0 - overlap(p);
    let mut best: f64 = 0.0;
    for _ in 0..restarts {
        let x0: Vec<f64> = (0..d * d).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let m = polish(&cost, &x0, 0.5, 4000, 1e-15, 4)?;
        best = best.max(1.0 - m.value);
    }
    Ok(UhlmannCheck { optimized: best, closed_form, restarts })
}

/// Inequality families exercised by `metric_inequality_suite`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricFamily {
    Fannes,
    Contractivity,
    FidelityMonotone,
    Chaining,
    Continuity,
    DynamicVsStatic,
    DynamicDistanceError,
    PureStateDistanceError,
    StrongConcavity,
    /// Knill–Laflamme bound with η found by search; advisory only.
    KnillLaflamme,
}

impl MetricFamily {
    pub const ALL: [MetricFamily; 10] = [
        Self::Fannes,
        Self::Contractivity,
        Self::FidelityMonotone,
        Self::Chaining,
        Self::Continuity,
        Self::DynamicVsStatic,
        Self::DynamicDistanceError,
        Self::PureStateDistanceError,
        Self::StrongConcavity,
        Self::KnillLaflamme,
    ];
}

fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

fn random_dim(rng: &mut QRng) -> usize {
    if rng.random_bool(0.75) {
        2
    } else {
        3
    }
}

fn random_state(d: usize, rng: &mut QRng) -> DensityOperator {
    let env = rng.random_range(1..=d);
    random_density_env(&crate::linalg::SystemShape::single(d), env, rng)
}

fn random_complete(d: usize, rng: &mut QRng) -> QuantumOperation {
    let k = rng.random_range(1..=4);
    random_channel_on(d, k, rng)
}

fn mix(a: &DensityOperator, b: &DensityOperator, t: f64) -> DensityOperator {
    let m = a.matrix() * c(1.0 - t, 0.0) + b.matrix() * c(t, 0.0);
    DensityOperator::new(m, a.shape().clone()).expect("convex combination of states")
}

/// One random instance of a metric inequality.
pub fn metric_family_instance(family: MetricFamily, rng: &mut QRng) -> Result<Vec<MetricReport>> {
    let d = random_dim(rng);
    let rho = random_state(d, rng);
    Ok(match family {
        MetricFamily::Fannes => {
            // σ close enough to ρ that D ≤ 1/e.
            let t = rng.random_range(0.0..0.18);
            let sigma = mix(&rho, &random_state(d, rng), t);
            let dist = absolute_distance(&rho, &sigma)?;
            let gap = (crate::entropy::vn_entropy(&rho) - crate::entropy::vn_entropy(&sigma)).abs();
            let far = random_state(d, rng);
            let dfar = absolute_distance(&rho, &far)?;
            let gfar = (crate::entropy::vn_entropy(&rho) - crate::entropy::vn_entropy(&far)).abs();
            vec![
                MetricReport::inequality("fannes", gap, dist * (d as f64).log2() + eta(dist)),
                MetricReport::inequality(
                    "fannes_weak",
                    gfar,
                    dfar * (d as f64).log2() + 1.0 / (std::f64::consts::E * std::f64::consts::LN_2),
                ),
            ]
        }
        MetricFamily::Contractivity => {
            let sigma = random_state(d, rng);
            let e = random_complete(d, rng);
            let lhs = absolute_distance(&e.apply_normalized(&rho)?, &e.apply_normalized(&sigma)?)?;
            vec![MetricReport::inequality("contractivity", lhs, absolute_distance(&rho, &sigma)?)]
        }
        MetricFamily::FidelityMonotone => {
            let sigma = random_state(d, rng);
            let e = random_complete(d, rng);
            let rhs = fidelity(&e.apply_normalized(&rho)?, &e.apply_normalized(&sigma)?)?;
            vec![MetricReport::inequality("fidelity_monotone", fidelity(&rho, &sigma)?, rhs)]
        }
        MetricFamily::Chaining => {
            let e1 = random_complete(d, rng);
            let e2 = random_complete(d, rng);
            let rho1 = e1.apply_normalized(&rho)?;
            let lhs = dynamic_distance(&rho, &compose(&e2, &e1)?)?;
            let rhs = dynamic_distance(&rho, &e1)? + dynamic_distance(&rho1, &e2)?;
            vec![MetricReport::inequality("chaining", lhs, rhs)]
        }
        MetricFamily::Continuity => {
            let t = rng.random_range(0.0..1.0);
            let rho2 = mix(&rho, &random_state(d, rng), t);
            let e = random_complete(d, rng);
            let err = derived_metrics(&rho, &rho2)?.error.max(0.0);
            let lhs = dynamic_distance(&rho, &e)?;
            vec![MetricReport::inequality("continuity", lhs, dynamic_distance(&rho2, &e)? + 4.0 * err.sqrt())]
        }
        MetricFamily::DynamicVsStatic => {
            let e = random_complete(d, rng);
            let f = fidelity(&rho, &e.apply_normalized(&rho)?)?;
            vec![MetricReport::inequality("dynamic_vs_static", dynamic_fidelity(&rho, &e)?, f * f)]
        }
        MetricFamily::DynamicDistanceError => {
            let e = random_complete(d, rng);
            let err = (1.0 - dynamic_fidelity(&rho, &e)?).max(0.0);
            let dist = dynamic_distance(&rho, &e)?;
            vec![
                MetricReport::inequality("dynamic_error_lower", 2.0 * err, dist),
                MetricReport::inequality("dynamic_error_upper", dist, 2.0 * err.sqrt()),
            ]
        }
        MetricFamily::PureStateDistanceError => {
            let psi = PureState::new(random_pure(d, rng), crate::linalg::SystemShape::single(d))?.density();
            let err = derived_metrics(&psi, &rho)?.error.max(0.0);
            let dist = absolute_distance(&psi, &rho)?;
            vec![
                MetricReport::inequality("pure_error_lower", 2.0 * err, dist),
                MetricReport::inequality("pure_error_upper", dist, 2.0 * err.sqrt()),
            ]
        }
        MetricFamily::StrongConcavity => {
            let rho2 = random_state(d, rng);
            let (s1, s2) = (random_state(d, rng), random_state(d, rng));
            let p: f64 = rng.random_range(0.0..1.0);
            let q: f64 = rng.random_range(0.0..1.0);
            let lhs = (p * q).sqrt() * fidelity(&rho, &s1)? + ((1.0 - p) * (1.0 - q)).sqrt() * fidelity(&rho2, &s2)?;
            let rhs = fidelity(&mix(&rho, &rho2, 1.0 - p), &mix(&s1, &s2, 1.0 - q))?;
            vec![MetricReport::inequality("strong_concavity", lhs, rhs)]
        }
        MetricFamily::KnillLaflamme => {
            let e = random_complete(d, rng);
            let eta = min_pure_fidelity_gap(&rho, &e, rng)?;
            vec![MetricReport::inequality("knill_laflamme", 1.0 - 1.5 * eta, dynamic_fidelity(&rho, &e)?)]
        }
    })
}

/// Largest 1 − ⟨ψ|ℰ(ψ)|ψ⟩ over unit vectors in the support of ρ, by search.
pub fn min_pure_fidelity_gap(rho: &DensityOperator, op: &QuantumOperation, rng: &mut QRng) -> Result<f64> {
    let e = eigh(rho.matrix());
    let support: Vec<ComplexVector> = e
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 1e-10)
        .map(|(i, _)| e.vectors.column(i).into_owned())
        .collect();
    let r = support.len();
    let overlap = |p: &[f64]| -> f64 {
        let mut v = ComplexVector::zeros(rho.dim());
        for (k, s) in support.iter().enumerate() {
            v += s * c(p[2 * k], p[2 * k + 1]);
        }
        let n = v.norm();
        if n < 1e-12 {
            return 1.0;
        }
        v /= c(n, 0.0);
        let out = op.apply_matrix(&(&v * v.adjoint()));
        (v.adjoint() * out * &v)[(0, 0)].re
    };
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let x0: Vec<f64> = (0..2 * r).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = polish(&overlap, &x0, 0.3, 3000, 1e-14, 3)?;
        worst = worst.max(1.0 - m.value);
    }
    Ok(worst)
}

/// `samples` random instances of every family; the last family is advisory.
pub fn metric_inequality_suite(samples: usize, rng: &mut QRng) -> Result<Vec<MetricReport>> {
    let mut out = vec![];
    for family in MetricFamily::ALL {
        for _ in 0..samples {
            out.extend(metric_family_instance(family, rng)?);
        }
    }
    Ok(out)
}

/// Haar-random unitary conjugation ρ ↦ UρU†, used to draw distinct purifications.
pub fn reference_rotation(psi: &ComplexVector, d_sys: usize, rng: &mut QRng) -> ComplexVector {
    let m = as_matrix(psi, d_sys);
    let u = haar_unitary(m.ncols(), rng);
    as_vector(&(m * u.transpose()))
}
