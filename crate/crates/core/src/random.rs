//! Seeded random states, unitaries and channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, partial_trace_matrix, ComplexMatrix, ComplexVector, DensityOperator, SystemShape};
use crate::ops::QuantumOperation;

pub type QRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> QRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Haar-distributed unitary via QR with the phase correction of Mezzadri.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let z = r[(j, j)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar-random unit vector.
pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexVector {
    let v = ComplexVector::from_fn(d, |_, _| c(gaussian(rng), gaussian(rng)));
    let n = v.norm();
    v / c(n, 0.0)
}

/// Reduced state of a Haar-random pure state on shape ⊗ C^env.
pub fn random_density_env<R: Rng + ?Sized>(shape: &SystemShape, env: usize, rng: &mut R) -> DensityOperator {
    let d = shape.total();
    let psi = random_pure(d * env, rng);
    let m = partial_trace_matrix(&(&psi * psi.adjoint()), &[d, env], &[0]).expect("valid dims");
    DensityOperator::new(m, shape.clone()).expect("partial trace of a pure state is a state")
}

/// Full-rank random state (environment as large as the system).
pub fn random_density<R: Rng + ?Sized>(shape: &SystemShape, rng: &mut R) -> DensityOperator {
    random_density_env(shape, shape.total(), rng)
}

/// Random complete operation with `n_kraus` Kraus operators, from a Haar isometry.
pub fn random_channel<R: Rng + ?Sized>(
    in_shape: &SystemShape,
    out_shape: &SystemShape,
    n_kraus: usize,
    rng: &mut R,
) -> QuantumOperation {
    let (di, d_o) = (in_shape.total(), out_shape.total());
    let big = d_o * n_kraus;
    assert!(big >= di, "environment too small for an isometry");
    let u = haar_unitary(big, rng);
    let kraus = (0..n_kraus)
        .map(|k| ComplexMatrix::from_fn(d_o, di, |i, j| u[(k * d_o + i, j)]))
        .collect();
    QuantumOperation::new(kraus, in_shape.clone(), out_shape.clone()).expect("consistent shapes")
}

/// Random complete operation on a single space of dimension d.
pub fn random_channel_on<R: Rng + ?Sized>(d: usize, n_kraus: usize, rng: &mut R) -> QuantumOperation {
    let s = SystemShape::single(d);
    random_channel(&s, &s, n_kraus, rng)
}

/// Random unit-norm qubit Bloch vector scaled into the ball.
pub fn random_bloch<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let v = [gaussian(rng), gaussian(rng), gaussian(rng)];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let r: f64 = rng.random::<f64>().cbrt();
    [v[0] / n * r, v[1] / n * r, v[2] / n * r]
}
