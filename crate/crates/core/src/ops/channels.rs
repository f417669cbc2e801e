//! Catalog of standard channels.

use crate::error::{QinfoError, Result};
use crate::linalg::{c, identity, ket, pauli_x, pauli_y, pauli_z, tensor, unit, ComplexMatrix, SystemShape};

use super::QuantumOperation;

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(QinfoError::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn qubit_op(kraus: Vec<ComplexMatrix>) -> QuantumOperation {
    QuantumOperation::new(kraus, SystemShape::single(2), SystemShape::single(2)).expect("2x2 Kraus")
}

fn s(x: f64) -> num_complex::Complex64 {
    c(x.sqrt(), 0.0)
}

/// Replaces the state by I/2 with probability p.
pub fn depolarizing(p: f64) -> Result<QuantumOperation> {
    check_prob("p", p)?;
    Ok(qubit_op(vec![
        identity(2) * s(1.0 - 0.75 * p),
        pauli_x() * s(p / 4.0),
        pauli_y() * s(p / 4.0),
        pauli_z() * s(p / 4.0),
    ]))
}

/// {diag(1, √(1−γ)), √γ |0⟩⟨1|}
pub fn amplitude_damping(gamma: f64) -> Result<QuantumOperation> {
    check_prob("gamma", gamma)?;
    let e0 = crate::linalg::diag(&[1.0, (1.0 - gamma).sqrt()]);
    let e1 = unit(2, 0, 1) * s(gamma);
    Ok(qubit_op(vec![e0, e1]))
}

pub fn bit_flip(p: f64) -> Result<QuantumOperation> {
    check_prob("p", p)?;
    Ok(qubit_op(vec![identity(2) * s(1.0 - p), pauli_x() * s(p)]))
}

pub fn phase_flip(p: f64) -> Result<QuantumOperation> {
    check_prob("p", p)?;
    Ok(qubit_op(vec![identity(2) * s(1.0 - p), pauli_z() * s(p)]))
}

/// {I, X, Y, Z}/2: every input goes to I/2.
pub fn pauli_randomizer() -> QuantumOperation {
    qubit_op(vec![
        identity(2) * c(0.5, 0.0),
        pauli_x() * c(0.5, 0.0),
        pauli_y() * c(0.5, 0.0),
        pauli_z() * c(0.5, 0.0),
    ])
}

/// Complete dephasing {|0⟩⟨0|, |1⟩⟨1|}.
pub fn decohering() -> QuantumOperation {
    qubit_op(vec![unit(2, 0, 0), unit(2, 1, 1)])
}

/// Append a flag factor of dimension `flags` to each branch, branch m marked |m⟩.
fn flagged(branches: Vec<Vec<ComplexMatrix>>) -> QuantumOperation {
    let flags = branches.len();
    let mut kraus = vec![];
    for (m, b) in branches.into_iter().enumerate() {
        let f = ComplexMatrix::from_column_slice(flags, 1, ket(flags, m).as_slice());
        for k in b {
            kraus.push(tensor(&k, &f));
        }
    }
    QuantumOperation::new(kraus, SystemShape::single(2), SystemShape::new(vec![2, flags]).expect("dims"))
        .expect("consistent shapes")
}

/// With probability ε the qubit is replaced by |0⟩ and the flag set to |1⟩.
pub fn erasure(eps: f64) -> Result<QuantumOperation> {
    check_prob("epsilon", eps)?;
    Ok(flagged(vec![
        vec![identity(2) * s(1.0 - eps)],
        vec![unit(2, 0, 0) * s(eps), unit(2, 0, 1) * s(eps)],
    ]))
}

/// With probability δ the qubit is dephased in the computational basis and the flag set to |1⟩.
pub fn phase_erasure(delta: f64) -> Result<QuantumOperation> {
    check_prob("delta", delta)?;
    Ok(flagged(vec![
        vec![identity(2) * s(1.0 - delta)],
        vec![unit(2, 0, 0) * s(delta), unit(2, 1, 1) * s(delta)],
    ]))
}

/// Erasure with probability ε, phase erasure with probability δ, flag of dimension 3.
pub fn mixed_erasure(eps: f64, delta: f64) -> Result<QuantumOperation> {
    check_prob("epsilon", eps)?;
    check_prob("delta", delta)?;
    check_prob("epsilon + delta", eps + delta)?;
    Ok(flagged(vec![
        vec![identity(2) * s(1.0 - eps - delta)],
        vec![unit(2, 0, 0) * s(eps), unit(2, 0, 1) * s(eps)],
        vec![unit(2, 0, 0) * s(delta), unit(2, 1, 1) * s(delta)],
    ]))
}

/// Named channels understood by `standard_channel`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardChannel {
    Identity,
    Depolarizing,
    AmplitudeDamping,
    BitFlip,
    PhaseFlip,
    PauliRandomizer,
    Decohering,
    Erasure,
    PhaseErasure,
    MixedErasure,
}

impl StandardChannel {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "identity" => Self::Identity,
            "depolarizing" => Self::Depolarizing,
            "amplitude_damping" | "amplitude-damping" => Self::AmplitudeDamping,
            "bit_flip" | "bit-flip" => Self::BitFlip,
            "phase_flip" | "phase-flip" => Self::PhaseFlip,
            "pauli_randomizer" | "pauli-randomizer" => Self::PauliRandomizer,
            "decohering" => Self::Decohering,
            "erasure" => Self::Erasure,
            "phase_erasure" | "phase-erasure" => Self::PhaseErasure,
            "mixed_erasure" | "mixed-erasure" => Self::MixedErasure,
            other => return Err(QinfoError::InvalidParameter(format!("unknown channel {other:?}"))),
        })
    }

    pub fn param_count(self) -> usize {
        match self {
            Self::Identity | Self::PauliRandomizer | Self::Decohering => 0,
            Self::MixedErasure => 2,
            _ => 1,
        }
    }
}

pub fn standard_channel(kind: StandardChannel, params: &[f64]) -> Result<QuantumOperation> {
    if params.len() != kind.param_count() {
        return Err(QinfoError::InvalidParameter(format!(
            "{kind:?} takes {} parameter(s), got {}",
            kind.param_count(),
            params.len()
        )));
    }
    match kind {
        StandardChannel::Identity => Ok(QuantumOperation::identity(SystemShape::single(2))),
        StandardChannel::Depolarizing => depolarizing(params[0]),
        StandardChannel::AmplitudeDamping => amplitude_damping(params[0]),
        StandardChannel::BitFlip => bit_flip(params[0]),
        StandardChannel::PhaseFlip => phase_flip(params[0]),
        StandardChannel::PauliRandomizer => Ok(pauli_randomizer()),
        StandardChannel::Decohering => Ok(decohering()),
        StandardChannel::Erasure => erasure(params[0]),
        StandardChannel::PhaseErasure => phase_erasure(params[0]),
        StandardChannel::MixedErasure => mixed_erasure(params[0], params[1]),
    }
}

/// Parse specs such as `erasure:0.25` or `mixed-erasure:0.1,0.2`.
pub fn parse_channel_spec(spec: &str) -> Result<QuantumOperation> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params = rest
        .split(',')
        .filter(|t| !t.is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| QinfoError::InvalidParameter(format!("{t:?}: {e}"))))
        .collect::<Result<Vec<f64>>>()?;
    standard_channel(StandardChannel::parse(name)?, &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, DensityOperator};
    use crate::ops::maps_equal;
    use crate::random::{random_density, seeded};

    #[test]
    fn randomizer_outputs_maximally_mixed() {
        let mut rng = seeded(1);
        for _ in 0..5 {
            let rho = random_density(&SystemShape::single(2), &mut rng);
            let out = pauli_randomizer().apply(&rho).unwrap();
            assert!(max_abs(&(out.matrix - identity(2) * c(0.5, 0.))) < 1e-12);
        }
    }

    #[test]
    fn amplitude_damping_kraus_list() {
        let ad = amplitude_damping(0.36).unwrap();
        let k = ad.kraus();
        assert!(max_abs(&(&k[0] - crate::linalg::diag(&[1.0, 0.8]))) < 1e-12);
        assert!(max_abs(&(&k[1] - unit(2, 0, 1) * c(0.6, 0.))) < 1e-12);
    }

    #[test]
    fn zero_depolarizing_is_identity() {
        assert!(maps_equal(&depolarizing(0.0).unwrap(), &QuantumOperation::identity(SystemShape::single(2))));
        let rho = DensityOperator::diagonal(&[0.9, 0.1]).unwrap();
        let out = depolarizing(1.0).unwrap().apply(&rho).unwrap();
        assert!(max_abs(&(out.matrix - identity(2) * c(0.5, 0.))) < 1e-12);
    }

    #[test]
    fn erasure_flag_is_last_factor() {
        let e = erasure(0.25).unwrap();
        assert_eq!(e.out_shape().dims(), &[2, 2]);
        let out = e.apply(&DensityOperator::diagonal(&[0.0, 1.0]).unwrap()).unwrap();
        // |1⟩ survives with flag 0 (index 2), erased to |0⟩ with flag 1 (index 1).
        assert!((out.matrix[(2, 2)].re - 0.75).abs() < 1e-12);
        assert!((out.matrix[(1, 1)].re - 0.25).abs() < 1e-12);
        assert_eq!(mixed_erasure(0.1, 0.2).unwrap().out_shape().dims(), &[2, 3]);
    }

    #[test]
    fn parameter_validation() {
        assert!(depolarizing(1.5).is_err());
        assert!(mixed_erasure(0.6, 0.6).is_err());
        assert!(standard_channel(StandardChannel::BitFlip, &[]).is_err());
        assert!(parse_channel_spec("nope:0.1").is_err());
        assert_eq!(parse_channel_spec("erasure:0.25").unwrap(), erasure(0.25).unwrap());
        assert_eq!(parse_channel_spec("mixed-erasure:0.1,0.25").unwrap(), mixed_erasure(0.1, 0.25).unwrap());
    }
}
