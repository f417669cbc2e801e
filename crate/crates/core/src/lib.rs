//! Numerical quantum information toolkit: density operators and quantum
//! operations, distance measures, entropies, two-qubit entanglement, process
//! tomography, Schumacher compression, error-correcting codes, coherent
//! information capacity bounds and small protocol simulations.
//!
//! Entropies are in bits. Randomness always comes from a seeded [`QRng`].

pub mod acceptance;
pub mod capacity;
pub mod compress;
pub mod entangle;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod ops;
pub mod optimize;
pub mod protocols;
pub mod qec;
pub mod random;
pub mod tomography;

pub use error::{QinfoError, Result};
pub use linalg::{ComplexMatrix, ComplexVector, DensityOperator, PureState, SystemShape, C64};
pub use metrics::MetricReport;
pub use ops::QuantumOperation;
pub use random::{seeded, QRng};
