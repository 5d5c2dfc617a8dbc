//! Quantum channel algebra and optimization of ex-ante/ex-post noise
//! suppression protocols.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature only adds
//! thread-parallel annealing restarts and Monte-Carlo blocks; results are
//! identical with and without it.
//!
//! Layout:
//! - [`matrix`]: dense complex matrices, bipartite tensor operations, Haar states
//! - [`channel`]: Choi, Kraus and Pauli-transfer representations of channels
//! - [`fidelity`]: exact and sampled average fidelity, Choi-form objective, penalty
//! - [`protocol`]: instrument/correction protocols and the canonical strategies
//! - [`optimize`]: Cholesky-parametrized simulated annealing and the closed-form
//!   ex-post optimum for qubits
//! - [`random`]: random channels, instruments and protocols
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod error;
pub mod fidelity;
pub(crate) mod linalg;
pub(crate) mod math;
pub mod matrix;
pub mod optimize;
pub(crate) mod par;
pub mod protocol;
pub mod random;

pub use channel::{
    ChoiOperator, CpVerdict, KrausChannel, PauliTransferMatrix, RotationDecomposition,
    DEFAULT_CP_TOL,
};
pub use error::{Error, Result};
pub use fidelity::{AverageOperation, McEstimate};
pub use matrix::{BipartiteDims, ComplexMatrix, PureState, Subsystem, C64};
pub use protocol::{Branch, Povm, Protocol};

pub use nalgebra::{Matrix3, Vector3};
