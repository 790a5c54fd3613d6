//! Statevector simulation and metrics for layered qubit-chain sampler
//! circuits: single-qubit `u(θ, φ)` rotations interleaved with
//! nearest-neighbor CZ columns.
//!
//! The crate covers state and information fidelity, output-distribution
//! statistics, single-qubit entanglement measures with their Haar
//! references, Porter-Thomas statistics and out-of-time-order correlators.
//! [`experiment`] drives reproducible parameter sweeps over all of these.

pub mod chaos;
pub mod circuit;
pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod fidelity;
pub mod noise;
pub mod seed;
pub mod state;

pub use circuit::{AngleEnsemble, GateSequence, SamplerSpec};
pub use error::{Error, Result};
pub use state::{Pauli, PauliString, ProbDist, SingleQubitRdm, StateVector};
