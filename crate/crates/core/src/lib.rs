//! Probabilistic LOCC interconversion of two-party unitary gates.
//!
//! A gate `U` acting on two `d`-level systems is mapped to the pure state
//! obtained by applying it to one half of each of two locally maximally
//! entangled pairs. The Schmidt number of that state across the two parties
//! decides which gates `U` can simulate with non-zero probability, giving a
//! finite hierarchy of classes (three for qubits: local, CNOT-like, SWAP-like).
//!
//! The crate provides:
//!
//! * [`linalg`]: small dense complex kernels (Jacobi SVD, Kronecker products).
//! * [`gates`]: the gate library and the two-qubit canonical (KAK) form.
//! * [`choi`]: pure states, the gate-state map and Schmidt analysis.
//! * [`classify`]: interconversion classes and the convertibility predicate.
//! * [`convert`]: optimal conversion probabilities and the local filters achieving them.
//! * [`sim`]: an exact branch-enumerating pure-state simulator.
//! * [`protocols`]: executable conversion and simulation protocols with verification.

pub mod choi;
pub mod classify;
pub mod convert;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod protocols;
pub mod sim;

pub use choi::{
    choi_state, maximally_entangled, schmidt_decompose, schmidt_number, schmidt_spectrum, ChoiState, PureState,
    SchmidtSpectrum,
};
pub use classify::{can_simulate, classify, creates_two_ebits, equivalent, ClassLabel, GateClass};
pub use convert::{quote_to_cnot, quote_to_swap, vidal_probability, ConversionQuote, ConversionTarget, LocalFilter};
pub use error::{Error, Result};
pub use gates::{canonical_decompose, gate_from_canonical, haar_random_gate, named_gate, CanonicalForm, Gate};
pub use linalg::{ComplexMatrix, C64};
pub use protocols::ProtocolReport;

/// Default relative cutoff for counting Schmidt coefficients as non-zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;
