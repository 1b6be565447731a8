//! Compiler from two-qubit unitaries on a photon's polarization and orbital
//! angular momentum (`l = ±1`) to recipes of optical elements.
//!
//! Basis order everywhere is `[H+, H−, V+, V−]`, polarization first.
//!
//! ```
//! use photonic_u4::{compile, gates, synth_u4, verify, ComponentCatalog, CnotImpl};
//!
//! let swap = gates::swap();
//! let circuit = synth_u4(&swap).unwrap();
//! let recipe = compile(&circuit, CnotImpl::Auto, &ComponentCatalog::default()).unwrap();
//! let report = verify(&recipe, &swap);
//! assert!(report.fidelity > 1.0 - 1e-9);
//! assert_eq!(report.cnot_count, 3);
//! ```

pub mod cartan;
pub mod cli;
pub mod error;
pub mod fit;
pub mod gates;
pub mod json;
pub mod matrix;
pub mod optimize;
pub mod photonic;
pub mod sim;
pub mod synth;

pub use cartan::{interaction_unitary, kak_decompose, local_invariants, reassemble, KakDecomposition, LocalInvariants, WeylCoords};
pub use error::{Error, Result};
pub use matrix::{
    phase_distance, process_fidelity, random_su4, random_u4, su4_normalize, tensor, BasisState, GlobalPhase, StateVec4,
    Unitary2, Unitary4,
};
pub use optimize::{compile_optimized, reduce_surfaces};
pub use photonic::{compile, compile_assignment, surface_count, transmission, CnotImpl, ComponentCatalog, Element, Recipe};
pub use sim::{apply_state, simulate_unitary, verify, VerificationReport};
pub use synth::{circuit_unitary, cnot_class, simplify, synth_interaction, synth_u4, AbstractCircuit, AbstractGate, Wire};
