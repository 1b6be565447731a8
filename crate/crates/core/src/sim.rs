//! Exact simulation and verification of recipes.

use serde::Serialize;

use crate::json::ser_sig12;
use crate::matrix::{phase_distance, process_fidelity, StateVec4, Unitary4};
use crate::photonic::{element_unitary, surface_count, transmission, Recipe};

/// `e^{iθ}·E_n·…·E_1`.
pub fn simulate_unitary(r: &Recipe) -> Unitary4 {
    let mut acc = *Unitary4::identity().matrix();
    for e in &r.elements {
        acc = element_unitary(e).matrix() * acc;
    }
    Unitary4::from_matrix_unchecked(acc * r.phase.factor())
}

pub fn apply_state(r: &Recipe, s: &StateVec4) -> StateVec4 {
    simulate_unitary(r).apply(s)
}

/// Unitary fidelity and loss, kept as separate numbers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    #[serde(serialize_with = "ser_sig12")]
    pub fidelity: f64,
    #[serde(serialize_with = "ser_sig12")]
    pub phase_distance: f64,
    #[serde(serialize_with = "ser_sig12")]
    pub transmission: f64,
    pub cnot_count: usize,
    pub surface_count: u32,
    pub numerically_synthesized: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

pub fn verify(r: &Recipe, target: &Unitary4) -> VerificationReport {
    let u = simulate_unitary(r);
    VerificationReport {
        fidelity: process_fidelity(&u, target),
        phase_distance: phase_distance(&u, target),
        transmission: transmission(r),
        cnot_count: r.cnot_count(),
        surface_count: surface_count(r),
        numerically_synthesized: r.numerically_synthesized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::BasisState;
    use crate::photonic::{mz_cnot_unitary, ComponentCatalog, Element};

    #[test]
    fn empty_and_single() {
        let empty = Recipe::new(vec![], ComponentCatalog::default());
        assert_eq!(simulate_unitary(&empty), Unitary4::identity());
        let out = apply_state(&empty, &StateVec4::basis(BasisState::HPlus));
        assert_eq!(out.probabilities(), [1., 0., 0., 0.]);
        let report = verify(&empty, &Unitary4::identity());
        assert_eq!((report.fidelity, report.transmission, report.cnot_count, report.surface_count), (1., 1., 0, 0));

        let mz = Recipe::new(vec![Element::MzCnot], ComponentCatalog::default());
        assert_eq!(simulate_unitary(&mz), mz_cnot_unitary());
        let out = apply_state(&mz, &StateVec4::basis(BasisState::VPlus));
        assert_eq!(out.amplitude(BasisState::VMinus).norm(), 1.0);
    }
}
