//! The Sagnac CNOT: the interferometer model, its basis action, and how it
//! relates to a textbook CNOT with OAM as control.

use photonic_u4::matrix::{BasisState, StateVec4};
use photonic_u4::photonic::{mz_cnot_unitary, sagnac_model_unitary, sagnac_fixed_l_matrix};
use photonic_u4::synth::cnot_unitary;
use photonic_u4::{cnot_class, kak_decompose, phase_distance, tensor, Unitary2, Wire};

fn main() {
    let s = sagnac_model_unitary();
    println!("model Sagnac, basis action:");
    for b in BasisState::ALL {
        let out = s.apply(&StateVec4::basis(b));
        let amps: Vec<String> = out.amplitudes().iter().map(|z| format!("{:+.3}{:+.3}i", z.re, z.im)).collect();
        println!("  {} -> [{}]", b.label(), amps.join(", "));
    }
    println!("CNOT class: {}", cnot_class(&kak_decompose(&s).unwrap().coords).unwrap().count());
    // With one fixed l the interferometer is only Z ⊗ X: the entangling part
    // comes from the opposite Dove phases the two OAM modes pick up.
    let fixed_l = sagnac_fixed_l_matrix(1);
    println!(
        "fixed-l matrix: class {}, distance to Z (x) X {:.1e}",
        cnot_class(&kak_decompose(&fixed_l).unwrap().coords).unwrap().count(),
        phase_distance(&fixed_l, &tensor(&Unitary2::pauli_z(), &Unitary2::pauli_x()))
    );
    println!(
        "distance to CNOT(OAM -> POL) before local corrections: {:.3}",
        phase_distance(&s, &cnot_unitary(Wire::Oam))
    );
    println!("MZ equals CNOT(POL -> OAM): {:.1e}", phase_distance(&mz_cnot_unitary(), &cnot_unitary(Wire::Pol)));
}
