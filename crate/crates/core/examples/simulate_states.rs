//! Pushes basis states and a superposition through compiled recipes.

use num_complex::Complex64;
use photonic_u4::gates::lookup;
use photonic_u4::matrix::{BasisState, StateVec4};
use photonic_u4::{apply_state, compile, synth_u4, CnotImpl, ComponentCatalog};

fn print_state(label: &str, s: &StateVec4) {
    let probs = s.probabilities();
    let parts: Vec<String> = BasisState::ALL
        .iter()
        .zip(probs)
        .filter(|(_, p)| *p > 1e-12)
        .map(|(b, p)| format!("{}: {p:.3}", b.label()))
        .collect();
    println!("  {label:<6} -> {}", parts.join("  "));
}

fn main() {
    let catalog = ComponentCatalog::default();
    for name in ["cnot_pol_oam", "swap"] {
        let gate = lookup(name).unwrap();
        let recipe = compile(&synth_u4(&gate.unitary).unwrap(), CnotImpl::Auto, &catalog).unwrap();
        println!("{name}:");
        for b in BasisState::ALL {
            print_state(b.label(), &apply_state(&recipe, &StateVec4::basis(b)));
        }
    }

    // (|H+⟩ + |V+⟩)/√2 through the CNOT: a polarization–OAM Bell state.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVec4::normalized([Complex64::new(h, 0.), Complex64::new(0., 0.), Complex64::new(h, 0.), Complex64::new(0., 0.)]).unwrap();
    let cnot = lookup("cnot_pol_oam").unwrap();
    let recipe = compile(&synth_u4(&cnot.unitary).unwrap(), CnotImpl::Sagnac, &catalog).unwrap();
    print_state("D+", &apply_state(&recipe, &plus));
}
