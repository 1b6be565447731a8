//! Abstract circuit synthesis: CNOTs plus single-qubit gates, minimal CNOT
//! count, JSON round trip.

use photonic_u4::gates::{cz, swap};
use photonic_u4::kak_decompose;
use photonic_u4::{circuit_unitary, cnot_class, phase_distance, random_u4, synth_u4, AbstractCircuit, Unitary4};

fn show(name: &str, u: &Unitary4) {
    let c = synth_u4(u).unwrap();
    let err = phase_distance(&circuit_unitary(&c), u);
    println!(
        "{name:<8} class {}  cnots {}  locals {}  error {err:.1e}",
        cnot_class(&kak_decompose(u).unwrap().coords).unwrap().count(),
        c.cnot_count(),
        c.local_count()
    );
}

fn main() {
    show("identity", &Unitary4::identity());
    show("cz", &cz());
    show("swap", &swap());
    show("random", &random_u4(11));

    let c = synth_u4(&cz()).unwrap();
    let text = c.to_json();
    println!("\nCZ circuit as JSON:\n{text}");
    let back = AbstractCircuit::from_json(&text).unwrap();
    println!("reloaded error: {:.1e}", phase_distance(&circuit_unitary(&back), &cz()));
}
