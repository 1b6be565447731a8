//! Single-qubit unitaries as wave plates (polarization) or converters and
//! Dove prisms (OAM).

use photonic_u4::photonic::decompose_local;
use photonic_u4::{ComponentCatalog, Unitary2, Wire};

fn main() {
    let catalog = ComponentCatalog::default();
    let gates = [
        ("H", Unitary2::hadamard()),
        ("X", Unitary2::pauli_x()),
        ("Rz(pi/2)", Unitary2::rz(std::f64::consts::FRAC_PI_2)),
        ("Ry(0.7)", Unitary2::ry(0.7)),
        ("random", photonic_u4::matrix::random_su2(5)),
    ];
    for wire in [Wire::Pol, Wire::Oam] {
        println!("{wire}:");
        for (name, u) in &gates {
            let (elements, phase) = decompose_local(wire, u, &catalog).unwrap();
            let parts: Vec<String> = elements
                .iter()
                .map(|e| format!("{}({:.4})", e.kind(), e.parameter().unwrap_or(0.0)))
                .collect();
            println!("  {name:<9} -> [{}]  phase {phase:+.4}", parts.join(", "));
        }
    }
}
