//! Built-in named gates.

use num_complex::Complex64;

use crate::matrix::{Mat4, Unitary4};
use crate::photonic::sagnac_fixed_l_matrix;
use crate::synth::{cnot_unitary, Wire};

#[derive(Clone, Debug)]
pub struct NamedGate {
    pub name: &'static str,
    pub description: &'static str,
    pub unitary: Unitary4,
}

fn permutation(pairs: [(usize, usize); 4]) -> Unitary4 {
    let mut m = Mat4::zeros();
    for (r, k) in pairs {
        m[(r, k)] = Complex64::new(1., 0.);
    }
    Unitary4::new(m).expect("permutation matrices are unitary")
}

pub fn swap() -> Unitary4 {
    permutation([(0, 0), (1, 2), (2, 1), (3, 3)])
}

pub fn cz() -> Unitary4 {
    let mut m = Mat4::identity();
    m[(3, 3)] = Complex64::new(-1., 0.);
    Unitary4::new(m).expect("diagonal signs are unitary")
}

pub fn builtin_gates() -> Vec<NamedGate> {
    vec![
        NamedGate { name: "identity", description: "4x4 identity", unitary: Unitary4::identity() },
        NamedGate {
            name: "cnot_pol_oam",
            description: "CNOT, polarization control, OAM target",
            unitary: cnot_unitary(Wire::Pol),
        },
        NamedGate {
            name: "cnot_oam_pol",
            description: "CNOT, OAM control, polarization target",
            unitary: cnot_unitary(Wire::Oam),
        },
        NamedGate { name: "cz", description: "controlled-Z, diag(1, 1, 1, -1)", unitary: cz() },
        NamedGate { name: "swap", description: "exchange of the polarization and OAM qubits", unitary: swap() },
        NamedGate {
            name: "sagnac_fixed_l",
            description: "printed Sagnac interferometer matrix with l = 1",
            unitary: sagnac_fixed_l_matrix(1),
        },
    ]
}

/// Alternate spellings accepted by [`lookup`].
const ALIASES: [(&str, &str); 1] = [("sagnac_eq1", "sagnac_fixed_l")];

/// Case-insensitive lookup.
pub fn lookup(name: &str) -> Option<NamedGate> {
    let name = name.trim();
    let name = ALIASES.iter().find(|(a, _)| a.eq_ignore_ascii_case(name)).map_or(name, |(_, n)| n);
    builtin_gates().into_iter().find(|g| g.name.eq_ignore_ascii_case(name))
}
