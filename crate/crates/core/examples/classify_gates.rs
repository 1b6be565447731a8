//! Weyl coordinates, CNOT class and local invariants of the built-in gates
//! and a few random ones.

use photonic_u4::cartan::{kak_decompose, local_invariants};
use photonic_u4::gates::builtin_gates;
use photonic_u4::{cnot_class, random_u4, Unitary4};

fn describe(name: &str, u: &Unitary4) {
    let kak = kak_decompose(u).expect("unitary input");
    let k = kak.coords;
    let g = local_invariants(u);
    println!(
        "{name:<14} k = ({:+.4}, {:+.4}, {:+.4})  class {}  g1 = {:+.4}{:+.4}i  g2 = {:+.4}",
        k.kx,
        k.ky,
        k.kz,
        cnot_class(&kak_decompose(u).unwrap().coords).unwrap().count(),
        g.g1.re,
        g.g1.im,
        g.g2
    );
}

fn main() {
    for g in builtin_gates() {
        describe(g.name, &g.unitary);
    }
    for seed in 0..3 {
        describe(&format!("random #{seed}"), &random_u4(seed));
    }
}
