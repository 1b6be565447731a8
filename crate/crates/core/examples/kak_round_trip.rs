//! Splits a random gate into local layers around a canonical interaction and
//! puts it back together.

use photonic_u4::cartan::{interaction_unitary, kak_decompose, reassemble};
use photonic_u4::{phase_distance, random_u4, tensor};

fn main() {
    let u = random_u4(2024);
    let kak = kak_decompose(&u).unwrap();
    let k = kak.coords;
    println!("coords: kx = {:.6}, ky = {:.6}, kz = {:.6}", k.kx, k.ky, k.kz);
    println!("canonical chamber: {}", k.is_canonical(1e-9));
    println!("global phase: {:.6} rad", kak.phase.radians());

    let back = reassemble(&kak);
    println!("reassembled, phase distance: {:.2e}", phase_distance(&u, &back));

    // Same thing by hand. The `left` pair acts first, so it sits rightmost.
    let by_hand = (tensor(&kak.right_pol, &kak.right_oam)
        * interaction_unitary(&k)
        * tensor(&kak.left_pol, &kak.left_oam))
    .with_phase(kak.phase.radians());
    println!("by hand,     phase distance: {:.2e}", phase_distance(&u, &by_hand));
}
