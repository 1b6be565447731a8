//! Independent reference computations checked against the library.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use nalgebra::Matrix4;
use num_complex::Complex64 as C;
use photonic_u4::cartan::{interaction_unitary, kak_decompose, local_invariants, LocalInvariants, WeylCoords};
use photonic_u4::gates::{cz, swap};
use photonic_u4::matrix::{random_su4, BasisState, Mat2, Mat4, StateVec4};
use photonic_u4::photonic::{
    dove_jones, element_unitary, hwp_jones, mz_cnot_unitary, qwp_jones, sagnac_model_unitary, transmission_for,
};
use photonic_u4::synth::cnot_unitary;
use photonic_u4::{phase_distance, Element, Unitary2, Unitary4, Wire};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pauli_pairs() -> [Mat4; 3] {
    let x = *Unitary2::pauli_x().matrix();
    let y = *Unitary2::pauli_y().matrix();
    let z = *Unitary2::pauli_z().matrix();
    [x.kronecker(&x), y.kronecker(&y), z.kronecker(&z)]
}

/// exp(m) by scaling and squaring around a degree-18 Taylor polynomial.
fn expm(m: &Mat4) -> Mat4 {
    let norm = m.norm();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = m / C::new(2f64.powi(s), 0.0);
    let mut term = Matrix4::<C>::identity();
    let mut sum = term;
    for k in 1..=18 {
        term = term * a / C::new(k as f64, 0.0);
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

#[test]
fn interaction_matches_matrix_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let pp = pauli_pairs();
    for _ in 0..100 {
        let k = [rng.random_range(-PI..PI), rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
        let h = pp[0] * C::new(k[0], 0.) + pp[1] * C::new(k[1], 0.) + pp[2] * C::new(k[2], 0.);
        let oracle = expm(&(h * C::new(0., -1.)));
        let got = interaction_unitary(&WeylCoords::new(k[0], k[1], k[2]));
        assert!((got.matrix() - oracle).norm() < 1e-10, "{k:?}");
    }
}

/// Closed-form invariants of exp(−i k·σσ), with c = 2k.
fn invariants_from_coords(k: &WeylCoords) -> (C, f64) {
    let c = [2.0 * k.kx, 2.0 * k.ky, 2.0 * k.kz];
    let cc: f64 = c.iter().map(|x| x.cos().powi(2)).product();
    let ss: f64 = c.iter().map(|x| x.sin().powi(2)).product();
    let s2: f64 = c.iter().map(|x| (2.0 * x).sin()).product();
    let c2: f64 = c.iter().map(|x| (2.0 * x).cos()).product();
    (C::new(cc - ss, -s2 / 4.0), 4.0 * cc - 4.0 * ss - c2)
}

#[test]
fn invariants_agree_with_closed_form_of_the_coordinates() {
    for seed in 0..200 {
        let u = random_su4(seed);
        let k = kak_decompose(&u).unwrap().coords;
        let (g1, g2) = invariants_from_coords(&k);
        let got = local_invariants(&u);
        assert!((got.g1 - g1).norm() < 1e-9 && (got.g2 - g2).abs() < 1e-9, "seed {seed}: {got:?} vs {g1} {g2}");
    }
}

#[test]
fn named_gate_invariants_and_coordinates() {
    let cases: [(&str, Unitary4, [f64; 3], LocalInvariants); 4] = [
        ("identity", Unitary4::identity(), [0.0; 3], LocalInvariants { g1: C::new(1., 0.), g2: 3.0 }),
        ("cnot", cnot_unitary(Wire::Pol), [FRAC_PI_4, 0., 0.], LocalInvariants { g1: C::new(0., 0.), g2: 1.0 }),
        ("cz", cz(), [FRAC_PI_4, 0., 0.], LocalInvariants { g1: C::new(0., 0.), g2: 1.0 }),
        ("swap", swap(), [FRAC_PI_4; 3], LocalInvariants { g1: C::new(-1., 0.), g2: -3.0 }),
    ];
    for (name, u, k, g) in cases {
        let got = kak_decompose(&u).unwrap().coords;
        assert!(got.max_abs_diff(&WeylCoords::new(k[0], k[1], k[2])) < 1e-9, "{name}: {got:?}");
        assert!(local_invariants(&u).max_abs_diff(&g) < 1e-9, "{name}");
    }
}

fn rot(t: f64) -> Mat2 {
    let (s, c) = t.sin_cos();
    Mat2::new(C::new(c, 0.), C::new(-s, 0.), C::new(s, 0.), C::new(c, 0.))
}

fn retarder(theta: f64, delta: f64) -> Mat2 {
    rot(theta) * Mat2::new(C::new(1., 0.), C::new(0., 0.), C::new(0., 0.), C::from_polar(1.0, delta)) * rot(-theta)
}

fn same_up_to_phase(a: &Mat2, b: &Mat2) -> bool {
    let t = (a.adjoint() * b).trace();
    let ph = if t.norm() > 0.0 { t / t.norm() } else { C::new(1., 0.) };
    (a * ph - b).norm() < 1e-12
}

#[test]
fn wave_plates_are_linear_retarders() {
    for i in 0..50 {
        let theta = -1.5 + 0.07 * i as f64;
        assert!(same_up_to_phase(&hwp_jones(theta), &retarder(theta, PI)));
        assert!(same_up_to_phase(&qwp_jones(theta), &retarder(theta, FRAC_PI_2)));
        assert!(same_up_to_phase(&(qwp_jones(theta) * qwp_jones(theta)), &hwp_jones(theta)));
    }
    // Half-wave plate at 22.5° takes H to diagonal.
    let d = hwp_jones(FRAC_PI_8) * nalgebra::Vector2::new(C::new(1., 0.), C::new(0., 0.));
    assert!((d[0] - d[1]).norm() < 1e-15 && (d[0].norm() - 0.5f64.sqrt()).abs() < 1e-15);
    // Quarter-wave plate at 45° takes H to circular.
    let circ = qwp_jones(FRAC_PI_4) * nalgebra::Vector2::new(C::new(1., 0.), C::new(0., 0.));
    assert!((circ[0].norm() - circ[1].norm()).abs() < 1e-15);
    assert!(((circ[1] / circ[0]).arg().abs() - FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn dove_prism_exchanges_oam_sign_with_rotation_phase() {
    // A Dove prism flips l → −l; rotating it by α adds e^{±2ilα} with l = ±1.
    for i in 0..20 {
        let a = 0.13 * i as f64;
        let d = dove_jones(a);
        assert!(d[(0, 0)].norm() < 1e-15 && d[(1, 1)].norm() < 1e-15);
        assert!((d[(0, 1)] - C::from_polar(1.0, 2.0 * a)).norm() < 1e-15);
        assert!((d[(1, 0)] - C::from_polar(1.0, -2.0 * a)).norm() < 1e-15);
    }
}

#[test]
fn interferometers_against_basis_action() {
    // MZ: V flips the OAM sign, H leaves it.
    let mz = mz_cnot_unitary();
    let expect = [BasisState::HPlus, BasisState::HMinus, BasisState::VMinus, BasisState::VPlus];
    for (b, e) in BasisState::ALL.iter().zip(expect) {
        let out = mz.apply(&StateVec4::basis(*b));
        assert!((out.amplitude(e).norm() - 1.0).abs() < 1e-15);
    }
    // Sagnac: both arms flip the OAM sign, with opposite Dove phases per polarization.
    let s = sagnac_model_unitary();
    let d = element_unitary(&Element::DovePrism { angle_rad: FRAC_PI_8 });
    let h_proj = Mat4::from_diagonal(&nalgebra::Vector4::new(C::new(1., 0.), C::new(1., 0.), C::new(0., 0.), C::new(0., 0.)));
    assert!((s.matrix() * h_proj - d.matrix() * h_proj).norm() < 1e-15);
    let k = kak_decompose(&s).unwrap().coords;
    assert!(k.max_abs_diff(&WeylCoords::new(FRAC_PI_4, 0., 0.)) < 1e-9);
    assert!(phase_distance(&s, &cnot_unitary(Wire::Oam)) > 0.5);
}

#[test]
fn transmission_is_a_power_of_the_surface_transmittance() {
    for r in [0.0, 0.001, 0.005, 0.01, 0.05] {
        for n in [0u32, 1, 7, 20, 64] {
            let mut t = 1.0;
            for _ in 0..n {
                t *= 1.0 - r;
            }
            assert!((transmission_for(r, n) - t).abs() < 1e-14);
        }
    }
}
