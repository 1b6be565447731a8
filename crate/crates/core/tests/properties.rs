//! Property tests over seeded random unitaries.

use std::f64::consts::PI;

use photonic_u4::cartan::{interaction_unitary, kak_decompose, local_invariants, reassemble, WeylCoords};
use photonic_u4::matrix::{random_su2, su4_normalize, StateVec4};
use photonic_u4::photonic::{decompose_local, element_unitary, sagnac_model_unitary, mz_cnot_unitary, ElementKind};
use photonic_u4::synth::CnotClass;
use photonic_u4::{
    apply_state, circuit_unitary, cnot_class, compile, phase_distance, process_fidelity, random_su4, random_u4,
    simplify, simulate_unitary, surface_count, synth_u4, tensor, transmission, verify, CnotImpl, ComponentCatalog,
    Element, Recipe, Unitary2, Unitary4, Wire,
};
use proptest::prelude::*;

fn dressed(u: &Unitary4, seed: u64) -> Unitary4 {
    let a = tensor(&random_su2(seed), &random_su2(seed ^ 0xa5a5));
    let b = tensor(&random_su2(seed ^ 0x5a5a), &random_su2(seed.wrapping_add(77)));
    a * *u * b
}

fn class_of(u: &Unitary4) -> CnotClass {
    cnot_class(&kak_decompose(u).unwrap().coords).unwrap()
}

fn single_qubit_kind() -> impl Strategy<Value = ElementKind> {
    prop::sample::select(vec![
        ElementKind::Hwp,
        ElementKind::Qwp,
        ElementKind::PiConverter,
        ElementKind::HalfPiConverter,
        ElementKind::DovePrism,
    ])
}

fn any_element() -> impl Strategy<Value = Element> {
    (prop::sample::select(ElementKind::ALL.to_vec()), -10.0..10.0f64).prop_map(|(k, a)| k.with_angle(a))
}

fn recipe_of(elements: Vec<Element>, reflectance: f64) -> Recipe {
    Recipe::new(elements, ComponentCatalog::with_reflectance(reflectance).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_mixed_product(s in any::<u64>()) {
        let (a, b, c, d) = (random_su2(s), random_su2(s ^ 1), random_su2(s ^ 2), random_su2(s ^ 3));
        let lhs = tensor(&a, &b) * tensor(&c, &d);
        let rhs = tensor(&(a * c), &(b * d));
        prop_assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-12);
    }

    #[test]
    fn phase_distance_is_a_metric(s in any::<u64>()) {
        let (u, v, w) = (random_u4(s), random_u4(s ^ 1), random_u4(s ^ 2));
        prop_assert!((phase_distance(&u, &v) - phase_distance(&v, &u)).abs() < 1e-12);
        prop_assert!(phase_distance(&u, &w) <= phase_distance(&u, &v) + phase_distance(&v, &w) + 1e-12);
        prop_assert!(phase_distance(&u, &u.with_phase(1.234)) < 1e-12);
    }

    // Fidelity reads exactly 1 in double precision while the distance is
    // below 1e-9, and drops measurably once the distance is past 1e-6.
    #[test]
    fn fidelity_one_iff_distance_small(s in any::<u64>(), log_eps in -13.0..-1.0f64, phase in -PI..PI) {
        let u = random_u4(s);
        let k = kak_decompose(&random_su4(s ^ 9)).unwrap().coords;
        let eps = 10f64.powf(log_eps);
        let v = (u * interaction_unitary(&WeylCoords::new(eps * k.kx, eps * k.ky, eps * k.kz))).with_phase(phase);
        let d = phase_distance(&u, &v);
        let f = process_fidelity(&u, &v);
        if d < 1e-9 {
            prop_assert!((1.0 - f).abs() < 1e-12, "d {d:e} f {f}");
        }
        if d > 1e-6 {
            prop_assert!(1.0 - f > 1e-14, "d {d:e} f {f}");
        }
        prop_assert!(process_fidelity(&u, &u.with_phase(phase)) > 1.0 - 1e-12);
        prop_assert!(process_fidelity(&u, &random_u4(s ^ 4)) < 1.0 - 1e-6);
    }

    #[test]
    fn su4_normalize_splits_phase(s in any::<u64>()) {
        let u = random_u4(s);
        let (theta, su) = su4_normalize(&u);
        prop_assert!((su.det() - 1.0).norm() < 1e-10);
        prop_assert!((su.with_phase(theta.radians()).matrix() - u.matrix()).norm() < 1e-12);
    }

    #[test]
    fn kak_round_trip_and_chamber(s in any::<u64>()) {
        let u = random_u4(s);
        let kak = kak_decompose(&u).unwrap();
        prop_assert!(kak.coords.is_canonical(1e-12), "{:?}", kak.coords);
        prop_assert!(phase_distance(&reassemble(&kak), &u) < 1e-9);
    }

    #[test]
    fn invariants_are_local(s in any::<u64>()) {
        let u = random_su4(s);
        prop_assert!(local_invariants(&u).max_abs_diff(&local_invariants(&dressed(&u, s))) < 1e-9);
        prop_assert!(local_invariants(&u).max_abs_diff(&local_invariants(&u.with_phase(0.7))) < 1e-9);
    }

    #[test]
    fn equal_coords_give_equal_invariants(s in any::<u64>()) {
        let k = kak_decompose(&random_su4(s)).unwrap().coords;
        let core = interaction_unitary(&k);
        let (a, b) = (dressed(&core, s), dressed(&core, s ^ 0xffff));
        prop_assert!(kak_decompose(&a).unwrap().coords.max_abs_diff(&kak_decompose(&b).unwrap().coords) < 1e-9);
        prop_assert!(local_invariants(&a).max_abs_diff(&local_invariants(&b)) < 1e-9);
    }

    #[test]
    fn equal_invariants_give_equal_class(s in any::<u64>(), which in 0usize..5) {
        let cores = [
            Unitary4::identity(),
            interaction_unitary(&WeylCoords::new(PI / 4.0, 0.0, 0.0)),
            interaction_unitary(&WeylCoords::new(0.5, 0.3, 0.0)),
            interaction_unitary(&WeylCoords::new(PI / 4.0, PI / 4.0, PI / 4.0)),
            random_su4(s),
        ];
        let u = cores[which];
        let v = dressed(&u, s);
        prop_assert!(local_invariants(&u).max_abs_diff(&local_invariants(&v)) < 1e-9);
        prop_assert_eq!(class_of(&u), class_of(&v));
    }

    #[test]
    fn synthesis_round_trip(s in any::<u64>()) {
        let u = random_u4(s);
        let c = synth_u4(&u).unwrap();
        prop_assert!(phase_distance(&circuit_unitary(&c), &u) < 1e-9);
        prop_assert!(c.cnot_count() <= 3);
        prop_assert!(c.local_count() <= 8);
    }

    #[test]
    fn simplify_preserves_and_is_idempotent(s in any::<u64>(), dup in 0usize..6) {
        let mut c = synth_u4(&random_u4(s)).unwrap();
        // Pad with extra layers so there is something to merge.
        let extra = photonic_u4::AbstractGate::Local { wire: Wire::Oam, u: random_su2(s ^ 3) };
        let back = photonic_u4::AbstractGate::Local { wire: Wire::Oam, u: random_su2(s ^ 3).adjoint() };
        let at = dup.min(c.gates.len());
        c.gates.insert(at, back);
        c.gates.insert(at, extra);
        let once = simplify(&c);
        prop_assert!(phase_distance(&circuit_unitary(&once), &circuit_unitary(&c)) < 1e-10);
        let twice = simplify(&once);
        prop_assert_eq!(twice.gates.len(), once.gates.len());
        prop_assert!(phase_distance(&circuit_unitary(&twice), &circuit_unitary(&once)) < 1e-10);
        let fixed = synth_u4(&random_u4(s)).unwrap();
        prop_assert_eq!(simplify(&fixed).gates.len(), fixed.gates.len());
    }

    #[test]
    fn elements_are_unitary(e in any_element()) {
        prop_assert!(element_unitary(&e).deviation() < 1e-12);
    }

    #[test]
    fn dove_and_half_wave_square_to_identity(a in -10.0..10.0f64) {
        for kind in [ElementKind::DovePrism, ElementKind::Hwp, ElementKind::PiConverter] {
            let m = element_unitary(&kind.with_angle(a));
            prop_assert!(phase_distance(&(m * m), &Unitary4::identity()) < 1e-12);
        }
    }

    #[test]
    fn local_decomposition_round_trip(s in any::<u64>(), oam in any::<bool>()) {
        let wire = if oam { Wire::Oam } else { Wire::Pol };
        let u = random_su2(s);
        let (elements, _) = decompose_local(wire, &u, &ComponentCatalog::default()).unwrap();
        prop_assert!(elements.len() <= 3);
        let r = recipe_of(elements, 0.01);
        let embedded = if oam { tensor(&Unitary2::identity(), &u) } else { tensor(&u, &Unitary2::identity()) };
        prop_assert!(phase_distance(&simulate_unitary(&r), &embedded) < 1e-10);
    }

    #[test]
    fn transmission_multiplies_and_decreases(
        a in prop::collection::vec(any_element(), 0..20),
        b in prop::collection::vec(any_element(), 0..20),
        r in 0.0..0.2f64,
    ) {
        let (ra, rb) = (recipe_of(a.clone(), r), recipe_of(b.clone(), r));
        let joined = recipe_of([a, b].concat(), r);
        prop_assert!((transmission(&joined) - transmission(&ra) * transmission(&rb)).abs() < 1e-12);
        prop_assert_eq!(surface_count(&joined), surface_count(&ra) + surface_count(&rb));
        if surface_count(&ra) <= surface_count(&joined) {
            prop_assert!(transmission(&joined) <= transmission(&ra) + 1e-15);
        }
    }

    #[test]
    fn simulation_is_unitary_and_norm_preserving(
        elements in prop::collection::vec(any_element(), 0..=100),
        s in any::<u64>(),
    ) {
        let r = recipe_of(elements, 0.01);
        let u = simulate_unitary(&r);
        prop_assert!(u.deviation() < 1e-10);
        let psi = random_u4(s).apply(&StateVec4::basis(photonic_u4::matrix::BasisState::HPlus));
        prop_assert!((apply_state(&r, &psi).norm_squared() - 1.0).abs() < 1e-10);
        prop_assert!((verify(&r, &u).fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_kinds_act_on_their_wire(kind in single_qubit_kind(), a in -3.0..3.0f64) {
        let m = element_unitary(&kind.with_angle(a));
        let k = kak_decompose(&m).unwrap().coords;
        prop_assert!(k.max_abs_diff(&WeylCoords::new(0.0, 0.0, 0.0)) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn compile_preserves_semantics(s in any::<u64>()) {
        let u = random_u4(s);
        let c = synth_u4(&u).unwrap();
        for how in [CnotImpl::Sagnac, CnotImpl::Mz, CnotImpl::Auto] {
            let r = compile(&c, how, &ComponentCatalog::default()).unwrap();
            prop_assert!(phase_distance(&simulate_unitary(&r), &circuit_unitary(&c)) < 1e-9);
            prop_assert_eq!(r.cnot_count(), c.cnot_count());
        }
    }
}

#[test]
fn sagnac_is_locally_a_cnot() {
    let a = local_invariants(&sagnac_model_unitary());
    let b = local_invariants(&mz_cnot_unitary());
    assert!(a.max_abs_diff(&b) < 1e-9);
}
