//! Fixed-seed sweeps at the sizes the invariants are stated for.

use photonic_u4::cartan::{interaction_unitary, kak_decompose, reassemble, WeylCoords};
use photonic_u4::fit::fit_template;
use photonic_u4::matrix::random_su2;
use photonic_u4::photonic::decompose_local;
use photonic_u4::{
    circuit_unitary, cnot_class, compile, phase_distance, random_su4, random_u4, simulate_unitary, synth_interaction,
    tensor, CnotImpl, ComponentCatalog, Recipe, Unitary2, Wire,
};

#[test]
fn kak_round_trip_1000() {
    for seed in 0..1000 {
        let u = random_su4(seed);
        let kak = kak_decompose(&u).unwrap();
        assert!(kak.coords.is_canonical(1e-12), "seed {seed}");
        assert!(phase_distance(&reassemble(&kak), &u) < 1e-9, "seed {seed}");
    }
}

#[test]
fn local_decompositions_1000_per_wire() {
    let catalog = ComponentCatalog::default();
    for wire in [Wire::Pol, Wire::Oam] {
        for seed in 0..1000 {
            let u = random_su2(seed);
            let (elements, _) = decompose_local(wire, &u, &catalog).unwrap();
            assert!(elements.len() <= 3, "{wire} seed {seed}: {elements:?}");
            let target = match wire {
                Wire::Pol => tensor(&u, &Unitary2::identity()),
                Wire::Oam => tensor(&Unitary2::identity(), &u),
            };
            let got = simulate_unitary(&Recipe::new(elements, catalog.clone()));
            assert!(phase_distance(&got, &target) < 1e-10, "{wire} seed {seed}");
        }
    }
}

#[test]
fn compile_semantics_100_seeds_each_mode() {
    let catalog = ComponentCatalog::default();
    for seed in 0..100 {
        let c = photonic_u4::synth_u4(&random_u4(seed)).unwrap();
        let want = circuit_unitary(&c);
        for how in [CnotImpl::Sagnac, CnotImpl::Mz, CnotImpl::Auto] {
            let r = compile(&c, how, &catalog).unwrap();
            assert!(phase_distance(&simulate_unitary(&r), &want) < 1e-9, "seed {seed} {how:?}");
        }
    }
}

#[test]
fn classes_below_three_are_constructive() {
    let coords = [
        (0, WeylCoords::new(0.0, 0.0, 0.0)),
        (1, WeylCoords::new(std::f64::consts::FRAC_PI_4, 0.0, 0.0)),
        (2, WeylCoords::new(0.6, 0.2, 0.0)),
        (2, WeylCoords::new(0.3, 0.3, 0.0)),
        (2, WeylCoords::new(0.1, 0.0, 0.0)),
    ];
    for (class, k) in coords {
        assert_eq!(cnot_class(&k).unwrap().count(), class, "{k:?}");
        let c = synth_interaction(&k).unwrap();
        assert_eq!(c.cnot_count(), class);
        assert!(phase_distance(&circuit_unitary(&c), &interaction_unitary(&k)) < 1e-9);
    }
}

#[test]
fn class_three_defeats_two_cnot_search() {
    let coords = [
        WeylCoords::new(0.7, 0.5, 0.3),
        WeylCoords::new(0.6, 0.4, -0.2),
        WeylCoords::new(0.785, 0.785, 0.785),
        WeylCoords::new(0.5, 0.3, 0.1),
        WeylCoords::new(0.4, 0.2, 0.05),
        WeylCoords::new(0.7, 0.1, -0.05),
    ];
    let mut failures = 0;
    for (i, k) in coords.iter().enumerate() {
        assert_eq!(cnot_class(k).unwrap().count(), 3);
        let fit = fit_template(&interaction_unitary(k), 2, 1000 + i as u64, 24);
        let d = phase_distance(&circuit_unitary(&fit.circuit), &interaction_unitary(k));
        if d > 1e-6 {
            failures += 1;
        }
        let three = fit_template(&interaction_unitary(k), 3, 2000 + i as u64, 24);
        assert!(phase_distance(&circuit_unitary(&three.circuit), &interaction_unitary(k)) < 1e-9, "{k:?}");
    }
    assert!(failures >= 5, "{failures} of {} class-3 targets resisted two CNOTs", coords.len());
}
