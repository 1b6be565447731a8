//! Transmission of a compiled gate as a function of per-surface reflectance,
//! plus a custom catalog with extra surfaces on the Sagnac.

use photonic_u4::photonic::{transmission_for, ElementKind};
use photonic_u4::{compile_optimized, random_u4, surface_count, synth_u4, transmission, CnotImpl, ComponentCatalog};

fn main() {
    let circuit = synth_u4(&random_u4(3)).unwrap();
    let recipe = compile_optimized(&circuit, CnotImpl::Auto, &ComponentCatalog::default()).unwrap();
    let n = surface_count(&recipe);
    println!("random gate: {} CNOTs, {n} surfaces", recipe.cnot_count());
    for r in [0.0, 0.002, 0.005, 0.01, 0.02, 0.04] {
        println!("  reflectance {r:<6} T = {:.4}", transmission_for(r, n));
    }

    let mut lossy = ComponentCatalog::with_reflectance(0.01).unwrap();
    lossy.set_surfaces(ElementKind::SagnacCnot, 8);
    let sagnac_heavy = compile_optimized(&circuit, CnotImpl::Auto, &lossy).unwrap();
    println!(
        "with 8-surface Sagnacs: {} surfaces, T = {:.4}, {} Sagnac(s)",
        surface_count(&sagnac_heavy),
        transmission(&sagnac_heavy),
        sagnac_heavy.elements.iter().filter(|e| e.kind() == ElementKind::SagnacCnot).count()
    );
}
