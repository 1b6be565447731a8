//! SWAP on polarization and OAM, compiled with each interferometer choice,
//! before and after surface reduction.

use photonic_u4::gates::swap;
use photonic_u4::{compile, compile_optimized, surface_count, synth_u4, transmission, verify, CnotImpl, ComponentCatalog};

fn main() {
    let circuit = synth_u4(&swap()).unwrap();
    let catalog = ComponentCatalog::default();
    for how in [CnotImpl::Sagnac, CnotImpl::Mz, CnotImpl::Auto] {
        let plain = compile(&circuit, how, &catalog).unwrap();
        let best = compile_optimized(&circuit, how, &catalog).unwrap();
        let report = verify(&best, &swap());
        println!(
            "{how:?}: {} -> {} surfaces, T = {:.4}, fidelity {:.12}",
            surface_count(&plain),
            surface_count(&best),
            transmission(&best),
            report.fidelity
        );
        let names: Vec<String> = best
            .elements
            .iter()
            .map(|e| match e.parameter() {
                Some(a) => format!("{}({:.3})", e.kind(), a),
                None => e.kind().to_string(),
            })
            .collect();
        println!("    {}", names.join(" "));
    }
}
