//! Lowering of Cartan decompositions to two-wire circuits of single-qubit
//! gates and CNOTs.
//!
//! At this level every CNOT has polarization as control. Interaction
//! templates (gates listed first-applied first, `Sx = Rx(π/2)`):
//!
//! ```text
//! class 1  (π/4,0,0):   POL H · CX · POL H·Rz(π/2), OAM H·Rz(π/2)·H
//! class 2  (kx,ky,0):   Sx⊗Sx · CX · Rx(2kx)⊗Rz(2ky) · CX · Sx†⊗Sx†
//! class 3  (kx,ky,kz):  OAM Rz(π/2) · CX' · Rz(π/2+2kz)⊗Ry(π/2+2kx) · CX
//!                       · OAM Ry(−π/2−2ky) · CX' · POL Rz(−π/2)
//! ```
//!
//! where `CX' = (H⊗H)·CX·(H⊗H)` is the CNOT with the roles reversed.
//! Each template is checked against `interaction_unitary` on every call.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cartan::{interaction_unitary, kak_decompose, WeylCoords};
use crate::error::{Error, Result};
use crate::fit::fit_template;
use crate::matrix::{
    c, kron, phase_distance, phase_distance2, GlobalPhase, Mat2, Mat4, Unitary2, Unitary4,
    ROUND_TRIP_TOL,
};

/// Tolerance for coordinate comparisons in [`cnot_class`].
pub const CLASS_TOL: f64 = 1e-9;

/// Locals closer than this to the identity (up to phase) are dropped by
/// [`simplify`].
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wire {
    Pol,
    Oam,
}

impl Wire {
    pub fn other(self) -> Wire {
        match self {
            Wire::Pol => Wire::Oam,
            Wire::Oam => Wire::Pol,
        }
    }
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wire::Pol => "POL",
            Wire::Oam => "OAM",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AbstractGate {
    Local {
        wire: Wire,
        #[serde(with = "matrix2")]
        u: Unitary2,
    },
    Cnot { control: Wire, target: Wire },
}

impl AbstractGate {
    pub fn local(wire: Wire, u: Unitary2) -> Self {
        AbstractGate::Local { wire, u }
    }

    pub fn cnot(control: Wire) -> Self {
        AbstractGate::Cnot { control, target: control.other() }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, AbstractGate::Cnot { .. })
    }

    pub fn unitary(&self) -> Result<Unitary4> {
        match *self {
            AbstractGate::Local { wire, u } => Ok(lift(wire, &u)),
            AbstractGate::Cnot { control, target } if control == target => {
                Err(Error::InvalidCircuit(format!("CNOT with control and target both {control}")))
            }
            AbstractGate::Cnot { control, .. } => Ok(cnot_unitary(control)),
        }
    }
}

/// Gates in application order plus a global phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbstractCircuit {
    pub phase: GlobalPhase,
    pub gates: Vec<AbstractGate>,
    /// Set when some part of the circuit came from the numeric fallback fit.
    #[serde(default)]
    pub numerically_synthesized: bool,
}

impl AbstractCircuit {
    pub fn empty() -> Self {
        Self { phase: GlobalPhase::zero(), gates: Vec::new(), numerically_synthesized: false }
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_cnot()).count()
    }

    pub fn local_count(&self) -> usize {
        self.gates.len() - self.cnot_count()
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            g.unitary()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: AbstractCircuit = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Minimal number of CNOTs needed for an interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct CnotClass(u8);

impl CnotClass {
    pub fn count(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CnotClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn cnot_class(k: &WeylCoords) -> Result<CnotClass> {
    if !k.is_canonical(CLASS_TOL) {
        return Err(Error::NonCanonicalCoords { kx: k.kx, ky: k.ky, kz: k.kz });
    }
    let near = |a: f64, b: f64| (a - b).abs() < CLASS_TOL;
    let n = if k.kz.abs() >= CLASS_TOL {
        3
    } else if near(k.kx, 0.0) && near(k.ky, 0.0) {
        0
    } else if near(k.kx, FRAC_PI_4) && near(k.ky, 0.0) {
        1
    } else {
        2
    };
    Ok(CnotClass(n))
}

/// CNOT with the given control; the other wire is the target.
pub fn cnot_unitary(control: Wire) -> Unitary4 {
    let pairs = match control {
        Wire::Pol => [(0, 0), (1, 1), (2, 3), (3, 2)],
        Wire::Oam => [(0, 0), (1, 3), (2, 2), (3, 1)],
    };
    let mut m = Mat4::zeros();
    for (r, k) in pairs {
        m[(r, k)] = c(1., 0.);
    }
    Unitary4::from_matrix_unchecked(m)
}

/// `u ⊗ I` on polarization, `I ⊗ u` on OAM.
pub fn lift(wire: Wire, u: &Unitary2) -> Unitary4 {
    let i = Mat2::identity();
    Unitary4::from_matrix_unchecked(match wire {
        Wire::Pol => kron(u.matrix(), &i),
        Wire::Oam => kron(&i, u.matrix()),
    })
}

/// `e^{iθ}·g_n·…·g_1`. Ill-formed CNOTs are skipped; see
/// [`AbstractCircuit::validate`].
pub fn circuit_unitary(c: &AbstractCircuit) -> Unitary4 {
    let mut acc = *Unitary4::identity().matrix();
    for g in &c.gates {
        if let Ok(u) = g.unitary() {
            acc = u.matrix() * acc;
        }
    }
    Unitary4::from_matrix_unchecked(acc * c.phase.factor())
}

/// Merges all locals on a wire between consecutive CNOTs and drops the
/// ones that are a pure phase, folding that phase into the circuit phase.
pub fn simplify(c: &AbstractCircuit) -> AbstractCircuit {
    let mut out = Vec::with_capacity(c.gates.len());
    let mut phase = c.phase.radians();
    let mut layer: Vec<(Wire, Mat2)> = Vec::new();

    let flush = |layer: &mut Vec<(Wire, Mat2)>, out: &mut Vec<AbstractGate>, phase: &mut f64| {
        for (wire, m) in layer.drain(..) {
            let u = Unitary2::from_matrix_unchecked(m);
            if phase_distance2(&u, &Unitary2::identity()) < IDENTITY_TOL {
                *phase += u.trace().arg();
            } else {
                out.push(AbstractGate::local(wire, u));
            }
        }
    };

    for g in &c.gates {
        match *g {
            AbstractGate::Local { wire, u } => match layer.iter_mut().find(|(w, _)| *w == wire) {
                Some((_, m)) => *m = u.matrix() * *m,
                None => layer.push((wire, *u.matrix())),
            },
            AbstractGate::Cnot { .. } => {
                flush(&mut layer, &mut out, &mut phase);
                out.push(*g);
            }
        }
    }
    flush(&mut layer, &mut out, &mut phase);
    AbstractCircuit { phase: GlobalPhase::new(phase), gates: out, numerically_synthesized: c.numerically_synthesized }
}

fn template(k: &WeylCoords, class: CnotClass) -> Vec<AbstractGate> {
    use AbstractGate as G;
    use Wire::{Oam, Pol};
    let h = Unitary2::hadamard();
    let (rx, ry, rz) = (Unitary2::rx, Unitary2::ry, Unitary2::rz);
    let cx = G::cnot(Pol);
    match class.count() {
        0 => Vec::new(),
        1 => vec![
            G::local(Pol, h),
            cx,
            G::local(Pol, h * rz(FRAC_PI_2)),
            G::local(Oam, h * rz(FRAC_PI_2) * h),
        ],
        2 => {
            let sx = rx(FRAC_PI_2);
            vec![
                G::local(Pol, sx),
                G::local(Oam, sx),
                cx,
                G::local(Pol, rx(2.0 * k.kx)),
                G::local(Oam, rz(2.0 * k.ky)),
                cx,
                G::local(Pol, sx.adjoint()),
                G::local(Oam, sx.adjoint()),
            ]
        }
        _ => {
            let reversed = [G::local(Pol, h), G::local(Oam, h), cx, G::local(Pol, h), G::local(Oam, h)];
            let mut g = vec![G::local(Oam, rz(FRAC_PI_2))];
            g.extend(reversed);
            g.push(G::local(Pol, rz(FRAC_PI_2 + 2.0 * k.kz)));
            g.push(G::local(Oam, ry(FRAC_PI_2 + 2.0 * k.kx)));
            g.push(cx);
            g.push(G::local(Oam, ry(-FRAC_PI_2 - 2.0 * k.ky)));
            g.extend(reversed);
            g.push(G::local(Pol, rz(-FRAC_PI_2)));
            g
        }
    }
}

/// Sets the phase of `c` so that `circuit_unitary(c)` matches `target`
/// exactly rather than only projectively.
fn align_phase(c: &mut AbstractCircuit, target: &Unitary4) {
    let t = (circuit_unitary(c).adjoint().matrix() * target.matrix()).trace();
    if t.norm() > 0.0 {
        c.phase = c.phase.shifted(t.arg());
    }
}

/// Seed for the numeric fallback, fixed so results are reproducible.
const FALLBACK_SEED: u64 = 0x0c0f_fee0_8000;
const FALLBACK_RESTARTS: usize = 32;

/// A circuit with exactly `cnot_class(k)` CNOTs reproducing
/// `interaction_unitary(k)`, phase included.
pub fn synth_interaction(k: &WeylCoords) -> Result<AbstractCircuit> {
    let class = cnot_class(k)?;
    let target = interaction_unitary(k);
    let mut circuit = AbstractCircuit { phase: GlobalPhase::zero(), gates: template(k, class), numerically_synthesized: false };
    align_phase(&mut circuit, &target);
    if phase_distance(&circuit_unitary(&circuit), &target) < ROUND_TRIP_TOL {
        return Ok(circuit);
    }

    let fit = fit_template(&target, class.count(), FALLBACK_SEED, FALLBACK_RESTARTS);
    if fit.distance < ROUND_TRIP_TOL {
        return Ok(fit.circuit);
    }
    Err(Error::DecompositionFailure {
        residual: fit.distance,
        input: format!("interaction ({}, {}, {}), fallback seed {FALLBACK_SEED:#x}", k.kx, k.ky, k.kz),
    })
}

/// Full synthesis: Cartan decomposition, interaction template, outer locals,
/// then [`simplify`].
pub fn synth_u4(u: &Unitary4) -> Result<AbstractCircuit> {
    let kak = kak_decompose(u)?;
    let core = synth_interaction(&kak.coords)?;
    let mut gates = vec![AbstractGate::local(Wire::Pol, kak.left_pol), AbstractGate::local(Wire::Oam, kak.left_oam)];
    gates.extend(core.gates);
    gates.push(AbstractGate::local(Wire::Pol, kak.right_pol));
    gates.push(AbstractGate::local(Wire::Oam, kak.right_oam));
    let raw = AbstractCircuit {
        phase: GlobalPhase::new(kak.phase.radians() + core.phase.radians()),
        gates,
        numerically_synthesized: core.numerically_synthesized,
    };
    let mut out = simplify(&raw);
    align_phase(&mut out, u);
    let residual = phase_distance(&circuit_unitary(&out), u);
    if residual.is_nan() || residual >= ROUND_TRIP_TOL {
        return Err(Error::DecompositionFailure { residual, input: format!("{:?}", u.matrix()) });
    }
    Ok(out)
}

/// Serde form of a 2×2 unitary: `[[[re, im] × 2] × 2]`.
mod matrix2 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::json::sig12;
    use crate::matrix::{c, unitarity_deviation2, Mat2, Unitary2, CONSTRUCTION_TOL, INGEST_TOL};

    pub fn serialize<S: Serializer>(u: &Unitary2, s: S) -> Result<S::Ok, S::Error> {
        let m = u.matrix();
        let rows: [[[f64; 2]; 2]; 2] =
            std::array::from_fn(|r| std::array::from_fn(|k| [sig12(m[(r, k)].re), sig12(m[(r, k)].im)]));
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Unitary2, D::Error> {
        let rows = <[[[f64; 2]; 2]; 2]>::deserialize(d)?;
        let m = Mat2::from_fn(|r, k| c(rows[r][k][0], rows[r][k][1]));
        let deviation = unitarity_deviation2(&m);
        if deviation <= CONSTRUCTION_TOL {
            Ok(Unitary2::from_matrix_unchecked(m))
        } else if deviation <= INGEST_TOL {
            // 12-digit files are a few ulps off; snap back.
            Ok(Unitary2::nearest_unitary(&m))
        } else {
            Err(serde::de::Error::custom(format!(
                "2x2 local is not unitary: deviation {deviation:.3e} exceeds {INGEST_TOL:.0e}"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_su4, tensor};
    use std::f64::consts::PI;

    fn swap_gate() -> Unitary4 {
        let mut m = Mat4::zeros();
        for (r, k) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            m[(r, k)] = c(1., 0.);
        }
        Unitary4::new(m).unwrap()
    }

    #[test]
    fn cnot_permutations() {
        let cx = cnot_unitary(Wire::Pol);
        assert_eq!(cx.matrix()[(2, 3)], c(1., 0.));
        assert_eq!(cx.matrix()[(0, 0)], c(1., 0.));
        let h = Unitary2::hadamard();
        let hh = tensor(&h, &h);
        let flipped = hh * cx * hh;
        assert!(phase_distance(&flipped, &cnot_unitary(Wire::Oam)) < 1e-12);
    }

    #[test]
    fn classes() {
        let class = |a, b, z| cnot_class(&WeylCoords::new(a, b, z)).unwrap().count();
        assert_eq!(class(0., 0., 0.), 0);
        assert_eq!(class(FRAC_PI_4, 0., 0.), 1);
        assert_eq!(class(0.3, 0.1, 0.), 2);
        assert_eq!(class(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4), 3);
        assert!(matches!(cnot_class(&WeylCoords::new(0.1, 0.2, 0.0)), Err(Error::NonCanonicalCoords { .. })));
    }

    #[test]
    fn interaction_templates() {
        for k in [
            WeylCoords::ZERO,
            WeylCoords::new(FRAC_PI_4, 0., 0.),
            WeylCoords::new(0.3, 0.1, 0.),
            WeylCoords::new(0.2, 0.15, 0.05),
            WeylCoords::new(0.2, 0.15, -0.05),
            WeylCoords::new(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4),
        ] {
            let circuit = synth_interaction(&k).unwrap();
            assert!(!circuit.numerically_synthesized, "{k:?}");
            assert_eq!(circuit.cnot_count(), cnot_class(&k).unwrap().count());
            let u = circuit_unitary(&circuit);
            assert!((u.matrix() - interaction_unitary(&k).matrix()).norm() < 1e-12, "{k:?}");
        }
        assert!(synth_interaction(&WeylCoords::ZERO).unwrap().gates.is_empty());
    }

    #[test]
    fn simplify_examples() {
        let x = Unitary2::pauli_x();
        let c2 = AbstractCircuit {
            phase: GlobalPhase::zero(),
            gates: vec![AbstractGate::local(Wire::Pol, x), AbstractGate::local(Wire::Pol, x)],
            numerically_synthesized: false,
        };
        assert!(simplify(&c2).gates.is_empty());

        let a = Unitary2::ry(0.4);
        let b = Unitary2::rz(0.9);
        let c3 = AbstractCircuit {
            phase: GlobalPhase::zero(),
            gates: vec![AbstractGate::local(Wire::Pol, a), AbstractGate::local(Wire::Oam, b)],
            numerically_synthesized: false,
        };
        assert_eq!(simplify(&c3), c3);

        // -I is a phase of π
        let c4 = AbstractCircuit {
            phase: GlobalPhase::zero(),
            gates: vec![AbstractGate::local(Wire::Oam, Unitary2::identity().with_phase(PI))],
            numerically_synthesized: false,
        };
        let s = simplify(&c4);
        assert!(s.gates.is_empty());
        assert!((s.phase.radians() - PI).abs() < 1e-12);
    }

    #[test]
    fn identity_and_swap() {
        let id = synth_u4(&Unitary4::identity()).unwrap();
        assert!(id.gates.is_empty());
        assert!(id.phase.is_trivial(1e-12));

        let sw = synth_u4(&swap_gate()).unwrap();
        assert_eq!(sw.cnot_count(), 3);
        assert!(sw.local_count() <= 8);
        assert!(phase_distance(&circuit_unitary(&sw), &swap_gate()) < 1e-9);
    }

    #[test]
    fn random_round_trip_and_fixed_point() {
        for seed in 0..40 {
            let u = random_su4(seed);
            let circuit = synth_u4(&u).unwrap();
            assert!(circuit.cnot_count() <= 3);
            assert!(circuit.local_count() <= 8, "seed {seed}: {} locals", circuit.local_count());
            assert!((circuit_unitary(&circuit).matrix() - u.matrix()).norm() < 1e-9);
            assert_eq!(simplify(&circuit), circuit);
        }
    }

    #[test]
    fn json_round_trip() {
        let circuit = synth_u4(&random_su4(3)).unwrap();
        let text = circuit.to_json();
        assert!(text.contains("\"kind\": \"cnot\""));
        assert!(text.contains("\"control\": \"pol\""));
        let back = AbstractCircuit::from_json(&text).unwrap();
        assert!(phase_distance(&circuit_unitary(&back), &circuit_unitary(&circuit)) < 1e-9);
    }
}
