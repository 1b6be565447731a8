//! Optical elements, single-qubit element synthesis and circuit lowering.
//!
//! Jones conventions, all in the basis `[H+, H−, V+, V−]`:
//!
//! * `Hwp(θ)` reflects polarization about the axis at `θ`:
//!   `[[cos2θ, sin2θ], [sin2θ, −cos2θ]] ⊗ I`.
//! * `Qwp(θ) = R(θ)·diag(1, i)·R(−θ) ⊗ I`.
//! * Mode converters are the same two forms acting on OAM after the change of
//!   basis `C = [[1, 1], [i, −i]]/√2` (the `±1` modes sit at the poles):
//!   `I ⊗ C†·J·C`. This makes `PiConverter(θ)` equal to `DovePrism(−θ)`.
//! * `DovePrism(α)`: `|l⟩ → e^{−2ilα}|−l⟩`, i.e. `[[0, e^{2iα}], [e^{−2iα}, 0]]`.
//! * `SagnacCnot`: `|H⟩⟨H| ⊗ D(π/8) + |V⟩⟨V| ⊗ D(−π/8)`, the two
//!   polarizations crossing the `π/8` prism in opposite directions.
//! * `MzCnot`: CNOT with polarization control.
//! * `PolPhase(φ)`: the common phase `e^{iφ}` (a delay seen by both
//!   polarizations).

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_8, PI, TAU};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::ser_sig12;
use crate::matrix::{c, cis, kron, reduce_mod, GlobalPhase, Mat2, Mat4, Unitary2, Unitary4};
use crate::synth::{cnot_unitary, AbstractCircuit, AbstractGate, Wire};

/// Single-qubit element sequences must match their target to this
/// (phase-invariant Frobenius distance).
pub const ELEMENT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Element {
    Hwp {
        #[serde(serialize_with = "ser_sig12")]
        angle_rad: f64,
    },
    Qwp {
        #[serde(serialize_with = "ser_sig12")]
        angle_rad: f64,
    },
    PiConverter {
        #[serde(serialize_with = "ser_sig12")]
        angle_rad: f64,
    },
    HalfPiConverter {
        #[serde(serialize_with = "ser_sig12")]
        angle_rad: f64,
    },
    #[serde(rename = "dove")]
    DovePrism {
        #[serde(serialize_with = "ser_sig12")]
        angle_rad: f64,
    },
    SagnacCnot,
    MzCnot,
    PolPhase {
        #[serde(serialize_with = "ser_sig12")]
        phi_rad: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Hwp,
    Qwp,
    PiConverter,
    HalfPiConverter,
    #[serde(rename = "dove")]
    DovePrism,
    SagnacCnot,
    MzCnot,
    PolPhase,
}

impl ElementKind {
    pub const ALL: [ElementKind; 8] = [
        ElementKind::Hwp,
        ElementKind::Qwp,
        ElementKind::PiConverter,
        ElementKind::HalfPiConverter,
        ElementKind::DovePrism,
        ElementKind::SagnacCnot,
        ElementKind::MzCnot,
        ElementKind::PolPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Hwp => "hwp",
            ElementKind::Qwp => "qwp",
            ElementKind::PiConverter => "pi_converter",
            ElementKind::HalfPiConverter => "half_pi_converter",
            ElementKind::DovePrism => "dove",
            ElementKind::SagnacCnot => "sagnac_cnot",
            ElementKind::MzCnot => "mz_cnot",
            ElementKind::PolPhase => "pol_phase",
        }
    }

    fn default_surfaces(self) -> u32 {
        match self {
            ElementKind::Hwp | ElementKind::Qwp | ElementKind::DovePrism => 2,
            ElementKind::PiConverter | ElementKind::HalfPiConverter => 4,
            ElementKind::SagnacCnot | ElementKind::MzCnot => 4,
            ElementKind::PolPhase => 1,
        }
    }

    /// Builds the element of this kind with parameter `angle` (ignored by
    /// the interferometers).
    pub fn with_angle(self, angle: f64) -> Element {
        let a = reduce_mod(angle, PI);
        match self {
            ElementKind::Hwp => Element::Hwp { angle_rad: a },
            ElementKind::Qwp => Element::Qwp { angle_rad: a },
            ElementKind::PiConverter => Element::PiConverter { angle_rad: a },
            ElementKind::HalfPiConverter => Element::HalfPiConverter { angle_rad: a },
            ElementKind::DovePrism => Element::DovePrism { angle_rad: a },
            ElementKind::SagnacCnot => Element::SagnacCnot,
            ElementKind::MzCnot => Element::MzCnot,
            ElementKind::PolPhase => Element::PolPhase { phi_rad: reduce_mod(angle, TAU) },
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Element {
    pub fn kind(&self) -> ElementKind {
        match self {
            Element::Hwp { .. } => ElementKind::Hwp,
            Element::Qwp { .. } => ElementKind::Qwp,
            Element::PiConverter { .. } => ElementKind::PiConverter,
            Element::HalfPiConverter { .. } => ElementKind::HalfPiConverter,
            Element::DovePrism { .. } => ElementKind::DovePrism,
            Element::SagnacCnot => ElementKind::SagnacCnot,
            Element::MzCnot => ElementKind::MzCnot,
            Element::PolPhase { .. } => ElementKind::PolPhase,
        }
    }

    /// Rotation angle or phase, if the element has one.
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            Element::Hwp { angle_rad }
            | Element::Qwp { angle_rad }
            | Element::PiConverter { angle_rad }
            | Element::HalfPiConverter { angle_rad }
            | Element::DovePrism { angle_rad } => Some(angle_rad),
            Element::PolPhase { phi_rad } => Some(phi_rad),
            Element::SagnacCnot | Element::MzCnot => None,
        }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Element::SagnacCnot | Element::MzCnot)
    }

    /// Same element with its parameter reduced (`[0, π)` for angles,
    /// `[0, 2π)` for phases).
    pub fn normalized(&self) -> Element {
        self.kind().with_angle(self.parameter().unwrap_or(0.0))
    }
}

fn rotation(theta: f64) -> Mat2 {
    let (s, co) = theta.sin_cos();
    Mat2::new(c(co, 0.), c(-s, 0.), c(s, 0.), c(co, 0.))
}

/// `[[cos2θ, sin2θ], [sin2θ, −cos2θ]]`
pub fn hwp_jones(theta: f64) -> Mat2 {
    let (s, co) = (2.0 * theta).sin_cos();
    Mat2::new(c(co, 0.), c(s, 0.), c(s, 0.), c(-co, 0.))
}

/// `R(θ)·diag(1, i)·R(−θ)`
pub fn qwp_jones(theta: f64) -> Mat2 {
    rotation(theta) * Mat2::new(c(1., 0.), c(0., 0.), c(0., 0.), c(0., 1.)) * rotation(-theta)
}

/// Linear-to-circular change of basis used by the mode converters.
fn converter_frame() -> Mat2 {
    let h = FRAC_1_SQRT_2;
    Mat2::new(c(h, 0.), c(h, 0.), c(0., h), c(0., -h))
}

fn in_oam_frame(j: &Mat2) -> Mat2 {
    let cf = converter_frame();
    cf.adjoint() * j * cf
}

/// `[[0, e^{2iα}], [e^{−2iα}, 0]]`
pub fn dove_jones(alpha: f64) -> Mat2 {
    Mat2::new(c(0., 0.), cis(2.0 * alpha), cis(-2.0 * alpha), c(0., 0.))
}

/// The 2×2 action of a single-qubit element on its own qubit.
pub(crate) fn element_jones(kind: ElementKind, theta: f64) -> Mat2 {
    match kind {
        ElementKind::Hwp => hwp_jones(theta),
        ElementKind::Qwp => qwp_jones(theta),
        ElementKind::PiConverter => in_oam_frame(&hwp_jones(theta)),
        ElementKind::HalfPiConverter => in_oam_frame(&qwp_jones(theta)),
        ElementKind::DovePrism => dove_jones(theta),
        _ => unreachable!("not a single-qubit element"),
    }
}

pub(crate) fn element_jones_derivative(kind: ElementKind, theta: f64) -> Mat2 {
    // Plates and converters are W(θ)·J·W(−θ) with W = exp(θK).
    let k_pol = Mat2::new(c(0., 0.), c(-1., 0.), c(1., 0.), c(0., 0.));
    let commutator = |k: Mat2, m: Mat2| k * m - m * k;
    match kind {
        ElementKind::Hwp | ElementKind::Qwp => commutator(k_pol, element_jones(kind, theta)),
        ElementKind::PiConverter | ElementKind::HalfPiConverter => {
            commutator(in_oam_frame(&k_pol), element_jones(kind, theta))
        }
        ElementKind::DovePrism => {
            Mat2::new(c(0., 0.), cis(2.0 * theta) * c(0., 2.), cis(-2.0 * theta) * c(0., -2.), c(0., 0.))
        }
        _ => unreachable!("not a single-qubit element"),
    }
}

/// `|H⟩⟨H| ⊗ D(π/8) + |V⟩⟨V| ⊗ D(−π/8)`
pub fn sagnac_model_unitary() -> Unitary4 {
    let zero = Mat2::zeros();
    let (dp, dm) = (dove_jones(FRAC_PI_8), dove_jones(-FRAC_PI_8));
    let m = Mat4::from_fn(|r, k| match (r / 2, k / 2) {
        (0, 0) => dp[(r % 2, k % 2)],
        (1, 1) => dm[(r % 2, k % 2)],
        _ => zero[(0, 0)],
    });
    Unitary4::from_matrix_unchecked(m)
}

/// The Sagnac matrix exactly as printed for a given `l`: antidiagonal blocks
/// `e^{−ilπ/2}` (H) and `−e^{−ilπ/2}` (V).
pub fn sagnac_fixed_l_matrix(l: i64) -> Unitary4 {
    // e^{−ilπ/2} = (−i)^l, computed exactly.
    let p = match l.rem_euclid(4) {
        0 => c(1., 0.),
        1 => c(0., -1.),
        2 => c(-1., 0.),
        _ => c(0., 1.),
    };
    let mut m = Mat4::zeros();
    m[(0, 1)] = p;
    m[(1, 0)] = p;
    m[(2, 3)] = -p;
    m[(3, 2)] = -p;
    Unitary4::from_matrix_unchecked(m)
}

/// CNOT with polarization control, the ideal Mach–Zehnder.
pub fn mz_cnot_unitary() -> Unitary4 {
    cnot_unitary(Wire::Pol)
}

/// Which qubit a single-qubit element acts on.
pub fn element_wire(kind: ElementKind) -> Option<Wire> {
    match kind {
        ElementKind::Hwp | ElementKind::Qwp => Some(Wire::Pol),
        ElementKind::PiConverter | ElementKind::HalfPiConverter | ElementKind::DovePrism => Some(Wire::Oam),
        _ => None,
    }
}

pub fn element_unitary(e: &Element) -> Unitary4 {
    let i = Mat2::identity();
    let m = match *e {
        Element::SagnacCnot => return sagnac_model_unitary(),
        Element::MzCnot => return mz_cnot_unitary(),
        Element::PolPhase { phi_rad } => Mat4::identity() * cis(phi_rad),
        _ => {
            let kind = e.kind();
            let j = element_jones(kind, e.parameter().expect("single-qubit elements have an angle"));
            match element_wire(kind) {
                Some(Wire::Pol) => kron(&j, &i),
                _ => kron(&i, &j),
            }
        }
    };
    Unitary4::from_matrix_unchecked(m)
}

/// Reflectance and per-kind surface counts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentCatalog {
    #[serde(serialize_with = "ser_sig12")]
    pub reflectance: f64,
    pub surfaces: BTreeMap<ElementKind, u32>,
}

impl Default for ComponentCatalog {
    fn default() -> Self {
        Self::with_reflectance(0.01).expect("0.01 is a valid reflectance")
    }
}

impl ComponentCatalog {
    pub fn with_reflectance(r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Parse(format!("reflectance {r} is outside [0, 1)")));
        }
        let surfaces = ElementKind::ALL.iter().map(|k| (*k, k.default_surfaces())).collect();
        Ok(Self { reflectance: r, surfaces })
    }

    pub fn set_surfaces(&mut self, kind: ElementKind, n: u32) {
        self.surfaces.insert(kind, n);
    }

    pub fn surfaces_of(&self, kind: ElementKind) -> u32 {
        self.surfaces.get(&kind).copied().unwrap_or_else(|| kind.default_surfaces())
    }
}

impl<'de> Deserialize<'de> for ComponentCatalog {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            reflectance: f64,
            #[serde(default)]
            surfaces: BTreeMap<ElementKind, u32>,
        }
        let raw = Raw::deserialize(d)?;
        let mut cat = ComponentCatalog::with_reflectance(raw.reflectance).map_err(serde::de::Error::custom)?;
        cat.surfaces.extend(raw.surfaces);
        Ok(cat)
    }
}

/// An ordered list of elements, first-encountered first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    #[serde(default)]
    pub phase: GlobalPhase,
    #[serde(default)]
    pub catalog: ComponentCatalog,
    pub elements: Vec<Element>,
    /// Carried over from the abstract circuit.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub numerically_synthesized: bool,
}

impl Recipe {
    pub fn new(elements: Vec<Element>, catalog: ComponentCatalog) -> Self {
        Self { phase: GlobalPhase::zero(), catalog, elements, numerically_synthesized: false }
    }

    pub fn cnot_count(&self) -> usize {
        self.elements.iter().filter(|e| e.is_cnot()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut r: Recipe = serde_json::from_str(text)?;
        for e in r.elements.iter_mut() {
            let v = e.parameter().unwrap_or(0.0);
            if !v.is_finite() {
                return Err(Error::Parse(format!("{} has a non-finite parameter", e.kind())));
            }
            *e = e.normalized();
        }
        Ok(r)
    }
}

pub fn surface_count(r: &Recipe) -> u32 {
    r.elements.iter().map(|e| r.catalog.surfaces_of(e.kind())).sum()
}

/// `(1 − r)^N`.
pub fn transmission(r: &Recipe) -> f64 {
    transmission_for(r.catalog.reflectance, surface_count(r))
}

pub fn transmission_for(reflectance: f64, surfaces: u32) -> f64 {
    (1.0 - reflectance).powi(surfaces as i32)
}

// ---------------------------------------------------------------------------
// Single-qubit element synthesis
//
// OAM elements are plates seen through the converter frame (`Dove(α)` is the
// half-wave form at `−α`), so both wires reduce to sequences of two Jones
// forms: half-wave `Hwp` and quarter-wave `Qwp`. Rotating every plate by the
// same `φ` conjugates the product by `R(φ)`, which leaves its scalar part and
// its `σy` part alone. The first angle can therefore be pinned to zero while
// matching those two numbers, and `φ` recovered afterwards.

/// Quaternion `(w, a, b, c)` of `±m/√det m = w − i(aσx + bσy + cσz)`.
fn quaternion(m: &Mat2) -> [f64; 4] {
    let s = m / (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).sqrt();
    let x = Unitary2::pauli_x();
    let y = Unitary2::pauli_y();
    let z = Unitary2::pauli_z();
    [
        s.trace().re / 2.0,
        -(x.matrix() * s).trace().im / 2.0,
        -(y.matrix() * s).trace().im / 2.0,
        -(z.matrix() * s).trace().im / 2.0,
    ]
}

/// Mismatch of the rotation-invariant parts, minimized over the sign of `±m`.
fn invariant_gap(p: &[f64; 4], u: &[f64; 4]) -> f64 {
    let plus = (p[0] - u[0]).powi(2) + (p[2] - u[2]).powi(2);
    let minus = (p[0] + u[0]).powi(2) + (p[2] + u[2]).powi(2);
    plus.min(minus).sqrt()
}

/// Which physical element plays the half-wave role on OAM.
fn oam_half_wave(catalog: &ComponentCatalog) -> ElementKind {
    if catalog.surfaces_of(ElementKind::PiConverter) < catalog.surfaces_of(ElementKind::DovePrism) {
        ElementKind::PiConverter
    } else {
        ElementKind::DovePrism
    }
}

/// Reduces into `[0, period)`, snapping values within rounding of either end
/// to zero.
fn snap_mod(x: f64, period: f64) -> f64 {
    let r = reduce_mod(x, period);
    if r < 1e-13 || period - r < 1e-13 {
        0.0
    } else {
        r
    }
}

/// Physical element for a Jones-frame plate on `wire`. Half-wave forms repeat
/// up to sign every `π/2`, so their angle is taken in `[0, π/2)`.
fn physical(wire: Wire, jones: ElementKind, theta: f64, catalog: &ComponentCatalog) -> Element {
    let half = |a: f64| snap_mod(a, FRAC_PI_2);
    match (wire, jones) {
        (Wire::Pol, ElementKind::Hwp) => ElementKind::Hwp.with_angle(half(theta)),
        (Wire::Pol, k) => k.with_angle(snap_mod(theta, PI)),
        (Wire::Oam, ElementKind::Qwp) => ElementKind::HalfPiConverter.with_angle(snap_mod(theta, PI)),
        (Wire::Oam, _) => match oam_half_wave(catalog) {
            ElementKind::DovePrism => ElementKind::DovePrism.with_angle(half(-theta)),
            k => k.with_angle(half(theta)),
        },
    }
}

fn jones_cost(wire: Wire, jones: ElementKind, catalog: &ComponentCatalog) -> u32 {
    catalog.surfaces_of(physical(wire, jones, 0.0, catalog).kind())
}

/// Jones-frame plate sequences of length ≤ 3, cheapest first.
fn candidate_sequences(wire: Wire, catalog: &ComponentCatalog) -> Vec<Vec<ElementKind>> {
    const KINDS: [ElementKind; 2] = [ElementKind::Hwp, ElementKind::Qwp];
    let mut seqs: Vec<Vec<ElementKind>> = vec![Vec::new()];
    for len in 1..=3u32 {
        for bits in 0..1usize << len {
            seqs.push((0..len).map(|i| KINDS[bits >> i & 1]).collect());
        }
    }
    let cost = |s: &Vec<ElementKind>| s.iter().map(|k| jones_cost(wire, *k, catalog)).sum::<u32>();
    // Stable: equal cost keeps shorter sequences first.
    seqs.sort_by_key(|s| (cost(s), s.len()));
    seqs
}

fn sequence_matrix(kinds: &[ElementKind], angles: &[f64]) -> Mat2 {
    let mut acc = Mat2::identity();
    for (k, a) in kinds.iter().zip(angles) {
        acc = element_jones(*k, *a) * acc;
    }
    acc
}

/// Phase-invariant distance and the optimal phase `φ` with `e^{iφ}·m ≈ u`.
fn projective_fit(m: &Mat2, u: &Mat2) -> (f64, f64) {
    let t = (m.adjoint() * u).trace();
    let phi = if t.norm() > 0.0 { t.arg() } else { 0.0 };
    ((m * cis(phi) - u).norm(), phi)
}

/// Levenberg–Marquardt on `e^{iφ}·M(θ) − u` over the angles and `φ`.
fn solve_angles(kinds: &[ElementKind], u: &Mat2, start: &[f64]) -> (Vec<f64>, f64) {
    let n = kinds.len();
    let mut theta = start.to_vec();
    let residual = |theta: &[f64], phi: f64| -> DVector<f64> {
        let d = sequence_matrix(kinds, theta) * cis(phi) - u;
        DVector::from_iterator(8, d.iter().flat_map(|z| [z.re, z.im]))
    };
    let mut phi = projective_fit(&sequence_matrix(kinds, &theta), u).1;
    let mut r = residual(&theta, phi);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..100 {
        if cost < 1e-28 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(8, n + 1);
        let mats: Vec<Mat2> = kinds.iter().zip(&theta).map(|(k, a)| element_jones(*k, *a)).collect();
        for j in 0..n {
            let mut acc = Mat2::identity();
            for (i, m) in mats.iter().enumerate() {
                acc = if i == j { element_jones_derivative(kinds[i], theta[i]) * acc } else { m * acc };
            }
            for (row, z) in (acc * cis(phi)).iter().enumerate() {
                jac[(2 * row, j)] = z.re;
                jac[(2 * row + 1, j)] = z.im;
            }
        }
        for (row, z) in (sequence_matrix(kinds, &theta) * cis(phi) * c(0., 1.)).iter().enumerate() {
            jac[(2 * row, n)] = z.re;
            jac[(2 * row + 1, n)] = z.im;
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..10 {
            let mut a = jtj.clone();
            for k in 0..=n {
                a[(k, k)] += mu * (1.0 + jtj[(k, k)]);
            }
            let Some(step) = a.cholesky().map(|ch| ch.solve(&(-&g))) else {
                mu *= 4.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            let trial_phi = phi + step[n];
            let tr = residual(&trial, trial_phi);
            let tc = tr.norm_squared();
            if tc < cost {
                theta = trial;
                phi = trial_phi;
                r = tr;
                cost = tc;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let dist = projective_fit(&sequence_matrix(kinds, &theta), u).0;
    (theta, dist)
}

/// Grid resolution per free angle, and the invariant gap below which a grid
/// point is worth polishing.
fn scan_plan(free: usize) -> (usize, f64) {
    match free {
        0 => (1, 1e-6),
        1 => (720, 0.02),
        _ => (96, 0.15),
    }
}

/// `q1·q2` for quaternions in the `w − i(aσx + bσy + cσz)` form.
fn quat_mul(p: &[f64; 4], q: &[f64; 4]) -> [f64; 4] {
    let (w1, v1) = (p[0], [p[1], p[2], p[3]]);
    let (w2, v2) = (q[0], [q[1], q[2], q[3]]);
    let dot = v1[0] * v2[0] + v1[1] * v2[1] + v1[2] * v2[2];
    let cross = [v1[1] * v2[2] - v1[2] * v2[1], v1[2] * v2[0] - v1[0] * v2[2], v1[0] * v2[1] - v1[1] * v2[0]];
    [
        w1 * w2 - dot,
        w1 * v2[0] + w2 * v1[0] + cross[0],
        w1 * v2[1] + w2 * v1[1] + cross[1],
        w1 * v2[2] + w2 * v1[2] + cross[2],
    ]
}

/// Starting points for `kinds` (first angle pinned at 0) whose invariant gap
/// to `target` is small, best first, at most `limit`.
fn scan_candidates(kinds: &[ElementKind], target: &[f64; 4], limit: usize) -> Vec<Vec<f64>> {
    let free = kinds.len() - 1;
    let (n, threshold) = scan_plan(free);
    let h = PI / n as f64;
    // Quaternion of each kind at each grid angle; the first element sits at 0.
    let table: Vec<Vec<[f64; 4]>> =
        kinds.iter().map(|k| (0..n).map(|j| quaternion(&element_jones(*k, j as f64 * h))).collect()).collect();
    let mut hits: Vec<(f64, Vec<usize>)> = Vec::new();
    for idx in 0..n.pow(free as u32) {
        let cell: Vec<usize> = (0..free).map(|i| idx / n.pow(i as u32) % n).collect();
        let mut q = table[0][0];
        for (i, k) in cell.iter().enumerate() {
            q = quat_mul(&table[i + 1][*k], &q);
        }
        let gap = invariant_gap(&q, target);
        if gap < threshold {
            hits.push((gap, cell));
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut picked: Vec<Vec<usize>> = Vec::new();
    for (_, cell) in hits {
        let near = |p: &Vec<usize>| {
            p.iter().zip(&cell).all(|(a, b)| {
                let d = a.abs_diff(*b);
                d.min(n - d) <= 2
            })
        };
        if !picked.iter().any(near) {
            picked.push(cell);
            if picked.len() == limit {
                break;
            }
        }
    }
    picked
        .into_iter()
        .map(|cell| std::iter::once(0.0).chain(cell.iter().map(|k| *k as f64 * h)).collect())
        .collect()
}

/// Common rotation `φ` that carries the product at `angles` onto `target`.
fn alignment_candidates(kinds: &[ElementKind], angles: &[f64], target: &[f64; 4]) -> Vec<f64> {
    let p = quaternion(&sequence_matrix(kinds, angles));
    let from = p[3].atan2(p[1]);
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        let to = (sign * target[3]).atan2(sign * target[1]);
        out.push((to - from) / 2.0);
        out.push((from - to) / 2.0);
    }
    out
}

/// Solves `kinds` against the Jones-frame target `v`; angles on success.
fn solve_sequence(kinds: &[ElementKind], v: &Mat2) -> Option<Vec<f64>> {
    if kinds.is_empty() {
        return (projective_fit(&Mat2::identity(), v).0 < ELEMENT_TOL).then(Vec::new);
    }
    let target = quaternion(v);
    for start in scan_candidates(kinds, &target, 4) {
        let mut aligned: Vec<(f64, Vec<f64>)> = alignment_candidates(kinds, &start, &target)
            .into_iter()
            .map(|phi| {
                let shifted: Vec<f64> = start.iter().map(|a| a + phi).collect();
                (projective_fit(&sequence_matrix(kinds, &shifted), v).0, shifted)
            })
            .collect();
        aligned.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (d0, shifted) in aligned.into_iter().take(2) {
            if d0 > 0.5 {
                break;
            }
            let (theta, d) = solve_angles(kinds, v, &shifted);
            if d < ELEMENT_TOL * 0.1 {
                return Some(theta);
            }
        }
    }
    None
}

/// Cheapest sequence of at most three elements on `wire` matching `u` up to
/// phase. Returns the elements (first-encountered first) and the phase `φ`
/// with `e^{iφ}·(product) = u`.
pub fn decompose_local(wire: Wire, u: &Unitary2, catalog: &ComponentCatalog) -> Result<(Vec<Element>, f64)> {
    let v = match wire {
        Wire::Pol => *u.matrix(),
        Wire::Oam => {
            let cf = converter_frame();
            cf * u.matrix() * cf.adjoint()
        }
    };
    let mut best = f64::INFINITY;
    for kinds in candidate_sequences(wire, catalog) {
        let Some(theta) = solve_sequence(&kinds, &v) else { continue };
        let elements: Vec<Element> = kinds.iter().zip(&theta).map(|(k, a)| physical(wire, *k, *a, catalog)).collect();
        let mut m = Mat2::identity();
        for e in &elements {
            m = element_jones(e.kind(), e.parameter().expect("single-qubit element")) * m;
        }
        let (d, phi) = projective_fit(&m, u.matrix());
        if d < ELEMENT_TOL {
            return Ok((elements, phi));
        }
        best = best.min(d);
    }
    Err(Error::ConvergenceFailure { residual: best })
}

/// Wave plates (at most three) realizing `u` up to phase.
pub fn decompose_pol(u: &Unitary2) -> Result<Vec<Element>> {
    decompose_local(Wire::Pol, u, &ComponentCatalog::default()).map(|(e, _)| e)
}

/// Wave plates for `u` followed by the `PolPhase` that makes the match exact.
pub fn decompose_pol_exact(u: &Unitary2) -> Result<Vec<Element>> {
    let (mut e, phi) = decompose_local(Wire::Pol, u, &ComponentCatalog::default())?;
    if reduce_mod(phi + 1e-13, TAU) > 1e-12 {
        e.push(ElementKind::PolPhase.with_angle(phi));
    }
    Ok(e)
}

/// Mode converters and Dove prisms (at most three) realizing `u` up to phase.
/// The residual phase is returned alongside.
pub fn decompose_oam(u: &Unitary2) -> Result<(Vec<Element>, f64)> {
    decompose_local(Wire::Oam, u, &ComponentCatalog::default())
}

// ---------------------------------------------------------------------------
// Circuit lowering

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CnotImpl {
    Sagnac,
    Mz,
    Auto,
}

impl std::str::FromStr for CnotImpl {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sagnac" => Ok(CnotImpl::Sagnac),
            "mz" => Ok(CnotImpl::Mz),
            "auto" => Ok(CnotImpl::Auto),
            other => Err(Error::Parse(format!("unknown CNOT implementation {other:?}"))),
        }
    }
}

/// Physical lowering of one CNOT: `post · E · pre = e^{iφ}·CNOT`.
struct Lowering {
    element: Element,
    pre: [Mat2; 2],
    post: [Mat2; 2],
    phase: f64,
}

fn hadamard() -> Mat2 {
    *Unitary2::hadamard().matrix()
}

fn lowering(control: Wire, sagnac: bool) -> Lowering {
    let i = Mat2::identity();
    let h = hadamard();
    // Orientation native to each interferometer.
    let native = if sagnac {
        // CNOT(OAM→POL) = e^{−iπ/4}·(H·Rz(−π/2) ⊗ D(π/8))·U·(H ⊗ I)
        Lowering {
            element: Element::SagnacCnot,
            pre: [h, i],
            post: [h * Unitary2::rz(-std::f64::consts::FRAC_PI_2).matrix(), dove_jones(FRAC_PI_8)],
            phase: -std::f64::consts::FRAC_PI_4,
        }
    } else {
        Lowering { element: Element::MzCnot, pre: [i, i], post: [i, i], phase: 0.0 }
    };
    let native_control = if sagnac { Wire::Oam } else { Wire::Pol };
    if control == native_control {
        native
    } else {
        // Reverse with Hadamards on both qubits.
        Lowering {
            element: native.element,
            pre: [native.pre[0] * h, native.pre[1] * h],
            post: [h * native.post[0], h * native.post[1]],
            phase: native.phase,
        }
    }
}

enum Stage {
    Local(Wire, Mat2),
    Fixed(Element),
}

/// Memo of single-qubit decompositions within one `compile` call; AUTO
/// revisits the same layers under different CNOT choices.
#[derive(Default)]
struct LocalCache(HashMap<(Wire, [u64; 8]), Vec<Element>>);

impl LocalCache {
    fn decompose(&mut self, wire: Wire, m: &Mat2, catalog: &ComponentCatalog) -> Result<Vec<Element>> {
        let key: [u64; 8] = std::array::from_fn(|i| {
            let z = m[(i / 2 % 2, i / 4)];
            if i % 2 == 0 { z.re.to_bits() } else { z.im.to_bits() }
        });
        if let Some(e) = self.0.get(&(wire, key)) {
            return Ok(e.clone());
        }
        let (e, _) = decompose_local(wire, &Unitary2::from_matrix_unchecked(*m), catalog)?;
        self.0.insert((wire, key), e.clone());
        Ok(e)
    }
}

/// Lowers `c` with a fixed implementation choice per CNOT.
fn lower(c: &AbstractCircuit, sagnac: &[bool], catalog: &ComponentCatalog, cache: &mut LocalCache) -> Result<Recipe> {
    let mut stages = Vec::new();
    let mut cnot_index = 0;
    for g in &c.gates {
        match *g {
            AbstractGate::Local { wire, u } => stages.push(Stage::Local(wire, *u.matrix())),
            AbstractGate::Cnot { control, .. } => {
                let l = lowering(control, sagnac[cnot_index]);
                cnot_index += 1;
                stages.push(Stage::Local(Wire::Pol, l.pre[0]));
                stages.push(Stage::Local(Wire::Oam, l.pre[1]));
                stages.push(Stage::Fixed(l.element));
                stages.push(Stage::Local(Wire::Pol, l.post[0]));
                stages.push(Stage::Local(Wire::Oam, l.post[1]));
            }
        }
    }

    let mut elements = Vec::new();
    let mut layer: Vec<(Wire, Mat2)> = Vec::new();
    let mut flush = |layer: &mut Vec<(Wire, Mat2)>, elements: &mut Vec<Element>| -> Result<()> {
        for (wire, m) in layer.drain(..) {
            elements.extend(cache.decompose(wire, &m, catalog)?);
        }
        Ok(())
    };
    for s in stages {
        match s {
            Stage::Local(wire, m) => match layer.iter_mut().find(|(w, _)| *w == wire) {
                Some((_, acc)) => *acc = m * *acc,
                None => layer.push((wire, m)),
            },
            Stage::Fixed(e) => {
                flush(&mut layer, &mut elements)?;
                elements.push(e);
            }
        }
    }
    flush(&mut layer, &mut elements)?;

    let target = crate::synth::circuit_unitary(c);
    Ok(finish_recipe(elements, catalog, &target, c.numerically_synthesized))
}

/// Wraps `elements` into a recipe, appending one phase element so the recipe
/// matches `target` exactly rather than projectively.
pub(crate) fn finish_recipe(
    elements: Vec<Element>,
    catalog: &ComponentCatalog,
    target: &Unitary4,
    numerically_synthesized: bool,
) -> Recipe {
    let mut recipe = Recipe::new(elements.iter().map(Element::normalized).collect(), catalog.clone());
    recipe.numerically_synthesized = numerically_synthesized;
    let t = (crate::sim::simulate_unitary(&recipe).adjoint().matrix() * target.matrix()).trace();
    let phi = reduce_mod(t.arg(), TAU);
    if phi > 1e-12 && TAU - phi > 1e-12 {
        recipe.elements.push(ElementKind::PolPhase.with_angle(phi));
    }
    recipe
}

/// Above this many CNOTs `Auto` decides greedily instead of exhaustively.
const AUTO_EXHAUSTIVE_LIMIT: usize = 10;

/// Lowers `c` with an explicit choice per CNOT, in circuit order
/// (`true` = Sagnac).
pub fn compile_assignment(c: &AbstractCircuit, sagnac: &[bool], catalog: &ComponentCatalog) -> Result<Recipe> {
    c.validate()?;
    if sagnac.len() != c.cnot_count() {
        return Err(Error::InvalidCircuit(format!(
            "{} implementation choices for {} CNOTs",
            sagnac.len(),
            c.cnot_count()
        )));
    }
    lower(c, sagnac, catalog, &mut LocalCache::default())
}

/// Lowers an abstract circuit to optical elements.
pub fn compile(c: &AbstractCircuit, how: CnotImpl, catalog: &ComponentCatalog) -> Result<Recipe> {
    c.validate()?;
    let n = c.cnot_count();
    let mut cache = LocalCache::default();
    let mut lower = |choice: &[bool]| lower(c, choice, catalog, &mut cache);
    match how {
        CnotImpl::Sagnac => lower(&vec![true; n]),
        CnotImpl::Mz => lower(&vec![false; n]),
        CnotImpl::Auto if n <= AUTO_EXHAUSTIVE_LIMIT => {
            let mut best: Option<(u32, usize, Recipe)> = None;
            // Mask bit set = Sagnac; the all-Sagnac choice is tried first so
            // ties go to the phase-stable interferometer.
            for mask in (0..1u32 << n).rev() {
                let choice: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                let r = lower(&choice)?;
                let key = (surface_count(&r), r.elements.len());
                if best.as_ref().is_none_or(|(s, l, _)| key < (*s, *l)) {
                    best = Some((key.0, key.1, r));
                }
            }
            Ok(best.expect("at least one assignment").2)
        }
        CnotImpl::Auto => {
            let mut choice = vec![true; n];
            for i in 0..n {
                choice[i] = true;
                let s = surface_count(&lower(&choice)?);
                choice[i] = false;
                let m = surface_count(&lower(&choice)?);
                choice[i] = s <= m;
            }
            lower(&choice)
        }
    }
}
