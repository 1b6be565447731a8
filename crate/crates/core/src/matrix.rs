//! Complex 2×2 / 4×4 unitaries and the metrics the rest of the pipeline is
//! judged by.
//!
//! Every 4×4 matrix in this crate is written in the fixed basis
//! `[H+, H−, V+, V−]`: polarization is the first (slow) tensor factor and the
//! OAM qubit (`l = +1`, `l = −1`) is the second.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::sig12;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

/// Unitarity tolerance applied when a matrix is constructed.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for round trips through decomposition and synthesis.
pub const ROUND_TRIP_TOL: f64 = 1e-9;
/// Looser unitarity tolerance for hand-typed matrices read from JSON.
pub const INGEST_TOL: f64 = 1e-8;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

fn max_abs<I: IntoIterator<Item = C64>>(it: I) -> f64 {
    it.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry of `|U†U − I|`.
pub fn unitarity_deviation2(m: &Mat2) -> f64 {
    max_abs((m.adjoint() * m - Mat2::identity()).iter().copied())
}

/// Largest entry of `|U†U − I|`.
pub fn unitarity_deviation4(m: &Mat4) -> f64 {
    max_abs((m.adjoint() * m - Mat4::identity()).iter().copied())
}

/// A 2×2 unitary acting on one qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2(Mat2);

/// A 4×4 unitary in the basis `[H+, H−, V+, V−]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary4(Mat4);

impl Unitary2 {
    pub fn new(m: Mat2) -> Result<Self> {
        let deviation = unitarity_deviation2(&m);
        if deviation > CONSTRUCTION_TOL {
            return Err(Error::NotUnitary { deviation, tolerance: CONSTRUCTION_TOL });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is unitary by construction (products of unitaries,
    /// closed-form rotations). No check is made.
    pub(crate) fn from_matrix_unchecked(m: Mat2) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Mat2::identity())
    }

    pub fn pauli_x() -> Self {
        Self(Mat2::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)))
    }

    pub fn pauli_y() -> Self {
        Self(Mat2::new(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)))
    }

    pub fn pauli_z() -> Self {
        Self(Mat2::new(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)))
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self(Mat2::new(c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)))
    }

    /// `exp(−iθσx/2)`
    pub fn rx(theta: f64) -> Self {
        let (s, co) = (theta / 2.0).sin_cos();
        Self(Mat2::new(c(co, 0.), c(0., -s), c(0., -s), c(co, 0.)))
    }

    /// `exp(−iθσy/2)`
    pub fn ry(theta: f64) -> Self {
        let (s, co) = (theta / 2.0).sin_cos();
        Self(Mat2::new(c(co, 0.), c(-s, 0.), c(s, 0.), c(co, 0.)))
    }

    /// `exp(−iθσz/2)`
    pub fn rz(theta: f64) -> Self {
        Self(Mat2::new(cis(-theta / 2.0), c(0., 0.), c(0., 0.), cis(theta / 2.0)))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn det(&self) -> C64 {
        self.0[(0, 0)] * self.0[(1, 1)] - self.0[(0, 1)] * self.0[(1, 0)]
    }

    pub fn trace(&self) -> C64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    /// `e^{iφ}·self`
    pub fn with_phase(&self, phi: f64) -> Self {
        Self(self.0 * cis(phi))
    }

    pub fn deviation(&self) -> f64 {
        unitarity_deviation2(&self.0)
    }

    /// Polar factor of `m`, the closest unitary in Frobenius norm.
    pub fn nearest_unitary(m: &Mat2) -> Self {
        let svd = m.svd(true, true);
        Self(svd.u.expect("requested") * svd.v_t.expect("requested"))
    }
}

impl Unitary4 {
    pub fn new(m: Mat4) -> Result<Self> {
        let deviation = unitarity_deviation4(&m);
        if deviation > CONSTRUCTION_TOL {
            return Err(Error::NotUnitary { deviation, tolerance: CONSTRUCTION_TOL });
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Mat4) -> Self {
        Self(m)
    }

    /// Builds from row-major `(re, im)` pairs.
    pub fn from_rows(rows: [[(f64, f64); 4]; 4]) -> Result<Self> {
        Self::new(Mat4::from_fn(|r, k| c(rows[r][k].0, rows[r][k].1)))
    }

    pub fn identity() -> Self {
        Self(Mat4::identity())
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn det(&self) -> C64 {
        self.0.determinant()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn with_phase(&self, phi: f64) -> Self {
        Self(self.0 * cis(phi))
    }

    pub fn deviation(&self) -> f64 {
        unitarity_deviation4(&self.0)
    }

    pub fn apply(&self, s: &StateVec4) -> StateVec4 {
        StateVec4 { amplitudes: self.0 * s.amplitudes }
    }

    /// Nearest unitary in Frobenius norm (polar factor of the SVD).
    pub fn nearest_unitary(m: &Mat4) -> Self {
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        Self(u * vt)
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;
    fn mul(self, rhs: Unitary2) -> Unitary2 {
        Unitary2(self.0 * rhs.0)
    }
}

impl Mul for Unitary4 {
    type Output = Unitary4;
    fn mul(self, rhs: Unitary4) -> Unitary4 {
        Unitary4(self.0 * rhs.0)
    }
}

impl fmt::Display for Unitary4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..4 {
            let row: Vec<String> = (0..4)
                .map(|k| {
                    let z = self.0[(r, k)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Kronecker product `a ⊗ b`, polarization (`a`) as the slow factor.
pub fn tensor(a: &Unitary2, b: &Unitary2) -> Unitary4 {
    Unitary4(kron(&a.0, &b.0))
}

pub(crate) fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, k| a[(r / 2, k / 2)] * b[(r % 2, k % 2)])
}

/// `min_φ ‖u − e^{iφ}v‖_F`, evaluated directly at the optimal phase rather
/// than through `sqrt(8 − 2|tr u†v|)`, which loses half the digits near zero.
pub fn phase_distance(u: &Unitary4, v: &Unitary4) -> f64 {
    let t = (u.0.adjoint() * v.0).trace();
    let phase = if t.norm() > 0.0 { t.conj() / t.norm() } else { c(1., 0.) };
    (u.0 - v.0 * phase).norm()
}

/// 2×2 analog of [`phase_distance`].
pub fn phase_distance2(u: &Unitary2, v: &Unitary2) -> f64 {
    let t = (u.0.adjoint() * v.0).trace();
    let phase = if t.norm() > 0.0 { t.conj() / t.norm() } else { c(1., 0.) };
    (u.0 - v.0 * phase).norm()
}

/// Plain Frobenius distance `‖u − v‖_F` (phase-sensitive).
pub fn frobenius_distance(u: &Unitary4, v: &Unitary4) -> f64 {
    (u.0 - v.0).norm()
}

/// `|tr(u†v)|² / 16`.
pub fn process_fidelity(u: &Unitary4, v: &Unitary4) -> f64 {
    let t = (u.0.adjoint() * v.0).trace();
    (t.norm_sqr() / 16.0).min(1.0)
}

/// A global phase `θ`, kept reduced to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Deserialize)]
#[serde(from = "f64")]
pub struct GlobalPhase(f64);

impl Serialize for GlobalPhase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(sig12(self.0))
    }
}

impl GlobalPhase {
    pub fn new(theta: f64) -> Self {
        Self(reduce_mod(theta, TAU))
    }

    pub fn zero() -> Self {
        Self(0.0)
    }

    pub fn radians(&self) -> f64 {
        self.0
    }

    pub fn factor(&self) -> C64 {
        cis(self.0)
    }

    pub fn shifted(&self, delta: f64) -> Self {
        Self::new(self.0 + delta)
    }

    /// True when the phase is 0 mod 2π within `tol`.
    pub fn is_trivial(&self, tol: f64) -> bool {
        self.0 < tol || TAU - self.0 < tol
    }
}

impl From<f64> for GlobalPhase {
    fn from(theta: f64) -> Self {
        Self::new(theta)
    }
}

impl From<GlobalPhase> for f64 {
    fn from(p: GlobalPhase) -> f64 {
        p.0
    }
}

/// Reduces `x` into `[0, period)`; `rem_euclid` alone can round up to
/// `period` for tiny negative inputs.
pub(crate) fn reduce_mod(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Splits `u = e^{iθ}·s` with `det s = 1`, `θ = arg(det u)/4` taken in
/// `[0, π/2)`.
pub fn su4_normalize(u: &Unitary4) -> (GlobalPhase, Unitary4) {
    let theta = reduce_mod(u.det().arg() / 4.0, FRAC_PI_2);
    (GlobalPhase::new(theta), Unitary4(u.0 * cis(-theta)))
}

fn gaussian_matrix<const N: usize>(rng: &mut ChaCha8Rng) -> [[C64; N]; N] {
    let mut out = [[c(0., 0.); N]; N];
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for row in out.iter_mut() {
        for z in row.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *z = c(re * scale, im * scale);
        }
    }
    out
}

/// Haar-random `SU(4)` matrix, deterministic per seed.
///
/// QR of a complex Gaussian matrix, with each column of `Q` rephased by
/// `r_ii/|r_ii|` so the distribution is Haar, then divided by `det^{1/4}`.
pub fn random_su4(seed: u64) -> Unitary4 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix::<4>(&mut rng);
    let m = Mat4::from_fn(|r, k| g[r][k]);
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..4 {
        let d = r[(k, k)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1., 0.) };
        for row in 0..4 {
            q[(row, k)] *= ph;
        }
    }
    let root = cis(-q.determinant().arg() / 4.0);
    Unitary4(q * root)
}

/// Haar-random `U(4)`: [`random_su4`] times a uniformly random phase.
pub fn random_u4(seed: u64) -> Unitary4 {
    const PHASE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PHASE_STREAM);
    let phi: f64 = rand::Rng::random_range(&mut rng, 0.0..TAU);
    random_su4(seed).with_phase(phi)
}

/// Haar-random `SU(2)`, deterministic per seed.
pub fn random_su2(seed: u64) -> Unitary2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix::<2>(&mut rng);
    // A normalized Gaussian 4-vector is a uniform unit quaternion.
    let norm = (g[0][0].norm_sqr() + g[0][1].norm_sqr()).sqrt();
    let (a, b) = (g[0][0] / norm, g[0][1] / norm);
    Unitary2(Mat2::new(a, -b.conj(), b, a.conj()))
}

/// One of the four product basis states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisState {
    HPlus,
    HMinus,
    VPlus,
    VMinus,
}

impl BasisState {
    pub const ALL: [BasisState; 4] =
        [BasisState::HPlus, BasisState::HMinus, BasisState::VPlus, BasisState::VMinus];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            BasisState::HPlus => "h+",
            BasisState::HMinus => "h-",
            BasisState::VPlus => "v+",
            BasisState::VMinus => "v-",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.label().eq_ignore_ascii_case(s.trim()))
    }
}

/// Amplitudes over `[H+, H−, V+, V−]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVec4 {
    amplitudes: Vector4<C64>,
}

impl StateVec4 {
    pub fn basis(b: BasisState) -> Self {
        let mut amplitudes = Vector4::zeros();
        amplitudes[b.index()] = c(1., 0.);
        Self { amplitudes }
    }

    /// Accepts amplitudes whose squared norm is 1 within `1e-12`.
    pub fn normalized(amplitudes: [C64; 4]) -> Result<Self> {
        let v = Vector4::from(amplitudes);
        let deviation = (v.norm_squared() - 1.0).abs();
        if deviation > CONSTRUCTION_TOL {
            return Err(Error::NotNormalized { deviation, tolerance: CONSTRUCTION_TOL });
        }
        Ok(Self { amplitudes: v })
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        [self.amplitudes[0], self.amplitudes[1], self.amplitudes[2], self.amplitudes[3]]
    }

    pub fn amplitude(&self, b: BasisState) -> C64 {
        self.amplitudes[b.index()]
    }

    pub fn probabilities(&self) -> [f64; 4] {
        self.amplitudes().map(|z| z.norm_sqr())
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }
}

/// On-disk form of a 4×4 unitary: `{"matrix": [[[re, im] × 4] × 4]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitaryJson {
    pub matrix: Vec<Vec<[f64; 2]>>,
}

/// A unitary read from user input, with a note if it had to be repaired.
#[derive(Clone, Debug)]
pub struct Ingested {
    pub unitary: Unitary4,
    /// Set when the input deviated from unitarity by more than
    /// [`CONSTRUCTION_TOL`] (but no more than [`INGEST_TOL`]) and was replaced
    /// by its nearest unitary. Holds the original deviation.
    pub reorthonormalized: Option<f64>,
}

impl UnitaryJson {
    pub fn from_unitary(u: &Unitary4) -> Self {
        let matrix = (0..4)
            .map(|r| (0..4).map(|k| [sig12(u.0[(r, k)].re), sig12(u.0[(r, k)].im)]).collect())
            .collect();
        Self { matrix }
    }

    pub fn to_unitary(&self) -> Result<Ingested> {
        if self.matrix.len() != 4 || self.matrix.iter().any(|row| row.len() != 4) {
            return Err(Error::Parse("\"matrix\" must be 4 rows of 4 [re, im] pairs".into()));
        }
        let m = Mat4::from_fn(|r, k| c(self.matrix[r][k][0], self.matrix[r][k][1]));
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parse("matrix entries must be finite".into()));
        }
        let deviation = unitarity_deviation4(&m);
        if deviation <= CONSTRUCTION_TOL {
            Ok(Ingested { unitary: Unitary4(m), reorthonormalized: None })
        } else if deviation <= INGEST_TOL {
            Ok(Ingested { unitary: Unitary4::nearest_unitary(&m), reorthonormalized: Some(deviation) })
        } else {
            Err(Error::NotUnitary { deviation, tolerance: INGEST_TOL })
        }
    }
}

pub fn parse_unitary_json(text: &str) -> Result<Ingested> {
    let raw: UnitaryJson = serde_json::from_str(text)?;
    raw.to_unitary()
}

pub fn unitary_to_json(u: &Unitary4) -> String {
    serde_json::to_string_pretty(&UnitaryJson::from_unitary(u)).expect("plain data serializes")
}
