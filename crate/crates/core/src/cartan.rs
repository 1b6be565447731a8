//! Cartan (KAK) decomposition of two-qubit gates.
//!
//! Every `U ∈ U(4)` factors as
//!
//! ```text
//! U = e^{iθ} · (R_pol ⊗ R_oam) · exp(−i(kx σxσx + ky σyσy + kz σzσz)) · (L_pol ⊗ L_oam)
//! ```
//!
//! The work happens in the magic basis
//!
//! ```text
//!            ⎡ 1  0   0   i ⎤
//! B = 1/√2 · ⎢ 0  i   1   0 ⎥
//!            ⎢ 0  i  −1   0 ⎥
//!            ⎣ 1  0   0  −i ⎦
//! ```
//!
//! whose columns are `Φ+`, `iΨ+`, `Ψ−`, `iΦ−`. Conjugation by `B` sends
//! `SU(2)⊗SU(2)` onto the real group `SO(4)` and makes every interaction
//! `exp(−iH)` diagonal, with eigenphases
//! `(kx−ky+kz, kx+ky−kz, −kx−ky−kz, −kx+ky+kz)`.
//!
//! Canonical coordinates satisfy `π/4 ≥ kx ≥ ky ≥ |kz|`, and `kz ≥ 0`
//! whenever `kx = π/4`. For every class that has a representative with
//! `kz ≥ 0` this is the chamber `π/4 ≥ kx ≥ ky ≥ kz ≥ 0`; the mirror classes
//! `(kx, ky, −kz)` with `kx < π/4` have no such representative and keep a
//! negative `kz`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::ser_sig12;
use crate::matrix::{
    c, cis, frobenius_distance, kron, su4_normalize, tensor, GlobalPhase, Mat2, Mat4, Unitary2,
    Unitary4, C64, ROUND_TRIP_TOL,
};

/// Slack for chamber membership tests.
pub const CHAMBER_TOL: f64 = 1e-12;

/// The magic basis change (columns are the Bell-like basis vectors).
pub fn magic_basis() -> Mat4 {
    let h = FRAC_1_SQRT_2;
    let (o, r, i) = (c(0., 0.), c(h, 0.), c(0., h));
    Mat4::new(r, o, o, i, o, i, r, o, o, i, -r, o, r, o, o, -i)
}

/// Coefficients of `σxσx`, `σyσy`, `σzσz` in the interaction Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylCoords {
    #[serde(serialize_with = "ser_sig12")]
    pub kx: f64,
    #[serde(serialize_with = "ser_sig12")]
    pub ky: f64,
    #[serde(serialize_with = "ser_sig12")]
    pub kz: f64,
}

impl WeylCoords {
    pub const ZERO: WeylCoords = WeylCoords { kx: 0.0, ky: 0.0, kz: 0.0 };

    pub fn new(kx: f64, ky: f64, kz: f64) -> Self {
        Self { kx, ky, kz }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.kx, self.ky, self.kz]
    }

    /// Membership in the canonical chamber (see module docs) with slack `tol`.
    pub fn is_canonical(&self, tol: f64) -> bool {
        let Self { kx, ky, kz } = *self;
        kx <= FRAC_PI_4 + tol
            && ky <= kx + tol
            && kz.abs() <= ky + tol
            && (kx < FRAC_PI_4 - tol || kz >= -tol)
    }

    /// `π/4 ≥ kx ≥ ky ≥ kz ≥ 0` with slack `tol`.
    pub fn in_nonnegative_chamber(&self, tol: f64) -> bool {
        self.kx <= FRAC_PI_4 + tol && self.ky <= self.kx + tol && self.kz <= self.ky + tol && self.kz >= -tol
    }

    /// Eigenphases `λ` of `H` on the magic basis columns, in column order.
    pub fn magic_eigenphases(&self) -> [f64; 4] {
        let Self { kx, ky, kz } = *self;
        [kx - ky + kz, kx + ky - kz, -kx - ky - kz, -kx + ky + kz]
    }

    pub fn max_abs_diff(&self, other: &WeylCoords) -> f64 {
        let (a, b) = (self.as_array(), other.as_array());
        (0..3).map(|j| (a[j] - b[j]).abs()).fold(0.0, f64::max)
    }
}

/// `exp(−i(kx σxσx + ky σyσy + kz σzσz))`, built in the magic basis where it
/// is diagonal.
pub fn interaction_unitary(k: &WeylCoords) -> Unitary4 {
    let b = magic_basis();
    let lambda = k.magic_eigenphases();
    let d = Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|j, _| cis(-lambda[j])));
    Unitary4::from_matrix_unchecked(b * d * b.adjoint())
}

/// Output of [`kak_decompose`].
///
/// `left_*` act first, `right_*` last:
/// `u = e^{iθ}·(right_pol ⊗ right_oam)·interaction_unitary(coords)·(left_pol ⊗ left_oam)`.
#[derive(Clone, Copy, Debug)]
pub struct KakDecomposition {
    pub phase: GlobalPhase,
    pub left_pol: Unitary2,
    pub left_oam: Unitary2,
    pub coords: WeylCoords,
    pub right_pol: Unitary2,
    pub right_oam: Unitary2,
}

/// Everything in a decomposition except the coordinates; the input to
/// [`canonicalize`].
#[derive(Clone, Copy, Debug)]
pub struct Dressing {
    pub phase: f64,
    pub left_pol: Unitary2,
    pub left_oam: Unitary2,
    pub right_pol: Unitary2,
    pub right_oam: Unitary2,
}

impl Dressing {
    pub fn identity() -> Self {
        let i = Unitary2::identity();
        Self { phase: 0.0, left_pol: i, left_oam: i, right_pol: i, right_oam: i }
    }
}

pub fn reassemble(d: &KakDecomposition) -> Unitary4 {
    let right = tensor(&d.right_pol, &d.right_oam);
    let left = tensor(&d.left_pol, &d.left_oam);
    (right * interaction_unitary(&d.coords) * left).with_phase(d.phase.radians())
}

fn pauli(axis: usize) -> Mat2 {
    match axis {
        0 => *Unitary2::pauli_x().matrix(),
        1 => *Unitary2::pauli_y().matrix(),
        _ => *Unitary2::pauli_z().matrix(),
    }
}

/// `exp(−iπ/4·σ_axis)`: a quarter turn that swaps the other two axes.
fn quarter_turn(axis: usize) -> Mat2 {
    let h = FRAC_1_SQRT_2;
    Mat2::identity() * c(h, 0.) - pauli(axis) * c(0., h)
}

/// Mutable bookkeeping for folding raw coordinates into the chamber. Every
/// step leaves `e^{iθ}·R·exp(−iH(k))·L` unchanged.
struct Fold {
    k: [f64; 3],
    phase: f64,
    left: [Mat2; 2],
    right: [Mat2; 2],
}

impl Fold {
    /// `k_j → k_j − n·π/2`, using `exp(−iπ/2·σjσj) = −i·σjσj`.
    fn shift(&mut self, j: usize, n: i64) {
        if n == 0 {
            return;
        }
        self.k[j] -= n as f64 * FRAC_PI_2;
        self.phase -= n as f64 * FRAC_PI_2;
        if n.rem_euclid(2) == 1 {
            let p = pauli(j);
            self.left[0] = p * self.left[0];
            self.left[1] = p * self.left[1];
        }
    }

    /// Exchanges `k_a` and `k_b` by conjugating with quarter turns about the
    /// third axis on both qubits.
    fn swap(&mut self, a: usize, b: usize) {
        let axis = 3 - a - b;
        let s = quarter_turn(axis);
        self.k.swap(a, b);
        for q in 0..2 {
            self.left[q] = s * self.left[q];
            self.right[q] *= s.adjoint();
        }
    }

    /// Negates the two coordinates other than `axis` via `σ_axis ⊗ I`.
    fn flip(&mut self, axis: usize) {
        let p = pauli(axis);
        for j in 0..3 {
            if j != axis {
                self.k[j] = -self.k[j];
            }
        }
        self.left[0] = p * self.left[0];
        self.right[0] *= p;
    }
}

/// Folds raw coordinates into the canonical chamber, pushing every
/// compensating local gate and phase into the dressing.
///
/// 1. each `k_j` is shifted by a multiple of `π/2` into `[−π/4, π/4]`;
/// 2. the three are sorted by magnitude, descending;
/// 3. pairs of signs are flipped until `kx, ky ≥ 0`;
/// 4. at `kx = π/4` a negative `kz` is mirrored to `+|kz|`.
pub fn canonicalize(raw: WeylCoords, dressing: Dressing) -> KakDecomposition {
    let mut f = Fold {
        k: raw.as_array(),
        phase: dressing.phase,
        left: [*dressing.left_pol.matrix(), *dressing.left_oam.matrix()],
        right: [*dressing.right_pol.matrix(), *dressing.right_oam.matrix()],
    };

    for j in 0..3 {
        let n = (f.k[j] / FRAC_PI_2).round() as i64;
        f.shift(j, n);
    }

    for (a, b) in [(0, 1), (1, 2), (0, 1)] {
        if f.k[a].abs() < f.k[b].abs() {
            f.swap(a, b);
        }
    }

    if f.k[0] < 0.0 {
        f.flip(1);
    }
    if f.k[1] < 0.0 {
        f.flip(0);
    }

    if f.k[2] < 0.0 && f.k[0] >= FRAC_PI_4 - CHAMBER_TOL {
        // (π/4, ky, −kz) → (−π/4, ky, −kz) → (π/4, ky, kz)
        f.shift(0, 1);
        f.flip(1);
    }

    KakDecomposition {
        phase: GlobalPhase::new(f.phase),
        left_pol: Unitary2::from_matrix_unchecked(f.left[0]),
        left_oam: Unitary2::from_matrix_unchecked(f.left[1]),
        coords: WeylCoords::new(f.k[0], f.k[1], f.k[2]),
        right_pol: Unitary2::from_matrix_unchecked(f.right[0]),
        right_oam: Unitary2::from_matrix_unchecked(f.right[1]),
    }
}

/// Splits a 4×4 matrix known to be a tensor product `a ⊗ b` into its factors,
/// with `det b = 1`.
pub(crate) fn factor_tensor(k: &Mat4) -> (Mat2, Mat2) {
    let block = |i: usize, j: usize| Mat2::from_fn(|r, s| k[(2 * i + r, 2 * j + s)]);
    let (bi, bj) = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .max_by(|&(i, j), &(p, q)| block(i, j).norm().total_cmp(&block(p, q).norm()))
        .expect("four blocks");
    let big = block(bi, bj);
    let det = big[(0, 0)] * big[(1, 1)] - big[(0, 1)] * big[(1, 0)];
    let b = big / det.sqrt();
    let a = Mat2::from_fn(|i, j| (b.adjoint() * block(i, j)).trace() / c(2., 0.));
    (a, b)
}

/// Deterministic weights for diagonalizing `Re(m) + λ·Im(m)`.
const MIXING_WEIGHTS: [f64; 5] = [0.0, 1.0, 1.618_033_988_749_895, std::f64::consts::SQRT_2, std::f64::consts::E];

fn off_diagonal(m: &Matrix4<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        for k in 0..4 {
            if r != k {
                worst = worst.max(m[(r, k)].abs());
            }
        }
    }
    worst
}

/// A real orthogonal `P` (det +1) with `Pᵀ·m·P` diagonal, for symmetric
/// unitary `m`. Real and imaginary parts commute, so some mix
/// `Re + λ·Im` separates every eigenspace both parts distinguish.
fn simultaneous_diagonalizer(m: &Mat4) -> Matrix4<f64> {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let re = (re + re.transpose()) * 0.5;
    let im = (im + im.transpose()) * 0.5;

    let mut best: Option<(f64, Matrix4<f64>)> = None;
    for &lambda in &MIXING_WEIGHTS {
        let p = SymmetricEigen::new(re + im * lambda).eigenvectors;
        let residual = off_diagonal(&(p.transpose() * re * p)).max(off_diagonal(&(p.transpose() * im * p)));
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, p));
        }
        if residual < 1e-13 {
            break;
        }
    }
    let mut p = best.expect("at least one weight").1;
    if p.determinant() < 0.0 {
        p.column_mut(0).neg_mut();
    }
    p
}

/// Cartan decomposition of any two-qubit unitary, canonicalized.
pub fn kak_decompose(u: &Unitary4) -> Result<KakDecomposition> {
    let (theta, s) = su4_normalize(u);
    let b = magic_basis();
    let m = b.adjoint() * s.matrix() * b;
    let mtm = m.transpose() * m;

    let p = simultaneous_diagonalizer(&mtm);
    let pc: Mat4 = p.map(|x| c(x, 0.));
    let diag2 = pc.transpose() * mtm * pc;
    let mut d: [C64; 4] = std::array::from_fn(|j| {
        let z = diag2[(j, j)];
        (z / z.norm()).sqrt()
    });

    // O1 = M·P·D⁻¹ is real orthogonal; make det O1 = +1 by flipping one root.
    let o1_of = |d: &[C64; 4]| {
        let dinv = Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|j, _| d[j].conj()));
        (m * pc * dinv).map(|z| z.re)
    };
    let mut o1 = o1_of(&d);
    if o1.determinant() < 0.0 {
        d[0] = -d[0];
        o1 = o1_of(&d);
    }

    // d_j = e^{−iλ_j}
    let lambda: [f64; 4] = std::array::from_fn(|j| -d[j].arg());
    let raw = WeylCoords::new(
        (lambda[0] + lambda[1]) / 2.0,
        (lambda[1] + lambda[3]) / 2.0,
        (lambda[0] + lambda[3]) / 2.0,
    );
    let o1c: Mat4 = o1.map(|x| c(x, 0.));
    let k1 = b * o1c * b.adjoint();
    let k2 = b * pc.transpose() * b.adjoint();
    let (a1, b1) = factor_tensor(&k1);
    let (a2, b2) = factor_tensor(&k2);

    let dressing = Dressing {
        phase: theta.radians(),
        left_pol: Unitary2::from_matrix_unchecked(a2),
        left_oam: Unitary2::from_matrix_unchecked(b2),
        right_pol: Unitary2::from_matrix_unchecked(a1),
        right_oam: Unitary2::from_matrix_unchecked(b1),
    };
    let out = canonicalize(raw, dressing);

    let residual = frobenius_distance(&reassemble(&out), u);
    if residual.is_nan() || residual >= ROUND_TRIP_TOL {
        return Err(Error::DecompositionFailure { residual, input: format!("{:?}", u.matrix()) });
    }
    Ok(out)
}

/// Makhlin-style invariants of a two-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalInvariants {
    pub g1: C64,
    pub g2: f64,
}

impl LocalInvariants {
    pub fn max_abs_diff(&self, other: &LocalInvariants) -> f64 {
        (self.g1 - other.g1).norm().max((self.g2 - other.g2).abs())
    }
}

/// `g1 = tr²(m)/(16·det u)`, `g2 = (tr²(m) − tr(m²))/(4·det u)`, where
/// `m = MᵀM` and `M` is `u` in the magic basis.
pub fn local_invariants(u: &Unitary4) -> LocalInvariants {
    let b = magic_basis();
    let m = b.adjoint() * u.matrix() * b;
    let mtm = m.transpose() * m;
    let det = u.det();
    let tr = mtm.trace();
    let tr_sq = (mtm * mtm).trace();
    LocalInvariants { g1: tr * tr / (det * 16.0), g2: ((tr * tr - tr_sq) / (det * 4.0)).re }
}

/// `σj ⊗ σj`
pub fn pauli_pair(axis: usize) -> Unitary4 {
    let p = pauli(axis);
    Unitary4::from_matrix_unchecked(kron(&p, &p))
}
