//! Numeric fit of a fixed-CNOT-count template to a target unitary.
//!
//! Template: `L_n · CX · L_{n−1} · … · CX · L_0`, every CNOT with control on
//! polarization, every layer `L_i = a_i ⊗ b_i` with
//! `a = Rz(φ)·Ry(θ)·Rz(λ)`. The residual `e^{iγ}·C(p) − T` is driven to zero
//! by Levenberg–Marquardt with an analytic Jacobian; a least-squares residual
//! reaches ~1e-15 where `1 − |tr|/4` would stall near 1e-8 in distance.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{c, cis, frobenius_distance, kron, GlobalPhase, Mat2, Mat4, Unitary2, Unitary4};
use crate::synth::{cnot_unitary, AbstractCircuit, AbstractGate, Wire};

/// Result of [`fit_template`].
#[derive(Clone, Debug)]
pub struct FitResult {
    pub circuit: AbstractCircuit,
    /// `‖circuit_unitary(circuit) − target‖_F` including the fitted phase.
    pub distance: f64,
}

const PARAMS_PER_LOCAL: usize = 3;

fn euler(p: &[f64]) -> Mat2 {
    let (rz1, ry, rz2) = (Unitary2::rz(p[0]), Unitary2::ry(p[1]), Unitary2::rz(p[2]));
    rz1.matrix() * ry.matrix() * rz2.matrix()
}

fn euler_partials(p: &[f64]) -> [Mat2; 3] {
    let (rz1, ry, rz2) = (*Unitary2::rz(p[0]).matrix(), *Unitary2::ry(p[1]).matrix(), *Unitary2::rz(p[2]).matrix());
    let half_i = c(0., -0.5);
    let z = *Unitary2::pauli_z().matrix() * half_i;
    let y = *Unitary2::pauli_y().matrix() * half_i;
    [z * rz1 * ry * rz2, rz1 * y * ry * rz2, rz1 * ry * rz2 * z]
}

struct Template {
    cnots: usize,
    cx: Mat4,
}

impl Template {
    fn n_layers(&self) -> usize {
        self.cnots + 1
    }

    fn n_params(&self) -> usize {
        self.n_layers() * 2 * PARAMS_PER_LOCAL + 1
    }

    fn layer(&self, p: &[f64], i: usize) -> Mat4 {
        let base = i * 2 * PARAMS_PER_LOCAL;
        kron(&euler(&p[base..base + 3]), &euler(&p[base + 3..base + 6]))
    }

    fn unitary(&self, p: &[f64]) -> Mat4 {
        let mut acc = self.layer(p, 0);
        for i in 1..self.n_layers() {
            acc = self.layer(p, i) * self.cx * acc;
        }
        acc * cis(p[self.n_params() - 1])
    }

    fn residual(&self, p: &[f64], target: &Mat4) -> DVector<f64> {
        let diff = self.unitary(p) - target;
        DVector::from_iterator(32, diff.iter().flat_map(|z| [z.re, z.im]))
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.n_params();
        let layers: Vec<Mat4> = (0..self.n_layers()).map(|i| self.layer(p, i)).collect();
        // before[i]: everything applied before layer i; after[i]: everything after it.
        let mut before = vec![Mat4::identity(); self.n_layers()];
        for i in 1..self.n_layers() {
            before[i] = self.cx * layers[i - 1] * before[i - 1];
        }
        let mut after = vec![Mat4::identity(); self.n_layers()];
        for i in (0..self.n_layers() - 1).rev() {
            after[i] = after[i + 1] * layers[i + 1] * self.cx;
        }
        let phase = cis(p[n - 1]);
        let mut jac = DMatrix::zeros(32, n);
        for i in 0..self.n_layers() {
            let base = i * 2 * PARAMS_PER_LOCAL;
            let a = euler(&p[base..base + 3]);
            let b = euler(&p[base + 3..base + 6]);
            let da = euler_partials(&p[base..base + 3]);
            let db = euler_partials(&p[base + 3..base + 6]);
            for q in 0..3 {
                let col_a = after[i] * kron(&da[q], &b) * before[i] * phase;
                let col_b = after[i] * kron(&a, &db[q]) * before[i] * phase;
                write_column(&mut jac, base + q, &col_a);
                write_column(&mut jac, base + 3 + q, &col_b);
            }
        }
        let full = self.unitary(p) * c(0., 1.);
        write_column(&mut jac, n - 1, &full);
        jac
    }
}

fn write_column(jac: &mut DMatrix<f64>, col: usize, m: &Mat4) {
    for (r, z) in m.iter().enumerate() {
        jac[(2 * r, col)] = z.re;
        jac[(2 * r + 1, col)] = z.im;
    }
}

fn levenberg_marquardt(t: &Template, target: &Mat4, mut p: Vec<f64>, max_iters: usize) -> (Vec<f64>, f64) {
    let mut r = t.residual(&p, target);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..max_iters {
        if cost < 1e-30 {
            break;
        }
        let j = t.jacobian(&p);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += mu * (1.0 + jtj[(k, k)]);
            }
            let Some(step) = a.cholesky().map(|ch| ch.solve(&(-&g))) else {
                mu *= 4.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            let tr = t.residual(&trial, target);
            let tc = tr.norm_squared();
            if tc < cost {
                p = trial;
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
    (p, cost.sqrt())
}

/// Fits a `cnots`-CNOT template to `target` from `restarts` deterministic
/// starting points, returning the best circuit found.
pub fn fit_template(target: &Unitary4, cnots: usize, seed: u64, restarts: usize) -> FitResult {
    let t = Template { cnots, cx: *cnot_unitary(Wire::Pol).matrix() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..restarts.max(1) {
        let start: Vec<f64> = (0..t.n_params()).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let (p, dist) = levenberg_marquardt(&t, target.matrix(), start, 400);
        if best.as_ref().is_none_or(|(_, d)| dist < *d) {
            best = Some((p, dist));
        }
        if dist < 1e-13 {
            break;
        }
    }
    let (p, _) = best.expect("at least one restart");
    let mut gates = Vec::new();
    for i in 0..t.n_layers() {
        if i > 0 {
            gates.push(AbstractGate::cnot(Wire::Pol));
        }
        let base = i * 2 * PARAMS_PER_LOCAL;
        gates.push(AbstractGate::local(Wire::Pol, Unitary2::from_matrix_unchecked(euler(&p[base..base + 3]))));
        gates.push(AbstractGate::local(Wire::Oam, Unitary2::from_matrix_unchecked(euler(&p[base + 3..base + 6]))));
    }
    let circuit = AbstractCircuit {
        gates,
        phase: GlobalPhase::new(p[t.n_params() - 1]),
        numerically_synthesized: true,
    };
    let distance = frobenius_distance(&crate::synth::circuit_unitary(&circuit), target);
    FitResult { circuit, distance }
}
