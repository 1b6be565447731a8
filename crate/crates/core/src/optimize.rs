//! Surface reduction for compiled recipes.
//!
//! Greedy local search: drop one single-qubit element (or swap it for a
//! cheaper kind on the same qubit), refit every remaining angle and the
//! global phase against the exact target, keep the change only if the fit is
//! exact. Interferometers are never touched.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{c, cis, kron, phase_distance, Mat2, Mat4, Unitary4};
use crate::error::Result;
use crate::photonic::{
    compile, compile_assignment, element_jones, element_jones_derivative, element_unitary, element_wire,
    finish_recipe, surface_count, CnotImpl, ComponentCatalog, Element, ElementKind, Recipe,
};
use crate::sim::simulate_unitary;
use crate::synth::{circuit_unitary, AbstractCircuit, Wire};

/// A refit is accepted when the Frobenius residual (phase included) is
/// below this.
const FIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
enum Item {
    Fixed(Element),
    Var(ElementKind, f64),
}

fn lift(kind: ElementKind, j: &Mat2) -> Mat4 {
    let i = Mat2::identity();
    match element_wire(kind) {
        Some(Wire::Pol) => kron(j, &i),
        _ => kron(&i, j),
    }
}

fn item_matrix(item: &Item, angle: Option<f64>) -> Mat4 {
    match *item {
        Item::Fixed(e) => *element_unitary(&e).matrix(),
        Item::Var(k, a) => lift(k, &element_jones(k, angle.unwrap_or(a))),
    }
}

struct Problem<'a> {
    items: &'a [Item],
    target: &'a Mat4,
}

impl Problem<'_> {
    fn var_indices(&self) -> Vec<usize> {
        (0..self.items.len()).filter(|i| matches!(self.items[*i], Item::Var(..))).collect()
    }

    fn matrices(&self, p: &[f64], vars: &[usize]) -> Vec<Mat4> {
        let mut angle_of = vec![None; self.items.len()];
        for (j, i) in vars.iter().enumerate() {
            angle_of[*i] = Some(p[j]);
        }
        self.items.iter().zip(angle_of).map(|(it, a)| item_matrix(it, a)).collect()
    }

    fn unitary(&self, p: &[f64], vars: &[usize]) -> Mat4 {
        let mut acc = Mat4::identity();
        for m in self.matrices(p, vars) {
            acc = m * acc;
        }
        acc * cis(p[vars.len()])
    }

    fn residual(&self, p: &[f64], vars: &[usize]) -> DVector<f64> {
        let d = self.unitary(p, vars) - self.target;
        DVector::from_iterator(32, d.iter().flat_map(|z| [z.re, z.im]))
    }

    fn jacobian(&self, p: &[f64], vars: &[usize]) -> DMatrix<f64> {
        let n = self.items.len();
        let mats = self.matrices(p, vars);
        let mut before = vec![Mat4::identity(); n + 1];
        for i in 0..n {
            before[i + 1] = mats[i] * before[i];
        }
        let mut after = vec![Mat4::identity(); n + 1];
        for i in (0..n).rev() {
            after[i] = after[i + 1] * mats[i];
        }
        let phase = cis(p[vars.len()]);
        let mut jac = DMatrix::zeros(32, vars.len() + 1);
        for (j, i) in vars.iter().enumerate() {
            let Item::Var(k, _) = self.items[*i] else { unreachable!() };
            let d = after[i + 1] * lift(k, &element_jones_derivative(k, p[j])) * before[*i] * phase;
            for (r, z) in d.iter().enumerate() {
                jac[(2 * r, j)] = z.re;
                jac[(2 * r + 1, j)] = z.im;
            }
        }
        let full = before[n] * phase * c(0., 1.);
        for (r, z) in full.iter().enumerate() {
            jac[(2 * r, vars.len())] = z.re;
            jac[(2 * r + 1, vars.len())] = z.im;
        }
        jac
    }

    /// Levenberg–Marquardt from `p`; returns the parameters and the residual.
    fn fit(&self, mut p: Vec<f64>) -> (Vec<f64>, f64) {
        let vars = self.var_indices();
        // Start from the best phase for the starting angles; a phase off by
        // π sits on a stationary point.
        p[vars.len()] = 0.0;
        p[vars.len()] = (self.unitary(&p, &vars).adjoint() * self.target).trace().arg();
        let mut r = self.residual(&p, &vars);
        let mut cost = r.norm_squared();
        let mut mu = 1e-3;
        for _ in 0..150 {
            if cost < 1e-30 {
                break;
            }
            let jac = self.jacobian(&p, &vars);
            let jtj = jac.transpose() * &jac;
            let g = jac.transpose() * &r;
            let mut improved = false;
            for _ in 0..10 {
                let mut a = jtj.clone();
                for k in 0..a.nrows() {
                    a[(k, k)] += mu * (1.0 + jtj[(k, k)]);
                }
                let Some(step) = a.cholesky().map(|ch| ch.solve(&(-&g))) else {
                    mu *= 4.0;
                    continue;
                };
                let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
                let tr = self.residual(&trial, &vars);
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
}

fn params_of(items: &[Item], phase: f64) -> Vec<f64> {
    let mut p: Vec<f64> = items.iter().filter_map(|it| if let Item::Var(_, a) = it { Some(*a) } else { None }).collect();
    p.push(phase);
    p
}

fn with_params(items: &[Item], p: &[f64]) -> Vec<Item> {
    let mut j = 0;
    items
        .iter()
        .map(|it| match *it {
            Item::Var(k, _) => {
                j += 1;
                Item::Var(k, p[j - 1])
            }
            fixed => fixed,
        })
        .collect()
}

/// Candidate edits of `items`, largest saving first: drop any subset of one
/// qubit's elements between two interferometers, or swap one element for a
/// cheaper kind on the same qubit, or drop a same-qubit pair from two
/// different layers. The flag marks single-element edits.
fn moves(items: &[Item], catalog: &ComponentCatalog) -> Vec<(Vec<Item>, bool)> {
    let mut out: Vec<(u32, usize, Vec<Item>, bool)> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut layer_start = 0;
    for end in (0..=items.len()).filter(|&i| i == items.len() || matches!(items[i], Item::Fixed(_))) {
        for wire in [Wire::Pol, Wire::Oam] {
            let group: Vec<usize> = (layer_start..end)
                .filter(|&i| matches!(items[i], Item::Var(k, _) if element_wire(k) == Some(wire)))
                .collect();
            if !group.is_empty() {
                groups.push(group);
            }
        }
        layer_start = end + 1;
    }
    for group in &groups {
        for subset in 1..1u32 << group.len().min(6) {
            let drop: Vec<usize> = (0..group.len()).filter(|b| subset >> b & 1 == 1).map(|b| group[b]).collect();
            let saving = drop
                .iter()
                .map(|&i| match items[i] {
                    Item::Var(k, _) => catalog.surfaces_of(k),
                    Item::Fixed(_) => 0,
                })
                .sum();
            let kept = items.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, it)| *it).collect();
            out.push((saving, out.len(), kept, drop.len() == 1));
        }
    }
    // Pairs on one qubit across an interferometer, e.g. two Z's that commute
    // through a control.
    for (gi, ga) in groups.iter().enumerate() {
        for gb in &groups[gi + 1..] {
            let wire = |i: usize| match items[i] {
                Item::Var(k, _) => element_wire(k),
                Item::Fixed(_) => None,
            };
            if wire(ga[0]) != wire(gb[0]) {
                continue;
            }
            for &i in ga {
                for &j in gb {
                    let saving = [i, j]
                        .iter()
                        .map(|&x| match items[x] {
                            Item::Var(k, _) => catalog.surfaces_of(k),
                            Item::Fixed(_) => 0,
                        })
                        .sum();
                    let kept = items.iter().enumerate().filter(|(x, _)| *x != i && *x != j).map(|(_, it)| *it).collect();
                    out.push((saving, out.len(), kept, false));
                }
            }
        }
    }
    for (i, it) in items.iter().enumerate() {
        let Item::Var(k, a) = *it else { continue };
        let own = catalog.surfaces_of(k);
        for other in ElementKind::ALL {
            if other != k && element_wire(other) == element_wire(k) && catalog.surfaces_of(other) < own {
                let mut swapped = items.to_vec();
                swapped[i] = Item::Var(other, a);
                out.push((own - catalog.surfaces_of(other), out.len(), swapped, true));
            }
        }
    }
    out.sort_by_key(|(saving, order, _, _)| (std::cmp::Reverse(*saving), *order));
    out.into_iter().map(|(_, _, m, single)| (m, single)).collect()
}

/// Removes elements from `recipe` while it still realizes `target` exactly.
/// `restarts` random restarts are tried per candidate edit after the warm
/// start fails. Deterministic for a given `seed`.
pub fn reduce_surfaces(recipe: &Recipe, target: &Unitary4, restarts: usize, seed: u64) -> Recipe {
    let catalog = &recipe.catalog;
    let mut phase = recipe.phase.radians();
    let mut items: Vec<Item> = Vec::new();
    for e in &recipe.elements {
        match *e {
            Element::PolPhase { phi_rad } => phase += phi_rad,
            e if e.is_cnot() => items.push(Item::Fixed(e)),
            e => items.push(Item::Var(e.kind(), e.parameter().expect("single-qubit element"))),
        }
    }
    let target_m = *target.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Warm starts for every edit first; random restarts, for single-element
    // edits only, once none of them goes through.
    'search: loop {
        let candidates = moves(&items, catalog);
        for cold in [false, true] {
            for (candidate, single) in &candidates {
                if cold && !single {
                    continue;
                }
                let problem = Problem { items: candidate, target: &target_m };
                let warm = params_of(candidate, phase);
                let starts: Vec<Vec<f64>> = if cold {
                    (0..restarts)
                        .map(|_| {
                            let mut p: Vec<f64> = warm.iter().map(|_| rng.random_range(0.0..PI)).collect();
                            *p.last_mut().expect("phase slot") = warm[warm.len() - 1];
                            p
                        })
                        .collect()
                } else {
                    vec![warm]
                };
                for start in starts {
                    let (p, res) = problem.fit(start);
                    if res < FIT_TOL {
                        items = with_params(candidate, &p);
                        phase = p[p.len() - 1];
                        continue 'search;
                    }
                }
            }
        }
        break;
    }

    let elements: Vec<Element> = items
        .iter()
        .map(|it| match *it {
            Item::Fixed(e) => e,
            Item::Var(k, a) => k.with_angle(a),
        })
        .collect();
    let out = finish_recipe(elements, catalog, target, recipe.numerically_synthesized);
    let sim = simulate_unitary(&out);
    if phase_distance(&sim, target) < 1e-10 && surface_count(&out) <= surface_count(recipe) {
        out
    } else {
        recipe.clone()
    }
}

/// Restarts per candidate edit used by [`compile_optimized`]: more for a
/// single fixed assignment, fewer when sweeping all of them.
const FIXED_RESTARTS: usize = 12;
const SWEEP_RESTARTS: usize = 4;
const SEED: u64 = 0x5eed_f5a9;
/// Up to this many CNOTs `Auto` reduces every assignment, not just the
/// cheapest plain one.
const FULL_SEARCH_CNOTS: usize = 3;

/// [`compile`](crate::photonic::compile) followed by [`reduce_surfaces`].
/// Under `Auto` with few CNOTs every interferometer assignment is reduced and
/// the cheapest result wins; the plain ranking is a poor predictor of what
/// reduction achieves.
pub fn compile_optimized(c: &AbstractCircuit, how: CnotImpl, catalog: &ComponentCatalog) -> Result<Recipe> {
    let target = circuit_unitary(c);
    let n = c.cnot_count();
    if how != CnotImpl::Auto || n > FULL_SEARCH_CNOTS {
        let plain = compile(c, how, catalog)?;
        return Ok(reduce_surfaces(&plain, &target, FIXED_RESTARTS, SEED));
    }
    let mut best: Option<Recipe> = None;
    for mask in (0..1u32 << n).rev() {
        let choice: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let r = reduce_surfaces(&compile_assignment(c, &choice, catalog)?, &target, SWEEP_RESTARTS, SEED);
        let key = (surface_count(&r), r.elements.len());
        if best.as_ref().is_none_or(|b| key < (surface_count(b), b.elements.len())) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one assignment"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::swap;
    use crate::matrix::random_u4;
    use crate::synth::synth_u4;

    #[test]
    fn reduction_is_exact_and_never_worse() {
        let catalog = ComponentCatalog::default();
        for seed in 0..4 {
            let u = random_u4(seed);
            let plain = compile(&synth_u4(&u).unwrap(), CnotImpl::Sagnac, &catalog).unwrap();
            let r = reduce_surfaces(&plain, &u, 2, seed);
            assert!(surface_count(&r) <= surface_count(&plain));
            assert!(phase_distance(&simulate_unitary(&r), &u) < 1e-10);
        }
    }

    #[test]
    fn optimized_swap() {
        let c = synth_u4(&swap()).unwrap();
        let r = compile_optimized(&c, CnotImpl::Auto, &ComponentCatalog::default()).unwrap();
        assert_eq!(r.cnot_count(), 3);
        assert!(surface_count(&r) <= 22, "{}", surface_count(&r));
        assert!(phase_distance(&simulate_unitary(&r), &swap()) < 1e-10);
    }
}
