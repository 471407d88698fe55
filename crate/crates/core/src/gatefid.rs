//! Gate fidelity model.
//!
//! `F(g, k)` is the average gate fidelity of the best approximation of `g` by
//! a circuit with `k` CNOTs and arbitrary single-qubit gates in between. For
//! `k ≤ 2` it follows from the gate's canonical coordinates `(a, b, c)`:
//!
//! | k | best `|Tr|`                                                   |
//! |---|---------------------------------------------------------------|
//! | 0 | `4 |cos a cos b cos c + i sin a sin b sin c|`                 |
//! | 1 | `4 |cos(π/4−a) cos b cos c + i sin(π/4−a) sin b sin c|`       |
//! | 2 | `4 |cos c|`                                                   |
//!
//! and `F(g, 3) = 1`. Rather than reducing `(a, b, c)` into the Weyl chamber
//! we evaluate every representative produced by the spectrum of the magic-basis
//! invariant and keep the best trace: each representative is reachable from
//! `g` by local gates, so each is achievable, and the chamber point attains
//! the optimum.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
use std::path::Path;

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::circuit::LayeredCircuit;
use crate::error::{Error, Result};
use crate::gates::{self, Mat4, C64};
use crate::hwgraph::HardwareGraph;

/// Maximum CNOT count considered per gate.
pub const MAX_CNOTS: usize = 3;

/// `(d + |t|²) / (d (d + 1))` with `d = 4`.
pub fn trace_fidelity(trace: C64) -> f64 {
    (4.0 + trace.norm_sqr()) / 20.0
}

/// Average gate fidelity between a target and an implementation.
pub fn avg_gate_fidelity(target: &Mat4, u: &Mat4) -> Result<f64> {
    for m in [target, u] {
        let dev = gates::unitarity_deviation(m);
        if dev > 1e-6 {
            return Err(Error::NotUnitary(dev));
        }
    }
    Ok(trace_fidelity((target * u.adjoint()).trace()))
}

fn magic_basis() -> Mat4 {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let ih = C64::new(0.0, FRAC_1_SQRT_2);
    let z = C64::new(0.0, 0.0);
    // Columns: (|00⟩+|11⟩), i(|00⟩−|11⟩), i(|01⟩+|10⟩), (|01⟩−|10⟩), all /√2.
    Matrix4::new(
        h, ih, z, z, //
        z, z, ih, h, //
        z, z, ih, -h, //
        h, -ih, z, z,
    )
}

/// Half-phases `λ_j` of the spectrum of `Uᵦᵀ Uᵦ` for `U` scaled to unit
/// determinant, where `Uᵦ` is `U` in the magic basis.
fn invariant_phases(u: &Mat4) -> [f64; 4] {
    let det = u.determinant();
    let scale = C64::from_polar(1.0, -det.arg() / 4.0);
    let b = magic_basis();
    let ub = b.adjoint() * (u * scale) * b;
    let m = ub.transpose() * ub;
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    // M is symmetric and unitary, so its real and imaginary parts commute and
    // a generic real combination shares their eigenvectors.
    for theta in [0.378_193_4f64, 1.137_214_1, 2.091_455_7, 0.05, 2.9] {
        let p = re * theta.cos() + im * theta.sin();
        let p = (p + p.transpose()) * 0.5;
        let mut vecs = SymmetricEigen::new(p).eigenvectors;
        if vecs.determinant() < 0.0 {
            vecs.column_mut(0).neg_mut();
        }
        let o = vecs.map(|x| C64::new(x, 0.0));
        let d = o.transpose() * m * o;
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| d[(i, j)].norm())
            .fold(0.0, f64::max);
        if off < 1e-7 {
            return std::array::from_fn(|j| d[(j, j)].arg() / 2.0);
        }
    }
    // Fall back to the diagonal of the last attempt; only reachable for
    // badly non-unitary input.
    let d = m.diagonal();
    std::array::from_fn(|j| d[j].arg() / 2.0)
}

const PERMS: [[usize; 4]; 24] = {
    let mut out = [[0; 4]; 24];
    let mut k = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                let mut d = 0;
                while d < 4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out[k] = [a, b, c, d];
                        k += 1;
                    }
                    d += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
};

/// Best achievable `|Tr(U† V)|` over circuits `V` with 0, 1 and 2 CNOTs.
pub fn best_traces(u: &Mat4) -> [f64; 3] {
    let lam = invariant_phases(u);
    let mut best = [0.0f64; 3];
    for perm in PERMS {
        for shift in 0..256usize {
            let mut l = [0.0; 4];
            let mut sum = 0.0;
            for j in 0..4 {
                let n = ((shift >> (2 * j)) & 3) as f64 - 1.0;
                l[j] = lam[perm[j]] + n * PI;
                sum += l[j];
            }
            // Only shifts that keep the local factors special orthogonal.
            if (sum / PI).round().rem_euclid(2.0) != 0.0 {
                continue;
            }
            let phi = sum / 4.0;
            for x in &mut l {
                *x -= phi;
            }
            let a = (l[0] + l[2]) / 2.0;
            let b = (l[1] + l[2]) / 2.0;
            let c = (l[0] + l[1]) / 2.0;
            let t0 =
                4.0 * C64::new(a.cos() * b.cos() * c.cos(), a.sin() * b.sin() * c.sin()).norm();
            let t1 = 4.0
                * C64::new(
                    (FRAC_PI_4 - a).cos() * b.cos() * c.cos(),
                    (FRAC_PI_4 - a).sin() * b.sin() * c.sin(),
                )
                .norm();
            let t2 = 4.0 * c.cos().abs();
            best[0] = best[0].max(t0);
            best[1] = best[1].max(t1);
            best[2] = best[2].max(t2);
        }
    }
    for k in 1..3 {
        best[k] = best[k].max(best[k - 1]);
    }
    best.map(|t| t.min(4.0))
}

/// `F(g, k)` for `k = 0..=3`.
pub fn fidelity_profile(u: &Mat4) -> [f64; 4] {
    let t = best_traces(u);
    [
        trace_fidelity(C64::new(t[0], 0.0)),
        trace_fidelity(C64::new(t[1], 0.0)),
        trace_fidelity(C64::new(t[2], 0.0)),
        1.0,
    ]
}

pub fn best_k_cnot_fidelity(u: &Mat4, k: usize) -> Result<f64> {
    if k > MAX_CNOTS {
        return Err(Error::CnotCountOutOfRange(k));
    }
    Ok(fidelity_profile(u)[k])
}

/// `F(g_SWAP, k)`: the gate followed by a SWAP on the same pair.
pub fn swap_merged_fidelity(u: &Mat4, k: usize) -> Result<f64> {
    best_k_cnot_fidelity(&(gates::swap() * u), k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityProfile {
    pub f: [f64; 4],
    pub f_swap: [f64; 4],
}

impl FidelityProfile {
    pub fn of(u: &Mat4) -> Self {
        FidelityProfile {
            f: fidelity_profile(u),
            f_swap: fidelity_profile(&(gates::swap() * u)),
        }
    }
}

/// `F` and `F_SWAP` tables for every gate of a circuit, indexed by gate id.
#[derive(Clone, Debug)]
pub struct FidelityModel {
    profiles: Vec<FidelityProfile>,
}

/// Optional override document: gate id → four `F` values and four `F_SWAP`
/// values, e.g. `{"0": {"f": [0.4, 1, 1, 1], "f_swap": [0.4, 0.4, 1, 1]}}`.
pub type FidelityOverrides = BTreeMap<usize, FidelityProfile>;

impl FidelityModel {
    pub fn from_circuit(c: &LayeredCircuit) -> Self {
        let mut profiles = vec![
            FidelityProfile {
                f: [1.0; 4],
                f_swap: [1.0; 4],
            };
            c.gate_id_bound()
        ];
        for g in c.gates() {
            profiles[g.id] = FidelityProfile::of(&g.unitary);
        }
        FidelityModel { profiles }
    }

    pub fn with_overrides(mut self, overrides: &FidelityOverrides) -> Result<Self> {
        for (&id, p) in overrides {
            let slot = self
                .profiles
                .get_mut(id)
                .ok_or(Error::UnknownGateOverride(id))?;
            for v in p.f.iter().chain(&p.f_swap) {
                if !(0.0..=1.0).contains(v) {
                    return Err(Error::Config(format!(
                        "fidelity {v} for gate {id} outside [0, 1]"
                    )));
                }
            }
            *slot = *p;
        }
        Ok(self)
    }

    pub fn load_overrides(path: impl AsRef<Path>) -> Result<FidelityOverrides> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn profile(&self, gate: usize) -> &FidelityProfile {
        &self.profiles[gate]
    }
}

/// Best CNOT counts and success probabilities for one gate on one edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatePlacementCost {
    pub n: usize,
    pub p_star: f64,
    pub n_swap: usize,
    pub p_star_swap: f64,
}

impl GatePlacementCost {
    /// `−ln P*`, or `−ln P*_SWAP` for a merged swap.
    pub fn log_cost(&self, merged: bool) -> f64 {
        if merged {
            -self.p_star_swap.ln()
        } else {
            -self.p_star.ln()
        }
    }

    pub fn cnots(&self, merged: bool) -> usize {
        if merged {
            self.n_swap
        } else {
            self.n
        }
    }
}

fn best_count(f: &[f64; 4], beta: f64) -> (usize, f64) {
    let mut best = (0, f[0]);
    for (k, &fk) in f.iter().enumerate().skip(1) {
        let p = fk * beta.powi(k as i32);
        if p > best.1 {
            best = (k, p);
        }
    }
    best
}

/// `n(g, e) = argmax_k F(g, k) βᵏ` and the matching success probabilities;
/// ties go to fewer CNOTs.
pub fn placement_cost(profile: &FidelityProfile, beta: f64) -> GatePlacementCost {
    let (n, p_star) = best_count(&profile.f, beta);
    let (n_swap, p_star_swap) = best_count(&profile.f_swap, beta);
    GatePlacementCost {
        n,
        p_star,
        n_swap,
        p_star_swap,
    }
}

/// Placement costs for every (gate, edge) pair. Filled once, then read-only.
#[derive(Clone, Debug)]
pub struct PlacementTable {
    num_edges: usize,
    costs: Vec<GatePlacementCost>,
    swap_log_cost: Vec<f64>,
}

impl PlacementTable {
    pub fn new(model: &FidelityModel, graph: &HardwareGraph) -> Self {
        let num_edges = graph.edges().len();
        let mut costs = Vec::with_capacity(model.profiles.len() * num_edges);
        for p in &model.profiles {
            for e in 0..num_edges {
                costs.push(placement_cost(p, graph.beta(e)));
            }
        }
        let swap_log_cost = (0..num_edges).map(|e| -3.0 * graph.beta(e).ln()).collect();
        PlacementTable {
            num_edges,
            costs,
            swap_log_cost,
        }
    }

    pub fn get(&self, gate: usize, edge: usize) -> &GatePlacementCost {
        &self.costs[gate * self.num_edges + edge]
    }

    /// `−3 ln β_e`, the cost of a standalone SWAP.
    pub fn swap_cost(&self, edge: usize) -> f64 {
        self.swap_log_cost[edge]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{cx, identity, iswap, kron, su2, swap};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn avg_fidelity_cases() {
        assert!(close(avg_gate_fidelity(&cx(), &cx()).unwrap(), 1.0, 1e-15));
        assert_eq!(avg_gate_fidelity(&cx(), &identity()).unwrap(), 0.4);
        let ph = cx() * C64::from_polar(1.0, 1.234);
        assert!(close(avg_gate_fidelity(&ph, &cx()).unwrap(), 1.0, 1e-12));
        let bad = cx() * C64::new(2.0, 0.0);
        assert!(avg_gate_fidelity(&bad, &cx()).is_err());
    }

    #[test]
    fn known_profiles() {
        let p = fidelity_profile(&cx());
        assert!(close(p[0], 0.6, 1e-12), "{p:?}");
        assert!(close(p[1], 1.0, 1e-12));
        let s = fidelity_profile(&swap());
        assert!(close(s[0], 0.4, 1e-12), "{s:?}");
        assert!(close(s[1], 0.4, 1e-12));
        assert!(close(s[2], 0.6, 1e-12));
        assert_eq!(s[3], 1.0);
        let i = fidelity_profile(&identity());
        assert!(close(i[0], 1.0, 1e-12));
        let w = fidelity_profile(&iswap());
        assert!(close(w[2], 1.0, 1e-12));
        assert!(best_k_cnot_fidelity(&cx(), 4).is_err());
        assert!(swap_merged_fidelity(&cx(), 7).is_err());
    }

    #[test]
    fn swap_merges() {
        assert!(close(swap_merged_fidelity(&swap(), 0).unwrap(), 1.0, 1e-12));
        assert!(close(swap_merged_fidelity(&cx(), 2).unwrap(), 1.0, 1e-12));
        assert!(swap_merged_fidelity(&cx(), 1).unwrap() < 0.99);
    }

    #[test]
    fn local_invariance() {
        let u = iswap() * cx() * kron(&su2(0.4, 0.2, 1.3, 0.0), &su2(2.0, -1.0, 0.5, 0.0)) * cx();
        let l = kron(&su2(1.1, 0.3, -0.7, 0.4), &su2(0.2, 2.2, 0.1, 0.0));
        let r = kron(&su2(2.5, -0.3, 0.9, 0.0), &su2(1.7, 1.0, 1.0, -0.3));
        let a = fidelity_profile(&u);
        let b = fidelity_profile(&(l * u * r));
        for k in 0..4 {
            assert!(close(a[k], b[k], 1e-8), "{a:?} {b:?}");
        }
    }

    #[test]
    fn placement_costs() {
        let beta = 0.9936;
        let id = placement_cost(&FidelityProfile::of(&identity()), beta);
        assert_eq!((id.n, id.p_star), (0, 1.0));
        let c = placement_cost(&FidelityProfile::of(&cx()), beta);
        assert_eq!(c.n, 1);
        assert!(close(c.p_star, beta, 1e-12));
        assert_eq!(c.n_swap, 2);
        assert!(close(c.p_star_swap, beta * beta, 1e-12));
        let s = placement_cost(&FidelityProfile::of(&swap()), beta);
        assert_eq!((s.n, s.n_swap), (3, 0));
        assert!(close(s.log_cost(false), -3.0 * beta.ln(), 1e-12));
        // Equal products pick fewer CNOTs.
        let tie = FidelityProfile {
            f: [0.9, 0.9, 0.9, 0.9],
            f_swap: [1.0; 4],
        };
        assert_eq!(placement_cost(&tie, 1.0).n, 0);
    }

    #[test]
    fn overrides() {
        let c = crate::circuit::example_circuit(None);
        let mut o = FidelityOverrides::new();
        o.insert(
            2,
            FidelityProfile {
                f: [0.5, 0.9, 1.0, 1.0],
                f_swap: [0.1, 0.2, 0.3, 1.0],
            },
        );
        let m = FidelityModel::from_circuit(&c).with_overrides(&o).unwrap();
        assert_eq!(m.profile(2).f[1], 0.9);
        o.insert(99, *m.profile(0));
        assert!(FidelityModel::from_circuit(&c).with_overrides(&o).is_err());
        let json = r#"{"1": {"f": [0.4, 1, 1, 1], "f_swap": [0.4, 0.4, 1, 1]}}"#;
        let parsed: FidelityOverrides = serde_json::from_str(json).unwrap();
        assert_eq!(parsed[&1].f_swap[2], 1.0);
    }
}
