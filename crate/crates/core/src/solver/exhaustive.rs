//! Dynamic program over complete layouts, used as a validation oracle.

use std::collections::HashMap;

use crate::bipmodel::ObjectiveKind;
use crate::circuit::LayeredCircuit;
use crate::error::{Error, Result};
use crate::extract::{Op, RoutedCircuit};
use crate::gatefid::{FidelityModel, PlacementTable};
use crate::hwgraph::HardwareGraph;

#[derive(Clone, Copy, Debug)]
pub struct ExhaustiveLimits {
    pub max_nodes: usize,
    pub max_steps: usize,
}

impl Default for ExhaustiveLimits {
    fn default() -> Self {
        ExhaustiveLimits {
            max_nodes: 6,
            max_steps: 32,
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<u8>> {
    fn go(cur: &mut Vec<u8>, used: &mut [bool], out: &mut Vec<Vec<u8>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                cur.push(k as u8);
                go(cur, used, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

struct Oracle<'a> {
    c: &'a LayeredCircuit,
    g: &'a HardwareGraph,
    table: PlacementTable,
    kind: ObjectiveKind,
    /// Gate index within its step touching each qubit.
    slot: Vec<Vec<Option<usize>>>,
    matchings: Vec<Vec<usize>>,
}

impl Oracle<'_> {
    fn valid(&self, t: usize, s: &[u8]) -> bool {
        self.c
            .group(t)
            .iter()
            .all(|gate| self.g.has_edge(s[gate.p] as usize, s[gate.q] as usize))
    }

    fn allowed(&self, t: usize, inv: &[u8], matching: &[usize]) -> bool {
        matching.iter().all(|&e| {
            let edge = self.g.edges()[e];
            let (a, b) = (inv[edge.0] as usize, inv[edge.1] as usize);
            match (self.slot[t][a], self.slot[t][b]) {
                (None, None) => true,
                (Some(x), Some(y)) => x == y,
                _ => false,
            }
        })
    }

    /// Cost charged at step `t` given the swaps performed after it.
    fn step_cost(&self, t: usize, s: &[u8], inv: &[u8], matching: &[usize]) -> f64 {
        let m = self.c.num_steps();
        match self.kind {
            ObjectiveKind::Error => {
                let mut cost = 0.0;
                for gate in self.c.group(t) {
                    let e = self
                        .g
                        .edge_index(s[gate.p] as usize, s[gate.q] as usize)
                        .unwrap();
                    let merged = matching.contains(&e);
                    cost += self.table.get(gate.id, e).log_cost(merged);
                }
                for &e in matching {
                    let edge = self.g.edges()[e];
                    if self.slot[t][inv[edge.0] as usize].is_none() {
                        let half = -1.5 * self.g.beta(e).ln();
                        cost += half + half;
                    }
                }
                cost
            }
            ObjectiveKind::Depth => {
                (self.c.is_dummy(t) && t + 1 < m && !matching.is_empty()) as u8 as f64
            }
            ObjectiveKind::Crosstalk => {
                let mut used: Vec<usize> = matching.to_vec();
                for gate in self.c.group(t) {
                    used.push(
                        self.g
                            .edge_index(s[gate.p] as usize, s[gate.q] as usize)
                            .unwrap(),
                    );
                }
                self.g
                    .crosstalk_pairs()
                    .iter()
                    .filter(|(a, b)| used.contains(a) && used.contains(b))
                    .count() as f64
            }
        }
    }

    fn ops(&self, t: usize, s: &[u8], inv: &[u8], matching: &[usize]) -> Vec<Op> {
        let mut ops = Vec::new();
        for gate in self.c.group(t) {
            let (from, to) = (s[gate.p] as usize, s[gate.q] as usize);
            let e = self.g.edge_index(from, to).unwrap();
            let merged = matching.contains(&e);
            ops.push(Op::Gate {
                gate: gate.id,
                from,
                to,
                cnots: self.table.get(gate.id, e).cnots(merged),
                merged_swap: merged,
            });
        }
        for &e in matching {
            let edge = self.g.edges()[e];
            if self.slot[t][inv[edge.0] as usize].is_none() {
                ops.push(Op::FreeSwap {
                    a: edge.0,
                    b: edge.1,
                });
            }
        }
        ops
    }
}

/// Exact optimum of one objective by enumerating every layout at every
/// step and every set of disjoint swaps between steps.
pub fn solve_exhaustive(
    c: &LayeredCircuit,
    g: &HardwareGraph,
    fid: &FidelityModel,
    kind: ObjectiveKind,
    limits: ExhaustiveLimits,
) -> Result<(f64, RoutedCircuit)> {
    let n = g.num_nodes();
    let m = c.num_steps();
    if n > limits.max_nodes || m > limits.max_steps {
        return Err(Error::TooLarge(format!("{n} nodes, {m} steps")));
    }
    if c.num_qubits() != n {
        return Err(Error::MismatchedModel(format!(
            "{} qubits on {n} nodes",
            c.num_qubits()
        )));
    }
    c.check_fits(g)?;
    if m == 0 {
        let id: Vec<usize> = (0..n).collect();
        return Ok((
            0.0,
            RoutedCircuit {
                initial_map: id.clone(),
                steps: Vec::new(),
                final_map: id,
                origin: "exhaustive".into(),
            },
        ));
    }
    let mut slot = vec![vec![None; n]; m];
    for (t, row) in slot.iter_mut().enumerate() {
        for (k, gate) in c.group(t).iter().enumerate() {
            row[gate.p] = Some(k);
            row[gate.q] = Some(k);
        }
    }
    let oracle = Oracle {
        c,
        g,
        table: PlacementTable::new(fid, g),
        kind,
        slot,
        matchings: g.matchings(),
    };
    let perms = permutations(n);
    let index: HashMap<Vec<u8>, usize> = perms
        .iter()
        .enumerate()
        .map(|(k, p)| (p.clone(), k))
        .collect();
    let invs: Vec<Vec<u8>> = perms
        .iter()
        .map(|p| {
            let mut inv = vec![0u8; n];
            for (q, &i) in p.iter().enumerate() {
                inv[i as usize] = q as u8;
            }
            inv
        })
        .collect();
    let ns = perms.len();
    let mut val = vec![vec![f64::INFINITY; ns]; m];
    let mut back = vec![vec![(usize::MAX, usize::MAX); ns]; m];
    for (k, s) in perms.iter().enumerate() {
        if oracle.valid(0, s) {
            val[0][k] = 0.0;
        }
    }
    for t in 0..m - 1 {
        for k in 0..ns {
            let base = val[t][k];
            if !base.is_finite() {
                continue;
            }
            let (s, inv) = (&perms[k], &invs[k]);
            for (mi, matching) in oracle.matchings.iter().enumerate() {
                if !oracle.allowed(t, inv, matching) {
                    continue;
                }
                let mut next = s.clone();
                for &e in matching {
                    let edge = g.edges()[e];
                    let (a, b) = (inv[edge.0] as usize, inv[edge.1] as usize);
                    next.swap(a, b);
                }
                if !oracle.valid(t + 1, &next) {
                    continue;
                }
                let k2 = index[&next];
                let v = base + oracle.step_cost(t, s, inv, matching);
                if v < val[t + 1][k2] {
                    val[t + 1][k2] = v;
                    back[t + 1][k2] = (k, mi);
                }
            }
        }
    }
    let (best_k, best) = (0..ns)
        .filter(|&k| val[m - 1][k].is_finite())
        .map(|k| {
            (
                k,
                val[m - 1][k] + oracle.step_cost(m - 1, &perms[k], &invs[k], &[]),
            )
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::ProblemInfeasible)?;

    let mut states = vec![best_k; m];
    let mut moves = vec![usize::MAX; m];
    for t in (1..m).rev() {
        let (prev, mi) = back[t][states[t]];
        states[t - 1] = prev;
        moves[t - 1] = mi;
    }
    let empty: Vec<usize> = Vec::new();
    let steps = (0..m)
        .map(|t| {
            let k = states[t];
            let matching = if t + 1 < m {
                &oracle.matchings[moves[t]]
            } else {
                &empty
            };
            oracle.ops(t, &perms[k], &invs[k], matching)
        })
        .collect();
    let to_map = |k: usize| perms[k].iter().map(|&i| i as usize).collect::<Vec<_>>();
    Ok((
        best,
        RoutedCircuit {
            initial_map: to_map(states[0]),
            steps,
            final_map: to_map(states[m - 1]),
            origin: "exhaustive".into(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::hwgraph::Builtin;

    #[test]
    fn adjacent_gate_needs_no_swap() {
        let c = LayeredCircuit::layerize(2, vec![Gate::cx(0, 1)]).unwrap();
        let g = HardwareGraph::builtin(Builtin::Line, 2).unwrap();
        let fid = FidelityModel::from_circuit(&c);
        let (v, rc) =
            solve_exhaustive(&c, &g, &fid, ObjectiveKind::Error, Default::default()).unwrap();
        assert!((v + g.beta(0).ln()).abs() < 1e-12);
        assert_eq!(rc.free_swaps(), 0);
    }

    #[test]
    fn far_gate_uses_one_dummy() {
        // Gate (0,2) after gates that pin qubits 0 and 2 apart on line-4.
        let gates = vec![Gate::cx(0, 1), Gate::cx(2, 3), Gate::cx(0, 2)];
        let c = LayeredCircuit::layerize(4, gates)
            .unwrap()
            .insert_dummy_steps(1);
        let g = HardwareGraph::builtin(Builtin::Line, 4).unwrap();
        let fid = FidelityModel::from_circuit(&c);
        let (d, _) =
            solve_exhaustive(&c, &g, &fid, ObjectiveKind::Depth, Default::default()).unwrap();
        assert_eq!(d, 0.0);
        let (e, rc) =
            solve_exhaustive(&c, &g, &fid, ObjectiveKind::Error, Default::default()).unwrap();
        assert!(e > 0.0);
        assert_eq!(rc.steps.len(), 3);
    }

    #[test]
    fn rejects_large() {
        let c = LayeredCircuit::from_groups(8, vec![vec![]]).unwrap();
        let g = HardwareGraph::builtin(Builtin::Line, 8).unwrap();
        let fid = FidelityModel::from_circuit(&c);
        assert!(matches!(
            solve_exhaustive(&c, &g, &fid, ObjectiveKind::Error, Default::default()),
            Err(Error::TooLarge(_))
        ));
    }
}
