//! Routed circuits: decoding from model assignments, statistics and
//! correctness checks.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bipmodel::{Model, VariableSpace};
use crate::circuit::{LayeredCircuit, QubitId};
use crate::error::{Error, Result};
use crate::gatefid::PlacementTable;
use crate::gates;
use crate::hwgraph::{HardwareGraph, NodeId};
use crate::sim::Unitary;

/// One placed operation. Free swaps happen after the gates of their step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Gate {
        gate: usize,
        from: NodeId,
        to: NodeId,
        cnots: usize,
        merged_swap: bool,
    },
    FreeSwap {
        a: NodeId,
        b: NodeId,
    },
}

impl Op {
    pub fn nodes(&self) -> (NodeId, NodeId) {
        match *self {
            Op::Gate { from, to, .. } => (from, to),
            Op::FreeSwap { a, b } => (a, b),
        }
    }

    /// Whether the op exchanges the residents of its two nodes.
    pub fn swaps(&self) -> bool {
        match self {
            Op::Gate { merged_swap, .. } => *merged_swap,
            Op::FreeSwap { .. } => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutedCircuit {
    /// Node hosting each logical qubit before the first step.
    pub initial_map: Vec<NodeId>,
    pub steps: Vec<Vec<Op>>,
    pub final_map: Vec<NodeId>,
    /// Which algorithm produced the routing.
    pub origin: String,
}

impl RoutedCircuit {
    /// Layout in force at each step, plus the one after the last step.
    pub fn maps(&self) -> Vec<Vec<NodeId>> {
        let mut cur = self.initial_map.clone();
        let mut out = vec![cur.clone()];
        for step in &self.steps {
            apply_swaps(&mut cur, step);
            out.push(cur.clone());
        }
        out
    }

    pub fn gate_ops(&self) -> impl Iterator<Item = (usize, &Op)> {
        self.steps
            .iter()
            .enumerate()
            .flat_map(|(t, s)| s.iter().map(move |op| (t, op)))
            .filter(|(_, op)| matches!(op, Op::Gate { .. }))
    }

    pub fn free_swaps(&self) -> usize {
        self.steps
            .iter()
            .flatten()
            .filter(|op| matches!(op, Op::FreeSwap { .. }))
            .count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn apply_swaps(map: &mut [NodeId], step: &[Op]) {
    for op in step.iter().filter(|op| op.swaps()) {
        let (a, b) = op.nodes();
        for n in map.iter_mut() {
            if *n == a {
                *n = b;
            } else if *n == b {
                *n = a;
            }
        }
    }
}

/// Reads a routed circuit out of a feasible assignment.
pub fn decode(model: &Model, x: &[bool], table: &PlacementTable) -> Result<RoutedCircuit> {
    let vs = model.space();
    if x.len() != vs.total() {
        return Err(Error::MismatchedModel(format!(
            "assignment has {} values for {} variables",
            x.len(),
            vs.total()
        )));
    }
    if let Some(r) = model.rows().iter().find(|r| !r.satisfied(x, 1e-9)) {
        return Err(Error::Infeasible {
            name: r.name.clone(),
            family: r.family,
            activity: r.activity(x),
            rhs: r.rhs,
        });
    }
    Ok(decode_unchecked(vs, x, table, &model_edges(vs)))
}

fn model_edges(vs: &VariableSpace) -> Vec<(NodeId, NodeId)> {
    vs.edges().iter().map(|e| (e.0, e.1)).collect()
}

fn decode_unchecked(
    vs: &VariableSpace,
    x: &[bool],
    table: &PlacementTable,
    edges: &[(NodeId, NodeId)],
) -> RoutedCircuit {
    let (nq, nv, m) = (vs.num_qubits(), vs.num_nodes(), vs.num_steps());
    let layout = |t: usize| -> Vec<NodeId> {
        (0..nq)
            .map(|q| {
                (0..nv)
                    .find(|&i| x[vs.w(q, i, t)])
                    .expect("feasible layout")
            })
            .collect()
    };
    if m == 0 {
        let id: Vec<NodeId> = (0..nq).collect();
        return RoutedCircuit {
            initial_map: id.clone(),
            steps: Vec::new(),
            final_map: id,
            origin: "bip".into(),
        };
    }
    let mut steps = Vec::with_capacity(m);
    for t in 0..m {
        let mut ops = Vec::new();
        for &k in vs.step_slots(t) {
            let slot = vs.slots()[k];
            let a = (0..vs.arcs().len())
                .find(|&a| x[vs.y(k, a)])
                .expect("gate placed");
            let arc = vs.arcs()[a];
            let merged = t + 1 < m
                && x[vs.x(slot.p, arc.from, arc.to, t).unwrap()]
                && x[vs.x(slot.q, arc.to, arc.from, t).unwrap()];
            let e = vs
                .edges()
                .iter()
                .position(|e| *e == arc.edge())
                .expect("edge");
            ops.push(Op::Gate {
                gate: slot.gate,
                from: arc.from,
                to: arc.to,
                cnots: table.get(slot.gate, e).cnots(merged),
                merged_swap: merged,
            });
        }
        if t + 1 < m {
            let free: Vec<QubitId> = (0..nq).filter(|&q| vs.slot_of(q, t).is_none()).collect();
            for &(i, j) in edges {
                let fwd = free.iter().any(|&q| x[vs.x(q, i, j, t).unwrap()]);
                let back = free.iter().any(|&q| x[vs.x(q, j, i, t).unwrap()]);
                if fwd && back {
                    ops.push(Op::FreeSwap { a: i, b: j });
                }
            }
        }
        steps.push(ops);
    }
    RoutedCircuit {
        initial_map: layout(0),
        steps,
        final_map: layout(m - 1),
        origin: "bip".into(),
    }
}

/// The assignment representing `rc` in `vs`. The routed circuit must use
/// the model's time steps.
pub fn encode(rc: &RoutedCircuit, vs: &VariableSpace) -> Result<Vec<bool>> {
    let m = vs.num_steps();
    if rc.steps.len() != m {
        return Err(Error::MismatchedModel(format!(
            "routed circuit has {} steps, model has {m}",
            rc.steps.len()
        )));
    }
    let mut x = vec![false; vs.total()];
    let maps = rc.maps();
    for t in 0..m {
        for (q, &i) in maps[t].iter().enumerate() {
            x[vs.w(q, i, t)] = true;
            if t + 1 < m {
                let j = maps[t + 1][q];
                let idx = vs
                    .x(q, i, j, t)
                    .ok_or_else(|| Error::MismatchedModel(format!("qubit {q} jumps {i}->{j}")))?;
                x[idx] = true;
            }
        }
        let mut used_edges = BTreeSet::new();
        let mut swapped = false;
        for op in &rc.steps[t] {
            let (a, b) = op.nodes();
            if let Some(e) = vs.edges().iter().position(|e| e.touches(a) && e.touches(b)) {
                used_edges.insert(e);
            }
            swapped |= op.swaps();
            if let Op::Gate { gate, from, to, .. } = *op {
                let k = vs
                    .step_slots(t)
                    .iter()
                    .copied()
                    .find(|&k| vs.slots()[k].gate == gate)
                    .ok_or_else(|| {
                        Error::MismatchedModel(format!("gate {gate} not at step {t}"))
                    })?;
                let a = vs
                    .arc_index(from, to)
                    .ok_or_else(|| Error::MismatchedModel(format!("no arc {from}->{to}")))?;
                x[vs.y(k, a)] = true;
            }
        }
        if let Some(z) = vs.z(t) {
            x[z] = swapped && t + 1 < m;
        }
        for &e in &used_edges {
            if let Some(u) = vs.u(e, t) {
                x[u] = true;
            }
        }
        for (k, &(a, b)) in vs.crosstalk_pairs().iter().enumerate() {
            x[vs.v(k, t)] = used_edges.contains(&a) && used_edges.contains(&b);
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub cnot_count: usize,
    /// Steps that contain at least one operation.
    pub depth_proxy: usize,
    pub error_objective_value: f64,
    pub crosstalk_count: usize,
    pub free_swaps: usize,
    pub merged_swaps: usize,
}

pub fn stats(rc: &RoutedCircuit, table: &PlacementTable, g: &HardwareGraph) -> CircuitStats {
    let mut s = CircuitStats {
        cnot_count: 0,
        depth_proxy: 0,
        error_objective_value: 0.0,
        crosstalk_count: 0,
        free_swaps: 0,
        merged_swaps: 0,
    };
    for step in &rc.steps {
        if !step.is_empty() {
            s.depth_proxy += 1;
        }
        let mut used = BTreeSet::new();
        for op in step {
            let (a, b) = op.nodes();
            let e = g.edge_index(a, b).expect("op on a hardware edge");
            used.insert(e);
            match *op {
                Op::Gate {
                    gate, merged_swap, ..
                } => {
                    let c = table.get(gate, e);
                    s.cnot_count += c.cnots(merged_swap);
                    s.error_objective_value += c.log_cost(merged_swap);
                    s.merged_swaps += merged_swap as usize;
                }
                Op::FreeSwap { .. } => {
                    s.cnot_count += 3;
                    s.free_swaps += 1;
                    s.error_objective_value += table.swap_cost(e);
                }
            }
        }
        s.crosstalk_count += g
            .crosstalk_pairs()
            .iter()
            .filter(|(a, b)| used.contains(a) && used.contains(b))
            .count();
    }
    s
}

/// Violations found by [`verify_structural`]; empty when the routing is
/// valid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub violations: Vec<String>,
}

impl StructuralReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn is_bijection(map: &[NodeId], n: usize) -> bool {
    let mut seen = vec![false; n];
    map.len() == n
        && map
            .iter()
            .all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// Checks hardware compliance, token tracking and gate coverage. When the
/// routing has as many steps as the circuit, each gate must sit in its own
/// step; otherwise per-qubit gate order must be preserved.
pub fn verify_structural(
    rc: &RoutedCircuit,
    c: &LayeredCircuit,
    g: &HardwareGraph,
) -> StructuralReport {
    let mut v = Vec::new();
    let n = g.num_nodes();
    if !is_bijection(&rc.initial_map, n) || !is_bijection(&rc.final_map, n) {
        v.push("layout is not a bijection onto the hardware nodes".to_string());
        return StructuralReport { violations: v };
    }
    let step_of: Vec<Option<usize>> = {
        let mut s = vec![None; c.gate_id_bound()];
        for t in 0..c.num_steps() {
            for gate in c.group(t) {
                s[gate.id] = Some(t);
            }
        }
        s
    };
    let by_id: Vec<Option<&crate::circuit::Gate>> = {
        let mut s = vec![None; c.gate_id_bound()];
        for gate in c.gates() {
            s[gate.id] = Some(gate);
        }
        s
    };
    let aligned = rc.steps.len() == c.num_steps();
    let mut seen = vec![0usize; c.gate_id_bound()];
    let mut last_step_of_qubit: Vec<Option<usize>> = vec![None; c.num_qubits()];
    let mut map = rc.initial_map.clone();
    for (t, step) in rc.steps.iter().enumerate() {
        let mut busy = vec![false; n];
        for op in step {
            let (a, b) = op.nodes();
            if a >= n || b >= n || !g.has_edge(a, b) {
                v.push(format!("step {t}: arc not in hardware ({a},{b})"));
                continue;
            }
            for x in [a, b] {
                if std::mem::replace(&mut busy[x], true) {
                    v.push(format!("step {t}: node {x} used twice"));
                }
            }
            let Op::Gate { gate, from, to, .. } = *op else {
                continue;
            };
            let Some(gd) = by_id.get(gate).copied().flatten() else {
                v.push(format!("step {t}: unknown gate {gate}"));
                continue;
            };
            seen[gate] += 1;
            if map[gd.p] != from || map[gd.q] != to {
                v.push(format!("step {t}: operand not resident for gate {gate}"));
            }
            if aligned && step_of[gate] != Some(t) {
                v.push(format!(
                    "gate {gate} placed at step {t}, expected {:?}",
                    step_of[gate]
                ));
            }
            let gate_step = step_of[gate].unwrap_or(0);
            for q in [gd.p, gd.q] {
                if last_step_of_qubit[q].is_some_and(|s| s > gate_step) {
                    v.push(format!("gate {gate} reordered on qubit {q}"));
                }
                last_step_of_qubit[q] = Some(gate_step);
            }
        }
        apply_swaps(&mut map, step);
    }
    for gate in c.gates() {
        if seen[gate.id] != 1 {
            v.push(format!("gate {} appears {} times", gate.id, seen[gate.id]));
        }
    }
    if map != rc.final_map {
        v.push("declared final map disagrees with token tracking".to_string());
    }
    StructuralReport { violations: v }
}

/// Largest entry deviation, up to global phase, between the routed circuit
/// preceded by the initial placement and the logical circuit followed by the
/// final placement.
pub fn verify_unitary(rc: &RoutedCircuit, c: &LayeredCircuit) -> Result<f64> {
    let n = c.num_qubits();
    if n > 8 {
        return Err(Error::TooLarge(format!(
            "{n} wires for unitary verification"
        )));
    }
    if rc.initial_map.len() != n || rc.final_map.len() != n {
        return Err(Error::MismatchedModel("layout width".into()));
    }
    let by_id: Vec<Option<&crate::circuit::Gate>> = {
        let mut s = vec![None; c.gate_id_bound()];
        for gate in c.gates() {
            s[gate.id] = Some(gate);
        }
        s
    };
    let mut routed = Unitary::permutation(&rc.initial_map);
    for step in &rc.steps {
        for op in step {
            match *op {
                Op::Gate {
                    gate,
                    from,
                    to,
                    merged_swap,
                    ..
                } => {
                    let gd =
                        by_id.get(gate).copied().flatten().ok_or_else(|| {
                            Error::MismatchedModel(format!("unknown gate {gate}"))
                        })?;
                    routed.apply2(&gd.unitary, from, to);
                    if merged_swap {
                        routed.apply2(&gates::swap(), from, to);
                    }
                }
                Op::FreeSwap { a, b } => routed.apply2(&gates::swap(), a, b),
            }
        }
    }
    let mut expected = c.unitary();
    expected.permute_wires(&rc.final_map);
    Ok(routed.distance_up_to_phase(&expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipmodel::ModelOptions;
    use crate::circuit::example_circuit;
    use crate::gatefid::FidelityModel;
    use crate::hwgraph::Builtin;

    fn one_swap_setup() -> (LayeredCircuit, HardwareGraph, Model, PlacementTable) {
        let c = LayeredCircuit::from_groups(2, vec![vec![], vec![]]).unwrap();
        let g = HardwareGraph::builtin(Builtin::Line, 2).unwrap();
        let fid = FidelityModel::from_circuit(&c);
        let model = Model::build(&c, &g, &fid, ModelOptions::default()).unwrap();
        let table = PlacementTable::new(&fid, &g);
        (c, g, model, table)
    }

    #[test]
    fn free_swap_round_trip() {
        let (c, g, model, table) = one_swap_setup();
        let rc = RoutedCircuit {
            initial_map: vec![0, 1],
            steps: vec![vec![Op::FreeSwap { a: 0, b: 1 }], vec![]],
            final_map: vec![1, 0],
            origin: "hand".into(),
        };
        assert!(verify_structural(&rc, &c, &g).is_ok());
        let x = encode(&rc, model.space()).unwrap();
        let back = decode(&model, &x, &table).unwrap();
        assert_eq!(back.steps, rc.steps);
        assert_eq!(back.final_map, rc.final_map);
        let s = stats(&rc, &table, &g);
        assert_eq!((s.cnot_count, s.free_swaps), (3, 1));
        assert!(verify_unitary(&rc, &c).unwrap() < 1e-12);
    }

    #[test]
    fn stationary_empty() {
        let (c, g, model, table) = one_swap_setup();
        let rc = RoutedCircuit {
            initial_map: vec![1, 0],
            steps: vec![vec![], vec![]],
            final_map: vec![1, 0],
            origin: "hand".into(),
        };
        let x = encode(&rc, model.space()).unwrap();
        let back = decode(&model, &x, &table).unwrap();
        assert_eq!(back.final_map, back.initial_map);
        assert!(back.steps.iter().all(Vec::is_empty));
        assert_eq!(stats(&back, &table, &g).depth_proxy, 0);
        assert!(verify_structural(&back, &c, &g).is_ok());
    }

    #[test]
    fn tampering_is_reported() {
        let c = example_circuit(None);
        let g = HardwareGraph::builtin(Builtin::Line, 4).unwrap();
        let good = RoutedCircuit {
            initial_map: vec![0, 1, 2, 3],
            steps: vec![
                vec![
                    Op::Gate {
                        gate: 0,
                        from: 0,
                        to: 1,
                        cnots: 2,
                        merged_swap: true,
                    },
                    Op::Gate {
                        gate: 1,
                        from: 2,
                        to: 3,
                        cnots: 2,
                        merged_swap: true,
                    },
                ],
                vec![Op::Gate {
                    gate: 2,
                    from: 1,
                    to: 2,
                    cnots: 2,
                    merged_swap: true,
                }],
                vec![
                    Op::Gate {
                        gate: 4,
                        from: 0,
                        to: 1,
                        cnots: 1,
                        merged_swap: false,
                    },
                    Op::Gate {
                        gate: 3,
                        from: 2,
                        to: 3,
                        cnots: 1,
                        merged_swap: false,
                    },
                ],
            ],
            final_map: vec![2, 0, 3, 1],
            origin: "hand".into(),
        };
        assert!(
            verify_structural(&good, &c, &g).is_ok(),
            "{:?}",
            verify_structural(&good, &c, &g)
        );
        assert!(verify_unitary(&good, &c).unwrap() < 1e-10);

        let mut off_edge = good.clone();
        off_edge.steps[1][0] = Op::Gate {
            gate: 2,
            from: 0,
            to: 2,
            cnots: 2,
            merged_swap: true,
        };
        let r = verify_structural(&off_edge, &c, &g);
        assert!(r
            .violations
            .iter()
            .any(|s| s.contains("arc not in hardware")));

        let mut absent = good.clone();
        absent.steps[2][0] = Op::Gate {
            gate: 4,
            from: 2,
            to: 3,
            cnots: 1,
            merged_swap: false,
        };
        absent.steps[2][1] = Op::Gate {
            gate: 3,
            from: 0,
            to: 1,
            cnots: 1,
            merged_swap: false,
        };
        let r = verify_structural(&absent, &c, &g);
        assert!(r
            .violations
            .iter()
            .any(|s| s.contains("operand not resident")));

        let mut flipped = good.clone();
        if let Op::Gate { merged_swap, .. } = &mut flipped.steps[1][0] {
            *merged_swap = false;
        }
        assert!(verify_unitary(&flipped, &c).unwrap() > 0.1);
    }

    #[test]
    fn json_round_trip() {
        let rc = RoutedCircuit {
            initial_map: vec![0, 1],
            steps: vec![vec![Op::FreeSwap { a: 0, b: 1 }]],
            final_map: vec![1, 0],
            origin: "hand".into(),
        };
        assert_eq!(
            RoutedCircuit::from_json(&rc.to_json().unwrap()).unwrap(),
            rc
        );
    }
}
