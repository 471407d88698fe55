//! Lookahead swap routing, layout search and the algorithm variants that
//! mix it with the exact model.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bipmodel::{Model, ModelOptions, ObjectiveKind};
use crate::circuit::LayeredCircuit;
use crate::error::{Error, Result};
use crate::extract::{
    decode, stats, verify_structural, CircuitStats, Op, RoutedCircuit, StructuralReport,
};
use crate::gatefid::{FidelityModel, PlacementTable};
use crate::hwgraph::{HardwareGraph, NodeId};
use crate::lexopt::{lexicographic_solve, StageValue};
use crate::solver::{SolveLimits, Status};

#[derive(Clone, Debug)]
pub struct HeuristicConfig {
    /// Number of later layers scored next to the current one.
    pub lookahead: usize,
    /// Weight ratio between consecutive lookahead layers.
    pub decay: f64,
    /// Random layout restarts.
    pub trials: usize,
    /// Forward-backward passes per restart.
    pub rounds: usize,
    pub seed: u64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            lookahead: 2,
            decay: 0.5,
            trials: 8,
            rounds: 2,
            seed: 0,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Config(format!(
                "decay {} outside (0, 1]",
                self.decay
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config(
                "at least one layout trial is required".into(),
            ));
        }
        Ok(())
    }
}

type Pair = (usize, usize);

struct Router<'a> {
    g: &'a HardwareGraph,
    cfg: &'a HeuristicConfig,
}

/// Swaps chosen before each gate layer.
struct Plan {
    /// Layout after the swaps preceding the first layer.
    initial: Vec<NodeId>,
    /// `swaps[l]` runs between gate layers `l` and `l + 1`.
    swaps: Vec<Vec<(NodeId, NodeId)>>,
    final_map: Vec<NodeId>,
}

impl Plan {
    fn swap_count(&self) -> usize {
        self.swaps.iter().map(Vec::len).sum()
    }
}

fn inverse(pos: &[NodeId]) -> Vec<usize> {
    let mut inv = vec![0; pos.len()];
    for (q, &i) in pos.iter().enumerate() {
        inv[i] = q;
    }
    inv
}

fn do_swap(pos: &mut [NodeId], inv: &mut [usize], a: NodeId, b: NodeId) {
    let (qa, qb) = (inv[a], inv[b]);
    pos[qa] = b;
    pos[qb] = a;
    inv[a] = qb;
    inv[b] = qa;
}

impl Router<'_> {
    fn front_cost(&self, pos: &[NodeId], front: &[Pair]) -> usize {
        front
            .iter()
            .map(|&(p, q)| self.g.distance(pos[p], pos[q]) - 1)
            .sum()
    }

    fn score(&self, pos: &[NodeId], front: &[Pair], ahead: &[Vec<Pair>]) -> f64 {
        let mut h = self.front_cost(pos, front) as f64;
        let mut w = 1.0;
        for layer in ahead.iter().filter(|l| !l.is_empty()) {
            w *= self.cfg.decay;
            let sum: usize = layer
                .iter()
                .map(|&(p, q)| self.g.distance(pos[p], pos[q]))
                .sum();
            h += w * sum as f64 / layer.len() as f64;
        }
        h
    }

    /// Swaps that make every pair in `front` adjacent, applied to `pos`.
    fn route_layer(
        &self,
        pos: &mut [NodeId],
        front: &[Pair],
        ahead: &[Vec<Pair>],
    ) -> Vec<(NodeId, NodeId)> {
        let n = self.g.num_nodes();
        let mut inv = inverse(pos);
        let mut swaps = Vec::new();
        let mut best = self.front_cost(pos, front);
        let mut stall = 0;
        let mut last: Option<usize> = None;
        while self.front_cost(pos, front) > 0 {
            if stall > 2 * n {
                swaps.extend(self.place_directly(pos, &mut inv, front));
                break;
            }
            let mut hot = vec![false; n];
            for &(p, q) in front {
                if self.g.distance(pos[p], pos[q]) > 1 {
                    hot[pos[p]] = true;
                    hot[pos[q]] = true;
                }
            }
            let mut choice: Option<(f64, usize)> = None;
            for (e, edge) in self.g.edges().iter().enumerate() {
                if Some(e) == last || !(hot[edge.0] || hot[edge.1]) {
                    continue;
                }
                do_swap(pos, &mut inv, edge.0, edge.1);
                let h = self.score(pos, front, ahead);
                do_swap(pos, &mut inv, edge.0, edge.1);
                if choice.is_none_or(|(bh, _)| h < bh - 1e-12) {
                    choice = Some((h, e));
                }
            }
            let Some((_, e)) = choice else {
                swaps.extend(self.place_directly(pos, &mut inv, front));
                break;
            };
            let edge = self.g.edges()[e];
            do_swap(pos, &mut inv, edge.0, edge.1);
            swaps.push((edge.0, edge.1));
            last = Some(e);
            let now = self.front_cost(pos, front);
            if now < best {
                best = now;
                stall = 0;
            } else {
                stall += 1;
            }
        }
        swaps
    }

    /// Picks disjoint target edges for `front` and moves every qubit to its
    /// target by swapping along a spanning tree. Always terminates.
    fn place_directly(
        &self,
        pos: &mut [NodeId],
        inv: &mut [usize],
        front: &[Pair],
    ) -> Vec<(NodeId, NodeId)> {
        let n = self.g.num_nodes();
        let target = self
            .greedy_targets(pos, front)
            .or_else(|| self.matching_targets(pos, front))
            .expect("layer fits a matching");
        // Remaining qubits fill the remaining nodes, nearest first.
        let mut goal: Vec<Option<NodeId>> = vec![None; n];
        let mut taken = vec![false; n];
        for (k, &(p, q)) in front.iter().enumerate() {
            let (a, b) = target[k];
            goal[p] = Some(a);
            goal[q] = Some(b);
            taken[a] = true;
            taken[b] = true;
        }
        for q in 0..n {
            if goal[q].is_none() {
                let i = (0..n)
                    .filter(|&i| !taken[i])
                    .min_by_key(|&i| (self.g.distance(pos[q], i), i))
                    .unwrap();
                goal[q] = Some(i);
                taken[i] = true;
            }
        }
        let goal_inv = inverse(&goal.iter().map(|x| x.unwrap()).collect::<Vec<_>>());

        // BFS tree from node 0; leaves are settled deepest first.
        let mut parent = vec![usize::MAX; n];
        let mut depth = vec![0usize; n];
        let mut order = vec![0];
        parent[0] = 0;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &v in self.g.neighbors(u) {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    depth[v] = depth[u] + 1;
                    order.push(v);
                }
            }
        }
        let tree_path = |mut a: NodeId, mut b: NodeId| {
            let (mut up, mut down) = (vec![a], vec![b]);
            while a != b {
                if depth[a] >= depth[b] {
                    a = parent[a];
                    up.push(a);
                } else {
                    b = parent[b];
                    down.push(b);
                }
            }
            down.pop();
            up.extend(down.into_iter().rev());
            up
        };
        let mut swaps = Vec::new();
        for &v in order.iter().rev() {
            let tok = goal_inv[v];
            let path = tree_path(pos[tok], v);
            for w in path.windows(2) {
                do_swap(pos, inv, w[0], w[1]);
                swaps.push((w[0], w[1]));
            }
        }
        swaps
    }

    fn greedy_targets(&self, pos: &[NodeId], front: &[Pair]) -> Option<Vec<(NodeId, NodeId)>> {
        let mut used = vec![false; self.g.num_nodes()];
        let mut out = vec![None; front.len()];
        for _ in 0..front.len() {
            let mut best: Option<(usize, usize, NodeId, NodeId)> = None;
            for (k, &(p, q)) in front.iter().enumerate() {
                if out[k].is_some() {
                    continue;
                }
                for edge in self.g.edges() {
                    if used[edge.0] || used[edge.1] {
                        continue;
                    }
                    for (a, b) in [(edge.0, edge.1), (edge.1, edge.0)] {
                        let c = self.g.distance(pos[p], a) + self.g.distance(pos[q], b);
                        if best.is_none_or(|x| c < x.0) {
                            best = Some((c, k, a, b));
                        }
                    }
                }
            }
            let (_, k, a, b) = best?;
            used[a] = true;
            used[b] = true;
            out[k] = Some((a, b));
        }
        out.into_iter().collect()
    }

    fn matching_targets(&self, pos: &[NodeId], front: &[Pair]) -> Option<Vec<(NodeId, NodeId)>> {
        let edges = self.g.edges();
        self.g
            .matchings()
            .into_iter()
            .filter(|m| m.len() == front.len())
            .map(|m| {
                let mut cost = 0;
                let mut out = Vec::new();
                let mut free = m.clone();
                for &(p, q) in front {
                    let (k, a, b, c) = free
                        .iter()
                        .enumerate()
                        .flat_map(|(k, &e)| {
                            let ed = edges[e];
                            [(k, ed.0, ed.1), (k, ed.1, ed.0)]
                        })
                        .map(|(k, a, b)| {
                            (
                                k,
                                a,
                                b,
                                self.g.distance(pos[p], a) + self.g.distance(pos[q], b),
                            )
                        })
                        .min_by_key(|x| x.3)
                        .unwrap();
                    free.remove(k);
                    cost += c;
                    out.push((a, b));
                }
                (cost, out)
            })
            .min_by_key(|x| x.0)
            .map(|x| x.1)
    }

    fn plan(&self, layers: &[Vec<Pair>], initial: &[NodeId]) -> Plan {
        let mut pos = initial.to_vec();
        let ahead = |l: usize| {
            layers[l + 1..]
                .iter()
                .take(self.cfg.lookahead)
                .cloned()
                .collect::<Vec<_>>()
        };
        if layers.is_empty() {
            return Plan {
                initial: pos.clone(),
                swaps: Vec::new(),
                final_map: pos,
            };
        }
        // Swaps ahead of the first layer only relabel the layout.
        self.route_layer(&mut pos, &layers[0], &ahead(0));
        let start = pos.clone();
        let mut swaps = Vec::with_capacity(layers.len().saturating_sub(1));
        for (l, layer) in layers.iter().enumerate().skip(1) {
            swaps.push(self.route_layer(&mut pos, layer, &ahead(l)));
        }
        Plan {
            initial: start,
            swaps,
            final_map: pos,
        }
    }
}

fn gate_layers(c: &LayeredCircuit) -> (Vec<usize>, Vec<Vec<Pair>>) {
    let steps: Vec<usize> = (0..c.num_steps()).filter(|&t| !c.is_dummy(t)).collect();
    let layers = steps
        .iter()
        .map(|&t| c.group(t).iter().map(|g| (g.p, g.q)).collect())
        .collect();
    (steps, layers)
}

fn check_inputs(c: &LayeredCircuit, g: &HardwareGraph) -> Result<()> {
    if c.num_qubits() != g.num_nodes() {
        return Err(Error::MismatchedModel(format!(
            "{} qubits on {} nodes; pad the circuit first",
            c.num_qubits(),
            g.num_nodes()
        )));
    }
    c.check_fits(g)
}

/// Initial layout from forward-backward passes over random starts, best by
/// swap count with ties going to the earlier trial. The first layer is
/// always executable without swaps under the returned layout.
pub fn heuristic_layout(
    c: &LayeredCircuit,
    g: &HardwareGraph,
    cfg: &HeuristicConfig,
) -> Result<Vec<NodeId>> {
    check_inputs(c, g)?;
    cfg.validate()?;
    let n = g.num_nodes();
    let (_, layers) = gate_layers(c);
    if layers.is_empty() {
        return Ok((0..n).collect());
    }
    let reversed: Vec<Vec<Pair>> = layers.iter().rev().cloned().collect();
    let router = Router { g, cfg };
    let candidates: Vec<(usize, usize, Vec<NodeId>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.seed ^ (trial as u64).wrapping_mul(0xA24B_AED4_963E_E407),
            );
            let mut start: Vec<NodeId> = (0..n).collect();
            start.shuffle(&mut rng);
            for _ in 0..cfg.rounds {
                let fwd = router.plan(&layers, &start);
                let bwd = router.plan(&reversed, &fwd.final_map);
                start = bwd.final_map;
            }
            let p = router.plan(&layers, &start);
            (p.swap_count(), trial, p.initial)
        })
        .collect();
    let best = candidates
        .into_iter()
        .min_by_key(|x| (x.0, x.1))
        .expect("at least one trial");
    Ok(best.2)
}

/// Routes `c` from `initial_map`, keeping every gate in its own step. Swaps
/// between two gate layers go into the transition after the first layer
/// when they are merged or move only idle qubits, then into the following
/// empty steps; extra steps are appended only when those run out.
pub fn heuristic_route(
    c: &LayeredCircuit,
    g: &HardwareGraph,
    initial_map: &[NodeId],
    table: &PlacementTable,
    cfg: &HeuristicConfig,
) -> Result<RoutedCircuit> {
    check_inputs(c, g)?;
    let n = g.num_nodes();
    let mut seen = vec![false; n];
    if initial_map.len() != n
        || initial_map
            .iter()
            .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
    {
        return Err(Error::Config(
            "initial map is not a bijection onto the nodes".into(),
        ));
    }
    let (steps_of, layers) = gate_layers(c);
    let router = Router { g, cfg };
    let plan = router.plan(&layers, initial_map);
    let m = c.num_steps();
    let mut out: Vec<Vec<Op>> = Vec::with_capacity(m);
    let mut pos = plan.initial.clone();
    let mut inv = inverse(&pos);
    let mut t = 0;
    while t < m {
        let Some(l) = steps_of.iter().position(|&s| s == t) else {
            out.push(Vec::new());
            t += 1;
            continue;
        };
        let next = steps_of.get(l + 1).copied().unwrap_or(m);
        let gap = next - t - 1;
        let swaps: &[(NodeId, NodeId)] = plan.swaps.get(l).map_or(&[], Vec::as_slice);
        // Gate slot of each qubit at this step.
        let mut slot = vec![None; n];
        for (k, gate) in c.group(t).iter().enumerate() {
            slot[gate.p] = Some(k);
            slot[gate.q] = Some(k);
        }
        // As-soon-as-possible swap layers.
        let mut ready = vec![0usize; n];
        let mut layer_of = Vec::with_capacity(swaps.len());
        for &(a, b) in swaps {
            let mut lay = ready[a].max(ready[b]);
            if lay == 0 {
                let ok = match (slot[inv[a]], slot[inv[b]]) {
                    (None, None) => true,
                    (Some(x), Some(y)) => x == y,
                    _ => false,
                };
                if !ok {
                    lay = 1;
                }
            }
            layer_of.push(lay);
            ready[a] = lay + 1;
            ready[b] = lay + 1;
        }
        let depth = layer_of.iter().map(|&l| l + 1).max().unwrap_or(0);
        let mut groups: Vec<Vec<Op>> = vec![Vec::new(); depth.max(1).max(gap + 1)];
        let mut merged = vec![false; c.group(t).len()];
        for (&(a, b), &lay) in swaps.iter().zip(&layer_of) {
            if lay == 0 {
                if let Some(k) = slot[inv[a]] {
                    merged[k] = true;
                    continue;
                }
            }
            groups[lay].push(Op::FreeSwap {
                a: a.min(b),
                b: a.max(b),
            });
        }
        let gate_ops: Vec<Op> = c
            .group(t)
            .iter()
            .enumerate()
            .map(|(k, gate)| {
                let (from, to) = (pos[gate.p], pos[gate.q]);
                let e = g
                    .edge_index(from, to)
                    .expect("router made the layer adjacent");
                Op::Gate {
                    gate: gate.id,
                    from,
                    to,
                    cnots: table.get(gate.id, e).cnots(merged[k]),
                    merged_swap: merged[k],
                }
            })
            .collect();
        groups[0].splice(0..0, gate_ops);
        for &(a, b) in swaps {
            do_swap(&mut pos, &mut inv, a, b);
        }
        out.extend(groups);
        t = next;
    }
    debug_assert_eq!(pos, plan.final_map);
    Ok(RoutedCircuit {
        initial_map: plan.initial,
        steps: out,
        final_map: pos,
        origin: "sabre_like".into(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Bip,
    SabreLike,
    BipLayout,
    BipRouting,
    BipConstrained,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Bip,
        Variant::SabreLike,
        Variant::BipLayout,
        Variant::BipRouting,
        Variant::BipConstrained,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bip => "bip",
            Variant::SabreLike => "sabre_like",
            Variant::BipLayout => "bip_layout",
            Variant::BipRouting => "bip_routing",
            Variant::BipConstrained => "bip_constrained",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

/// Everything a variant run needs besides the instance.
#[derive(Clone, Debug)]
pub struct VariantSettings {
    /// Objective order for the exact stages.
    pub order: Vec<ObjectiveKind>,
    pub model: ModelOptions,
    pub limits: SolveLimits,
    pub heuristic: HeuristicConfig,
}

impl Default for VariantSettings {
    fn default() -> Self {
        VariantSettings {
            order: vec![ObjectiveKind::Error, ObjectiveKind::Depth],
            model: ModelOptions::default(),
            limits: SolveLimits::default(),
            heuristic: HeuristicConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VariantRun {
    pub variant: Variant,
    pub routed: RoutedCircuit,
    pub stats: CircuitStats,
    /// Solver status of the exact stages; `None` for the pure heuristic.
    pub status: Option<Status>,
    pub stages: Vec<StageValue>,
    pub structural: StructuralReport,
}

/// Runs one algorithm variant on a circuit, padding it to the node count.
pub fn run_variant(
    variant: Variant,
    c: &LayeredCircuit,
    g: &HardwareGraph,
    fid: &FidelityModel,
    settings: &VariantSettings,
) -> Result<VariantRun> {
    let c = c.pad_qubits(g.num_nodes())?;
    let table = PlacementTable::new(fid, g);
    let mut options = settings.model;
    options.crosstalk |= settings.order.contains(&ObjectiveKind::Crosstalk);
    let exact = |model: &Model,
                 order: &[ObjectiveKind]|
     -> Result<(RoutedCircuit, Status, Vec<StageValue>)> {
        let lex = lexicographic_solve(model, order, &settings.limits)?;
        let rc = decode(model, lex.result.solution()?, &table)?;
        Ok((rc, lex.status(), lex.stages))
    };
    let (mut routed, status, stages) = match variant {
        Variant::SabreLike => {
            let layout = heuristic_layout(&c, g, &settings.heuristic)?;
            (
                heuristic_route(&c, g, &layout, &table, &settings.heuristic)?,
                None,
                Vec::new(),
            )
        }
        Variant::Bip => {
            let model = Model::build(&c, g, fid, options)?;
            let (rc, s, st) = exact(&model, &settings.order)?;
            (rc, Some(s), st)
        }
        Variant::BipLayout => {
            let model = Model::build(&c, g, fid, options)?;
            let (rc, s, st) = exact(&model, &[ObjectiveKind::Error])?;
            let routed = heuristic_route(&c, g, &rc.initial_map, &table, &settings.heuristic)?;
            (routed, Some(s), st)
        }
        Variant::BipRouting => {
            let layout = heuristic_layout(&c, g, &settings.heuristic)?;
            let mut model = Model::build(&c, g, fid, options)?;
            model.fix_initial_layout(&layout)?;
            let (rc, s, st) = exact(&model, &settings.order)?;
            (rc, Some(s), st)
        }
        Variant::BipConstrained => {
            let mut model = Model::build(&c, g, fid, options)?;
            model.require_cyclic_layout();
            let (rc, s, st) = exact(&model, &settings.order)?;
            (rc, Some(s), st)
        }
    };
    routed.origin = variant.name().into();
    let structural = verify_structural(&routed, &c, g);
    Ok(VariantRun {
        variant,
        stats: stats(&routed, &table, g),
        routed,
        status,
        stages,
        structural,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipmodel::ModelOptions;
    use crate::circuit::{example_circuit, Gate};
    use crate::extract::encode;
    use crate::hwgraph::Builtin;

    fn line(n: usize) -> HardwareGraph {
        HardwareGraph::builtin(Builtin::Line, n).unwrap()
    }

    fn route(c: &LayeredCircuit, g: &HardwareGraph, map: &[usize]) -> RoutedCircuit {
        let table = PlacementTable::new(&FidelityModel::from_circuit(c), g);
        heuristic_route(c, g, map, &table, &HeuristicConfig::default()).unwrap()
    }

    #[test]
    fn adjacent_gates_need_no_swaps() {
        let c = LayeredCircuit::layerize(4, vec![Gate::cx(0, 1), Gate::cx(1, 2), Gate::cx(2, 3)])
            .unwrap();
        let rc = route(&c, &line(4), &[0, 1, 2, 3]);
        assert_eq!(rc.free_swaps(), 0);
        assert_eq!(rc.final_map, vec![0, 1, 2, 3]);
    }

    #[test]
    fn distant_pair_needs_two_swaps() {
        let c = LayeredCircuit::layerize(4, vec![Gate::cx(0, 1), Gate::cx(2, 3), Gate::cx(0, 3)])
            .unwrap()
            .insert_dummy_steps(2);
        let g = line(4);
        let rc = route(&c, &g, &[0, 1, 2, 3]);
        assert!(rc.free_swaps() + rc.gate_ops().filter(|(_, op)| op.swaps()).count() >= 2);
        assert!(verify_structural(&rc, &c, &g).is_ok());
        assert_eq!(rc.steps.len(), c.num_steps());
    }

    #[test]
    fn leading_swaps_fold_into_layout() {
        let c = LayeredCircuit::layerize(4, vec![Gate::cx(0, 3)]).unwrap();
        let g = line(4);
        let rc = route(&c, &g, &[0, 1, 2, 3]);
        assert_eq!(rc.free_swaps(), 0);
        assert!(g.has_edge(rc.initial_map[0], rc.initial_map[3]));
    }

    #[test]
    fn layout_is_deterministic_and_executes_first_layer() {
        let c = example_circuit(None).insert_dummy_steps(1);
        let g = line(4);
        let cfg = HeuristicConfig::default();
        let a = heuristic_layout(&c, &g, &cfg).unwrap();
        assert_eq!(a, heuristic_layout(&c, &g, &cfg).unwrap());
        for gate in c.group(0) {
            assert!(g.has_edge(a[gate.p], a[gate.q]));
        }
        let empty = LayeredCircuit::from_groups(4, vec![]).unwrap();
        assert_eq!(
            heuristic_layout(&empty, &g, &cfg).unwrap(),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn fallback_terminates() {
        let g = HardwareGraph::builtin(Builtin::Grid, 6).unwrap();
        let cfg = HeuristicConfig::default();
        let router = Router { g: &g, cfg: &cfg };
        let mut pos = vec![0, 5, 2, 3, 1, 4];
        let mut inv = inverse(&pos);
        let front = [(0, 1), (2, 3), (4, 5)];
        router.place_directly(&mut pos, &mut inv, &front);
        for (p, q) in front {
            assert!(g.has_edge(pos[p], pos[q]));
        }
        assert_eq!(inverse(&pos), inv);
    }

    #[test]
    fn heuristic_routing_is_encodable() {
        let c = example_circuit(None).insert_dummy_steps(2);
        let g = line(4);
        let fid = FidelityModel::from_circuit(&c);
        let rc = route(&c, &g, &[0, 2, 1, 3]);
        let model = Model::build(&c, &g, &fid, ModelOptions::default()).unwrap();
        let x = encode(&rc, model.space()).unwrap();
        let p = model.problem(ObjectiveKind::Error, &[]).unwrap();
        p.check(&x).unwrap();
        let table = PlacementTable::new(&fid, &g);
        let s = stats(&rc, &table, &g);
        assert!((p.objective.value(&x) - s.error_objective_value).abs() < 1e-9);
    }

    #[test]
    fn variants_on_running_example() {
        let c = example_circuit(None).insert_dummy_steps(1);
        let g = line(4);
        let fid = FidelityModel::from_circuit(&c);
        let s = VariantSettings::default();
        let mut err = std::collections::HashMap::new();
        for v in Variant::ALL {
            match run_variant(v, &c, &g, &fid, &s) {
                Ok(r) => {
                    assert!(r.structural.is_ok(), "{v}: {:?}", r.structural);
                    err.insert(v, r.stats.error_objective_value);
                }
                // No layout of line-4 makes all four pairs of the last two
                // layers adjacent at once.
                Err(Error::ProblemInfeasible) if v == Variant::BipConstrained => {}
                Err(e) => panic!("{v}: {e}"),
            }
        }
        assert!(err[&Variant::Bip] <= err[&Variant::BipRouting] + 1e-9);
        assert!(err[&Variant::BipRouting] <= err[&Variant::SabreLike] + 1e-9);
        assert!(err[&Variant::Bip] <= err[&Variant::BipLayout] + 1e-9);
        assert_eq!("bip-layout".parse::<Variant>().unwrap(), Variant::BipLayout);
    }

    #[test]
    fn constrained_returns_home() {
        let c = example_circuit(None)
            .truncate_layers(2)
            .insert_dummy_steps(2);
        let g = line(4);
        let fid = FidelityModel::from_circuit(&c);
        let s = VariantSettings::default();
        let r = run_variant(Variant::BipConstrained, &c, &g, &fid, &s).unwrap();
        assert_eq!(r.routed.initial_map, r.routed.final_map);
        let b = run_variant(Variant::Bip, &c, &g, &fid, &s).unwrap();
        assert!(b.stats.error_objective_value <= r.stats.error_objective_value + 1e-9);
    }
}
