//! Time-expanded binary program for qubit allocation.
//!
//! Time steps are 0-based here: step `t` hosts gate group `G^t`, and the
//! routing variables `x[·,·,·,t]` describe the move from step `t` to `t+1`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc as Shared;

use serde::Serialize;

use crate::circuit::{LayeredCircuit, QubitId};
use crate::error::{Error, Result};
use crate::gatefid::{FidelityModel, PlacementTable};
use crate::hwgraph::{Arc, Edge, HardwareGraph, NodeId};

/// Constraint family tag carried by every row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Qubit,
    Node,
    Gate,
    Link,
    FlowOut,
    FlowIn,
    GateSwapPair,
    FreeSwapBal,
    DummyInd,
    SymChain,
    CrosstalkUse,
    CrosstalkProduct,
    Cutoff,
    FixLayout,
    Constrained,
}

impl Family {
    pub const ALL: [Family; 15] = [
        Family::Qubit,
        Family::Node,
        Family::Gate,
        Family::Link,
        Family::FlowOut,
        Family::FlowIn,
        Family::GateSwapPair,
        Family::FreeSwapBal,
        Family::DummyInd,
        Family::SymChain,
        Family::CrosstalkUse,
        Family::CrosstalkProduct,
        Family::Cutoff,
        Family::FixLayout,
        Family::Constrained,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Qubit => "QUBIT",
            Family::Node => "NODE",
            Family::Gate => "GATE",
            Family::Link => "LINK",
            Family::FlowOut => "FLOW_OUT",
            Family::FlowIn => "FLOW_IN",
            Family::GateSwapPair => "GATE_SWAP_PAIR",
            Family::FreeSwapBal => "FREE_SWAP_BAL",
            Family::DummyInd => "DUMMY_IND",
            Family::SymChain => "SYM_CHAIN",
            Family::CrosstalkUse => "XTALK_USE",
            Family::CrosstalkProduct => "XTALK_PROD",
            Family::Cutoff => "CUTOFF",
            Family::FixLayout => "FIX_LAYOUT",
            Family::Constrained => "CONSTRAINED",
        }
    }

    /// Recovers the family from a row name of the form `TAG_k`.
    pub fn from_row_name(name: &str) -> Option<Family> {
        let (tag, idx) = name.rsplit_once('_')?;
        if idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        Family::ALL.into_iter().find(|f| f.tag() == tag)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub family: Family,
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[bool]) -> f64 {
        self.coefs
            .iter()
            .filter(|&&(v, _)| x[v])
            .map(|&(_, a)| a)
            .sum()
    }

    pub fn satisfied(&self, x: &[bool], tol: f64) -> bool {
        let a = self.activity(x);
        match self.sense {
            Sense::Eq => (a - self.rhs).abs() <= tol,
            Sense::Le => a <= self.rhs + tol,
            Sense::Ge => a >= self.rhs - tol,
        }
    }
}

/// Linear objective `Σ c_v x_v + offset`, minimized.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Objective {
    pub coefs: Vec<(usize, f64)>,
    pub offset: f64,
}

impl Objective {
    fn from_dense(dense: Vec<f64>) -> Self {
        Objective {
            coefs: dense
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c != 0.0)
                .collect(),
            offset: 0.0,
        }
    }

    pub fn value(&self, x: &[bool]) -> f64 {
        self.offset
            + self
                .coefs
                .iter()
                .filter(|&&(v, _)| x[v])
                .map(|&(_, c)| c)
                .sum::<f64>()
    }

    pub fn is_integral(&self) -> bool {
        std::iter::once(self.offset)
            .chain(self.coefs.iter().map(|&(_, c)| c))
            .all(|c| c.fract() == 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Error,
    Depth,
    Crosstalk,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Error => "error",
            ObjectiveKind::Depth => "depth",
            ObjectiveKind::Crosstalk => "crosstalk",
        }
    }

    /// Tolerance added to a stage optimum when it becomes a constraint.
    pub fn fixing_tolerance(self) -> f64 {
        match self {
            ObjectiveKind::Error => 1e-6,
            _ => 0.0,
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "error" => Ok(ObjectiveKind::Error),
            "depth" => Ok(ObjectiveKind::Depth),
            "crosstalk" => Ok(ObjectiveKind::Crosstalk),
            other => Err(Error::Config(format!("unknown objective '{other}'"))),
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LinkMode {
    McCormick,
    #[default]
    McCormickStr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelOptions {
    pub link: LinkMode,
    pub crosstalk: bool,
    pub symmetry: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            link: LinkMode::McCormickStr,
            crosstalk: false,
            symmetry: true,
        }
    }
}

/// What a variable index stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    W {
        q: QubitId,
        i: NodeId,
        t: usize,
    },
    X {
        q: QubitId,
        i: NodeId,
        j: NodeId,
        t: usize,
    },
    Y {
        gate: usize,
        arc: Arc,
        t: usize,
    },
    Z {
        t: usize,
    },
    U {
        edge: usize,
        t: usize,
    },
    V {
        first: usize,
        second: usize,
        t: usize,
    },
}

/// A gate occurrence in the time-expanded model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateSlot {
    pub gate: usize,
    pub p: QubitId,
    pub q: QubitId,
    pub t: usize,
}

/// Dense index maps for all variable families.
#[derive(Clone, Debug)]
pub struct VariableSpace {
    num_qubits: usize,
    num_nodes: usize,
    num_steps: usize,
    edges: Vec<Edge>,
    arcs: Vec<Arc>,
    arc_lookup: Vec<Option<usize>>,
    targets: Vec<Vec<NodeId>>,
    target_offset: Vec<usize>,
    x_per_qubit: usize,
    x_base: usize,
    y_base: usize,
    z_base: usize,
    u_base: usize,
    v_base: usize,
    total: usize,
    slots: Vec<GateSlot>,
    step_slots: Vec<Vec<usize>>,
    in_gate: Vec<Vec<Option<usize>>>,
    z_index: Vec<Option<usize>>,
    dummy: Vec<bool>,
    u_edges: Vec<usize>,
    u_pos: Vec<Option<usize>>,
    pairs: Vec<(usize, usize)>,
}

impl VariableSpace {
    pub fn new(c: &LayeredCircuit, g: &HardwareGraph, crosstalk: bool) -> Result<Self> {
        let (nq, nv, m) = (c.num_qubits(), g.num_nodes(), c.num_steps());
        if nq != nv {
            return Err(Error::MismatchedModel(format!(
                "{nq} qubits on {nv} nodes; pad the circuit first"
            )));
        }
        let arcs = g.arcs();
        let mut arc_lookup = vec![None; nv * nv];
        for (k, a) in arcs.iter().enumerate() {
            arc_lookup[a.from * nv + a.to] = Some(k);
        }
        let targets: Vec<Vec<NodeId>> = (0..nv)
            .map(|i| {
                std::iter::once(i)
                    .chain(g.neighbors(i).iter().copied())
                    .collect()
            })
            .collect();
        let mut target_offset = Vec::with_capacity(nv);
        let mut acc = 0;
        for t in &targets {
            target_offset.push(acc);
            acc += t.len();
        }
        let x_per_qubit = acc;
        let x_base = nq * nv * m;
        let x_steps = m.saturating_sub(1);
        let y_base = x_base + nq * x_per_qubit * x_steps;

        let mut slots = Vec::new();
        let mut step_slots = vec![Vec::new(); m];
        let mut in_gate = vec![vec![None; nq]; m];
        for t in 0..m {
            for gate in c.group(t) {
                in_gate[t][gate.p] = Some(slots.len());
                in_gate[t][gate.q] = Some(slots.len());
                step_slots[t].push(slots.len());
                slots.push(GateSlot {
                    gate: gate.id,
                    p: gate.p,
                    q: gate.q,
                    t,
                });
            }
        }
        let z_base = y_base + slots.len() * arcs.len();
        let dummy = c.dummy_flags();
        let mut z_index = vec![None; m];
        let mut next = z_base;
        for t in 0..m {
            if dummy[t] {
                z_index[t] = Some(next);
                next += 1;
            }
        }
        let u_base = next;
        let (mut u_edges, mut pairs) = (Vec::new(), Vec::new());
        let mut u_pos = vec![None; g.edges().len()];
        if crosstalk {
            pairs = g.crosstalk_pairs().to_vec();
            for &(a, b) in &pairs {
                for e in [a, b] {
                    if u_pos[e].is_none() {
                        u_pos[e] = Some(u_edges.len());
                        u_edges.push(e);
                    }
                }
            }
            // Keep u ordered by edge index.
            u_edges.sort_unstable();
            for (k, &e) in u_edges.iter().enumerate() {
                u_pos[e] = Some(k);
            }
        }
        let v_base = u_base + u_edges.len() * m;
        let total = v_base + pairs.len() * m;
        Ok(VariableSpace {
            num_qubits: nq,
            num_nodes: nv,
            num_steps: m,
            edges: g.edges().to_vec(),
            arcs,
            arc_lookup,
            targets,
            target_offset,
            x_per_qubit,
            x_base,
            y_base,
            z_base,
            u_base,
            v_base,
            total,
            slots,
            step_slots,
            in_gate,
            z_index,
            dummy,
            u_edges,
            u_pos,
            pairs,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn arc_index(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.arc_lookup[from * self.num_nodes + to]
    }

    /// `N(i) ∪ {i}`, with `i` first.
    pub fn targets(&self, i: NodeId) -> &[NodeId] {
        &self.targets[i]
    }

    pub fn slots(&self) -> &[GateSlot] {
        &self.slots
    }

    pub fn step_slots(&self, t: usize) -> &[usize] {
        &self.step_slots[t]
    }

    /// The slot whose gate acts on `q` at step `t`, if any.
    pub fn slot_of(&self, q: QubitId, t: usize) -> Option<usize> {
        self.in_gate[t][q]
    }

    pub fn is_dummy(&self, t: usize) -> bool {
        self.dummy[t]
    }

    pub fn crosstalk_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn has_crosstalk(&self) -> bool {
        !self.pairs.is_empty()
    }

    pub fn w(&self, q: QubitId, i: NodeId, t: usize) -> usize {
        (t * self.num_qubits + q) * self.num_nodes + i
    }

    pub fn x(&self, q: QubitId, i: NodeId, j: NodeId, t: usize) -> Option<usize> {
        if t + 1 >= self.num_steps {
            return None;
        }
        let k = self.targets[i].iter().position(|&n| n == j)?;
        Some(self.x_at(q, i, k, t))
    }

    /// `x` for the `k`-th entry of `targets(i)`.
    pub fn x_at(&self, q: QubitId, i: NodeId, k: usize, t: usize) -> usize {
        self.x_base + (t * self.num_qubits + q) * self.x_per_qubit + self.target_offset[i] + k
    }

    pub fn y(&self, slot: usize, arc: usize) -> usize {
        self.y_base + slot * self.arcs.len() + arc
    }

    pub fn z(&self, t: usize) -> Option<usize> {
        self.z_index[t]
    }

    pub fn u(&self, edge: usize, t: usize) -> Option<usize> {
        self.u_pos[edge].map(|k| self.u_base + k * self.num_steps + t)
    }

    pub fn v(&self, pair: usize, t: usize) -> usize {
        self.v_base + pair * self.num_steps + t
    }

    pub fn count_w(&self) -> usize {
        self.x_base
    }

    pub fn count_x(&self) -> usize {
        self.y_base - self.x_base
    }

    pub fn count_y(&self) -> usize {
        self.z_base - self.y_base
    }

    pub fn count_z(&self) -> usize {
        self.u_base - self.z_base
    }

    pub fn count_u(&self) -> usize {
        self.v_base - self.u_base
    }

    pub fn count_v(&self) -> usize {
        self.total - self.v_base
    }

    pub fn kind(&self, idx: usize) -> VarKind {
        assert!(idx < self.total, "variable {idx} out of range");
        let (nq, nv) = (self.num_qubits, self.num_nodes);
        if idx < self.x_base {
            let i = idx % nv;
            let q = (idx / nv) % nq;
            let t = idx / (nv * nq);
            VarKind::W { q, i, t }
        } else if idx < self.y_base {
            let r = idx - self.x_base;
            let within = r % self.x_per_qubit;
            let q = (r / self.x_per_qubit) % nq;
            let t = r / (self.x_per_qubit * nq);
            let i = self.target_offset.partition_point(|&o| o <= within) - 1;
            let j = self.targets[i][within - self.target_offset[i]];
            VarKind::X { q, i, j, t }
        } else if idx < self.z_base {
            let r = idx - self.y_base;
            let slot = self.slots[r / self.arcs.len()];
            VarKind::Y {
                gate: slot.gate,
                arc: self.arcs[r % self.arcs.len()],
                t: slot.t,
            }
        } else if idx < self.u_base {
            let t = self
                .z_index
                .iter()
                .position(|&z| z == Some(idx))
                .expect("z");
            VarKind::Z { t }
        } else if idx < self.v_base {
            let r = idx - self.u_base;
            VarKind::U {
                edge: self.u_edges[r / self.num_steps],
                t: r % self.num_steps,
            }
        } else {
            let r = idx - self.v_base;
            let (first, second) = self.pairs[r / self.num_steps];
            VarKind::V {
                first,
                second,
                t: r % self.num_steps,
            }
        }
    }

    pub fn name(&self, idx: usize) -> String {
        match self.kind(idx) {
            VarKind::W { q, i, t } => format!("w_{q}_{i}_{t}"),
            VarKind::X { q, i, j, t } => format!("x_{q}_{i}_{j}_{t}"),
            VarKind::Y { gate, arc, t } => format!("y_{gate}_{}_{}_{t}", arc.from, arc.to),
            VarKind::Z { t } => format!("z_{t}"),
            VarKind::U { edge, t } => format!("u_{edge}_{t}"),
            VarKind::V { first, second, t } => format!("v_{first}_{second}_{t}"),
        }
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.total).map(|k| self.name(k)).collect()
    }

    /// Per step, the node hosting each qubit if it is determined by `vals`
    /// (`1` fixed true, `0` fixed false, `-1` free).
    fn positions(&self, vals: &[i8], t: usize) -> Vec<Option<NodeId>> {
        (0..self.num_qubits)
            .map(|q| {
                let base = self.w(q, 0, t);
                (0..self.num_nodes).find(|&i| vals[base + i] == 1)
            })
            .collect()
    }
}

/// A single-objective binary program ready for a solver.
#[derive(Clone)]
pub struct BipProblem {
    pub names: Vec<String>,
    pub rows: Vec<Row>,
    pub objective: Objective,
    /// Structure-aware bounding and branching, absent for imported models.
    pub guide: Option<Shared<dyn SearchGuide>>,
}

impl fmt::Debug for BipProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BipProblem")
            .field("num_vars", &self.names.len())
            .field("rows", &self.rows.len())
            .field("objective_terms", &self.objective.coefs.len())
            .field("guided", &self.guide.is_some())
            .finish()
    }
}

impl BipProblem {
    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Checks that every coefficient references a variable.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for (k, row) in self.rows.iter().enumerate() {
            if let Some(&(v, _)) = row.coefs.iter().find(|&&(v, _)| v >= n) {
                return Err(Error::MalformedRow {
                    row: k,
                    reason: format!("variable index {v} out of range"),
                });
            }
            if row.coefs.iter().any(|&(_, a)| !a.is_finite()) || !row.rhs.is_finite() {
                return Err(Error::MalformedRow {
                    row: k,
                    reason: "non-finite coefficient".into(),
                });
            }
        }
        if self.objective.coefs.iter().any(|&(v, _)| v >= n) {
            return Err(Error::MalformedRow {
                row: usize::MAX,
                reason: "objective references unknown variable".into(),
            });
        }
        Ok(())
    }

    /// The first row violated by `x`, if any.
    pub fn first_violation(&self, x: &[bool], tol: f64) -> Option<&Row> {
        self.rows.iter().find(|r| !r.satisfied(x, tol))
    }

    pub fn check(&self, x: &[bool]) -> Result<()> {
        match self.first_violation(x, 1e-9) {
            None => Ok(()),
            Some(r) => Err(Error::Infeasible {
                name: r.name.clone(),
                family: r.family,
                activity: r.activity(x),
                rhs: r.rhs,
            }),
        }
    }

    /// Drops every row of a family.
    pub fn without_family(&self, family: Family) -> BipProblem {
        BipProblem {
            rows: self
                .rows
                .iter()
                .filter(|r| r.family != family)
                .cloned()
                .collect(),
            ..self.clone()
        }
    }
}

/// Problem-specific hooks the branch-and-bound search consults.
///
/// `vals` holds `1` for variables fixed true, `0` for fixed false and `-1`
/// for free ones.
pub trait SearchGuide: Send + Sync {
    /// A lower bound on the objective over all feasible completions, or
    /// `None` when none exists.
    fn lower_bound(&self, vals: &[i8]) -> Option<f64>;

    /// The next variable to branch on and the value to try first.
    fn branch(&self, vals: &[i8]) -> Option<(usize, bool)>;
}

/// Rows, objectives and structure of one allocation instance.
#[derive(Clone, Debug)]
pub struct Model {
    space: Shared<VariableSpace>,
    rows: Vec<Row>,
    error: Objective,
    depth: Objective,
    crosstalk: Option<Objective>,
    costs: Shared<CostData>,
    options: ModelOptions,
}

#[derive(Debug)]
struct RowSink {
    rows: Vec<Row>,
    counters: Vec<usize>,
}

impl RowSink {
    fn new() -> Self {
        RowSink {
            rows: Vec::new(),
            counters: vec![0; Family::ALL.len()],
        }
    }

    fn push(&mut self, family: Family, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let slot = Family::ALL.iter().position(|&f| f == family).unwrap();
        let k = self.counters[slot];
        self.counters[slot] += 1;
        self.rows.push(Row {
            name: format!("{}_{k}", family.tag()),
            family,
            coefs,
            sense,
            rhs,
        });
    }
}

/// Per-slot placement costs used by the objective and the search guide.
#[derive(Debug)]
struct CostData {
    /// `−ln P*` per slot and arc.
    plain: Vec<f64>,
    /// `−ln P*_SWAP` per slot and arc.
    merged: Vec<f64>,
    /// Cheapest single free-qubit hop, `−(3/2) ln β_max`.
    min_hop: f64,
    /// Hop distances between nodes.
    dist: Vec<Vec<usize>>,
    /// Free-qubit `x` variables with their cost and transition step.
    free_moves: Vec<(usize, f64, usize)>,
}

impl Model {
    /// Builds the variable space, all constraint families and all
    /// objectives for a padded circuit.
    pub fn build(
        c: &LayeredCircuit,
        g: &HardwareGraph,
        fid: &FidelityModel,
        options: ModelOptions,
    ) -> Result<Model> {
        c.check_fits(g)?;
        let vs = VariableSpace::new(c, g, options.crosstalk)?;
        let table = PlacementTable::new(fid, g);
        let rows = build_constraints(&vs, options);
        let (error, costs) = error_objective(&vs, g, &table);
        let depth = depth_objective(&vs);
        let mut model = Model {
            space: Shared::new(vs),
            rows,
            error,
            depth,
            crosstalk: None,
            costs: Shared::new(costs),
            options,
        };
        if options.crosstalk {
            let (obj, extra) = crosstalk_objective(&model.space);
            model.crosstalk = Some(obj);
            model.rows.extend(extra);
        }
        Ok(model)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn options(&self) -> ModelOptions {
        self.options
    }

    pub fn objective(&self, kind: ObjectiveKind) -> Result<&Objective> {
        match kind {
            ObjectiveKind::Error => Ok(&self.error),
            ObjectiveKind::Depth => Ok(&self.depth),
            ObjectiveKind::Crosstalk => self
                .crosstalk
                .as_ref()
                .ok_or_else(|| Error::MissingObjective("crosstalk".into())),
        }
    }

    /// Pins the layout at the first step: qubit `q` on node `map[q]`.
    pub fn fix_initial_layout(&mut self, map: &[NodeId]) -> Result<()> {
        let vs = self.space.clone();
        if map.len() != vs.num_qubits() || vs.num_steps() == 0 {
            return Err(Error::MismatchedModel("layout size".into()));
        }
        let mut sink = self.sink();
        for (q, &i) in map.iter().enumerate() {
            if i >= vs.num_nodes() {
                return Err(Error::UnknownNode(i as i64));
            }
            sink.push(
                Family::FixLayout,
                vec![(vs.w(q, i, 0), 1.0)],
                Sense::Eq,
                1.0,
            );
        }
        self.rows = sink.rows;
        Ok(())
    }

    /// Requires the final layout to equal the initial one.
    pub fn require_cyclic_layout(&mut self) {
        let vs = self.space.clone();
        let m = vs.num_steps();
        if m < 2 {
            return;
        }
        let mut sink = self.sink();
        for q in 0..vs.num_qubits() {
            for i in 0..vs.num_nodes() {
                sink.push(
                    Family::Constrained,
                    vec![(vs.w(q, i, 0), 1.0), (vs.w(q, i, m - 1), -1.0)],
                    Sense::Eq,
                    0.0,
                );
            }
        }
        self.rows = sink.rows;
    }

    fn sink(&self) -> RowSink {
        let mut sink = RowSink::new();
        for r in &self.rows {
            let slot = Family::ALL.iter().position(|&f| f == r.family).unwrap();
            sink.counters[slot] += 1;
        }
        sink.rows = self.rows.clone();
        sink
    }

    /// A single-objective program minimizing `primary`, with every objective
    /// in `cutoffs` constrained to at most its bound.
    pub fn problem(
        &self,
        primary: ObjectiveKind,
        cutoffs: &[(ObjectiveKind, f64)],
    ) -> Result<BipProblem> {
        let objective = self.objective(primary)?.clone();
        let mut sink = self.sink();
        for &(kind, bound) in cutoffs {
            let obj = self.objective(kind)?;
            sink.push(
                Family::Cutoff,
                obj.coefs.clone(),
                Sense::Le,
                bound - obj.offset,
            );
        }
        let guide = AllocationGuide {
            space: self.space.clone(),
            costs: self.costs.clone(),
            primary,
            cutoffs: cutoffs.to_vec(),
            objective: objective.clone(),
        };
        Ok(BipProblem {
            names: self.space.names(),
            rows: sink.rows,
            objective,
            guide: Some(Shared::new(guide)),
        })
    }
}

/// Emits every constraint family over `vs`.
pub fn build_constraints(vs: &VariableSpace, options: ModelOptions) -> Vec<Row> {
    let (nq, nv, m) = (vs.num_qubits(), vs.num_nodes(), vs.num_steps());
    let arcs = vs.arcs();
    let mut s = RowSink::new();

    for t in 0..m {
        for q in 0..nq {
            let coefs = (0..nv).map(|i| (vs.w(q, i, t), 1.0)).collect();
            s.push(Family::Qubit, coefs, Sense::Eq, 1.0);
        }
    }
    for t in 0..m {
        for i in 0..nv {
            let coefs = (0..nq).map(|q| (vs.w(q, i, t), 1.0)).collect();
            s.push(Family::Node, coefs, Sense::Eq, 1.0);
        }
    }
    for k in 0..vs.slots().len() {
        let coefs = (0..arcs.len()).map(|a| (vs.y(k, a), 1.0)).collect();
        s.push(Family::Gate, coefs, Sense::Eq, 1.0);
    }
    for (k, slot) in vs.slots().iter().enumerate() {
        let (p, q, t) = (slot.p, slot.q, slot.t);
        for (a, arc) in arcs.iter().enumerate() {
            let (i, j) = (arc.from, arc.to);
            let y = vs.y(k, a);
            if t + 1 < m && options.link == LinkMode::McCormickStr {
                let xp = [vs.x(p, i, i, t).unwrap(), vs.x(p, i, j, t).unwrap()];
                let xq = [vs.x(q, j, j, t).unwrap(), vs.x(q, j, i, t).unwrap()];
                for pair in [xp, xq] {
                    s.push(
                        Family::Link,
                        vec![(y, 1.0), (pair[0], -1.0), (pair[1], -1.0)],
                        Sense::Le,
                        0.0,
                    );
                }
            } else {
                s.push(
                    Family::Link,
                    vec![(y, 1.0), (vs.w(p, i, t), -1.0)],
                    Sense::Le,
                    0.0,
                );
                s.push(
                    Family::Link,
                    vec![(y, 1.0), (vs.w(q, j, t), -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
            s.push(
                Family::Link,
                vec![(y, 1.0), (vs.w(p, i, t), -1.0), (vs.w(q, j, t), -1.0)],
                Sense::Ge,
                -1.0,
            );
        }
    }
    for t in 0..m.saturating_sub(1) {
        for q in 0..nq {
            for i in 0..nv {
                let mut coefs = vec![(vs.w(q, i, t), 1.0)];
                coefs.extend((0..vs.targets(i).len()).map(|k| (vs.x_at(q, i, k, t), -1.0)));
                s.push(Family::FlowOut, coefs, Sense::Eq, 0.0);
            }
        }
    }
    for t in 1..m {
        for q in 0..nq {
            for i in 0..nv {
                let mut coefs = vec![(vs.w(q, i, t), 1.0)];
                coefs.extend(
                    vs.targets(i)
                        .iter()
                        .map(|&k| (vs.x(q, k, i, t - 1).unwrap(), -1.0)),
                );
                s.push(Family::FlowIn, coefs, Sense::Eq, 0.0);
            }
        }
    }
    for t in 0..m.saturating_sub(1) {
        for &k in vs.step_slots(t) {
            let slot = vs.slots()[k];
            for arc in arcs {
                let a = vs.x(slot.p, arc.from, arc.to, t).unwrap();
                let b = vs.x(slot.q, arc.to, arc.from, t).unwrap();
                s.push(
                    Family::GateSwapPair,
                    vec![(a, 1.0), (b, -1.0)],
                    Sense::Eq,
                    0.0,
                );
            }
        }
    }
    for t in 0..m.saturating_sub(1) {
        let free: Vec<QubitId> = (0..nq).filter(|&q| vs.slot_of(q, t).is_none()).collect();
        if free.is_empty() {
            continue;
        }
        for arc in arcs {
            let mut coefs = Vec::with_capacity(2 * free.len());
            for &q in &free {
                coefs.push((vs.x(q, arc.from, arc.to, t).unwrap(), 1.0));
            }
            for &q in &free {
                coefs.push((vs.x(q, arc.to, arc.from, t).unwrap(), -1.0));
            }
            s.push(Family::FreeSwapBal, coefs, Sense::Eq, 0.0);
        }
    }
    for t in 0..m.saturating_sub(1) {
        let Some(z) = vs.z(t) else { continue };
        for q in 0..nq {
            let mut coefs: Vec<(usize, f64)> = arcs
                .iter()
                .map(|arc| (vs.x(q, arc.from, arc.to, t).unwrap(), 1.0))
                .collect();
            coefs.push((z, -1.0));
            s.push(Family::DummyInd, coefs, Sense::Le, 0.0);
        }
    }
    if options.symmetry {
        for t in 0..m.saturating_sub(1) {
            if let (Some(a), Some(b)) = (vs.z(t), vs.z(t + 1)) {
                s.push(Family::SymChain, vec![(a, 1.0), (b, -1.0)], Sense::Ge, 0.0);
            }
        }
    }
    s.rows
}

fn error_objective(
    vs: &VariableSpace,
    g: &HardwareGraph,
    table: &PlacementTable,
) -> (Objective, CostData) {
    let m = vs.num_steps();
    let arcs = vs.arcs();
    let mut dense = vec![0.0; vs.total()];
    let mut plain = Vec::with_capacity(vs.slots().len() * arcs.len());
    let mut merged = Vec::with_capacity(plain.capacity());
    for (k, slot) in vs.slots().iter().enumerate() {
        for (a, arc) in arcs.iter().enumerate() {
            let e = g.edge_index(arc.from, arc.to).expect("arc on edge");
            let cost = table.get(slot.gate, e);
            let (c, cs) = (cost.log_cost(false), cost.log_cost(true));
            plain.push(c);
            merged.push(cs);
            dense[vs.y(k, a)] += c;
            if slot.t + 1 < m {
                let half = (cs - c) / 2.0;
                dense[vs.x(slot.p, arc.from, arc.to, slot.t).unwrap()] += half;
                dense[vs.x(slot.q, arc.to, arc.from, slot.t).unwrap()] += half;
            }
        }
    }
    let mut free_moves = Vec::new();
    for t in 0..m.saturating_sub(1) {
        for q in (0..vs.num_qubits()).filter(|&q| vs.slot_of(q, t).is_none()) {
            for arc in arcs {
                let beta = g.beta_between(arc.from, arc.to).expect("arc on edge");
                let idx = vs.x(q, arc.from, arc.to, t).unwrap();
                let c = -1.5 * beta.ln();
                dense[idx] += c;
                free_moves.push((idx, c, t));
            }
        }
    }
    let min_hop = (0..g.edges().len())
        .map(|e| -1.5 * g.beta(e).ln())
        .fold(f64::INFINITY, f64::min);
    let n = g.num_nodes();
    let dist = (0..n)
        .map(|a| (0..n).map(|b| g.distance(a, b)).collect())
        .collect();
    (
        Objective::from_dense(dense),
        CostData {
            plain,
            merged,
            min_hop: if min_hop.is_finite() { min_hop } else { 0.0 },
            dist,
            free_moves,
        },
    )
}

fn depth_objective(vs: &VariableSpace) -> Objective {
    Objective {
        coefs: (0..vs.num_steps())
            .filter_map(|t| vs.z(t))
            .map(|z| (z, 1.0))
            .collect(),
        offset: 0.0,
    }
}

fn crosstalk_objective(vs: &VariableSpace) -> (Objective, Vec<Row>) {
    let m = vs.num_steps();
    let mut s = RowSink::new();
    let mut used_edges: Vec<usize> = vs
        .crosstalk_pairs()
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect();
    used_edges.sort_unstable();
    used_edges.dedup();
    for &e in &used_edges {
        let edge = vs.edges()[e];
        let orients = [
            vs.arc_index(edge.0, edge.1).unwrap(),
            vs.arc_index(edge.1, edge.0).unwrap(),
        ];
        for t in 0..m {
            let u = vs.u(e, t).unwrap();
            let mut ind = Vec::new();
            for &k in vs.step_slots(t) {
                ind.extend(orients.iter().map(|&a| vs.y(k, a)));
            }
            if t + 1 < m {
                for q in (0..vs.num_qubits()).filter(|&q| vs.slot_of(q, t).is_none()) {
                    ind.push(vs.x(q, edge.0, edge.1, t).unwrap());
                    ind.push(vs.x(q, edge.1, edge.0, t).unwrap());
                }
            }
            for &v in &ind {
                s.push(
                    Family::CrosstalkUse,
                    vec![(u, 1.0), (v, -1.0)],
                    Sense::Ge,
                    0.0,
                );
            }
            let mut coefs = vec![(u, 1.0)];
            coefs.extend(ind.iter().map(|&v| (v, -1.0)));
            s.push(Family::CrosstalkUse, coefs, Sense::Le, 0.0);
        }
    }
    let mut coefs = Vec::new();
    for (k, &(a, b)) in vs.crosstalk_pairs().iter().enumerate() {
        for t in 0..m {
            let v = vs.v(k, t);
            let (ua, ub) = (vs.u(a, t).unwrap(), vs.u(b, t).unwrap());
            s.push(
                Family::CrosstalkProduct,
                vec![(v, 1.0), (ua, -1.0), (ub, -1.0)],
                Sense::Ge,
                -1.0,
            );
            s.push(
                Family::CrosstalkProduct,
                vec![(v, 1.0), (ua, -1.0)],
                Sense::Le,
                0.0,
            );
            s.push(
                Family::CrosstalkProduct,
                vec![(v, 1.0), (ub, -1.0)],
                Sense::Le,
                0.0,
            );
            coefs.push((v, 1.0));
        }
    }
    (Objective { coefs, offset: 0.0 }, s.rows)
}

/// Bounds and branching derived from the routing structure.
struct AllocationGuide {
    space: Shared<VariableSpace>,
    costs: Shared<CostData>,
    primary: ObjectiveKind,
    cutoffs: Vec<(ObjectiveKind, f64)>,
    objective: Objective,
}

/// Qubit positions at the last step whose layout is fully determined.
struct Anchor {
    step: usize,
    pos: Vec<NodeId>,
}

impl AllocationGuide {
    fn anchor(&self, vals: &[i8]) -> Option<Anchor> {
        let vs = &self.space;
        (0..vs.num_steps()).rev().find_map(|t| {
            let pos = vs.positions(vals, t);
            pos.iter().all(Option::is_some).then(|| Anchor {
                step: t,
                pos: pos.into_iter().map(Option::unwrap).collect(),
            })
        })
    }

    /// Hops the operands of `slot` still need and the hops they can make
    /// without a free swap, measured from the anchor.
    fn hop_demand(&self, anchor: &Anchor, slot: usize) -> (usize, usize, usize) {
        let vs = &self.space;
        let s = vs.slots()[slot];
        let d = self.costs.dist[anchor.pos[s.p]][anchor.pos[s.q]];
        let need = d.saturating_sub(1);
        let mut merged = 0;
        let mut quiet = 0;
        for tau in anchor.step..s.t {
            merged += [s.p, s.q]
                .iter()
                .filter(|&&x| vs.slot_of(x, tau).is_some())
                .count();
            if !vs.is_dummy(tau) {
                quiet += 1;
            }
        }
        (need, merged, quiet)
    }

    fn error_bound(&self, vals: &[i8], anchor: Option<&Anchor>) -> Option<f64> {
        let vs = &self.space;
        let m = vs.num_steps();
        let na = vs.arcs().len();
        let mut gate_part = 0.0;
        for (k, slot) in vs.slots().iter().enumerate() {
            let horizon = anchor.filter(|a| a.step <= slot.t);
            let mut best = f64::INFINITY;
            for (a, arc) in vs.arcs().iter().enumerate() {
                if vals[vs.y(k, a)] == 0 {
                    continue;
                }
                if let Some(an) = horizon {
                    let reach = slot.t - an.step;
                    if self.costs.dist[an.pos[slot.p]][arc.from] > reach
                        || self.costs.dist[an.pos[slot.q]][arc.to] > reach
                    {
                        continue;
                    }
                }
                let plain = self.costs.plain[k * na + a];
                let merged = self.costs.merged[k * na + a];
                let c = if slot.t + 1 < m {
                    let x = vals[vs.x(slot.p, arc.from, arc.to, slot.t).unwrap()];
                    match x {
                        1 => merged,
                        0 => plain,
                        _ => plain.min(merged),
                    }
                } else {
                    plain
                };
                best = best.min(c);
            }
            if !best.is_finite() {
                return None;
            }
            gate_part += best;
        }
        let split = anchor.map_or(0, |a| a.step);
        let (mut before, mut after) = (0.0f64, 0.0f64);
        for &(idx, c, t) in &self.costs.free_moves {
            if vals[idx] == 1 {
                if t < split {
                    before += c;
                } else {
                    after += c;
                }
            }
        }
        let mut routing: f64 = 0.0;
        if let Some(an) = anchor {
            for t in an.step + 1..m {
                let mut layer = 0.0;
                for &k in vs.step_slots(t) {
                    let (need, merged, _) = self.hop_demand(an, k);
                    if need > 2 * (t - an.step) {
                        return None;
                    }
                    layer += need.saturating_sub(merged) as f64 * self.costs.min_hop;
                }
                routing = routing.max(layer);
            }
        }
        Some(gate_part + before + after.max(routing))
    }

    fn depth_bound(&self, vals: &[i8], anchor: Option<&Anchor>) -> Option<f64> {
        let vs = &self.space;
        let split = anchor.map_or(0, |a| a.step);
        let (mut before, mut after) = (0.0f64, 0.0f64);
        for t in 0..vs.num_steps() {
            if let Some(z) = vs.z(t) {
                if vals[z] == 1 {
                    if t < split {
                        before += 1.0;
                    } else {
                        after += 1.0;
                    }
                }
            }
        }
        let mut needed: f64 = 0.0;
        if let Some(an) = anchor {
            for t in an.step + 1..vs.num_steps() {
                for &k in vs.step_slots(t) {
                    let (need, _, quiet) = self.hop_demand(an, k);
                    if need > 2 * (t - an.step) {
                        return None;
                    }
                    let rest = need.saturating_sub(2 * quiet);
                    needed = needed.max(rest.div_ceil(2) as f64);
                }
            }
        }
        Some(before + after.max(needed))
    }

    fn fixed_bound(&self, obj: &Objective, vals: &[i8]) -> f64 {
        obj.offset
            + obj
                .coefs
                .iter()
                .map(|&(v, c)| match vals[v] {
                    1 => c,
                    0 => 0.0,
                    _ => c.min(0.0),
                })
                .sum::<f64>()
    }

    fn bound_of(&self, kind: ObjectiveKind, vals: &[i8], anchor: Option<&Anchor>) -> Option<f64> {
        match kind {
            ObjectiveKind::Error => self.error_bound(vals, anchor),
            ObjectiveKind::Depth => self.depth_bound(vals, anchor),
            ObjectiveKind::Crosstalk => Some(self.fixed_bound(&self.objective, vals)),
        }
    }
}

impl SearchGuide for AllocationGuide {
    fn lower_bound(&self, vals: &[i8]) -> Option<f64> {
        let anchor = self.anchor(vals);
        for &(kind, limit) in &self.cutoffs {
            if kind == ObjectiveKind::Crosstalk {
                continue;
            }
            let b = self.bound_of(kind, vals, anchor.as_ref())?;
            if b > limit + 1e-9 {
                return None;
            }
        }
        let b = self.bound_of(self.primary, vals, anchor.as_ref())?;
        Some(if self.primary == ObjectiveKind::Crosstalk {
            b
        } else {
            b.max(self.fixed_bound(&self.objective, vals))
        })
    }

    fn branch(&self, vals: &[i8]) -> Option<(usize, bool)> {
        let vs = &self.space;
        for t in 0..vs.num_steps() {
            let pos = vs.positions(vals, t);
            if pos.iter().all(Option::is_some) {
                continue;
            }
            let prev = (t > 0).then(|| vs.positions(vals, t - 1));
            // Gate operands first, in slot order, then idle qubits.
            let mut order: Vec<QubitId> = Vec::with_capacity(vs.num_qubits());
            for &k in vs.step_slots(t) {
                let s = vs.slots()[k];
                order.extend([s.p, s.q]);
            }
            order.extend((0..vs.num_qubits()).filter(|&q| vs.slot_of(q, t).is_none()));
            let q = *order.iter().find(|&&q| pos[q].is_none())?;
            let open = |i: NodeId| vals[vs.w(q, i, t)] == -1;
            let stay = prev.as_ref().and_then(|p| p[q]).filter(|&i| open(i));
            let near_partner = vs.slot_of(q, t).and_then(|k| {
                let s = vs.slots()[k];
                let other = if s.p == q { s.q } else { s.p };
                let j = pos[other]?;
                vs.targets(j)[1..].iter().copied().find(|&i| open(i))
            });
            let pick = stay
                .or(near_partner)
                .or_else(|| (0..vs.num_nodes()).find(|&i| open(i)))?;
            return Some((vs.w(q, pick, t), true));
        }
        None
    }
}
