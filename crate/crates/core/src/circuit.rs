//! Logical circuits as ordered groups of two-qubit gates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{self, Mat4};
use crate::hwgraph::HardwareGraph;
use crate::sim::Unitary;

pub type QubitId = usize;

#[derive(Clone, Debug)]
pub struct Gate {
    /// Position in the original gate list; stable across layering, padding,
    /// dummy insertion and orientation.
    pub id: usize,
    pub p: QubitId,
    pub q: QubitId,
    pub unitary: Mat4,
}

impl Gate {
    pub fn new(p: QubitId, q: QubitId, unitary: Mat4) -> Self {
        Gate {
            id: 0,
            p,
            q,
            unitary,
        }
    }

    pub fn cx(control: QubitId, target: QubitId) -> Self {
        Gate::new(control, target, gates::cx())
    }

    pub fn touches(&self, qubit: QubitId) -> bool {
        self.p == qubit || self.q == qubit
    }
}

#[derive(Clone, Debug)]
pub struct LayeredCircuit {
    num_qubits: usize,
    groups: Vec<Vec<Gate>>,
}

impl LayeredCircuit {
    /// Wraps explicit gate groups, checking per-group qubit uniqueness.
    pub fn from_groups(num_qubits: usize, groups: Vec<Vec<Gate>>) -> Result<Self> {
        for group in &groups {
            let mut used = vec![false; num_qubits];
            for g in group {
                check_gate(g, num_qubits)?;
                for x in [g.p, g.q] {
                    if std::mem::replace(&mut used[x], true) {
                        return Err(Error::RepeatedQubit(x));
                    }
                }
            }
        }
        Ok(LayeredCircuit { num_qubits, groups })
    }

    /// Greedy as-soon-as-possible layering: each gate goes to the first layer
    /// after the latest layer touching either operand.
    pub fn layerize(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut next_free = vec![0usize; num_qubits];
        let mut groups: Vec<Vec<Gate>> = Vec::new();
        for (id, mut g) in gates.into_iter().enumerate() {
            check_gate(&g, num_qubits)?;
            g.id = id;
            let layer = next_free[g.p].max(next_free[g.q]);
            if layer == groups.len() {
                groups.push(Vec::new());
            }
            next_free[g.p] = layer + 1;
            next_free[g.q] = layer + 1;
            groups[layer].push(g);
        }
        Ok(LayeredCircuit { num_qubits, groups })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Number of time steps `m`, dummy steps included.
    pub fn num_steps(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Vec<Gate>] {
        &self.groups
    }

    pub fn group(&self, t: usize) -> &[Gate] {
        &self.groups[t]
    }

    pub fn is_dummy(&self, t: usize) -> bool {
        self.groups[t].is_empty()
    }

    pub fn dummy_flags(&self) -> Vec<bool> {
        self.groups.iter().map(Vec::is_empty).collect()
    }

    pub fn dummy_steps(&self) -> Vec<usize> {
        (0..self.num_steps())
            .filter(|&t| self.is_dummy(t))
            .collect()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.groups.iter().flatten()
    }

    pub fn num_gates(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// One past the largest gate id.
    pub fn gate_id_bound(&self) -> usize {
        self.gates().map(|g| g.id + 1).max().unwrap_or(0)
    }

    /// `Q^t` as a membership mask.
    pub fn active_qubits(&self, t: usize) -> Vec<bool> {
        let mut out = vec![false; self.num_qubits];
        for g in &self.groups[t] {
            out[g.p] = true;
            out[g.q] = true;
        }
        out
    }

    /// Adds idle qubits until the circuit has `nodes` qubits.
    pub fn pad_qubits(&self, nodes: usize) -> Result<Self> {
        if self.num_qubits > nodes {
            return Err(Error::CircuitTooWide {
                qubits: self.num_qubits,
                nodes,
            });
        }
        Ok(LayeredCircuit {
            num_qubits: nodes,
            groups: self.groups.clone(),
        })
    }

    /// Inserts `k` empty groups between each pair of consecutive layers.
    pub fn insert_dummy_steps(&self, k: usize) -> Self {
        let mut groups = Vec::with_capacity(self.groups.len() * (k + 1));
        for (i, g) in self.groups.iter().enumerate() {
            if i > 0 {
                groups.extend(std::iter::repeat_with(Vec::new).take(k));
            }
            groups.push(g.clone());
        }
        LayeredCircuit {
            num_qubits: self.num_qubits,
            groups,
        }
    }

    pub fn strip_dummy_steps(&self) -> Self {
        LayeredCircuit {
            num_qubits: self.num_qubits,
            groups: self
                .groups
                .iter()
                .filter(|g| !g.is_empty())
                .cloned()
                .collect(),
        }
    }

    /// Stores every gate with `p < q`, conjugating the matrix by SWAP when the
    /// operands were exchanged.
    pub fn orient_gates(&self) -> Self {
        let groups = self
            .groups
            .iter()
            .map(|group| {
                group
                    .iter()
                    .map(|g| {
                        if g.p < g.q {
                            g.clone()
                        } else {
                            Gate {
                                id: g.id,
                                p: g.q,
                                q: g.p,
                                unitary: gates::swap_operands(&g.unitary),
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        LayeredCircuit {
            num_qubits: self.num_qubits,
            groups,
        }
    }

    /// Keeps the first `layers` non-empty groups.
    pub fn truncate_layers(&self, layers: usize) -> Self {
        LayeredCircuit {
            num_qubits: self.num_qubits,
            groups: self.groups.iter().take(layers).cloned().collect(),
        }
    }

    /// Checks width against the node count and each layer against the
    /// hardware's maximum matching.
    pub fn check_fits(&self, graph: &HardwareGraph) -> Result<()> {
        if self.num_qubits > graph.num_nodes() {
            return Err(Error::CircuitTooWide {
                qubits: self.num_qubits,
                nodes: graph.num_nodes(),
            });
        }
        let widest = self.groups.iter().map(Vec::len).max().unwrap_or(0);
        if widest > 0 {
            let matching = graph.matching_number();
            if let Some(layer) = self.groups.iter().position(|g| g.len() > matching) {
                return Err(Error::LayerTooWide {
                    layer,
                    gates: self.groups[layer].len(),
                    matching,
                });
            }
        }
        Ok(())
    }

    /// Full unitary with qubit `k` on wire `k`.
    pub fn unitary(&self) -> Unitary {
        let mut u = Unitary::identity(self.num_qubits);
        for g in self.gates() {
            u.apply2(&g.unitary, g.p, g.q);
        }
        u
    }

    pub fn to_doc(&self) -> CircuitDoc {
        let mut gates: Vec<&Gate> = self.gates().collect();
        gates.sort_by_key(|g| g.id);
        CircuitDoc {
            qubits: self.num_qubits,
            gates: gates
                .into_iter()
                .map(|g| GateDoc {
                    p: Some(g.p),
                    q: Some(g.q),
                    kind: "matrix".into(),
                    matrix: Some(gates::to_entries(&g.unitary)),
                })
                .collect(),
        }
    }
}

fn check_gate(g: &Gate, width: usize) -> Result<()> {
    if g.p == g.q {
        return Err(Error::RepeatedQubit(g.p));
    }
    for x in [g.p, g.q] {
        if x >= width {
            return Err(Error::QubitOutOfRange { qubit: x, width });
        }
    }
    Ok(())
}

/// Circuit document: `{"qubits": 4, "gates": [{"p": 0, "q": 1, "kind": "cx"}, …]}`.
///
/// `kind` is one of `cx`, `cz`, `swap`, `iswap`, `id`, or `matrix` (with 16
/// row-major `[re, im]` entries in `matrix`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitDoc {
    pub qubits: usize,
    pub gates: Vec<GateDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateDoc {
    #[serde(default)]
    pub p: Option<QubitId>,
    #[serde(default)]
    pub q: Option<QubitId>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
}

impl CircuitDoc {
    pub fn to_gates(&self) -> Result<Vec<Gate>> {
        self.gates
            .iter()
            .enumerate()
            .map(|(index, d)| {
                let (Some(p), Some(q)) = (d.p, d.q) else {
                    return Err(Error::SingleQubitGate(index));
                };
                let unitary = match d.kind.to_ascii_lowercase().as_str() {
                    "cx" | "cnot" => gates::cx(),
                    "cz" => gates::cz(),
                    "swap" => gates::swap(),
                    "iswap" => gates::iswap(),
                    "id" | "identity" => gates::identity(),
                    "matrix" | "su4" | "unitary" => {
                        let entries = d.matrix.as_ref().ok_or_else(|| Error::MalformedGate {
                            index,
                            reason: "matrix gate without entries".into(),
                        })?;
                        let m =
                            gates::from_entries(entries).ok_or_else(|| Error::MalformedGate {
                                index,
                                reason: format!("expected 16 entries, got {}", entries.len()),
                            })?;
                        let dev = gates::unitarity_deviation(&m);
                        if dev > 1e-9 {
                            return Err(Error::NotUnitary(dev));
                        }
                        m
                    }
                    other => return Err(Error::UnknownGateKind(other.to_string())),
                };
                Ok(Gate::new(p, q, unitary))
            })
            .collect()
    }

    pub fn to_circuit(&self) -> Result<LayeredCircuit> {
        LayeredCircuit::layerize(self.qubits, self.to_gates()?)
    }
}

pub fn load_circuit(path: impl AsRef<Path>) -> Result<LayeredCircuit> {
    let text = std::fs::read_to_string(path)?;
    let doc: CircuitDoc = serde_json::from_str(&text)?;
    doc.to_circuit()
}

/// The five-gate circuit on four qubits used as the running example
/// (0-based qubits; `U1..U5` are CNOTs unless payloads are supplied).
pub fn example_circuit(payloads: Option<[Mat4; 5]>) -> LayeredCircuit {
    let pairs = [(0, 1), (2, 3), (0, 3), (0, 2), (1, 3)];
    let mats = payloads.unwrap_or_else(|| std::array::from_fn(|_| gates::cx()));
    let gates = pairs
        .iter()
        .zip(mats)
        .map(|(&(p, q), u)| Gate::new(p, q, u))
        .collect();
    LayeredCircuit::layerize(4, gates).expect("valid example")
}
