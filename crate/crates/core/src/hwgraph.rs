//! Hardware coupling graphs.
//!
//! Nodes are stored densely as `0..n`; the labels used by external documents
//! are kept alongside so results can be reported in the user's numbering.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Average CNOT fidelity used when a topology does not specify one.
pub const DEFAULT_BETA: f64 = 0.9936;

/// Undirected edge, stored with `0 < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub NodeId, pub NodeId);

impl Edge {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn touches(&self, n: NodeId) -> bool {
        self.0 == n || self.1 == n
    }
}

/// One orientation of a hardware edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub from: NodeId,
    pub to: NodeId,
}

impl Arc {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Arc { from, to }
    }

    pub fn edge(&self) -> Edge {
        Edge::new(self.from, self.to)
    }

    pub fn reversed(&self) -> Arc {
        Arc::new(self.to, self.from)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Line,
    Y,
    Grid,
}

impl std::str::FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "line" | "chain" => Ok(Builtin::Line),
            "y" => Ok(Builtin::Y),
            "grid" => Ok(Builtin::Grid),
            other => Err(Error::UnsupportedTopology {
                name: other.to_string(),
                n: 0,
            }),
        }
    }
}

/// Topology document as read from disk.
///
/// ```json
/// { "nodes": [1, 2, 3], "edges": [[1, 2], [2, 3]],
///   "beta": [[1, 2, 0.99]], "crosstalk_pairs": [[[1, 2], [2, 3]]],
///   "default_beta": 0.9936 }
/// ```
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TopologyDoc {
    pub nodes: Vec<i64>,
    pub edges: Vec<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<(i64, i64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crosstalk_pairs: Vec<[[i64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_beta: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct HardwareGraph {
    labels: Vec<i64>,
    edges: Vec<Edge>,
    beta: Vec<f64>,
    crosstalk: Vec<(usize, usize)>,
    adjacency: Vec<Vec<NodeId>>,
    distance: Vec<Vec<usize>>,
}

impl HardwareGraph {
    /// Builds a graph over nodes `0..labels.len()`.
    ///
    /// `beta` is indexed like `edges`; `crosstalk` holds pairs of edges.
    pub fn new(
        labels: Vec<i64>,
        edges: &[Edge],
        beta: &[f64],
        crosstalk: &[(Edge, Edge)],
    ) -> Result<Self> {
        let n = labels.len();
        let mut seen = BTreeSet::new();
        for &l in &labels {
            if !seen.insert(l) {
                return Err(Error::DuplicateNode(l));
            }
        }
        let mut by_edge: BTreeMap<Edge, f64> = BTreeMap::new();
        for (k, e) in edges.iter().enumerate() {
            if e.0 >= n || e.1 >= n {
                return Err(Error::UnknownNode(e.0.max(e.1) as i64));
            }
            if e.0 == e.1 {
                return Err(Error::SelfLoop(labels[e.0]));
            }
            let b = beta.get(k).copied().unwrap_or(DEFAULT_BETA);
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::BetaOutOfRange(b));
            }
            by_edge.insert(Edge::new(e.0, e.1), b);
        }
        let edges: Vec<Edge> = by_edge.keys().copied().collect();
        let beta: Vec<f64> = by_edge.values().copied().collect();

        let mut xt = BTreeSet::new();
        for (a, b) in crosstalk {
            let ia = edges
                .binary_search(&Edge::new(a.0, a.1))
                .map_err(|_| Error::MissingEdge(label_or(&labels, a.0), label_or(&labels, a.1)))?;
            let ib = edges
                .binary_search(&Edge::new(b.0, b.1))
                .map_err(|_| Error::MissingEdge(label_or(&labels, b.0), label_or(&labels, b.1)))?;
            if ia != ib {
                xt.insert((ia.min(ib), ia.max(ib)));
            }
        }

        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.0].push(e.1);
            adjacency[e.1].push(e.0);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        let distance = all_pairs_bfs(&adjacency);
        if n > 0 && distance[0].contains(&usize::MAX) {
            return Err(Error::Disconnected);
        }
        Ok(HardwareGraph {
            labels,
            edges,
            beta,
            crosstalk: xt.into_iter().collect(),
            adjacency,
            distance,
        })
    }

    /// Validates and normalizes a topology document.
    pub fn from_doc(doc: &TopologyDoc) -> Result<Self> {
        let index: BTreeMap<i64, usize> =
            doc.nodes.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let lookup = |l: i64| index.get(&l).copied().ok_or(Error::UnknownNode(l));
        let default_beta = doc.default_beta.unwrap_or(DEFAULT_BETA);
        if !(default_beta > 0.0 && default_beta <= 1.0) {
            return Err(Error::BetaOutOfRange(default_beta));
        }
        let mut edges = Vec::with_capacity(doc.edges.len());
        for &[a, b] in &doc.edges {
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            edges.push(Edge::new(lookup(a)?, lookup(b)?));
        }
        let mut beta = vec![default_beta; edges.len()];
        for &(a, b, v) in &doc.beta {
            let e = Edge::new(lookup(a)?, lookup(b)?);
            let k = edges
                .iter()
                .position(|x| *x == e)
                .ok_or(Error::MissingEdge(a, b))?;
            beta[k] = v;
        }
        let mut crosstalk = Vec::with_capacity(doc.crosstalk_pairs.len());
        for [[a, b], [c, d]] in &doc.crosstalk_pairs {
            crosstalk.push((
                Edge::new(lookup(*a)?, lookup(*b)?),
                Edge::new(lookup(*c)?, lookup(*d)?),
            ));
        }
        HardwareGraph::new(doc.nodes.clone(), &edges, &beta, &crosstalk)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let doc: TopologyDoc = serde_json::from_str(&text)?;
        Self::from_doc(&doc)
    }

    pub fn to_doc(&self) -> TopologyDoc {
        let l = |n: NodeId| self.labels[n];
        TopologyDoc {
            nodes: self.labels.clone(),
            edges: self.edges.iter().map(|e| [l(e.0), l(e.1)]).collect(),
            beta: self
                .edges
                .iter()
                .zip(&self.beta)
                .map(|(e, &b)| (l(e.0), l(e.1), b))
                .collect(),
            crosstalk_pairs: self
                .crosstalk
                .iter()
                .map(|&(a, b)| {
                    let (ea, eb) = (self.edges[a], self.edges[b]);
                    [[l(ea.0), l(ea.1)], [l(eb.0), l(eb.1)]]
                })
                .collect(),
            default_beta: None,
        }
    }

    /// The topologies used for the 6- and 8-qubit experiments, plus lines of
    /// any length. Labels are 1-based like the published drawings.
    pub fn builtin(kind: Builtin, n: usize) -> Result<Self> {
        Self::builtin_with_beta(kind, n, DEFAULT_BETA)
    }

    pub fn builtin_with_beta(kind: Builtin, n: usize, beta: f64) -> Result<Self> {
        let unsupported = || Error::UnsupportedTopology {
            name: format!("{kind:?}").to_lowercase(),
            n,
        };
        type Pair = (usize, usize);
        // (edges, crosstalk label pairs), 1-based.
        let (edges, xt): (Vec<Pair>, Vec<(Pair, Pair)>) = match (kind, n) {
            (Builtin::Line, 6) => (
                (1..6).map(|i| (i, i + 1)).collect(),
                vec![((1, 2), (3, 4)), ((2, 3), (4, 5)), ((3, 4), (5, 6))],
            ),
            (Builtin::Line, k) if k >= 2 => ((1..k).map(|i| (i, i + 1)).collect(), vec![]),
            (Builtin::Line, _) => return Err(unsupported()),
            (Builtin::Y, 6) => (
                vec![(1, 2), (2, 3), (3, 4), (4, 5), (3, 6)],
                vec![
                    ((1, 2), (3, 4)),
                    ((1, 2), (3, 6)),
                    ((2, 3), (4, 5)),
                    ((4, 5), (3, 6)),
                ],
            ),
            (Builtin::Y, 8) => (
                vec![(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (4, 7), (7, 8)],
                vec![],
            ),
            (Builtin::Grid, 6) => (
                vec![(1, 2), (2, 3), (1, 4), (2, 5), (3, 6), (4, 5), (5, 6)],
                vec![
                    ((1, 2), (4, 5)),
                    ((2, 3), (5, 6)),
                    ((1, 4), (2, 5)),
                    ((2, 5), (3, 6)),
                ],
            ),
            (Builtin::Grid, 8) => (
                vec![
                    (1, 2),
                    (2, 3),
                    (3, 4),
                    (1, 5),
                    (2, 6),
                    (3, 7),
                    (4, 8),
                    (5, 6),
                    (6, 7),
                    (7, 8),
                ],
                vec![],
            ),
            _ => return Err(unsupported()),
        };
        let z = |(a, b): (usize, usize)| Edge::new(a - 1, b - 1);
        let edges: Vec<Edge> = edges.into_iter().map(z).collect();
        let xt: Vec<(Edge, Edge)> = xt.into_iter().map(|(a, b)| (z(a), z(b))).collect();
        let labels = (1..=n as i64).collect();
        HardwareGraph::new(labels, &edges, &vec![beta; edges.len()], &xt)
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, n: NodeId) -> i64 {
        self.labels[n]
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_index(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.edges.binary_search(&Edge::new(a, b)).ok()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edge_index(a, b).is_some()
    }

    /// Fidelity of a CNOT on the edge `k` (index into [`Self::edges`]).
    pub fn beta(&self, k: usize) -> f64 {
        self.beta[k]
    }

    pub fn beta_between(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.edge_index(a, b).map(|k| self.beta[k])
    }

    pub fn mean_beta(&self) -> f64 {
        if self.beta.is_empty() {
            return DEFAULT_BETA;
        }
        self.beta.iter().sum::<f64>() / self.beta.len() as f64
    }

    pub fn min_beta(&self) -> f64 {
        self.beta.iter().copied().fold(1.0, f64::min)
    }

    /// Crosstalk pairs as indices into [`Self::edges`].
    pub fn crosstalk_pairs(&self) -> &[(usize, usize)] {
        &self.crosstalk
    }

    /// Both orientations of every edge, sorted by `(from, to)`.
    pub fn arcs(&self) -> Vec<Arc> {
        let mut arcs: Vec<Arc> = self
            .edges
            .iter()
            .flat_map(|e| [Arc::new(e.0, e.1), Arc::new(e.1, e.0)])
            .collect();
        arcs.sort_unstable();
        arcs
    }

    pub fn neighborhood(&self, i: NodeId) -> Result<&[NodeId]> {
        self.adjacency
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownNode(i as i64))
    }

    /// Neighbors of a node known to exist.
    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.adjacency[i]
    }

    /// Hop distance between two nodes.
    pub fn distance(&self, a: NodeId, b: NodeId) -> usize {
        self.distance[a][b]
    }

    /// A shortest path from `a` to `b`, both endpoints included.
    pub fn shortest_path(&self, a: NodeId, b: NodeId) -> Vec<NodeId> {
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            cur = *self.adjacency[cur]
                .iter()
                .find(|&&n| self.distance[n][b] + 1 == self.distance[cur][b])
                .expect("connected graph");
            path.push(cur);
        }
        path
    }

    /// Size of a maximum matching. Exponential in the worst case; intended
    /// for device-sized graphs.
    pub fn matching_number(&self) -> usize {
        fn go(adj: &[Vec<NodeId>], used: &mut Vec<bool>, from: usize) -> usize {
            let Some(i) = (from..used.len()).find(|&i| !used[i]) else {
                return 0;
            };
            used[i] = true;
            let mut best = go(adj, used, i + 1);
            for &j in &adj[i] {
                if !used[j] {
                    used[j] = true;
                    best = best.max(1 + go(adj, used, i + 1));
                    used[j] = false;
                }
            }
            used[i] = false;
            best
        }
        let mut used = vec![false; self.num_nodes()];
        go(&self.adjacency, &mut used, 0)
    }

    /// Every set of pairwise-disjoint edges, including the empty set. Each
    /// matching is a list of edge indices in increasing order.
    pub fn matchings(&self) -> Vec<Vec<usize>> {
        fn go(
            g: &HardwareGraph,
            k: usize,
            used: &mut Vec<bool>,
            cur: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if k == g.edges.len() {
                out.push(cur.clone());
                return;
            }
            go(g, k + 1, used, cur, out);
            let e = g.edges[k];
            if !used[e.0] && !used[e.1] {
                used[e.0] = true;
                used[e.1] = true;
                cur.push(k);
                go(g, k + 1, used, cur, out);
                cur.pop();
                used[e.0] = false;
                used[e.1] = false;
            }
        }
        let mut out = Vec::new();
        go(
            self,
            0,
            &mut vec![false; self.num_nodes()],
            &mut Vec::new(),
            &mut out,
        );
        out
    }
}

fn label_or(labels: &[i64], n: NodeId) -> i64 {
    labels.get(n).copied().unwrap_or(n as i64)
}

fn all_pairs_bfs(adj: &[Vec<NodeId>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut out = vec![vec![usize::MAX; n]; n];
    for (s, row) in out.iter_mut().enumerate() {
        row[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if row[v] == usize::MAX {
                    row[v] = row[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_doc(n: i64) -> TopologyDoc {
        TopologyDoc {
            nodes: (1..=n).collect(),
            edges: (1..n).map(|i| [i, i + 1]).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn path_gets_default_beta() {
        let g = HardwareGraph::from_doc(&path_doc(4)).unwrap();
        assert_eq!(g.edges().len(), 3);
        for k in 0..3 {
            assert_eq!(g.beta(k), 0.9936);
        }
    }

    #[test]
    fn single_node_is_connected() {
        let doc = TopologyDoc {
            nodes: vec![7],
            ..Default::default()
        };
        let g = HardwareGraph::from_doc(&doc).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert!(g.arcs().is_empty());
    }

    #[test]
    fn rejects_bad_documents() {
        let mut doc = TopologyDoc {
            nodes: vec![1, 2, 3, 4],
            edges: vec![[1, 2], [3, 4]],
            ..Default::default()
        };
        assert!(matches!(
            HardwareGraph::from_doc(&doc),
            Err(Error::Disconnected)
        ));
        doc.edges = vec![[1, 2], [2, 2], [3, 4]];
        assert!(matches!(
            HardwareGraph::from_doc(&doc),
            Err(Error::SelfLoop(2))
        ));
        let mut doc = path_doc(4);
        doc.crosstalk_pairs = vec![[[1, 2], [1, 3]]];
        assert!(matches!(
            HardwareGraph::from_doc(&doc),
            Err(Error::MissingEdge(1, 3))
        ));
        let mut doc = path_doc(4);
        doc.beta = vec![(1, 2, 1.5)];
        assert!(matches!(
            HardwareGraph::from_doc(&doc),
            Err(Error::BetaOutOfRange(_))
        ));
    }

    #[test]
    fn line6_crosstalk_labels() {
        let g = HardwareGraph::builtin(Builtin::Line, 6).unwrap();
        let pairs: Vec<_> = g
            .crosstalk_pairs()
            .iter()
            .map(|&(a, b)| (g.edges()[a], g.edges()[b]))
            .collect();
        assert_eq!(
            pairs,
            vec![
                (Edge(0, 1), Edge(2, 3)),
                (Edge(1, 2), Edge(3, 4)),
                (Edge(2, 3), Edge(4, 5)),
            ]
        );
    }

    #[test]
    fn builtin_shapes() {
        let grid = HardwareGraph::builtin(Builtin::Grid, 6).unwrap();
        assert_eq!(grid.edges().len(), 7);
        assert_eq!(grid.neighbors(1), &[0, 2, 4]);
        let y8 = HardwareGraph::builtin(Builtin::Y, 8).unwrap();
        assert_eq!(y8.edges().len(), 7);
        assert_eq!(y8.neighbors(3).len(), 3);
        assert_eq!(
            HardwareGraph::builtin(Builtin::Grid, 8)
                .unwrap()
                .edges()
                .len(),
            10
        );
        assert!(HardwareGraph::builtin(Builtin::Y, 7).is_err());
        assert!(HardwareGraph::builtin(Builtin::Line, 1).is_err());
        assert_eq!(
            HardwareGraph::builtin(Builtin::Line, 11)
                .unwrap()
                .edges()
                .len(),
            10
        );
    }

    #[test]
    fn six_qubit_labels_each_cover_two_edges() {
        for kind in [Builtin::Line, Builtin::Y, Builtin::Grid] {
            let g = HardwareGraph::builtin(kind, 6).unwrap();
            assert!(!g.crosstalk_pairs().is_empty());
            for &(a, b) in g.crosstalk_pairs() {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn arcs_sorted_both_orientations() {
        let g = HardwareGraph::builtin(Builtin::Line, 3).unwrap();
        let arcs: Vec<_> = g.arcs().iter().map(|a| (a.from, a.to)).collect();
        assert_eq!(arcs, vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        let y = HardwareGraph::builtin(Builtin::Y, 6).unwrap();
        assert_eq!(y.arcs().len(), 10);
        let line7 = HardwareGraph::builtin(Builtin::Line, 7).unwrap();
        assert_eq!(line7.arcs().len(), 12);
    }

    #[test]
    fn neighborhoods() {
        let g = HardwareGraph::builtin(Builtin::Line, 3).unwrap();
        assert_eq!(g.neighborhood(1).unwrap(), &[0, 2]);
        assert!(g.neighborhood(9).is_err());
    }

    #[test]
    fn matchings_of_line4() {
        let g = HardwareGraph::builtin(Builtin::Line, 4).unwrap();
        assert_eq!(g.matchings().len(), 5);
        assert_eq!(g.matching_number(), 2);
        assert_eq!(g.shortest_path(0, 3), vec![0, 1, 2, 3]);
        assert_eq!(g.distance(3, 0), 3);
    }

    #[test]
    fn document_round_trip() {
        let g = HardwareGraph::builtin(Builtin::Grid, 6).unwrap();
        let back = HardwareGraph::from_doc(&g.to_doc()).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.crosstalk_pairs(), g.crosstalk_pairs());
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn arcs_and_neighborhoods_symmetric(n in 2usize..9, extra in proptest::collection::vec((0usize..9, 0usize..9), 0..8)) {
            let mut edges: Vec<Edge> = (0..n - 1).map(|i| Edge::new(i, i + 1)).collect();
            for (a, b) in extra {
                let (a, b) = (a % n, b % n);
                if a != b {
                    edges.push(Edge::new(a, b));
                }
            }
            let g = HardwareGraph::new((0..n as i64).collect(), &edges, &[], &[]).unwrap();
            let arcs = g.arcs();
            prop_assert_eq!(arcs.len(), 2 * g.edges().len());
            for a in &arcs {
                prop_assert!(arcs.contains(&a.reversed()));
            }
            for i in 0..n {
                prop_assert!(!g.neighbors(i).is_empty());
                for &j in g.neighbors(i) {
                    prop_assert!(j != i);
                    prop_assert!(g.neighbors(j).contains(&i));
                }
            }
        }
    }
}
