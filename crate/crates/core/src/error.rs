use thiserror::Error;

use crate::bipmodel::Family;

/// Errors raised across the allocation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("hardware graph is disconnected")]
    Disconnected,
    #[error("self-loop on node {0}")]
    SelfLoop(i64),
    #[error("unknown node {0}")]
    UnknownNode(i64),
    #[error("duplicate node label {0}")]
    DuplicateNode(i64),
    #[error("edge {0}-{1} is not in the hardware graph")]
    MissingEdge(i64, i64),
    #[error("CNOT fidelity {0} outside (0, 1]")]
    BetaOutOfRange(f64),
    #[error("unsupported builtin topology {name} with {n} qubits")]
    UnsupportedTopology { name: String, n: usize },

    #[error("gate acts twice on qubit {0}")]
    RepeatedQubit(usize),
    #[error("qubit {qubit} out of range for a {width}-qubit circuit")]
    QubitOutOfRange { qubit: usize, width: usize },
    #[error("circuit wider than hardware ({qubits} qubits, {nodes} nodes)")]
    CircuitTooWide { qubits: usize, nodes: usize },
    #[error("layer {layer} has {gates} gates but the hardware matching number is {matching}")]
    LayerTooWide {
        layer: usize,
        gates: usize,
        matching: usize,
    },
    #[error("single-qubit gate at position {0}; merge single-qubit gates into neighboring two-qubit gates first")]
    SingleQubitGate(usize),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("unknown gate kind '{0}'")]
    UnknownGateKind(String),
    #[error("malformed gate entry at position {index}: {reason}")]
    MalformedGate { index: usize, reason: String },

    #[error("CNOT count {0} outside 0..=3")]
    CnotCountOutOfRange(usize),
    #[error("fidelity override for unknown gate {0}")]
    UnknownGateOverride(usize),

    #[error("variable space does not match the model ({0})")]
    MismatchedModel(String),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("assignment violates row {name} ({family:?}): activity {activity}, rhs {rhs}")]
    Infeasible {
        name: String,
        family: Family,
        activity: f64,
        rhs: f64,
    },
    #[error("problem is infeasible")]
    ProblemInfeasible,
    #[error("no incumbent found within limits")]
    NoIncumbent,
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("objective {0} is not available in this model")]
    MissingObjective(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
