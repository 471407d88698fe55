//! Exact solving, model export and solution import.

mod bnb;
mod exhaustive;
mod export;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;

use crate::bipmodel::BipProblem;
use crate::error::{Error, Result};

pub use bnb::solve_branch_and_bound;
pub use exhaustive::{solve_exhaustive, ExhaustiveLimits};
pub use export::{export_model, import_model, ModelFormat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    /// A limit was hit after an incumbent was found.
    Feasible,
    Infeasible,
    /// A limit was hit before any incumbent was found.
    Unknown,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Emphasis {
    /// Dive on the preferred value to find incumbents early.
    #[default]
    Find,
    /// Order children by their bound.
    Prove,
}

impl FromStr for Emphasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "find" => Ok(Emphasis::Find),
            "prove" => Ok(Emphasis::Prove),
            _ => Err(Error::Config(format!("unknown emphasis '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Only solutions with objective at most this value are accepted.
    pub cutoff: Option<f64>,
    pub emphasis: Emphasis,
}

impl SolveLimits {
    pub fn with_time(secs: f64) -> Self {
        SolveLimits {
            time_limit: Some(Duration::from_secs_f64(secs)),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: Status,
    pub incumbent: Option<Vec<bool>>,
    pub objective_value: f64,
    pub dual_bound: f64,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

impl SolveResult {
    pub fn solution(&self) -> Result<&[bool]> {
        match (&self.incumbent, self.status) {
            (Some(x), _) => Ok(x),
            (None, Status::Infeasible) => Err(Error::ProblemInfeasible),
            (None, _) => Err(Error::NoIncumbent),
        }
    }
}

/// Writes `name value` lines for every variable set to one.
pub fn write_solution(p: &BipProblem, x: &[bool]) -> String {
    let mut out = String::new();
    for (name, _) in p.names.iter().zip(x).filter(|(_, &v)| v) {
        out.push_str(name);
        out.push_str(" 1\n");
    }
    out
}

/// Reads a `name value` solution document, checks it against every row and
/// evaluates the objective. Variables not listed are zero; blank lines and
/// lines starting with `#` are ignored.
pub fn import_solution(p: &BipProblem, doc: &str) -> Result<SolveResult> {
    let index: std::collections::HashMap<&str, usize> = p
        .names
        .iter()
        .enumerate()
        .map(|(k, n)| (n.as_str(), k))
        .collect();
    let mut x = vec![false; p.num_vars()];
    for (line_no, line) in doc.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                line: line_no + 1,
                reason: format!("expected '<name> <value>', got '{line}'"),
            });
        };
        let v: f64 = value.parse().map_err(|_| Error::Parse {
            line: line_no + 1,
            reason: format!("bad value '{value}'"),
        })?;
        let &k = index
            .get(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        if (v - v.round()).abs() > 1e-6 || !(0.0..=1.0).contains(&v.round()) {
            return Err(Error::Parse {
                line: line_no + 1,
                reason: format!("value {v} of {name} is not binary"),
            });
        }
        x[k] = v.round() == 1.0;
    }
    p.check(&x)?;
    let value = p.objective.value(&x);
    Ok(SolveResult {
        status: Status::Feasible,
        incumbent: Some(x),
        objective_value: value,
        dual_bound: f64::NEG_INFINITY,
        nodes_explored: 0,
        wall_time: Duration::ZERO,
    })
}
