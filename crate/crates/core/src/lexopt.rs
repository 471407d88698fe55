//! Lexicographic optimization and Pareto sweeps over the allocation
//! objectives.

use std::io::Write;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::bipmodel::{Model, ObjectiveKind};
use crate::error::{Error, Result};
use crate::solver::{solve_branch_and_bound, SolveLimits, SolveResult, Status};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StageValue {
    pub objective: ObjectiveKind,
    pub value: f64,
    pub status: Status,
}

#[derive(Clone, Debug)]
pub struct LexResult {
    /// Result of the last stage; its incumbent is the lexicographic optimum.
    pub result: SolveResult,
    pub stages: Vec<StageValue>,
}

impl LexResult {
    pub fn value(&self, kind: ObjectiveKind) -> Option<f64> {
        self.stages
            .iter()
            .find(|s| s.objective == kind)
            .map(|s| s.value)
    }

    /// Optimal only when every stage was solved to optimality.
    pub fn status(&self) -> Status {
        if self.stages.iter().all(|s| s.status == Status::Optimal) {
            Status::Optimal
        } else {
            Status::Feasible
        }
    }
}

fn check_order(order: &[ObjectiveKind]) -> Result<()> {
    if order.is_empty() {
        return Err(Error::Config("empty objective order".into()));
    }
    for (k, a) in order.iter().enumerate() {
        if order[..k].contains(a) {
            return Err(Error::Config(format!("objective {a} listed twice")));
        }
    }
    Ok(())
}

/// Bound row value for a fixed objective: tolerant for the error objective,
/// exact for the integral ones.
fn fixed_bound(kind: ObjectiveKind, value: f64) -> f64 {
    value + kind.fixing_tolerance()
}

/// Solves `order[0]`, then each later objective with all earlier ones
/// bounded by their recorded optima. `first_bound` replaces the first
/// stage's recorded optimum when given.
fn run_stages(
    model: &Model,
    order: &[ObjectiveKind],
    lim: &SolveLimits,
    first_bound: Option<f64>,
) -> Result<LexResult> {
    check_order(order)?;
    for &kind in order {
        model.objective(kind)?;
    }
    let mut stages: Vec<StageValue> = Vec::new();
    let mut cutoffs: Vec<(ObjectiveKind, f64)> = Vec::new();
    let mut last: Option<SolveResult> = None;
    for (k, &kind) in order.iter().enumerate() {
        if k == 1 {
            if let Some(b) = first_bound {
                cutoffs[0].1 = b;
            }
        }
        let problem = model.problem(kind, &cutoffs)?;
        let mut stage_lim = lim.clone();
        // The previous stage's solution stays feasible, so its value of
        // this objective bounds the new optimum.
        if let Some(prev) = last.as_ref().and_then(|r| r.incumbent.as_ref()) {
            let v = problem.objective.value(prev);
            stage_lim.cutoff = Some(lim.cutoff.map_or(v, |c| c.min(v)) + 1e-9);
        } else if k > 0 {
            stage_lim.cutoff = None;
        }
        let r = solve_branch_and_bound(&problem, &stage_lim)?;
        match r.status {
            Status::Infeasible if k == 0 => return Err(Error::ProblemInfeasible),
            Status::Unknown if k == 0 => return Err(Error::NoIncumbent),
            Status::Infeasible | Status::Unknown => {
                // Keep the previous incumbent; it satisfies every bound.
                let prev = last.clone().expect("earlier stage has an incumbent");
                let v = problem.objective.value(prev.incumbent.as_ref().unwrap());
                stages.push(StageValue {
                    objective: kind,
                    value: v,
                    status: Status::Feasible,
                });
                cutoffs.push((kind, fixed_bound(kind, v)));
                continue;
            }
            Status::Optimal | Status::Feasible => {}
        }
        stages.push(StageValue {
            objective: kind,
            value: r.objective_value,
            status: r.status,
        });
        cutoffs.push((kind, fixed_bound(kind, r.objective_value)));
        last = Some(r);
    }
    let mut result = last.expect("at least one stage");
    result.wall_time = Duration::ZERO;
    Ok(LexResult { result, stages })
}

pub fn lexicographic_solve(
    model: &Model,
    order: &[ObjectiveKind],
    lim: &SolveLimits,
) -> Result<LexResult> {
    run_stages(model, order, lim, None)
}

/// Result of comparing an objective's value after lexicographic
/// optimization against its own unconstrained optimum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TradeOff {
    pub constrained: f64,
    pub unconstrained: f64,
}

impl TradeOff {
    pub fn exists(&self, kind: ObjectiveKind) -> bool {
        self.constrained > self.unconstrained + kind.fixing_tolerance().max(1e-9)
    }
}

/// Value of `second` when `first` is optimized first, next to the best
/// value `second` reaches on its own.
pub fn detect_tradeoff(
    model: &Model,
    first: ObjectiveKind,
    second: ObjectiveKind,
    lim: &SolveLimits,
) -> Result<TradeOff> {
    let lex = lexicographic_solve(model, &[first, second], lim)?;
    let alone = lexicographic_solve(model, &[second], lim)?;
    Ok(TradeOff {
        constrained: lex.stages[1].value,
        unconstrained: alone.stages[0].value,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ParetoPoint {
    pub step: usize,
    /// Bound imposed on the first objective.
    pub bound: f64,
    /// Stage values in `order`; the first is the achieved value of the
    /// relaxed objective.
    pub values: Vec<f64>,
}

impl ParetoPoint {
    pub fn primary(&self) -> f64 {
        self.values[0]
    }

    pub fn secondary(&self) -> Option<f64> {
        self.values.get(1).copied()
    }

    pub fn tertiary(&self) -> Option<f64> {
        self.values.get(2).copied()
    }
}

/// Default relaxation step: one unit for integral objectives and the cost of
/// one SWAP at the mean edge fidelity for the error objective.
pub fn default_step(kind: ObjectiveKind, mean_beta: f64) -> f64 {
    match kind {
        ObjectiveKind::Error => -3.0 * mean_beta.ln(),
        ObjectiveKind::Depth | ObjectiveKind::Crosstalk => 1.0,
    }
}

/// Re-solves the later stages while the bound on the first objective grows
/// by `step_size` per step.
pub fn pareto_sweep(
    model: &Model,
    order: &[ObjectiveKind],
    steps: usize,
    step_size: f64,
    lim: &SolveLimits,
) -> Result<Vec<ParetoPoint>> {
    if steps == 0 {
        return Err(Error::Config("a sweep needs at least one step".into()));
    }
    let base = lexicographic_solve(model, order, lim)?;
    let o1 = base.stages[0].value;
    let first = order[0];
    let mut points = Vec::with_capacity(steps);
    for s in 0..steps {
        let lex = if s == 0 {
            base.clone()
        } else {
            let bound = fixed_bound(first, o1 + s as f64 * step_size);
            run_stages(model, order, lim, Some(bound))?
        };
        let x = lex.result.solution()?;
        let mut values = vec![model.objective(first)?.value(x)];
        values.extend(lex.stages[1..].iter().map(|st| st.value));
        points.push(ParetoPoint {
            step: s,
            bound: o1 + s as f64 * step_size,
            values,
        });
    }
    Ok(points)
}

/// One row of a sweep table: a circuit, a step and one objective.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub circuit: usize,
    pub step: usize,
    pub objective: ObjectiveKind,
    pub value: f64,
    pub relative_increase: f64,
}

/// Increase over the minimum across a circuit's sweep, relative to that
/// minimum; absolute when the minimum is zero.
pub fn relative_increase(value: f64, min: f64) -> f64 {
    if min.abs() > 1e-12 {
        (value - min) / min
    } else {
        value - min
    }
}

pub fn sweep_rows(
    circuit: usize,
    order: &[ObjectiveKind],
    points: &[ParetoPoint],
) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for (k, &kind) in order.iter().enumerate() {
        let min = points
            .iter()
            .map(|p| p.values[k])
            .fold(f64::INFINITY, f64::min);
        for p in points {
            rows.push(SweepRow {
                circuit,
                step: p.step,
                objective: kind,
                value: p.values[k],
                relative_increase: relative_increase(p.values[k], min),
            });
        }
    }
    rows
}

/// Mean relative increase per step and objective across circuits.
#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub step: usize,
    pub objective: ObjectiveKind,
    pub mean_relative_increase: f64,
    pub mean_value: f64,
}

pub fn summarize(rows: &[SweepRow], order: &[ObjectiveKind]) -> Vec<SweepSummary> {
    let steps = rows.iter().map(|r| r.step + 1).max().unwrap_or(0);
    let mut out = Vec::new();
    for step in 0..steps {
        for &kind in order {
            let sel: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.step == step && r.objective == kind)
                .collect();
            if sel.is_empty() {
                continue;
            }
            let n = sel.len() as f64;
            out.push(SweepSummary {
                step,
                objective: kind,
                mean_relative_increase: sel.iter().map(|r| r.relative_increase).sum::<f64>() / n,
                mean_value: sel.iter().map(|r| r.value).sum::<f64>() / n,
            });
        }
    }
    out
}

/// Sweeps every model of a batch, `jobs` at a time.
pub fn pareto_batch(
    models: &[Model],
    order: &[ObjectiveKind],
    steps: usize,
    step_size: f64,
    lim: &SolveLimits,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let per: Vec<Result<Vec<SweepRow>>> = pool.install(|| {
        models
            .par_iter()
            .enumerate()
            .map(|(k, m)| {
                Ok(sweep_rows(
                    k,
                    order,
                    &pareto_sweep(m, order, steps, step_size, lim)?,
                ))
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in per {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_table<T: Serialize>(out: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipmodel::ModelOptions;
    use crate::circuit::{example_circuit, Gate, LayeredCircuit};
    use crate::gatefid::FidelityModel;
    use crate::hwgraph::{Builtin, HardwareGraph};

    fn fig1(k: usize) -> Model {
        let c = example_circuit(None).insert_dummy_steps(k);
        let g = HardwareGraph::builtin(Builtin::Line, 4).unwrap();
        Model::build(
            &c,
            &g,
            &FidelityModel::from_circuit(&c),
            ModelOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn single_objective_matches_plain_solve() {
        let m = fig1(1);
        let lim = SolveLimits::default();
        let lex = lexicographic_solve(&m, &[ObjectiveKind::Error], &lim).unwrap();
        let p = m.problem(ObjectiveKind::Error, &[]).unwrap();
        let r = solve_branch_and_bound(&p, &lim).unwrap();
        assert_eq!(lex.stages[0].value, r.objective_value);
        assert_eq!(lex.status(), Status::Optimal);
    }

    #[test]
    fn error_then_depth() {
        let m = fig1(1);
        let lim = SolveLimits::default();
        let lex =
            lexicographic_solve(&m, &[ObjectiveKind::Error, ObjectiveKind::Depth], &lim).unwrap();
        let x = lex.result.solution().unwrap();
        let e = m.objective(ObjectiveKind::Error).unwrap().value(x);
        assert!((e - lex.stages[0].value).abs() < 1e-6);
        let t = detect_tradeoff(&m, ObjectiveKind::Error, ObjectiveKind::Depth, &lim).unwrap();
        assert!(!t.exists(ObjectiveKind::Depth));
    }

    #[test]
    fn sweep_is_monotone() {
        // Gate (0,3) needs qubits 0 and 3 adjacent after layer 0 pins them.
        let gates = vec![
            Gate::cx(0, 1),
            Gate::cx(2, 3),
            Gate::cx(0, 3),
            Gate::cx(1, 2),
        ];
        let c = LayeredCircuit::layerize(4, gates)
            .unwrap()
            .insert_dummy_steps(2);
        let g = HardwareGraph::builtin(Builtin::Line, 4).unwrap();
        let m = Model::build(
            &c,
            &g,
            &FidelityModel::from_circuit(&c),
            ModelOptions::default(),
        )
        .unwrap();
        let order = [ObjectiveKind::Depth, ObjectiveKind::Error];
        let pts = pareto_sweep(&m, &order, 3, 1.0, &SolveLimits::default()).unwrap();
        assert_eq!(pts.len(), 3);
        for w in pts.windows(2) {
            assert!(w[1].values[1] <= w[0].values[1] + 1e-9);
        }
        let rows = sweep_rows(0, &order, &pts);
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.relative_increase >= 0.0));
        let sum = summarize(&rows, &order);
        assert_eq!(sum.len(), 6);
        let mut buf = Vec::new();
        write_table(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("circuit,step,objective,value,relative_increase\n"));
        assert!(pareto_sweep(&m, &order, 0, 1.0, &SolveLimits::default()).is_err());
    }

    #[test]
    fn relative_increase_convention() {
        assert_eq!(relative_increase(3.0, 2.0), 0.5);
        assert_eq!(relative_increase(2.0, 0.0), 2.0);
    }

    #[test]
    fn bad_orders() {
        let m = fig1(0);
        let lim = SolveLimits::default();
        assert!(lexicographic_solve(&m, &[], &lim).is_err());
        assert!(
            lexicographic_solve(&m, &[ObjectiveKind::Depth, ObjectiveKind::Depth], &lim).is_err()
        );
        assert!(matches!(
            lexicographic_solve(&m, &[ObjectiveKind::Crosstalk], &lim),
            Err(Error::MissingObjective(_))
        ));
    }
}
