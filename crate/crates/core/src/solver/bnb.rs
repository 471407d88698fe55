//! Depth-first branch-and-bound over binary variables with activity-based
//! propagation.

use std::time::{Duration, Instant};

use crate::bipmodel::{BipProblem, Sense};
use crate::error::Result;

use super::{Emphasis, SolveLimits, SolveResult, Status};

const FEAS_TOL: f64 = 1e-9;
const PRUNE_TOL: f64 = 1e-9;

struct Engine<'a> {
    p: &'a BipProblem,
    cols: Vec<Vec<(usize, f64)>>,
    vals: Vec<i8>,
    trail: Vec<usize>,
    min_act: Vec<f64>,
    max_act: Vec<f64>,
    max_abs: Vec<f64>,
    queue: Vec<usize>,
    queued: Vec<bool>,
    cost: Vec<f64>,
    /// Disjoint set-partition rows used by the generic bound.
    partitions: Vec<Vec<usize>>,
    in_partition: Vec<bool>,
    integral: bool,
}

impl<'a> Engine<'a> {
    fn new(p: &'a BipProblem) -> Self {
        let n = p.num_vars();
        let mut cols = vec![Vec::new(); n];
        let mut min_act = Vec::with_capacity(p.rows.len());
        let mut max_act = Vec::with_capacity(p.rows.len());
        let mut max_abs = Vec::with_capacity(p.rows.len());
        for (r, row) in p.rows.iter().enumerate() {
            let (mut lo, mut hi, mut big) = (0.0, 0.0, 0.0f64);
            for &(v, a) in &row.coefs {
                cols[v].push((r, a));
                lo += a.min(0.0);
                hi += a.max(0.0);
                big = big.max(a.abs());
            }
            min_act.push(lo);
            max_act.push(hi);
            max_abs.push(big);
        }
        let mut cost = vec![0.0; n];
        for &(v, c) in &p.objective.coefs {
            cost[v] += c;
        }
        let mut in_partition = vec![false; n];
        let mut partitions = Vec::new();
        for row in &p.rows {
            let is_partition = row.sense == Sense::Eq
                && row.rhs == 1.0
                && row.coefs.len() > 1
                && row.coefs.iter().all(|&(_, a)| a == 1.0)
                && row.coefs.iter().all(|&(v, _)| !in_partition[v]);
            if is_partition {
                let vars: Vec<usize> = row.coefs.iter().map(|&(v, _)| v).collect();
                for &v in &vars {
                    in_partition[v] = true;
                }
                partitions.push(vars);
            }
        }
        Engine {
            p,
            cols,
            vals: vec![-1; n],
            trail: Vec::with_capacity(n),
            min_act,
            max_act,
            max_abs,
            queue: Vec::new(),
            queued: vec![false; p.rows.len()],
            cost,
            partitions,
            in_partition,
            integral: p.objective.is_integral(),
        }
    }

    fn assign(&mut self, v: usize, one: bool) {
        debug_assert_eq!(self.vals[v], -1);
        self.vals[v] = one as i8;
        self.trail.push(v);
        for k in 0..self.cols[v].len() {
            let (r, a) = self.cols[v][k];
            if one {
                self.min_act[r] += a - a.min(0.0);
                self.max_act[r] += a - a.max(0.0);
            } else {
                self.min_act[r] -= a.min(0.0);
                self.max_act[r] -= a.max(0.0);
            }
            if !self.queued[r] {
                self.queued[r] = true;
                self.queue.push(r);
            }
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let v = self.trail.pop().unwrap();
            let one = self.vals[v] == 1;
            for &(r, a) in &self.cols[v] {
                if one {
                    self.min_act[r] -= a - a.min(0.0);
                    self.max_act[r] -= a - a.max(0.0);
                } else {
                    self.min_act[r] += a.min(0.0);
                    self.max_act[r] += a.max(0.0);
                }
            }
            self.vals[v] = -1;
        }
    }

    fn clear_queue(&mut self) {
        for r in self.queue.drain(..) {
            self.queued[r] = false;
        }
    }

    /// Runs unit propagation to a fixpoint; false on a contradiction.
    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            self.queued[r] = false;
            let row = &self.p.rows[r];
            let (rhs, big) = (row.rhs, self.max_abs[r]);
            let upper = matches!(row.sense, Sense::Le | Sense::Eq);
            let lower = matches!(row.sense, Sense::Ge | Sense::Eq);
            if upper && self.min_act[r] > rhs + FEAS_TOL {
                self.clear_queue();
                return false;
            }
            if lower && self.max_act[r] < rhs - FEAS_TOL {
                self.clear_queue();
                return false;
            }
            let scan_up = upper && self.min_act[r] + big > rhs + FEAS_TOL;
            let scan_lo = lower && self.max_act[r] - big < rhs - FEAS_TOL;
            if !scan_up && !scan_lo {
                continue;
            }
            for k in 0..self.p.rows[r].coefs.len() {
                let (v, a) = self.p.rows[r].coefs[k];
                if self.vals[v] != -1 {
                    continue;
                }
                let mut forced = None;
                if scan_up && self.min_act[r] + a.abs() > rhs + FEAS_TOL {
                    forced = Some(a < 0.0);
                }
                if scan_lo && self.max_act[r] - a.abs() < rhs - FEAS_TOL {
                    let want = a > 0.0;
                    if forced.is_some_and(|f| f != want) {
                        self.clear_queue();
                        return false;
                    }
                    forced = Some(want);
                }
                if let Some(one) = forced {
                    self.assign(v, one);
                    if upper && self.min_act[r] > rhs + FEAS_TOL
                        || lower && self.max_act[r] < rhs - FEAS_TOL
                    {
                        self.clear_queue();
                        return false;
                    }
                }
            }
        }
        true
    }

    fn generic_bound(&self) -> f64 {
        let mut b = self.p.objective.offset;
        for (v, &c) in self.cost.iter().enumerate() {
            match self.vals[v] {
                1 => b += c,
                -1 if !self.in_partition[v] => b += c.min(0.0),
                _ => {}
            }
        }
        for part in &self.partitions {
            if part.iter().any(|&v| self.vals[v] == 1) {
                continue;
            }
            let best = part
                .iter()
                .filter(|&&v| self.vals[v] == -1)
                .map(|&v| self.cost[v])
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                b += best;
            }
        }
        b
    }

    fn bound(&self) -> Option<f64> {
        let mut b = self.generic_bound();
        if let Some(g) = &self.p.guide {
            b = b.max(g.lower_bound(&self.vals)?);
        }
        if self.integral {
            b = (b - 1e-9).ceil();
        }
        Some(b)
    }

    fn pick_branch(&self) -> Option<(usize, bool)> {
        if let Some(g) = &self.p.guide {
            if let Some((v, first)) = g.branch(&self.vals) {
                if self.vals[v] == -1 {
                    return Some((v, first));
                }
            }
        }
        self.vals.iter().position(|&x| x == -1).map(|v| (v, true))
    }

    /// The child value with the smaller bound, `preferred` on ties.
    fn better_child(&mut self, var: usize, preferred: bool) -> bool {
        let probe = |e: &mut Self, one: bool| {
            let len = e.trail.len();
            e.assign(var, one);
            let b = if e.propagate() {
                e.bound().unwrap_or(f64::INFINITY)
            } else {
                f64::INFINITY
            };
            e.undo_to(len);
            b
        };
        let a = probe(self, preferred);
        let b = probe(self, !preferred);
        if b < a {
            !preferred
        } else {
            preferred
        }
    }

    fn solution(&self) -> Vec<bool> {
        self.vals.iter().map(|&x| x == 1).collect()
    }
}

struct Frame {
    trail_len: usize,
    var: usize,
    alternative: Option<bool>,
    bound: f64,
}

/// Solves `p` to proven optimality or until a limit is hit.
pub fn solve_branch_and_bound(p: &BipProblem, lim: &SolveLimits) -> Result<SolveResult> {
    p.validate()?;
    let start = Instant::now();
    let mut e = Engine::new(p);
    let mut result = SolveResult {
        status: Status::Infeasible,
        incumbent: None,
        objective_value: f64::INFINITY,
        dual_bound: f64::INFINITY,
        nodes_explored: 0,
        wall_time: Duration::ZERO,
    };
    for r in 0..p.rows.len() {
        e.queued[r] = true;
        e.queue.push(r);
    }
    if !e.propagate() {
        result.wall_time = start.elapsed();
        return Ok(result);
    }
    let prunes = |b: f64, inc: Option<f64>| match (inc, lim.cutoff) {
        (Some(v), _) => b >= v - PRUNE_TOL,
        (None, Some(c)) => b > c + PRUNE_TOL,
        (None, None) => false,
    };

    let mut stack: Vec<Frame> = Vec::new();
    let mut limit_hit = false;
    // `true` when the current assignment should be explored as a node.
    let mut descend = true;
    loop {
        if descend {
            result.nodes_explored += 1;
            if result.nodes_explored.is_multiple_of(1024) {
                let over_time = lim.time_limit.is_some_and(|t| start.elapsed() >= t);
                let over_nodes = lim.node_limit.is_some_and(|n| result.nodes_explored >= n);
                if over_time || over_nodes {
                    limit_hit = true;
                    break;
                }
            }
            let inc = result.incumbent.as_ref().map(|_| result.objective_value);
            match e.bound() {
                Some(b) if !prunes(b, inc) => match e.pick_branch() {
                    Some((var, first)) => {
                        let first = match lim.emphasis {
                            Emphasis::Find => first,
                            Emphasis::Prove => e.better_child(var, first),
                        };
                        stack.push(Frame {
                            trail_len: e.trail.len(),
                            var,
                            alternative: Some(!first),
                            bound: b,
                        });
                        e.assign(var, first);
                        descend = e.propagate();
                        continue;
                    }
                    None => {
                        let x = e.solution();
                        let value = p.objective.value(&x);
                        let better = match inc {
                            Some(v) => value < v - PRUNE_TOL,
                            None => lim.cutoff.is_none_or(|c| value <= c + PRUNE_TOL),
                        };
                        if better && p.check(&x).is_ok() {
                            result.objective_value = value;
                            result.incumbent = Some(x);
                        }
                    }
                },
                _ => {}
            }
        }
        // Backtrack to the deepest frame with an untried value.
        descend = false;
        while let Some(frame) = stack.last_mut() {
            e.undo_to(frame.trail_len);
            if let Some(alt) = frame.alternative.take() {
                let var = frame.var;
                e.assign(var, alt);
                descend = e.propagate();
                if descend {
                    break;
                }
            } else {
                stack.pop();
            }
        }
        if !descend && stack.is_empty() {
            break;
        }
    }

    result.wall_time = start.elapsed();
    if limit_hit {
        let open = stack
            .iter()
            .filter(|f| f.alternative.is_some())
            .map(|f| f.bound)
            .chain(std::iter::once(e.bound().unwrap_or(f64::INFINITY)))
            .fold(f64::INFINITY, f64::min);
        result.dual_bound = open.min(result.objective_value);
        result.status = if result.incumbent.is_some() {
            Status::Feasible
        } else {
            Status::Unknown
        };
    } else if result.incumbent.is_some() {
        result.status = Status::Optimal;
        result.dual_bound = result.objective_value;
    } else {
        result.status = Status::Infeasible;
    }
    Ok(result)
}
