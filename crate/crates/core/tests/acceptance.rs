//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use qalloc::bipmodel::{BipProblem, Family, LinkMode, Model, ModelOptions, ObjectiveKind};
use qalloc::circuit::{Gate, LayeredCircuit};
use qalloc::extract::{
    decode, encode, stats, verify_structural, verify_unitary, Op, RoutedCircuit,
};
use qalloc::gatefid::{avg_gate_fidelity, best_k_cnot_fidelity, FidelityModel, PlacementTable};
use qalloc::gates;
use qalloc::heuristic::{run_variant, Variant, VariantRun, VariantSettings};
use qalloc::hwgraph::HardwareGraph;
use qalloc::lexopt::{detect_tradeoff, lexicographic_solve};
use qalloc::qvbench::{
    benchmark_batch, gen_qv_circuit, haar_su4, hop_under_noise, ideal_heavy_set,
    mean_ideal_heavy_mass, BenchConfig,
};
use qalloc::solver::{
    export_model, import_model, import_solution, solve_branch_and_bound, solve_exhaustive,
    ExhaustiveLimits, ModelFormat, SolveLimits, SolveResult, Status,
};

const LOG_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Error-objective agreement between `stats` and the model, collected
/// across every solved instance of the run.
#[derive(Default)]
struct Accounting {
    checked: usize,
    worst: f64,
}

impl Accounting {
    fn record(
        &mut self,
        rc: &RoutedCircuit,
        model: &Model,
        g: &HardwareGraph,
        fid: &FidelityModel,
    ) {
        let table = PlacementTable::new(fid, g);
        let x = encode(rc, model.space()).expect("routing encodes");
        let obj = model.objective(ObjectiveKind::Error).unwrap().value(&x);
        let s = stats(rc, &table, g).error_objective_value;
        self.checked += 1;
        self.worst = self.worst.max((obj - s).abs());
    }
}

fn limits() -> SolveLimits {
    SolveLimits::with_time(60.0)
}

fn solve(p: &BipProblem) -> SolveResult {
    solve_branch_and_bound(p, &limits()).expect("solver runs")
}

struct Solved {
    inst: Instance,
    model: Model,
    result: SolveResult,
    elapsed: Duration,
}

fn solve_oracle_batch(acct: &mut Accounting) -> Vec<Solved> {
    let g = line4();
    oracle_instances(30)
        .into_iter()
        .map(|inst| {
            let model =
                Model::build(&inst.circuit, &g, &inst.fid, ModelOptions::default()).unwrap();
            let p = model.problem(ObjectiveKind::Error, &[]).unwrap();
            let t0 = Instant::now();
            let result = solve(&p);
            let elapsed = t0.elapsed();
            let table = PlacementTable::new(&inst.fid, &g);
            let rc = decode(&model, result.solution().unwrap(), &table).unwrap();
            acct.record(&rc, &model, &g, &inst.fid);
            Solved {
                inst,
                model,
                result,
                elapsed,
            }
        })
        .collect()
}

fn criterion1(batch: &[Solved]) -> Outcome {
    let g = line4();
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut bad = Vec::new();
    for s in batch {
        let (dp, _) = solve_exhaustive(
            &s.inst.circuit,
            &g,
            &s.inst.fid,
            ObjectiveKind::Error,
            ExhaustiveLimits::default(),
        )
        .unwrap();
        let diff = (s.result.objective_value - dp).abs();
        worst = worst.max(diff);
        slowest = slowest.max(s.elapsed);
        if s.result.status != Status::Optimal || diff > LOG_TOL || s.elapsed.as_secs_f64() >= 60.0 {
            bad.push(s.inst.seed);
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} instances, max |bnb - dp| {worst:.2e}, slowest {:.3}s, mismatched seeds {bad:?}",
            batch.len(),
            slowest.as_secs_f64()
        ),
    )
}

fn criterion2() -> Outcome {
    let g = line4();
    let doc = example_assignment();
    let check = |payloads| -> Result<(RoutedCircuit, LayeredCircuit), String> {
        let (c, fid) = example_instance(payloads);
        let model =
            Model::build(&c, &g, &fid, ModelOptions::default()).map_err(|e| e.to_string())?;
        let p = model
            .problem(ObjectiveKind::Error, &[])
            .map_err(|e| e.to_string())?;
        let r = import_solution(&p, &doc).map_err(|e| e.to_string())?;
        let table = PlacementTable::new(&fid, &g);
        let rc = decode(&model, r.solution().unwrap(), &table).map_err(|e| e.to_string())?;
        Ok((rc, c))
    };
    let (rc, c) = match check(None) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("assignment rejected: {e}")),
    };
    let merged: Vec<(usize, usize)> = rc
        .gate_ops()
        .filter_map(|(t, op)| match op {
            Op::Gate {
                gate,
                merged_swap: true,
                ..
            } => Some((t, *gate)),
            _ => None,
        })
        .collect();
    let merged_ok = merged == [(0, 0), (0, 1), (1, 2)] && rc.free_swaps() == 0;
    let final_ok = rc.final_map == [2, 0, 3, 1];
    let structural = verify_structural(&rc, &c, &g);
    let unitary = check(Some(example_payloads(3)))
        .and_then(|(rc, c)| verify_unitary(&rc, &c).map_err(|e| e.to_string()));
    let unitary_ok = matches!(unitary, Ok(d) if d <= 1e-8);
    outcome(
        merged_ok && final_ok && structural.is_ok() && unitary_ok,
        format!(
            "merged (step, gate) {merged:?}, final map {:?}, structural {:?}, unitary deviation {unitary:?}",
            rc.final_map, structural.violations
        ),
    )
}

/// Every variant on one instance, in `Variant::ALL` order.
struct VariantBatch {
    topology: &'static str,
    seed: u64,
    runs: Vec<Option<VariantRun>>,
}

impl VariantBatch {
    fn get(&self, v: Variant) -> Option<&VariantRun> {
        let k = Variant::ALL.iter().position(|&x| x == v).unwrap();
        self.runs[k].as_ref()
    }
}

fn criterion3(acct: &mut Accounting, batches: &mut Vec<VariantBatch>) -> Outcome {
    let mut total = 0;
    let mut counter = Vec::new();
    let settings = VariantSettings {
        limits: limits(),
        ..Default::default()
    };
    for (name, g) in [("line-4", line4()), ("grid-6", grid6())] {
        for inst in tradeoff_instances(&g, 20) {
            let model =
                Model::build(&inst.circuit, &g, &inst.fid, ModelOptions::default()).unwrap();
            let t = detect_tradeoff(
                &model,
                ObjectiveKind::Error,
                ObjectiveKind::Depth,
                &limits(),
            )
            .unwrap();
            total += 1;
            if t.exists(ObjectiveKind::Depth) {
                counter.push(format!(
                    "{name} seed {}: depth {} after error vs {} alone",
                    inst.seed, t.constrained, t.unconstrained
                ));
            }
            let runs = Variant::ALL
                .iter()
                .map(|&v| {
                    let r = run_variant(v, &inst.circuit, &g, &inst.fid, &settings).ok()?;
                    acct.record(&r.routed, &model, &g, &inst.fid);
                    Some(r)
                })
                .collect();
            batches.push(VariantBatch {
                topology: name,
                seed: inst.seed,
                runs,
            });
        }
    }
    outcome(
        counter.is_empty(),
        if counter.is_empty() {
            format!("{total} instances, stage-2 depth equals the depth optimum on all")
        } else {
            format!("counterexamples: {}", counter.join("; "))
        },
    )
}

fn criterion4() -> Outcome {
    let g = y6();
    let options = ModelOptions {
        crosstalk: true,
        ..Default::default()
    };
    let order = [
        ObjectiveKind::Error,
        ObjectiveKind::Depth,
        ObjectiveKind::Crosstalk,
    ];
    let mut positive = Vec::new();
    let seeds = 20;
    for seed in 0..seeds {
        let inst = Instance::new(random_pair_circuit(6, 4, seed), &g, 1, seed);
        let model = Model::build(&inst.circuit, &g, &inst.fid, options).unwrap();
        let lex = lexicographic_solve(&model, &order, &limits()).unwrap();
        let xt = lex.value(ObjectiveKind::Crosstalk).unwrap();
        if xt > 0.5 {
            positive.push((seed, xt as usize));
        }
    }
    outcome(
        !positive.is_empty(),
        format!(
            "{seeds} instances on y-6, positive crosstalk at the error/depth optimum (seed, uses): {positive:?}"
        ),
    )
}

fn criterion5(batches: &[VariantBatch]) -> Outcome {
    let mut bad = Vec::new();
    let (mut bip_cx, mut sabre_cx) = (0usize, 0usize);
    for b in batches {
        let (Some(bip), Some(sabre)) = (b.get(Variant::Bip), b.get(Variant::SabreLike)) else {
            bad.push(format!("{} seed {}: missing run", b.topology, b.seed));
            continue;
        };
        bip_cx += bip.stats.cnot_count;
        sabre_cx += sabre.stats.cnot_count;
        if bip.stats.error_objective_value > sabre.stats.error_objective_value + LOG_TOL
            || bip.stats.cnot_count > sabre.stats.cnot_count
        {
            bad.push(format!("{} seed {}", b.topology, b.seed));
        }
    }
    let reduction = 1.0 - bip_cx as f64 / sabre_cx.max(1) as f64;
    outcome(
        bad.is_empty(),
        format!(
            "{} instances, CNOTs {bip_cx} vs {sabre_cx} (mean reduction {:.1}%), violations {bad:?}",
            batches.len(),
            100.0 * reduction
        ),
    )
}

fn criterion6(batches: &[VariantBatch]) -> Outcome {
    let mut bad = Vec::new();
    let mut infeasible = 0;
    let err = |r: &VariantRun| r.stats.error_objective_value;
    for b in batches {
        let (Some(bip), Some(routing), Some(sabre)) = (
            b.get(Variant::Bip),
            b.get(Variant::BipRouting),
            b.get(Variant::SabreLike),
        ) else {
            bad.push(format!("{} seed {}: missing run", b.topology, b.seed));
            continue;
        };
        let optimal = |r: &VariantRun| r.status == Some(Status::Optimal);
        if !(optimal(bip) && optimal(routing)) {
            bad.push(format!("{} seed {}: not optimal", b.topology, b.seed));
        }
        if err(bip) > err(routing) + LOG_TOL || err(routing) > err(sabre) + LOG_TOL {
            bad.push(format!("{} seed {}: routing order", b.topology, b.seed));
        }
        match b.get(Variant::BipConstrained) {
            Some(c) if err(bip) > err(c) + LOG_TOL => {
                bad.push(format!("{} seed {}: constrained order", b.topology, b.seed))
            }
            Some(_) => {}
            None => infeasible += 1,
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} instances ({infeasible} without a cyclic layout), violations {bad:?}",
            batches.len()
        ),
    )
}

fn criterion7() -> Outcome {
    let mut full = 0.0f64;
    let mut monotone = true;
    for seed in 0..100 {
        let u = haar_su4(seed);
        let f: Vec<f64> = (0..4)
            .map(|k| best_k_cnot_fidelity(&u, k).unwrap())
            .collect();
        full = full.max((f[3] - 1.0).abs());
        monotone &= f.windows(2).all(|w| w[0] <= w[1] + 1e-12);
    }
    let mut oracle = 0.0f64;
    for seed in 0..20 {
        let u = haar_su4(10_000 + seed);
        for k in 0..3 {
            let closed = best_k_cnot_fidelity(&u, k).unwrap();
            let numeric = numeric_k_cnot_fidelity(&u, k, seed);
            oracle = oracle.max((closed - numeric).abs());
        }
    }
    let cx_id = avg_gate_fidelity(&gates::cx(), &gates::identity()).unwrap();
    outcome(
        full <= 1e-9 && monotone && oracle <= 1e-4 && cx_id == 0.4,
        format!(
            "max |F(g,3) - 1| {full:.1e}, monotone {monotone}, max |closed - numeric| {oracle:.1e}, F(CX, I) {cx_id}"
        ),
    )
}

fn criterion8(acct: &Accounting) -> Outcome {
    let g = line4();
    let c = LayeredCircuit::layerize(
        4,
        vec![
            Gate::new(0, 1, gates::identity()),
            Gate::new(0, 2, gates::identity()),
        ],
    )
    .unwrap()
    .insert_dummy_steps(1);
    let fid = FidelityModel::from_circuit(&c);
    let gate = |gate, from, to| Op::Gate {
        gate,
        from,
        to,
        cnots: 0,
        merged_swap: false,
    };
    let rc = RoutedCircuit {
        initial_map: vec![0, 1, 2, 3],
        steps: vec![
            vec![gate(0, 0, 1)],
            vec![Op::FreeSwap { a: 1, b: 2 }],
            vec![gate(1, 0, 1)],
        ],
        final_map: vec![0, 2, 1, 3],
        origin: "hand".into(),
    };
    let model = Model::build(&c, &g, &fid, ModelOptions::default()).unwrap();
    let p = model.problem(ObjectiveKind::Error, &[]).unwrap();
    let x = encode(&rc, model.space()).unwrap();
    let feasible = p.check(&x).is_ok() && verify_structural(&rc, &c, &g).is_ok();
    let value = p.objective.value(&x);
    let expected = -3.0 * 0.9936f64.ln();
    let table = PlacementTable::new(&fid, &g);
    let s = stats(&rc, &table, &g).error_objective_value;
    let hand_ok = feasible && (value - expected).abs() <= 1e-12 && (s - expected).abs() <= 1e-12;
    outcome(
        hand_ok && acct.worst <= LOG_TOL,
        format!(
            "one free swap: model {value:.15}, stats {s:.15}, expected {expected:.15}; \
             {} solved routings agree within {:.1e}",
            acct.checked, acct.worst
        ),
    )
}

fn criterion9(batch: &[Solved]) -> Outcome {
    let g = line4();
    let mut worst_link = 0.0f64;
    let mut worst_sym = 0.0f64;
    for s in &batch[..10] {
        let plain = ModelOptions {
            link: LinkMode::McCormick,
            ..Default::default()
        };
        let m = Model::build(&s.inst.circuit, &g, &s.inst.fid, plain).unwrap();
        let r = solve(&m.problem(ObjectiveKind::Error, &[]).unwrap());
        worst_link = worst_link.max((r.objective_value - s.result.objective_value).abs());
        let p = s
            .model
            .problem(ObjectiveKind::Error, &[])
            .unwrap()
            .without_family(Family::SymChain);
        let r = solve(&p);
        worst_sym = worst_sym.max((r.objective_value - s.result.objective_value).abs());
    }
    outcome(
        worst_link <= LOG_TOL && worst_sym <= LOG_TOL,
        format!("10 instances, max |Δ| plain vs strengthened {worst_link:.1e}, without symmetry rows {worst_sym:.1e}"),
    )
}

fn criterion10(batches: &[VariantBatch]) -> Outcome {
    let mass = mean_ideal_heavy_mass(4, 200, 11).unwrap();
    let mass_ok = mass > 0.75 && mass < 0.92;

    // Same circuit, lower error objective, higher HOP.
    let mut strict = true;
    let mut pairs = 0;
    for b in batches.iter().filter(|b| b.topology == "line-4") {
        let qv = gen_qv_circuit(4, b.seed).unwrap();
        let layers = 2 + ((b.seed - 1000) % 3) as usize;
        let heavy = ideal_heavy_set(&qv.truncated(layers)).unwrap();
        let errs: Vec<f64> = b
            .runs
            .iter()
            .flatten()
            .map(|r| r.stats.error_objective_value)
            .collect();
        for &e1 in &errs {
            for &e2 in &errs {
                if e1 < e2 - LOG_TOL {
                    pairs += 1;
                    strict &= hop_under_noise(&heavy, e1) > hop_under_noise(&heavy, e2);
                }
            }
        }
    }

    let g = line4();
    let mut hops = Vec::new();
    for seed in 0..3 {
        let cfg = BenchConfig {
            circuits: 8,
            variants: vec![Variant::Bip, Variant::SabreLike],
            settings: VariantSettings {
                limits: limits(),
                ..Default::default()
            },
            seed,
            ..Default::default()
        };
        let report = benchmark_batch(&cfg, &g).unwrap();
        let h = |v| report.summary(v).map_or(f64::NAN, |s| s.mean_hop);
        hops.push((h(Variant::Bip), h(Variant::SabreLike)));
    }
    let bench_ok = hops.iter().all(|(b, s)| b >= s);
    outcome(
        mass_ok && strict && pairs > 0 && bench_ok,
        format!(
            "mean heavy mass {mass:.4}, HOP strictly ordered on {pairs} pairs {strict}, batch HOP (bip, sabre_like) {:?}",
            hops.iter()
                .map(|(b, s)| format!("({b:.4}, {s:.4})"))
                .collect::<Vec<_>>()
        ),
    )
}

fn binaries_in(text: &str, fmt: ModelFormat) -> usize {
    match fmt {
        ModelFormat::Lp => text
            .lines()
            .skip_while(|l| !matches!(l.trim(), "Binary" | "Binaries"))
            .skip(1)
            .take_while(|l| l.trim() != "End")
            .flat_map(str::split_whitespace)
            .count(),
        ModelFormat::Mps => text
            .lines()
            .filter(|l| l.trim_start().starts_with("BV "))
            .count(),
    }
}

fn criterion11(batch: &[Solved]) -> Outcome {
    let g = line4();
    let (c, fid) = example_instance(None);
    let model = Model::build(&c, &g, &fid, ModelOptions::default()).unwrap();
    let p = model.problem(ObjectiveKind::Error, &[]).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for fmt in [ModelFormat::Lp, ModelFormat::Mps] {
        let text = export_model(&p, fmt);
        let count = binaries_in(&text, fmt);
        let again = import_model(&text, fmt).map(|q| export_model(&q, fmt));
        let identical = again.as_deref().is_ok_and(|t| t == text);
        pass &= count == 158 && identical;
        notes.push(format!(
            "{fmt:?}: {count} binaries, round trip identical {identical}"
        ));
    }

    let dir = tempfile::tempdir().unwrap();
    if external_solver_available() {
        let s = &batch[0];
        let p = s.model.problem(ObjectiveKind::Error, &[]).unwrap();
        let path = dir.path().join("instance.mps");
        std::fs::write(&path, export_model(&p, ModelFormat::Mps)).unwrap();
        match external_solve(&path).map(|doc| import_solution(&p, &doc)) {
            Some(Ok(r)) => {
                let diff = (r.objective_value - s.result.objective_value).abs();
                pass &= diff <= LOG_TOL;
                notes.push(format!("external solver optimum differs by {diff:.1e}"));
            }
            Some(Err(e)) => {
                pass = false;
                notes.push(format!("external solution rejected: {e}"));
            }
            None => {
                pass = false;
                notes.push("external solver failed".into());
            }
        }
    } else {
        notes.push("external solver leg skipped (no solver found)".into());
    }
    outcome(pass, notes.join("; "))
}

fn main() {
    let start = Instant::now();
    let mut acct = Accounting::default();
    let oracle = solve_oracle_batch(&mut acct);
    let mut batches = Vec::new();

    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |n, name, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        println!(
            "criterion {n:>2} {name}: {} ({:.1}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            o.detail
        );
        results.push((n, name, o));
    };
    run(1, "oracle optimality", &mut || criterion1(&oracle));
    run(2, "running example assignment", &mut criterion2);
    run(3, "no error/depth trade-off", &mut || {
        criterion3(&mut acct, &mut batches)
    });
    run(4, "crosstalk trade-off exists", &mut criterion4);
    run(5, "heuristic dominance", &mut || criterion5(&batches));
    run(6, "constrained variant ordering", &mut || {
        criterion6(&batches)
    });
    run(7, "fidelity math", &mut criterion7);
    run(8, "objective accounting", &mut || criterion8(&acct));
    run(9, "linking and symmetry rows", &mut || criterion9(&oracle));
    run(10, "heavy output behaviour", &mut || criterion10(&batches));
    run(11, "export integrity", &mut || criterion11(&oracle));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
