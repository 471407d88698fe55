//! Optimal routing of the five-gate running example on a four-node line.

use qalloc::bipmodel::{Model, ModelOptions, ObjectiveKind};
use qalloc::circuit::example_circuit;
use qalloc::extract::{decode, stats, verify_structural, verify_unitary};
use qalloc::gatefid::{FidelityModel, PlacementTable};
use qalloc::hwgraph::{Builtin, HardwareGraph};
use qalloc::qvbench::haar_su4;
use qalloc::solver::{solve_branch_and_bound, SolveLimits};

fn main() -> qalloc::error::Result<()> {
    let g = HardwareGraph::builtin(Builtin::Line, 4)?;
    let payloads = std::array::from_fn(|k| haar_su4(k as u64));
    let c = example_circuit(Some(payloads)).insert_dummy_steps(1);
    let fid = FidelityModel::from_circuit(&c);

    let model = Model::build(&c, &g, &fid, ModelOptions::default())?;
    let p = model.problem(ObjectiveKind::Error, &[])?;
    println!("{} variables, {} rows", p.num_vars(), p.rows.len());

    let r = solve_branch_and_bound(&p, &SolveLimits::with_time(30.0))?;
    println!(
        "{}: objective {:.6} after {} nodes",
        r.status, r.objective_value, r.nodes_explored
    );

    let table = PlacementTable::new(&fid, &g);
    let rc = decode(&model, r.solution()?, &table)?;
    println!("initial map {:?}", rc.initial_map);
    for (t, step) in rc.steps.iter().enumerate() {
        println!("  step {t}: {step:?}");
    }
    println!("final map {:?}", rc.final_map);
    println!("{:?}", stats(&rc, &table, &g));
    println!("structural ok: {}", verify_structural(&rc, &c, &g).is_ok());
    println!("unitary deviation: {:.2e}", verify_unitary(&rc, &c)?);
    Ok(())
}
