//! Writes the model as LP and MPS text and checks a solution document.

use qalloc::bipmodel::{Model, ModelOptions, ObjectiveKind};
use qalloc::circuit::example_circuit;
use qalloc::gatefid::FidelityModel;
use qalloc::hwgraph::{Builtin, HardwareGraph};
use qalloc::solver::{
    export_model, import_model, import_solution, solve_branch_and_bound, write_solution,
    ModelFormat, SolveLimits,
};

fn main() -> qalloc::error::Result<()> {
    let g = HardwareGraph::builtin(Builtin::Line, 4)?;
    let c = example_circuit(None);
    let model = Model::build(
        &c,
        &g,
        &FidelityModel::from_circuit(&c),
        ModelOptions::default(),
    )?;
    let p = model.problem(ObjectiveKind::Error, &[])?;

    let lp = export_model(&p, ModelFormat::Lp);
    println!("{}", lp.lines().take(8).collect::<Vec<_>>().join("\n"));
    println!("...");
    let mps = export_model(&p, ModelFormat::Mps);
    println!("{}", mps.lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("...");

    let back = import_model(&mps, ModelFormat::Mps)?;
    println!(
        "reimported {} variables and {} rows",
        back.num_vars(),
        back.rows.len()
    );

    // What an external solver would hand back, reduced to the ones.
    let best = solve_branch_and_bound(&p, &SolveLimits::default())?;
    let doc = write_solution(&p, best.solution()?);
    let checked = import_solution(&back, &doc)?;
    println!(
        "solution document accepted, objective {:.6}",
        checked.objective_value
    );

    let mut tampered: Vec<&str> = doc.lines().collect();
    tampered.remove(0);
    match import_solution(&p, &tampered.join("\n")) {
        Ok(_) => println!("tampered document accepted?"),
        Err(e) => println!("tampered document rejected: {e}"),
    }
    Ok(())
}
