//! Cross-checks branch and bound against the exhaustive layout search.

use std::time::Instant;

use qalloc::bipmodel::{Model, ModelOptions, ObjectiveKind};
use qalloc::gatefid::FidelityModel;
use qalloc::hwgraph::{Builtin, HardwareGraph};
use qalloc::qvbench::gen_qv_circuit;
use qalloc::solver::{solve_branch_and_bound, solve_exhaustive, ExhaustiveLimits, SolveLimits};

fn main() -> qalloc::error::Result<()> {
    let g = HardwareGraph::builtin(Builtin::Line, 4)?;
    for kind in [ObjectiveKind::Error, ObjectiveKind::Depth] {
        for seed in 0..5 {
            let c = gen_qv_circuit(4, seed)?
                .lower_layers(3)
                .insert_dummy_steps(2);
            let fid = FidelityModel::from_circuit(&c);
            let model = Model::build(&c, &g, &fid, ModelOptions::default())?;
            let t0 = Instant::now();
            let r = solve_branch_and_bound(&model.problem(kind, &[])?, &SolveLimits::default())?;
            let bnb = t0.elapsed();
            let (dp, _) = solve_exhaustive(&c, &g, &fid, kind, ExhaustiveLimits::default())?;
            println!(
                "{kind} seed {seed}: bnb {:.9} ({} nodes, {bnb:.1?}), exhaustive {dp:.9}",
                r.objective_value, r.nodes_explored
            );
        }
    }
    Ok(())
}
