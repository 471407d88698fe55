//! Relaxes the error bound step by step and writes the sweep table to stdout.

use qalloc::bipmodel::{Model, ModelOptions, ObjectiveKind};
use qalloc::gatefid::FidelityModel;
use qalloc::hwgraph::{Builtin, HardwareGraph};
use qalloc::lexopt::{default_step, pareto_batch, summarize, write_table};
use qalloc::qvbench::gen_qv_circuit;
use qalloc::solver::SolveLimits;

fn main() -> qalloc::error::Result<()> {
    let g = HardwareGraph::builtin(Builtin::Grid, 6)?;
    let order = [ObjectiveKind::Error, ObjectiveKind::Depth];
    let models = (0..4)
        .map(|seed| {
            let c = gen_qv_circuit(4, seed)?
                .lower_layers(3)
                .pad_qubits(g.num_nodes())?
                .insert_dummy_steps(2);
            Model::build(
                &c,
                &g,
                &FidelityModel::from_circuit(&c),
                ModelOptions::default(),
            )
        })
        .collect::<qalloc::error::Result<Vec<_>>>()?;
    let step = default_step(ObjectiveKind::Error, g.mean_beta());
    let rows = pareto_batch(&models, &order, 3, step, &SolveLimits::default(), 2)?;
    write_table(std::io::stdout(), &summarize(&rows, &order))?;
    Ok(())
}
