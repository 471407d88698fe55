//! Lexicographic objectives: error first, then depth, then crosstalk.

use qalloc::bipmodel::{Model, ModelOptions, ObjectiveKind};
use qalloc::circuit::{Gate, LayeredCircuit};
use qalloc::gatefid::FidelityModel;
use qalloc::hwgraph::{Builtin, HardwareGraph};
use qalloc::lexopt::{detect_tradeoff, lexicographic_solve};
use qalloc::qvbench::haar_su4;
use qalloc::solver::SolveLimits;

fn main() -> qalloc::error::Result<()> {
    let g = HardwareGraph::builtin(Builtin::Y, 6)?;
    let gates = [(0, 5), (1, 3), (2, 4), (0, 3)]
        .iter()
        .enumerate()
        .map(|(k, &(p, q))| Gate::new(p, q, haar_su4(40 + k as u64)))
        .collect();
    let c = LayeredCircuit::layerize(6, gates)?.insert_dummy_steps(1);
    let fid = FidelityModel::from_circuit(&c);
    let options = ModelOptions {
        crosstalk: true,
        ..Default::default()
    };
    let model = Model::build(&c, &g, &fid, options)?;
    let lim = SolveLimits::with_time(30.0);

    let order = [
        ObjectiveKind::Error,
        ObjectiveKind::Depth,
        ObjectiveKind::Crosstalk,
    ];
    let lex = lexicographic_solve(&model, &order, &lim)?;
    for s in &lex.stages {
        println!("{}: {} ({})", s.objective, s.value, s.status);
    }

    for second in [ObjectiveKind::Depth, ObjectiveKind::Crosstalk] {
        let t = detect_tradeoff(&model, ObjectiveKind::Error, second, &lim)?;
        println!(
            "{second} after error {} vs alone {}: trade-off {}",
            t.constrained,
            t.unconstrained,
            t.exists(second)
        );
    }
    Ok(())
}
