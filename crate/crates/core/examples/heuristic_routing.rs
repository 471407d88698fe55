//! The lookahead swap heuristic on a circuit too large for exact search.

use std::time::Instant;

use qalloc::extract::{stats, verify_structural};
use qalloc::gatefid::{FidelityModel, PlacementTable};
use qalloc::heuristic::{heuristic_layout, heuristic_route, HeuristicConfig};
use qalloc::hwgraph::{Builtin, HardwareGraph};
use qalloc::qvbench::gen_qv_circuit;

fn main() -> qalloc::error::Result<()> {
    let g = HardwareGraph::builtin(Builtin::Grid, 8)?;
    let c = gen_qv_circuit(8, 3)?.lower().insert_dummy_steps(2);
    let fid = FidelityModel::from_circuit(&c);
    let table = PlacementTable::new(&fid, &g);
    for lookahead in [0, 1, 3] {
        let cfg = HeuristicConfig {
            lookahead,
            ..Default::default()
        };
        let t0 = Instant::now();
        let layout = heuristic_layout(&c, &g, &cfg)?;
        let rc = heuristic_route(&c, &g, &layout, &table, &cfg)?;
        let s = stats(&rc, &table, &g);
        println!(
            "lookahead {lookahead}: {} CNOTs, {} free swaps, error {:.4}, ok {}, {:.1?}",
            s.cnot_count,
            s.free_swaps,
            s.error_objective_value,
            verify_structural(&rc, &c, &g).is_ok(),
            t0.elapsed()
        );
    }
    Ok(())
}
