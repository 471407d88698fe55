//! Every algorithm variant on the same circuits.

use qalloc::gatefid::FidelityModel;
use qalloc::heuristic::{run_variant, Variant, VariantSettings};
use qalloc::hwgraph::{Builtin, HardwareGraph};
use qalloc::qvbench::gen_qv_circuit;

fn main() -> qalloc::error::Result<()> {
    let g = HardwareGraph::builtin(Builtin::Line, 4)?;
    let settings = VariantSettings::default();
    for seed in 0..3 {
        let c = gen_qv_circuit(4, seed)?
            .lower_layers(3)
            .insert_dummy_steps(2);
        let fid = FidelityModel::from_circuit(&c);
        println!("circuit {seed}");
        for v in Variant::ALL {
            match run_variant(v, &c, &g, &fid, &settings) {
                Ok(r) => println!(
                    "  {v:<16} error {:.5}  cnots {:>3}  depth {}  final {:?}",
                    r.stats.error_objective_value,
                    r.stats.cnot_count,
                    r.stats.depth_proxy,
                    r.routed.final_map
                ),
                Err(e) => println!("  {v:<16} {e}"),
            }
        }
    }
    Ok(())
}
