//! Heavy-output probability of routed quantum-volume circuits.

use qalloc::heuristic::Variant;
use qalloc::hwgraph::{Builtin, HardwareGraph};
use qalloc::qvbench::{
    benchmark_batch, gen_qv_circuit, ideal_heavy_set, mean_ideal_heavy_mass, BenchConfig,
};

fn main() -> qalloc::error::Result<()> {
    let qv = gen_qv_circuit(4, 0)?;
    let heavy = ideal_heavy_set(&qv)?;
    println!(
        "circuit 0: {} heavy outcomes, ideal mass {:.4}",
        heavy.outcomes.len(),
        heavy.ideal_mass
    );
    println!(
        "mean ideal heavy mass over 50 circuits: {:.4}",
        mean_ideal_heavy_mass(4, 50, 0)?
    );

    let g = HardwareGraph::builtin(Builtin::Line, 4)?;
    let cfg = BenchConfig {
        circuits: 12,
        variants: vec![Variant::Bip, Variant::SabreLike, Variant::BipRouting],
        jobs: 4,
        ..Default::default()
    };
    let report = benchmark_batch(&cfg, &g)?;
    for s in &report.summaries {
        println!(
            "{:<12} HOP {:.4} ± {:.4} pass {}  cnots {:.1}  r(error, HOP) {:?}",
            s.variant.name(),
            s.mean_hop,
            s.hop_std_error.unwrap_or(0.0),
            s.passes,
            s.mean_cnots,
            s.corr_error_hop
        );
    }
    Ok(())
}
