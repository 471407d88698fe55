//! Builtin topologies and what the router sees of them.
//!
//! ```bash
//! cargo run --example hardware_graphs
//! ```

use qalloc::hwgraph::{Builtin, HardwareGraph};

fn main() -> qalloc::error::Result<()> {
    for (kind, n) in [(Builtin::Line, 4), (Builtin::Y, 6), (Builtin::Grid, 6)] {
        let g = HardwareGraph::builtin(kind, n)?;
        println!(
            "{kind:?}-{n}: {} edges, matching number {}",
            g.edges().len(),
            g.matching_number()
        );
        println!("  labels {:?}", g.labels());
        println!("  distance 0 -> {}: {}", n - 1, g.distance(0, n - 1));
        println!("  path {:?}", g.shortest_path(0, n - 1));
        println!("  crosstalk edge pairs {}", g.crosstalk_pairs().len());
    }

    // A custom device: labels are arbitrary integers, unlisted edges get the
    // default swap success probability.
    let doc = r#"{ "nodes": [1, 2, 3], "edges": [[1, 2], [2, 3]], "beta": [[1, 2, 0.99]] }"#;
    let g = HardwareGraph::from_doc(&serde_json::from_str(doc)?)?;
    println!(
        "custom: beta {:?}, mean {:.4}",
        (0..2).map(|k| g.beta(k)).collect::<Vec<_>>(),
        g.mean_beta()
    );
    Ok(())
}
