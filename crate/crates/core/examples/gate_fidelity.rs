//! Best k-CNOT approximation fidelities and per-edge placement costs.

use qalloc::gatefid::{fidelity_profile, placement_cost, swap_merged_fidelity, FidelityProfile};
use qalloc::gates;
use qalloc::qvbench::haar_su4;

fn main() -> qalloc::error::Result<()> {
    let named = [
        ("identity", gates::identity()),
        ("cx", gates::cx()),
        ("iswap", gates::iswap()),
        ("swap", gates::swap()),
        ("haar", haar_su4(1)),
    ];
    println!(
        "{:<10} {:>8} {:>8} {:>8} {:>8}",
        "gate", "F(0)", "F(1)", "F(2)", "F(3)"
    );
    for (name, u) in &named {
        let f = fidelity_profile(u);
        println!(
            "{name:<10} {:>8.5} {:>8.5} {:>8.5} {:>8.5}",
            f[0], f[1], f[2], f[3]
        );
    }

    // Following a CNOT with a SWAP on the same pair costs two CNOTs, not five.
    println!(
        "cx then swap, 2 CNOTs: {:.5}",
        swap_merged_fidelity(&gates::cx(), 2)?
    );

    let profile = FidelityProfile::of(&haar_su4(1));
    for beta in [0.999, 0.9936, 0.98] {
        let c = placement_cost(&profile, beta);
        println!(
            "beta {beta}: plain {} CNOTs, -ln P = {:.5}; merged {} CNOTs, -ln P = {:.5}",
            c.cnots(false),
            c.log_cost(false),
            c.cnots(true),
            c.log_cost(true)
        );
    }
    Ok(())
}
