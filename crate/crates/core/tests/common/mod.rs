//! Shared fixtures, instance generators and independent oracles.
#![allow(dead_code)]

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use nalgebra::Matrix2;
use qalloc::circuit::{example_circuit, Gate, LayeredCircuit};
use qalloc::gatefid::FidelityModel;
use qalloc::gates::{self, Mat2, Mat4, C64};
use qalloc::hwgraph::{Builtin, HardwareGraph};
use qalloc::qvbench::{gen_qv_circuit, haar_su4, haar_su4_from};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn line4() -> HardwareGraph {
    HardwareGraph::builtin(Builtin::Line, 4).unwrap()
}

pub fn grid6() -> HardwareGraph {
    HardwareGraph::builtin(Builtin::Grid, 6).unwrap()
}

pub fn y6() -> HardwareGraph {
    HardwareGraph::builtin(Builtin::Y, 6).unwrap()
}

/// A routing instance: the circuit is padded and carries its empty steps.
pub struct Instance {
    pub seed: u64,
    pub circuit: LayeredCircuit,
    pub fid: FidelityModel,
}

impl Instance {
    pub fn new(c: LayeredCircuit, g: &HardwareGraph, dummy: usize, seed: u64) -> Instance {
        let circuit = c
            .pad_qubits(g.num_nodes())
            .unwrap()
            .insert_dummy_steps(dummy);
        let fid = FidelityModel::from_circuit(&circuit);
        Instance { seed, circuit, fid }
    }
}

/// Four-qubit quantum-volume circuit cut to `layers` gate layers.
pub fn qv_instance(g: &HardwareGraph, seed: u64, layers: usize, dummy: usize) -> Instance {
    let c = gen_qv_circuit(4, seed).unwrap().lower_layers(layers);
    Instance::new(c, g, dummy, seed)
}

/// Three-layer instances on the four-node line for the oracle comparisons.
pub fn oracle_instances(count: u64) -> Vec<Instance> {
    let g = line4();
    (0..count).map(|s| qv_instance(&g, 500 + s, 3, 2)).collect()
}

/// Instances for the trade-off and dominance comparisons, alternating
/// between two and four gate layers.
pub fn tradeoff_instances(g: &HardwareGraph, count: u64) -> Vec<Instance> {
    (0..count)
        .map(|s| qv_instance(g, 1000 + s, 2 + (s % 3) as usize, 2))
        .collect()
}

/// `gates` Haar-random gates on random qubit pairs.
pub fn random_pair_circuit(nodes: usize, gates: usize, seed: u64) -> LayeredCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let list = (0..gates)
        .map(|_| {
            let pair = sample(&mut rng, nodes, 2);
            Gate::new(pair.index(0), pair.index(1), haar_su4_from(&mut rng))
        })
        .collect();
    LayeredCircuit::layerize(nodes, list).unwrap()
}

pub fn example_payloads(seed: u64) -> [Mat4; 5] {
    std::array::from_fn(|k| haar_su4(seed * 10 + k as u64))
}

/// The illustrative assignment for the running example on the four-node
/// line, one variable per line (0-based qubits, nodes and steps).
pub fn example_assignment() -> String {
    let on = [
        // step 0: identity layout, U1 and U2 in place, both pairs swap
        "w_0_0_0",
        "w_1_1_0",
        "w_2_2_0",
        "w_3_3_0",
        "y_0_0_1_0",
        "y_1_2_3_0",
        "x_0_0_1_0",
        "x_1_1_0_0",
        "x_2_2_3_0",
        "x_3_3_2_0",
        // step 1: U3 between nodes 1 and 2, which also swap
        "w_1_0_1",
        "w_0_1_1",
        "w_3_2_1",
        "w_2_3_1",
        "y_2_1_2_1",
        "x_1_0_0_1",
        "x_0_1_2_1",
        "x_3_2_1_1",
        "x_2_3_3_1",
        // step 2: U5 and U4
        "w_1_0_2",
        "w_3_1_2",
        "w_0_2_2",
        "w_2_3_2",
        "y_4_0_1_2",
        "y_3_2_3_2",
    ];
    on.iter().map(|n| format!("{n} 1\n")).collect()
}

pub fn example_instance(payloads: Option<[Mat4; 5]>) -> (LayeredCircuit, FidelityModel) {
    let c = example_circuit(payloads);
    let fid = FidelityModel::from_circuit(&c);
    (c, fid)
}

fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn random_u2(rng: &mut impl Rng) -> Mat2 {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [a, b, c, d] = q.map(|v| v / n);
    Matrix2::new(
        C64::new(a, b),
        C64::new(c, d),
        C64::new(-c, d),
        C64::new(a, -b),
    )
}

/// Unitary maximising `|Tr(A M)|`, from the polar decomposition of `M`.
fn best_unitary(m: &Mat2) -> Mat2 {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    vt.adjoint() * u.adjoint()
}

/// `M[c, a] = Σ_b N[(c b), (a b)]`.
fn trace_out_second(n: &Mat4) -> Mat2 {
    Mat2::from_fn(|c, a| n[(2 * c, 2 * a)] + n[(2 * c + 1, 2 * a + 1)])
}

/// `M[d, b] = Σ_a N[(a d), (a b)]`.
fn trace_out_first(n: &Mat4) -> Mat2 {
    Mat2::from_fn(|d, b| n[(d, b)] + n[(2 + d, 2 + b)])
}

/// Best `|Tr(U† V)|` over circuits `V` with `k` CNOTs, by block-coordinate
/// ascent over the single-qubit layers from random starts.
pub fn numeric_best_trace(u: &Mat4, k: usize, starts: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cx = gates::cx();
    let ud = u.adjoint();
    let mut best = 0.0f64;
    for _ in 0..starts {
        let mut layers: Vec<(Mat2, Mat2)> = (0..=k)
            .map(|_| (random_u2(&mut rng), random_u2(&mut rng)))
            .collect();
        // V = L_k CX L_{k-1} ... CX L_0
        let build = |ls: &[(Mat2, Mat2)], from: usize, to: usize| -> Mat4 {
            let mut m = Mat4::identity();
            for (i, (a, b)) in ls.iter().enumerate().take(to).skip(from) {
                if i > 0 {
                    m = cx * m;
                }
                m = kron(a, b) * m;
            }
            m
        };
        let mut last = -1.0;
        for _ in 0..500 {
            for i in 0..=k {
                let right = build(&layers, 0, i);
                let right = if i > 0 { cx * right } else { right };
                let mut left = Mat4::identity();
                for (a, b) in &layers[i + 1..] {
                    left = kron(a, b) * cx * left;
                }
                // Tr(U† left (A⊗B) right) = Tr((A⊗B) right U† left)
                let n = right * ud * left;
                let (_, b) = layers[i];
                let with_b = kron(&Mat2::identity(), &b) * n;
                let a = best_unitary(&trace_out_second(&with_b));
                let with_a = n * kron(&a, &Mat2::identity());
                let b = best_unitary(&trace_out_first(&with_a));
                layers[i] = (a, b);
            }
            let t = (ud * build(&layers, 0, k + 1)).trace().norm();
            if t - last < 1e-13 {
                last = t;
                break;
            }
            last = t;
        }
        best = best.max(last);
    }
    best
}

pub fn numeric_k_cnot_fidelity(u: &Mat4, k: usize, seed: u64) -> f64 {
    let t = numeric_best_trace(u, k, 12, seed);
    (4.0 + t * t) / 20.0
}

const HIGHS_SCRIPT: &str = r#"
import sys, highspy
h = highspy.Highs()
h.setOptionValue("output_flag", False)
h.setOptionValue("mip_rel_gap", 0.0)
h.setOptionValue("mip_abs_gap", 0.0)
if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
    sys.exit(3)
h.run()
if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
    sys.exit(4)
names = h.getLp().col_names_
for n, v in zip(names, h.getSolution().col_value):
    if v > 0.5:
        print(n, 1)
"#;

pub fn external_solver_available() -> bool {
    Command::new("python3")
        .args(["-c", "import highspy"])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok_and(|s| s.success())
}

/// Solves a model file with the HiGHS Python bindings and returns the
/// solution in `name value` form.
pub fn external_solve(model: &Path) -> Option<String> {
    let mut child = Command::new("python3")
        .args(["-", model.to_str()?])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .ok()?;
    child
        .stdin
        .take()?
        .write_all(HIGHS_SCRIPT.as_bytes())
        .ok()?;
    let out = child.wait_with_output().ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).into_owned())
}
