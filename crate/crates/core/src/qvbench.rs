//! Quantum-volume circuits, ideal heavy sets and heavy-output probability
//! under independent gate failures.

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{Gate, LayeredCircuit};
use crate::error::{Error, Result};
use crate::gatefid::FidelityModel;
use crate::gates::{Mat4, C64};
use crate::heuristic::{run_variant, Variant, VariantSettings};
use crate::hwgraph::HardwareGraph;
use crate::sim::StateVector;

/// Largest width simulated for heavy sets.
pub const MAX_SIM_WIDTH: usize = 12;

/// Haar-random element of U(4) from `rng`, phase-fixed to SU(4).
pub fn haar_su4_from<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let z = Matrix4::from_fn(|_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..4 {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for row in 0..4 {
            q[(row, k)] *= phase;
        }
    }
    let det = q.determinant();
    let root = Complex64::from_polar(1.0, -det.arg() / 4.0);
    q * root
}

pub fn haar_su4(seed: u64) -> Mat4 {
    haar_su4_from(&mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Clone, Debug)]
pub struct QvLayer {
    /// Qubit order for this layer; gate `k` acts on `perm[2k], perm[2k+1]`.
    pub perm: Vec<usize>,
    pub gates: Vec<Mat4>,
}

#[derive(Clone, Debug)]
pub struct QvCircuit {
    pub width: usize,
    pub seed: u64,
    pub layers: Vec<QvLayer>,
}

pub fn gen_qv_circuit(width: usize, seed: u64) -> Result<QvCircuit> {
    if width < 2 {
        return Err(Error::Config(format!("QV width {width} is below 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = (0..width)
        .map(|_| {
            let mut perm: Vec<usize> = (0..width).collect();
            perm.shuffle(&mut rng);
            let gates = (0..width / 2).map(|_| haar_su4_from(&mut rng)).collect();
            QvLayer { perm, gates }
        })
        .collect();
    Ok(QvCircuit {
        width,
        seed,
        layers,
    })
}

impl QvCircuit {
    /// Lowers to gate groups, one per layer, with ids in layer order.
    pub fn lower(&self) -> LayeredCircuit {
        self.lower_layers(self.layers.len())
    }

    /// Lowers only the first `layers` layers.
    pub fn lower_layers(&self, layers: usize) -> LayeredCircuit {
        let mut id = 0;
        let groups = self
            .layers
            .iter()
            .take(layers)
            .map(|layer| {
                layer
                    .gates
                    .iter()
                    .enumerate()
                    .map(|(k, u)| {
                        let mut g = Gate::new(layer.perm[2 * k], layer.perm[2 * k + 1], *u);
                        g.id = id;
                        id += 1;
                        g
                    })
                    .collect()
            })
            .collect();
        LayeredCircuit::from_groups(self.width, groups).expect("layers act on disjoint pairs")
    }

    /// Same circuit restricted to its first `layers` layers.
    pub fn truncated(&self, layers: usize) -> QvCircuit {
        QvCircuit {
            width: self.width,
            seed: self.seed,
            layers: self.layers.iter().take(layers).cloned().collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HeavySet {
    pub width: usize,
    pub outcomes: Vec<usize>,
    /// Ideal probability mass on the heavy outcomes.
    pub ideal_mass: f64,
}

impl HeavySet {
    /// Heavy probability of a uniformly random bitstring.
    pub fn uniform_mass(&self) -> f64 {
        self.outcomes.len() as f64 / (1usize << self.width) as f64
    }
}

/// Outcomes whose probability is strictly above the median.
pub fn heavy_from_probabilities(width: usize, probs: &[f64]) -> HeavySet {
    let mut sorted = probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n.is_multiple_of(2) {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    } else {
        sorted[n / 2]
    };
    let outcomes: Vec<usize> = (0..n).filter(|&k| probs[k] > median).collect();
    let ideal_mass = outcomes.iter().map(|&k| probs[k]).sum();
    HeavySet {
        width,
        outcomes,
        ideal_mass,
    }
}

pub fn simulate(c: &LayeredCircuit) -> Result<Vec<f64>> {
    let w = c.num_qubits();
    if w > MAX_SIM_WIDTH {
        return Err(Error::TooLarge(format!("{w} qubits to simulate")));
    }
    let mut s = StateVector::zero(w);
    for g in c.gates() {
        s.apply2(&g.unitary, g.p, g.q);
    }
    Ok(s.probabilities())
}

pub fn ideal_heavy_set(c: &QvCircuit) -> Result<HeavySet> {
    Ok(heavy_from_probabilities(c.width, &simulate(&c.lower())?))
}

/// Mixture of the ideal heavy mass with a uniformly random outcome, weighted
/// by the success probability `exp(-error_value)`.
pub fn hop_under_noise(heavy: &HeavySet, error_value: f64) -> f64 {
    let s = (-error_value).exp();
    s * heavy.ideal_mass + (1.0 - s) * heavy.uniform_mass()
}

#[derive(Clone, Debug, Serialize)]
pub struct HopEstimate {
    pub per_circuit: Vec<f64>,
    pub mean: f64,
    /// Absent for a single circuit.
    pub std_error: Option<f64>,
}

impl HopEstimate {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_error = (values.len() > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            var.sqrt() / n.sqrt()
        });
        HopEstimate {
            per_circuit: values,
            mean,
            std_error,
        }
    }

    pub fn passes(&self) -> bool {
        self.mean > 2.0 / 3.0
    }
}

/// Pearson correlation; `None` when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Mean ideal heavy mass over `n` seeded circuits.
pub fn mean_ideal_heavy_mass(width: usize, n: usize, seed: u64) -> Result<f64> {
    let masses: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| Ok(ideal_heavy_set(&gen_qv_circuit(width, circuit_seed(seed, k))?)?.ideal_mass))
        .collect();
    Ok(masses?.iter().sum::<f64>() / n as f64)
}

/// Seed for circuit `index` of a batch rooted at `seed`.
pub fn circuit_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_add(1)
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub circuits: usize,
    pub width: usize,
    /// Layers kept from each circuit; all of them when `None`.
    pub layers: Option<usize>,
    pub dummy_steps: usize,
    pub variants: Vec<Variant>,
    pub settings: VariantSettings,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            circuits: 10,
            width: 4,
            layers: None,
            dummy_steps: 2,
            variants: vec![Variant::Bip, Variant::SabreLike],
            settings: VariantSettings::default(),
            seed: 0,
            jobs: 1,
        }
    }
}

/// One circuit under one variant. Metric fields are empty when the variant
/// found no routing.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub circuit: usize,
    pub seed: u64,
    pub variant: Variant,
    pub status: String,
    pub cnot_count: Option<usize>,
    pub depth_proxy: Option<usize>,
    pub error_objective: Option<f64>,
    pub ideal_heavy: f64,
    pub hop: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub routed: usize,
    pub mean_hop: f64,
    pub hop_std_error: Option<f64>,
    pub passes: bool,
    pub mean_cnots: f64,
    pub mean_depth: f64,
    pub mean_error: f64,
    pub corr_cnots_hop: Option<f64>,
    pub corr_depth_hop: Option<f64>,
    pub corr_error_hop: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<VariantSummary>,
}

impl BenchReport {
    pub fn summary(&self, v: Variant) -> Option<&VariantSummary> {
        self.summaries.iter().find(|s| s.variant == v)
    }
}

fn bench_circuit(cfg: &BenchConfig, g: &HardwareGraph, index: usize) -> Result<Vec<BenchRow>> {
    let seed = circuit_seed(cfg.seed, index);
    let mut qv = gen_qv_circuit(cfg.width, seed)?;
    if let Some(l) = cfg.layers {
        qv = qv.truncated(l);
    }
    let heavy = ideal_heavy_set(&qv)?;
    let logical = qv.lower();
    let c = logical
        .pad_qubits(g.num_nodes())?
        .insert_dummy_steps(cfg.dummy_steps);
    let fid = FidelityModel::from_circuit(&c);
    let mut rows = Vec::with_capacity(cfg.variants.len());
    for &variant in &cfg.variants {
        let row = match run_variant(variant, &c, g, &fid, &cfg.settings) {
            Ok(run) => {
                let e = run.stats.error_objective_value;
                BenchRow {
                    circuit: index,
                    seed,
                    variant,
                    status: run.status.map_or("heuristic".into(), |s| s.to_string()),
                    cnot_count: Some(run.stats.cnot_count),
                    depth_proxy: Some(run.stats.depth_proxy),
                    error_objective: Some(e),
                    ideal_heavy: heavy.ideal_mass,
                    hop: Some(hop_under_noise(&heavy, e)),
                }
            }
            Err(Error::ProblemInfeasible) => BenchRow {
                circuit: index,
                seed,
                variant,
                status: "infeasible".into(),
                cnot_count: None,
                depth_proxy: None,
                error_objective: None,
                ideal_heavy: heavy.ideal_mass,
                hop: None,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(rows)
}

fn summarize_variant(rows: &[BenchRow], variant: Variant) -> VariantSummary {
    let ok: Vec<&BenchRow> = rows
        .iter()
        .filter(|r| r.variant == variant && r.hop.is_some())
        .collect();
    let hop: Vec<f64> = ok.iter().map(|r| r.hop.unwrap()).collect();
    let cnots: Vec<f64> = ok.iter().map(|r| r.cnot_count.unwrap() as f64).collect();
    let depth: Vec<f64> = ok.iter().map(|r| r.depth_proxy.unwrap() as f64).collect();
    let err: Vec<f64> = ok.iter().map(|r| r.error_objective.unwrap()).collect();
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let est = (!hop.is_empty()).then(|| HopEstimate::from_values(hop.clone()));
    VariantSummary {
        variant,
        routed: ok.len(),
        mean_hop: mean(&hop),
        hop_std_error: est.as_ref().and_then(|e| e.std_error),
        passes: est.as_ref().is_some_and(HopEstimate::passes),
        mean_cnots: mean(&cnots),
        mean_depth: mean(&depth),
        mean_error: mean(&err),
        corr_cnots_hop: pearson(&cnots, &hop),
        corr_depth_hop: pearson(&depth, &hop),
        corr_error_hop: pearson(&err, &hop),
    }
}

/// Routes a seeded batch of QV circuits with every requested variant and
/// scores each routing by its heavy-output probability.
pub fn benchmark_batch(cfg: &BenchConfig, g: &HardwareGraph) -> Result<BenchReport> {
    if cfg.circuits == 0 {
        return Err(Error::Config("a batch needs at least one circuit".into()));
    }
    if cfg.width > MAX_SIM_WIDTH {
        return Err(Error::TooLarge(format!("{} qubits to simulate", cfg.width)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let per: Vec<Result<Vec<BenchRow>>> = pool.install(|| {
        (0..cfg.circuits)
            .into_par_iter()
            .map(|k| bench_circuit(cfg, g, k))
            .collect()
    });
    let mut rows = Vec::new();
    for r in per {
        rows.extend(r?);
    }
    let summaries = cfg
        .variants
        .iter()
        .map(|&v| summarize_variant(&rows, v))
        .collect();
    Ok(BenchReport { rows, summaries })
}
