//! Command-line front end.
//!
//! Exit codes: 0 success, 1 other failure (including verification failure
//! and a limit hit with no incumbent), 2 infeasible, 3 limit hit with an
//! incumbent, 4 I/O, parse or configuration error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::bipmodel::{Model, ObjectiveKind};
use crate::circuit::{load_circuit, LayeredCircuit};
use crate::error::{Error, Result};
use crate::extract::{
    decode, stats, verify_structural, verify_unitary, CircuitStats, StructuralReport,
};
use crate::gatefid::{FidelityModel, PlacementTable};
use crate::heuristic::{run_variant, HeuristicConfig, Variant, VariantSettings};
use crate::hwgraph::{Builtin, HardwareGraph};
use crate::lexopt::{default_step, pareto_batch, summarize, write_table};
use crate::qvbench::{benchmark_batch, circuit_seed, gen_qv_circuit, BenchConfig};
use crate::solver::{export_model, import_solution, Emphasis, ModelFormat, SolveLimits, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

/// Largest width checked by full unitary simulation.
const UNITARY_CHECK_WIDTH: usize = 8;
const UNITARY_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(
    name = "qalloc",
    version,
    about = "Optimal qubit assignment and routing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Route circuits with one algorithm variant and verify the result.
    Transpile(TranspileArgs),
    /// Sweep the bound on the first objective and record the others.
    Pareto(ParetoArgs),
    /// Compare variants on quantum-volume circuits by heavy-output probability.
    Bench(BenchArgs),
    /// Write the model in LP or MPS form, optionally checking a solution.
    Export(ExportArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Topology document (JSON).
    #[arg(long, conflicts_with = "builtin")]
    pub topology: Option<PathBuf>,
    /// Builtin topology such as line-4, y-6 or grid-6.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Circuit document (JSON).
    #[arg(long, conflicts_with = "qv")]
    pub circuit: Option<PathBuf>,
    /// Quantum-volume batch as `width,count`.
    #[arg(long)]
    pub qv: Option<String>,
    /// Keep only the first layers of each generated circuit.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Objective order, comma separated.
    #[arg(long, default_value = "error,depth")]
    pub objectives: String,
    /// Empty steps inserted between consecutive gate layers.
    #[arg(long, default_value_t = 2)]
    pub dummy_steps: usize,
    /// Seconds per solve.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// `find` or `prove`.
    #[arg(long, default_value = "find")]
    pub emphasis: String,
    /// Per-gate fidelity overrides (JSON).
    #[arg(long)]
    pub fidelity: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TranspileArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "bip")]
    pub variant: String,
}

#[derive(Args, Debug)]
pub struct ParetoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    /// Bound increment; one SWAP or one unit by default.
    #[arg(long)]
    pub step_size: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Variants to compare, comma separated.
    #[arg(long, default_value = "bip,sabre_like")]
    pub variant: String,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// `lp` or `mps`.
    #[arg(long, default_value = "lp")]
    pub format: String,
    /// Solution document to validate and decode.
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

pub enum TopologySource {
    File(PathBuf),
    Builtin(Builtin, usize),
}

pub enum CircuitSource {
    File(PathBuf),
    Qv { width: usize, count: usize },
}

/// Validated settings shared by every command.
pub struct RunConfig {
    pub topology: TopologySource,
    pub circuit: CircuitSource,
    pub layers: Option<usize>,
    pub order: Vec<ObjectiveKind>,
    pub dummy_steps: usize,
    pub limits: SolveLimits,
    pub fidelity: Option<PathBuf>,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

/// A circuit ready for routing: padded and with empty steps inserted.
pub struct Instance {
    pub name: String,
    pub circuit: LayeredCircuit,
    pub fid: FidelityModel,
}

pub fn parse_builtin(s: &str) -> Result<(Builtin, usize)> {
    let bad = || Error::Config(format!("builtin topology '{s}' is not of the form name-n"));
    let (name, n) = s.rsplit_once('-').ok_or_else(bad)?;
    Ok((name.parse()?, n.parse().map_err(|_| bad())?))
}

fn parse_qv(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("--qv expects width,count, got '{s}'"));
    let (w, n) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        w.trim().parse().map_err(|_| bad())?,
        n.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn parse_order(s: &str) -> Result<Vec<ObjectiveKind>> {
    s.split(',').map(str::parse).collect()
}

impl RunConfig {
    pub fn from_args(a: &CommonArgs) -> Result<RunConfig> {
        let topology = match (&a.topology, &a.builtin) {
            (Some(p), None) => TopologySource::File(p.clone()),
            (None, Some(b)) => {
                let (kind, n) = parse_builtin(b)?;
                TopologySource::Builtin(kind, n)
            }
            _ => {
                return Err(Error::Config(
                    "give exactly one of --topology and --builtin".into(),
                ))
            }
        };
        let circuit = match (&a.circuit, &a.qv) {
            (Some(p), None) => CircuitSource::File(p.clone()),
            (None, Some(q)) => {
                let (width, count) = parse_qv(q)?;
                if count == 0 {
                    return Err(Error::Config("--qv count must be positive".into()));
                }
                CircuitSource::Qv { width, count }
            }
            _ => {
                return Err(Error::Config(
                    "give exactly one of --circuit and --qv".into(),
                ))
            }
        };
        let limits = SolveLimits {
            time_limit: a.time_limit.map(Duration::from_secs_f64),
            node_limit: a.node_limit,
            cutoff: None,
            emphasis: a.emphasis.parse::<Emphasis>()?,
        };
        Ok(RunConfig {
            topology,
            circuit,
            layers: a.layers,
            order: parse_order(&a.objectives)?,
            dummy_steps: a.dummy_steps,
            limits,
            fidelity: a.fidelity.clone(),
            seed: a.seed,
            jobs: a.jobs.max(1),
            out: a.out.clone(),
        })
    }

    pub fn load_topology(&self) -> Result<HardwareGraph> {
        match &self.topology {
            TopologySource::File(p) => HardwareGraph::load(p),
            TopologySource::Builtin(kind, n) => HardwareGraph::builtin(*kind, *n),
        }
    }

    pub fn load_instances(&self, g: &HardwareGraph) -> Result<Vec<Instance>> {
        let logical: Vec<(String, LayeredCircuit)> = match &self.circuit {
            CircuitSource::File(p) => {
                let c = load_circuit(p)?;
                let c = match self.layers {
                    Some(l) => c.truncate_layers(l),
                    None => c,
                };
                let name = p
                    .file_stem()
                    .map_or("circuit".into(), |s| s.to_string_lossy().into_owned());
                vec![(name, c)]
            }
            CircuitSource::Qv { width, count } => (0..*count)
                .map(|k| {
                    let qv = gen_qv_circuit(*width, circuit_seed(self.seed, k))?;
                    let l = self.layers.unwrap_or(qv.layers.len());
                    Ok((format!("qv{width}_{k}"), qv.lower_layers(l)))
                })
                .collect::<Result<_>>()?,
        };
        let overrides = match &self.fidelity {
            Some(p) => Some(FidelityModel::load_overrides(p)?),
            None => None,
        };
        logical
            .into_iter()
            .map(|(name, c)| {
                let circuit = c
                    .pad_qubits(g.num_nodes())?
                    .insert_dummy_steps(self.dummy_steps);
                let mut fid = FidelityModel::from_circuit(&circuit);
                if let Some(o) = &overrides {
                    fid = fid.with_overrides(o)?;
                }
                Ok(Instance { name, circuit, fid })
            })
            .collect()
    }

    pub fn settings(&self) -> VariantSettings {
        VariantSettings {
            order: self.order.clone(),
            limits: self.limits.clone(),
            heuristic: HeuristicConfig {
                seed: self.seed,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ProblemInfeasible | Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::Parse { .. }
        | Error::Config(_)
        | Error::UnknownVariable(_)
        | Error::UnknownGateKind(_)
        | Error::MalformedGate { .. }
        | Error::UnsupportedTopology { .. }
        | Error::CircuitTooWide { .. } => EXIT_INPUT,
        _ => EXIT_FAILURE,
    }
}

#[derive(Serialize)]
struct VerifyReport {
    structural: StructuralReport,
    /// Absent when the circuit is too wide to simulate.
    unitary_deviation: Option<f64>,
    ok: bool,
}

#[derive(Serialize)]
struct StatsRecord<'a> {
    variant: Variant,
    status: String,
    #[serde(flatten)]
    stats: &'a CircuitStats,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn verify(
    rc: &crate::extract::RoutedCircuit,
    c: &LayeredCircuit,
    g: &HardwareGraph,
) -> Result<VerifyReport> {
    let structural = verify_structural(rc, c, g);
    let unitary_deviation = if c.num_qubits() <= UNITARY_CHECK_WIDTH {
        Some(verify_unitary(rc, c)?)
    } else {
        None
    };
    let ok = structural.is_ok() && unitary_deviation.is_none_or(|d| d < UNITARY_TOL);
    Ok(VerifyReport {
        structural,
        unitary_deviation,
        ok,
    })
}

fn transpile_one(
    inst: &Instance,
    g: &HardwareGraph,
    variant: Variant,
    settings: &VariantSettings,
    out: &Path,
) -> Result<i32> {
    let run = run_variant(variant, &inst.circuit, g, &inst.fid, settings)?;
    let report = verify(&run.routed, &inst.circuit, g)?;
    run.routed
        .save(out.join(format!("{}.routed.json", inst.name)))?;
    let status = run
        .status
        .map_or("heuristic".to_string(), |s| s.to_string());
    write_json(
        &out.join(format!("{}.stats.json", inst.name)),
        &StatsRecord {
            variant,
            status: status.clone(),
            stats: &run.stats,
        },
    )?;
    write_json(&out.join(format!("{}.verify.json", inst.name)), &report)?;
    println!(
        "{}: {variant} {status} cnots={} depth={} error={:.9} verify={}",
        inst.name,
        run.stats.cnot_count,
        run.stats.depth_proxy,
        run.stats.error_objective_value,
        if report.ok { "ok" } else { "FAILED" }
    );
    if !report.ok {
        eprintln!(
            "{}: verification failed: {:?}",
            inst.name, report.structural.violations
        );
        return Ok(EXIT_FAILURE);
    }
    Ok(if run.status == Some(Status::Feasible) {
        EXIT_LIMIT
    } else {
        EXIT_OK
    })
}

fn cmd_transpile(a: &TranspileArgs) -> Result<i32> {
    let cfg = RunConfig::from_args(&a.common)?;
    let variant: Variant = a.variant.parse()?;
    let g = cfg.load_topology()?;
    let instances = cfg.load_instances(&g)?;
    fs::create_dir_all(&cfg.out)?;
    let settings = cfg.settings();
    let codes: Vec<i32> = cfg.pool()?.install(|| {
        instances
            .par_iter()
            .map(|inst| {
                transpile_one(inst, &g, variant, &settings, &cfg.out).unwrap_or_else(|e| {
                    eprintln!("{}: {e}", inst.name);
                    exit_code(&e)
                })
            })
            .collect()
    });
    Ok(worst(&codes))
}

/// Most severe code: input errors, then infeasibility, then failures, then
/// limits.
fn worst(codes: &[i32]) -> i32 {
    [EXIT_INPUT, EXIT_INFEASIBLE, EXIT_FAILURE, EXIT_LIMIT]
        .into_iter()
        .find(|c| codes.contains(c))
        .unwrap_or(EXIT_OK)
}

fn cmd_pareto(a: &ParetoArgs) -> Result<i32> {
    let cfg = RunConfig::from_args(&a.common)?;
    let g = cfg.load_topology()?;
    let instances = cfg.load_instances(&g)?;
    let options = crate::bipmodel::ModelOptions {
        crosstalk: cfg.order.contains(&ObjectiveKind::Crosstalk),
        ..Default::default()
    };
    let models: Vec<Model> = instances
        .iter()
        .map(|i| Model::build(&i.circuit, &g, &i.fid, options))
        .collect::<Result<_>>()?;
    let step = a
        .step_size
        .unwrap_or_else(|| default_step(cfg.order[0], g.mean_beta()));
    let rows = pareto_batch(&models, &cfg.order, a.steps, step, &cfg.limits, cfg.jobs)?;
    let summary = summarize(&rows, &cfg.order);
    fs::create_dir_all(&cfg.out)?;
    write_table(fs::File::create(cfg.out.join("pareto.csv"))?, &rows)?;
    write_table(
        fs::File::create(cfg.out.join("pareto_summary.csv"))?,
        &summary,
    )?;
    for s in &summary {
        println!(
            "step {} {}: mean value {:.6}, mean relative increase {:.6}",
            s.step, s.objective, s.mean_value, s.mean_relative_increase
        );
    }
    Ok(EXIT_OK)
}

fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let cfg = RunConfig::from_args(&a.common)?;
    let CircuitSource::Qv { width, count } = cfg.circuit else {
        return Err(Error::Config("bench needs --qv width,count".into()));
    };
    let variants: Vec<Variant> = a
        .variant
        .split(',')
        .map(str::parse)
        .collect::<Result<_>>()?;
    let g = cfg.load_topology()?;
    let bench = BenchConfig {
        circuits: count,
        width,
        layers: cfg.layers,
        dummy_steps: cfg.dummy_steps,
        variants,
        settings: cfg.settings(),
        seed: cfg.seed,
        jobs: cfg.jobs,
    };
    let report = benchmark_batch(&bench, &g)?;
    fs::create_dir_all(&cfg.out)?;
    write_table(fs::File::create(cfg.out.join("bench.csv"))?, &report.rows)?;
    write_table(
        fs::File::create(cfg.out.join("bench_summary.csv"))?,
        &report.summaries,
    )?;
    let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    for s in &report.summaries {
        println!(
            "{}: n={} mean HOP {:.4} (se {}) {} | cnots {:.2} depth {:.2} error {:.5} | r(cnots,HOP) {} r(depth,HOP) {} r(error,HOP) {}",
            s.variant,
            s.routed,
            s.mean_hop,
            fmt(s.hop_std_error),
            if s.passes { "pass" } else { "fail" },
            s.mean_cnots,
            s.mean_depth,
            s.mean_error,
            fmt(s.corr_cnots_hop),
            fmt(s.corr_depth_hop),
            fmt(s.corr_error_hop),
        );
    }
    Ok(EXIT_OK)
}

fn cmd_export(a: &ExportArgs) -> Result<i32> {
    let cfg = RunConfig::from_args(&a.common)?;
    let format: ModelFormat = a.format.parse()?;
    let g = cfg.load_topology()?;
    let instances = cfg.load_instances(&g)?;
    fs::create_dir_all(&cfg.out)?;
    let options = crate::bipmodel::ModelOptions {
        crosstalk: cfg.order.contains(&ObjectiveKind::Crosstalk),
        ..Default::default()
    };
    let mut code = EXIT_OK;
    for inst in &instances {
        let model = Model::build(&inst.circuit, &g, &inst.fid, options)?;
        let problem = model.problem(cfg.order[0], &[])?;
        let path = cfg
            .out
            .join(format!("{}.{}", inst.name, format.extension()));
        fs::write(&path, export_model(&problem, format))?;
        println!(
            "{}: {} variables, {} rows -> {}",
            inst.name,
            problem.num_vars(),
            problem.rows.len(),
            path.display()
        );
        if let Some(sol) = &a.solution {
            let doc = fs::read_to_string(sol)?;
            let r = import_solution(&problem, &doc)?;
            let table = PlacementTable::new(&inst.fid, &g);
            let rc = decode(&model, r.solution()?, &table)?;
            let report = verify(&rc, &inst.circuit, &g)?;
            rc.save(cfg.out.join(format!("{}.routed.json", inst.name)))?;
            write_json(&cfg.out.join(format!("{}.verify.json", inst.name)), &report)?;
            let s = stats(&rc, &table, &g);
            println!(
                "{}: solution objective {:.9}, cnots={} verify={}",
                inst.name,
                r.objective_value,
                s.cnot_count,
                if report.ok { "ok" } else { "FAILED" }
            );
            if !report.ok {
                code = EXIT_FAILURE;
            }
        }
    }
    Ok(code)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Transpile(a) => cmd_transpile(a),
        Command::Pareto(a) => cmd_pareto(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
