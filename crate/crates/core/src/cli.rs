//! `basenode` command-line interface.
//!
//! Every subcommand prints its resolved configuration (flags merged over the
//! optional `--config` file, defaults filled in) to stderr before acting, and
//! records its outputs with checksums in `<out>/manifest.json`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 seed-policy violation,
//! 4 partial benchmark failure, 1 anything else.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bench::{self, BenchmarkPlan, Contender, ReferenceMode};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::gen::{Distribution, DistributionSpec};
use crate::interop::{self, ExternalConfig, ExternalSolver};
use crate::model::{Instance, Problem, Solution};
use crate::plot;
use crate::solve::{self, Algorithm, SolverConfig};
use crate::subsample::{self, Dataset, EpochArrays, Purpose, DEFAULT_TEST_LEN};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SEED_POLICY: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

const DEFAULT_OUT: &str = "out";
const DEFAULT_BUDGETS: &str = "0.7,5,50";

#[derive(Debug, Parser)]
#[command(name = "basenode", version, about = "Base node distributions, subsampled routing datasets and gap benchmarks")]
pub struct Cli {
    /// Seed for pool generation, subsampling and solvers [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// INI-style configuration file; explicit flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads [default: all cores; 1 for timed benchmarks]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a base node distribution (pool) and save it
    GenBase(GenBaseArgs),
    /// Subsample a test, train or epoch dataset from a pool
    Subsample(SubsampleArgs),
    /// Solve an instance or every instance of a dataset
    Solve(SolveArgs),
    /// Run a time-budgeted gap benchmark
    Bench(BenchArgs),
    /// Attach reference solutions to a dataset
    Label(LabelArgs),
    /// Write instances as TSPLIB / CVRPLIB files
    Export(ExportArgs),
    /// Scatter plot of a pool and/or one instance as SVG
    Plot(PlotArgs),
    /// Describe and verify a saved file
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct GenBaseArgs {
    /// Underlying distribution: uniform, explosion, rotation, x-c, x-rc
    #[arg(long)]
    pub dist: Option<String>,
    /// Number of pool nodes (at least 2)
    #[arg(long)]
    pub n_base: Option<usize>,
    /// Problem class: tsp or cvrp [default: tsp]
    #[arg(long)]
    pub problem: Option<String>,
    /// Vehicle capacity override for CVRP pools [default: 50 for 1..9 demands, ceil(target/4) for unit demands]
    #[arg(long)]
    pub capacity: Option<u32>,
    /// Instance size the capacity rule targets [default: 100]
    #[arg(long)]
    pub target_size: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SubsampleArgs {
    /// Pool file written by gen-base
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Customers per instance [default: 100]
    #[arg(long)]
    pub n: Option<usize>,
    /// Dataset role: test, train or epoch [default: test]
    #[arg(long)]
    pub role: Option<String>,
    /// Instances in the dataset [default: 128]
    #[arg(long)]
    pub length: Option<usize>,
    /// Epoch number for the epoch role [default: 0]
    #[arg(long)]
    pub epoch: Option<u64>,
    /// Seed registry file [default: <out>/seed_registry.json]
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    /// Algorithm: nearest_neighbor, savings, two_opt, or_opt, cvrp_local_search, simulated_annealing, exact_oracle [default: simulated_annealing]
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Per-instance budget in seconds [default: 1]
    #[arg(long)]
    pub budget: Option<f64>,
    /// Annealing start temperature [default: calibrated so the median move is accepted with p = 0.8]
    #[arg(long)]
    pub start_temperature: Option<f64>,
    /// Geometric cooling factor per batch of accepted moves [default: 0.999]
    #[arg(long)]
    pub cooling_rate: Option<f64>,
    /// Iteration cap for exact replays
    #[arg(long)]
    pub max_iterations: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file
    #[arg(long, conflicts_with = "dataset")]
    pub instance: Option<PathBuf>,
    /// Dataset file
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Only this dataset index [default: all]
    #[arg(long)]
    pub index: Option<usize>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dataset files (repeat the flag or separate with commas)
    #[arg(long, value_delimiter = ',')]
    pub dataset: Vec<PathBuf>,
    /// Solver columns as `name=algorithm` or `algorithm`; `lkh` and `hgs` select external binaries [default: simulated_annealing]
    #[arg(long, value_delimiter = ',')]
    pub solvers: Vec<String>,
    /// Budget tiers in seconds [default: 0.7,5,50]
    #[arg(long, value_delimiter = ',')]
    pub budgets: Vec<f64>,
    /// Reference solver name [default: first solver]
    #[arg(long)]
    pub reference: Option<String>,
    /// Reference tier: per-tier or largest [default: per-tier]
    #[arg(long)]
    pub reference_mode: Option<String>,
    /// Runs per cell with derived seeds [default: 1]
    #[arg(long)]
    pub repeats: Option<u32>,
    /// Replay a previous report with its recorded iteration caps
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Skip core pinning and the oversubscription check
    #[arg(long)]
    pub untimed: bool,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Dataset file
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Labeling solver: an algorithm name, `lkh` or `hgs` [default: exact_oracle]
    #[arg(long)]
    pub solver: Option<String>,
    /// Per-instance budget in seconds [default: 1]
    #[arg(long)]
    pub budget: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Instance file
    #[arg(long, conflicts_with = "dataset")]
    pub instance: Option<PathBuf>,
    /// Dataset file
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Only this dataset index [default: all]
    #[arg(long)]
    pub index: Option<usize>,
    /// Coordinate scale before integer rounding [default: 1000000]
    #[arg(long)]
    pub scale: Option<i64>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Pool file
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Dataset file; one instance is overlaid
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Dataset index to overlay [default: 0]
    #[arg(long)]
    pub index: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// File to describe
    pub path: PathBuf,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SeedCollision { .. } => EXIT_SEED_POLICY,
        Error::BinaryNotFound(_) | Error::ParseError { .. } | Error::InfeasibleExternalSolution(_) => EXIT_FAILURE,
        _ => EXIT_INVALID,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Context {
    config: Config,
    seed: u64,
    out: PathBuf,
    jobs: Option<usize>,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn default_jobs(&self) -> usize {
        self.jobs.unwrap_or_else(bench::available_cores).max(1)
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let section = section_name(&cli.command);
    let ctx = Context {
        seed: config.merge(cli.seed, section, "seed", 0)?,
        out: config.merge(cli.out.clone(), section, "out", PathBuf::from(DEFAULT_OUT))?,
        jobs: config.merge_opt(cli.jobs, section, "jobs")?,
        config,
    };
    if !ctx.out.extension().is_some_and(|e| e == "svg") {
        fs::create_dir_all(&ctx.out).map_err(|e| Error::io(&ctx.out, e))?;
    }
    match cli.command {
        Command::GenBase(a) => gen_base(&ctx, a),
        Command::Subsample(a) => subsample_cmd(&ctx, a),
        Command::Solve(a) => solve_cmd(&ctx, a),
        Command::Bench(a) => bench_cmd(&ctx, a),
        Command::Label(a) => label_cmd(&ctx, a),
        Command::Export(a) => export_cmd(&ctx, a),
        Command::Plot(a) => plot_cmd(&ctx, a),
        Command::Inspect(a) => inspect_cmd(&ctx, a),
    }
}

fn section_name(c: &Command) -> &'static str {
    match c {
        Command::GenBase(_) => "gen-base",
        Command::Subsample(_) => "subsample",
        Command::Solve(_) => "solve",
        Command::Bench(_) => "bench",
        Command::Label(_) => "label",
        Command::Export(_) => "export",
        Command::Plot(_) => "plot",
        Command::Inspect(_) => "inspect",
    }
}

fn announce(command: &str, resolved: &Value) {
    eprintln!("basenode {command}: resolved configuration");
    eprintln!("{}", serde_json::to_string_pretty(resolved).unwrap_or_default());
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidConfig(format!("missing required --{flag}")))
}

fn parse<T: std::str::FromStr<Err = Error>>(text: &str) -> Result<T> {
    text.parse()
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    entries: BTreeMap<String, ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    command: String,
    config: Value,
    outputs: Vec<OutputFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OutputFile {
    path: String,
    sha256: String,
}

/// Writes `bytes` under the output directory and returns its manifest row.
fn emit(dir: &Path, path: &Path, bytes: &[u8]) -> Result<OutputFile> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let rel = path.strip_prefix(dir).unwrap_or(path);
    Ok(OutputFile { path: rel.display().to_string(), sha256: interop::checksum(bytes) })
}

fn record_manifest(dir: &Path, command: &str, config: Value, outputs: Vec<OutputFile>) -> Result<()> {
    let path = dir.join("manifest.json");
    let mut manifest: Manifest = match fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes).unwrap_or_default(),
        Err(_) => Manifest::default(),
    };
    manifest.tool = "basenode".into();
    manifest.version = env!("CARGO_PKG_VERSION").into();
    let key = format!("{command}:{}", outputs.first().map(|o| o.path.as_str()).unwrap_or(""));
    manifest.entries.insert(key, ManifestEntry { command: command.into(), config, outputs });
    let text = serde_json::to_vec_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

/// Runs `f` over `items` on `jobs` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                slots.lock().expect("slots poisoned")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("slots poisoned").into_iter().map(|r| r.expect("every item ran")).collect()
}

fn gen_base(ctx: &Context, a: GenBaseArgs) -> Result<i32> {
    let s = "gen-base";
    let c = &ctx.config;
    let dist: Distribution = parse(&required(c.merge_opt(a.dist, s, "dist")?, "dist")?)?;
    let n_base: usize = required(c.merge_opt(a.n_base, s, "n_base")?, "n-base")?;
    let problem: Problem = parse(&c.merge(a.problem, s, "problem", "tsp".to_string())?)?;
    let mut spec = DistributionSpec::standard(dist, problem);
    spec.params.capacity = c.merge_opt(a.capacity, s, "capacity")?;
    spec.params.target_size = c.merge(a.target_size, s, "target_size", spec.params.target_size)?;
    let resolved = json!({
        "dist": spec.tag.to_string(),
        "n_base": n_base,
        "problem": problem,
        "seed": ctx.seed,
        "out": ctx.out,
        "spec": spec,
        "capacity": spec.capacity(),
    });
    announce(s, &resolved);
    let base = subsample::build_base(&spec, n_base, ctx.seed)?;
    let path = ctx.path(&format!("pool_{}.json", base.base_id));
    let bytes = interop::encode(interop::FileKind::Pool, &base)?;
    let out = emit(&ctx.out, &path, &bytes)?;
    record_manifest(&ctx.out, s, resolved, vec![out])?;
    eprintln!("wrote {} ({})", path.display(), base.label());
    println!("{}", base.base_id);
    Ok(EXIT_OK)
}

fn subsample_cmd(ctx: &Context, a: SubsampleArgs) -> Result<i32> {
    let s = "subsample";
    let c = &ctx.config;
    let base_path: PathBuf = required(c.merge_opt(a.base, s, "base")?, "base")?;
    let n: usize = c.merge(a.n, s, "n", 100)?;
    let role: Purpose = parse(&c.merge(a.role, s, "role", "test".to_string())?)?;
    let length: usize = c.merge(a.length, s, "length", DEFAULT_TEST_LEN)?;
    let epoch: u64 = c.merge(a.epoch, s, "epoch", 0)?;
    let registry_path = c.merge(a.registry, s, "registry", ctx.path("seed_registry.json"))?;
    let resolved = json!({
        "base": base_path,
        "n": n,
        "role": role,
        "seed": ctx.seed,
        "length": length,
        "epoch": (role == Purpose::Epoch).then_some(epoch),
        "registry": registry_path,
        "out": ctx.out,
    });
    announce(s, &resolved);
    if length == 0 {
        return Err(Error::InvalidCount(0, "dataset length must be at least 1"));
    }
    let base = interop::load_base(&base_path)?;
    let mut registry = interop::load_registry(&registry_path)?;
    let stem = format!("{role}_{}_n{n}_s{}", base.base_id, ctx.seed);
    let mut outputs = Vec::new();
    let dataset = match role {
        Purpose::Test => registry.mint_test(&base, n, ctx.seed, length)?,
        Purpose::Train => {
            let ds = subsample::make_train(&base, &registry, n, ctx.seed, length)?;
            registry.register_train(&base.base_id, ctx.seed)?;
            ds
        }
        Purpose::Epoch => subsample::make_epoch(&base, &registry, n, ctx.seed, epoch, length)?,
    };
    let manifest = interop::dataset_manifest(&dataset)?;
    if role == Purpose::Epoch {
        let stem = format!("{stem}_e{epoch}");
        let arrays = EpochArrays::from_dataset(&dataset);
        outputs.push(emit(&ctx.out, &ctx.path(&format!("{stem}.bin")), &arrays.to_bytes())?);
        outputs.push(emit(&ctx.out, &ctx.path(&format!("{stem}.manifest.json")), &serde_json::to_vec_pretty(&manifest)?)?);
        eprintln!("wrote {} epoch instances as dense arrays ({} rows each)", arrays.instances, arrays.rows);
    } else {
        let bytes = interop::encode(interop::FileKind::Dataset, &dataset)?;
        outputs.push(emit(&ctx.out, &ctx.path(&format!("{stem}.json")), &bytes)?);
        outputs.push(emit(&ctx.out, &ctx.path(&format!("{stem}.manifest.json")), &serde_json::to_vec_pretty(&manifest)?)?);
        interop::save_registry(&registry_path, &registry)?;
        eprintln!("wrote {} with {} instances", dataset.label(), dataset.len());
    }
    println!("{}", ctx.out.join(&outputs[0].path).display());
    record_manifest(&ctx.out, s, resolved, outputs)?;
    Ok(EXIT_OK)
}

fn solver_config(ctx: &Context, section: &str, f: SolverFlags, default_algorithm: &str) -> Result<SolverConfig> {
    let c = &ctx.config;
    let algorithm: Algorithm = parse(&c.merge(f.algorithm, section, "algorithm", default_algorithm.to_string())?)?;
    let budget = c.merge(f.budget, section, "budget", 1.0)?;
    let mut config = SolverConfig::new(algorithm, budget, ctx.seed);
    config.params.start_temperature = c.merge_opt(f.start_temperature, section, "start_temperature")?;
    config.params.cooling_rate = c.merge(f.cooling_rate, section, "cooling_rate", config.params.cooling_rate)?;
    config.max_iterations = c.merge_opt(f.max_iterations, section, "max_iterations")?;
    config.validate()?;
    Ok(config)
}

fn load_instances(instance: Option<PathBuf>, dataset: Option<PathBuf>, index: Option<usize>) -> Result<(String, Vec<(usize, Instance)>)> {
    match (instance, dataset) {
        (Some(p), None) => Ok((file_stem(&p), vec![(0, interop::load_instance(&p)?)])),
        (None, Some(p)) => {
            let ds = interop::load_dataset(&p)?;
            let items: Vec<(usize, Instance)> = match index {
                Some(i) => {
                    let inst = ds
                        .instances
                        .get(i)
                        .cloned()
                        .ok_or_else(|| Error::InvalidConfig(format!("index {i} out of range for {} instances", ds.len())))?;
                    vec![(i, inst)]
                }
                None => ds.instances.into_iter().enumerate().collect(),
            };
            Ok((file_stem(&p), items))
        }
        _ => Err(Error::InvalidConfig("give exactly one of --instance or --dataset".into())),
    }
}

fn solve_cmd(ctx: &Context, a: SolveArgs) -> Result<i32> {
    let s = "solve";
    let config = solver_config(ctx, s, a.solver, "simulated_annealing")?;
    let jobs = ctx.default_jobs();
    let resolved = json!({
        "instance": a.instance,
        "dataset": a.dataset,
        "index": a.index,
        "solver": config,
        "jobs": jobs,
        "out": ctx.out,
    });
    announce(s, &resolved);
    let (stem, items) = load_instances(a.instance, a.dataset, a.index)?;
    let results = parallel_map(&items, jobs, |(i, inst)| (*i, solve::solve(inst, &config)));
    let mut rows = Vec::new();
    for (i, r) in results {
        let trace = r?;
        rows.push(json!({
            "index": i,
            "cost": trace.best.cost(),
            "iterations": trace.iterations,
            "wall_time": trace.wall_time,
            "stopped_by": trace.stopped_by,
            "curve": trace.curve,
            "solution": trace.best,
        }));
    }
    let mean = rows.iter().filter_map(|r| r["cost"].as_f64()).sum::<f64>() / rows.len().max(1) as f64;
    let path = ctx.path(&format!("solutions_{stem}_{}.json", config.algorithm));
    let out = emit(&ctx.out, &path, &serde_json::to_vec_pretty(&json!({ "config": config, "results": rows }))?)?;
    record_manifest(&ctx.out, s, resolved, vec![out])?;
    println!("{} instance(s), mean cost {mean:.6}", rows.len());
    Ok(EXIT_OK)
}

/// `name=algorithm`, a bare algorithm name, or `lkh` / `hgs`.
fn parse_contender(spec: &str, seed: u64) -> Result<Contender> {
    let (name, what) = match spec.split_once('=') {
        Some((n, w)) => (n.trim().to_string(), w.trim()),
        None => (spec.trim().to_string(), spec.trim()),
    };
    if let Ok(ext) = what.parse::<ExternalSolver>() {
        return Ok(Contender::external(name, ext));
    }
    let algorithm: Algorithm = what.parse()?;
    Ok(Contender::builtin(name, algorithm, seed))
}

fn external_config(ctx: &Context, section: &str) -> Result<ExternalConfig> {
    Ok(ExternalConfig {
        lkh: ctx.config.get(section, "lkh")?,
        hgs: ctx.config.get(section, "hgs")?,
        scratch: ctx.config.get(section, "scratch")?,
        seed: ctx.seed,
    })
}

fn bench_cmd(ctx: &Context, a: BenchArgs) -> Result<i32> {
    let s = "bench";
    let c = &ctx.config;
    let datasets_paths: Vec<PathBuf> = if a.dataset.is_empty() {
        c.list(s, "dataset").unwrap_or_default().into_iter().map(PathBuf::from).collect()
    } else {
        a.dataset
    };
    if datasets_paths.is_empty() {
        return Err(Error::InvalidConfig("missing required --dataset".into()));
    }
    let datasets = datasets_paths.iter().map(|p| interop::load_dataset(p)).collect::<Result<Vec<Dataset>>>()?;

    if let Some(replay_path) = a.replay {
        let text = fs::read_to_string(&replay_path).map_err(|e| Error::io(&replay_path, e))?;
        let original = bench::BenchmarkReport::from_json(&text)?;
        let jobs = ctx.default_jobs();
        let resolved = json!({ "replay": replay_path, "datasets": datasets_paths, "jobs": jobs, "out": ctx.out });
        announce(s, &resolved);
        let replayed = bench::replay(&datasets, &original, jobs)?;
        let before = bench::replay_csv(&original)?;
        let after = bench::replay_csv(&replayed)?;
        let out = emit(&ctx.out, &ctx.path("replay.csv"), after.as_bytes())?;
        record_manifest(&ctx.out, "bench-replay", resolved, vec![out])?;
        if before == after {
            println!("replay identical: {} records", replayed.records.len());
            return Ok(EXIT_OK);
        }
        let differing = before.lines().zip(after.lines()).filter(|(x, y)| x != y).count();
        eprintln!("replay differs on {differing} rows");
        return Ok(EXIT_FAILURE);
    }

    let solver_specs: Vec<String> = if a.solvers.is_empty() {
        c.list(s, "solvers").unwrap_or_else(|| vec!["simulated_annealing".into()])
    } else {
        a.solvers
    };
    let contenders = solver_specs.iter().map(|x| parse_contender(x, ctx.seed)).collect::<Result<Vec<_>>>()?;
    let budgets: Vec<f64> = if a.budgets.is_empty() {
        let list = c.list(s, "budgets").unwrap_or_else(|| DEFAULT_BUDGETS.split(',').map(String::from).collect());
        list.iter()
            .map(|b| b.parse().map_err(|_| Error::InvalidConfig(format!("bad budget `{b}`"))))
            .collect::<Result<_>>()?
    } else {
        a.budgets
    };
    let reference = c.merge(a.reference, s, "reference", contenders[0].name.clone())?;
    let reference_mode = match c.merge(a.reference_mode, s, "reference_mode", "per-tier".to_string())?.as_str() {
        "per-tier" | "per_tier" => ReferenceMode::PerTier,
        "largest" => ReferenceMode::Largest,
        other => return Err(Error::InvalidConfig(format!("unknown reference mode `{other}`"))),
    };
    let timed = !(a.untimed || c.get::<bool>(s, "untimed")?.unwrap_or(false));
    let jobs = match ctx.jobs {
        Some(j) => j,
        None if timed => 1,
        None => bench::available_cores(),
    };
    let mut plan = BenchmarkPlan::new(contenders, budgets, reference);
    plan.reference_mode = reference_mode;
    plan.repeats = c.merge(a.repeats, s, "repeats", 1)?;
    plan.jobs = jobs;
    plan.timed = timed;
    plan.external = external_config(ctx, s)?;
    let resolved = json!({
        "datasets": datasets_paths,
        "solvers": plan.contenders,
        "budgets": plan.budgets,
        "reference": plan.reference,
        "reference_mode": plan.reference_mode,
        "repeats": plan.repeats,
        "jobs": plan.jobs,
        "timed": plan.timed,
        "seed": ctx.seed,
        "cells": datasets.iter().map(Dataset::len).sum::<usize>() * plan.budgets.len() * plan.contenders.len() * plan.repeats as usize,
        "out": ctx.out,
    });
    announce(s, &resolved);
    let report = bench::run_benchmark(&datasets, &plan)?;
    let (table, summary) = bench::summarize(&report)?;
    let outputs = vec![
        emit(&ctx.out, &ctx.path("report.json"), report.to_json()?.as_bytes())?,
        emit(&ctx.out, &ctx.path("records.csv"), bench::records_csv(&report)?.as_bytes())?,
        emit(&ctx.out, &ctx.path("summary.csv"), summary.as_bytes())?,
        emit(&ctx.out, &ctx.path("table.txt"), table.as_bytes())?,
    ];
    record_manifest(&ctx.out, s, resolved, outputs)?;
    print!("{table}");
    let failed: Vec<&bench::RunRecord> = report.failures().collect();
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        for r in &failed {
            eprintln!(
                "failed cell: {} #{} {} @ {}s: {}",
                r.dataset,
                r.instance,
                r.solver,
                r.budget,
                r.error.as_deref().unwrap_or("unknown error")
            );
        }
        Ok(EXIT_PARTIAL)
    }
}

fn label_cmd(ctx: &Context, a: LabelArgs) -> Result<i32> {
    let s = "label";
    let c = &ctx.config;
    let path = required(c.merge_opt(a.dataset, s, "dataset")?, "dataset")?;
    let solver = c.merge(a.solver, s, "solver", "exact_oracle".to_string())?;
    let budget = c.merge(a.budget, s, "budget", 1.0)?;
    let jobs = ctx.default_jobs();
    let resolved = json!({ "dataset": path, "solver": solver, "budget": budget, "seed": ctx.seed, "jobs": jobs, "out": ctx.out });
    announce(s, &resolved);
    let ds = interop::load_dataset(&path)?;
    let external = external_config(ctx, s)?;
    let results: Vec<Result<Solution>> = if let Ok(ext) = solver.parse::<ExternalSolver>() {
        if let Err(e @ Error::BinaryNotFound(_)) = interop::find_binary(ext, &external) {
            eprintln!("skipping labels: {e}");
            record_manifest(&ctx.out, s, resolved, Vec::new())?;
            return Ok(EXIT_OK);
        }
        parallel_map(&ds.instances, jobs, |inst| interop::run_external(ext, inst, budget, &external))
    } else {
        let config = SolverConfig::new(parse(&solver)?, budget, ctx.seed);
        parallel_map(&ds.instances, jobs, |inst| solve::solve(inst, &config).map(|t| t.best))
    };
    let labels = results.into_iter().collect::<Result<Vec<_>>>()?;
    let labeled = subsample::attach_labels(ds, labels)?;
    let out_path = ctx.path(&format!("labeled_{}.json", file_stem(&path)));
    let bytes = interop::encode(interop::FileKind::Dataset, &labeled)?;
    let out = emit(&ctx.out, &out_path, &bytes)?;
    record_manifest(&ctx.out, s, resolved, vec![out])?;
    let mean = labeled.labels.iter().flatten().map(Solution::cost).sum::<f64>() / labeled.len().max(1) as f64;
    println!("{} labeled, mean cost {mean:.6}", labeled.len());
    Ok(EXIT_OK)
}

fn export_cmd(ctx: &Context, a: ExportArgs) -> Result<i32> {
    let s = "export";
    let scale = ctx.config.merge(a.scale, s, "scale", interop::DEFAULT_SCALE)?;
    if scale <= 0 {
        return Err(Error::InvalidConfig("scale must be positive".into()));
    }
    let resolved = json!({ "instance": a.instance, "dataset": a.dataset, "index": a.index, "scale": scale, "out": ctx.out });
    announce(s, &resolved);
    let (stem, items) = load_instances(a.instance, a.dataset, a.index)?;
    let mut outputs = Vec::new();
    for (i, inst) in &items {
        let ext = match inst.problem {
            Problem::Tsp => "tsp",
            Problem::Cvrp => "vrp",
        };
        let path = ctx.path(&format!("{stem}_{i:04}.{ext}"));
        outputs.push(emit(&ctx.out, &path, interop::export_tsplib(inst, scale).as_bytes())?);
    }
    println!("exported {} instance(s)", outputs.len());
    record_manifest(&ctx.out, s, resolved, outputs)?;
    Ok(EXIT_OK)
}

fn plot_cmd(ctx: &Context, a: PlotArgs) -> Result<i32> {
    let s = "plot";
    let c = &ctx.config;
    let base_path: Option<PathBuf> = c.merge_opt(a.base, s, "base")?;
    let dataset_path: Option<PathBuf> = c.merge_opt(a.dataset, s, "dataset")?;
    let index = c.merge(a.index, s, "index", 0usize)?;
    // `--out picture.svg` names the file directly; otherwise it is a directory.
    let (dir, svg_path) = if ctx.out.extension().is_some_and(|e| e == "svg") {
        let dir = ctx.out.parent().map(Path::to_path_buf).unwrap_or_default();
        (dir, ctx.out.clone())
    } else {
        let name = base_path.as_ref().or(dataset_path.as_ref()).map(|p| file_stem(p)).unwrap_or_default();
        (ctx.out.clone(), ctx.path(&format!("{name}.svg")))
    };
    let resolved = json!({ "base": base_path, "dataset": dataset_path, "index": index, "svg": svg_path });
    announce(s, &resolved);
    if base_path.is_none() && dataset_path.is_none() {
        return Err(Error::InvalidConfig("give --base and/or --dataset".into()));
    }
    let base = base_path.as_deref().map(interop::load_base).transpose()?;
    let instance = match &dataset_path {
        Some(p) => {
            let ds = interop::load_dataset(p)?;
            Some(ds.instances.get(index).cloned().ok_or_else(|| {
                Error::InvalidConfig(format!("index {index} out of range for {} instances", ds.len()))
            })?)
        }
        None => None,
    };
    let title = match (&base, &instance) {
        (Some(b), _) => b.label(),
        (None, Some(i)) => format!("{} #{}", i.provenance.distribution, i.provenance.index),
        _ => String::new(),
    };
    let svg = plot::render_svg(base.as_ref(), instance.as_ref(), &title);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let out = emit(&dir, &svg_path, svg.as_bytes())?;
    record_manifest(&dir, s, resolved, vec![out])?;
    println!("{}", svg_path.display());
    Ok(EXIT_OK)
}

fn inspect_cmd(_ctx: &Context, a: InspectArgs) -> Result<i32> {
    announce("inspect", &json!({ "path": a.path }));
    let bytes = fs::read(&a.path).map_err(|e| Error::io(&a.path, e))?;
    let header = bytes.split(|&b| b == b'\n').next().map(String::from_utf8_lossy).unwrap_or_default();
    let origin = a.path.display().to_string();
    let kind = header.split_whitespace().next().unwrap_or("");
    let summary = match kind {
        "basenode-pool" => {
            let b: subsample::BaseNodeDistribution = interop::decode(interop::FileKind::Pool, &bytes, &origin)?;
            b.validate()?;
            json!({ "kind": "pool", "label": b.label(), "base_id": b.base_id, "n_base": b.n_base,
                    "problem": b.problem(), "capacity": b.capacity, "spec": b.spec, "meta": b.meta })
        }
        "basenode-dataset" => {
            let d: Dataset = interop::decode(interop::FileKind::Dataset, &bytes, &origin)?;
            json!({ "kind": "dataset", "label": d.label(), "role": d.role, "base_id": d.base_id, "n": d.n,
                    "length": d.len(), "seed": d.sample_seed, "epoch": d.epoch, "labeled": d.labels.is_some() })
        }
        "basenode-instance" => {
            let i: Instance = interop::decode(interop::FileKind::Instance, &bytes, &origin)?;
            json!({ "kind": "instance", "problem": i.problem, "size": i.size(), "capacity": i.capacity,
                    "provenance": i.provenance })
        }
        "basenode-registry" => {
            let r: subsample::SeedRegistry = interop::decode(interop::FileKind::Registry, &bytes, &origin)?;
            json!({ "kind": "registry", "test": r.test, "train": r.train })
        }
        _ => return Err(Error::InvalidSpec(format!("{origin}: not a basenode file"))),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    println!("checksum ok");
    Ok(EXIT_OK)
}
