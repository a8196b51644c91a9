//! Time-budgeted benchmark harness.
//!
//! Every `(dataset, contender, budget, instance, repeat)` cell runs once with
//! its own per-instance budget. Gaps are taken against a designated reference
//! contender at the same budget tier (or at the largest tier), and aggregated
//! into one block per tier with datasets as rows and contenders as columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interop::{self, ExternalConfig, ExternalSolver};
use crate::model::{check_feasible, evaluate, Instance, Problem, Solution};
use crate::seed::{self, tag};
use crate::solve::{solve, Algorithm, SolverConfig, StopReason};
use crate::subsample::Dataset;

/// Budget used when replaying with an iteration cap; the cap is what stops the run.
pub const REPLAY_BUDGET_SECONDS: f64 = 1.0e6;

/// Gaps are rounded to `1 / GAP_STEPS` percentage points, which absorbs the
/// last-bit noise of the division (so `gap(1.1 * z, z)` is exactly `10.0`).
pub const GAP_STEPS: f64 = 1e12;

/// Percentage gap `100 (z - z_ref) / z_ref`. Negative values mean `z` beat the reference.
pub fn gap(z: f64, z_ref: f64) -> Result<f64> {
    if !(z_ref > 0.0) {
        return Err(Error::NonpositiveReference(z_ref));
    }
    let raw = 100.0 * (z - z_ref) / z_ref;
    Ok((raw * GAP_STEPS).round() / GAP_STEPS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContenderKind {
    Builtin { config: SolverConfig },
    External { solver: ExternalSolver },
}

/// A named solver column. The budget inside a builtin config is replaced by
/// each tier's budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contender {
    pub name: String,
    #[serde(flatten)]
    pub kind: ContenderKind,
}

impl Contender {
    pub fn builtin(name: impl Into<String>, algorithm: Algorithm, seed: u64) -> Self {
        Contender {
            name: name.into(),
            kind: ContenderKind::Builtin { config: SolverConfig::new(algorithm, 1.0, seed) },
        }
    }

    pub fn external(name: impl Into<String>, solver: ExternalSolver) -> Self {
        Contender { name: name.into(), kind: ContenderKind::External { solver } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// The reference's cost at the same budget tier.
    #[default]
    PerTier,
    /// The reference's cost at the largest budget tier, for all tiers.
    Largest,
}

#[derive(Debug, Clone)]
pub struct BenchmarkPlan {
    pub contenders: Vec<Contender>,
    pub budgets: Vec<f64>,
    pub reference: String,
    pub reference_mode: ReferenceMode,
    pub repeats: u32,
    pub jobs: usize,
    /// Timed mode pins one worker per core and refuses to oversubscribe.
    pub timed: bool,
    pub external: ExternalConfig,
}

impl BenchmarkPlan {
    pub fn new(contenders: Vec<Contender>, budgets: Vec<f64>, reference: impl Into<String>) -> Self {
        BenchmarkPlan {
            contenders,
            budgets,
            reference: reference.into(),
            reference_mode: ReferenceMode::PerTier,
            repeats: 1,
            jobs: 1,
            timed: true,
            external: ExternalConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.contenders.is_empty() {
            return Err(Error::InvalidConfig("no solvers given".into()));
        }
        if self.budgets.is_empty() || self.budgets.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::InvalidConfig("budgets must be a non-empty list of positive seconds".into()));
        }
        let mut names: Vec<&str> = self.contenders.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("solver names must be unique".into()));
        }
        if !names.contains(&self.reference.as_str()) {
            return Err(Error::InvalidConfig(format!("reference `{}` is not among the solvers", self.reference)));
        }
        if self.repeats == 0 || self.jobs == 0 {
            return Err(Error::InvalidConfig("repeats and jobs must be positive".into()));
        }
        for c in &self.contenders {
            if let ContenderKind::Builtin { config } = &c.kind {
                let mut probe = config.clone();
                probe.budget_seconds = 1.0;
                probe.validate()?;
            }
        }
        if self.timed {
            let cores = available_cores();
            if self.jobs > cores {
                return Err(Error::InvalidConfig(format!(
                    "{} workers would oversubscribe {cores} cores in timed mode",
                    self.jobs
                )));
            }
        }
        Ok(())
    }
}

/// Number of cores a timed run may occupy.
pub fn available_cores() -> usize {
    core_affinity::get_core_ids()
        .map(|ids| ids.len())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub label: String,
    pub base_id: String,
    pub problem: Problem,
    pub n: usize,
    pub length: usize,
    pub sample_seed: u64,
}

impl DatasetRef {
    pub fn of(ds: &Dataset) -> Self {
        DatasetRef {
            label: ds.label(),
            base_id: ds.base_id.clone(),
            problem: ds.problem(),
            n: ds.n,
            length: ds.len(),
            sample_seed: ds.sample_seed,
        }
    }
}

/// One executed cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub instance: usize,
    pub solver: String,
    pub budget: f64,
    pub repeat: u32,
    /// Solver seed actually used (differs from the configured one for repeats > 0).
    pub seed: u64,
    /// Cost re-evaluated from the returned solution; `None` if the cell failed.
    pub cost: Option<f64>,
    pub wall_time: f64,
    pub iterations: u64,
    pub stopped_by: Option<StopReason>,
    pub error: Option<String>,
    pub gap: Option<f64>,
    /// Gap against the best cost any contender found on this instance.
    pub gap_to_best: Option<f64>,
}

/// Aggregate of one `(dataset, solver, budget)` cell group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub dataset: String,
    pub solver: String,
    pub budget: f64,
    pub mean_gap: Option<f64>,
    /// Sample standard deviation of the per-repeat mean gaps; needs two repeats.
    pub stddev_gap: Option<f64>,
    pub mean_gap_to_best: Option<f64>,
    pub mean_cost: Option<f64>,
    pub mean_time: Option<f64>,
    pub completed: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub datasets: Vec<DatasetRef>,
    pub solvers: Vec<String>,
    pub budgets: Vec<f64>,
    pub reference: String,
    pub reference_mode: ReferenceMode,
    pub repeats: u32,
    pub contenders: Vec<Contender>,
    pub records: Vec<RunRecord>,
    pub cells: Vec<CellSummary>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl BenchmarkReport {
    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(|r| r.cost.is_none())
    }

    pub fn is_complete(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn cell(&self, dataset: &str, solver: &str, budget: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.dataset == dataset && c.solver == solver && c.budget == budget)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

struct Job {
    dataset: usize,
    instance: usize,
    contender: usize,
    budget: f64,
    repeat: u32,
    seed: u64,
    cap: Option<u64>,
}

struct Outcome {
    cost: Option<f64>,
    wall_time: f64,
    iterations: u64,
    stopped_by: Option<StopReason>,
    error: Option<String>,
}

fn repeat_seed(seed: u64, repeat: u32) -> u64 {
    if repeat == 0 {
        seed
    } else {
        seed::derive(seed, tag::REPEAT, &[u64::from(repeat)])
    }
}

fn checked_cost(instance: &Instance, sol: &Solution) -> std::result::Result<f64, String> {
    let violations = check_feasible(instance, sol).map_err(|e| e.to_string())?;
    if let Some(v) = violations.first() {
        return Err(format!("infeasible solution: {v}"));
    }
    evaluate(instance, sol).map_err(|e| e.to_string())
}

fn run_job(instance: &Instance, contender: &Contender, job: &Job, external: &ExternalConfig) -> Outcome {
    let started = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(|| match &contender.kind {
        ContenderKind::Builtin { config } => {
            let mut config = config.clone();
            config.seed = job.seed;
            config.budget_seconds = job.budget;
            if let Some(cap) = job.cap {
                config.budget_seconds = REPLAY_BUDGET_SECONDS;
                config.max_iterations = Some(cap);
            }
            solve(instance, &config).map(|t| (t.best, t.iterations, Some(t.stopped_by)))
        }
        ContenderKind::External { solver } => {
            interop::run_external(*solver, instance, job.budget, external).map(|s| (s, 0, None))
        }
    }));
    let wall_time = started.elapsed().as_secs_f64();
    let failed = |error: String| Outcome { cost: None, wall_time, iterations: 0, stopped_by: None, error: Some(error) };
    match result {
        Ok(Ok((best, iterations, stopped_by))) => match checked_cost(instance, &best) {
            Ok(cost) => Outcome { cost: Some(cost), wall_time, iterations, stopped_by, error: None },
            Err(e) => failed(e),
        },
        Ok(Err(e)) => failed(e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| (*s).to_string()))
                .unwrap_or_else(|| "solver panicked".into());
            failed(format!("panic: {msg}"))
        }
    }
}

fn execute(
    datasets: &[Dataset],
    contenders: &[Contender],
    jobs: &[Job],
    workers: usize,
    pin: bool,
    external: &ExternalConfig,
) -> Vec<Outcome> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Outcome>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let cores = if pin { core_affinity::get_core_ids().unwrap_or_default() } else { Vec::new() };
    std::thread::scope(|scope| {
        for w in 0..workers.min(jobs.len()).max(1) {
            let (next, slots, cores) = (&next, &slots, &cores);
            scope.spawn(move || {
                if let Some(core) = cores.get(w) {
                    core_affinity::set_for_current(*core);
                }
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(job) = jobs.get(i) else { break };
                    let instance = &datasets[job.dataset].instances[job.instance];
                    let outcome = run_job(instance, &contenders[job.contender], job, external);
                    slots.lock().expect("result slots poisoned")[i] = Some(outcome);
                }
            });
        }
    });
    slots.into_inner().expect("result slots poisoned").into_iter().map(|o| o.expect("every job ran")).collect()
}

/// Runs every cell of `plan` over `datasets` and assembles the report.
/// Failed cells are kept as records without a cost and never count as zero gaps.
pub fn run_benchmark(datasets: &[Dataset], plan: &BenchmarkPlan) -> Result<BenchmarkReport> {
    plan.validate()?;
    let mut jobs = Vec::new();
    for (d, ds) in datasets.iter().enumerate() {
        for &budget in &plan.budgets {
            for (c, contender) in plan.contenders.iter().enumerate() {
                let base_seed = match &contender.kind {
                    ContenderKind::Builtin { config } => config.seed,
                    ContenderKind::External { .. } => 0,
                };
                for repeat in 0..plan.repeats {
                    for instance in 0..ds.len() {
                        jobs.push(Job {
                            dataset: d,
                            instance,
                            contender: c,
                            budget,
                            repeat,
                            seed: repeat_seed(base_seed, repeat),
                            cap: None,
                        });
                    }
                }
            }
        }
    }
    let outcomes = execute(datasets, &plan.contenders, &jobs, plan.jobs, plan.timed, &plan.external);
    let mut report = BenchmarkReport {
        datasets: datasets.iter().map(DatasetRef::of).collect(),
        solvers: plan.contenders.iter().map(|c| c.name.clone()).collect(),
        budgets: plan.budgets.clone(),
        reference: plan.reference.clone(),
        reference_mode: plan.reference_mode,
        repeats: plan.repeats,
        contenders: plan.contenders.clone(),
        records: Vec::new(),
        cells: Vec::new(),
        metadata: BTreeMap::new(),
    };
    if plan.contenders.iter().any(|c| matches!(c.kind, ContenderKind::External { .. })) {
        report
            .metadata
            .insert("external_parameters".into(), "solver defaults plus the per-instance time limit".into());
    }
    report.records = jobs
        .iter()
        .zip(outcomes)
        .map(|(job, out)| RunRecord {
            dataset: report.datasets[job.dataset].label.clone(),
            instance: job.instance,
            solver: plan.contenders[job.contender].name.clone(),
            budget: job.budget,
            repeat: job.repeat,
            seed: job.seed,
            cost: out.cost,
            wall_time: out.wall_time,
            iterations: out.iterations,
            stopped_by: out.stopped_by,
            error: out.error,
            gap: None,
            gap_to_best: None,
        })
        .collect();
    assign_gaps(&mut report);
    report.cells = aggregate(&report.records, &report.datasets, &report.solvers, &report.budgets);
    Ok(report)
}

/// Re-runs every builtin record with its recorded iteration count as a cap.
/// The resulting report carries the same costs and gaps as `report`.
pub fn replay(datasets: &[Dataset], report: &BenchmarkReport, workers: usize) -> Result<BenchmarkReport> {
    let labels: Vec<String> = datasets.iter().map(Dataset::label).collect();
    let mut jobs = Vec::new();
    let mut keep = Vec::new();
    for (i, rec) in report.records.iter().enumerate() {
        let contender = report
            .contenders
            .iter()
            .position(|c| c.name == rec.solver)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown solver `{}` in report", rec.solver)))?;
        let dataset = labels
            .iter()
            .position(|l| *l == rec.dataset)
            .ok_or_else(|| Error::InvalidConfig(format!("dataset `{}` not supplied for replay", rec.dataset)))?;
        if rec.cost.is_none() || matches!(report.contenders[contender].kind, ContenderKind::External { .. }) {
            keep.push(i);
            continue;
        }
        jobs.push((
            i,
            Job {
                dataset,
                instance: rec.instance,
                contender,
                budget: rec.budget,
                repeat: rec.repeat,
                seed: rec.seed,
                cap: Some(rec.iterations),
            },
        ));
    }
    let (indices, jobs): (Vec<usize>, Vec<Job>) = jobs.into_iter().unzip();
    let outcomes = execute(datasets, &report.contenders, &jobs, workers, false, &ExternalConfig::default());
    let mut out = report.clone();
    for (i, o) in indices.into_iter().zip(outcomes) {
        let rec = &mut out.records[i];
        rec.cost = o.cost;
        rec.wall_time = o.wall_time;
        rec.iterations = o.iterations;
        rec.stopped_by = o.stopped_by;
        rec.error = o.error;
    }
    debug_assert!(keep.iter().all(|&i| out.records[i] == report.records[i]));
    assign_gaps(&mut out);
    out.cells = aggregate(&out.records, &out.datasets, &out.solvers, &out.budgets);
    Ok(out)
}

fn assign_gaps(report: &mut BenchmarkReport) {
    let top = report.budgets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let key = |r: &RunRecord| (r.dataset.clone(), r.instance, r.repeat);
    let mut reference: BTreeMap<(String, usize, u32, u64), f64> = BTreeMap::new();
    let mut best: BTreeMap<(String, usize, u32), f64> = BTreeMap::new();
    for r in &report.records {
        let Some(cost) = r.cost else { continue };
        if r.solver == report.reference {
            reference.insert((r.dataset.clone(), r.instance, r.repeat, r.budget.to_bits()), cost);
        }
        let entry = best.entry(key(r)).or_insert(cost);
        *entry = entry.min(cost);
    }
    for r in &mut report.records {
        let tier = match report.reference_mode {
            ReferenceMode::PerTier => r.budget,
            ReferenceMode::Largest => top,
        };
        let z_ref = reference.get(&(r.dataset.clone(), r.instance, r.repeat, tier.to_bits()));
        r.gap = match (r.cost, z_ref) {
            (Some(z), Some(&z_ref)) => gap(z, z_ref).ok(),
            _ => None,
        };
        r.gap_to_best = match (r.cost, best.get(&(r.dataset.clone(), r.instance, r.repeat))) {
            (Some(z), Some(&b)) => gap(z, b).ok(),
            _ => None,
        };
    }
}

/// Order-independent mean: values are sorted before summation.
fn mean(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Groups records into `(dataset, solver, budget)` summaries in the order
/// given by the three key lists.
pub fn aggregate(records: &[RunRecord], datasets: &[DatasetRef], solvers: &[String], budgets: &[f64]) -> Vec<CellSummary> {
    let mut cells = Vec::new();
    for ds in datasets {
        for &budget in budgets {
            for solver in solvers {
                let group: Vec<&RunRecord> = records
                    .iter()
                    .filter(|r| r.dataset == ds.label && r.solver == *solver && r.budget == budget)
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let mut gaps: Vec<f64> = group.iter().filter_map(|r| r.gap).collect();
                let mut to_best: Vec<f64> = group.iter().filter_map(|r| r.gap_to_best).collect();
                let mut costs: Vec<f64> = group.iter().filter_map(|r| r.cost).collect();
                let mut times: Vec<f64> = group.iter().filter(|r| r.cost.is_some()).map(|r| r.wall_time).collect();
                let mut by_repeat: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
                for r in &group {
                    if let Some(g) = r.gap {
                        by_repeat.entry(r.repeat).or_default().push(g);
                    }
                }
                let repeat_means: Vec<f64> = by_repeat.into_values().filter_map(|mut v| mean(&mut v)).collect();
                let stddev_gap = (repeat_means.len() >= 2).then(|| {
                    let mut m = repeat_means.clone();
                    let mu = mean(&mut m).unwrap_or(0.0);
                    let var = repeat_means.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>()
                        / (repeat_means.len() - 1) as f64;
                    var.sqrt()
                });
                let completed = costs.len();
                cells.push(CellSummary {
                    dataset: ds.label.clone(),
                    solver: solver.clone(),
                    budget,
                    mean_gap: mean(&mut gaps),
                    stddev_gap,
                    mean_gap_to_best: mean(&mut to_best),
                    mean_cost: mean(&mut costs),
                    mean_time: mean(&mut times),
                    completed,
                    missing: group.len() - completed,
                });
            }
        }
    }
    cells
}

/// Flat per-cell row used for CSV export and re-ingest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub dataset: String,
    pub instance: usize,
    pub solver: String,
    pub budget: f64,
    pub repeat: u32,
    pub seed: u64,
    pub cost: Option<f64>,
    pub gap: Option<f64>,
    pub gap_to_best: Option<f64>,
    pub wall_time: f64,
    pub iterations: u64,
    pub status: String,
}

impl From<&RunRecord> for RecordRow {
    fn from(r: &RunRecord) -> Self {
        RecordRow {
            dataset: r.dataset.clone(),
            instance: r.instance,
            solver: r.solver.clone(),
            budget: r.budget,
            repeat: r.repeat,
            seed: r.seed,
            cost: r.cost,
            gap: r.gap,
            gap_to_best: r.gap_to_best,
            wall_time: r.wall_time,
            iterations: r.iterations,
            status: r.error.clone().unwrap_or_else(|| "ok".into()),
        }
    }
}

impl From<RecordRow> for RunRecord {
    fn from(r: RecordRow) -> Self {
        let failed = r.cost.is_none();
        RunRecord {
            dataset: r.dataset,
            instance: r.instance,
            solver: r.solver,
            budget: r.budget,
            repeat: r.repeat,
            seed: r.seed,
            cost: r.cost,
            wall_time: r.wall_time,
            iterations: r.iterations,
            stopped_by: None,
            error: failed.then_some(r.status),
            gap: r.gap,
            gap_to_best: r.gap_to_best,
        }
    }
}

fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One CSV row per executed cell.
pub fn records_csv(report: &BenchmarkReport) -> Result<String> {
    write_csv(report.records.iter().map(RecordRow::from))
}

/// Cost-only projection of [`records_csv`]: identical across replays.
pub fn replay_csv(report: &BenchmarkReport) -> Result<String> {
    #[derive(Serialize)]
    struct Row<'a> {
        dataset: &'a str,
        instance: usize,
        solver: &'a str,
        budget: f64,
        repeat: u32,
        cost: Option<f64>,
        gap: Option<f64>,
        iterations: u64,
    }
    write_csv(report.records.iter().map(|r| Row {
        dataset: &r.dataset,
        instance: r.instance,
        solver: &r.solver,
        budget: r.budget,
        repeat: r.repeat,
        cost: r.cost,
        gap: r.gap,
        iterations: r.iterations,
    }))
}

pub fn read_records_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize::<RecordRow>().map(|row| Ok(row?.into())).collect()
}

/// Summary rows in CSV form.
pub fn summary_csv(cells: &[CellSummary]) -> Result<String> {
    write_csv(cells)
}

pub fn read_summary_csv(text: &str) -> Result<Vec<CellSummary>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize::<CellSummary>().map(|row| Ok(row?)).collect()
}

pub const MISSING: &str = "—";
pub const OUTPERFORMS_NOTE: &str = "* negative gap: outperforms reference";

fn format_budget(b: f64) -> String {
    format!("{b}")
}

/// Aligned text table: one block per budget tier, datasets as rows, one gap
/// column per solver. Negative gaps carry a `*` marker explained in a footnote.
pub fn render_table(report: &BenchmarkReport) -> String {
    let mut header = vec!["Dataset".to_string()];
    header.extend(report.solvers.iter().map(|s| {
        if *s == report.reference {
            format!("{s} (ref)")
        } else {
            s.clone()
        }
    }));
    let mut blocks: Vec<(String, Vec<Vec<String>>)> = Vec::new();
    let mut any_negative = false;
    for &budget in &report.budgets {
        let mut rows = Vec::new();
        for ds in &report.datasets {
            let mut row = vec![ds.label.clone()];
            for solver in &report.solvers {
                let text = match report.cell(&ds.label, solver, budget).and_then(|c| c.mean_gap.map(|g| (g, c))) {
                    Some((g, cell)) => {
                        let mut t = format!("{g:.3}");
                        if g < 0.0 {
                            t.push('*');
                            any_negative = true;
                        }
                        if cell.missing > 0 {
                            t.push_str(&format!(" ({} missing)", cell.missing));
                        }
                        if let Some(sd) = cell.stddev_gap {
                            t = format!("{g:.3} ± {sd:.3}{}", if g < 0.0 { "*" } else { "" });
                        }
                        t
                    }
                    None => MISSING.to_string(),
                };
                row.push(text);
            }
            rows.push(row);
        }
        blocks.push((format!("T_MAX = {} s", format_budget(budget)), rows));
    }

    let columns = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for (_, rows) in &blocks {
        for row in rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
    }
    let line = |cells: &[String]| -> String {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            let pad = w - c.chars().count();
            if i == 0 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(" | ");
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        s.trim_end().to_string()
    };
    let total: usize = widths.iter().sum::<usize>() + 3 * (columns - 1);

    let mut out = String::new();
    let _ = writeln!(out, "Gap (%) vs {} [{}]", report.reference, match report.reference_mode {
        ReferenceMode::PerTier => "reference at same budget",
        ReferenceMode::Largest => "reference at largest budget",
    });
    let _ = writeln!(out, "{}", line(&header));
    let _ = writeln!(out, "{}", "=".repeat(total));
    for (title, rows) in &blocks {
        let _ = writeln!(out, "{title}");
        for row in rows {
            let _ = writeln!(out, "{}", line(row));
        }
        let _ = writeln!(out, "{}", "-".repeat(total));
    }
    if any_negative {
        let _ = writeln!(out, "{OUTPERFORMS_NOTE}");
    }
    out
}

/// Text table plus summary CSV.
pub fn summarize(report: &BenchmarkReport) -> Result<(String, String)> {
    Ok((render_table(report), summary_csv(&report.cells)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_examples() {
        assert_eq!(gap(3.7, 3.7).unwrap(), 0.0);
        assert_eq!(gap(1.1 * 2.0, 2.0).unwrap(), 10.0);
        assert_eq!(gap(0.9578, 1.0).unwrap(), -4.22);
        assert!(matches!(gap(1.0, 0.0), Err(Error::NonpositiveReference(_))));
        assert!(matches!(gap(1.0, -2.0), Err(Error::NonpositiveReference(_))));
    }

    fn record(dataset: &str, instance: usize, solver: &str, budget: f64, cost: Option<f64>) -> RunRecord {
        RunRecord {
            dataset: dataset.into(),
            instance,
            solver: solver.into(),
            budget,
            repeat: 0,
            seed: 0,
            cost,
            wall_time: 0.01,
            iterations: 10,
            stopped_by: Some(StopReason::Budget),
            error: cost.is_none().then(|| "boom".to_string()),
            gap: None,
            gap_to_best: None,
        }
    }

    fn report(records: Vec<RunRecord>) -> BenchmarkReport {
        let mut r = BenchmarkReport {
            datasets: vec![DatasetRef {
                label: "G_200^X (tsp)".into(),
                base_id: "b".into(),
                problem: Problem::Tsp,
                n: 5,
                length: 3,
                sample_seed: 0,
            }],
            solvers: vec!["a".into(), "b".into()],
            budgets: vec![0.1, 1.0],
            reference: "a".into(),
            reference_mode: ReferenceMode::PerTier,
            repeats: 1,
            contenders: Vec::new(),
            records,
            cells: Vec::new(),
            metadata: BTreeMap::new(),
        };
        assign_gaps(&mut r);
        r.cells = aggregate(&r.records, &r.datasets, &r.solvers, &r.budgets);
        r
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = report(Vec::new());
        let table = render_table(&r);
        assert!(table.contains("Dataset"));
        assert!(r.cells.is_empty());
        assert_eq!(summary_csv(&r.cells).unwrap(), "");
    }

    #[test]
    fn one_cell_one_row() {
        let r = report(vec![record("G_200^X (tsp)", 0, "a", 0.1, Some(2.0))]);
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].mean_gap, Some(0.0));
        let csv = summary_csv(&r.cells).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn missing_cells_and_negative_flags() {
        let label = "G_200^X (tsp)";
        let r = report(vec![
            record(label, 0, "a", 0.1, Some(2.0)),
            record(label, 0, "b", 0.1, Some(1.9)),
            record(label, 1, "a", 0.1, Some(2.0)),
            record(label, 1, "b", 0.1, None),
            record(label, 0, "a", 1.0, None),
            record(label, 0, "b", 1.0, Some(1.5)),
        ]);
        let b = r.cell(label, "b", 0.1).unwrap();
        assert_eq!(b.completed, 1);
        assert_eq!(b.missing, 1);
        assert!((b.mean_gap.unwrap() + 5.0).abs() < 1e-12);
        assert_eq!(r.cell(label, "b", 1.0).unwrap().mean_gap, None);
        let table = render_table(&r);
        assert!(table.contains("-5.000*"));
        assert!(table.contains(OUTPERFORMS_NOTE));
        assert!(table.contains(MISSING));
        assert!(!r.is_complete());
    }

    #[test]
    fn largest_mode_uses_top_tier() {
        let label = "G_200^X (tsp)";
        let mut r = report(vec![
            record(label, 0, "a", 0.1, Some(2.0)),
            record(label, 0, "a", 1.0, Some(1.6)),
            record(label, 0, "b", 0.1, Some(2.0)),
        ]);
        r.reference_mode = ReferenceMode::Largest;
        assign_gaps(&mut r);
        let b = r.records.iter().find(|x| x.solver == "b").unwrap();
        assert!((b.gap.unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_preserves_aggregates() {
        let label = "G_200^X (tsp)";
        let r = report(vec![
            record(label, 0, "a", 0.1, Some(2.0 / 3.0)),
            record(label, 0, "b", 0.1, Some(0.7)),
            record(label, 1, "a", 0.1, Some(1.0 / 7.0)),
            record(label, 1, "b", 0.1, None),
        ]);
        let back = read_records_csv(&records_csv(&r).unwrap()).unwrap();
        assert_eq!(aggregate(&back, &r.datasets, &r.solvers, &r.budgets), r.cells);
        assert_eq!(read_summary_csv(&summary_csv(&r.cells).unwrap()).unwrap(), r.cells);
    }

    #[test]
    fn aggregation_ignores_instance_order() {
        let label = "G_200^X (tsp)";
        let mut records: Vec<RunRecord> = (0..20)
            .flat_map(|i| {
                [
                    record(label, i, "a", 0.1, Some(1.0 + i as f64 * 0.013)),
                    record(label, i, "b", 0.1, Some(1.0 + (i * i) as f64 * 0.0071)),
                ]
            })
            .collect();
        let forward = report(records.clone());
        records.reverse();
        let backward = report(records);
        assert_eq!(forward.cells, backward.cells);
    }
}
