//! Anytime heuristics and exact oracles for TSP and CVRP.
//!
//! Every heuristic run is driven by a [`Budget`]: a wall-clock limit checked
//! at iteration granularity plus an optional iteration cap. The sequence of
//! iterations depends only on `(instance, config)`, so a run stopped by the
//! clock after `k` iterations is replayed exactly by setting
//! `max_iterations = k`.

mod anneal;
mod construct;
mod cvrp;
mod exact;
mod tsp;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_feasible, DistanceMatrix, Instance, Problem, Solution};

pub use anneal::simulated_annealing;
pub use construct::{construct_nearest_neighbor, construct_savings, nearest_neighbor_from};
pub use exact::{exact_cvrp, exact_tsp, EXACT_CVRP_LIMIT, EXACT_TSP_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NearestNeighbor,
    Savings,
    TwoOpt,
    OrOpt,
    CvrpLocalSearch,
    SimulatedAnnealing,
    ExactOracle,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::NearestNeighbor => "nearest_neighbor",
            Algorithm::Savings => "savings",
            Algorithm::TwoOpt => "two_opt",
            Algorithm::OrOpt => "or_opt",
            Algorithm::CvrpLocalSearch => "cvrp_local_search",
            Algorithm::SimulatedAnnealing => "simulated_annealing",
            Algorithm::ExactOracle => "exact_oracle",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "nearest_neighbor" | "nn" => Algorithm::NearestNeighbor,
            "savings" | "cw" => Algorithm::Savings,
            "two_opt" | "2opt" => Algorithm::TwoOpt,
            "or_opt" | "oropt" => Algorithm::OrOpt,
            "cvrp_local_search" | "cvrp-ls" => Algorithm::CvrpLocalSearch,
            "simulated_annealing" | "sa" => Algorithm::SimulatedAnnealing,
            "exact_oracle" | "exact" => Algorithm::ExactOracle,
            other => return Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        })
    }
}

/// Search parameters. `start_temperature = None` calibrates from the first
/// 100 sampled moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_temperature: Option<f64>,
    /// Acceptance probability of the median calibration move.
    pub calibration_acceptance: f64,
    pub cooling_rate: f64,
    /// Accepted moves per cooling step.
    pub cooling_batch: u32,
    /// Proposals without a new best before restarting from the best.
    pub stagnation_limit: u64,
    pub neighbors: usize,
    pub two_opt: bool,
    pub or_opt: bool,
    pub relocate: bool,
    pub swap: bool,
    pub two_opt_star: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            start_temperature: None,
            calibration_acceptance: 0.8,
            cooling_rate: 0.999,
            cooling_batch: 64,
            stagnation_limit: 10_000,
            neighbors: 10,
            two_opt: true,
            or_opt: true,
            relocate: true,
            swap: true,
            two_opt_star: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub budget_seconds: f64,
    pub seed: u64,
    #[serde(default)]
    pub params: SolverParams,
    /// Replay cap; when set the run stops after exactly this many iterations
    /// (or earlier on convergence).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<u64>,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, budget_seconds: f64, seed: u64) -> Self {
        SolverConfig { algorithm, budget_seconds, seed, params: SolverParams::default(), max_iterations: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget_seconds > 0.0) {
            return Err(Error::InvalidConfig(format!("budget must be positive, got {}", self.budget_seconds)));
        }
        let p = &self.params;
        if !(p.cooling_rate > 0.0 && p.cooling_rate <= 1.0) {
            return Err(Error::InvalidConfig("cooling_rate must lie in (0, 1]".into()));
        }
        if !(p.calibration_acceptance > 0.0 && p.calibration_acceptance < 1.0) {
            return Err(Error::InvalidConfig("calibration_acceptance must lie in (0, 1)".into()));
        }
        if p.start_temperature.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::InvalidConfig("start_temperature must be non-negative".into()));
        }
        if p.cooling_batch == 0 || p.neighbors == 0 {
            return Err(Error::InvalidConfig("cooling_batch and neighbors must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: u64,
    pub elapsed: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    Budget,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub best: Solution,
    /// Best-so-far curve; non-increasing in cost.
    pub curve: Vec<CurvePoint>,
    pub iterations: u64,
    pub wall_time: f64,
    pub seed: u64,
    pub stopped_by: StopReason,
}

impl SolveTrace {
    /// `(iteration, cost)` pairs; identical across replays of the same config.
    pub fn iteration_curve(&self) -> Vec<(u64, f64)> {
        self.curve.iter().map(|p| (p.iteration, p.cost)).collect()
    }

    /// Best cost reached within `seconds` of the start, if any.
    pub fn cost_at(&self, seconds: f64) -> Option<f64> {
        self.curve.iter().take_while(|p| p.elapsed <= seconds).last().map(|p| p.cost)
    }
}

/// Iteration-granular stopping rule.
pub(crate) struct Budget {
    start: Instant,
    limit: Duration,
    cap: Option<u64>,
    iterations: u64,
    stride: u64,
    stop: Option<StopReason>,
}

impl Budget {
    pub(crate) fn new(config: &SolverConfig) -> Self {
        let limit = Duration::try_from_secs_f64(config.budget_seconds).unwrap_or(Duration::MAX);
        Budget {
            start: Instant::now(),
            limit,
            cap: config.max_iterations,
            iterations: 0,
            stride: 1,
            stop: None,
        }
    }

    /// Clock checks happen every `stride` iterations.
    pub(crate) fn set_stride(&mut self, stride: u64) {
        self.stride = stride.max(1);
    }

    /// Claims one iteration; `false` once the budget or cap is exhausted.
    pub(crate) fn next(&mut self) -> bool {
        if self.stop.is_some() {
            return false;
        }
        if self.cap.is_some_and(|c| self.iterations >= c) {
            self.stop = Some(StopReason::IterationCap);
            return false;
        }
        if self.iterations % self.stride == 0 && self.start.elapsed() >= self.limit {
            self.stop = Some(StopReason::Budget);
            return false;
        }
        self.iterations += 1;
        true
    }

    pub(crate) fn iterations(&self) -> u64 {
        self.iterations
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub(crate) fn stop_reason(&self) -> StopReason {
        self.stop.unwrap_or(StopReason::Converged)
    }
}

/// Best-so-far bookkeeping shared by all heuristics.
pub(crate) struct Recorder {
    best: Solution,
    curve: Vec<CurvePoint>,
}

impl Recorder {
    pub(crate) fn new(initial: Solution, budget: &Budget) -> Self {
        let point = CurvePoint { iteration: budget.iterations(), elapsed: budget.elapsed(), cost: initial.cost() };
        Recorder { best: initial, curve: vec![point] }
    }

    pub(crate) fn best_cost(&self) -> f64 {
        self.best.cost()
    }

    pub(crate) fn best(&self) -> &Solution {
        &self.best
    }

    /// Records `candidate` if strictly better than the current best.
    pub(crate) fn offer(&mut self, candidate: Solution, budget: &Budget) -> bool {
        if candidate.cost() < self.best.cost() {
            self.curve.push(CurvePoint {
                iteration: budget.iterations(),
                elapsed: budget.elapsed(),
                cost: candidate.cost(),
            });
            self.best = candidate;
            true
        } else {
            false
        }
    }

    pub(crate) fn finish(self, budget: &Budget, seed: u64) -> SolveTrace {
        SolveTrace {
            best: self.best,
            curve: self.curve,
            iterations: budget.iterations(),
            wall_time: budget.elapsed(),
            seed,
            stopped_by: budget.stop_reason(),
        }
    }
}

/// Precomputed distances and neighbor lists for one instance.
pub(crate) struct Context<'a> {
    pub instance: &'a Instance,
    pub dm: DistanceMatrix,
    pub neighbors: Vec<Vec<usize>>,
}

impl<'a> Context<'a> {
    pub(crate) fn new(instance: &'a Instance, k: usize) -> Self {
        let dm = DistanceMatrix::new(instance);
        let neighbors = dm.neighbor_lists(k, instance.customers());
        Context { instance, dm, neighbors }
    }
}

fn ensure_feasible(instance: &Instance, start: &Solution) -> Result<()> {
    let v = check_feasible(instance, start).map_err(|e| Error::InfeasibleStart(e.to_string()))?;
    if !v.is_empty() {
        return Err(Error::InfeasibleStart(
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        ));
    }
    Ok(())
}

/// First-improvement descent from `start` with k-nearest candidate pruning.
/// TSP uses 2-opt and Or-opt, CVRP relocate, swap, 2-opt* and intra-route
/// 2-opt, each gated by `config.params`.
pub fn local_search(instance: &Instance, start: &Solution, config: &SolverConfig) -> Result<SolveTrace> {
    config.validate()?;
    ensure_feasible(instance, start)?;
    let mut budget = Budget::new(config);
    let ctx = Context::new(instance, config.params.neighbors);
    let mut rec = Recorder::new(start.clone(), &budget);
    descend(&ctx, start, &config.params, &mut budget, &mut rec);
    Ok(rec.finish(&budget, config.seed))
}

pub(crate) fn descend(
    ctx: &Context<'_>,
    start: &Solution,
    params: &SolverParams,
    budget: &mut Budget,
    rec: &mut Recorder,
) -> Solution {
    match start {
        Solution::Tsp { tour, .. } => {
            let mut state = tsp::TourState::new(ctx, tour.clone());
            state.descend(params, budget, rec);
            state.to_solution()
        }
        Solution::Cvrp { .. } => {
            let mut state = cvrp::RouteState::new(ctx, &start.customer_routes());
            state.descend(params, budget, rec);
            state.to_solution()
        }
    }
}

/// Runs `config.algorithm` on `instance`.
pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<SolveTrace> {
    config.validate()?;
    let wrong = |expected| Err(Error::WrongProblemClass { expected });
    match (config.algorithm, instance.problem) {
        (Algorithm::NearestNeighbor, Problem::Tsp) => {
            let budget = Budget::new(config);
            let sol = construct_nearest_neighbor(instance, config.seed)?;
            Ok(Recorder::new(sol, &budget).finish(&budget, config.seed))
        }
        (Algorithm::Savings, Problem::Cvrp) => {
            let budget = Budget::new(config);
            let sol = construct_savings(instance)?;
            Ok(Recorder::new(sol, &budget).finish(&budget, config.seed))
        }
        (Algorithm::TwoOpt | Algorithm::OrOpt, Problem::Tsp) => {
            let mut budget = Budget::new(config);
            let start = construct_nearest_neighbor(instance, config.seed)?;
            let mut params = config.params.clone();
            params.or_opt = config.algorithm == Algorithm::OrOpt && params.or_opt;
            let ctx = Context::new(instance, params.neighbors);
            let mut rec = Recorder::new(start.clone(), &budget);
            descend(&ctx, &start, &params, &mut budget, &mut rec);
            Ok(rec.finish(&budget, config.seed))
        }
        (Algorithm::CvrpLocalSearch, Problem::Cvrp) => {
            let mut budget = Budget::new(config);
            let start = construct_savings(instance)?;
            let ctx = Context::new(instance, config.params.neighbors);
            let mut rec = Recorder::new(start.clone(), &budget);
            descend(&ctx, &start, &config.params, &mut budget, &mut rec);
            Ok(rec.finish(&budget, config.seed))
        }
        (Algorithm::SimulatedAnnealing, _) => simulated_annealing(instance, config),
        (Algorithm::ExactOracle, problem) => {
            let budget = Budget::new(config);
            let sol = match problem {
                Problem::Tsp => exact_tsp(instance)?,
                Problem::Cvrp => exact_cvrp(instance)?,
            };
            Ok(Recorder::new(sol, &budget).finish(&budget, config.seed))
        }
        (Algorithm::NearestNeighbor | Algorithm::TwoOpt | Algorithm::OrOpt, _) => wrong(Problem::Tsp),
        (Algorithm::Savings | Algorithm::CvrpLocalSearch, _) => wrong(Problem::Cvrp),
    }
}

pub(crate) const EPS: f64 = 1e-10;
