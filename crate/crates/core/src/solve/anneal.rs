//! Simulated annealing over the same move kernels as the local searches.
//!
//! A run constructs a start (nearest neighbor or savings), descends to a local
//! optimum, then anneals with random neighbor-list moves. The temperature
//! starts so that the median calibration move is accepted with probability
//! `calibration_acceptance`, and cools geometrically every `cooling_batch`
//! accepted moves. After `stagnation_limit` proposals without a new best the
//! state restarts from the best solution found.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::construct::{construct_nearest_neighbor, construct_savings};
use super::cvrp::{RouteMove, RouteState};
use super::tsp::{SegmentMove, TourState};
use super::{descend, Budget, Context, Recorder, SolveTrace, SolverConfig, SolverParams};
use crate::error::Result;
use crate::model::{Instance, Problem, Solution};
use crate::seed::{self, tag};

const CALIBRATION_MOVES: usize = 100;
const CLOCK_STRIDE: u64 = 64;
/// Slack for drift between the incremental and recomputed costs.
const DRIFT: f64 = 1e-9;

enum Move {
    TwoOpt(usize, usize),
    Segment(SegmentMove),
    Route(RouteMove),
}

enum State<'c, 'a> {
    Tour(TourState<'c, 'a>),
    Routes(RouteState<'c, 'a>, Vec<RouteMove>),
}

impl<'c, 'a> State<'c, 'a> {
    fn from_solution(ctx: &'c Context<'a>, sol: &Solution) -> Self {
        match sol {
            Solution::Tsp { tour, .. } => State::Tour(TourState::new(ctx, tour.clone())),
            Solution::Cvrp { .. } => State::Routes(RouteState::new(ctx, &sol.customer_routes()), Vec::new()),
        }
    }

    fn cost(&self) -> f64 {
        match self {
            State::Tour(t) => t.cost,
            State::Routes(r, _) => r.cost,
        }
    }

    fn set_cost(&mut self, cost: f64) {
        match self {
            State::Tour(t) => t.cost = cost,
            State::Routes(r, _) => r.cost = cost,
        }
    }

    fn snapshot(&self) -> Solution {
        match self {
            State::Tour(t) => t.to_solution(),
            State::Routes(r, _) => r.to_solution(),
        }
    }

    /// Draws one random move; `None` when the draw is degenerate or infeasible.
    fn propose(&mut self, ctx: &Context<'_>, params: &SolverParams, rng: &mut ChaCha8Rng) -> Option<(Move, f64)> {
        match self {
            State::Tour(t) => {
                let n = t.len();
                let a = rng.random_range(0..n);
                let nbrs = &ctx.neighbors[a];
                let c = nbrs[rng.random_range(0..nbrs.len())];
                let use_segment = params.or_opt && (!params.two_opt || rng.random_bool(0.5));
                if use_segment {
                    let m = SegmentMove { first: a, len: rng.random_range(1..=3), c, reversed: rng.random_bool(0.5) };
                    t.segment_delta(m).map(|d| (Move::Segment(m), d))
                } else if params.two_opt {
                    if a == c || t.succ(a) == c || t.succ(c) == a {
                        return None;
                    }
                    Some((Move::TwoOpt(a, c), t.two_opt_delta(a, c)))
                } else {
                    None
                }
            }
            State::Routes(r, buf) => {
                let customers = ctx.instance.customers();
                let u = rng.random_range(customers);
                let nbrs = &ctx.neighbors[u];
                let v = nbrs[rng.random_range(0..nbrs.len())];
                buf.clear();
                r.moves_for(u, v, params, buf);
                if buf.is_empty() {
                    return None;
                }
                let m = buf[rng.random_range(0..buf.len())];
                r.delta(m).map(|d| (Move::Route(m), d))
            }
        }
    }

    fn apply(&mut self, m: Move, delta: f64) {
        match (self, m) {
            (State::Tour(t), Move::TwoOpt(a, c)) => t.apply_two_opt(a, c, delta),
            (State::Tour(t), Move::Segment(s)) => t.apply_segment(s, delta),
            (State::Routes(r, _), Move::Route(rm)) => r.apply(rm, delta),
            _ => unreachable!("move kind matches state kind"),
        }
    }
}

/// Runs simulated annealing on `instance` until the budget or iteration cap
/// is exhausted. With `start_temperature = Some(0.0)` only non-worsening moves
/// are accepted.
pub fn simulated_annealing(instance: &Instance, config: &SolverConfig) -> Result<SolveTrace> {
    config.validate()?;
    let params = &config.params;
    let mut budget = Budget::new(config);
    let start = match instance.problem {
        Problem::Tsp => construct_nearest_neighbor(instance, config.seed)?,
        Problem::Cvrp => construct_savings(instance)?,
    };
    let mut rec = Recorder::new(start.clone(), &budget);
    let customers = instance.customers().len();
    if customers < 2 || (instance.problem == Problem::Tsp && customers < 4) {
        return Ok(rec.finish(&budget, config.seed));
    }
    let ctx = Context::new(instance, params.neighbors);
    let local = descend(&ctx, &start, params, &mut budget, &mut rec);

    budget.set_stride(CLOCK_STRIDE);
    let mut rng = seed::rng(config.seed, tag::SOLVER, &[1]);
    let mut state = State::from_solution(&ctx, &local);

    let mut temperature = match params.start_temperature {
        Some(t) => t,
        None => calibrate(&mut state, &ctx, params, &mut rng),
    };
    let mut accepted: u64 = 0;
    let mut since_best: u64 = 0;

    while budget.next() {
        let Some((m, delta)) = state.propose(&ctx, params, &mut rng) else {
            since_best += 1;
            continue;
        };
        let accept = delta <= 0.0 || (temperature > 0.0 && rng.random::<f64>() < libm::exp(-delta / temperature));
        if accept {
            state.apply(m, delta);
            accepted += 1;
            if accepted % u64::from(params.cooling_batch) == 0 {
                temperature *= params.cooling_rate;
            }
            if state.cost() < rec.best_cost() - DRIFT {
                let sol = state.snapshot();
                state.set_cost(sol.cost());
                if rec.offer(sol, &budget) {
                    since_best = 0;
                    continue;
                }
            }
        }
        since_best += 1;
        if since_best >= params.stagnation_limit {
            state = State::from_solution(&ctx, rec.best());
            since_best = 0;
        }
    }
    Ok(rec.finish(&budget, config.seed))
}

/// Temperature at which the median uphill calibration move is accepted with
/// probability `calibration_acceptance`. Moves are sampled, never applied.
fn calibrate(state: &mut State<'_, '_>, ctx: &Context<'_>, params: &SolverParams, rng: &mut ChaCha8Rng) -> f64 {
    let mut deltas: Vec<f64> = (0..CALIBRATION_MOVES)
        .filter_map(|_| state.propose(ctx, params, rng))
        .map(|(_, d)| d.abs())
        .filter(|d| *d > 0.0)
        .collect();
    if deltas.is_empty() {
        return 0.0;
    }
    deltas.sort_by(f64::total_cmp);
    let median = deltas[deltas.len() / 2];
    -median / libm::log(params.calibration_acceptance)
}
