//! Construction heuristics: nearest neighbor (TSP) and Clarke-Wright savings (CVRP).

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, Problem, Solution};
use crate::seed::{self, tag};

/// Greedy nearest-neighbor tour from `start`; ties go to the lower position.
pub fn nearest_neighbor_from(instance: &Instance, start: usize) -> Result<Solution> {
    if instance.problem != Problem::Tsp {
        return Err(Error::WrongProblemClass { expected: Problem::Tsp });
    }
    let n = instance.nodes.len();
    if n == 0 || start >= n {
        return Err(Error::InvalidInstance(format!("start {start} out of range for {n} nodes")));
    }
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    tour.push(cur);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, _) in visited.iter().enumerate().filter(|(_, &seen)| !seen) {
            let d = instance.dist(cur, j);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        visited[best] = true;
        tour.push(best);
        cur = best;
    }
    Ok(Solution::tour(instance, tour))
}

/// Nearest-neighbor tour from a start node drawn from `seed`.
pub fn construct_nearest_neighbor(instance: &Instance, seed: u64) -> Result<Solution> {
    if instance.problem != Problem::Tsp {
        return Err(Error::WrongProblemClass { expected: Problem::Tsp });
    }
    let n = instance.nodes.len();
    if n == 0 {
        return Err(Error::InvalidInstance("empty instance".into()));
    }
    let start = seed::rng(seed, tag::SOLVER, &[0]).random_range(0..n);
    nearest_neighbor_from(instance, start)
}

/// Parallel Clarke-Wright savings. Pairs are merged in decreasing order of
/// `d(0,i) + d(0,j) - d(i,j)` (ties by lower `i`, then lower `j`) whenever
/// both are route ends in different routes, the saving is positive, and the
/// merged load fits.
pub fn construct_savings(instance: &Instance) -> Result<Solution> {
    if instance.problem != Problem::Cvrp {
        return Err(Error::WrongProblemClass { expected: Problem::Cvrp });
    }
    let q = instance.capacity() as u64;
    let n = instance.nodes.len();
    if let Some(v) = instance.nodes.iter().find(|v| v.demand as u64 > q) {
        return Err(Error::Infeasible(format!("customer {} demand {} exceeds capacity {q}", v.id, v.demand)));
    }

    let mut savings = Vec::with_capacity(n * n / 2);
    for i in 1..n {
        for j in (i + 1)..n {
            let s = instance.dist(0, i) + instance.dist(0, j) - instance.dist(i, j);
            if s > 0.0 {
                savings.push((s, i, j));
            }
        }
    }
    savings.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut routes: Vec<Vec<usize>> = (0..n).map(|i| if i == 0 { Vec::new() } else { vec![i] }).collect();
    let mut loads: Vec<u64> = instance.nodes.iter().map(|v| v.demand as u64).collect();
    let mut route_of: Vec<usize> = (0..n).collect();

    for (_, i, j) in savings {
        let (ri, rj) = (route_of[i], route_of[j]);
        if ri == rj || loads[ri] + loads[rj] > q {
            continue;
        }
        let (a, b) = (&routes[ri], &routes[rj]);
        let i_first = a[0] == i;
        let i_last = a[a.len() - 1] == i;
        let j_first = b[0] == j;
        let j_last = b[b.len() - 1] == j;
        let merged: Vec<usize> = if i_last && j_first {
            a.iter().chain(b.iter()).copied().collect()
        } else if i_first && j_last {
            b.iter().chain(a.iter()).copied().collect()
        } else if i_last && j_last {
            a.iter().chain(b.iter().rev()).copied().collect()
        } else if i_first && j_first {
            a.iter().rev().chain(b.iter()).copied().collect()
        } else {
            continue;
        };
        let (keep, drop) = (ri.min(rj), ri.max(rj));
        for &v in &routes[drop] {
            route_of[v] = keep;
        }
        loads[keep] += loads[drop];
        loads[drop] = 0;
        routes[keep] = merged;
        routes[drop].clear();
    }
    Ok(Solution::from_customer_routes(instance, &routes))
}
