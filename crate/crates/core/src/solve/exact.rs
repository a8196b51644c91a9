//! Exact oracles for small instances.

use crate::error::{Error, Result};
use crate::model::{Instance, Problem, Solution};

pub const EXACT_TSP_LIMIT: usize = 15;
pub const EXACT_CVRP_LIMIT: usize = 8;

/// Optimal tour by Held-Karp dynamic programming over subsets, anchored at
/// position 0. Ties keep the lowest predecessor.
pub fn exact_tsp(instance: &Instance) -> Result<Solution> {
    if instance.problem != Problem::Tsp {
        return Err(Error::WrongProblemClass { expected: Problem::Tsp });
    }
    let n = instance.nodes.len();
    if n > EXACT_TSP_LIMIT {
        return Err(Error::TooLarge { n, limit: EXACT_TSP_LIMIT });
    }
    if n <= 3 {
        return Ok(Solution::tour(instance, (0..n).collect()));
    }
    // Nodes 1..n map to bits 0..m.
    let m = n - 1;
    let full = (1usize << m) - 1;
    let mut dp = vec![f64::INFINITY; (1 << m) * m];
    let mut parent = vec![usize::MAX; (1 << m) * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = instance.dist(0, j + 1);
    }
    for mask in 1..=full {
        for last in 0..m {
            if mask & (1 << last) == 0 {
                continue;
            }
            let here = dp[mask * m + last];
            if !here.is_finite() {
                continue;
            }
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let c = here + instance.dist(last + 1, next + 1);
                if c < dp[nm * m + next] {
                    dp[nm * m + next] = c;
                    parent[nm * m + next] = last;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut last = 0;
    for j in 0..m {
        let c = dp[full * m + j] + instance.dist(j + 1, 0);
        if c < best {
            best = c;
            last = j;
        }
    }
    let mut tour = Vec::with_capacity(n);
    let mut mask = full;
    let mut cur = last;
    while cur != usize::MAX {
        tour.push(cur + 1);
        let p = parent[mask * m + cur];
        mask &= !(1 << cur);
        cur = p;
    }
    tour.push(0);
    tour.reverse();
    Ok(Solution::tour(instance, tour))
}

/// Optimal route set: a Held-Karp pass from the depot prices every customer
/// subset as one route, then a set-partition DP combines capacity-feasible
/// subsets.
pub fn exact_cvrp(instance: &Instance) -> Result<Solution> {
    if instance.problem != Problem::Cvrp {
        return Err(Error::WrongProblemClass { expected: Problem::Cvrp });
    }
    let m = instance.size();
    if m > EXACT_CVRP_LIMIT {
        return Err(Error::TooLarge { n: m, limit: EXACT_CVRP_LIMIT });
    }
    let cap = instance.capacity() as u64;
    if let Some(v) = instance.nodes.iter().find(|v| v.demand as u64 > cap) {
        return Err(Error::Infeasible(format!("customer {} demand exceeds capacity", v.id)));
    }
    if m == 0 {
        return Ok(Solution::from_customer_routes(instance, &[]));
    }
    let size = 1usize << m;
    let full = size - 1;

    // path[mask][last]: depot -> ... -> last, visiting exactly mask
    let mut path = vec![f64::INFINITY; size * m];
    let mut parent = vec![usize::MAX; size * m];
    for j in 0..m {
        path[(1 << j) * m + j] = instance.dist(0, j + 1);
    }
    for mask in 1..size {
        for last in 0..m {
            let here = path[mask * m + last];
            if mask & (1 << last) == 0 || !here.is_finite() {
                continue;
            }
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let c = here + instance.dist(last + 1, next + 1);
                if c < path[nm * m + next] {
                    path[nm * m + next] = c;
                    parent[nm * m + next] = last;
                }
            }
        }
    }
    let mut route_cost = vec![f64::INFINITY; size];
    let mut route_end = vec![usize::MAX; size];
    let mut load = vec![0u64; size];
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        load[mask] = load[mask & (mask - 1)] + instance.nodes[low + 1].demand as u64;
        if load[mask] > cap {
            continue;
        }
        for last in 0..m {
            if mask & (1 << last) != 0 {
                let c = path[mask * m + last] + instance.dist(last + 1, 0);
                if c < route_cost[mask] {
                    route_cost[mask] = c;
                    route_end[mask] = last;
                }
            }
        }
    }

    let mut best = vec![f64::INFINITY; size];
    let mut choice = vec![0usize; size];
    best[0] = 0.0;
    for mask in 1..size {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        // enumerate subsets of `rest`, each joined with the lowest bit
        let mut sub = rest;
        loop {
            let part = sub | low;
            if route_cost[part].is_finite() {
                let c = route_cost[part] + best[mask ^ part];
                if c < best[mask] {
                    best[mask] = c;
                    choice[mask] = part;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }

    let mut routes = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let part = choice[mask];
        let mut route = Vec::new();
        let mut cur = route_end[part];
        let mut pm = part;
        while cur != usize::MAX {
            route.push(cur + 1);
            let p = parent[pm * m + cur];
            pm &= !(1 << cur);
            cur = p;
        }
        route.reverse();
        if route.first() > route.last() {
            route.reverse();
        }
        routes.push(route);
        mask ^= part;
    }
    routes.sort();
    Ok(Solution::from_customer_routes(instance, &routes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, evaluate, Node, Provenance};

    fn prov() -> Provenance {
        Provenance { base_id: "t".into(), distribution: "t".into(), sample_seed: 0, epoch: None, index: 0 }
    }

    #[test]
    fn triangle_and_square() {
        let tri = Instance::new(
            Problem::Tsp,
            vec![Node::new(0, 0.0, 0.0, 0), Node::new(1, 1.0, 0.0, 0), Node::new(2, 0.0, 1.0, 0)],
            None,
            prov(),
        )
        .unwrap();
        assert!((exact_tsp(&tri).unwrap().cost() - (2.0 + 2f64.sqrt())).abs() < 1e-12);
        // convex position given in crossing order
        let sq = Instance::new(
            Problem::Tsp,
            vec![
                Node::new(0, 0.0, 0.0, 0),
                Node::new(1, 1.0, 1.0, 0),
                Node::new(2, 1.0, 0.0, 0),
                Node::new(3, 0.0, 1.0, 0),
            ],
            None,
            prov(),
        )
        .unwrap();
        let s = exact_tsp(&sq).unwrap();
        assert!((s.cost() - 4.0).abs() < 1e-12);
        if let Solution::Tsp { tour, .. } = &s {
            assert_eq!(tour[2], 1, "diagonal corners must be opposite: {tour:?}");
        }
    }

    #[test]
    fn too_large() {
        let nodes = (0..16).map(|i| Node::new(i, i as f64 / 16.0, 0.0, 0)).collect();
        let inst = Instance::new(Problem::Tsp, nodes, None, prov()).unwrap();
        assert!(matches!(exact_tsp(&inst), Err(Error::TooLarge { n: 16, limit: 15 })));
    }

    #[test]
    fn full_demands_force_singletons() {
        let mut nodes = vec![Node::new(0, 0.5, 0.5, 0)];
        nodes.extend((1..=6).map(|i| Node::new(i, (i as f64 * 0.13) % 1.0, (i as f64 * 0.29) % 1.0, 7)));
        let inst = Instance::new(Problem::Cvrp, nodes, Some(7), prov()).unwrap();
        let s = exact_cvrp(&inst).unwrap();
        assert_eq!(s.customer_routes().len(), 6);
        let expect: f64 = (1..=6).map(|i| 2.0 * inst.dist(0, i)).sum();
        assert!((s.cost() - expect).abs() < 1e-12);
        assert!(check_feasible(&inst, &s).unwrap().is_empty());
        assert!((evaluate(&inst, &s).unwrap() - s.cost()).abs() < 1e-12);
    }

    #[test]
    fn ample_capacity_single_route_on_hull() {
        // depot and customers on a circle: one route along the circle
        let mut nodes = Vec::new();
        for i in 0..8u32 {
            let a = i as f64 * std::f64::consts::TAU / 8.0;
            nodes.push(Node::new(i, 0.5 + 0.4 * a.cos(), 0.5 + 0.4 * a.sin(), u32::from(i > 0)));
        }
        let inst = Instance::new(Problem::Cvrp, nodes, Some(100), prov()).unwrap();
        let s = exact_cvrp(&inst).unwrap();
        assert_eq!(s.customer_routes().len(), 1);
    }
}
