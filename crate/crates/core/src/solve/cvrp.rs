//! Route-set state with relocate, swap, 2-opt* and intra-route 2-opt kernels.
//!
//! Routes hold customer positions only; the depot (position 0) is implicit at
//! both ends. All deltas are O(1); loads use per-route prefix sums.

use super::{Budget, Context, Recorder, SolverParams, EPS};
use crate::model::Solution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RouteMove {
    /// Move `u` to slot `slot` of route `route` (slot indexes the gap before
    /// the customer at that position; `len` appends).
    Relocate { u: usize, route: usize, slot: usize },
    Swap { u: usize, v: usize },
    /// Tails exchanged: `u -> succ v` and `v -> succ u`.
    TwoOptStar { u: usize, v: usize },
    /// Heads joined: `u -> v` reversed, tails `succ u -> succ v`.
    TwoOptStarReversed { u: usize, v: usize },
    /// Reverse the stretch strictly after `u` up to and including `v`.
    TwoOpt { u: usize, v: usize },
    /// Move `u` onto a route of its own.
    Detach { u: usize },
}

pub(crate) struct RouteState<'c, 'a> {
    ctx: &'c Context<'a>,
    capacity: u64,
    demand: Vec<u64>,
    pub routes: Vec<Vec<usize>>,
    loads: Vec<u64>,
    route_of: Vec<usize>,
    pos: Vec<usize>,
    /// Load of the route up to and including the customer.
    prefix: Vec<u64>,
    pub cost: f64,
}

impl<'c, 'a> RouteState<'c, 'a> {
    pub(crate) fn new(ctx: &'c Context<'a>, routes: &[Vec<usize>]) -> Self {
        let n = ctx.instance.nodes.len();
        let demand = ctx.instance.nodes.iter().map(|v| v.demand as u64).collect();
        let mut s = RouteState {
            ctx,
            capacity: ctx.instance.capacity() as u64,
            demand,
            routes: routes.iter().filter(|r| !r.is_empty()).cloned().collect(),
            loads: Vec::new(),
            route_of: vec![usize::MAX; n],
            pos: vec![0; n],
            prefix: vec![0; n],
            cost: 0.0,
        };
        s.loads = vec![0; s.routes.len()];
        for r in 0..s.routes.len() {
            s.refresh(r);
        }
        s.cost = s.full_cost();
        s
    }

    #[inline]
    fn d(&self, a: usize, b: usize) -> f64 {
        self.ctx.dm.get(a, b)
    }

    fn route_cost(&self, r: &[usize]) -> f64 {
        match (r.first(), r.last()) {
            (Some(&first), Some(&last)) => {
                self.d(0, first) + r.windows(2).map(|w| self.d(w[0], w[1])).sum::<f64>() + self.d(last, 0)
            }
            _ => 0.0,
        }
    }

    fn full_cost(&self) -> f64 {
        self.routes.iter().map(|r| self.route_cost(r)).sum()
    }

    fn refresh(&mut self, r: usize) {
        let mut load = 0;
        for (i, &v) in self.routes[r].iter().enumerate() {
            load += self.demand[v];
            self.route_of[v] = r;
            self.pos[v] = i;
            self.prefix[v] = load;
        }
        self.loads[r] = load;
    }

    #[inline]
    pub(crate) fn prev(&self, v: usize) -> usize {
        let p = self.pos[v];
        if p == 0 {
            0
        } else {
            self.routes[self.route_of[v]][p - 1]
        }
    }

    #[inline]
    pub(crate) fn next(&self, v: usize) -> usize {
        let r = &self.routes[self.route_of[v]];
        r.get(self.pos[v] + 1).copied().unwrap_or(0)
    }

    pub(crate) fn to_solution(&self) -> Solution {
        Solution::from_customer_routes(self.ctx.instance, &self.routes)
    }

    /// Delta of `m`, or `None` if it is degenerate or breaks capacity.
    pub(crate) fn delta(&self, m: RouteMove) -> Option<f64> {
        match m {
            RouteMove::Relocate { u, route, slot } => {
                let ru = self.route_of[u];
                if ru == route && (slot == self.pos[u] || slot == self.pos[u] + 1) {
                    return None;
                }
                if ru != route && self.loads[route] + self.demand[u] > self.capacity {
                    return None;
                }
                let r = &self.routes[route];
                if slot > r.len() {
                    return None;
                }
                let a = if slot == 0 { 0 } else { r[slot - 1] };
                let b = r.get(slot).copied().unwrap_or(0);
                let (pu, nu) = (self.prev(u), self.next(u));
                let removed = self.d(pu, u) + self.d(u, nu) - self.d(pu, nu);
                let added = self.d(a, u) + self.d(u, b) - self.d(a, b);
                Some(added - removed)
            }
            RouteMove::Swap { u, v } => {
                let (ru, rv) = (self.route_of[u], self.route_of[v]);
                if u == v {
                    return None;
                }
                if ru == rv {
                    if self.next(u) == v || self.next(v) == u {
                        return None;
                    }
                } else if self.loads[ru] - self.demand[u] + self.demand[v] > self.capacity
                    || self.loads[rv] - self.demand[v] + self.demand[u] > self.capacity
                {
                    return None;
                }
                let (pu, nu, pv, nv) = (self.prev(u), self.next(u), self.prev(v), self.next(v));
                Some(
                    self.d(pu, v) + self.d(v, nu) + self.d(pv, u) + self.d(u, nv)
                        - self.d(pu, u)
                        - self.d(u, nu)
                        - self.d(pv, v)
                        - self.d(v, nv),
                )
            }
            RouteMove::TwoOptStar { u, v } => {
                let (ru, rv) = (self.route_of[u], self.route_of[v]);
                if ru == rv {
                    return None;
                }
                let (hu, hv) = (self.prefix[u], self.prefix[v]);
                if hu + (self.loads[rv] - hv) > self.capacity || hv + (self.loads[ru] - hu) > self.capacity {
                    return None;
                }
                let (nu, nv) = (self.next(u), self.next(v));
                Some(self.d(u, nv) + self.d(v, nu) - self.d(u, nu) - self.d(v, nv))
            }
            RouteMove::TwoOptStarReversed { u, v } => {
                let (ru, rv) = (self.route_of[u], self.route_of[v]);
                if ru == rv {
                    return None;
                }
                let (hu, hv) = (self.prefix[u], self.prefix[v]);
                let (tu, tv) = (self.loads[ru] - hu, self.loads[rv] - hv);
                if hu + hv > self.capacity || tu + tv > self.capacity {
                    return None;
                }
                let (nu, nv) = (self.next(u), self.next(v));
                Some(self.d(u, v) + self.d(nu, nv) - self.d(u, nu) - self.d(v, nv))
            }
            RouteMove::TwoOpt { u, v } => {
                if self.route_of[u] != self.route_of[v] || self.pos[u] >= self.pos[v] || self.next(u) == v {
                    return None;
                }
                let (nu, nv) = (self.next(u), self.next(v));
                Some(self.d(u, v) + self.d(nu, nv) - self.d(u, nu) - self.d(v, nv))
            }
            RouteMove::Detach { u } => {
                if self.routes[self.route_of[u]].len() == 1 {
                    return None;
                }
                let (pu, nu) = (self.prev(u), self.next(u));
                Some(2.0 * self.d(0, u) - (self.d(pu, u) + self.d(u, nu) - self.d(pu, nu)))
            }
        }
    }

    pub(crate) fn apply(&mut self, m: RouteMove, delta: f64) {
        match m {
            RouteMove::Relocate { u, route, mut slot } => {
                let ru = self.route_of[u];
                let pu = self.pos[u];
                self.routes[ru].remove(pu);
                if ru == route && slot > pu {
                    slot -= 1;
                }
                self.routes[route].insert(slot, u);
                self.refresh(ru);
                if ru != route {
                    self.refresh(route);
                }
            }
            RouteMove::Swap { u, v } => {
                let (ru, rv) = (self.route_of[u], self.route_of[v]);
                let (pu, pv) = (self.pos[u], self.pos[v]);
                self.routes[ru][pu] = v;
                self.routes[rv][pv] = u;
                self.refresh(ru);
                if rv != ru {
                    self.refresh(rv);
                }
            }
            RouteMove::TwoOptStar { u, v } => {
                let (ru, rv) = (self.route_of[u], self.route_of[v]);
                let tail_u = self.routes[ru].split_off(self.pos[u] + 1);
                let tail_v = self.routes[rv].split_off(self.pos[v] + 1);
                self.routes[ru].extend(tail_v);
                self.routes[rv].extend(tail_u);
                self.refresh(ru);
                self.refresh(rv);
            }
            RouteMove::TwoOptStarReversed { u, v } => {
                let (ru, rv) = (self.route_of[u], self.route_of[v]);
                let tail_u = self.routes[ru].split_off(self.pos[u] + 1);
                let tail_v = self.routes[rv].split_off(self.pos[v] + 1);
                let head_v = std::mem::take(&mut self.routes[rv]);
                self.routes[ru].extend(head_v.into_iter().rev());
                let mut new_v: Vec<usize> = tail_u.into_iter().rev().collect();
                new_v.extend(tail_v);
                self.routes[rv] = new_v;
                self.refresh(ru);
                self.refresh(rv);
            }
            RouteMove::TwoOpt { u, v } => {
                let r = self.route_of[u];
                let (i, j) = (self.pos[u] + 1, self.pos[v]);
                self.routes[r][i..=j].reverse();
                self.refresh(r);
            }
            RouteMove::Detach { u } => {
                let ru = self.route_of[u];
                self.routes[ru].remove(self.pos[u]);
                self.refresh(ru);
                let target = match self.routes.iter().position(Vec::is_empty) {
                    Some(r) => r,
                    None => {
                        self.routes.push(Vec::new());
                        self.loads.push(0);
                        self.routes.len() - 1
                    }
                };
                self.routes[target].push(u);
                self.refresh(target);
            }
        }
        self.cost += delta;
    }

    /// Drops emptied routes and renumbers.
    pub(crate) fn compact(&mut self) {
        if self.routes.iter().all(|r| !r.is_empty()) {
            return;
        }
        self.routes.retain(|r| !r.is_empty());
        self.loads = vec![0; self.routes.len()];
        for r in 0..self.routes.len() {
            self.refresh(r);
        }
    }

    /// Candidate moves pairing customer `u` with neighbor `v`, in a fixed order.
    pub(crate) fn moves_for(&self, u: usize, v: usize, params: &SolverParams, out: &mut Vec<RouteMove>) {
        let (rv, pv) = (self.route_of[v], self.pos[v]);
        if params.relocate {
            out.push(RouteMove::Relocate { u, route: rv, slot: pv + 1 });
            out.push(RouteMove::Relocate { u, route: rv, slot: pv });
            out.push(RouteMove::Detach { u });
        }
        if params.swap {
            out.push(RouteMove::Swap { u, v });
        }
        if params.two_opt_star {
            out.push(RouteMove::TwoOptStar { u, v });
            out.push(RouteMove::TwoOptStarReversed { u, v });
            let pu = self.prev(u);
            if pu != 0 {
                out.push(RouteMove::TwoOptStarReversed { u: pu, v });
            }
        }
        if params.two_opt {
            if self.pos[u] < pv {
                out.push(RouteMove::TwoOpt { u, v });
            } else {
                out.push(RouteMove::TwoOpt { u: v, v: u });
            }
        }
    }

    fn improve_at(&mut self, u: usize, params: &SolverParams, buf: &mut Vec<RouteMove>) -> bool {
        let ctx = self.ctx;
        for &v in &ctx.neighbors[u] {
            buf.clear();
            self.moves_for(u, v, params, buf);
            for &m in buf.iter() {
                if let Some(delta) = self.delta(m) {
                    if delta < -EPS {
                        self.apply(m, delta);
                        return true;
                    }
                }
            }
        }
        false
    }

    pub(crate) fn descend(&mut self, params: &SolverParams, budget: &mut Budget, rec: &mut Recorder) {
        let customers: Vec<usize> = self.ctx.instance.customers().collect();
        let n = customers.len();
        if n < 2 {
            return;
        }
        let mut buf = Vec::with_capacity(8);
        let mut since_improvement = 0;
        let mut i = 0;
        while since_improvement < n {
            if !budget.next() {
                break;
            }
            if self.improve_at(customers[i], params, &mut buf) {
                since_improvement = 0;
                let sol = self.to_solution();
                self.cost = sol.cost();
                rec.offer(sol, budget);
            } else {
                since_improvement += 1;
                i = (i + 1) % n;
            }
        }
        self.compact();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, evaluate, Instance, Node, Problem, Provenance};
    use rand::{Rng, SeedableRng};

    fn instance(n: usize, cap: u32, seed: u64) -> Instance {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut nodes = vec![Node::new(0, 0.5, 0.5, 0)];
        nodes.extend((1..=n).map(|i| Node::new(i as u32, rng.random(), rng.random(), rng.random_range(1..=9))));
        let prov = Provenance { base_id: "t".into(), distribution: "t".into(), sample_seed: 0, epoch: None, index: 0 };
        Instance::new(Problem::Cvrp, nodes, Some(cap), prov).unwrap()
    }

    #[test]
    fn move_deltas_match_recomputation() {
        let inst = instance(30, 20, 5);
        let ctx = Context::new(&inst, 10);
        let routes: Vec<Vec<usize>> = (1..=30).map(|v| vec![v]).collect();
        let mut state = RouteState::new(&ctx, &routes);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let params = SolverParams::default();
        let mut buf = Vec::new();
        let mut applied = 0;
        for _ in 0..5_000 {
            let u = rng.random_range(1..=30);
            let v = rng.random_range(1..=30);
            if u == v {
                continue;
            }
            buf.clear();
            state.moves_for(u, v, &params, &mut buf);
            let m = buf[rng.random_range(0..buf.len())];
            if let Some(delta) = state.delta(m) {
                state.apply(m, delta);
                state.compact();
                applied += 1;
                let sol = state.to_solution();
                assert!(check_feasible(&inst, &sol).unwrap().is_empty(), "{m:?}");
                let z = evaluate(&inst, &sol).unwrap();
                assert!((z - state.cost).abs() < 1e-9, "{m:?}: {z} vs {}", state.cost);
            }
        }
        assert!(applied > 1_000);
    }
}
