//! Array-backed tour with 2-opt and Or-opt move kernels.

use super::{Budget, Context, Recorder, SolverParams, EPS};
use crate::model::Solution;

pub(crate) struct TourState<'c, 'a> {
    ctx: &'c Context<'a>,
    tour: Vec<usize>,
    pos: Vec<usize>,
    pub cost: f64,
}

/// Or-opt segment move: the `len` nodes starting at `first` (tour order) are
/// reinserted between `c` and its successor, optionally reversed.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SegmentMove {
    pub first: usize,
    pub len: usize,
    pub c: usize,
    pub reversed: bool,
}

impl<'c, 'a> TourState<'c, 'a> {
    pub(crate) fn new(ctx: &'c Context<'a>, tour: Vec<usize>) -> Self {
        let mut pos = vec![0; tour.len()];
        for (i, &v) in tour.iter().enumerate() {
            pos[v] = i;
        }
        let mut s = TourState { ctx, tour, pos, cost: 0.0 };
        s.cost = s.full_cost();
        s
    }

    pub(crate) fn len(&self) -> usize {
        self.tour.len()
    }

    fn full_cost(&self) -> f64 {
        let n = self.tour.len();
        if n < 2 {
            return 0.0;
        }
        (0..n).map(|i| self.d(self.tour[i], self.tour[(i + 1) % n])).sum()
    }

    #[inline]
    fn d(&self, a: usize, b: usize) -> f64 {
        self.ctx.dm.get(a, b)
    }

    #[inline]
    pub(crate) fn succ(&self, v: usize) -> usize {
        let n = self.tour.len();
        self.tour[(self.pos[v] + 1) % n]
    }

    #[inline]
    pub(crate) fn pred(&self, v: usize) -> usize {
        let n = self.tour.len();
        self.tour[(self.pos[v] + n - 1) % n]
    }

    pub(crate) fn to_solution(&self) -> Solution {
        Solution::tour(self.ctx.instance, self.tour.clone())
    }

    /// Reverses the tour between positions `i` and `j` inclusive, walking
    /// forward from `i`. The complementary segment is reversed instead when
    /// shorter; both give the same cycle.
    fn reverse(&mut self, i: usize, j: usize) {
        let n = self.tour.len();
        let len = (j + n - i) % n + 1;
        let (mut a, mut b, len) = if 2 * len > n { ((j + 1) % n, (i + n - 1) % n, n - len) } else { (i, j, len) };
        for _ in 0..len / 2 {
            self.tour.swap(a, b);
            self.pos[self.tour[a]] = a;
            self.pos[self.tour[b]] = b;
            a = (a + 1) % n;
            b = (b + n - 1) % n;
        }
    }

    /// Delta of replacing edges (a, succ a), (c, succ c) with (a, c), (succ a, succ c).
    pub(crate) fn two_opt_delta(&self, a: usize, c: usize) -> f64 {
        let b = self.succ(a);
        let d = self.succ(c);
        if a == c || b == c || d == a {
            return 0.0;
        }
        self.d(a, c) + self.d(b, d) - self.d(a, b) - self.d(c, d)
    }

    pub(crate) fn apply_two_opt(&mut self, a: usize, c: usize, delta: f64) {
        let b = self.succ(a);
        self.reverse(self.pos[b], self.pos[c]);
        self.cost += delta;
    }

    /// Delta of a segment move, or `None` when the move is degenerate.
    pub(crate) fn segment_delta(&self, m: SegmentMove) -> Option<f64> {
        let n = self.tour.len();
        if m.len == 0 || m.len + 2 > n {
            return None;
        }
        let start = self.pos[m.first];
        let last = self.tour[(start + m.len - 1) % n];
        let offset = (self.pos[m.c] + n - start) % n;
        if offset < m.len {
            return None; // c inside the segment
        }
        let p = self.pred(m.first);
        if m.c == p {
            return None;
        }
        let nx = self.succ(last);
        let e = self.succ(m.c);
        let removed = self.d(p, m.first) + self.d(last, nx) - self.d(p, nx);
        let (h, t) = if m.reversed { (last, m.first) } else { (m.first, last) };
        let added = self.d(m.c, h) + self.d(t, e) - self.d(m.c, e);
        Some(added - removed)
    }

    pub(crate) fn apply_segment(&mut self, m: SegmentMove, delta: f64) {
        let n = self.tour.len();
        let start = self.pos[m.first];
        let segment: Vec<usize> = (0..m.len).map(|k| self.tour[(start + k) % n]).collect();
        let mut out = Vec::with_capacity(n);
        for k in 0..n - m.len {
            let v = self.tour[(start + m.len + k) % n];
            out.push(v);
            if v == m.c {
                if m.reversed {
                    out.extend(segment.iter().rev());
                } else {
                    out.extend(segment.iter());
                }
            }
        }
        self.tour = out;
        for (i, &v) in self.tour.iter().enumerate() {
            self.pos[v] = i;
        }
        self.cost += delta;
    }

    /// Tries improving moves around `a`; applies the first one found.
    fn improve_at(&mut self, a: usize, params: &SolverParams) -> bool {
        let ctx = self.ctx;
        if params.two_opt {
            // successor direction
            let b = self.succ(a);
            let dab = self.d(a, b);
            for &c in &ctx.neighbors[a] {
                if self.d(a, c) >= dab {
                    break;
                }
                let delta = self.two_opt_delta(a, c);
                if delta < -EPS {
                    self.apply_two_opt(a, c, delta);
                    return true;
                }
            }
            // predecessor direction: edges (pred a, a), (pred c, c)
            let b = self.pred(a);
            let dab = self.d(a, b);
            for &c in &ctx.neighbors[a] {
                if self.d(a, c) >= dab {
                    break;
                }
                let (pa, pc) = (b, self.pred(c));
                if pc == a || c == b {
                    continue;
                }
                let delta = self.two_opt_delta(pc, pa);
                if delta < -EPS {
                    self.apply_two_opt(pc, pa, delta);
                    return true;
                }
            }
        }
        if params.or_opt {
            for len in 1..=3 {
                for &c in &ctx.neighbors[a] {
                    for reversed in [false, true] {
                        let m = SegmentMove { first: a, len, c, reversed };
                        if let Some(delta) = self.segment_delta(m) {
                            if delta < -EPS {
                                self.apply_segment(m, delta);
                                return true;
                            }
                        }
                        // segment ending at a, inserted after c
                        let n = self.len();
                        let first = self.tour[(self.pos[a] + n + 1 - len) % n];
                        let m = SegmentMove { first, len, c, reversed };
                        if let Some(delta) = self.segment_delta(m) {
                            if delta < -EPS {
                                self.apply_segment(m, delta);
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }

    pub(crate) fn descend(&mut self, params: &SolverParams, budget: &mut Budget, rec: &mut Recorder) {
        let n = self.tour.len();
        if n < 4 {
            return;
        }
        let mut since_improvement = 0;
        let mut a = 0;
        while since_improvement < n {
            if !budget.next() {
                break;
            }
            if self.improve_at(a, params) {
                since_improvement = 0;
                let sol = self.to_solution();
                self.cost = sol.cost();
                rec.offer(sol, budget);
            } else {
                since_improvement += 1;
                a = (a + 1) % n;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate, Instance, Node, Problem, Provenance};
    use rand::{Rng, SeedableRng};

    fn instance(n: usize, seed: u64) -> Instance {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let nodes = (0..n).map(|i| Node::new(i as u32, rng.random(), rng.random(), 0)).collect();
        let prov = Provenance { base_id: "t".into(), distribution: "t".into(), sample_seed: 0, epoch: None, index: 0 };
        Instance::new(Problem::Tsp, nodes, None, prov).unwrap()
    }

    fn is_perm(t: &[usize]) -> bool {
        let mut s = t.to_vec();
        s.sort_unstable();
        s.iter().enumerate().all(|(i, &v)| i == v)
    }

    #[test]
    fn move_deltas_match_recomputation() {
        let inst = instance(25, 3);
        let ctx = Context::new(&inst, 8);
        let mut state = TourState::new(&ctx, (0..25).collect());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2_000 {
            let a = rng.random_range(0..25);
            let c = rng.random_range(0..25);
            if rng.random_bool(0.5) {
                let delta = state.two_opt_delta(a, c);
                if a != c && state.succ(a) != c && state.succ(c) != a {
                    state.apply_two_opt(a, c, delta);
                }
            } else {
                let m = SegmentMove { first: a, len: rng.random_range(1..=3), c, reversed: rng.random_bool(0.5) };
                if let Some(delta) = state.segment_delta(m) {
                    state.apply_segment(m, delta);
                }
            }
            assert!(is_perm(&state.tour));
            let z = evaluate(&inst, &state.to_solution()).unwrap();
            assert!((z - state.cost).abs() < 1e-9, "{z} vs {}", state.cost);
        }
    }
}
