//! Routing domain model: nodes, instances, solutions, objective and feasibility.
//!
//! Coordinates live in the unit square and distances are full-precision
//! Euclidean. CVRP instances always keep the depot at position 0 of the node
//! sequence; solutions refer to nodes by their *position* in that sequence.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Tsp,
    Cvrp,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::Tsp => f.write_str("tsp"),
            Problem::Cvrp => f.write_str("cvrp"),
        }
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsp" => Ok(Problem::Tsp),
            "cvrp" => Ok(Problem::Cvrp),
            other => Err(Error::InvalidSpec(format!("unknown problem class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub demand: u32,
}

impl Node {
    pub fn new(id: u32, x: f64, y: f64, demand: u32) -> Self {
        Node { id, x, y, demand }
    }
}

/// Euclidean distance between two nodes.
#[inline]
pub fn distance(a: &Node, b: &Node) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Where an instance came from: the pool digest, the generator tag and the
/// substream that selected its customers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub base_id: String,
    pub distribution: String,
    pub sample_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub problem: Problem,
    /// CVRP: position 0 is the depot.
    pub nodes: Vec<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
    pub provenance: Provenance,
}

impl Instance {
    /// Builds an instance and checks the structural invariants.
    pub fn new(
        problem: Problem,
        nodes: Vec<Node>,
        capacity: Option<u32>,
        provenance: Provenance,
    ) -> Result<Self> {
        let inst = Instance { problem, nodes, capacity, provenance };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        let mut ids: Vec<u32> = self.nodes.iter().map(|n| n.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate node id".into());
        }
        for n in &self.nodes {
            if !(0.0..=1.0).contains(&n.x) || !(0.0..=1.0).contains(&n.y) {
                return bad(format!("node {} outside the unit square", n.id));
            }
        }
        match self.problem {
            Problem::Tsp => {
                if self.capacity.is_some() {
                    return bad("TSP instance carries a capacity".into());
                }
                if self.nodes.iter().any(|n| n.demand != 0) {
                    return bad("TSP instance with nonzero demand".into());
                }
            }
            Problem::Cvrp => {
                let Some(q) = self.capacity else {
                    return bad("CVRP instance without capacity".into());
                };
                if q == 0 {
                    return bad("capacity must be positive".into());
                }
                match self.nodes.first() {
                    None => return bad("CVRP instance without depot".into()),
                    Some(d) if d.demand != 0 => return bad("depot demand must be 0".into()),
                    _ => {}
                }
                if let Some(n) = self.nodes.iter().find(|n| n.demand > q) {
                    return bad(format!("node {} demand {} exceeds capacity {q}", n.id, n.demand));
                }
            }
        }
        Ok(())
    }

    /// Number of customer nodes N (the depot is not counted).
    pub fn size(&self) -> usize {
        match self.problem {
            Problem::Tsp => self.nodes.len(),
            Problem::Cvrp => self.nodes.len().saturating_sub(1),
        }
    }

    pub fn depot(&self) -> Option<&Node> {
        match self.problem {
            Problem::Tsp => None,
            Problem::Cvrp => self.nodes.first(),
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity.unwrap_or(0)
    }

    /// Demands as fractions of capacity. Derived, never stored.
    pub fn normalized_demands(&self) -> Vec<f64> {
        let q = self.capacity() as f64;
        self.nodes
            .iter()
            .map(|n| if q > 0.0 { n.demand as f64 / q } else { 0.0 })
            .collect()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        distance(&self.nodes[i], &self.nodes[j])
    }

    pub fn customers(&self) -> std::ops::Range<usize> {
        match self.problem {
            Problem::Tsp => 0..self.nodes.len(),
            Problem::Cvrp => 1..self.nodes.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum Solution {
    /// Permutation of node positions; the closing edge is implicit.
    Tsp { tour: Vec<usize>, cost: f64 },
    /// Each route begins and ends at position 0.
    Cvrp { routes: Vec<Vec<usize>>, cost: f64 },
}

impl Solution {
    pub fn problem(&self) -> Problem {
        match self {
            Solution::Tsp { .. } => Problem::Tsp,
            Solution::Cvrp { .. } => Problem::Cvrp,
        }
    }

    pub fn cost(&self) -> f64 {
        match self {
            Solution::Tsp { cost, .. } | Solution::Cvrp { cost, .. } => *cost,
        }
    }

    /// Tour solution with its cost computed from the instance.
    pub fn tour(instance: &Instance, tour: Vec<usize>) -> Self {
        let cost = tour_length(instance, &tour);
        Solution::Tsp { tour, cost }
    }

    /// Route solution from customer-only sequences; depot bookends are added
    /// and empty routes dropped.
    pub fn from_customer_routes(instance: &Instance, routes: &[Vec<usize>]) -> Self {
        let routes: Vec<Vec<usize>> = routes
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| {
                let mut full = Vec::with_capacity(r.len() + 2);
                full.push(0);
                full.extend_from_slice(r);
                full.push(0);
                full
            })
            .collect();
        let cost = routes.iter().map(|r| path_length(instance, r)).sum();
        Solution::Cvrp { routes, cost }
    }

    /// Customer-only view of the routes (depot bookends stripped).
    pub fn customer_routes(&self) -> Vec<Vec<usize>> {
        match self {
            Solution::Tsp { .. } => Vec::new(),
            Solution::Cvrp { routes, .. } => routes
                .iter()
                .map(|r| r.iter().copied().filter(|&v| v != 0).collect())
                .collect(),
        }
    }
}

fn path_length(instance: &Instance, path: &[usize]) -> f64 {
    path.windows(2).map(|w| instance.dist(w[0], w[1])).sum()
}

fn tour_length(instance: &Instance, tour: &[usize]) -> f64 {
    match tour {
        [] | [_] => 0.0,
        [first, .., last] => path_length(instance, tour) + instance.dist(*last, *first),
    }
}

/// Recomputes the objective of `solution` from scratch.
pub fn evaluate(instance: &Instance, solution: &Solution) -> Result<f64> {
    if instance.problem != solution.problem() {
        return Err(Error::StructuralMismatch(format!(
            "{} solution for {} instance",
            solution.problem(),
            instance.problem
        )));
    }
    let n = instance.nodes.len();
    match solution {
        Solution::Tsp { tour, .. } => {
            if tour.len() != n || tour.iter().any(|&v| v >= n) {
                return Err(Error::StructuralMismatch(format!(
                    "tour of length {} over {} nodes",
                    tour.len(),
                    n
                )));
            }
            Ok(tour_length(instance, tour))
        }
        Solution::Cvrp { routes, .. } => {
            if let Some(&v) = routes.iter().flatten().find(|&&v| v >= n) {
                return Err(Error::StructuralMismatch(format!(
                    "route visits position {v} but instance has {n} nodes"
                )));
            }
            Ok(routes.iter().map(|r| path_length(instance, r)).sum())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    MissingCustomer { position: usize },
    DuplicateVisit { position: usize },
    CapacityExceeded { route: usize, load: u64, capacity: u32 },
    RouteNotDepotAnchored { route: usize },
    /// Depot position appears inside a route or a TSP tour node is unknown.
    InvalidPosition { position: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingCustomer { position } => write!(f, "customer {position} not visited"),
            Violation::DuplicateVisit { position } => write!(f, "node {position} visited more than once"),
            Violation::CapacityExceeded { route, load, capacity } => {
                write!(f, "route {route} load {load} exceeds capacity {capacity}")
            }
            Violation::RouteNotDepotAnchored { route } => {
                write!(f, "route {route} does not start and end at the depot")
            }
            Violation::InvalidPosition { position } => write!(f, "invalid node position {position}"),
        }
    }
}

/// Every violation of `solution` against `instance`; empty iff feasible.
pub fn check_feasible(instance: &Instance, solution: &Solution) -> Result<Vec<Violation>> {
    if instance.problem != solution.problem() {
        return Err(Error::StructuralMismatch(format!(
            "{} solution for {} instance",
            solution.problem(),
            instance.problem
        )));
    }
    let n = instance.nodes.len();
    let mut seen = vec![0usize; n];
    let mut out = Vec::new();
    match solution {
        Solution::Tsp { tour, .. } => {
            for &v in tour {
                if v >= n {
                    out.push(Violation::InvalidPosition { position: v });
                } else {
                    seen[v] += 1;
                }
            }
        }
        Solution::Cvrp { routes, .. } => {
            let cap = instance.capacity();
            for (k, route) in routes.iter().enumerate() {
                if route.len() < 2 || route[0] != 0 || route[route.len() - 1] != 0 {
                    out.push(Violation::RouteNotDepotAnchored { route: k });
                }
                let inner = route.strip_prefix(&[0]).unwrap_or(route);
                let inner = inner.strip_suffix(&[0]).unwrap_or(inner);
                let mut load = 0u64;
                for &v in inner {
                    if v >= n {
                        out.push(Violation::InvalidPosition { position: v });
                        continue;
                    }
                    if v == 0 {
                        out.push(Violation::InvalidPosition { position: 0 });
                        continue;
                    }
                    seen[v] += 1;
                    load += instance.nodes[v].demand as u64;
                }
                if load > cap as u64 {
                    out.push(Violation::CapacityExceeded { route: k, load, capacity: cap });
                }
            }
        }
    }
    for v in instance.customers() {
        match seen[v] {
            0 => out.push(Violation::MissingCustomer { position: v }),
            1 => {}
            _ => out.push(Violation::DuplicateVisit { position: v }),
        }
    }
    Ok(out)
}

/// Dense distance table for solver inner loops.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(instance: &Instance) -> Self {
        let n = instance.nodes.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = instance.dist(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// The `k` nearest other nodes of each node among `candidates`, ties
    /// broken by lower position.
    pub fn neighbor_lists(&self, k: usize, candidates: std::ops::Range<usize>) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| {
                let mut others: Vec<usize> = candidates.clone().filter(|&j| j != i).collect();
                others.sort_by(|&a, &b| self.get(i, a).total_cmp(&self.get(i, b)).then(a.cmp(&b)));
                others.truncate(k);
                others
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn prov() -> Provenance {
        Provenance {
            base_id: "test".into(),
            distribution: "manual".into(),
            sample_seed: 0,
            epoch: None,
            index: 0,
        }
    }

    fn tsp(points: &[(f64, f64)]) -> Instance {
        let nodes = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Node::new(i as u32, x, y, 0))
            .collect();
        Instance::new(Problem::Tsp, nodes, None, prov()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let o = Node::new(0, 0.0, 0.0, 0);
        assert_eq!(distance(&o, &o), 0.0);
        let a = Node::new(1, 1.0, 1.0, 0);
        assert!((distance(&o, &a) - 2f64.sqrt()).abs() < 1e-15);
        let b = Node::new(2, 0.3, 0.4, 0);
        assert!((distance(&b, &o) - 0.5).abs() < 1e-15);
        assert_eq!(distance(&a, &b), distance(&b, &a));
    }

    #[test]
    fn triangle_perimeter() {
        let inst = tsp(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let s = Solution::tour(&inst, vec![0, 1, 2]);
        let z = evaluate(&inst, &s).unwrap();
        assert!((z - (2.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!(check_feasible(&inst, &s).unwrap().is_empty());
    }

    #[test]
    fn out_and_back_route() {
        let nodes = vec![Node::new(0, 0.0, 0.0, 0), Node::new(1, 0.5, 0.0, 3)];
        let inst = Instance::new(Problem::Cvrp, nodes, Some(10), prov()).unwrap();
        let s = Solution::from_customer_routes(&inst, &[vec![1]]);
        assert_eq!(s, Solution::Cvrp { routes: vec![vec![0, 1, 0]], cost: 1.0 });
        assert_eq!(evaluate(&inst, &s).unwrap(), 1.0);
    }

    #[test]
    fn capacity_overflow_by_one() {
        let nodes = vec![
            Node::new(0, 0.5, 0.5, 0),
            Node::new(1, 0.1, 0.1, 5),
            Node::new(2, 0.9, 0.9, 6),
        ];
        let inst = Instance::new(Problem::Cvrp, nodes, Some(10), prov()).unwrap();
        let s = Solution::from_customer_routes(&inst, &[vec![1, 2]]);
        let v = check_feasible(&inst, &s).unwrap();
        assert_eq!(v, vec![Violation::CapacityExceeded { route: 0, load: 11, capacity: 10 }]);
    }

    #[test]
    fn missing_duplicate_and_unanchored() {
        let inst = tsp(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        let s = Solution::Tsp { tour: vec![0, 1, 2], cost: 0.0 };
        assert_eq!(
            check_feasible(&inst, &s).unwrap(),
            vec![Violation::MissingCustomer { position: 3 }]
        );
        let s = Solution::Tsp { tour: vec![0, 1, 2, 2], cost: 0.0 };
        assert_eq!(
            check_feasible(&inst, &s).unwrap(),
            vec![Violation::DuplicateVisit { position: 2 }, Violation::MissingCustomer { position: 3 }]
        );

        let nodes = vec![Node::new(0, 0.5, 0.5, 0), Node::new(1, 0.1, 0.1, 1), Node::new(2, 0.2, 0.2, 1)];
        let cvrp = Instance::new(Problem::Cvrp, nodes, Some(5), prov()).unwrap();
        let s = Solution::Cvrp { routes: vec![vec![1, 2, 0]], cost: 0.0 };
        assert_eq!(
            check_feasible(&cvrp, &s).unwrap(),
            vec![Violation::RouteNotDepotAnchored { route: 0 }]
        );
    }

    #[test]
    fn structural_mismatch() {
        let inst = tsp(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let s = Solution::Cvrp { routes: vec![], cost: 0.0 };
        assert!(matches!(evaluate(&inst, &s), Err(Error::StructuralMismatch(_))));
        let s = Solution::Tsp { tour: vec![0, 1], cost: 0.0 };
        assert!(matches!(evaluate(&inst, &s), Err(Error::StructuralMismatch(_))));
    }

    #[test]
    fn instance_invariants_rejected() {
        let nodes = vec![Node::new(0, 0.5, 0.5, 2), Node::new(1, 0.1, 0.1, 1)];
        assert!(Instance::new(Problem::Cvrp, nodes, Some(5), prov()).is_err());
        let nodes = vec![Node::new(0, 0.5, 0.5, 0), Node::new(1, 0.1, 0.1, 9)];
        assert!(Instance::new(Problem::Cvrp, nodes, Some(5), prov()).is_err());
        let nodes = vec![Node::new(3, 0.5, 0.5, 0), Node::new(3, 0.1, 0.1, 0)];
        assert!(Instance::new(Problem::Tsp, nodes, None, prov()).is_err());
        let nodes = vec![Node::new(0, 1.5, 0.5, 0)];
        assert!(Instance::new(Problem::Tsp, nodes, None, prov()).is_err());
    }

    #[test]
    fn normalized_demands_are_derived() {
        let nodes = vec![Node::new(0, 0.5, 0.5, 0), Node::new(1, 0.1, 0.1, 5)];
        let inst = Instance::new(Problem::Cvrp, nodes, Some(50), prov()).unwrap();
        assert_eq!(inst.normalized_demands(), vec![0.0, 0.1]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tour_cost_rotation_reversal_invariant(
                pts in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 3..20),
                shift in 0usize..20,
            ) {
                let inst = tsp(&pts);
                let n = pts.len();
                let tour: Vec<usize> = (0..n).collect();
                let base = evaluate(&inst, &Solution::tour(&inst, tour.clone())).unwrap();
                let mut rot = tour.clone();
                rot.rotate_left(shift % n);
                let mut rev = tour;
                rev.reverse();
                let zr = evaluate(&inst, &Solution::tour(&inst, rot)).unwrap();
                let zv = evaluate(&inst, &Solution::tour(&inst, rev)).unwrap();
                prop_assert!((zr - base).abs() <= 1e-9 * base.max(1.0));
                prop_assert!((zv - base).abs() <= 1e-9 * base.max(1.0));
                prop_assert!(base >= 0.0);
            }
        }
    }
}
