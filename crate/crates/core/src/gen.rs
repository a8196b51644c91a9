//! Coordinate, demand and depot samplers for the underlying distributions.
//!
//! Every sampler is a pure function of `(params, count, seed)`. Transcendental
//! functions go through `libm` so pools are bit-identical across platforms.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Node, Problem};
use crate::seed::{self, tag};

/// Side length of the integer grid used by the X samplers, minus one.
pub const GRID_MAX: u32 = 999;
const CENTER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    Uniform,
    Explosion,
    Rotation,
    #[serde(rename = "x-c")]
    XClustered,
    #[serde(rename = "x-rc")]
    XRandomClustered,
}

impl Distribution {
    /// Short label used in dataset names (`G_200^X`).
    pub fn short_label(self) -> &'static str {
        match self {
            Distribution::Uniform => "Unif",
            Distribution::Explosion => "Exp",
            Distribution::Rotation => "Ro",
            Distribution::XClustered | Distribution::XRandomClustered => "X",
        }
    }

    pub fn is_grid(self) -> bool {
        matches!(self, Distribution::XClustered | Distribution::XRandomClustered)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Uniform => "uniform",
            Distribution::Explosion => "explosion",
            Distribution::Rotation => "rotation",
            Distribution::XClustered => "x-c",
            Distribution::XRandomClustered => "x-rc",
        })
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "uniform" | "unif" => Distribution::Uniform,
            "explosion" | "exp" => Distribution::Explosion,
            "rotation" | "ro" => Distribution::Rotation,
            "x-c" | "xc" | "x-clustered" => Distribution::XClustered,
            "x-rc" | "xrc" | "x-random-clustered" => Distribution::XRandomClustered,
            other => return Err(Error::InvalidSpec(format!("unknown distribution `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandScheme {
    None,
    #[serde(rename = "uniform_1_9")]
    Uniform1To9,
    Unitary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepotScheme {
    None,
    Random,
}

/// Tunable generator parameters. Defaults are the documented values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    pub explosion_radius: f64,
    pub explosion_mean_push: f64,
    pub rotation_min: f64,
    pub rotation_max: f64,
    pub cluster_min: u32,
    pub cluster_max: u32,
    /// Attraction decay length in grid units.
    pub attraction_decay: f64,
    /// Explicit vehicle capacity; derived from the demand scheme when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
    /// Instance size the derived capacity is sized for.
    pub target_size: u32,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            explosion_radius: 0.3,
            explosion_mean_push: 0.1,
            rotation_min: 1.2,
            rotation_max: 1.9,
            cluster_min: 3,
            cluster_max: 8,
            attraction_decay: 40.0,
            capacity: None,
            target_size: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub tag: Distribution,
    pub demand_scheme: DemandScheme,
    pub depot_scheme: DepotScheme,
    #[serde(default)]
    pub params: Params,
}

impl DistributionSpec {
    /// The standard pairing of a distribution with a problem class: TSP pools
    /// carry no demands or depot; CVRP pools get a random depot, unit demands
    /// on X and `1..=9` demands elsewhere. `x-c`/`x-rc` are swapped to the
    /// variant used for each class.
    pub fn standard(tag: Distribution, problem: Problem) -> Self {
        match problem {
            Problem::Tsp => DistributionSpec {
                tag: if tag.is_grid() { Distribution::XClustered } else { tag },
                demand_scheme: DemandScheme::None,
                depot_scheme: DepotScheme::None,
                params: Params::default(),
            },
            Problem::Cvrp => {
                let (tag, demand) = if tag.is_grid() {
                    (Distribution::XRandomClustered, DemandScheme::Unitary)
                } else {
                    (tag, DemandScheme::Uniform1To9)
                };
                DistributionSpec {
                    tag,
                    demand_scheme: demand,
                    depot_scheme: DepotScheme::Random,
                    params: Params::default(),
                }
            }
        }
    }

    pub fn problem(&self) -> Problem {
        match self.depot_scheme {
            DepotScheme::None => Problem::Tsp,
            DepotScheme::Random => Problem::Cvrp,
        }
    }

    /// Vehicle capacity for CVRP pools: 50 for `1..=9` demands, and
    /// `ceil(target_size / 4)` for unit demands, unless set explicitly.
    pub fn capacity(&self) -> Option<u32> {
        if self.problem() == Problem::Tsp {
            return None;
        }
        Some(self.params.capacity.unwrap_or(match self.demand_scheme {
            DemandScheme::Unitary => self.params.target_size.div_ceil(4),
            _ => 50,
        }))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        let p = &self.params;
        match (self.demand_scheme, self.depot_scheme) {
            (DemandScheme::None, DepotScheme::None) => {}
            (DemandScheme::None, DepotScheme::Random) => return bad("CVRP pool needs a demand scheme"),
            (_, DepotScheme::None) => return bad("demands require a depot"),
            _ => {}
        }
        if self.tag == Distribution::XRandomClustered && self.depot_scheme != DepotScheme::Random {
            return bad("x-rc pairs only with a random depot and customer demands");
        }
        if !(p.explosion_radius > 0.0 && p.explosion_radius <= 0.5) {
            return bad("explosion_radius must lie in (0, 0.5]");
        }
        if !(p.explosion_mean_push > 0.0 && p.explosion_mean_push.is_finite()) {
            return bad("explosion_mean_push must be positive");
        }
        if !(0.0 <= p.rotation_min && p.rotation_min <= p.rotation_max && p.rotation_max <= std::f64::consts::TAU) {
            return bad("rotation range must satisfy 0 <= min <= max <= 2*pi");
        }
        if !(1 <= p.cluster_min && p.cluster_min <= p.cluster_max && p.cluster_max <= 100) {
            return bad("cluster range must satisfy 1 <= min <= max <= 100");
        }
        if !(p.attraction_decay > 0.0 && p.attraction_decay.is_finite()) {
            return bad("attraction_decay must be positive");
        }
        if p.target_size == 0 {
            return bad("target_size must be positive");
        }
        if let Some(q) = self.capacity() {
            let max_demand = match self.demand_scheme {
                DemandScheme::Uniform1To9 => 9,
                _ => 1,
            };
            if q < max_demand {
                return bad("capacity below the largest possible demand");
            }
        }
        Ok(())
    }
}

/// Side information recorded by the samplers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_seeds: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exploded_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub nodes: Vec<Node>,
    pub meta: SamplerMeta,
}

fn check_count(count: usize, min: usize) -> Result<()> {
    if count < min {
        return Err(Error::InvalidCount(count, if min == 1 { "need at least 1 node" } else { "need at least 2 nodes" }));
    }
    if count > u32::MAX as usize - 1 {
        return Err(Error::InvalidCount(count, "too many nodes"));
    }
    Ok(())
}

fn to_nodes(points: Vec<(f64, f64)>) -> Vec<Node> {
    points
        .into_iter()
        .enumerate()
        .map(|(i, (x, y))| Node::new(i as u32 + 1, x, y, 0))
        .collect()
}

fn uniform_points(count: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    (0..count).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect()
}

/// I.i.d. uniform points on the unit square.
pub fn sample_uniform(count: usize, seed: u64) -> Result<Sampled> {
    check_count(count, 1)?;
    let mut rng = seed::rng(seed, tag::COORDS, &[]);
    Ok(Sampled { nodes: to_nodes(uniform_points(count, &mut rng)), meta: SamplerMeta::default() })
}

/// Pushes a point lying inside the blast radius out to `radius + s` along its
/// ray from the center, `s ~ Exp(mean)`. A point exactly at the center gets a
/// random ray. Points outside the radius are returned unchanged.
pub fn explode_point(p: (f64, f64), radius: f64, mean_push: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (dx, dy) = (p.0 - CENTER, p.1 - CENTER);
    let d = (dx * dx + dy * dy).sqrt();
    if d >= radius {
        return p;
    }
    let (ux, uy) = if d > 0.0 {
        (dx / d, dy / d)
    } else {
        let a = rng.random::<f64>() * std::f64::consts::TAU;
        (libm::cos(a), libm::sin(a))
    };
    // 1 - u lies in (0, 1], so the log is finite.
    let s = -mean_push * libm::log(1.0 - rng.random::<f64>());
    let r = radius + s;
    ((CENTER + r * ux).clamp(0.0, 1.0), (CENTER + r * uy).clamp(0.0, 1.0))
}

/// Uniform points with a hole blown around (0.5, 0.5).
pub fn sample_explosion(count: usize, seed: u64, params: &Params) -> Result<Sampled> {
    check_count(count, 1)?;
    let mut rng = seed::rng(seed, tag::COORDS, &[]);
    let mut mutation = seed::rng(seed, tag::MUTATION, &[]);
    let mut exploded = 0;
    let points = uniform_points(count, &mut rng)
        .into_iter()
        .map(|p| {
            let q = explode_point(p, params.explosion_radius, params.explosion_mean_push, &mut mutation);
            if q != p {
                exploded += 1;
            }
            q
        })
        .collect();
    Ok(Sampled {
        nodes: to_nodes(points),
        meta: SamplerMeta { exploded_points: Some(exploded), ..Default::default() },
    })
}

/// Rigid rotation about (0.5, 0.5) by `theta`, then per-axis min-max
/// renormalization back onto [0, 1].
pub fn rotate_points(points: &[(f64, f64)], theta: f64) -> Vec<(f64, f64)> {
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let rotated: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| {
            let (dx, dy) = (x - CENTER, y - CENTER);
            (CENTER + dx * c - dy * s, CENTER + dx * s + dy * c)
        })
        .collect();
    let range = |f: fn(&(f64, f64)) -> f64| {
        rotated.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x_lo, x_hi) = range(|p| p.0);
    let (y_lo, y_hi) = range(|p| p.1);
    let norm = |v: f64, lo: f64, hi: f64| {
        if hi > lo {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            CENTER
        }
    };
    rotated
        .into_iter()
        .map(|(x, y)| (norm(x, x_lo, x_hi), norm(y, y_lo, y_hi)))
        .collect()
}

/// Uniform points rotated about the center by `theta ~ U(rotation_min, rotation_max)`.
pub fn sample_rotation(count: usize, seed: u64, params: &Params) -> Result<Sampled> {
    check_count(count, 1)?;
    let mut rng = seed::rng(seed, tag::COORDS, &[]);
    let mut mutation = seed::rng(seed, tag::MUTATION, &[]);
    let theta = params.rotation_min + (params.rotation_max - params.rotation_min) * mutation.random::<f64>();
    let points = rotate_points(&uniform_points(count, &mut rng), theta);
    Ok(Sampled {
        nodes: to_nodes(points),
        meta: SamplerMeta { rotation_angle: Some(theta), ..Default::default() },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XVariant {
    Clustered,
    RandomClustered,
}

fn grid_point(rng: &mut ChaCha8Rng) -> (u32, u32) {
    (rng.random_range(0..=GRID_MAX), rng.random_range(0..=GRID_MAX))
}

/// Clustered grid points: `S` uniform seeds, the rest placed by rejection
/// with acceptance probability `min(1, mean_s exp(-d_s / decay))`.
fn clustered_grid(count: usize, params: &Params, rng: &mut ChaCha8Rng) -> (Vec<(u32, u32)>, u32) {
    let s = rng.random_range(params.cluster_min..=params.cluster_max);
    let n_seeds = (s as usize).min(count);
    let seeds: Vec<(u32, u32)> = (0..n_seeds).map(|_| grid_point(rng)).collect();
    let mut out = seeds.clone();
    let inv = 1.0 / n_seeds.max(1) as f64;
    while out.len() < count {
        let cand = grid_point(rng);
        let attraction: f64 = seeds
            .iter()
            .map(|&(sx, sy)| {
                let dx = cand.0 as f64 - sx as f64;
                let dy = cand.1 as f64 - sy as f64;
                libm::exp(-(dx * dx + dy * dy).sqrt() / params.attraction_decay)
            })
            .sum::<f64>()
            * inv;
        if rng.random::<f64>() < attraction.min(1.0) {
            out.push(cand);
        }
    }
    (out, s)
}

/// Grid value to unit-square coordinate.
#[inline]
pub fn grid_to_unit(v: u32) -> f64 {
    v as f64 / GRID_MAX as f64
}

/// X-style points on the `[0, 999]^2` grid, normalized by 999. The
/// random-clustered variant emits `ceil(count/2)` uniform grid points first,
/// then `floor(count/2)` clustered ones.
pub fn sample_x(count: usize, variant: XVariant, seed: u64, params: &Params) -> Result<Sampled> {
    check_count(count, if variant == XVariant::RandomClustered { 2 } else { 1 })?;
    let mut rng = seed::rng(seed, tag::COORDS, &[]);
    let (uniform, clustered) = match variant {
        XVariant::Clustered => (0, count),
        XVariant::RandomClustered => (count.div_ceil(2), count / 2),
    };
    let mut grid: Vec<(u32, u32)> = (0..uniform).map(|_| grid_point(&mut rng)).collect();
    let (cl, s) = clustered_grid(clustered, params, &mut rng);
    grid.extend(cl);
    let points = grid.into_iter().map(|(x, y)| (grid_to_unit(x), grid_to_unit(y))).collect();
    Ok(Sampled {
        nodes: to_nodes(points),
        meta: SamplerMeta {
            cluster_seeds: Some(s),
            uniform_points: (variant == XVariant::RandomClustered).then_some(uniform),
            ..Default::default()
        },
    })
}

/// Customer demands under `scheme`; `DemandScheme::None` yields zeros.
pub fn sample_demands(count: usize, scheme: DemandScheme, seed: u64) -> Result<Vec<u32>> {
    check_count(count, 1)?;
    let mut rng = seed::rng(seed, tag::DEMANDS, &[]);
    Ok(match scheme {
        DemandScheme::None => vec![0; count],
        DemandScheme::Unitary => vec![1; count],
        DemandScheme::Uniform1To9 => (0..count).map(|_| rng.random_range(1..=9u32)).collect(),
    })
}

/// A random depot (id 0, demand 0): on the normalized grid for X pools,
/// continuous uniform otherwise.
pub fn sample_depot(spec: &DistributionSpec, seed: u64) -> Result<Node> {
    if spec.depot_scheme != DepotScheme::Random {
        return Err(Error::SchemeMismatch("depot requested for a spec without a depot scheme".into()));
    }
    let mut rng = seed::rng(seed, tag::DEPOT, &[]);
    let (x, y) = if spec.tag.is_grid() {
        let (gx, gy) = grid_point(&mut rng);
        (grid_to_unit(gx), grid_to_unit(gy))
    } else {
        (rng.random::<f64>(), rng.random::<f64>())
    };
    Ok(Node::new(0, x, y, 0))
}

/// Dispatches to the coordinate sampler for `spec.tag`.
pub fn sample_coords(spec: &DistributionSpec, count: usize, seed: u64) -> Result<Sampled> {
    match spec.tag {
        Distribution::Uniform => sample_uniform(count, seed),
        Distribution::Explosion => sample_explosion(count, seed, &spec.params),
        Distribution::Rotation => sample_rotation(count, seed, &spec.params),
        Distribution::XClustered => sample_x(count, XVariant::Clustered, seed, &spec.params),
        Distribution::XRandomClustered => sample_x(count, XVariant::RandomClustered, seed, &spec.params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn in_unit(nodes: &[Node]) -> bool {
        nodes.iter().all(|n| (0.0..=1.0).contains(&n.x) && (0.0..=1.0).contains(&n.y))
    }

    #[test]
    fn uniform_in_range_and_deterministic() {
        let a = sample_uniform(10_000, 3).unwrap();
        assert!(in_unit(&a.nodes));
        let b = sample_uniform(10_000, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.nodes, sample_uniform(10_000, 4).unwrap().nodes);
        assert!(matches!(sample_uniform(0, 1), Err(Error::InvalidCount(0, _))));
    }

    /// Kolmogorov-Smirnov statistic against U(0,1).
    fn ks_uniform(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        v.iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
            .fold(0.0, f64::max)
    }

    #[test]
    fn uniform_passes_ks() {
        let s = sample_uniform(100_000, 11).unwrap();
        // Asymptotic critical value at alpha = 0.01: 1.6276 / sqrt(n).
        let crit = 1.6276 / (100_000f64).sqrt();
        assert!(ks_uniform(s.nodes.iter().map(|n| n.x).collect()) < crit);
        assert!(ks_uniform(s.nodes.iter().map(|n| n.y).collect()) < crit);
    }

    #[test]
    fn explosion_leaves_a_hole() {
        let p = Params::default();
        for seed in 0..100 {
            let s = sample_explosion(2_000, seed, &p).unwrap();
            assert!(in_unit(&s.nodes));
            let min_d = s
                .nodes
                .iter()
                .map(|n| ((n.x - 0.5).powi(2) + (n.y - 0.5).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(min_d >= 0.3 * (1.0 - 1e-9), "seed {seed}: {min_d}");
        }
    }

    #[test]
    fn explosion_degenerate_center_and_identity_outside() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = explode_point((0.5, 0.5), 0.3, 0.1, &mut rng);
        let d = ((q.0 - 0.5).powi(2) + (q.1 - 0.5).powi(2)).sqrt();
        assert!(d >= 0.3 * (1.0 - 1e-9));
        for p in [(0.0, 0.0), (0.9, 0.5), (0.5, 0.8 + 1e-12), (0.1, 0.95)] {
            assert_eq!(explode_point(p, 0.3, 0.1, &mut rng), p);
        }
    }

    #[test]
    fn explosion_keeps_ray_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (x, y) = explode_point((0.6, 0.5), 0.3, 0.1, &mut rng);
        assert_eq!(y, 0.5);
        assert!(x >= 0.8);
    }

    #[test]
    fn rotation_angle_and_range() {
        let p = Params::default();
        for seed in 0..100 {
            let s = sample_rotation(500, seed, &p).unwrap();
            let theta = s.meta.rotation_angle.unwrap();
            assert!((1.2..=1.9).contains(&theta));
            assert!(in_unit(&s.nodes));
        }
        assert_eq!(sample_rotation(300, 4, &p).unwrap(), sample_rotation(300, 4, &p).unwrap());
    }

    #[test]
    fn rotation_single_point_is_centered() {
        assert_eq!(rotate_points(&[(0.1, 0.7)], 1.5), vec![(0.5, 0.5)]);
    }

    #[test]
    fn x_points_lie_on_grid() {
        let p = Params::default();
        for variant in [XVariant::Clustered, XVariant::RandomClustered] {
            let s = sample_x(3_000, variant, 21, &p).unwrap();
            for n in &s.nodes {
                for v in [n.x, n.y] {
                    let k = (v * 999.0).round();
                    assert_eq!(k / 999.0, v);
                    assert!((0.0..=999.0).contains(&k));
                }
            }
        }
    }

    #[test]
    fn x_random_clustered_half_split() {
        let s = sample_x(10_000, XVariant::RandomClustered, 1, &Params::default()).unwrap();
        assert_eq!(s.meta.uniform_points, Some(5_000));
        assert_eq!(s.nodes.len(), 10_000);
        let odd = sample_x(7, XVariant::RandomClustered, 1, &Params::default()).unwrap();
        assert_eq!(odd.meta.uniform_points, Some(4));
        assert!(sample_x(1, XVariant::RandomClustered, 1, &Params::default()).is_err());
    }

    #[test]
    fn x_cluster_seed_count_in_range() {
        let p = Params::default();
        for seed in 0..100 {
            let s = sample_x(50, XVariant::Clustered, seed, &p).unwrap();
            assert!((3..=8).contains(&s.meta.cluster_seeds.unwrap()));
        }
    }

    #[test]
    fn demands() {
        assert_eq!(sample_demands(5, DemandScheme::Unitary, 0).unwrap(), vec![1; 5]);
        let d = sample_demands(90_000, DemandScheme::Uniform1To9, 17).unwrap();
        let mut counts = [0usize; 10];
        for v in &d {
            counts[*v as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        for (v, &c) in counts.iter().enumerate().skip(1) {
            let f = c as f64 / 90_000.0;
            assert!((f - 1.0 / 9.0).abs() <= 0.005, "value {v}: {f}");
        }
    }

    #[test]
    fn depot() {
        let spec = DistributionSpec::standard(Distribution::XRandomClustered, Problem::Cvrp);
        let d = sample_depot(&spec, 8).unwrap();
        assert_eq!(d.demand, 0);
        assert!((0.0..=1.0).contains(&d.x) && (0.0..=1.0).contains(&d.y));
        assert_eq!(d, sample_depot(&spec, 8).unwrap());
        assert_eq!((d.x * 999.0).round() / 999.0, d.x);
        let tsp = DistributionSpec::standard(Distribution::Uniform, Problem::Tsp);
        assert!(matches!(sample_depot(&tsp, 8), Err(Error::SchemeMismatch(_))));
    }

    #[test]
    fn spec_validation_and_capacity() {
        let cvrp = DistributionSpec::standard(Distribution::Uniform, Problem::Cvrp);
        assert_eq!(cvrp.capacity(), Some(50));
        let x = DistributionSpec::standard(Distribution::XClustered, Problem::Cvrp);
        assert_eq!(x.tag, Distribution::XRandomClustered);
        assert_eq!(x.capacity(), Some(25));
        let mut bad = DistributionSpec::standard(Distribution::XRandomClustered, Problem::Tsp);
        assert_eq!(bad.tag, Distribution::XClustered);
        bad.tag = Distribution::XRandomClustered;
        assert!(bad.validate().is_err());
        let mut r = DistributionSpec::standard(Distribution::Rotation, Problem::Tsp);
        r.params.rotation_min = 2.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn spec_serde_names() {
        let spec = DistributionSpec::standard(Distribution::XRandomClustered, Problem::Cvrp);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"x-rc\"") && json.contains("\"unitary\""));
        let back: DistributionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!("x-rc".parse::<Distribution>().unwrap(), Distribution::XRandomClustered);
    }
}
