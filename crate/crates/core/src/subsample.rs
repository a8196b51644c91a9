//! Base node distributions and the datasets subsampled from them.
//!
//! A pool of `n_base` customers (plus a depot for CVRP) is drawn once from an
//! underlying distribution. Instances are formed by drawing `n` distinct
//! customers uniformly without replacement; the CVRP depot is always placed at
//! position 0. Each instance has its own addressable seed substream:
//!
//! | dataset role | substream                          |
//! |--------------|------------------------------------|
//! | test         | `(seed, TEST, [index])`            |
//! | train        | `(seed, TRAIN, [index])`           |
//! | epoch        | `(seed, EPOCH, [epoch, index])`    |

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gen::{self, DistributionSpec, SamplerMeta};
use crate::model::{check_feasible, evaluate, Instance, Node, Problem, Provenance, Solution};
use crate::seed::{self, tag};

/// Default test set length.
pub const DEFAULT_TEST_LEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseNodeDistribution {
    pub base_id: String,
    pub spec: DistributionSpec,
    pub n_base: usize,
    pub master_seed: u64,
    /// Customers, ids `1..=n_base`.
    pub nodes: Vec<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depot: Option<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
    #[serde(default)]
    pub meta: SamplerMeta,
}

impl BaseNodeDistribution {
    pub fn problem(&self) -> Problem {
        self.spec.problem()
    }

    /// Table-style name such as `G_10k^Unif`.
    pub fn label(&self) -> String {
        dataset_label(self.n_base, &self.spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        if self.nodes.len() != self.n_base {
            return bad(format!("pool holds {} nodes, expected {}", self.nodes.len(), self.n_base));
        }
        if self.base_id != base_id(&self.spec, self.n_base, self.master_seed) {
            return bad("base_id does not match (spec, n_base, master_seed)".into());
        }
        match (self.problem(), &self.depot, self.capacity) {
            (Problem::Tsp, None, None) | (Problem::Cvrp, Some(_), Some(_)) => Ok(()),
            _ => bad("depot/capacity inconsistent with problem class".into()),
        }
    }
}

pub fn dataset_label(n_base: usize, spec: &DistributionSpec) -> String {
    let size = if n_base >= 1000 && n_base % 1000 == 0 {
        format!("{}k", n_base / 1000)
    } else {
        n_base.to_string()
    };
    format!("G_{size}^{}", spec.tag.short_label())
}

/// Deterministic digest of the pool-defining triple.
pub fn base_id(spec: &DistributionSpec, n_base: usize, master_seed: u64) -> String {
    #[derive(Serialize)]
    struct Key<'a> {
        spec: &'a DistributionSpec,
        n_base: usize,
        master_seed: u64,
    }
    let bytes = serde_json::to_vec(&Key { spec, n_base, master_seed }).expect("spec serializes");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

/// Draws a pool of `n_base` customers (plus depot and capacity for CVRP).
pub fn build_base(spec: &DistributionSpec, n_base: usize, master_seed: u64) -> Result<BaseNodeDistribution> {
    spec.validate()?;
    if n_base < 2 {
        return Err(Error::InvalidCount(n_base, "n_base must be at least 2"));
    }
    let sampled = gen::sample_coords(spec, n_base, master_seed)?;
    let demands = gen::sample_demands(n_base, spec.demand_scheme, master_seed)?;
    let nodes = sampled
        .nodes
        .into_iter()
        .zip(demands)
        .map(|(node, demand)| Node { demand, ..node })
        .collect();
    let depot = match spec.problem() {
        Problem::Tsp => None,
        Problem::Cvrp => Some(gen::sample_depot(spec, master_seed)?),
    };
    Ok(BaseNodeDistribution {
        base_id: base_id(spec, n_base, master_seed),
        spec: spec.clone(),
        n_base,
        master_seed,
        nodes,
        depot,
        capacity: spec.capacity(),
        meta: sampled.meta,
    })
}

/// Which substream an instance is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    pub seed: u64,
    pub purpose: Purpose,
    pub epoch: Option<u64>,
    pub index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Train,
    Test,
    Epoch,
}

impl std::fmt::Display for Purpose {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Purpose::Train => "train",
            Purpose::Test => "test",
            Purpose::Epoch => "epoch",
        })
    }
}

impl std::str::FromStr for Purpose {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Purpose::Train),
            "test" => Ok(Purpose::Test),
            "epoch" => Ok(Purpose::Epoch),
            other => Err(Error::InvalidSpec(format!("unknown dataset role `{other}`"))),
        }
    }
}

impl Stream {
    fn seed_value(&self) -> u64 {
        match self.purpose {
            Purpose::Test => seed::derive(self.seed, tag::TEST, &[self.index]),
            Purpose::Train => seed::derive(self.seed, tag::TRAIN, &[self.index]),
            Purpose::Epoch => seed::derive(self.seed, tag::EPOCH, &[self.epoch.unwrap_or(0), self.index]),
        }
    }
}

/// Draws one instance of `n` customers from `base` under `stream`.
pub fn draw_instance(base: &BaseNodeDistribution, n: usize, stream: Stream) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidCount(0, "instance size must be at least 1"));
    }
    if n > base.n_base {
        return Err(Error::SizeExceedsBase { n, n_base: base.n_base });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream.seed_value());
    let picked = index::sample(&mut rng, base.n_base, n);
    let mut nodes = Vec::with_capacity(n + 1);
    if let Some(depot) = base.depot {
        nodes.push(depot);
    }
    nodes.extend(picked.iter().map(|i| base.nodes[i]));
    Ok(Instance {
        problem: base.problem(),
        nodes,
        capacity: base.capacity,
        provenance: Provenance {
            base_id: base.base_id.clone(),
            distribution: base.spec.tag.to_string(),
            sample_seed: stream.seed,
            epoch: stream.epoch,
            index: stream.index,
        },
    })
}

/// Instance `index` of the stream keyed by `sample_seed` (the test stream).
pub fn subsample_instance(base: &BaseNodeDistribution, n: usize, sample_seed: u64, index: u64) -> Result<Instance> {
    draw_instance(base, n, Stream { seed: sample_seed, purpose: Purpose::Test, epoch: None, index })
}

/// Instance `index` of epoch `epoch` under `train_seed`.
pub fn subsample_epoch_instance(
    base: &BaseNodeDistribution,
    n: usize,
    train_seed: u64,
    epoch: u64,
    index: u64,
) -> Result<Instance> {
    draw_instance(base, n, Stream { seed: train_seed, purpose: Purpose::Epoch, epoch: Some(epoch), index })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub role: Purpose,
    pub base_id: String,
    pub spec: DistributionSpec,
    pub n_base: usize,
    pub n: usize,
    pub sample_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
    pub instances: Vec<Instance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Solution>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn problem(&self) -> Problem {
        self.spec.problem()
    }

    /// Table-style name with problem class, e.g. `G_200^X (cvrp)`.
    pub fn label(&self) -> String {
        format!("{} ({})", dataset_label(self.n_base, &self.spec), self.problem())
    }
}

fn collect(
    base: &BaseNodeDistribution,
    n: usize,
    role: Purpose,
    seed: u64,
    epoch: Option<u64>,
    len: usize,
) -> Result<Dataset> {
    if n == 0 || n > base.n_base {
        return Err(Error::SizeExceedsBase { n, n_base: base.n_base });
    }
    let instances = (0..len as u64)
        .map(|index| draw_instance(base, n, Stream { seed, purpose: role, epoch, index }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        role,
        base_id: base.base_id.clone(),
        spec: base.spec.clone(),
        n_base: base.n_base,
        n,
        sample_seed: seed,
        epoch,
        instances,
        labels: None,
    })
}

/// Test set of `l_test` instances (indices `0..l_test`) under `test_seed`.
pub fn make_test(base: &BaseNodeDistribution, n: usize, test_seed: u64, l_test: usize) -> Result<Dataset> {
    collect(base, n, Purpose::Test, test_seed, None, l_test)
}

/// A persisted training set; refused when `train_seed` is a registered test seed.
pub fn make_train(
    base: &BaseNodeDistribution,
    registry: &SeedRegistry,
    n: usize,
    train_seed: u64,
    l_train: usize,
) -> Result<Dataset> {
    registry.check_train(&base.base_id, train_seed)?;
    collect(base, n, Purpose::Train, train_seed, None, l_train)
}

/// Lazily generated instances of one training epoch.
pub fn epoch_stream<'a>(
    base: &'a BaseNodeDistribution,
    registry: &SeedRegistry,
    n: usize,
    train_seed: u64,
    epoch: u64,
    l_epoch: usize,
) -> Result<impl Iterator<Item = Result<Instance>> + 'a> {
    registry.check_train(&base.base_id, train_seed)?;
    if n == 0 || n > base.n_base {
        return Err(Error::SizeExceedsBase { n, n_base: base.n_base });
    }
    Ok((0..l_epoch as u64).map(move |index| subsample_epoch_instance(base, n, train_seed, epoch, index)))
}

/// Materialized epoch dataset (see [`epoch_stream`] for the streaming form).
pub fn make_epoch(
    base: &BaseNodeDistribution,
    registry: &SeedRegistry,
    n: usize,
    train_seed: u64,
    epoch: u64,
    l_epoch: usize,
) -> Result<Dataset> {
    registry.check_train(&base.base_id, train_seed)?;
    collect(base, n, Purpose::Epoch, train_seed, Some(epoch), l_epoch)
}

/// Attaches reference solutions after re-checking each against its instance.
/// Cached label costs are replaced by recomputed ones.
pub fn attach_labels(mut dataset: Dataset, solutions: Vec<Solution>) -> Result<Dataset> {
    if solutions.len() != dataset.len() {
        return Err(Error::LabelMismatch(format!(
            "{} labels for {} instances",
            solutions.len(),
            dataset.len()
        )));
    }
    let mut problems = Vec::new();
    let mut labels = Vec::with_capacity(solutions.len());
    for (i, (inst, mut sol)) in dataset.instances.iter().zip(solutions).enumerate() {
        match check_feasible(inst, &sol) {
            Ok(v) if v.is_empty() => {
                let z = evaluate(inst, &sol)?;
                match &mut sol {
                    Solution::Tsp { cost, .. } | Solution::Cvrp { cost, .. } => *cost = z,
                }
                labels.push(sol);
            }
            Ok(v) => problems.push(format!(
                "#{i}: {}",
                v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
            )),
            Err(e) => problems.push(format!("#{i}: {e}")),
        }
    }
    if !problems.is_empty() {
        return Err(Error::LabelMismatch(problems.join(", ")));
    }
    dataset.labels = Some(labels);
    Ok(dataset)
}

/// Records which seeds were used for test and train sets of each pool, and
/// refuses to reuse a test seed for training (or vice versa).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedRegistry {
    #[serde(default)]
    pub test: BTreeMap<String, BTreeSet<u64>>,
    #[serde(default)]
    pub train: BTreeMap<String, BTreeSet<u64>>,
}

impl SeedRegistry {
    pub fn check_train(&self, base_id: &str, seed: u64) -> Result<()> {
        if self.test.get(base_id).is_some_and(|s| s.contains(&seed)) {
            return Err(Error::SeedCollision { base_id: base_id.to_string(), seed });
        }
        Ok(())
    }

    pub fn register_test(&mut self, base_id: &str, seed: u64) -> Result<()> {
        if self.train.get(base_id).is_some_and(|s| s.contains(&seed)) {
            return Err(Error::SeedCollision { base_id: base_id.to_string(), seed });
        }
        self.test.entry(base_id.to_string()).or_default().insert(seed);
        Ok(())
    }

    pub fn register_train(&mut self, base_id: &str, seed: u64) -> Result<()> {
        self.check_train(base_id, seed)?;
        self.train.entry(base_id.to_string()).or_default().insert(seed);
        Ok(())
    }

    /// Registers `test_seed` and returns the test set.
    pub fn mint_test(
        &mut self,
        base: &BaseNodeDistribution,
        n: usize,
        test_seed: u64,
        l_test: usize,
    ) -> Result<Dataset> {
        let ds = make_test(base, n, test_seed, l_test)?;
        self.register_test(&base.base_id, test_seed)?;
        Ok(ds)
    }
}

/// Dense epoch batch: coordinates `(L, rows, 2)` and demands `(L, rows)`,
/// row 0 being the depot for CVRP.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochArrays {
    pub instances: usize,
    pub rows: usize,
    pub coords: Vec<f64>,
    pub demands: Vec<u32>,
    pub capacity: u32,
}

impl EpochArrays {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let rows = ds.n + usize::from(ds.problem() == Problem::Cvrp);
        let mut coords = Vec::with_capacity(ds.len() * rows * 2);
        let mut demands = Vec::with_capacity(ds.len() * rows);
        for inst in &ds.instances {
            for node in &inst.nodes {
                coords.push(node.x);
                coords.push(node.y);
                demands.push(node.demand);
            }
        }
        EpochArrays {
            instances: ds.len(),
            rows,
            coords,
            demands,
            capacity: ds.spec.capacity().unwrap_or(0),
        }
    }

    /// Little-endian coordinates followed by little-endian demands.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.coords.len() * 8 + self.demands.len() * 4);
        for v in &self.coords {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.demands {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::Distribution;

    fn pool(tag: Distribution, problem: Problem, n_base: usize) -> BaseNodeDistribution {
        build_base(&DistributionSpec::standard(tag, problem), n_base, 42).unwrap()
    }

    #[test]
    fn uniform_tsp_pool() {
        let p = pool(Distribution::Uniform, Problem::Tsp, 200);
        assert_eq!(p.nodes.len(), 200);
        assert!(p.depot.is_none() && p.capacity.is_none());
        assert!(p.nodes.iter().all(|n| n.demand == 0));
        p.validate().unwrap();
        assert_eq!(p.base_id, pool(Distribution::Uniform, Problem::Tsp, 200).base_id);
        assert_eq!(p.label(), "G_200^Unif");
    }

    #[test]
    fn base_id_depends_on_all_inputs() {
        let spec = DistributionSpec::standard(Distribution::Uniform, Problem::Tsp);
        let a = base_id(&spec, 200, 1);
        assert_ne!(a, base_id(&spec, 201, 1));
        assert_ne!(a, base_id(&spec, 200, 2));
        let cvrp = DistributionSpec::standard(Distribution::Uniform, Problem::Cvrp);
        assert_ne!(a, base_id(&cvrp, 200, 1));
    }

    #[test]
    fn rejects_tiny_pool() {
        let spec = DistributionSpec::standard(Distribution::Uniform, Problem::Tsp);
        assert!(matches!(build_base(&spec, 1, 0), Err(Error::InvalidCount(1, _))));
    }

    #[test]
    fn x_cvrp_pool_shape() {
        let p = pool(Distribution::XRandomClustered, Problem::Cvrp, 10_000);
        assert_eq!(p.nodes.len(), 10_000);
        assert_eq!(p.capacity, Some(25));
        assert!(p.nodes.iter().all(|n| n.demand == 1));
        assert_eq!(p.depot.unwrap().demand, 0);
        assert_eq!(p.label(), "G_10k^X");
    }

    #[test]
    fn exhaustive_draw() {
        let p = pool(Distribution::Uniform, Problem::Tsp, 50);
        let inst = subsample_instance(&p, 50, 3, 0).unwrap();
        let mut ids: Vec<u32> = inst.nodes.iter().map(|n| n.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (1..=50).collect::<Vec<_>>());
        assert!(matches!(subsample_instance(&p, 51, 3, 0), Err(Error::SizeExceedsBase { .. })));
    }

    #[test]
    fn cvrp_depot_first() {
        let p = pool(Distribution::Explosion, Problem::Cvrp, 200);
        for i in 0..50 {
            let inst = subsample_instance(&p, 100, 9, i).unwrap();
            assert_eq!(inst.nodes[0], p.depot.unwrap());
            assert_eq!(inst.nodes.len(), 101);
            assert_eq!(inst.capacity, Some(50));
            inst.validate().unwrap();
        }
    }

    #[test]
    fn test_set_composition() {
        let p = pool(Distribution::Rotation, Problem::Tsp, 200);
        let ds = make_test(&p, 100, 5, 1).unwrap();
        assert_eq!(ds.instances, vec![subsample_instance(&p, 100, 5, 0).unwrap()]);
        let full = make_test(&p, 100, 5, DEFAULT_TEST_LEN).unwrap();
        assert_eq!(full.len(), 128);
        assert_eq!(full.instances[0], ds.instances[0]);
    }

    #[test]
    fn epochs_differ_and_empty_epoch_ok() {
        let p = pool(Distribution::Uniform, Problem::Tsp, 200);
        let reg = SeedRegistry::default();
        let e0 = make_epoch(&p, &reg, 100, 1, 0, 4).unwrap();
        let e1 = make_epoch(&p, &reg, 100, 1, 1, 4).unwrap();
        assert_ne!(e0.instances, e1.instances);
        assert!(make_epoch(&p, &reg, 100, 1, 0, 0).unwrap().is_empty());
        let streamed: Vec<Instance> = epoch_stream(&p, &reg, 100, 1, 0, 4).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(streamed, e0.instances);
    }

    #[test]
    fn seed_registry_blocks_collisions() {
        let p = pool(Distribution::Uniform, Problem::Tsp, 200);
        let mut reg = SeedRegistry::default();
        reg.mint_test(&p, 100, 7, 2).unwrap();
        assert!(matches!(make_epoch(&p, &reg, 100, 7, 0, 2), Err(Error::SeedCollision { seed: 7, .. })));
        assert!(make_train(&p, &reg, 100, 7, 2).is_err());
        make_epoch(&p, &reg, 100, 8, 0, 2).unwrap();
        reg.register_train(&p.base_id, 8).unwrap();
        assert!(reg.register_test(&p.base_id, 8).is_err());
        // Other pools are unaffected.
        assert!(reg.check_train("other", 7).is_ok());
    }

    #[test]
    fn labels_checked() {
        let p = pool(Distribution::Uniform, Problem::Tsp, 20);
        let ds = make_test(&p, 5, 1, 2).unwrap();
        let good: Vec<Solution> = (0..ds.len())
            .map(|_| Solution::Tsp { tour: (0..5).collect(), cost: 0.0 })
            .collect();
        let labeled = attach_labels(ds.clone(), good.clone()).unwrap();
        let labels = labeled.labels.unwrap();
        assert!(labels[0].cost() > 0.0);
        let mut bad = good;
        bad[1] = Solution::Tsp { tour: vec![0, 1, 2, 3], cost: 1.0 };
        let err = attach_labels(ds.clone(), bad).unwrap_err().to_string();
        assert!(err.contains("#1"), "{err}");
        assert!(attach_labels(ds, vec![]).is_err());
    }

    #[test]
    fn epoch_arrays_layout() {
        let p = pool(Distribution::Uniform, Problem::Cvrp, 30);
        let reg = SeedRegistry::default();
        let ds = make_epoch(&p, &reg, 10, 3, 2, 4).unwrap();
        let arr = EpochArrays::from_dataset(&ds);
        assert_eq!(arr.rows, 11);
        assert_eq!(arr.coords.len(), 4 * 11 * 2);
        let depot = p.depot.unwrap();
        for i in 0..4 {
            assert_eq!(arr.coords[i * 22], depot.x);
            assert_eq!(arr.demands[i * 11], 0);
        }
        assert_eq!(arr.to_bytes().len(), 4 * 11 * 2 * 8 + 4 * 11 * 4);
    }

    #[test]
    fn inclusion_frequency_is_half() {
        let p = pool(Distribution::Uniform, Problem::Tsp, 200);
        let mut counts = vec![0u32; 201];
        let draws = 10_000;
        for i in 0..draws {
            for n in subsample_instance(&p, 100, 77, i).unwrap().nodes {
                counts[n.id as usize] += 1;
            }
        }
        for c in &counts[1..] {
            let f = *c as f64 / draws as f64;
            assert!((f - 0.5).abs() <= 0.02, "{f}");
        }
    }
}
