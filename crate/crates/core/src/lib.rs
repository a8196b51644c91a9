//! Base node distributions for routing benchmarks.
//!
//! A *base node distribution* is a large seeded pool of nodes drawn once from
//! an underlying law (uniform, explosion, rotation or the clustered X grid).
//! TSP and CVRP instances are formed by subsampling customers from the pool,
//! so nodes recur across instances and datasets carry planted structure.
//!
//! The crate covers the whole pipeline:
//!
//! - [`gen`]: pool samplers and distribution specs
//! - [`subsample`]: pools, test/train/epoch datasets and the seed registry
//! - [`solve`]: anytime heuristics (local search, simulated annealing) and exact oracles
//! - [`bench`]: per-instance gap benchmarks under wall-clock budgets
//! - [`interop`]: checksummed files, TSPLIB export, LKH-3 and HGS adapters
//! - [`plot`]: SVG scatter plots
//!
//! ```
//! use basenode::gen::{Distribution, DistributionSpec};
//! use basenode::model::Problem;
//! use basenode::subsample::{build_base, make_test};
//!
//! let spec = DistributionSpec::standard(Distribution::Uniform, Problem::Tsp);
//! let pool = build_base(&spec, 200, 7).unwrap();
//! let test = make_test(&pool, 20, 1, 4).unwrap();
//! assert_eq!(test.len(), 4);
//! assert_eq!(test.instances[0].size(), 20);
//! ```

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod gen;
pub mod interop;
pub mod model;
pub mod plot;
pub mod seed;
pub mod solve;
pub mod subsample;

pub use error::{Error, Result};
pub use model::{evaluate, check_feasible, Instance, Node, Problem, Solution};
