use std::collections::HashSet;

use proptest::prelude::*;

use basenode::bench::{self, DatasetRef, RunRecord};
use basenode::gen::{self, DemandScheme, Distribution, DistributionSpec, XVariant};
use basenode::interop::{self, DEFAULT_SCALE};
use basenode::model::{check_feasible, evaluate, Instance, Problem, Solution};
use basenode::solve::{self, exact_cvrp, exact_tsp, Algorithm, SolverConfig};
use basenode::subsample::{build_base, make_test, subsample_instance, BaseNodeDistribution};

const TAGS: [Distribution; 5] = [
    Distribution::Uniform,
    Distribution::Explosion,
    Distribution::Rotation,
    Distribution::XClustered,
    Distribution::XRandomClustered,
];

fn any_tag() -> impl Strategy<Value = Distribution> {
    prop::sample::select(TAGS.to_vec())
}

fn any_problem() -> impl Strategy<Value = Problem> {
    prop::sample::select(vec![Problem::Tsp, Problem::Cvrp])
}

fn pool(tag: Distribution, problem: Problem, n_base: usize, seed: u64) -> BaseNodeDistribution {
    build_base(&DistributionSpec::standard(tag, problem), n_base, seed).unwrap()
}

fn tight_cvrp_pool(n_base: usize, capacity: u32, seed: u64) -> BaseNodeDistribution {
    let mut spec = DistributionSpec::standard(Distribution::Uniform, Problem::Cvrp);
    spec.params.capacity = Some(capacity);
    build_base(&spec, n_base, seed).unwrap()
}

fn feasible(inst: &Instance, sol: &Solution) -> bool {
    check_feasible(inst, sol).map(|v| v.is_empty()).unwrap_or(false)
}

fn algorithms(problem: Problem) -> &'static [Algorithm] {
    match problem {
        Problem::Tsp => &[Algorithm::NearestNeighbor, Algorithm::TwoOpt, Algorithm::OrOpt, Algorithm::SimulatedAnnealing],
        Problem::Cvrp => &[Algorithm::Savings, Algorithm::CvrpLocalSearch, Algorithm::SimulatedAnnealing],
    }
}

/// A generous wall-clock budget with a small iteration cap, so runs are
/// short and fully reproducible.
fn capped(algorithm: Algorithm, seed: u64, cap: u64) -> SolverConfig {
    let mut c = SolverConfig::new(algorithm, 60.0, seed);
    c.max_iterations = Some(cap);
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samplers_are_pure(tag in any_tag(), count in 2usize..400, seed in any::<u64>()) {
        let spec = DistributionSpec::standard(tag, Problem::Tsp);
        let a = gen::sample_coords(&spec, count, seed).unwrap();
        let b = gen::sample_coords(&spec, count, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn explosion_leaves_hole(count in 1usize..3000, seed in any::<u64>()) {
        let params = DistributionSpec::standard(Distribution::Explosion, Problem::Tsp).params;
        let s = gen::sample_explosion(count, seed, &params).unwrap();
        let min = s.nodes.iter().map(|v| ((v.x - 0.5).powi(2) + (v.y - 0.5).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
        prop_assert!(min >= params.explosion_radius * (1.0 - 1e-9));
        prop_assert!(s.nodes.iter().all(|v| (0.0..=1.0).contains(&v.x) && (0.0..=1.0).contains(&v.y)));
    }

    #[test]
    fn x_coordinates_are_grid_values(count in 2usize..600, seed in any::<u64>(), rc in any::<bool>()) {
        let variant = if rc { XVariant::RandomClustered } else { XVariant::Clustered };
        let params = DistributionSpec::standard(Distribution::XClustered, Problem::Tsp).params;
        let s = gen::sample_x(count, variant, seed, &params).unwrap();
        for v in &s.nodes {
            for c in [v.x, v.y] {
                let g = (c * 999.0).round();
                prop_assert!((0.0..=999.0).contains(&g));
                prop_assert_eq!(c, gen::grid_to_unit(g as u32));
            }
        }
    }

    #[test]
    fn demands_stay_in_range(count in 1usize..2000, seed in any::<u64>()) {
        let d = gen::sample_demands(count, DemandScheme::Uniform1To9, seed).unwrap();
        prop_assert!(d.iter().all(|&q| (1..=9).contains(&q)));
        let u = gen::sample_demands(count, DemandScheme::Unitary, seed).unwrap();
        prop_assert!(u.iter().all(|&q| q == 1));
    }

    #[test]
    fn subsamples_are_distinct_and_anchored(
        tag in any_tag(),
        problem in any_problem(),
        n_base in 2usize..300,
        frac in 0.0f64..1.0,
        seed in any::<u64>(),
        index in any::<u64>(),
    ) {
        let base = pool(tag, problem, n_base, seed);
        let n = 1 + ((n_base - 1) as f64 * frac) as usize;
        let inst = subsample_instance(&base, n, seed ^ 0x55, index).unwrap();
        let ids: HashSet<u32> = inst.nodes[inst.customers()].iter().map(|v| v.id).collect();
        prop_assert_eq!(ids.len(), n);
        prop_assert!(ids.iter().all(|&id| id >= 1 && id as usize <= n_base));
        if problem == Problem::Cvrp {
            let depot = base.depot.unwrap();
            prop_assert_eq!(inst.nodes[0], depot);
            prop_assert_eq!(inst.nodes[0].demand, 0);
        }
        let too_big = subsample_instance(&base, n_base + 1, seed, index);
        let exceeded = matches!(too_big, Err(basenode::Error::SizeExceedsBase { .. }));
        prop_assert!(exceeded);
    }

    #[test]
    fn sibling_instances_are_independent(seed in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assume!(a != b);
        let base = pool(Distribution::Uniform, Problem::Tsp, 500, 1);
        let x = subsample_instance(&base, 100, seed, a).unwrap();
        let y = subsample_instance(&base, 100, seed, b).unwrap();
        prop_assert_ne!(&x.nodes, &y.nodes);
        let again = subsample_instance(&base, 100, seed, a).unwrap();
        prop_assert_eq!(x, again);
    }

    #[test]
    fn traces_are_monotone_feasible_and_replayable(
        problem in any_problem(),
        n in 5usize..40,
        seed in any::<u64>(),
        cap in 50u64..3000,
    ) {
        let base = match problem {
            Problem::Tsp => pool(Distribution::Uniform, Problem::Tsp, 200, seed),
            Problem::Cvrp => tight_cvrp_pool(200, 20, seed),
        };
        let inst = subsample_instance(&base, n, seed, 0).unwrap();
        for &algorithm in algorithms(problem) {
            let config = capped(algorithm, seed, cap);
            let a = solve::solve(&inst, &config).unwrap();
            let b = solve::solve(&inst, &config).unwrap();
            prop_assert!(a.curve.windows(2).all(|w| w[1].cost <= w[0].cost), "{} curve rises", algorithm);
            prop_assert!(feasible(&inst, &a.best));
            let z = evaluate(&inst, &a.best).unwrap();
            prop_assert!((z - a.best.cost()).abs() <= 1e-9 * z.max(1.0));
            prop_assert_eq!(a.iteration_curve(), b.iteration_curve());
            prop_assert_eq!(&a.best, &b.best);
            prop_assert!(a.iterations <= cap);
        }
    }

    #[test]
    fn longer_replays_never_cost_more(n in 10usize..60, seed in any::<u64>(), k1 in 10u64..2000, extra in 0u64..4000) {
        let base = pool(Distribution::Uniform, Problem::Tsp, 300, seed);
        let inst = subsample_instance(&base, n, seed, 3).unwrap();
        let short = solve::solve(&inst, &capped(Algorithm::SimulatedAnnealing, seed, k1)).unwrap();
        let long = solve::solve(&inst, &capped(Algorithm::SimulatedAnnealing, seed, k1 + extra)).unwrap();
        prop_assert!(long.best.cost() <= short.best.cost());
    }

    #[test]
    fn tsplib_round_trip(problem in any_problem(), n in 1usize..80, seed in any::<u64>()) {
        let base = match problem {
            Problem::Tsp => pool(Distribution::Rotation, Problem::Tsp, 100, seed),
            Problem::Cvrp => pool(Distribution::XRandomClustered, Problem::Cvrp, 100, seed),
        };
        let inst = subsample_instance(&base, n, seed, 0).unwrap();
        let parsed = interop::parse_tsplib(&interop::export_tsplib(&inst, DEFAULT_SCALE)).unwrap();
        let back = parsed.to_instance(DEFAULT_SCALE).unwrap();
        prop_assert_eq!(back.nodes.len(), inst.nodes.len());
        prop_assert_eq!(back.capacity, inst.capacity);
        prop_assert_eq!(
            back.nodes.iter().map(|v| v.demand).collect::<Vec<_>>(),
            inst.nodes.iter().map(|v| v.demand).collect::<Vec<_>>()
        );
        for (a, b) in back.nodes.iter().zip(&inst.nodes) {
            prop_assert!((a.x - b.x).abs() <= 0.5 / DEFAULT_SCALE as f64 + 1e-15);
            prop_assert!((a.y - b.y).abs() <= 0.5 / DEFAULT_SCALE as f64 + 1e-15);
        }
    }

    #[test]
    fn rescaled_integer_cost_within_bound(n in 3usize..100, seed in any::<u64>()) {
        let base = pool(Distribution::Uniform, Problem::Tsp, 1000, seed);
        let inst = subsample_instance(&base, n, seed, 0).unwrap();
        let tour = solve::solve(&inst, &capped(Algorithm::NearestNeighbor, seed, 1)).unwrap().best;
        let internal = evaluate(&inst, &tour).unwrap();
        let scale = DEFAULT_SCALE as f64;
        let parsed = interop::parse_tsplib(&interop::export_tsplib(&inst, DEFAULT_SCALE)).unwrap();
        let Solution::Tsp { tour: order, .. } = &tour else { unreachable!() };
        let external: f64 = (0..n)
            .map(|k| {
                let (a, b) = (parsed.coords[order[k]], parsed.coords[order[(k + 1) % n]]);
                let (dx, dy) = ((a.0 - b.0) as f64, (a.1 - b.1) as f64);
                (dx * dx + dy * dy).sqrt().round()
            })
            .sum::<f64>()
            / scale;
        prop_assert!((internal - external).abs() <= n as f64 * std::f64::consts::SQRT_2 / scale);
    }

    #[test]
    fn aggregation_ignores_record_order(costs in prop::collection::vec(0.5f64..2.0, 8), perm_seed in any::<u64>()) {
        let ds = make_test(&pool(Distribution::Uniform, Problem::Tsp, 50, 1), 10, 1, 4).unwrap();
        let refs = vec![DatasetRef::of(&ds)];
        let label = refs[0].label.clone();
        let mut records: Vec<RunRecord> = costs
            .iter()
            .enumerate()
            .map(|(k, &c)| RunRecord {
                dataset: label.clone(),
                instance: k % 4,
                solver: if k < 4 { "ref".into() } else { "other".into() },
                budget: 1.0,
                repeat: 0,
                seed: 0,
                cost: Some(c),
                wall_time: 0.5,
                iterations: 10,
                stopped_by: None,
                error: None,
                gap: Some(bench::gap(c, costs[k % 4]).unwrap()),
                gap_to_best: None,
            })
            .collect();
        let solvers = vec!["ref".to_string(), "other".to_string()];
        let before = bench::aggregate(&records, &refs, &solvers, &[1.0]);
        let mut state = perm_seed | 1;
        for i in (1..records.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            records.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let after = bench::aggregate(&records, &refs, &solvers, &[1.0]);
        prop_assert_eq!(before, after);
    }
}

/// check_feasible accepts every solver output over 10^4 instance/seed pairs.
#[test]
fn solver_outputs_always_feasible() {
    let tsp = pool(Distribution::Explosion, Problem::Tsp, 400, 5);
    let cvrp = tight_cvrp_pool(400, 25, 6);
    let mut pairs = 0;
    for i in 0..1500u64 {
        for (base, problem) in [(&tsp, Problem::Tsp), (&cvrp, Problem::Cvrp)] {
            let n = 2 + (i as usize * 31) % 30;
            let inst = subsample_instance(base, n, 100 + i, i).unwrap();
            for &algorithm in algorithms(problem) {
                let trace = solve::solve(&inst, &capped(algorithm, i, 200)).unwrap();
                assert!(feasible(&inst, &trace.best), "{algorithm} on case {i} ({problem}, n={n})");
                pairs += 1;
            }
        }
    }
    assert!(pairs >= 10_000, "{pairs} pairs");
}

/// No heuristic beats the exact oracle on oracle-sized instances.
#[test]
fn heuristics_never_beat_oracles() {
    let tsp = pool(Distribution::XClustered, Problem::Tsp, 500, 8);
    let cvrp = tight_cvrp_pool(500, 12, 9);
    for i in 0..1000u64 {
        let (base, problem, n) = if i % 2 == 0 { (&tsp, Problem::Tsp, 3 + (i as usize % 7)) } else { (&cvrp, Problem::Cvrp, 2 + (i as usize % 6)) };
        let inst = subsample_instance(base, n, 7 + i, i).unwrap();
        let exact = match problem {
            Problem::Tsp => exact_tsp(&inst).unwrap(),
            Problem::Cvrp => exact_cvrp(&inst).unwrap(),
        };
        let opt = evaluate(&inst, &exact).unwrap();
        for &algorithm in algorithms(problem) {
            let z = evaluate(&inst, &solve::solve(&inst, &capped(algorithm, i, 500)).unwrap().best).unwrap();
            assert!(z >= opt - 1e-9 * opt.max(1.0), "{algorithm} beat the oracle on case {i}: {z} < {opt}");
        }
    }
}
