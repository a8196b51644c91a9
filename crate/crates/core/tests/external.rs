//! LKH / HGS adapters driven by small shell-script stand-ins.
#![cfg(unix)]

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use basenode::bench::{self, BenchmarkPlan, Contender};
use basenode::gen::{Distribution, DistributionSpec};
use basenode::interop::{self, ExternalConfig, ExternalSolver};
use basenode::model::{check_feasible, evaluate, Instance, Problem};
use basenode::solve::{exact_tsp, Algorithm};
use basenode::subsample::{build_base, make_test, Dataset};
use basenode::Error;

/// Writes the identity tour for whatever instance the parameter file names.
const FAKE_LKH: &str = r#"#!/bin/sh
problem=$(sed -n 's/^PROBLEM_FILE = //p' "$1")
tour=$(sed -n 's/^OUTPUT_TOUR_FILE = //p' "$1")
dim=$(sed -n 's/^DIMENSION : //p' "$problem")
{
  echo "NAME : fake"
  echo "COMMENT : Length = 1000"
  echo "TYPE : TOUR"
  echo "DIMENSION : $dim"
  echo "TOUR_SECTION"
  seq 1 "$dim"
  echo "-1"
  echo "EOF"
} > "$tour"
echo "fake lkh done"
"#;

/// One route per customer, always feasible.
const FAKE_HGS: &str = r#"#!/bin/sh
dim=$(sed -n 's/^DIMENSION : //p' "$1")
k=1
: > "$2"
while [ "$k" -lt "$dim" ]; do
  echo "Route #$k: $k" >> "$2"
  k=$((k + 1))
done
echo "Cost 42" >> "$2"
"#;

/// Visits customer 1 twice and never visits the others.
const BAD_HGS: &str = r#"#!/bin/sh
printf 'Route #1: 1 1\nCost 1\n' > "$2"
"#;

const FAILING: &str = "#!/bin/sh\necho 'license expired' >&2\nexit 3\n";

const HANGING: &str = "#!/bin/sh\nexec sleep 60\n";

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn dataset(problem: Problem, n: usize, length: usize) -> Dataset {
    let tag = match problem {
        Problem::Tsp => Distribution::Uniform,
        Problem::Cvrp => Distribution::XRandomClustered,
    };
    let base = build_base(&DistributionSpec::standard(tag, problem), 1000, 4).unwrap();
    make_test(&base, n, 5, length).unwrap()
}

fn feasible(inst: &Instance, sol: &basenode::Solution) -> bool {
    check_feasible(inst, sol).unwrap().is_empty()
}

#[test]
fn lkh_adapter_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExternalConfig { lkh: Some(script(dir.path(), "lkh", FAKE_LKH)), ..Default::default() };
    for inst in &dataset(Problem::Tsp, 10, 5).instances {
        let run = interop::run_lkh(inst, 0.5, &config).unwrap();
        assert!(feasible(inst, &run.solution));
        assert_eq!(run.reported_cost, Some(1000.0 / interop::DEFAULT_SCALE as f64));
        assert!(run.output.contains("fake lkh done"));
        let opt = evaluate(inst, &exact_tsp(inst).unwrap()).unwrap();
        assert!(evaluate(inst, &run.solution).unwrap() >= opt - 1e-12);
    }
}

#[test]
fn hgs_adapter_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExternalConfig { hgs: Some(script(dir.path(), "hgs", FAKE_HGS)), ..Default::default() };
    for inst in &dataset(Problem::Cvrp, 30, 4).instances {
        let sol = interop::run_external(ExternalSolver::Hgs, inst, 0.5, &config).unwrap();
        assert!(feasible(inst, &sol));
    }
}

#[test]
fn adapters_check_problem_class() {
    let config = ExternalConfig::default();
    let tsp = &dataset(Problem::Tsp, 5, 1).instances[0];
    let cvrp = &dataset(Problem::Cvrp, 5, 1).instances[0];
    assert!(matches!(interop::run_hgs(tsp, 1.0, &config), Err(Error::WrongProblemClass { .. })));
    assert!(matches!(interop::run_lkh(cvrp, 1.0, &config), Err(Error::WrongProblemClass { .. })));
}

#[test]
fn infeasible_output_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExternalConfig { hgs: Some(script(dir.path(), "hgs", BAD_HGS)), ..Default::default() };
    let inst = &dataset(Problem::Cvrp, 8, 1).instances[0];
    let err = interop::run_hgs(inst, 0.5, &config).unwrap_err();
    assert!(matches!(err, Error::InfeasibleExternalSolution(_)), "{err}");
}

#[test]
fn failing_binary_reports_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExternalConfig { lkh: Some(script(dir.path(), "lkh", FAILING)), ..Default::default() };
    let inst = &dataset(Problem::Tsp, 6, 1).instances[0];
    match interop::run_lkh(inst, 0.5, &config) {
        Err(Error::ParseError { output, .. }) => assert!(output.contains("license expired")),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn hanging_binary_is_killed() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExternalConfig { hgs: Some(script(dir.path(), "hgs", HANGING)), ..Default::default() };
    let inst = &dataset(Problem::Cvrp, 6, 1).instances[0];
    let started = std::time::Instant::now();
    let err = interop::run_hgs(inst, 0.01, &config).unwrap_err();
    assert!(matches!(err, Error::ParseError { .. }), "{err}");
    assert!(started.elapsed().as_secs_f64() < 20.0);
}

#[test]
fn scratch_directories_are_private_and_removed() {
    let dir = tempfile::tempdir().unwrap();
    let scratch = dir.path().join("scratch");
    let config = ExternalConfig {
        lkh: Some(script(dir.path(), "lkh", FAKE_LKH)),
        scratch: Some(scratch.clone()),
        ..Default::default()
    };
    let ds = dataset(Problem::Tsp, 8, 6);
    std::thread::scope(|s| {
        for inst in &ds.instances {
            let config = &config;
            s.spawn(move || assert!(interop::run_lkh(inst, 0.2, config).is_ok()));
        }
    });
    assert_eq!(std::fs::read_dir(&scratch).unwrap().count(), 0);
}

#[test]
fn benchmark_with_external_contender() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(Problem::Cvrp, 20, 3);
    let contenders = vec![
        Contender::external("HGS", ExternalSolver::Hgs),
        Contender::builtin("LS", Algorithm::CvrpLocalSearch, 1),
    ];
    let mut plan = BenchmarkPlan::new(contenders, vec![0.05], "HGS");
    plan.timed = false;
    plan.external.hgs = Some(script(dir.path(), "hgs", FAKE_HGS));
    let report = bench::run_benchmark(std::slice::from_ref(&ds), &plan).unwrap();
    assert!(report.is_complete());
    // one route per customer is a poor reference, so the builtin outperforms it
    let ls = report.cell(&ds.label(), "LS", 0.05).unwrap();
    assert!(ls.mean_gap.unwrap() < 0.0);

    plan.external.hgs = Some(dir.path().join("missing-hgs"));
    let report = bench::run_benchmark(std::slice::from_ref(&ds), &plan).unwrap();
    assert_eq!(report.failures().count(), 3);
    assert!(report.failures().all(|r| r.error.as_deref().unwrap_or("").contains("not found")));
    let table = bench::render_table(&report);
    assert!(table.contains(bench::MISSING), "{table}");
}
