//! Adapters for externally installed LKH-3 (TSP) and HGS-CVRP binaries.
//!
//! Both communicate only through files in a private scratch directory and a
//! child process, so nothing here links against either solver.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::tsplib::{export_tsplib, DEFAULT_SCALE};
use crate::error::{Error, Result};
use crate::model::{check_feasible, Instance, Problem, Solution};

pub const LKH_ENV: &str = "BASENODE_LKH";
pub const HGS_ENV: &str = "BASENODE_HGS";

const LKH_NAMES: &[&str] = &["LKH", "LKH-3", "lkh", "lkh3"];
const HGS_NAMES: &[&str] = &["hgs", "HGS-CVRP", "hgs-cvrp", "genvrp"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalSolver {
    Lkh,
    Hgs,
}

impl ExternalSolver {
    fn env(self) -> &'static str {
        match self {
            ExternalSolver::Lkh => LKH_ENV,
            ExternalSolver::Hgs => HGS_ENV,
        }
    }

    fn names(self) -> &'static [&'static str] {
        match self {
            ExternalSolver::Lkh => LKH_NAMES,
            ExternalSolver::Hgs => HGS_NAMES,
        }
    }
}

impl std::str::FromStr for ExternalSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lkh" | "lkh3" => Ok(ExternalSolver::Lkh),
            "hgs" => Ok(ExternalSolver::Hgs),
            other => Err(Error::InvalidConfig(format!("unknown external solver `{other}`"))),
        }
    }
}

/// Where to find the binaries and where to put scratch files. Unset paths
/// fall back to the environment variables, then to a `PATH` search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalConfig {
    pub lkh: Option<PathBuf>,
    pub hgs: Option<PathBuf>,
    pub scratch: Option<PathBuf>,
    pub seed: u64,
}

/// Locates the binary for `solver`.
pub fn find_binary(solver: ExternalSolver, config: &ExternalConfig) -> Result<PathBuf> {
    let configured = match solver {
        ExternalSolver::Lkh => config.lkh.clone(),
        ExternalSolver::Hgs => config.hgs.clone(),
    };
    if let Some(p) = configured.or_else(|| std::env::var_os(solver.env()).map(PathBuf::from)) {
        return if p.is_file() {
            Ok(p)
        } else {
            which::which(&p).map_err(|_| Error::BinaryNotFound(p.display().to_string()))
        };
    }
    solver
        .names()
        .iter()
        .find_map(|name| which::which(name).ok())
        .ok_or_else(|| Error::BinaryNotFound(solver.names().join(" / ")))
}

/// Worst-case difference between the full-precision length of a tour with
/// `edges` edges and its scaled EUC_2D length divided by `scale`: each
/// endpoint moves by at most `sqrt(2)/2` when rounded, and each edge length
/// is rounded to the nearest integer.
pub fn rounding_bound(edges: usize, scale: i64) -> f64 {
    edges as f64 * (std::f64::consts::SQRT_2 + 0.5) / scale as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalRun {
    /// Feasible solution with full-precision unit-square cost.
    pub solution: Solution,
    /// Cost the solver reported, divided by the export scale.
    pub reported_cost: Option<f64>,
    pub output: String,
}

fn scratch_dir(config: &ExternalConfig) -> Result<tempfile::TempDir> {
    let mut b = tempfile::Builder::new();
    b.prefix("basenode-");
    match &config.scratch {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            b.tempdir_in(dir).map_err(|e| Error::io(dir, e))
        }
        None => b.tempdir().map_err(|e| Error::io(std::env::temp_dir(), e)),
    }
}

/// Runs `cmd`, killing it if it outlives `limit`. Returns combined output.
fn run_with_limit(mut cmd: Command, limit: Duration) -> Result<(bool, String)> {
    let program = format!("{:?}", cmd.get_program());
    let mut child = cmd
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::io(program.clone(), e))?;
    let drain = |pipe: Option<Box<dyn std::io::Read + Send>>| {
        std::thread::spawn(move || {
            let mut text = String::new();
            if let Some(mut p) = pipe {
                let _ = p.read_to_string(&mut text);
            }
            text
        })
    };
    let stdout = drain(child.stdout.take().map(|s| Box::new(s) as Box<dyn std::io::Read + Send>));
    let stderr = drain(child.stderr.take().map(|s| Box::new(s) as Box<dyn std::io::Read + Send>));
    let start = Instant::now();
    loop {
        if let Some(status) = child.try_wait().map_err(|e| Error::io(program.clone(), e))? {
            let mut output = stdout.join().unwrap_or_default();
            output.push_str(&stderr.join().unwrap_or_default());
            return Ok((status.success(), output));
        }
        if start.elapsed() > limit {
            let _ = child.kill();
            let _ = child.wait();
            // Readers are left detached: orphaned grandchildren may keep the pipes open.
            return Err(Error::ParseError { message: format!("{program} exceeded {limit:?}"), output: String::new() });
        }
        std::thread::sleep(Duration::from_millis(5));
    }
}

fn hard_limit(budget: f64) -> Duration {
    Duration::from_secs_f64(budget * 3.0 + 10.0)
}

fn validated(instance: &Instance, solution: Solution) -> Result<Solution> {
    let v = check_feasible(instance, &solution).map_err(|e| Error::InfeasibleExternalSolution(e.to_string()))?;
    if !v.is_empty() {
        let text: Vec<String> = v.iter().map(ToString::to_string).collect();
        return Err(Error::InfeasibleExternalSolution(text.join("; ")));
    }
    Ok(solution)
}

/// Solves a TSP instance with LKH-3 under a `TIME_LIMIT` of `budget` seconds.
pub fn run_lkh(instance: &Instance, budget: f64, config: &ExternalConfig) -> Result<ExternalRun> {
    if instance.problem != Problem::Tsp {
        return Err(Error::WrongProblemClass { expected: Problem::Tsp });
    }
    let binary = find_binary(ExternalSolver::Lkh, config)?;
    let dir = scratch_dir(config)?;
    let problem = dir.path().join("instance.tsp");
    let params = dir.path().join("params.par");
    let tour = dir.path().join("result.tour");
    fs::write(&problem, export_tsplib(instance, DEFAULT_SCALE)).map_err(|e| Error::io(&problem, e))?;
    let par = format!(
        "PROBLEM_FILE = {}\nOUTPUT_TOUR_FILE = {}\nRUNS = 1\nSEED = {}\nTIME_LIMIT = {budget}\nTRACE_LEVEL = 0\n",
        problem.display(),
        tour.display(),
        config.seed.max(1),
    );
    fs::write(&params, par).map_err(|e| Error::io(&params, e))?;
    let mut cmd = Command::new(&binary);
    cmd.arg(&params).current_dir(dir.path());
    let (ok, output) = run_with_limit(cmd, hard_limit(budget))?;
    if !ok {
        return Err(Error::ParseError { message: format!("{} exited with failure", binary.display()), output });
    }
    let text = fs::read_to_string(&tour)
        .map_err(|_| Error::ParseError { message: "no tour file written".into(), output: output.clone() })?;
    let (order, length) = parse_lkh_tour(&text, instance.nodes.len())
        .map_err(|message| Error::ParseError { message, output: format!("{output}\n{text}") })?;
    let solution = validated(instance, Solution::tour(instance, order))?;
    Ok(ExternalRun { solution, reported_cost: length.map(|l| l / DEFAULT_SCALE as f64), output })
}

/// Parses a TSPLIB tour file into 0-based positions and the optional
/// `Length = ...` comment.
fn parse_lkh_tour(text: &str, n: usize) -> std::result::Result<(Vec<usize>, Option<f64>), String> {
    let mut length = None;
    let mut order = Vec::with_capacity(n);
    let mut in_tour = false;
    for line in text.lines().map(str::trim) {
        if in_tour {
            if line == "-1" || line == "EOF" {
                break;
            }
            for tok in line.split_whitespace() {
                let id: usize = tok.parse().map_err(|_| format!("bad tour entry `{tok}`"))?;
                if id == 0 || id > n {
                    return Err(format!("tour entry {id} out of range 1..={n}"));
                }
                order.push(id - 1);
            }
        } else if line == "TOUR_SECTION" {
            in_tour = true;
        } else if let Some(rest) = line.strip_prefix("COMMENT") {
            if let Some(v) = rest.split("Length =").nth(1) {
                length = v.split_whitespace().next().and_then(|t| t.parse().ok());
            }
        }
    }
    if !in_tour {
        return Err("missing TOUR_SECTION".into());
    }
    Ok((order, length))
}

/// Solves a CVRP instance with HGS-CVRP under `-t budget`.
pub fn run_hgs(instance: &Instance, budget: f64, config: &ExternalConfig) -> Result<ExternalRun> {
    if instance.problem != Problem::Cvrp {
        return Err(Error::WrongProblemClass { expected: Problem::Cvrp });
    }
    let binary = find_binary(ExternalSolver::Hgs, config)?;
    let dir = scratch_dir(config)?;
    let problem = dir.path().join("instance.vrp");
    let sol = dir.path().join("result.sol");
    fs::write(&problem, export_tsplib(instance, DEFAULT_SCALE)).map_err(|e| Error::io(&problem, e))?;
    let mut cmd = Command::new(&binary);
    cmd.arg(&problem)
        .arg(&sol)
        .arg("-t")
        .arg(format!("{budget}"))
        .arg("-seed")
        .arg(config.seed.to_string())
        .arg("-round")
        .arg("1")
        .current_dir(dir.path());
    let (ok, output) = run_with_limit(cmd, hard_limit(budget))?;
    if !ok {
        return Err(Error::ParseError { message: format!("{} exited with failure", binary.display()), output });
    }
    let text = fs::read_to_string(&sol)
        .map_err(|_| Error::ParseError { message: "no solution file written".into(), output: output.clone() })?;
    let (routes, cost) = parse_hgs_solution(&text, instance.nodes.len())
        .map_err(|message| Error::ParseError { message, output: format!("{output}\n{text}") })?;
    let solution = validated(instance, Solution::from_customer_routes(instance, &routes))?;
    Ok(ExternalRun { solution, reported_cost: cost.map(|c| c / DEFAULT_SCALE as f64), output })
}

/// Parses `Route #k: a b c` lines (customer indices with the depot as 0) and
/// the trailing `Cost X` line.
fn parse_hgs_solution(text: &str, n: usize) -> std::result::Result<(Vec<Vec<usize>>, Option<f64>), String> {
    let mut routes = Vec::new();
    let mut cost = None;
    for line in text.lines().map(str::trim) {
        if let Some(rest) = line.strip_prefix("Route") {
            let (_, body) = rest.split_once(':').ok_or_else(|| format!("malformed route line `{line}`"))?;
            let route = body
                .split_whitespace()
                .map(|t| {
                    let v: usize = t.parse().map_err(|_| format!("bad customer `{t}`"))?;
                    if v == 0 || v >= n {
                        return Err(format!("customer {v} out of range 1..{n}"));
                    }
                    Ok(v)
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            routes.push(route);
        } else if let Some(rest) = line.strip_prefix("Cost") {
            cost = rest.trim().parse().ok();
        }
    }
    if routes.is_empty() && n > 1 {
        return Err("no routes found".into());
    }
    Ok((routes, cost))
}

/// Dispatches to [`run_lkh`] or [`run_hgs`] and returns the solution only.
pub fn run_external(solver: ExternalSolver, instance: &Instance, budget: f64, config: &ExternalConfig) -> Result<Solution> {
    let run = match solver {
        ExternalSolver::Lkh => run_lkh(instance, budget, config)?,
        ExternalSolver::Hgs => run_hgs(instance, budget, config)?,
    };
    Ok(run.solution)
}
