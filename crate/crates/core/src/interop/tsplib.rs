//! TSPLIB95 / CVRPLIB text export and a parser for the same dialect.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Instance, Node, Problem, Provenance};

/// Unit-square coordinates are multiplied by this before integer rounding.
pub const DEFAULT_SCALE: i64 = 1_000_000;

/// Writes `instance` as an EUC_2D document. Node `k` (0-based position) gets
/// TSPLIB id `k + 1`, so the CVRP depot is node 1.
pub fn export_tsplib(instance: &Instance, scale: i64) -> String {
    let n = instance.nodes.len();
    let mut out = String::new();
    let name = format!("basenode-{}-{}", instance.provenance.base_id, instance.provenance.index);
    let _ = writeln!(out, "NAME : {name}");
    let _ = writeln!(
        out,
        "COMMENT : {} sample_seed={} scale={scale}",
        instance.provenance.distribution, instance.provenance.sample_seed
    );
    let _ = writeln!(out, "TYPE : {}", match instance.problem {
        Problem::Tsp => "TSP",
        Problem::Cvrp => "CVRP",
    });
    let _ = writeln!(out, "DIMENSION : {n}");
    if instance.problem == Problem::Cvrp {
        let _ = writeln!(out, "CAPACITY : {}", instance.capacity());
    }
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EUC_2D");
    let _ = writeln!(out, "NODE_COORD_SECTION");
    let s = scale as f64;
    for (k, v) in instance.nodes.iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", k + 1, (v.x * s).round() as i64, (v.y * s).round() as i64);
    }
    if instance.problem == Problem::Cvrp {
        let _ = writeln!(out, "DEMAND_SECTION");
        for (k, v) in instance.nodes.iter().enumerate() {
            let _ = writeln!(out, "{} {}", k + 1, v.demand);
        }
        let _ = writeln!(out, "DEPOT_SECTION");
        let _ = writeln!(out, "1");
        let _ = writeln!(out, "-1");
    }
    let _ = writeln!(out, "EOF");
    out
}

/// Parsed TSPLIB document with integer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TsplibInstance {
    pub name: String,
    pub problem: Problem,
    pub dimension: usize,
    pub capacity: Option<u32>,
    pub coords: Vec<(i64, i64)>,
    pub demands: Vec<u32>,
    pub depot: Option<usize>,
}

impl TsplibInstance {
    /// Converts back to unit-square coordinates by dividing by `scale`.
    /// The depot, if any, is moved to position 0.
    pub fn to_instance(&self, scale: i64) -> Result<Instance> {
        let s = scale as f64;
        let mut order: Vec<usize> = (0..self.dimension).collect();
        if let Some(d) = self.depot {
            order.retain(|&k| k != d);
            order.insert(0, d);
        }
        let nodes = order
            .iter()
            .enumerate()
            .map(|(pos, &k)| {
                let (x, y) = self.coords[k];
                Node::new(pos as u32, x as f64 / s, y as f64 / s, self.demands.get(k).copied().unwrap_or(0))
            })
            .collect();
        let prov = Provenance {
            base_id: self.name.clone(),
            distribution: "tsplib".into(),
            sample_seed: 0,
            epoch: None,
            index: 0,
        };
        Instance::new(self.problem, nodes, self.capacity, prov)
    }
}

fn parse_err(message: impl Into<String>, text: &str) -> Error {
    Error::ParseError { message: message.into(), output: text.chars().take(2000).collect() }
}

pub fn parse_tsplib(text: &str) -> Result<TsplibInstance> {
    let mut name = String::new();
    let mut problem = None;
    let mut dimension = None;
    let mut capacity = None;
    let mut coords: Vec<Option<(i64, i64)>> = Vec::new();
    let mut demands: Vec<u32> = Vec::new();
    let mut depot = None;
    let mut section = "";

    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if let Some((key, value)) = line.split_once(':') {
            let (key, value) = (key.trim(), value.trim());
            section = "";
            match key {
                "NAME" => name = value.to_string(),
                "TYPE" => {
                    problem = Some(match value {
                        "TSP" => Problem::Tsp,
                        "CVRP" => Problem::Cvrp,
                        other => return Err(parse_err(format!("unsupported TYPE {other}"), text)),
                    })
                }
                "DIMENSION" => {
                    let d: usize = value.parse().map_err(|_| parse_err("bad DIMENSION", text))?;
                    dimension = Some(d);
                    coords = vec![None; d];
                    demands = vec![0; d];
                }
                "CAPACITY" => capacity = Some(value.parse().map_err(|_| parse_err("bad CAPACITY", text))?),
                "EDGE_WEIGHT_TYPE" if value != "EUC_2D" => {
                    return Err(parse_err(format!("unsupported EDGE_WEIGHT_TYPE {value}"), text))
                }
                _ => {}
            }
            continue;
        }
        match line {
            "NODE_COORD_SECTION" | "DEMAND_SECTION" | "DEPOT_SECTION" => {
                section = line;
                continue;
            }
            _ => {}
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let id = |s: &str| -> Result<usize> {
            let k: usize = s.parse().map_err(|_| parse_err(format!("bad node id `{s}`"), text))?;
            if k == 0 || k > coords.len() {
                return Err(parse_err(format!("node id {k} out of range"), text));
            }
            Ok(k - 1)
        };
        match (section, fields.as_slice()) {
            ("NODE_COORD_SECTION", [k, x, y]) => {
                let k = id(k)?;
                let parse = |v: &str| v.parse::<f64>().map(|f| f.round() as i64);
                coords[k] = Some((
                    parse(x).map_err(|_| parse_err("bad coordinate", text))?,
                    parse(y).map_err(|_| parse_err("bad coordinate", text))?,
                ));
            }
            ("DEMAND_SECTION", [k, d]) => {
                let k = id(k)?;
                demands[k] = d.parse().map_err(|_| parse_err("bad demand", text))?;
            }
            ("DEPOT_SECTION", [v]) => {
                if *v != "-1" && depot.is_none() {
                    depot = Some(id(v)?);
                }
            }
            _ => return Err(parse_err(format!("unexpected line `{line}`"), text)),
        }
    }
    let problem = problem.ok_or_else(|| parse_err("missing TYPE", text))?;
    let dimension = dimension.ok_or_else(|| parse_err("missing DIMENSION", text))?;
    let coords = coords
        .into_iter()
        .enumerate()
        .map(|(k, c)| c.ok_or_else(|| parse_err(format!("node {} has no coordinates", k + 1), text)))
        .collect::<Result<Vec<_>>>()?;
    if problem == Problem::Cvrp && (capacity.is_none() || depot.is_none()) {
        return Err(parse_err("CVRP document needs CAPACITY and DEPOT_SECTION", text));
    }
    Ok(TsplibInstance { name, problem, dimension, capacity, coords, demands, depot })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance { base_id: "b".into(), distribution: "uniform".into(), sample_seed: 1, epoch: None, index: 0 }
    }

    #[test]
    fn scaled_row() {
        let inst = Instance::new(
            Problem::Tsp,
            vec![Node::new(0, 0.5, 0.5, 0), Node::new(1, 0.25, 1.0, 0), Node::new(2, 0.0, 0.1234567, 0)],
            None,
            prov(),
        )
        .unwrap();
        let text = export_tsplib(&inst, DEFAULT_SCALE);
        assert!(text.lines().any(|l| l == "1 500000 500000"));
        assert!(text.lines().any(|l| l == "3 0 123457"));
        assert!(text.contains("EDGE_WEIGHT_TYPE : EUC_2D"));
        assert!(!text.contains("CAPACITY"));
    }

    #[test]
    fn cvrp_round_trip() {
        let nodes = vec![Node::new(0, 0.5, 0.5, 0), Node::new(1, 0.1, 0.2, 4), Node::new(2, 0.9, 0.3, 7)];
        let inst = Instance::new(Problem::Cvrp, nodes, Some(25), prov()).unwrap();
        let text = export_tsplib(&inst, DEFAULT_SCALE);
        assert!(text.lines().any(|l| l == "CAPACITY : 25"));
        let parsed = parse_tsplib(&text).unwrap();
        assert_eq!(parsed.dimension, 3);
        assert_eq!(parsed.capacity, Some(25));
        assert_eq!(parsed.demands, vec![0, 4, 7]);
        assert_eq!(parsed.depot, Some(0));
        let back = parsed.to_instance(DEFAULT_SCALE).unwrap();
        assert_eq!(back.nodes.len(), 3);
        assert_eq!(back.capacity, Some(25));
        assert!(back.nodes.iter().zip(&inst.nodes).all(|(a, b)| a.demand == b.demand && (a.x - b.x).abs() < 1e-6));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_tsplib("TYPE : TSP\nDIMENSION : 2\nNODE_COORD_SECTION\n1 0 0\nEOF"), Err(Error::ParseError { .. })));
        assert!(parse_tsplib("TYPE : ATSP\n").is_err());
    }
}
