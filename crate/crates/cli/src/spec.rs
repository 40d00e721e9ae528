//! Parsing of graph sources, parameter grids and initial-set specs.

use std::fs;
use std::path::Path;

use mixmoran::graph::{families, generate_gnp, parse_edge_list_with_ids, GnpSample, VertexIds};
use mixmoran::scalar::parse_rational;
use mixmoran::{Configuration, Graph, GraphError, Rational};
use num_traits::{ToPrimitive, Zero};

use crate::error::CliError;

/// Where the graph comes from. Exactly one per run.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(String),
    Family { name: String, arg: usize },
    Gnp { n: usize, p: f64, seed: u64 },
}

/// A graph together with the labels used on input and output.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub ids: VertexIds,
    pub source: GraphSource,
}

impl LoadedGraph {
    pub fn label(&self, v: usize) -> u64 {
        self.ids.0[v]
    }

    fn index_of(&self, label: u64) -> Option<usize> {
        self.ids.0.iter().position(|&x| x == label)
    }

    /// `{a,b}` in input labels.
    pub fn format_set(&self, s: &Configuration) -> String {
        let labels: Vec<String> = s.iter().map(|v| self.label(v).to_string()).collect();
        format!("{{{}}}", labels.join(","))
    }
}

fn graph_error(e: GraphError) -> CliError {
    match e {
        GraphError::Disconnected { .. } | GraphError::TooSmall(_) => CliError::Domain(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

pub fn parse_graph_source(
    graph: Option<&str>,
    family: Option<&str>,
    gnp: Option<&str>,
) -> Result<GraphSource, CliError> {
    let given = [graph.is_some(), family.is_some(), gnp.is_some()];
    if given.iter().filter(|&&b| b).count() != 1 {
        return Err(CliError::Usage(
            "exactly one of --graph, --family or --gnp is required".into(),
        ));
    }
    if let Some(path) = graph {
        return Ok(GraphSource::File(path.to_string()));
    }
    if let Some(spec) = family {
        let (name, arg) = spec
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("family {spec:?} must look like NAME:SIZE")))?;
        let arg = arg
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("family size {arg:?} is not a count")))?;
        let name = name.trim().to_ascii_lowercase();
        if !["cycle", "star", "complete", "path", "book"].contains(&name.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown family {name:?} (expected cycle, star, complete, path or book)"
            )));
        }
        return Ok(GraphSource::Family { name, arg });
    }
    let spec = gnp.unwrap_or_default();
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || CliError::Usage(format!("--gnp {spec:?} must look like n,p,seed"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(GraphSource::Gnp {
        n: parts[0].parse().map_err(|_| bad())?,
        p: parts[1].parse().map_err(|_| bad())?,
        seed: parts[2].parse().map_err(|_| bad())?,
    })
}

pub fn load_graph(source: &GraphSource) -> Result<LoadedGraph, CliError> {
    let (graph, ids) = match source {
        GraphSource::File(path) => {
            let text = fs::read_to_string(Path::new(path))
                .map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
            parse_edge_list_with_ids(&text).map_err(graph_error)?
        }
        GraphSource::Family { name, arg } => {
            let g = match name.as_str() {
                "cycle" => families::cycle(*arg),
                "star" => families::star(*arg),
                "complete" => families::complete(*arg),
                "path" => families::path(*arg),
                "book" => families::book(*arg),
                other => unreachable!("family {other} was validated"),
            }
            .map_err(graph_error)?;
            let ids = VertexIds((0..g.n() as u64).collect());
            (g, ids)
        }
        GraphSource::Gnp { n, p, seed } => match generate_gnp(*n, *p, *seed).map_err(graph_error)? {
            GnpSample::Connected(g) => {
                let ids = VertexIds((0..g.n() as u64).collect());
                (g, ids)
            }
            GnpSample::Disconnected { components, .. } => {
                return Err(CliError::Domain(format!(
                    "G({n}, {p}) sample with seed {seed} is disconnected ({components} components)"
                )))
            }
        },
    };
    Ok(LoadedGraph {
        graph,
        ids,
        source: source.clone(),
    })
}

/// One grid value, kept exactly so rational modes see the typed number.
#[derive(Debug, Clone, PartialEq)]
pub struct GridValue {
    pub exact: Rational,
    pub value: f64,
}

impl GridValue {
    fn new(exact: Rational) -> Self {
        let value = exact.to_f64().unwrap_or(f64::NAN);
        GridValue { exact, value }
    }
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_grid(flag: &str, text: &str) -> Result<Vec<GridValue>, CliError> {
    let number = |s: &str| {
        parse_rational(s.trim()).map_err(|_| CliError::Usage(format!("--{flag}: {s:?} is not a number")))
    };
    let text = text.trim();
    if text.is_empty() {
        return Err(CliError::Usage(format!("--{flag}: empty grid")));
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if step <= Rational::zero() {
                return Err(CliError::Usage(format!("--{flag}: range step must be positive")));
            }
            if stop < start {
                return Err(CliError::Usage(format!("--{flag}: empty range")));
            }
            let mut out = Vec::new();
            let mut x = start;
            while x <= stop {
                out.push(GridValue::new(x.clone()));
                x += &step;
            }
            Ok(out)
        }
        [_] => text
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| number(s).map(GridValue::new))
            .collect::<Result<Vec<_>, _>>()
            .and_then(|v| {
                if v.is_empty() {
                    Err(CliError::Usage(format!("--{flag}: empty grid")))
                } else {
                    Ok(v)
                }
            }),
        _ => Err(CliError::Usage(format!(
            "--{flag}: {text:?} is neither a list nor start:stop:step"
        ))),
    }
}

/// Expands `vertex:K`, `set:A,B,..` and `all-singletons` into configurations.
pub fn parse_inits(specs: &[String], g: &LoadedGraph) -> Result<Vec<Configuration>, CliError> {
    let n = g.graph.n();
    let lookup = |tok: &str| -> Result<usize, CliError> {
        let label: u64 = tok
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--init: {tok:?} is not a vertex id")))?;
        g.index_of(label)
            .ok_or_else(|| CliError::Usage(format!("--init: vertex {label} is not in the graph")))
    };
    let mut out = Vec::new();
    for spec in specs {
        let spec = spec.trim();
        if spec == "all-singletons" {
            out.extend((0..n).map(|v| Configuration::empty(n).with(v)));
            continue;
        }
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("--init {spec:?}: expected vertex:K, set:A,B or all-singletons")))?;
        match kind {
            "vertex" => out.push(Configuration::empty(n).with(lookup(rest)?)),
            "set" => {
                let mut cfg = Configuration::empty(n);
                for tok in rest.split(',').filter(|t| !t.trim().is_empty()) {
                    cfg.insert(lookup(tok)?);
                }
                if cfg.is_empty() {
                    return Err(CliError::Usage(format!("--init {spec:?}: empty set")));
                }
                out.push(cfg);
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "--init {spec:?}: expected vertex:K, set:A,B or all-singletons"
                )))
            }
        }
    }
    if out.is_empty() {
        out.push(Configuration::empty(n).with(0));
    }
    Ok(out)
}
