//! Undirected simple connected graphs: construction, edge-list I/O, named
//! families, random generation and degree certification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rng::derive_seed;
use crate::scalar::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: malformed edge line {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: self-loop at vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { line: usize, vertex: usize, n: usize },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("graph needs at least 2 vertices, got {0}")]
    TooSmall(usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("failed to read edge list: {0}")]
    Io(String),
}

/// Immutable undirected simple connected graph on vertices `0..n`.
///
/// Neighbour lists are sorted; degrees are cached. Construction rejects
/// self-loops, duplicate edges, fewer than two vertices and disconnected
/// inputs, so every vertex has degree at least one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    degrees: Vec<usize>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an edge list. Errors report the 1-based position of
    /// the offending edge in `edges` as `line`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let numbered: Vec<(usize, usize, usize)> = edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| (i + 1, u, v))
            .collect();
        Self::build(n, &numbered)
    }

    fn build(n: usize, edges: &[(usize, usize, usize)]) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooSmall(n));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(line, u, v) in edges {
            for vertex in [u, v] {
                if vertex >= n {
                    return Err(GraphError::VertexOutOfRange { line, vertex, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { line, vertex: u });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge { line, u, v });
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let components = count_components(&adjacency);
        if components != 1 {
            return Err(GraphError::Disconnected { components });
        }
        let degrees = adjacency.iter().map(Vec::len).collect();
        Ok(Graph {
            adjacency,
            degrees,
            edge_count: seen.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Canonical edge-list text: an `n <count>` header followed by sorted edges.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n {}", self.n());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        degree_profile(self)
    }

    /// True for a connected 2-regular graph, i.e. a cycle.
    pub fn is_cycle(&self) -> bool {
        self.n() >= 3 && self.degrees.iter().all(|&d| d == 2)
    }

    /// Center vertex if the graph is a star with at least two leaves.
    pub fn star_center(&self) -> Option<usize> {
        let n = self.n();
        if n < 3 || self.edge_count != n - 1 {
            return None;
        }
        self.degrees.iter().position(|&d| d == n - 1)
    }
}

fn count_components(adjacency: &[Vec<usize>]) -> usize {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    components
}

/// Original vertex labels of a parsed edge list, indexed by dense id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexIds(pub Vec<u64>);

impl VertexIds {
    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &id)| id == i as u64)
    }
}

/// Parses an edge list and returns the dense graph.
///
/// See [`parse_edge_list_with_ids`] for the format.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    parse_edge_list_with_ids(text).map(|(g, _)| g)
}

pub fn read_edge_list<R: Read>(mut reader: R) -> Result<(Graph, VertexIds), GraphError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| GraphError::Io(e.to_string()))?;
    parse_edge_list_with_ids(&text)
}

/// Parses `u v` lines (blank lines and `#` comments ignored).
///
/// An optional `n <count>` header fixes the vertex count; ids must then lie in
/// `0..count`. Without a header the vertex set is the set of ids that appear,
/// and non-contiguous ids are remapped to `0..n` in increasing order. The
/// returned [`VertexIds`] maps each dense id back to its label.
pub fn parse_edge_list_with_ids(text: &str) -> Result<(Graph, VertexIds), GraphError> {
    let mut header: Option<usize> = None;
    let mut raw: Vec<(usize, u64, u64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let malformed = || GraphError::MalformedLine {
            line: lineno,
            content: line.to_string(),
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields.as_slice() {
            ["n", count] if header.is_none() && raw.is_empty() => {
                header = Some(count.parse().map_err(|_| malformed())?);
            }
            [u, v] => {
                let u = u.parse().map_err(|_| malformed())?;
                let v = v.parse().map_err(|_| malformed())?;
                raw.push((lineno, u, v));
            }
            _ => return Err(malformed()),
        }
    }

    match header {
        Some(n) => {
            let mut edges = Vec::with_capacity(raw.len());
            for &(line, u, v) in &raw {
                let to_idx = |x: u64| {
                    usize::try_from(x)
                        .ok()
                        .filter(|&x| x < n)
                        .ok_or(GraphError::VertexOutOfRange {
                            line,
                            vertex: x as usize,
                            n,
                        })
                };
                edges.push((line, to_idx(u)?, to_idx(v)?));
            }
            let g = Graph::build(n, &edges)?;
            Ok((g, VertexIds((0..n as u64).collect())))
        }
        None => {
            let labels: BTreeSet<u64> = raw.iter().flat_map(|&(_, u, v)| [u, v]).collect();
            let dense: BTreeMap<u64, usize> =
                labels.iter().enumerate().map(|(i, &id)| (id, i)).collect();
            let edges: Vec<_> = raw
                .iter()
                .map(|&(line, u, v)| (line, dense[&u], dense[&v]))
                .collect();
            let g = Graph::build(labels.len(), &edges)?;
            Ok((g, VertexIds(labels.into_iter().collect())))
        }
    }
}

/// Degree summary used to classify graphs as regular, bidegreed or
/// alpha-almost regular.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeProfile {
    pub d_min: usize,
    pub d_max: usize,
    /// `d_max / d_min`, reduced.
    #[serde(serialize_with = "serialize_ratio")]
    pub alpha: Ratio<usize>,
    pub distinct_degrees: Vec<usize>,
}

fn serialize_ratio<S: serde::Serializer>(r: &Ratio<usize>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl DegreeProfile {
    pub fn is_regular(&self) -> bool {
        self.distinct_degrees.len() == 1
    }

    pub fn is_bidegreed(&self) -> bool {
        self.distinct_degrees.len() <= 2
    }

    /// `(d1, d2)` with `d1 <= d2`; equal for regular graphs.
    pub fn bidegree(&self) -> Option<(usize, usize)> {
        self.is_bidegreed().then_some((self.d_min, self.d_max))
    }

    /// Whether `d_max <= alpha * d_min`.
    pub fn is_almost_regular(&self, alpha: Ratio<usize>) -> bool {
        self.d_max * alpha.denom() <= alpha.numer() * self.d_min
    }

    /// Exact test of `r >= alpha^2`.
    pub fn fitness_dominates_alpha_squared(&self, r: &Rational) -> bool {
        let a = Rational::new((*self.alpha.numer()).into(), (*self.alpha.denom()).into());
        *r >= &a * &a
    }
}

pub fn degree_profile(g: &Graph) -> DegreeProfile {
    let distinct: BTreeSet<usize> = g.degrees().iter().copied().collect();
    let d_min = *distinct.first().expect("graph has vertices");
    let d_max = *distinct.last().expect("graph has vertices");
    DegreeProfile {
        d_min,
        d_max,
        alpha: Ratio::new(d_max, d_min),
        distinct_degrees: distinct.into_iter().collect(),
    }
}

pub mod families {
    //! Named graph families. Stars use vertex 0 as the center.

    use super::{Graph, GraphError};

    pub fn cycle(n: usize) -> Result<Graph, GraphError> {
        if n < 3 {
            return Err(GraphError::InvalidParam(format!("cycle needs n >= 3, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges)
    }

    /// Star with `leaves` leaves; center 0, leaves `1..=leaves`.
    pub fn star(leaves: usize) -> Result<Graph, GraphError> {
        if leaves < 1 {
            return Err(GraphError::InvalidParam("star needs at least one leaf".into()));
        }
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_edges(leaves + 1, &edges)
    }

    pub fn complete(n: usize) -> Result<Graph, GraphError> {
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Graph::from_edges(n, &edges)
    }

    pub fn path(n: usize) -> Result<Graph, GraphError> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges)
    }

    /// Book graph: spine edge `{0, 1}` plus `pages` quadrilateral pages
    /// `0 - a - b - 1`. Bidegreed with degrees `(2, pages + 1)`.
    pub fn book(pages: usize) -> Result<Graph, GraphError> {
        if pages < 1 {
            return Err(GraphError::InvalidParam("book needs at least one page".into()));
        }
        let mut edges = vec![(0, 1)];
        for p in 0..pages {
            let (a, b) = (2 + 2 * p, 3 + 2 * p);
            edges.extend([(0, a), (a, b), (b, 1)]);
        }
        Graph::from_edges(2 + 2 * pages, &edges)
    }
}

/// Connected `d`-regular graph drawn from the pairing model, rejecting
/// samples with loops, multi-edges or more than one component.
pub fn random_regular(n: usize, d: usize, seed: u64, max_attempts: usize) -> Result<Graph, GraphError> {
    if d == 0 || d >= n || (n * d) % 2 != 0 {
        return Err(GraphError::InvalidParam(format!(
            "no simple {d}-regular graph on {n} vertices"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat_n(u, d)).collect();
    'attempt: for _ in 0..max_attempts {
        points.shuffle(&mut rng);
        let mut seen = BTreeSet::new();
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
        }
        let edges: Vec<_> = seen.into_iter().collect();
        match Graph::from_edges(n, &edges) {
            Ok(g) => return Ok(g),
            Err(GraphError::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::InvalidParam(format!(
        "no simple connected {d}-regular sample on {n} vertices in {max_attempts} attempts"
    )))
}

/// Outcome of one G(n, p) draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GnpSample {
    Connected(Graph),
    /// The sample was not connected; callers may resample.
    Disconnected {
        components: usize,
        edges: usize,
        degrees: Vec<usize>,
    },
}

impl GnpSample {
    pub fn connected(self) -> Option<Graph> {
        match self {
            GnpSample::Connected(g) => Some(g),
            GnpSample::Disconnected { .. } => None,
        }
    }
}

/// Samples G(n, p): every unordered pair is an edge independently with
/// probability `p`, using a ChaCha stream seeded by `seed`.
pub fn generate_gnp(n: usize, p: f64, seed: u64) -> Result<GnpSample, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParam(format!("G(n,p) needs n >= 2, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::InvalidParam(format!("G(n,p) needs p in (0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    match Graph::from_edges(n, &edges) {
        Ok(g) => Ok(GnpSample::Connected(g)),
        Err(GraphError::Disconnected { components }) => {
            let mut degrees = vec![0; n];
            for &(u, v) in &edges {
                degrees[u] += 1;
                degrees[v] += 1;
            }
            Ok(GnpSample::Disconnected {
                components,
                edges: edges.len(),
                degrees,
            })
        }
        Err(e) => Err(e),
    }
}

/// Draws G(n, p) until a connected sample appears, up to `max_attempts`
/// draws. Attempt `k > 0` uses a seed derived from `(seed, k)`. Returns the
/// graph and the number of draws used.
pub fn generate_connected_gnp(
    n: usize,
    p: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<(Graph, usize), GraphError> {
    let mut last_components = 0;
    for attempt in 0..max_attempts {
        let s = if attempt == 0 {
            seed
        } else {
            derive_seed(seed, &[attempt as u64])
        };
        match generate_gnp(n, p, s)? {
            GnpSample::Connected(g) => return Ok((g, attempt + 1)),
            GnpSample::Disconnected { components, .. } => last_components = components,
        }
    }
    Err(GraphError::Disconnected {
        components: last_components,
    })
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;

    pub(crate) const EXAMPLE5: &str = "0 1\n1 2\n1 3\n1 4\n2 3\n3 4\n";

    #[test]
    fn parses_small_path() {
        let g = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.degrees(), &[1, 2, 1]);
    }

    #[test]
    fn parses_five_vertex_example() {
        let g = parse_edge_list(EXAMPLE5).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g.degrees(), &[1, 4, 2, 3, 2]);
        assert_eq!(g.neighbors(3), &[1, 2, 4]);
    }

    #[test]
    fn comments_blank_lines_and_header() {
        let g = parse_edge_list("# a triangle\n\nn 3\n0 1 # first\n1 2\n2 0\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn parse_errors_name_the_line() {
        assert_eq!(
            parse_edge_list("0 1\n2 3"),
            Err(GraphError::Disconnected { components: 2 })
        );
        assert_eq!(
            parse_edge_list("0 1\n1 2\n2 1"),
            Err(GraphError::DuplicateEdge { line: 3, u: 2, v: 1 })
        );
        assert_eq!(
            parse_edge_list("0 1\n1 1"),
            Err(GraphError::SelfLoop { line: 2, vertex: 1 })
        );
        assert!(matches!(
            parse_edge_list("0 1\n# c\n1 x"),
            Err(GraphError::MalformedLine { line: 3, .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1 2"),
            Err(GraphError::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_edge_list("n 2\n0 1\n1 2"),
            Err(GraphError::VertexOutOfRange { line: 3, vertex: 2, n: 2 })
        ));
    }

    #[test]
    fn header_with_isolated_vertex_is_disconnected() {
        assert_eq!(
            parse_edge_list("n 4\n0 1\n1 2"),
            Err(GraphError::Disconnected { components: 2 })
        );
    }

    #[test]
    fn sparse_ids_are_remapped() {
        let (g, ids) = parse_edge_list_with_ids("10 20\n20 35\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(ids.0, vec![10, 20, 35]);
        assert!(!ids.is_identity());
        assert_eq!(g.degrees(), &[1, 2, 1]);
    }

    #[test]
    fn serializer_is_canonical() {
        let g = parse_edge_list("3 4\n1 0\n2 1\n4 1\n3 2\n1 3").unwrap();
        assert_eq!(g.to_edge_list(), "n 5\n0 1\n1 2\n1 3\n1 4\n2 3\n3 4\n");
        assert_eq!(parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn profiles_of_named_graphs() {
        let k5 = degree_profile(&complete(5).unwrap());
        assert_eq!((k5.d_min, k5.d_max, k5.alpha), (4, 4, Ratio::from_integer(1)));
        assert_eq!(k5.distinct_degrees, vec![4]);
        assert!(k5.is_regular());

        let s = degree_profile(&star(6).unwrap());
        assert_eq!((s.d_min, s.d_max, s.alpha), (1, 6, Ratio::from_integer(6)));
        assert_eq!(s.distinct_degrees, vec![1, 6]);
        assert!(s.is_bidegreed() && !s.is_regular());

        let ex = degree_profile(&parse_edge_list(EXAMPLE5).unwrap());
        assert_eq!((ex.d_min, ex.d_max, ex.alpha), (1, 4, Ratio::from_integer(4)));
        assert_eq!(ex.distinct_degrees, vec![1, 2, 3, 4]);
        assert!(!ex.is_bidegreed());
        assert_eq!(ex.bidegree(), None);
    }

    #[test]
    fn alpha_is_exact() {
        let p = degree_profile(&book(3).unwrap());
        assert_eq!((p.d_min, p.d_max), (2, 4));
        assert_eq!(p.alpha, Ratio::from_integer(2));
        assert!(p.fitness_dominates_alpha_squared(&crate::scalar::parse_rational("4").unwrap()));
        assert!(!p.fitness_dominates_alpha_squared(&crate::scalar::parse_rational("3.999").unwrap()));
        assert!(p.is_almost_regular(Ratio::from_integer(2)));
        assert!(!p.is_almost_regular(Ratio::new(3, 2)));
    }

    #[test]
    fn structure_detection() {
        assert!(cycle(5).unwrap().is_cycle());
        assert!(!path(5).unwrap().is_cycle());
        assert_eq!(star(4).unwrap().star_center(), Some(0));
        assert_eq!(path(3).unwrap().star_center(), Some(1));
        assert_eq!(path(4).unwrap().star_center(), None);
    }

    #[test]
    fn gnp_with_p_one_is_complete() {
        for seed in [0, 1, 99] {
            let g = generate_gnp(5, 1.0, seed).unwrap().connected().unwrap();
            assert_eq!(g, complete(5).unwrap());
        }
    }

    #[test]
    fn gnp_is_deterministic() {
        let a = generate_gnp(30, 0.5, 7).unwrap();
        let b = generate_gnp(30, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_gnp(30, 0.5, 8).unwrap());
    }

    #[test]
    fn gnp_reports_disconnection() {
        let sample = generate_gnp(40, 0.01, 3).unwrap();
        match sample {
            GnpSample::Disconnected { components, edges, degrees } => {
                assert!(components > 1);
                assert_eq!(degrees.iter().sum::<usize>(), 2 * edges);
            }
            GnpSample::Connected(_) => panic!("sparse sample should be disconnected"),
        }
        assert!(generate_connected_gnp(40, 0.01, 3, 5).is_err());
        let (g, attempts) = generate_connected_gnp(12, 0.3, 3, 1000).unwrap();
        assert_eq!(g.n(), 12);
        assert!(attempts >= 1);
    }

    #[test]
    fn gnp_rejects_bad_params() {
        assert!(generate_gnp(1, 0.5, 0).is_err());
        assert!(generate_gnp(5, 0.0, 0).is_err());
        assert!(generate_gnp(5, 1.5, 0).is_err());
        assert!(generate_gnp(5, f64::NAN, 0).is_err());
    }

    #[test]
    fn random_regular_samples() {
        for seed in 0..5 {
            let g = random_regular(10, 3, seed, 1000).unwrap();
            assert!(g.degrees().iter().all(|&d| d == 3));
        }
        assert!(random_regular(5, 3, 0, 10).is_err());
    }

    #[test]
    fn book_graph_shape() {
        let g = book(3).unwrap();
        assert_eq!(g.n(), 8);
        assert_eq!(g.edge_count(), 10);
        assert_eq!(g.degree(0), 4);
        assert_eq!(g.degree(1), 4);
        assert!((2..8).all(|v| g.degree(v) == 2));
    }
}
