//! Additive potentials and the edge-wise drift terms of the mixed process.
//!
//! For a boundary edge `(u, v)` (mutant `u`, resident `v`, adjacent) and an
//! additive potential `phi`:
//!
//! ```text
//! psi_bd = (r/deg_u * phi(v) - 1/deg_v * phi(u)) / w(S)
//! psi_db = (r/w_v(S) * phi(v) - 1/w_u(S) * phi(u)) / n
//! psi    = lambda * psi_bd + (1 - lambda) * psi_db
//! ```
//!
//! Summed over all boundary edges, `psi` is the expected one-step change of
//! `phi`. [`kernel_expected_drift`] computes the same expectation from the
//! kernel's flip probabilities so the two routes can be checked against each
//! other.

use thiserror::Error;

use crate::closed_forms::bidegreed_weight;
use crate::graph::Graph;
use crate::kernel::{neighborhood_fitness, total_fitness, transition_distribution, Configuration, Params};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DriftError {
    #[error("({u}, {v}) is not a boundary edge of the configuration")]
    NotBoundaryEdge { u: usize, v: usize },
    #[error("potential requires a bidegreed graph")]
    NotBidegreed,
    #[error("invalid custom potential: {0}")]
    InvalidWeights(String),
}

/// Additive potential `phi(S) = sum over u in S of phi(u)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential<T> {
    /// `phi(u) = 1`, so `phi(S) = |S|`.
    Cardinality,
    /// `phi(u) = deg_u`.
    Degree,
    /// `phi(u) = 1 / deg_u`.
    InverseDegree,
    /// `phi(u) = f(deg_u)` with the bidegreed weight `f(d1) = 1`,
    /// `f(d2) = (lambda d1 + (1-lambda) d2) / (lambda d2 + (1-lambda) d1)`.
    BidegreedF,
    /// Explicit per-vertex weights, finite and non-negative.
    Custom(Vec<T>),
}

impl<T: Scalar> Potential<T> {
    /// Per-vertex weights on `g`. `lambda` only matters for [`Potential::BidegreedF`].
    pub fn vertex_weights(&self, g: &Graph, lambda: &T) -> Result<Vec<T>, DriftError> {
        let n = g.n();
        match self {
            Potential::Cardinality => Ok(vec![T::one(); n]),
            Potential::Degree => Ok(g.degrees().iter().map(|&d| T::from_usize(d)).collect()),
            Potential::InverseDegree => Ok(g.degrees().iter().map(|&d| T::ratio(1, d)).collect()),
            Potential::BidegreedF => {
                let (d1, d2) = g.degree_profile().bidegree().ok_or(DriftError::NotBidegreed)?;
                Ok(g.degrees()
                    .iter()
                    .map(|&d| bidegreed_weight(d, d1, d2, lambda))
                    .collect())
            }
            Potential::Custom(weights) => {
                if weights.len() != n {
                    return Err(DriftError::InvalidWeights(format!(
                        "expected {n} weights, got {}",
                        weights.len()
                    )));
                }
                if let Some(bad) = weights
                    .iter()
                    .find(|w| !w.to_f64().is_finite() || **w < T::zero())
                {
                    return Err(DriftError::InvalidWeights(format!("weight {bad:?}")));
                }
                Ok(weights.clone())
            }
        }
    }

    pub fn value(&self, g: &Graph, cfg: &Configuration, lambda: &T) -> Result<T, DriftError> {
        let weights = self.vertex_weights(g, lambda)?;
        Ok(cfg.iter().fold(T::zero(), |acc, u| acc + weights[u].clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDrift<T> {
    pub bd: T,
    pub db: T,
    pub mixed: T,
}

/// Ordered boundary pairs `(mutant, resident)` in lexicographic order.
pub fn boundary_edges(g: &Graph, cfg: &Configuration) -> Vec<(usize, usize)> {
    cfg.iter()
        .flat_map(|u| {
            g.neighbors(u)
                .iter()
                .filter(|&&v| !cfg.contains(v))
                .map(move |&v| (u, v))
        })
        .collect()
}

fn edge_terms<T: Scalar>(
    g: &Graph,
    cfg: &Configuration,
    weights: &[T],
    params: &Params<T>,
    w: &T,
    (u, v): (usize, usize),
) -> EdgeDrift<T> {
    let r = params.r().clone();
    let lambda = params.lambda().clone();
    let gain = weights[v].clone();
    let lose = weights[u].clone();
    let bd = (r.clone() * gain.clone() / T::from_usize(g.degree(u)) - lose.clone() / T::from_usize(g.degree(v)))
        / w.clone();
    let db = (r * gain / neighborhood_fitness(g, cfg, v, params) - lose / neighborhood_fitness(g, cfg, u, params))
        / T::from_usize(g.n());
    let mixed = lambda.clone() * bd.clone() + (T::one() - lambda) * db.clone();
    EdgeDrift { bd, db, mixed }
}

/// The three drift terms for boundary edge `(u, v)`.
pub fn edge_drift<T: Scalar>(
    g: &Graph,
    cfg: &Configuration,
    potential: &Potential<T>,
    params: &Params<T>,
    u: usize,
    v: usize,
) -> Result<EdgeDrift<T>, DriftError> {
    if !(u < g.n() && v < g.n() && cfg.contains(u) && !cfg.contains(v) && g.is_adjacent(u, v)) {
        return Err(DriftError::NotBoundaryEdge { u, v });
    }
    let weights = potential.vertex_weights(g, params.lambda())?;
    let w = total_fitness(cfg, params);
    Ok(edge_terms(g, cfg, &weights, params, &w, (u, v)))
}

/// Mixed drift of every boundary edge, in [`boundary_edges`] order.
pub fn boundary_drifts<T: Scalar>(
    g: &Graph,
    cfg: &Configuration,
    potential: &Potential<T>,
    params: &Params<T>,
) -> Result<Vec<((usize, usize), EdgeDrift<T>)>, DriftError> {
    let weights = potential.vertex_weights(g, params.lambda())?;
    let w = total_fitness(cfg, params);
    Ok(boundary_edges(g, cfg)
        .into_iter()
        .map(|e| (e, edge_terms(g, cfg, &weights, params, &w, e)))
        .collect())
}

/// `E[phi(S') - phi(S) | S]` as the sum of edge-wise mixed drifts.
pub fn expected_drift<T: Scalar>(
    g: &Graph,
    cfg: &Configuration,
    potential: &Potential<T>,
    params: &Params<T>,
) -> Result<T, DriftError> {
    Ok(boundary_drifts(g, cfg, potential, params)?
        .into_iter()
        .fold(T::zero(), |acc, (_, d)| acc + d.mixed))
}

/// `E[phi(S') - phi(S) | S]` from the kernel: gains add `phi(v)`, losses
/// remove `phi(u)`.
pub fn kernel_expected_drift<T: Scalar>(
    g: &Graph,
    cfg: &Configuration,
    potential: &Potential<T>,
    params: &Params<T>,
) -> Result<T, DriftError> {
    let weights = potential.vertex_weights(g, params.lambda())?;
    let t = transition_distribution(g, cfg, params);
    Ok((0..g.n()).fold(T::zero(), |acc, x| {
        acc + t.gain[x].clone() * weights[x].clone() - t.loss[x].clone() * weights[x].clone()
    }))
}

/// Non-absorbing configuration in which every edge joins a mutant to a
/// resident: no mutant has a mutant neighbour and no resident a resident one.
pub fn is_bad_configuration(g: &Graph, cfg: &Configuration) -> bool {
    !cfg.is_absorbing() && g.edges().all(|(u, v)| cfg.contains(u) != cfg.contains(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{families, parse_edge_list};
    use crate::kernel::{ExactParams, ProcessParams};
    use crate::scalar::{parse_rational, Rational};
    use num_traits::Zero;

    const EXAMPLE5: &str = "0 1\n1 2\n1 3\n1 4\n2 3\n3 4\n";

    fn exact(l: &str, r: &str) -> ExactParams {
        ExactParams::from_decimal(l, r).unwrap()
    }

    fn all_configs(n: usize) -> impl Iterator<Item = Configuration> {
        (0..(1u64 << n)).map(move |i| Configuration::from_index(n, i))
    }

    #[test]
    fn rejects_non_boundary_pairs() {
        let g = parse_edge_list(EXAMPLE5).unwrap();
        let s = Configuration::from_vertices(5, [2]).unwrap();
        let p = exact("1/2", "1");
        let pot = Potential::Cardinality;
        assert!(edge_drift(&g, &s, &pot, &p, 2, 3).is_ok());
        assert_eq!(edge_drift(&g, &s, &pot, &p, 3, 2), Err(DriftError::NotBoundaryEdge { u: 3, v: 2 }));
        assert_eq!(edge_drift(&g, &s, &pot, &p, 2, 0), Err(DriftError::NotBoundaryEdge { u: 2, v: 0 }));
        assert_eq!(edge_drift(&g, &s, &pot, &p, 2, 9), Err(DriftError::NotBoundaryEdge { u: 2, v: 9 }));
    }

    #[test]
    fn neutral_half_lambda_edges_have_zero_drift() {
        let g = parse_edge_list(EXAMPLE5).unwrap();
        let p = exact("1/2", "1");
        for s in all_configs(5) {
            for (_, d) in boundary_drifts(&g, &s, &Potential::Cardinality, &p).unwrap() {
                assert!(d.mixed.is_zero());
            }
        }
    }

    #[test]
    fn regular_graph_cardinality_is_a_martingale() {
        let g = families::cycle(6).unwrap();
        for l in ["0", "1/3", "1"] {
            let p = exact(l, "1");
            for s in all_configs(6) {
                for (_, d) in boundary_drifts(&g, &s, &Potential::Cardinality, &p).unwrap() {
                    assert!(d.mixed.is_zero());
                }
            }
        }
    }

    #[test]
    fn bidegreed_potential_zero_on_every_degree_pair() {
        let g = families::book(2).unwrap();
        let p = exact("0.3", "1");
        let mut pairs = std::collections::BTreeSet::new();
        for s in all_configs(g.n()) {
            for ((u, v), d) in boundary_drifts(&g, &s, &Potential::BidegreedF, &p).unwrap() {
                assert!(d.mixed.is_zero());
                pairs.insert((g.degree(u), g.degree(v)));
            }
        }
        assert_eq!(pairs.len(), 4);
        let path = families::path(5).unwrap();
        assert!(Potential::<Rational>::BidegreedF.vertex_weights(&path, &Rational::zero()).is_ok());
        let ex = parse_edge_list(EXAMPLE5).unwrap();
        assert_eq!(
            Potential::<Rational>::BidegreedF.vertex_weights(&ex, &Rational::zero()),
            Err(DriftError::NotBidegreed)
        );
    }

    #[test]
    fn absorbing_configurations_have_no_drift() {
        let g = families::complete(4).unwrap();
        let p = ProcessParams::new(0.7, 3.0).unwrap();
        for s in [Configuration::empty(4), Configuration::full(4)] {
            assert_eq!(expected_drift(&g, &s, &Potential::Degree, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn complete_graph_positive_drift_bound() {
        let g = families::complete(5).unwrap();
        let bound = 1.0 / 250.0;
        for l in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let p = ProcessParams::new(l, 2.0).unwrap();
            for s in all_configs(5).filter(|s| !s.is_absorbing()) {
                let d = expected_drift(&g, &s, &Potential::Cardinality, &p).unwrap();
                assert!(d >= bound, "lambda {l} S {s}: {d}");
            }
        }
    }

    #[test]
    fn edge_sum_matches_kernel_expectation() {
        let g = parse_edge_list(EXAMPLE5).unwrap();
        let custom = Potential::Custom(["0", "3/2", "2", "1/7", "5"].iter().map(|s| parse_rational(s).unwrap()).collect());
        for pot in [Potential::Cardinality, Potential::Degree, Potential::InverseDegree, custom] {
            for l in ["0", "1/4", "1/2", "3/4", "1"] {
                for r in ["1/2", "1", "2"] {
                    let p = exact(l, r);
                    for s in all_configs(5) {
                        assert_eq!(
                            expected_drift(&g, &s, &pot, &p).unwrap(),
                            kernel_expected_drift(&g, &s, &pot, &p).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn custom_weights_are_validated() {
        let g = families::path(3).unwrap();
        let p = ProcessParams::new(0.5, 1.0).unwrap();
        let s = Configuration::from_vertices(3, [0]).unwrap();
        for bad in [vec![1.0, 2.0], vec![1.0, -1.0, 0.0], vec![1.0, f64::NAN, 0.0]] {
            assert!(matches!(
                expected_drift(&g, &s, &Potential::Custom(bad), &p),
                Err(DriftError::InvalidWeights(_))
            ));
        }
    }

    #[test]
    fn bad_configuration_predicate() {
        let g = families::cycle(4).unwrap();
        assert!(is_bad_configuration(&g, &Configuration::from_vertices(4, [0, 2]).unwrap()));
        assert!(!is_bad_configuration(&g, &Configuration::from_vertices(4, [0, 1]).unwrap()));
        assert!(!is_bad_configuration(&g, &Configuration::empty(4)));
        let tri = families::cycle(3).unwrap();
        assert!(all_configs(3).all(|s| !is_bad_configuration(&tri, &s)));
    }
}
