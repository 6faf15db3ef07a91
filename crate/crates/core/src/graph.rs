//! Graph construction: k-NN, ε-ball, fully connected RBF, and rank-modulated
//! degree (RMD) graphs.
//!
//! All builders use Euclidean distance, exact neighbor search with ties broken
//! by ascending index, and union symmetrization ("u links v if v is among u's
//! neighbors or vice versa"). Edge lists are stored once per undirected edge
//! with `u < v`, sorted, so output never depends on evaluation order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::{distance, NeighborTable};
use crate::rank::{compute_ranks_ustat, RankVector, StatVariant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightScheme {
    Unit,
    Rbf { sigma: f64 },
}

impl WeightScheme {
    fn weight(&self, dist: f64) -> Result<f64> {
        match *self {
            Self::Unit => Ok(1.0),
            Self::Rbf { sigma } => rbf_weight(dist, sigma),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Rbf { sigma } if !(sigma > 0.0) || !sigma.is_finite() => {
                Err(Error::InvalidParameter("sigma must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuilderKind {
    Knn,
    Rmd,
    Epsilon,
    FullRbf,
    /// Read from an edge list without construction metadata.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub builder: BuilderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub weight: WeightScheme,
}

impl GraphMeta {
    pub fn external() -> Self {
        Self {
            builder: BuilderKind::External,
            k: None,
            lambda: None,
            eps: None,
            weight: WeightScheme::Unit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected weighted graph stored as a canonical edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    meta: GraphMeta,
}

impl Graph {
    /// Validates and canonicalizes an edge list: endpoints in range, no self
    /// loops, no duplicates, finite positive weights. Endpoints may be given
    /// in either order.
    pub fn new(n: usize, edges: Vec<Edge>, meta: GraphMeta) -> Result<Self> {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| Edge {
                u: e.u.min(e.v),
                v: e.u.max(e.v),
                weight: e.weight,
            })
            .collect();
        for e in &edges {
            if e.v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) out of range for n={n}",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("self loop at node {}", e.u)));
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    e.u, e.v, e.weight
                )));
            }
        }
        edges.sort_unstable_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));
        if let Some(w) = edges.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].u, w[0].v
            )));
        }
        Ok(Self { n, edges, meta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    /// Per-node `(neighbor, weight)` lists, neighbors ascending.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(v, _)| v);
        }
        adj
    }

    /// Weighted degree (volume) of every node.
    pub fn weighted_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for e in &self.edges {
            deg[e.u] += e.weight;
            deg[e.v] += e.weight;
        }
        deg
    }

    /// Connected components as a label per node, numbered by first occurrence.
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Pre-symmetrization out-degrees of an RMD graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub degrees: Vec<usize>,
    pub k: usize,
    pub lambda: f64,
}

pub fn rbf_weight(dist: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    if !(dist >= 0.0) {
        return Err(Error::InvalidParameter("distance must be non-negative".into()));
    }
    Ok(libm::exp(-dist * dist / (2.0 * sigma * sigma)))
}

/// Union-symmetrizes directed neighbor lists into a canonical edge list.
fn symmetrize(
    data: &Dataset,
    directed: impl Iterator<Item = (usize, usize)>,
    weight: WeightScheme,
    meta: GraphMeta,
) -> Result<Graph> {
    let mut pairs: Vec<(usize, usize)> = directed.map(|(a, b)| (a.min(b), a.max(b))).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let edges = pairs
        .into_iter()
        .map(|(u, v)| {
            Ok(Edge {
                u,
                v,
                weight: weight.weight(distance(data.point(u), data.point(v)))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Graph::new(data.n(), edges, meta)
}

pub fn build_knn_graph(data: &Dataset, k: usize, weight: WeightScheme) -> Result<Graph> {
    weight.validate()?;
    if k == 0 || k >= data.n() {
        return Err(Error::InvalidParameter(format!(
            "k={k} must lie in [1, n-1] = [1, {}]",
            data.n() - 1
        )));
    }
    let table = NeighborTable::build(data, k);
    let meta = GraphMeta {
        builder: BuilderKind::Knn,
        k: Some(k),
        lambda: None,
        eps: None,
        weight,
    };
    symmetrize(
        data,
        (0..data.n()).flat_map(|i| table.neighbors(i).iter().map(move |nb| (i, nb.index))),
        weight,
        meta,
    )
}

/// `round(k(λ + 2(1-λ)R))`, rounding halves up, clamped to `[1, n-1]`.
pub fn rmd_degree(rank: f64, k: usize, lambda: f64, n: usize) -> usize {
    let raw = k as f64 * (lambda + 2.0 * (1.0 - lambda) * rank);
    // The small offset keeps exact halves from rounding down after float error.
    let rounded = libm::floor(raw + 0.5 + 1e-9);
    (rounded.max(1.0) as usize).min(n - 1)
}

/// Connects every point to its `rmd_degree` nearest neighbors.
pub fn build_rmd_graph(
    data: &Dataset,
    ranks: &RankVector,
    k: usize,
    lambda: f64,
    weight: WeightScheme,
) -> Result<(Graph, DegreeProfile)> {
    weight.validate()?;
    let n = data.n();
    if ranks.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: ranks.len(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda={lambda} must lie in [0, 1]")));
    }
    if k == 0 || 2 * k > n - 1 {
        return Err(Error::InvalidParameter(format!(
            "k={k} must lie in [1, (n-1)/2] for n={n}"
        )));
    }
    let degrees: Vec<usize> = ranks
        .ranks
        .iter()
        .map(|&r| rmd_degree(r, k, lambda, n))
        .collect();
    let max_degree = degrees.iter().copied().max().unwrap_or(1);
    let table = NeighborTable::build(data, max_degree);
    let meta = GraphMeta {
        builder: BuilderKind::Rmd,
        k: Some(k),
        lambda: Some(lambda),
        eps: None,
        weight,
    };
    let graph = symmetrize(
        data,
        (0..n).flat_map(|i| {
            table.neighbors(i)[..degrees[i]]
                .iter()
                .map(move |nb| (i, nb.index))
        }),
        weight,
        meta,
    )?;
    Ok((graph, DegreeProfile { degrees, k, lambda }))
}

pub fn build_epsilon_graph(data: &Dataset, eps: f64, weight: WeightScheme) -> Result<Graph> {
    weight.validate()?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let n = data.n();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let dist = distance(data.point(u), data.point(v));
            if dist <= eps {
                edges.push(Edge {
                    u,
                    v,
                    weight: weight.weight(dist)?,
                });
            }
        }
    }
    Graph::new(
        n,
        edges,
        GraphMeta {
            builder: BuilderKind::Epsilon,
            k: None,
            lambda: None,
            eps: Some(eps),
            weight,
        },
    )
}

/// Every pair linked with an RBF weight. Pairs whose weight underflows to
/// zero are left out, as they would carry no weight anyway.
pub fn build_full_rbf_graph(data: &Dataset, sigma: f64) -> Result<Graph> {
    let weight = WeightScheme::Rbf { sigma };
    weight.validate()?;
    let n = data.n();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            let w = rbf_weight(distance(data.point(u), data.point(v)), sigma)?;
            if w > 0.0 {
                edges.push(Edge { u, v, weight: w });
            }
        }
    }
    Graph::new(
        n,
        edges,
        GraphMeta {
            builder: BuilderKind::FullRbf,
            k: None,
            lambda: None,
            eps: None,
            weight,
        },
    )
}

/// Mean over points of the distance to the `k`-th nearest neighbor.
pub fn mean_knn_distance(data: &Dataset, k: usize) -> Result<f64> {
    if k == 0 || k >= data.n() {
        return Err(Error::InvalidParameter(format!(
            "k={k} must lie in [1, n-1] = [1, {}]",
            data.n() - 1
        )));
    }
    let table = NeighborTable::build(data, k);
    Ok((0..data.n())
        .map(|i| table.neighbors(i)[k - 1].distance)
        .sum::<f64>()
        / data.n() as f64)
}

/// Number of crossing links in the directed RMD graph, where every point
/// links to its own `degrees[i]` nearest neighbors and no symmetrization
/// takes place. A mutual pair across the partition counts twice.
pub fn directed_crossings(
    data: &Dataset,
    profile: &DegreeProfile,
    assignment: &[usize],
) -> Result<usize> {
    let n = data.n();
    for len in [profile.degrees.len(), assignment.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    let max_degree = profile.degrees.iter().copied().max().unwrap_or(0);
    let table = NeighborTable::build(data, max_degree);
    Ok((0..n)
        .map(|i| {
            table.neighbors(i)[..profile.degrees[i]]
                .iter()
                .filter(|nb| assignment[nb.index] != assignment[i])
                .count()
        })
        .sum())
}

/// A graph recipe that can be rebuilt on any dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum GraphSpec {
    Knn {
        k: usize,
        weight: WeightScheme,
    },
    Rmd {
        k: usize,
        lambda: f64,
        /// Rank statistic; `AvgKnn { l: k }` when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variant: Option<StatVariant>,
        resamples: usize,
        weight: WeightScheme,
    },
    #[serde(alias = "eps")]
    Epsilon {
        eps: f64,
        weight: WeightScheme,
    },
    FullRbf {
        sigma: f64,
    },
}

/// A graph together with the rank and degree data that produced it.
#[derive(Debug, Clone)]
pub struct BuiltGraph {
    pub graph: Graph,
    pub ranks: Option<RankVector>,
    pub degrees: Option<DegreeProfile>,
}

impl GraphSpec {
    pub fn rank_variant(&self) -> Option<StatVariant> {
        match self {
            Self::Rmd { k, variant, .. } => Some(variant.unwrap_or(StatVariant::AvgKnn { l: *k })),
            _ => None,
        }
    }

    /// Builds the graph; `seed` drives the rank resampling of RMD graphs.
    pub fn build(&self, data: &Dataset, seed: u64) -> Result<BuiltGraph> {
        match self {
            Self::Rmd {
                resamples,
                ..
            } => {
                let variant = self.rank_variant().expect("rmd has a variant");
                let ranks = compute_ranks_ustat(data, variant, *resamples, seed)?;
                self.build_with_ranks(data, ranks)
            }
            _ => Ok(BuiltGraph {
                graph: self.build_plain(data)?,
                ranks: None,
                degrees: None,
            }),
        }
    }

    /// Builds an RMD graph from precomputed ranks; other methods ignore them.
    pub fn build_with_ranks(&self, data: &Dataset, ranks: RankVector) -> Result<BuiltGraph> {
        match *self {
            Self::Rmd {
                k, lambda, weight, ..
            } => {
                let (graph, degrees) = build_rmd_graph(data, &ranks, k, lambda, weight)?;
                Ok(BuiltGraph {
                    graph,
                    ranks: Some(ranks),
                    degrees: Some(degrees),
                })
            }
            _ => Ok(BuiltGraph {
                graph: self.build_plain(data)?,
                ranks: None,
                degrees: None,
            }),
        }
    }

    fn build_plain(&self, data: &Dataset) -> Result<Graph> {
        match *self {
            Self::Knn { k, weight } => build_knn_graph(data, k, weight),
            Self::Epsilon { eps, weight } => build_epsilon_graph(data, eps, weight),
            Self::FullRbf { sigma } => build_full_rbf_graph(data, sigma),
            Self::Rmd { .. } => unreachable!("rmd graphs need ranks"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::RankParams;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new(xs.to_vec(), 1, None, "line").unwrap()
    }

    fn pairs(g: &Graph) -> Vec<(usize, usize)> {
        g.edges().iter().map(|e| (e.u, e.v)).collect()
    }

    fn flat_ranks(n: usize, r: f64) -> RankVector {
        RankVector::from_ranks(
            vec![r; n],
            vec![0.0; n],
            RankParams {
                variant: StatVariant::AvgKnn { l: 1 },
                resamples: 1,
                seed: 0,
            },
        )
        .unwrap()
    }

    #[test]
    fn rbf_values() {
        assert_eq!(rbf_weight(0.0, 0.7).unwrap(), 1.0);
        assert!((rbf_weight(2.0, 2.0).unwrap() - libm::exp(-0.5)).abs() < 1e-15);
        assert!((rbf_weight(4.0, 2.0).unwrap() - libm::exp(-2.0)).abs() < 1e-15);
        assert!((rbf_weight(1.0, 1.0).unwrap() - 0.60653).abs() < 1e-5);
        assert!(rbf_weight(1.0, 0.0).is_err());
        assert!(rbf_weight(1.0, -1.0).is_err());
    }

    #[test]
    fn knn_union_on_a_line() {
        let g = build_knn_graph(&line(&[0.0, 1.0, 3.0]), 1, WeightScheme::Unit).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_full_degree_is_complete() {
        let g = build_knn_graph(&line(&[0.0, 1.0, 3.0, 7.0]), 3, WeightScheme::Unit).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!(build_knn_graph(&line(&[0.0, 1.0]), 2, WeightScheme::Unit).is_err());
        assert!(build_knn_graph(&line(&[0.0, 1.0]), 0, WeightScheme::Unit).is_err());
    }

    #[test]
    fn knn_with_duplicates() {
        let g = build_knn_graph(&line(&[0.0, 0.0, 0.0, 5.0]), 1, WeightScheme::Rbf { sigma: 1.0 })
            .unwrap();
        // 0 → 1, 1 → 0, 2 → 0 (lowest index among ties), 3 → 0.
        assert_eq!(pairs(&g), vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(g.edges()[0].weight, 1.0);
    }

    #[test]
    fn rmd_degrees() {
        assert_eq!(rmd_degree(0.0, 30, 0.4, 1000), 12);
        assert_eq!(rmd_degree(1.0, 30, 0.4, 1000), 48);
        assert_eq!(rmd_degree(0.5, 30, 0.4, 1000), 30);
        assert_eq!(rmd_degree(0.0, 30, 0.0, 1000), 1);
        assert_eq!(rmd_degree(1.0, 30, 0.0, 20), 19);
    }

    #[test]
    fn rmd_with_lambda_one_is_knn() {
        let ds = line(&[0.0, 0.5, 1.7, 2.0, 4.0, 4.1, 9.0]);
        let knn = build_knn_graph(&ds, 2, WeightScheme::Unit).unwrap();
        let (rmd, profile) =
            build_rmd_graph(&ds, &flat_ranks(7, 0.9), 2, 1.0, WeightScheme::Unit).unwrap();
        assert_eq!(pairs(&knn), pairs(&rmd));
        assert!(profile.degrees.iter().all(|&d| d == 2));
    }

    #[test]
    fn rmd_preconditions() {
        let ds = line(&[0.0, 0.5, 1.7, 2.0, 4.0]);
        assert!(build_rmd_graph(&ds, &flat_ranks(4, 0.5), 1, 0.5, WeightScheme::Unit).is_err());
        assert!(build_rmd_graph(&ds, &flat_ranks(5, 0.5), 3, 0.5, WeightScheme::Unit).is_err());
        assert!(build_rmd_graph(&ds, &flat_ranks(5, 0.5), 2, 1.5, WeightScheme::Unit).is_err());
        assert!(build_rmd_graph(&ds, &flat_ranks(5, 0.5), 2, 0.5, WeightScheme::Unit).is_ok());
    }

    #[test]
    fn directed_crossings_count_both_directions() {
        let ds = line(&[0.0, 1.0, 1.5, 3.0]);
        let profile = DegreeProfile {
            degrees: vec![1, 1, 1, 1],
            k: 1,
            lambda: 1.0,
        };
        // 0→1, 1→2, 2→1, 3→2; only 3→2 crosses {0,1,2}|{3}.
        assert_eq!(directed_crossings(&ds, &profile, &[0, 0, 0, 1]).unwrap(), 1);
        // Across {0,1}|{2,3}: 1→2 and 2→1 both cross.
        assert_eq!(directed_crossings(&ds, &profile, &[0, 0, 1, 1]).unwrap(), 2);
    }

    #[test]
    fn epsilon_graph_cases() {
        let ds = line(&[0.0, 1.0, 3.0]);
        let g = build_epsilon_graph(&ds, 1.5, WeightScheme::Unit).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1)]);
        assert_eq!(build_epsilon_graph(&ds, 3.0, WeightScheme::Unit).unwrap().edge_count(), 3);
        assert_eq!(build_epsilon_graph(&ds, 0.5, WeightScheme::Unit).unwrap().edge_count(), 0);
        assert!(build_epsilon_graph(&ds, 0.0, WeightScheme::Unit).is_err());
    }

    #[test]
    fn full_rbf_cases() {
        let g = build_full_rbf_graph(&line(&[0.0, 1.0, 3.0]), 1.0).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.edges().iter().all(|e| e.weight > 0.0 && e.weight <= 1.0));
        let g = build_full_rbf_graph(&line(&[2.0, 2.0]), 1.0).unwrap();
        assert_eq!(g.edges()[0].weight, 1.0);
        let ds = line(&[0.0, 1.0, 3.0]);
        let mut prev = 0.0;
        for sigma in [0.5, 1.0, 10.0, 1000.0] {
            let g = build_full_rbf_graph(&ds, sigma).unwrap();
            let total: f64 = g.edges().iter().map(|e| e.weight).sum();
            assert!(total > prev);
            prev = total;
        }
        assert!((prev - 3.0).abs() < 1e-4);
    }

    #[test]
    fn mean_knn_distance_cases() {
        let ds = line(&[0.0, 1.0, 3.0]);
        assert!((mean_knn_distance(&ds, 1).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(mean_knn_distance(&line(&[2.0, 2.0]), 1).unwrap(), 0.0);
        let grid: Vec<f64> = (0..30)
            .flat_map(|i| (0..30).flat_map(move |j| [i as f64 * 0.5, j as f64 * 0.5]))
            .collect();
        let ds = Dataset::new(grid, 2, None, "grid").unwrap();
        assert!((mean_knn_distance(&ds, 1).unwrap() - 0.5).abs() < 1e-12);
        assert!(mean_knn_distance(&ds, 0).is_err());
    }

    #[test]
    fn graph_validation() {
        let meta = GraphMeta::external();
        let e = |u, v, weight| Edge { u, v, weight };
        assert!(Graph::new(3, vec![e(0, 0, 1.0)], meta.clone()).is_err());
        assert!(Graph::new(3, vec![e(0, 1, 1.0), e(1, 0, 1.0)], meta.clone()).is_err());
        assert!(Graph::new(3, vec![e(0, 1, 0.0)], meta.clone()).is_err());
        assert!(Graph::new(3, vec![e(0, 3, 1.0)], meta.clone()).is_err());
        let g = Graph::new(3, vec![e(2, 1, 1.0), e(0, 1, 2.0)], meta).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1), (1, 2)]);
    }
}
