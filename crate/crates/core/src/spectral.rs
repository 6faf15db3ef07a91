//! Graph Laplacians, spectral clustering, and cut metrics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{dot, smallest_eigenpairs, SymMatrix};
use crate::seed::{derive_seed, rng};

/// Cluster assignment for every node. Clusters may be empty; such partitions
/// are reported as degenerate and rejected by [`cut_metrics`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
    sizes: Vec<usize>,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("partition needs at least one cluster".into()));
        }
        let mut sizes = vec![0; k];
        for (i, &c) in assignment.iter().enumerate() {
            if c >= k {
                return Err(Error::InvalidParameter(format!(
                    "node {i} assigned to cluster {c}, but K={k}"
                )));
            }
            sizes[c] += 1;
        }
        Ok(Self {
            assignment,
            k,
            sizes,
        })
    }

    /// Builds a partition with `K` = number of distinct ids, renumbering
    /// clusters in order of first occurrence.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let assignment = labels
            .iter()
            .map(|&l| match map.iter().find(|(from, _)| *from == l) {
                Some(&(_, to)) => to,
                None => {
                    map.push((l, map.len()));
                    map.len() - 1
                }
            })
            .collect();
        Self::new(assignment, map.len().max(1)).expect("ids are dense")
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.sizes.contains(&0)
    }

    pub fn min_size(&self) -> usize {
        self.sizes.iter().copied().min().unwrap_or(0)
    }

    /// Same clustering with ids renumbered by first occurrence. Empty
    /// clusters keep the highest ids.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        for &c in &self.assignment {
            if map[c] == usize::MAX {
                map[c] = next;
                next += 1;
            }
        }
        for slot in map.iter_mut().filter(|m| **m == usize::MAX) {
            *slot = next;
            next += 1;
        }
        Self::new(self.assignment.iter().map(|&c| map[c]).collect(), self.k)
            .expect("relabeling keeps ids in range")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    /// Total weight of edges joining different clusters, each edge counted once.
    pub cut: f64,
    pub ratio_cut: f64,
    pub ncut: f64,
    pub sizes: Vec<usize>,
    pub volumes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    /// The hyperplane `x[axis] = at` in `d` dimensions.
    pub fn axis_aligned(d: usize, axis: usize, at: f64) -> Self {
        let mut normal = vec![0.0; d];
        normal[axis] = 1.0;
        Self { normal, offset: at }
    }
}

pub fn laplacian(graph: &Graph, normalized: bool) -> SymMatrix {
    let n = graph.n();
    let deg = graph.weighted_degrees();
    let mut l = SymMatrix::zeros(n);
    if normalized {
        for i in 0..n {
            l.set(i, i, 1.0);
        }
        for e in graph.edges() {
            l.set(e.u, e.v, -e.weight / libm::sqrt(deg[e.u] * deg[e.v]));
        }
    } else {
        for (i, &d) in deg.iter().enumerate() {
            l.set(i, i, d);
        }
        for e in graph.edges() {
            l.set(e.u, e.v, -e.weight);
        }
    }
    l
}

/// Total weight of edges whose endpoints lie in different clusters.
pub fn cut_value(graph: &Graph, assignment: &[usize]) -> f64 {
    graph
        .edges()
        .iter()
        .filter(|e| assignment[e.u] != assignment[e.v])
        .map(|e| e.weight)
        .sum()
}

pub fn cut_metrics(graph: &Graph, partition: &Partition) -> Result<CutReport> {
    if partition.len() != graph.n() {
        return Err(Error::LengthMismatch {
            expected: graph.n(),
            got: partition.len(),
        });
    }
    if let Some(empty) = partition.sizes().iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(empty));
    }
    let a = partition.assignment();
    let k = partition.k();
    let mut boundary = vec![0.0; k];
    let mut volumes = vec![0.0; k];
    let mut cut = 0.0;
    for e in graph.edges() {
        volumes[a[e.u]] += e.weight;
        volumes[a[e.v]] += e.weight;
        if a[e.u] != a[e.v] {
            cut += e.weight;
            boundary[a[e.u]] += e.weight;
            boundary[a[e.v]] += e.weight;
        }
    }
    let sizes = partition.sizes().to_vec();
    let ratio_cut = boundary
        .iter()
        .zip(&sizes)
        .map(|(b, &s)| b / s as f64)
        .sum();
    let ncut = boundary
        .iter()
        .zip(&volumes)
        .map(|(&b, &v)| if b == 0.0 { 0.0 } else { b / v })
        .sum();
    Ok(CutReport {
        cut,
        ratio_cut,
        ncut,
        sizes,
        volumes,
    })
}

/// Splits points by the side of a hyperplane: cluster 0 where
/// `x·normal - offset < 0`, cluster 1 where it is positive, and a seeded coin
/// flip for points exactly on it. A side may come out empty.
pub fn hyperplane_partition(data: &Dataset, plane: &Hyperplane, seed: u64) -> Result<Partition> {
    if plane.normal.len() != data.dim() {
        return Err(Error::LengthMismatch {
            expected: data.dim(),
            got: plane.normal.len(),
        });
    }
    if plane.normal.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidParameter("hyperplane normal is zero".into()));
    }
    let mut coin = rng(derive_seed(seed, "hyperplane-tie", 0));
    let assignment = data
        .rows()
        .map(|x| {
            let s = dot(x, &plane.normal) - plane.offset;
            if s < 0.0 {
                0
            } else if s > 0.0 {
                1
            } else {
                coin.random_range(0..2)
            }
        })
        .collect();
    Partition::new(assignment, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutRatio {
    /// Cut across the unbalanced hyperplane over cut across the balanced one.
    pub q: f64,
    /// Fraction of points on the smaller side of the unbalanced hyperplane.
    pub y: f64,
}

pub fn cut_ratio_stats(
    graph: &Graph,
    data: &Dataset,
    unbalanced: &Hyperplane,
    balanced: &Hyperplane,
    seed: u64,
) -> Result<CutRatio> {
    if graph.n() != data.n() {
        return Err(Error::LengthMismatch {
            expected: data.n(),
            got: graph.n(),
        });
    }
    let pu = hyperplane_partition(data, unbalanced, derive_seed(seed, "cut-ratio", 0))?;
    let pb = hyperplane_partition(data, balanced, derive_seed(seed, "cut-ratio", 1))?;
    let cu = cut_metrics(graph, &pu)?;
    let cb = cut_metrics(graph, &pb)?;
    if cb.cut == 0.0 {
        return Err(Error::ZeroDenominatorCut);
    }
    Ok(CutRatio {
        q: cu.cut / cb.cut,
        y: pu.min_size() as f64 / data.n() as f64,
    })
}

const KMEANS_RESTARTS: usize = 10;
const KMEANS_ITERATIONS: usize = 100;

/// Spectral clustering with the `k` smallest Laplacian eigenvectors.
///
/// For `k = 2` the Fiedler vector is thresholded at the best of the `n - 1`
/// sorted splits (RatioCut for the unnormalized Laplacian, NCut for the
/// normalized one). For `k > 2` the spectral embedding is clustered by
/// k-means with seeded restarts; the normalized variant row-normalizes the
/// embedding first.
pub fn spectral_cluster(graph: &Graph, k: usize, normalized: bool, seed: u64) -> Result<Partition> {
    let n = graph.n();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("K={k} must lie in [2, n={n}]")));
    }
    let eig = smallest_eigenpairs(&laplacian(graph, normalized), k);
    if k == 2 {
        let mut fiedler = eig.vectors[1].clone();
        if normalized {
            for (f, d) in fiedler.iter_mut().zip(graph.weighted_degrees()) {
                if d > 0.0 {
                    *f /= libm::sqrt(d);
                }
            }
        }
        return Ok(best_sweep_split(graph, &fiedler, normalized));
    }
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| eig.vectors.iter().map(|v| v[i]).collect())
        .collect();
    if normalized {
        for row in &mut rows {
            let norm = libm::sqrt(dot(row, row));
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
    }
    let assignment = kmeans(&rows, k, seed)?;
    Ok(Partition::new(assignment, k)?.canonical())
}

/// Best two-way split of the nodes sorted by `score`.
pub fn best_sweep_split(graph: &Graph, score: &[f64], normalized: bool) -> Partition {
    let n = graph.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    let adj = graph.adjacency();
    let deg = graph.weighted_degrees();
    let total_vol: f64 = deg.iter().sum();
    let mut left = vec![false; n];
    let mut cut = 0.0;
    let mut vol_left = 0.0;
    let mut best = (f64::INFINITY, 1);
    for (s, &u) in order[..n - 1].iter().enumerate() {
        left[u] = true;
        vol_left += deg[u];
        for &(v, w) in &adj[u] {
            cut += if left[v] { -w } else { w };
        }
        let size = (s + 1) as f64;
        let objective = if normalized {
            let part = |vol: f64| if cut == 0.0 { 0.0 } else { cut / vol };
            part(vol_left) + part(total_vol - vol_left)
        } else {
            cut * (1.0 / size + 1.0 / (n as f64 - size))
        };
        if objective < best.0 {
            best = (objective, s + 1);
        }
    }
    let mut assignment = vec![1; n];
    for &u in &order[..best.1] {
        assignment[u] = 0;
    }
    Partition::new(assignment, 2)
        .expect("two clusters")
        .canonical()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_center(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(x, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp_init(rows: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centers = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[pick].clone());
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, &centers[centers.len() - 1]));
        }
    }
    centers
}

/// One Lloyd run; `None` when a cluster empties.
fn lloyd(rows: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> Option<(Vec<usize>, f64)> {
    let k = centers.len();
    let dim = rows[0].len();
    let mut assignment = vec![usize::MAX; rows.len()];
    for _ in 0..KMEANS_ITERATIONS {
        let mut changed = false;
        for (a, r) in assignment.iter_mut().zip(rows) {
            let c = nearest_center(r, &centers).0;
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, r) in assignment.iter().zip(rows) {
            counts[a] += 1;
            sums[a].iter_mut().zip(r).for_each(|(s, x)| *s += x);
        }
        if counts.contains(&0) {
            return None;
        }
        for ((center, sum), count) in centers.iter_mut().zip(sums).zip(counts) {
            *center = sum.into_iter().map(|s| s / count as f64).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = rows.iter().map(|r| nearest_center(r, &centers).1).sum();
    let final_assignment: Vec<usize> = rows.iter().map(|r| nearest_center(r, &centers).0).collect();
    let mut counts = vec![0usize; k];
    final_assignment.iter().for_each(|&a| counts[a] += 1);
    if counts.contains(&0) {
        return None;
    }
    Some((final_assignment, inertia))
}

/// k-means with k-means++ seeding and seeded restarts. Restarts that end
/// with an empty cluster are replaced, up to three times the restart count.
pub fn kmeans(rows: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > rows.len() {
        return Err(Error::InvalidParameter(format!(
            "K={k} must lie in [1, {}]",
            rows.len()
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut successes = 0;
    for attempt in 0..3 * KMEANS_RESTARTS {
        if successes == KMEANS_RESTARTS {
            break;
        }
        let mut r = rng(derive_seed(seed, "kmeans", attempt as u64));
        let centers = kmeans_pp_init(rows, k, &mut r);
        if let Some((assignment, inertia)) = lloyd(rows, centers) {
            successes += 1;
            if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
                best = Some((inertia, assignment));
            }
        }
    }
    best.map(|(_, a)| a).ok_or(Error::DegenerateClustering)
}
