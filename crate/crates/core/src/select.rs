//! Model selection under a minimum cluster size.
//!
//! Every grid point produces one partition. A point is feasible when its
//! smallest cluster holds at least `δn` nodes, and the feasible point with the
//! smallest cut wins. Partitions do not depend on `δ`, so a sweep over `δ`
//! clusters each grid point once and only repeats the cheap selection step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{
    build_epsilon_graph, build_full_rbf_graph, build_knn_graph, build_rmd_graph,
    mean_knn_distance, WeightScheme,
};
use crate::linalg::{dot, smallest_eigenpairs, SymMatrix};
use crate::rank::{compute_ranks_ustat, StatVariant};
use crate::seed::derive_seed;
use crate::spectral::{cut_metrics, spectral_cluster, Partition};

pub const DEFAULT_LAMBDA_GRID: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_FLAT_REL_TOL: f64 = 0.05;
/// Flat-spot position tolerance as a fraction of the projected data spread.
pub const DEFAULT_FLAT_POS_FRACTION: f64 = 0.1;

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub cut: f64,
    pub min_fraction: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: TraceEntry,
    pub index: usize,
    pub delta: f64,
    pub partition: Partition,
    pub trace: Vec<TraceEntry>,
}

impl SelectionResult {
    /// The minimized objective `J(δ)`.
    pub fn objective(&self) -> f64 {
        self.chosen.cut
    }
}

/// A clustered grid point, before any size constraint is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub entry: TraceEntry,
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearch {
    pub k: usize,
    pub variant: StatVariant,
    pub resamples: usize,
    pub weight: WeightScheme,
    pub lambda_grid: Vec<f64>,
    pub clusters: usize,
    #[serde(default)]
    pub normalized: bool,
}

impl LambdaSearch {
    /// Defaults: average k-NN statistic with `l = k`, five resamples, unit
    /// weights, two clusters, and the standard `λ` grid.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            variant: StatVariant::AvgKnn { l: k },
            resamples: 5,
            weight: WeightScheme::Unit,
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            clusters: 2,
            normalized: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    /// k-NN graph with RBF weights.
    Knn,
    FullRbf,
    /// ε-graph with `ε = d̃_k` and RBF weights.
    #[serde(alias = "eps")]
    Epsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSearch {
    pub method: BaselineMethod,
    pub k_grid: Vec<usize>,
    /// `σ = 2^j d̃_k` for each exponent `j`.
    pub sigma_exponents: Vec<i32>,
    pub clusters: usize,
    #[serde(default)]
    pub normalized: bool,
}

impl BaselineSearch {
    /// `k ∈ {20, 30, …, 100}` and `j ∈ {-4, …, 4}`.
    pub fn standard(method: BaselineMethod) -> Self {
        Self {
            method,
            k_grid: (2..=10).map(|i| 10 * i).collect(),
            sigma_exponents: (-4..=4).collect(),
            clusters: 2,
            normalized: false,
        }
    }
}

fn validate_delta(delta: f64, clusters: usize) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0 / clusters as f64) {
        return Err(Error::InvalidParameter(format!(
            "delta={delta} must lie in (0, 1/K) for K={clusters}"
        )));
    }
    Ok(())
}

fn candidate(
    graph: &crate::graph::Graph,
    clusters: usize,
    normalized: bool,
    seed: u64,
    lambda: Option<f64>,
    k: usize,
    sigma: Option<f64>,
) -> Result<Candidate> {
    let partition = spectral_cluster(graph, clusters, normalized, seed)?;
    let report = cut_metrics(graph, &partition)?;
    Ok(Candidate {
        entry: TraceEntry {
            lambda,
            k,
            sigma,
            cut: report.cut,
            min_fraction: partition.min_size() as f64 / graph.n() as f64,
            feasible: false,
        },
        partition,
    })
}

/// Clusters the RMD graph at every `λ` of the grid, reusing one rank vector.
pub fn lambda_candidates(data: &Dataset, search: &LambdaSearch, seed: u64) -> Result<Vec<Candidate>> {
    if search.lambda_grid.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    if let Some(l) = search.lambda_grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::InvalidParameter(format!("lambda={l} outside [0, 1]")));
    }
    let ranks = compute_ranks_ustat(
        data,
        search.variant,
        search.resamples,
        derive_seed(seed, "rank", 0),
    )?;
    search
        .lambda_grid
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let (graph, _) = build_rmd_graph(data, &ranks, search.k, lambda, search.weight)?;
            candidate(
                &graph,
                search.clusters,
                search.normalized,
                derive_seed(seed, "spectral", i as u64),
                Some(lambda),
                search.k,
                None,
            )
        })
        .collect()
}

/// Clusters a baseline graph at every `(k, σ)` of the grid.
pub fn baseline_candidates(
    data: &Dataset,
    search: &BaselineSearch,
    seed: u64,
) -> Result<Vec<Candidate>> {
    if search.k_grid.is_empty() || search.sigma_exponents.is_empty() {
        return Err(Error::InvalidParameter("baseline grid is empty".into()));
    }
    let mut out = Vec::with_capacity(search.k_grid.len() * search.sigma_exponents.len());
    for &k in &search.k_grid {
        let scale = mean_knn_distance(data, k)?;
        for &j in &search.sigma_exponents {
            let sigma = libm::ldexp(scale, j);
            let weight = WeightScheme::Rbf { sigma };
            let graph = match search.method {
                BaselineMethod::Knn => build_knn_graph(data, k, weight)?,
                BaselineMethod::FullRbf => build_full_rbf_graph(data, sigma)?,
                BaselineMethod::Epsilon => build_epsilon_graph(data, scale, weight)?,
            };
            out.push(candidate(
                &graph,
                search.clusters,
                search.normalized,
                derive_seed(seed, "spectral", out.len() as u64),
                None,
                k,
                Some(sigma),
            )?);
        }
    }
    Ok(out)
}

fn tie_key(e: &TraceEntry) -> (f64, f64, usize, f64) {
    (
        e.cut,
        e.lambda.unwrap_or(0.0),
        e.k,
        e.sigma.unwrap_or(0.0),
    )
}

/// Picks the feasible candidate with the smallest cut; ties go to the
/// smaller `λ`, then the smaller `k`, then the smaller `σ`.
pub fn select(candidates: &[Candidate], delta: f64, n: usize) -> Result<SelectionResult> {
    let threshold = delta * n as f64;
    let trace: Vec<TraceEntry> = candidates
        .iter()
        .map(|c| TraceEntry {
            feasible: c.partition.min_size() as f64 >= threshold,
            ..c.entry.clone()
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, e) in trace.iter().enumerate().filter(|(_, e)| e.feasible) {
        let better = match best {
            None => true,
            Some(b) => {
                let (x, y) = (tie_key(e), tie_key(&trace[b]));
                x.0 < y.0
                    || (x.0 == y.0
                        && (x.1, x.2, x.3).partial_cmp(&(y.1, y.2, y.3))
                            == Some(core::cmp::Ordering::Less))
            }
        };
        if better {
            best = Some(i);
        }
    }
    match best {
        Some(index) => Ok(SelectionResult {
            chosen: trace[index].clone(),
            index,
            delta,
            partition: candidates[index].partition.clone(),
            trace,
        }),
        None => Err(Error::Infeasible { trace }),
    }
}

pub fn optimize_lambda(
    data: &Dataset,
    search: &LambdaSearch,
    delta: f64,
    seed: u64,
) -> Result<SelectionResult> {
    validate_delta(delta, search.clusters)?;
    select(&lambda_candidates(data, search, seed)?, delta, data.n())
}

pub fn optimize_baseline(
    data: &Dataset,
    search: &BaselineSearch,
    delta: f64,
    seed: u64,
) -> Result<SelectionResult> {
    validate_delta(delta, search.clusters)?;
    select(&baseline_candidates(data, search, seed)?, delta, data.n())
}

/// First principal axis of the data (unit length, largest-magnitude
/// component positive).
pub fn principal_axis(data: &Dataset) -> Vec<f64> {
    let d = data.dim();
    let n = data.n() as f64;
    let mut mean = vec![0.0; d];
    for x in data.rows() {
        mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n);
    }
    let mut cov = SymMatrix::zeros(d);
    for x in data.rows() {
        for i in 0..d {
            for j in 0..=i {
                cov.add(i, j, -(x[i] - mean[i]) * (x[j] - mean[j]) / n);
            }
        }
    }
    // Largest eigenvector of the covariance = smallest of its negation.
    let mut axis = smallest_eigenpairs(&cov, 1).vectors.swap_remove(0);
    let lead = axis
        .iter()
        .copied()
        .fold(0.0, |m: f64, v| if libm::fabs(v) > libm::fabs(m) { v } else { m });
    if lead < 0.0 {
        axis.iter_mut().for_each(|v| *v = -*v);
    }
    axis
}

/// Threshold along `values` that best separates a two-cluster assignment:
/// the midpoint between consecutive sorted values where the fewest points
/// fall on the wrong side.
pub fn threshold_fit(values: &[f64], assignment: &[usize]) -> f64 {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let total_zero = assignment.iter().filter(|&&c| c == 0).count();
    let mut zeros_left = 0;
    let mut best = (usize::MAX, values[order[0]]);
    for s in 1..n {
        if assignment[order[s - 1]] == 0 {
            zeros_left += 1;
        }
        let (lo, hi) = (values[order[s - 1]], values[order[s]]);
        if lo == hi {
            continue;
        }
        let ones_left = s - zeros_left;
        let zeros_right = total_zero - zeros_left;
        let ones_right = (n - s) - zeros_right;
        // Either cluster may sit on the left.
        let errors = (ones_left + zeros_right).min(zeros_left + ones_right);
        if errors < best.0 {
            best = (errors, 0.5 * (lo + hi));
        }
    }
    best.1
}

/// Position of a two-cluster boundary along `axis` (coordinates are the
/// projections `x·axis`).
pub fn boundary_position(data: &Dataset, partition: &Partition, axis: &[f64]) -> Result<f64> {
    if partition.k() != 2 || partition.len() != data.n() {
        return Err(Error::InvalidParameter(
            "boundary position needs a two-cluster partition of the data".into(),
        ));
    }
    if axis.len() != data.dim() {
        return Err(Error::LengthMismatch {
            expected: data.dim(),
            got: axis.len(),
        });
    }
    let values: Vec<f64> = data.rows().map(|x| dot(x, axis)).collect();
    Ok(threshold_fit(&values, partition.assignment()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub delta: f64,
    /// `None` when no grid point is feasible at this `δ`.
    pub cut: Option<f64>,
    pub position: Option<f64>,
    pub lambda: Option<f64>,
    pub min_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatSpot {
    /// Index range into the curve, inclusive.
    pub start: usize,
    pub end: usize,
    pub delta_high: f64,
    pub delta_low: f64,
    pub cut: f64,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCurve {
    pub points: Vec<DeltaPoint>,
    pub axis: Vec<f64>,
    /// Standard deviation of the data projected onto `axis`.
    pub position_scale: f64,
    pub flat_spots: Vec<FlatSpot>,
}

/// Runs `λ` selection at every `δ` of a descending grid and records the
/// optimal cut and boundary position.
pub fn delta_sweep(
    data: &Dataset,
    search: &LambdaSearch,
    deltas: &[f64],
    seed: u64,
) -> Result<DeltaCurve> {
    if search.clusters != 2 {
        return Err(Error::InvalidParameter("delta sweeps need K=2".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("delta grid must be strictly descending".into()));
    }
    for &delta in deltas {
        validate_delta(delta, 2)?;
    }
    let candidates = lambda_candidates(data, search, seed)?;
    let axis = principal_axis(data);
    let projected: Vec<f64> = data.rows().map(|x| dot(x, &axis)).collect();
    let mean = projected.iter().sum::<f64>() / projected.len() as f64;
    let position_scale = libm::sqrt(
        projected.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / projected.len() as f64,
    );
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        points.push(match select(&candidates, delta, data.n()) {
            Ok(sel) => DeltaPoint {
                delta,
                cut: Some(sel.chosen.cut),
                position: Some(threshold_fit(&projected, sel.partition.assignment())),
                lambda: sel.chosen.lambda,
                min_fraction: Some(sel.chosen.min_fraction),
            },
            Err(Error::Infeasible { .. }) => DeltaPoint {
                delta,
                cut: None,
                position: None,
                lambda: None,
                min_fraction: None,
            },
            Err(e) => return Err(e),
        });
    }
    let mut curve = DeltaCurve {
        points,
        axis,
        position_scale,
        flat_spots: Vec::new(),
    };
    curve.flat_spots = detect_flat_spots(
        &curve,
        DEFAULT_FLAT_REL_TOL,
        DEFAULT_FLAT_POS_FRACTION * position_scale,
    );
    Ok(curve)
}

fn is_flat_step(a: &DeltaPoint, b: &DeltaPoint, rel_tol: f64, pos_tol: f64) -> bool {
    let (Some(ca), Some(cb), Some(pa), Some(pb)) = (a.cut, b.cut, a.position, b.position) else {
        return false;
    };
    let scale = libm::fabs(ca).max(libm::fabs(cb));
    let cut_flat = scale == 0.0 || libm::fabs(ca - cb) <= rel_tol * scale;
    cut_flat && libm::fabs(pa - pb) <= pos_tol
}

/// Maximal runs of at least three consecutive points over which the cut
/// changes by at most `rel_tol` (relative) and the position by at most
/// `pos_tol` (absolute) between neighbors.
pub fn detect_flat_spots(curve: &DeltaCurve, rel_tol: f64, pos_tol: f64) -> Vec<FlatSpot> {
    let pts = &curve.points;
    let mut spots = Vec::new();
    let mut start = 0;
    for i in 1..=pts.len() {
        let continues = i < pts.len() && is_flat_step(&pts[i - 1], &pts[i], rel_tol, pos_tol);
        if continues {
            continue;
        }
        let end = i - 1;
        if end >= start + 2 {
            let run = &pts[start..=end];
            let len = run.len() as f64;
            spots.push(FlatSpot {
                start,
                end,
                delta_high: pts[start].delta,
                delta_low: pts[end].delta,
                cut: run.iter().filter_map(|p| p.cut).sum::<f64>() / len,
                position: run.iter().filter_map(|p| p.position).sum::<f64>() / len,
            });
        }
        start = i;
    }
    spots
}
