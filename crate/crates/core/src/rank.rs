//! Density ranks from nearest-neighbor statistics.
//!
//! A statistic `G(x)` (smaller = denser) is computed for every point against a
//! reference half of the data, and the rank is the fraction of points in the
//! point's own half whose statistic is at least as large:
//!
//! ```text
//! R(x) = (1/m) Σ_{x_i in half} 1{G(x) ≤ G(x_i)}
//! ```
//!
//! Ranks near 1 mark high-density points, ranks near `1/m` the tails.
//! Resampling the half split `B` times and averaging reduces variance.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::{distance, k_smallest, Neighbor};
use crate::seed;

/// Which nearest-neighbor statistic drives the rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StatVariant {
    /// Mean of the `(l - ⌊(l-1)/2⌋)`-th through `(l + ⌊l/2⌋)`-th neighbor
    /// distances (exactly `l` terms).
    AvgKnn { l: usize },
    /// As `AvgKnn`, with the `i`-th term weighted by `(l/i)^(1/d)`.
    WeightedAvgKnn { l: usize },
    /// Distance to the `l`-th neighbor.
    LnnDistance { l: usize },
    /// Negated number of reference points within `eps`, so that smaller still
    /// means denser.
    EpsCount { eps: f64 },
}

impl StatVariant {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::AvgKnn { l } | Self::WeightedAvgKnn { l } | Self::LnnDistance { l } if l == 0 => {
                Err(Error::InvalidParameter("neighbor scale l must be at least 1".into()))
            }
            Self::EpsCount { eps } if !(eps > 0.0) || !eps.is_finite() => {
                Err(Error::InvalidParameter("eps must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Smallest reference set the statistic can be evaluated on.
    pub fn min_refset(&self) -> usize {
        match *self {
            Self::AvgKnn { l } | Self::WeightedAvgKnn { l } => l + l / 2,
            Self::LnnDistance { l } => l,
            Self::EpsCount { .. } => 1,
        }
    }

    fn neighbors_needed(&self) -> usize {
        match *self {
            Self::EpsCount { .. } => 0,
            _ => self.min_refset(),
        }
    }

    /// Evaluates the statistic from the ascending neighbor distances
    /// (at least [`neighbors_needed`](Self::neighbors_needed) of them, or all
    /// of them for `EpsCount`).
    fn from_sorted(&self, sorted: &[f64], d: usize) -> f64 {
        match *self {
            Self::AvgKnn { l } => {
                let lo = l - (l - 1) / 2;
                let hi = l + l / 2;
                sorted[lo - 1..hi].iter().sum::<f64>() / l as f64
            }
            Self::WeightedAvgKnn { l } => {
                let lo = l - (l - 1) / 2;
                let hi = l + l / 2;
                let inv_d = 1.0 / d as f64;
                (lo..=hi)
                    .map(|i| libm::pow(l as f64 / i as f64, inv_d) * sorted[i - 1])
                    .sum::<f64>()
                    / l as f64
            }
            Self::LnnDistance { l } => sorted[l - 1],
            Self::EpsCount { eps } => -(sorted.iter().take_while(|&&r| r <= eps).count() as f64),
        }
    }
}

/// `G(x)` against `refset`. An entry of `refset` that is the very same slice
/// as `x` (same memory) is treated as `x` itself and skipped.
pub fn statistic_g(x: &[f64], refset: &[&[f64]], variant: StatVariant, d: usize) -> Result<f64> {
    variant.validate()?;
    let dists: Vec<f64> = refset
        .iter()
        .filter(|r| !core::ptr::eq(r.as_ptr(), x.as_ptr()) || r.len() != x.len())
        .map(|r| distance(x, r))
        .collect();
    let required = variant.min_refset();
    if dists.len() < required {
        return Err(Error::RefsetTooSmall {
            required,
            got: dists.len(),
        });
    }
    let mut dists = dists;
    dists.sort_unstable_by(f64::total_cmp);
    Ok(variant.from_sorted(&dists, d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankParams {
    pub variant: StatVariant,
    pub resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    /// Per-point rank in `(0, 1]`.
    pub ranks: Vec<f64>,
    /// `G` from the last resample the point took part in (`NaN` if none).
    pub statistic: Vec<f64>,
    pub params: RankParams,
}

impl RankVector {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Ranks supplied externally, e.g. read back from a file.
    pub fn from_ranks(ranks: Vec<f64>, statistic: Vec<f64>, params: RankParams) -> Result<Self> {
        if statistic.len() != ranks.len() {
            return Err(Error::LengthMismatch {
                expected: ranks.len(),
                got: statistic.len(),
            });
        }
        if let Some(i) = ranks.iter().position(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "rank {} at index {i} is outside (0, 1]",
                ranks[i]
            )));
        }
        Ok(Self {
            ranks,
            statistic,
            params,
        })
    }
}

/// Statistic of every point in `queries` against the points in `refs`.
fn half_statistics(data: &Dataset, queries: &[usize], refs: &[usize], variant: StatVariant) -> Vec<f64> {
    let need = variant.neighbors_needed();
    let d = data.dim();
    queries
        .iter()
        .map(|&q| {
            let xq = data.point(q);
            let sorted: Vec<f64> = if need == 0 {
                let mut all: Vec<f64> = refs.iter().map(|&r| distance(xq, data.point(r))).collect();
                all.sort_unstable_by(f64::total_cmp);
                all
            } else {
                let cands = refs
                    .iter()
                    .map(|&r| Neighbor {
                        index: r,
                        distance: distance(xq, data.point(r)),
                    })
                    .collect();
                k_smallest(cands, need).iter().map(|n| n.distance).collect()
            };
            variant.from_sorted(&sorted, d)
        })
        .collect()
}

/// `R(x) = (1/m) #{i : G(x) ≤ G(x_i)}` within one half.
fn ranks_within(stats: &[f64]) -> Vec<f64> {
    let m = stats.len();
    let mut sorted = stats.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    stats
        .iter()
        .map(|g| {
            let below = sorted.partition_point(|s| s.total_cmp(g).is_lt());
            (m - below) as f64 / m as f64
        })
        .collect()
}

/// Half-split resampled ranks.
///
/// Each resample shuffles the data, splits it into two halves of size
/// `m = ⌊n/2⌋` (for odd `n` one point sits the resample out), evaluates `G`
/// for each half against the other, and ranks every point within its own
/// half. The final rank averages the resamples a point took part in; a point
/// that never took part gets rank 0.5.
pub fn compute_ranks_ustat(
    data: &Dataset,
    variant: StatVariant,
    resamples: usize,
    seed: u64,
) -> Result<RankVector> {
    variant.validate()?;
    if resamples == 0 {
        return Err(Error::InvalidParameter("resample count B must be at least 1".into()));
    }
    let n = data.n();
    let m = n / 2;
    let required = variant.min_refset();
    if m < required.max(1) {
        return Err(Error::RefsetTooSmall {
            required: 2 * required.max(1) + n % 2,
            got: n,
        });
    }
    let mut rng = seed::rng(seed::derive_seed(seed, "rank-resample", 0));
    let mut order: Vec<usize> = (0..n).collect();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    let mut statistic = vec![f64::NAN; n];

    for _ in 0..resamples {
        order.shuffle(&mut rng);
        let skip = n % 2;
        let first = &order[skip..skip + m];
        let second = &order[skip + m..];
        for (own, other) in [(first, second), (second, first)] {
            let stats = half_statistics(data, own, other, variant);
            for ((&i, r), g) in own.iter().zip(ranks_within(&stats)).zip(&stats) {
                sums[i] += r;
                counts[i] += 1;
                statistic[i] = *g;
            }
        }
    }
    let ranks = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { 0.5 } else { s / c as f64 })
        .collect();
    Ok(RankVector {
        ranks,
        statistic,
        params: RankParams {
            variant,
            resamples,
            seed,
        },
    })
}
