//! Exact Euclidean nearest-neighbor queries.
//!
//! Neighbors are ordered by `(distance, index)`, so equidistant points are
//! broken by ascending index and every query is deterministic.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::data::Dataset;

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(squared_distance(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

fn by_distance_then_index(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then(a.index.cmp(&b.index))
}

/// Keeps the `k` smallest candidates, sorted.
pub(crate) fn k_smallest(mut candidates: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
    let k = k.min(candidates.len());
    if k == 0 {
        return Vec::new();
    }
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, by_distance_then_index);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_distance_then_index);
    candidates
}

/// The `k` nearest neighbors of row `query` among all other rows.
pub fn nearest(data: &Dataset, query: usize, k: usize) -> Vec<Neighbor> {
    let q = data.point(query);
    let candidates = (0..data.n())
        .filter(|&j| j != query)
        .map(|j| Neighbor {
            index: j,
            distance: distance(q, data.point(j)),
        })
        .collect();
    k_smallest(candidates, k)
}

/// Sorted neighbor lists for every row, `k` entries each (self excluded).
#[derive(Debug, Clone)]
pub struct NeighborTable {
    k: usize,
    entries: Vec<Neighbor>,
}

impl NeighborTable {
    pub fn build(data: &Dataset, k: usize) -> Self {
        let k = k.min(data.n() - 1);
        let mut entries = Vec::with_capacity(data.n() * k);
        for i in 0..data.n() {
            entries.extend(nearest(data, i, k));
        }
        Self { k, entries }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ties_break_by_index() {
        let ds = Dataset::new(vec![0.0, 1.0, -1.0, 1.0], 1, None, "t").unwrap();
        let nn = nearest(&ds, 0, 3);
        let idx: Vec<usize> = nn.iter().map(|n| n.index).collect();
        assert_eq!(idx, vec![1, 2, 3]);
    }

    #[test]
    fn table_matches_sorting_everything() {
        let pts: Vec<f64> = (0..40).map(|i| ((i * 37) % 17) as f64 * 0.5).collect();
        let ds = Dataset::new(pts, 2, None, "t").unwrap();
        let table = NeighborTable::build(&ds, 5);
        for i in 0..ds.n() {
            let mut all: Vec<Neighbor> = (0..ds.n())
                .filter(|&j| j != i)
                .map(|j| Neighbor {
                    index: j,
                    distance: distance(ds.point(i), ds.point(j)),
                })
                .collect();
            all.sort_by(by_distance_then_index);
            assert_eq!(table.neighbors(i), &all[..5]);
        }
    }
}
