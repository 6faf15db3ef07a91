//! Semi-supervised labeling with Gaussian random fields (harmonic functions).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{Cholesky, SymMatrix};
use crate::spectral::Partition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    labeled: Vec<(usize, usize)>,
    k: usize,
}

impl LabelSet {
    /// Validates `(index, class)` pairs against `n` nodes: distinct indices in
    /// range and every class `0..k` represented.
    pub fn new(labeled: Vec<(usize, usize)>, k: usize, n: usize) -> Result<Self> {
        let mut seen_node = vec![false; n];
        let mut seen_class = vec![false; k];
        for &(i, c) in &labeled {
            if i >= n {
                return Err(Error::InvalidLabels(format!("index {i} out of range for n={n}")));
            }
            if c >= k {
                return Err(Error::InvalidLabels(format!("class {c} out of range for K={k}")));
            }
            if seen_node[i] {
                return Err(Error::InvalidLabels(format!("index {i} labeled twice")));
            }
            seen_node[i] = true;
            seen_class[c] = true;
        }
        if let Some(c) = seen_class.iter().position(|s| !s) {
            return Err(Error::InvalidLabels(format!("class {c} has no labeled sample")));
        }
        Ok(Self { labeled, k })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.labeled
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_labeled(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        self.labeled.iter().for_each(|&(i, _)| mask[i] = true);
        mask
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrfResult {
    /// Row-major `n × K` class scores.
    pub scores: Vec<f64>,
    pub k: usize,
    pub prediction: Partition,
}

impl GrfResult {
    pub fn score(&self, node: usize) -> &[f64] {
        &self.scores[node * self.k..(node + 1) * self.k]
    }
}

/// Harmonic extension of one-hot labels: `L_uu F_u = W_ul Y_l`.
pub fn grf_propagate(graph: &Graph, labels: &LabelSet) -> Result<GrfResult> {
    let n = graph.n();
    let k = labels.k();
    let mask = labels.is_labeled(n);
    if let Some(&(i, _)) = labels.pairs().iter().find(|&&(i, _)| i >= n) {
        return Err(Error::InvalidLabels(format!("index {i} out of range for n={n}")));
    }
    let adj = graph.adjacency();

    let mut reached = mask.clone();
    let mut queue: Vec<usize> = labels.pairs().iter().map(|&(i, _)| i).collect();
    while let Some(u) = queue.pop() {
        for &(v, _) in &adj[u] {
            if !reached[v] {
                reached[v] = true;
                queue.push(v);
            }
        }
    }
    if let Some(node) = reached.iter().position(|r| !r) {
        return Err(Error::Unreachable(node));
    }

    let mut scores = vec![0.0; n * k];
    for &(i, c) in labels.pairs() {
        scores[i * k + c] = 1.0;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
    if !free.is_empty() {
        let mut position = vec![usize::MAX; n];
        for (p, &i) in free.iter().enumerate() {
            position[i] = p;
        }
        let mut system = SymMatrix::zeros(free.len());
        let mut rhs = vec![vec![0.0; free.len()]; k];
        for (p, &u) in free.iter().enumerate() {
            for &(v, w) in &adj[u] {
                system.add(p, p, w);
                if mask[v] {
                    for (c, r) in rhs.iter_mut().enumerate() {
                        r[p] += w * scores[v * k + c];
                    }
                } else if v > u {
                    system.set(p, position[v], -w);
                }
            }
        }
        let chol = Cholesky::factor(&system)?;
        for (c, r) in rhs.iter().enumerate() {
            for (p, value) in chol.solve(r).into_iter().enumerate() {
                scores[free[p] * k + c] = value;
            }
        }
    }

    let assignment = (0..n)
        .map(|i| {
            let row = &scores[i * k..(i + 1) * k];
            let mut best = 0;
            for c in 1..k {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(GrfResult {
        scores,
        k,
        prediction: Partition::new(assignment, k)?,
    })
}
