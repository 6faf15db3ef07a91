//! Dense symmetric linear algebra: partial eigendecomposition and Cholesky.
//!
//! [`smallest_eigenpairs`] reduces the matrix to tridiagonal form with
//! Householder reflections, locates the requested eigenvalues by Sturm-count
//! bisection, recovers eigenvectors of the tridiagonal matrix by inverse
//! iteration (re-orthogonalized inside eigenvalue clusters) and maps them back
//! through the reflections. Only the reduction is cubic; each requested
//! eigenpair costs `O(n²)` on top of it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square symmetric matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds `v` to `(i, j)` and, off the diagonal, to `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Eigenpairs in ascending eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// Unit-norm eigenvectors; the first coordinate that is not negligible is positive.
    pub vectors: Vec<Vec<f64>>,
}

struct Reflector {
    beta: f64,
    v: Vec<f64>,
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    reflectors: Vec<Reflector>,
}

fn tridiagonalize(a: &SymMatrix) -> Tridiagonal {
    let n = a.n;
    let mut m = a.data.clone();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![0.0; n];

    // Only the lower triangle of the trailing block is read or written.
    for k in 0..n.saturating_sub(2) {
        diag[k] = m[k * n + k];
        let size = n - k - 1;
        let base = k + 1;
        let mut v: Vec<f64> = (base..n).map(|i| m[i * n + k]).collect();
        let tail: f64 = v[1..].iter().map(|x| x * x).sum();
        if tail == 0.0 {
            off[k] = v[0];
            reflectors.push(Reflector { beta: 0.0, v });
            continue;
        }
        let xnorm = libm::sqrt(v[0] * v[0] + tail);
        let alpha = if v[0] >= 0.0 { -xnorm } else { xnorm };
        v[0] -= alpha;
        let beta = 2.0 / (v[0] * v[0] + tail);
        off[k] = alpha;

        // p = beta * B v
        let p = &mut p[..size];
        p.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..size {
            let row = &m[(base + i) * n + base..(base + i) * n + base + i + 1];
            let vi = v[i];
            let (lower, d) = row.split_at(i);
            let mut acc = d[0] * vi;
            for ((pj, bij), vj) in p[..i].iter_mut().zip(lower).zip(&v[..i]) {
                acc += bij * vj;
                *pj += bij * vi;
            }
            p[i] += acc;
        }
        p.iter_mut().for_each(|x| *x *= beta);
        let kappa = 0.5 * beta * dot(p, &v);
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();

        for i in 0..size {
            let row = &mut m[(base + i) * n + base..(base + i) * n + base + i + 1];
            let (vi, wi) = (v[i], w[i]);
            for ((bij, vj), wj) in row.iter_mut().zip(&v[..=i]).zip(&w[..=i]) {
                *bij -= vi * wj + wi * vj;
            }
        }
        reflectors.push(Reflector { beta, v });
    }
    if n >= 2 {
        diag[n - 2] = m[(n - 2) * n + n - 2];
        off[n - 2] = m[(n - 1) * n + n - 2];
    }
    if n >= 1 {
        diag[n - 1] = m[(n - 1) * n + n - 1];
    }
    Tridiagonal {
        diag,
        off,
        reflectors,
    }
}

impl Tridiagonal {
    fn norm_bound(&self) -> f64 {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { libm::fabs(self.off[i - 1]) } else { 0.0 };
                let right = if i + 1 < n { libm::fabs(self.off[i]) } else { 0.0 };
                libm::fabs(self.diag[i]) + left + right
            })
            .fold(0.0, f64::max)
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { libm::fabs(self.off[i - 1]) } else { 0.0 };
            let right = if i + 1 < n { libm::fabs(self.off[i]) } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    fn sturm_count(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0.. {
            if libm::fabs(q) < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
            if i + 1 == self.diag.len() {
                break;
            }
            let e = self.off[i];
            q = self.diag[i + 1] - x - e * e / q;
        }
        count
    }

    /// The `j`-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, j: usize, pivmin: f64) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = libm::fabs(lo).max(libm::fabs(hi)).max(pivmin);
        lo -= 2.0 * f64::EPSILON * scale + pivmin;
        hi += 2.0 * f64::EPSILON * scale + pivmin;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 2.0 * f64::EPSILON * libm::fabs(lo).max(libm::fabs(hi)) + pivmin
                || mid <= lo
                || mid >= hi
            {
                break;
            }
            if self.sturm_count(mid, pivmin) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn apply(&self, x: &[f64], shift: f64) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut y = (self.diag[i] - shift) * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Maps an eigenvector of the tridiagonal matrix back to the original basis.
    fn back_transform(&self, y: &[f64]) -> Vec<f64> {
        let mut z = y.to_vec();
        for (k, r) in self.reflectors.iter().enumerate().rev() {
            if r.beta == 0.0 {
                continue;
            }
            let seg = &mut z[k + 1..];
            let s = r.beta * dot(&r.v, seg);
            seg.iter_mut().zip(&r.v).for_each(|(zi, vi)| *zi -= s * vi);
        }
        z
    }
}

/// LU factorization of a shifted tridiagonal matrix with partial pivoting.
struct TridiagonalLu {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &Tridiagonal, shift: f64, tiny: f64) -> Self {
        let n = t.diag.len();
        let mut d: Vec<f64> = t.diag.iter().map(|x| x - shift).collect();
        let mut du = t.off.clone();
        let mut dl = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if libm::fabs(d[i]) >= libm::fabs(dl[i]) {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                } else {
                    dl[i] = 0.0;
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for x in d.iter_mut() {
            if libm::fabs(*x) < tiny {
                *x = if *x < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            d,
            du,
            du2,
            dl,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for u in against {
            let c = dot(v, u);
            v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= c * ui);
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = norm(v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

fn start_vector(n: usize, j: usize, attempt: u64) -> Vec<f64> {
    let mut state = crate::seed::splitmix64((j as u64) << 8 ^ attempt);
    (0..n)
        .map(|_| {
            state = crate::seed::splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// Applies the sign convention: the first coordinate whose magnitude exceeds
/// `1e-9` times the largest is made positive.
pub fn canonical_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0, |m: f64, x| m.max(libm::fabs(*x)));
    if let Some(first) = v.iter().find(|x| libm::fabs(**x) > 1e-9 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// The `count` smallest eigenpairs of a symmetric matrix.
pub fn smallest_eigenpairs(a: &SymMatrix, count: usize) -> EigenPairs {
    let n = a.n;
    let count = count.min(n);
    if n == 0 || count == 0 {
        return EigenPairs {
            values: Vec::new(),
            vectors: Vec::new(),
        };
    }
    if n == 1 {
        return EigenPairs {
            values: vec![a.get(0, 0)],
            vectors: vec![vec![1.0]],
        };
    }
    let t = tridiagonalize(a);
    let tnorm = t.norm_bound().max(a.max_abs()).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE.max(tnorm * f64::EPSILON * f64::EPSILON);
    let tiny = f64::EPSILON * tnorm;
    let cluster_gap = 1e-3 * tnorm;

    let values: Vec<f64> = (0..count).map(|j| t.eigenvalue(j, pivmin)).collect();
    let mut tri_vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut cluster_start = 0;
    for j in 0..count {
        if j > 0 && values[j] - values[j - 1] > cluster_gap {
            cluster_start = j;
        }
        let lu = TridiagonalLu::factor(&t, values[j], tiny);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for attempt in 0..3u64 {
            let mut y = start_vector(n, j, attempt);
            orthogonalize(&mut y, &tri_vectors[cluster_start..j]);
            normalize(&mut y);
            for _ in 0..6 {
                lu.solve(&mut y);
                if y.iter().any(|x| !x.is_finite()) {
                    break;
                }
                orthogonalize(&mut y, &tri_vectors[cluster_start..j]);
                normalize(&mut y);
            }
            if y.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let resid = norm(
                &t.apply(&y, values[j]),
            );
            if best.as_ref().is_none_or(|(r, _)| resid < *r) {
                best = Some((resid, y));
            }
            if resid <= 1e-12 * tnorm {
                break;
            }
        }
        let (_, y) = best.unwrap_or_else(|| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            (f64::INFINITY, e)
        });
        tri_vectors.push(y);
    }

    let vectors = tri_vectors
        .iter()
        .map(|y| {
            let mut z = t.back_transform(y);
            normalize(&mut z);
            canonical_sign(&mut z);
            z
        })
        .collect();
    EigenPairs { values, vectors }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self> {
        let n = a.n;
        let mut l = a.data.clone();
        for j in 0..n {
            let row_j = l[j * n..j * n + j].to_vec();
            let diag = l[j * n + j] - dot(&row_j, &row_j);
            if !(diag > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let diag = libm::sqrt(diag);
            l[j * n + j] = diag;
            for i in j + 1..n {
                let s = l[i * n + j] - dot(&l[i * n..i * n + j], &row_j);
                l[i * n + j] = s / diag;
            }
        }
        // Clear the (stale) strict upper triangle.
        for i in 0..n {
            for j in i + 1..n {
                l[i * n + j] = 0.0;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            y[i] = (y[i] - dot(row, &y[..i])) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}
