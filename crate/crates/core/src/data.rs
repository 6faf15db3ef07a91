//! Datasets and the synthetic generators used by the experiments.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// `n` points in `d` dimensions, stored row-major, with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
    labels: Option<Vec<usize>>,
    name: String,
}

impl Dataset {
    /// Builds a dataset from row-major coordinates.
    ///
    /// Labels, when present, must cover every class id `0..K` at least once.
    pub fn new(
        points: Vec<f64>,
        d: usize,
        labels: Option<Vec<usize>>,
        name: impl Into<String>,
    ) -> Result<Self> {
        if d == 0 || points.len() % d != 0 {
            return Err(Error::TooSmall {
                n: if d == 0 { 0 } else { points.len() / d },
                d,
            });
        }
        let n = points.len() / d;
        if n < 2 {
            return Err(Error::TooSmall { n, d });
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        if let Some(labels) = &labels {
            validate_labels(labels, n)?;
        }
        Ok(Self {
            points,
            n,
            d,
            labels,
            name: name.into(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>, name: &str) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::LengthMismatch {
                expected: d,
                got: rows[bad].len(),
            });
        }
        Self::new(rows.concat(), d, labels, name)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.d)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of classes, or `None` without labels.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn without_labels(&self) -> Self {
        Self {
            labels: None,
            ..self.clone()
        }
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.points.iter().map(|v| v * factor).collect(),
            self.d,
            self.labels.clone(),
            self.name.clone(),
        )
    }

    /// The rows at `indices`, in that order. Labels are kept as they are and
    /// must still cover every class.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidParameter(format!(
                    "row index {i} out of range for n={}",
                    self.n
                )));
            }
            points.extend_from_slice(self.point(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Self::new(points, self.d, labels, self.name.clone())
    }
}

fn validate_labels(labels: &[usize], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidLabels(format!(
            "class {missing} has no points (labels must cover 0..{k})"
        )));
    }
    Ok(())
}

/// One diagonal-covariance Gaussian component of a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Diagonal of the covariance matrix (variances, not standard deviations).
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        let spec = Self { components };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a spec from unnormalized weights, e.g. a `2:8:1` ratio.
    pub fn from_ratios(ratios: &[f64], means: &[&[f64]], variances: &[&[f64]]) -> Result<Self> {
        let total: f64 = ratios.iter().sum();
        if ratios.len() != means.len() || ratios.len() != variances.len() || total <= 0.0 {
            return Err(Error::InvalidMixture(
                "ratios, means and variances must have equal length and positive total".into(),
            ));
        }
        Self::new(
            ratios
                .iter()
                .zip(means)
                .zip(variances)
                .map(|((&r, &m), &v)| MixtureComponent {
                    weight: r / total,
                    mean: m.to_vec(),
                    variance: v.to_vec(),
                })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .components
            .first()
            .ok_or_else(|| Error::InvalidMixture("no components".into()))?;
        let d = first.mean.len();
        if d == 0 {
            return Err(Error::InvalidMixture("zero-dimensional mean".into()));
        }
        let mut total = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            if c.mean.len() != d || c.variance.len() != d {
                return Err(Error::InvalidMixture(format!(
                    "component {i} has inconsistent dimension"
                )));
            }
            if !(c.weight >= 0.0) || !c.weight.is_finite() {
                return Err(Error::InvalidMixture(format!("component {i} has invalid weight")));
            }
            if c.variance.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidMixture(format!(
                    "component {i} has a non-positive variance"
                )));
            }
            if c.mean.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMixture(format!("component {i} has a non-finite mean")));
            }
            total += c.weight;
        }
        if libm::fabs(total - 1.0) > 1e-12 {
            return Err(Error::InvalidMixture(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    /// The two-component mixture with a shallow valley at `x1 = 1` and the
    /// balanced cut near `x1 = 4`: weights 0.9/0.1, means (4.5,0)/(0,0),
    /// covariances diag(2,1)/I.
    pub fn unbalanced_pair() -> Self {
        Self {
            components: vec![
                MixtureComponent {
                    weight: 0.9,
                    mean: vec![4.5, 0.0],
                    variance: vec![2.0, 1.0],
                },
                MixtureComponent {
                    weight: 0.1,
                    mean: vec![0.0, 0.0],
                    variance: vec![1.0, 1.0],
                },
            ],
        }
    }

    /// One large and two small proximal components along `x1`, ratio 2:8:1,
    /// with valleys near `x1 ≈ 1.8` and `x1 ≈ 8.2`.
    pub fn unbalanced_triple() -> Self {
        Self::from_ratios(
            &[2.0, 8.0, 1.0],
            &[&[-0.7, 0.0], &[4.5, 0.0], &[9.7, 0.0]],
            &[&[1.0, 1.0], &[2.0, 1.0], &[0.7, 0.7]],
        )
        .expect("built-in mixture is valid")
    }

    pub fn standard_normal(d: usize) -> Self {
        Self {
            components: vec![MixtureComponent {
                weight: 1.0,
                mean: vec![0.0; d],
                variance: vec![1.0; d],
            }],
        }
    }
}

/// Draws `n` i.i.d. points; each point's label is the index of the component
/// it was drawn from.
pub fn gen_gaussian_mixture(spec: &MixtureSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::TooSmall { n, d: spec.dim() });
    }
    let d = spec.dim();
    let mut rng = seed::rng(seed);
    let mut cumulative = Vec::with_capacity(spec.components.len());
    let mut acc = 0.0;
    for c in &spec.components {
        acc += c.weight;
        cumulative.push(acc);
    }
    let last_nonzero = spec
        .components
        .iter()
        .rposition(|c| c.weight > 0.0)
        .unwrap_or(0);

    let mut points = Vec::with_capacity(n * d);
    let mut raw = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let comp = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(last_nonzero);
        let c = &spec.components[comp];
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            points.push(c.mean[j] + libm::sqrt(c.variance[j]) * z);
        }
        raw.push(comp);
    }
    // Components that drew no points are dropped from the label space.
    let labels = compact_labels(&raw, spec.components.len());
    Dataset::new(points, d, Some(labels), "gaussian-mixture")
}

fn compact_labels(raw: &[usize], k: usize) -> Vec<usize> {
    let mut present = vec![false; k];
    for &l in raw {
        present[l] = true;
    }
    let mut remap = vec![0; k];
    let mut next = 0;
    for (i, p) in present.iter().enumerate() {
        if *p {
            remap[i] = next;
            next += 1;
        }
    }
    raw.iter().map(|&l| remap[l]).collect()
}

/// Geometry of the two-moons-plus-blob generator.
///
/// The upper moon is the unit half circle `(cos t, sin t)`, the lower moon
/// `(1 - cos t, 0.5 - sin t)`, `t ∈ [0, π]`, i.e. centers offset by `(1, 0.5)`.
/// The blob is centered 2.5 units right of the moons' joint center `(0.5, 0.25)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoonsGeometry {
    pub radius: f64,
    pub center_offset: [f64; 2],
    pub blob_center: [f64; 2],
    pub blob_std: f64,
}

pub const TWO_MOONS_GEOMETRY: MoonsGeometry = MoonsGeometry {
    radius: 1.0,
    center_offset: [1.0, 0.5],
    blob_center: [3.0, 0.25],
    blob_std: 0.25,
};

/// Splits `n` into integer counts proportional to `fractions`
/// (largest remainder, ties to the lower index).
pub fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let total: f64 = fractions.iter().sum();
    let exact: Vec<f64> = fractions.iter().map(|f| f / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| libm::floor(*e + 1e-9) as usize).collect();
    let mut rest = n.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a] as f64;
        let rb = exact[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(fractions.len() * 2) {
        if rest == 0 {
            break;
        }
        if fractions[i] > 0.0 {
            counts[i] += 1;
            rest -= 1;
        }
    }
    counts
}

/// Two interleaved half circles plus a Gaussian blob to their right, with
/// exact class counts `apportion(n, fractions)`. Classes with zero fraction
/// are left out of the label space.
pub fn gen_two_moons_gaussian(
    n: usize,
    fractions: [f64; 3],
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if fractions.iter().any(|f| !(*f >= 0.0)) || libm::fabs(fractions.iter().sum::<f64>() - 1.0) > 1e-9
    {
        return Err(Error::InvalidParameter(
            "fractions must be non-negative and sum to 1".into(),
        ));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::InvalidParameter("noise must be a finite non-negative value".into()));
    }
    let g = TWO_MOONS_GEOMETRY;
    let counts = apportion(n, &fractions);
    let mut rng = seed::rng(seed);
    let mut points = Vec::with_capacity(2 * n);
    let mut raw = Vec::with_capacity(n);
    for (class, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let (x, y) = match class {
                0 | 1 => {
                    let t = rng.random::<f64>() * core::f64::consts::PI;
                    let (cx, cy) = if class == 0 {
                        (g.radius * libm::cos(t), g.radius * libm::sin(t))
                    } else {
                        (
                            g.center_offset[0] - g.radius * libm::cos(t),
                            g.center_offset[1] - g.radius * libm::sin(t),
                        )
                    };
                    let nx: f64 = rng.sample(StandardNormal);
                    let ny: f64 = rng.sample(StandardNormal);
                    (cx + noise * nx, cy + noise * ny)
                }
                _ => {
                    let nx: f64 = rng.sample(StandardNormal);
                    let ny: f64 = rng.sample(StandardNormal);
                    (g.blob_center[0] + g.blob_std * nx, g.blob_center[1] + g.blob_std * ny)
                }
            };
            points.push(x);
            points.push(y);
            raw.push(class);
        }
    }
    let labels = compact_labels(&raw, 3);
    Dataset::new(points, 2, Some(labels), "two-moons-gaussian")
}
