//! Analytic limits for ranks and RMD-graph cuts on Gaussian mixtures.
//!
//! These are the population quantities the empirical pipeline converges to:
//! the sublevel-set mass `p(y)` that ranks estimate, and the limit of the
//! scaled RatioCut of a fixed hyperplane on an RMD graph.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::data::MixtureSpec;
use crate::error::{Error, Result};

const QUAD_TOL: f64 = 1e-8;
const QUAD_MAX_DEPTH: u32 = 40;
/// Integration bounds in component standard deviations.
const BOUND_SIGMAS: f64 = 8.0;
/// Grid cells used to bracket level-set crossings in one dimension.
const ROOT_GRID: usize = 128;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    libm::exp(-(x - mean) * (x - mean) / (2.0 * var)) / libm::sqrt(2.0 * PI * var)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, QUAD_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || libm::fabs(delta) <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// A Gaussian mixture with diagonal covariances, as a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    spec: MixtureSpec,
}

impl DensityModel {
    pub fn new(spec: MixtureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &MixtureSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.spec
            .components
            .iter()
            .map(|c| {
                c.weight
                    * x.iter()
                        .zip(&c.mean)
                        .zip(&c.variance)
                        .map(|((&xi, &m), &v)| normal_pdf(xi, m, v))
                        .product::<f64>()
            })
            .sum()
    }

    /// Mass of the half-space `x[axis] < at`.
    pub fn mass_below(&self, axis: usize, at: f64) -> f64 {
        self.spec
            .components
            .iter()
            .map(|c| c.weight * normal_cdf((at - c.mean[axis]) / libm::sqrt(c.variance[axis])))
            .sum()
    }

    /// Mass of the half-space `x[axis] > at`, computed from the upper tails
    /// so that small masses keep their precision.
    pub fn mass_above(&self, axis: usize, at: f64) -> f64 {
        self.spec
            .components
            .iter()
            .map(|c| c.weight * normal_cdf((c.mean[axis] - at) / libm::sqrt(c.variance[axis])))
            .sum()
    }

    fn bounds(&self, axis: usize) -> (f64, f64) {
        self.spec.components.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), c| {
                let s = BOUND_SIGMAS * libm::sqrt(c.variance[axis]);
                (lo.min(c.mean[axis] - s), hi.max(c.mean[axis] + s))
            },
        )
    }
}

/// A one-dimensional density `h(x) = Σ a_j N(x; m_j, v_j)` with arbitrary
/// non-negative weights.
struct Weighted1d {
    terms: Vec<(f64, f64, f64)>,
    lo: f64,
    hi: f64,
}

impl Weighted1d {
    fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(a, m, v)| a * normal_pdf(x, m, v)).sum()
    }

    fn mass(&self, from: f64, to: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, m, v)| {
                let s = libm::sqrt(v);
                a * (normal_cdf((to - m) / s) - normal_cdf((from - m) / s))
            })
            .sum()
    }

    /// `∫ h(x) 1{h(x) ≤ t} dx`, exact up to root bracketing on a grid.
    fn sublevel_mass(&self, t: f64) -> f64 {
        let g = |x: f64| self.eval(x) - t;
        let step = (self.hi - self.lo) / ROOT_GRID as f64;
        let mut cuts = Vec::new();
        let mut x0 = self.lo;
        let mut g0 = g(x0);
        for i in 1..=ROOT_GRID {
            let x1 = self.lo + step * i as f64;
            let g1 = g(x1);
            if (g0 <= 0.0) != (g1 <= 0.0) {
                let (mut a, mut b) = (x0, x1);
                for _ in 0..80 {
                    let mid = 0.5 * (a + b);
                    if (g(mid) <= 0.0) == (g0 <= 0.0) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                    if b - a <= 1e-12 * (1.0 + libm::fabs(a)) {
                        break;
                    }
                }
                cuts.push(0.5 * (a + b));
            }
            x0 = x1;
            g0 = g1;
        }
        // Segments alternate between below and above the level; the first
        // segment's status is read at the left bound.
        let mut below = g(self.lo) <= 0.0;
        let mut start = f64::NEG_INFINITY;
        let mut total = 0.0;
        for &c in cuts.iter().chain(core::iter::once(&f64::INFINITY)) {
            if below {
                total += self.mass(start, c);
            }
            start = c;
            below = !below;
        }
        total
    }
}

/// `p(y) = P(f(X) ≤ f(y))`: the mass of the sublevel set through `y`.
pub fn analytic_p(model: &DensityModel, y: &[f64]) -> Result<f64> {
    let d = model.dim();
    if d > 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if y.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            got: y.len(),
        });
    }
    let comps = &model.spec.components;
    if comps.len() == 1 {
        let c = &comps[0];
        let z2: f64 = y
            .iter()
            .zip(&c.mean)
            .zip(&c.variance)
            .map(|((&yi, &m), &v)| (yi - m) * (yi - m) / v)
            .sum();
        return Ok(if d == 1 {
            libm::erfc(libm::sqrt(z2) / SQRT_2)
        } else {
            libm::exp(-z2 / 2.0)
        });
    }
    let t = model.density(y);
    let p = if d == 1 {
        let (lo, hi) = model.bounds(0);
        Weighted1d {
            terms: comps
                .iter()
                .map(|c| (c.weight, c.mean[0], c.variance[0]))
                .collect(),
            lo,
            hi,
        }
        .sublevel_mass(t)
    } else {
        let (lo0, hi0) = model.bounds(0);
        let (lo1, hi1) = model.bounds(1);
        let mut inner = |x0: f64| {
            Weighted1d {
                terms: comps
                    .iter()
                    .map(|c| {
                        (
                            c.weight * normal_pdf(x0, c.mean[0], c.variance[0]),
                            c.mean[1],
                            c.variance[1],
                        )
                    })
                    .collect(),
                lo: lo1,
                hi: hi1,
            }
            .sublevel_mass(t)
        };
        // Mass outside the outer bounds lies entirely in the sublevel set.
        adaptive_simpson(&mut inner, lo0, hi0, QUAD_TOL)
            + model.mass_below(0, lo0)
            + model.mass_above(0, hi0)
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Degree modulation factor `λ + 2(1-λ)p`.
pub fn rho(p: f64, lambda: f64) -> f64 {
    lambda + 2.0 * (1.0 - lambda) * p
}

/// Volume of the unit ball in `d` dimensions (`η_0 = 1`).
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    libm::pow(PI, h) / libm::tgamma(h + 1.0)
}

/// `C_d = 2η_{d-1} / ((d+1) η_d^{1+1/d})`.
pub fn c_d(d: usize) -> f64 {
    let df = d as f64;
    2.0 * unit_ball_volume(d - 1) / ((df + 1.0) * libm::pow(unit_ball_volume(d), 1.0 + 1.0 / df))
}

/// Limit of `(1/k)(n/k)^{1/d} RatioCut` for the hyperplane `x[axis] = at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCutPrediction {
    pub value: f64,
    /// `∫_S f^{1-1/d} ρ^{1+1/d} ds`.
    pub surface_integral: f64,
    /// Mass on the side `x[axis] > at`.
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub c_d: f64,
    pub lambda: f64,
}

pub fn limit_ratiocut(
    model: &DensityModel,
    axis: usize,
    at: f64,
    lambda: f64,
) -> Result<LimitCutPrediction> {
    let d = model.dim();
    if d > 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if axis >= d {
        return Err(Error::InvalidParameter("cut axis out of range".into()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter("lambda must lie in [0, 1]".into()));
    }
    let mu_minus = model.mass_below(axis, at);
    let mu_plus = model.mass_above(axis, at);
    if mu_minus.min(mu_plus) < 1e-6 {
        return Err(Error::DegenerateCut(mu_minus.min(mu_plus)));
    }
    let rho_at = |x: &[f64]| -> Result<f64> {
        if lambda == 1.0 {
            Ok(1.0)
        } else {
            Ok(rho(analytic_p(model, x)?, lambda))
        }
    };
    let df = d as f64;
    let surface_integral = if d == 1 {
        let r = rho_at(&[at])?;
        r * r
    } else {
        let other = 1 - axis;
        let (lo, hi) = model.bounds(other);
        let mut failure = None;
        let mut integrand = |s: f64| {
            let mut x = [0.0; 2];
            x[axis] = at;
            x[other] = s;
            match rho_at(&x) {
                Ok(r) => {
                    libm::pow(model.density(&x), 1.0 - 1.0 / df) * libm::pow(r, 1.0 + 1.0 / df)
                }
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        };
        let value = adaptive_simpson(&mut integrand, lo, hi, QUAD_TOL);
        if let Some(e) = failure {
            return Err(e);
        }
        value
    };
    let c = c_d(d);
    Ok(LimitCutPrediction {
        value: c * surface_integral * (1.0 / mu_plus + 1.0 / mu_minus),
        surface_integral,
        mu_plus,
        mu_minus,
        c_d: c,
        lambda,
    })
}

/// The normalization under which RatioCut has a finite limit.
pub fn scaled_ratiocut(ratio_cut: f64, n: usize, k: usize, d: usize) -> f64 {
    let kf = k as f64;
    ratio_cut / kf * libm::pow(n as f64 / kf, 1.0 / d as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BalancePreference {
    UnbalancedPreferred,
    BalancedPreferred,
    Tie,
}

/// RatioCut prefers the unbalanced partition (smaller side fraction `y`, cut
/// ratio `q` against the balanced one) exactly when `q < 4y(1-y)`.
pub fn balance_threshold(y: f64) -> f64 {
    4.0 * y * (1.0 - y)
}

pub fn balance_condition(q: f64, y: f64) -> Result<BalancePreference> {
    if !(q >= 0.0) || !(y > 0.0 && y <= 0.5) {
        return Err(Error::InvalidParameter(
            "need q >= 0 and y in (0, 0.5]".into(),
        ));
    }
    let threshold = balance_threshold(y);
    Ok(if libm::fabs(q - threshold) <= 1e-12 {
        BalancePreference::Tie
    } else if q < threshold {
        BalancePreference::UnbalancedPreferred
    } else {
        BalancePreference::BalancedPreferred
    })
}
