//! Provider cost models.
//!
//! Serving a contiguous interval of user types costs `g(μ)` per served user,
//! where `μ` is the interval's conditional mean type and `g` is a strictly
//! increasing polynomial specific to the provider. This module owns the
//! polynomial arithmetic, the interval-cost helpers, the three derivative
//! forms used by the pricing constructions, and the split-convexity
//! classification that decides whether serving the whole market can ever be
//! cheaper than splitting it.

use crate::distribution::{TypeDistribution, MASS_EPS};
use crate::market::Provider;
use crate::numeric::grid;
use crate::{ModelError, Result};
use serde::{Deserialize, Serialize};

/// Tolerance below which a split-cost gap counts as a strict improvement.
pub const SPLIT_STRICT_TOL: f64 = 1e-9;

/// Per-user cost polynomial `g(μ)` of one provider.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostPolynomial {
    pub provider: Provider,
    /// Coefficients in ascending degree: `g(x) = Σ coeffs[k]·x^k`.
    pub coeffs: Vec<f64>,
}

/// Whether splitting the market ever beats serving it whole, for a cost model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitConvexity {
    /// Every interior split strictly increases total cost.
    StrictlySplitConvex { min_gap: f64, at: f64 },
    /// No split lowers total cost, but some split is exactly neutral.
    SplitConvex { min_gap: f64, at: f64 },
    /// Some interior split lowers total cost; `at` is the worst split.
    NotSplitConvex { min_gap: f64, at: f64 },
}

impl CostPolynomial {
    /// Validate a polynomial as a cost model over the support of `dist`.
    ///
    /// `g` must be finite and strictly increasing on `[0, θ_max]`, checked on
    /// a grid with step `1e-3·θ_max`: values must strictly increase across
    /// every grid cell and the slope must never be negative at a grid point.
    /// Isolated zero-slope points (e.g. `g(μ) = μ²` at `0`) are fine — the
    /// function still increases strictly.
    pub fn new(provider: Provider, coeffs: Vec<f64>, dist: &TypeDistribution) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::InvalidCost(
                "cost polynomial needs at least one finite coefficient".into(),
            ));
        }
        let poly = CostPolynomial { provider, coeffs };
        let hi = dist.theta_max();
        let points = grid(0.0, hi, 1e-3 * hi);
        for (k, &x) in points.iter().enumerate() {
            if poly.derivative(x) < 0.0 {
                return Err(ModelError::InvalidCost(format!(
                    "cost must be strictly increasing in the mean type; slope {} at {}",
                    poly.derivative(x),
                    x
                )));
            }
            if k > 0 && poly.eval(x) <= poly.eval(points[k - 1]) {
                return Err(ModelError::InvalidCost(format!(
                    "cost must be strictly increasing in the mean type; \
                     not increasing over [{}, {}]",
                    points[k - 1],
                    x
                )));
            }
        }
        Ok(poly)
    }

    /// `g(x)` by Horner's rule.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `g′(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
    }

    /// Per-user cost `g(μ(a,b))` of serving the types between `a` and `b`.
    pub fn cost(&self, dist: &TypeDistribution, a: f64, b: f64) -> Result<f64> {
        Ok(self.eval(dist.mean_type(a, b)?))
    }

    /// Total cost `F-mass(a,b) · g(μ(a,b))`, zero for (near-)empty intervals.
    pub fn mass_weighted_cost(&self, dist: &TypeDistribution, a: f64, b: f64) -> Result<f64> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mass = dist.mass(lo, hi)?;
        if mass <= MASS_EPS {
            return Ok(0.0);
        }
        if hi - lo <= crate::distribution::BOUND_SLACK {
            // Vanishing width but non-negligible density: the mean is pinned
            // to the interval itself.
            return Ok(mass * self.eval(0.5 * (lo + hi)));
        }
        Ok(mass * self.eval(dist.mean_type(lo, hi)?))
    }

    /// `d/dt g(μ(0,t)) = g′(μ(0,t)) · f(t)(t − μ(0,t)) / F(t)`.
    ///
    /// Marginal per-user cost of extending a low segment upward; sets the
    /// price-line target of interior equilibrium candidates.
    pub fn upper_cost_derivative(&self, dist: &TypeDistribution, t: f64) -> Result<f64> {
        let f = dist.cdf(t)?;
        if f <= MASS_EPS {
            return Err(ModelError::Domain(format!(
                "upper cost derivative needs positive mass below t = {t}"
            )));
        }
        let mu = dist.mean_type(0.0, t)?;
        Ok(self.derivative(mu) * dist.density(t)? * (t - mu) / f)
    }

    /// `d/da g(μ(a,θ_max)) = g′(μ(a,θ_max)) · f(a)(μ(a,θ_max) − a) / (1 − F(a))`.
    ///
    /// Marginal per-user saving from shedding a high segment's cheapest types;
    /// the `t̄ → 0` limit of the dominant-pricing slope scan.
    pub fn lower_cost_derivative(&self, dist: &TypeDistribution, t: f64) -> Result<f64> {
        let hi = dist.theta_max();
        let tail = 1.0 - dist.cdf(t)?;
        if tail <= MASS_EPS {
            return Err(ModelError::Domain(format!(
                "lower cost derivative needs positive mass above t = {t}"
            )));
        }
        let mu = dist.mean_type(t, hi)?;
        Ok(self.derivative(mu) * dist.density(t)? * (mu - t) / tail)
    }

    /// `g′(μ(a,b))`: cost slope in mean space, used as the tangent price slope
    /// of the profit-preserving construction.
    pub fn mean_derivative(&self, dist: &TypeDistribution, a: f64, b: f64) -> Result<f64> {
        Ok(self.derivative(dist.mean_type(a, b)?))
    }

    /// Classify the split-cost gap
    /// `gap(t) = F(t)·g(μ(0,t)) + (1−F(t))·g(μ(t,θ_max)) − g(μ(0,θ_max))`
    /// over interior splits `t`, on a grid of relative spacing `grid_step`.
    ///
    /// Scans the grid, then refines the minimizing split by golden-section
    /// search (to 1e-8) so near-neutral splits are classified by their true
    /// extremum rather than by grid luck.
    pub fn split_convexity(&self, dist: &TypeDistribution, grid_step: f64) -> Result<SplitConvexity> {
        if !(grid_step > 0.0 && grid_step <= 0.1) {
            return Err(ModelError::Domain(format!(
                "split-convexity grid step must lie in (0, 0.1], got {grid_step}"
            )));
        }
        let hi = dist.theta_max();
        let whole = self.eval(dist.mean_type(0.0, hi)?);
        let gap = |t: f64| -> f64 {
            let f = dist.cdf(t).unwrap_or(f64::NAN);
            if f <= MASS_EPS || 1.0 - f <= MASS_EPS {
                return 0.0;
            }
            let low = self.eval(dist.mean_type(0.0, t).unwrap_or(f64::NAN));
            let high = self.eval(dist.mean_type(t, hi).unwrap_or(f64::NAN));
            f * low + (1.0 - f) * high - whole
        };
        let step = grid_step * hi;
        let (mut min_gap, mut at) = (f64::INFINITY, 0.0);
        for t in grid(step, hi - step, step) {
            let g = gap(t);
            if g < min_gap {
                (min_gap, at) = (g, t);
            }
        }
        // Refine only inside the interior grid range: the gap of any cost
        // vanishes as the split approaches the support edges, so chasing the
        // boundary would misclassify every cost as non-strict.
        let lo = (at - step).max(step);
        let up = (at + step).min(hi - step);
        let (t_ref, neg_ref) = crate::numeric::golden_max(|t| -gap(t), lo, up, 1e-8);
        if -neg_ref < min_gap {
            (min_gap, at) = (-neg_ref, t_ref);
        }
        Ok(if min_gap > SPLIT_STRICT_TOL {
            SplitConvexity::StrictlySplitConvex { min_gap, at }
        } else if min_gap >= -SPLIT_STRICT_TOL {
            SplitConvexity::SplitConvex { min_gap, at }
        } else {
            SplitConvexity::NotSplitConvex { min_gap, at }
        })
    }
}

impl SplitConvexity {
    pub fn is_strict(&self) -> bool {
        matches!(self, SplitConvexity::StrictlySplitConvex { .. })
    }

    pub fn holds(&self) -> bool {
        !matches!(self, SplitConvexity::NotSplitConvex { .. })
    }
}
