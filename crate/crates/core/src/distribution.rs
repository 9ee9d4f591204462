//! Distributions of user types over `[0, θ_max]`.
//!
//! Two families are supported, both with exact closed forms for the CDF `F`,
//! the partial first moment `M₁(t) = ∫₀ᵗ θ f(θ) dθ` and hence the conditional
//! mean `μ(a,b) = (M₁(b) − M₁(a)) / (F(b) − F(a))`:
//!
//! * uniform on `[0, θ_max]`,
//! * piecewise-linear densities given by `(θ, f(θ))` knots.
//!
//! Interval endpoints within [`BOUND_SLACK`] of the support are clamped onto
//! it; anything further out is a [`ModelError::Domain`].

use crate::market::PriceFunction;
use crate::{ModelError, Result};

/// Absolute slack accepted (and clamped away) on interval endpoints.
pub const BOUND_SLACK: f64 = 1e-12;

/// Intervals with mass below this are treated as empty by weighted helpers.
pub const MASS_EPS: f64 = 1e-12;

/// A distribution of user types with exact moment arithmetic.
#[derive(Clone, Debug)]
pub enum TypeDistribution {
    Uniform {
        theta_max: f64,
    },
    /// Density linear between consecutive knots `(θ_k, f_k)`.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
        /// Cumulative mass at each knot.
        cum_mass: Vec<f64>,
        /// Cumulative first moment at each knot.
        cum_moment: Vec<f64>,
    },
}

impl TypeDistribution {
    pub fn uniform(theta_max: f64) -> Result<Self> {
        if !theta_max.is_finite() || theta_max <= 0.0 {
            return Err(ModelError::InvalidDistribution(format!(
                "theta_max must be positive and finite, got {theta_max}"
            )));
        }
        Ok(TypeDistribution::Uniform { theta_max })
    }

    /// Build a piecewise-linear density from `(θ, f(θ))` knots.
    ///
    /// Knots must start at 0, be strictly increasing in `θ`, have nonnegative
    /// weights, integrate to 1 within 1e-10, and no segment may be identically
    /// zero (conditional means are undefined on zero-density spans).
    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(ModelError::InvalidDistribution(
                "piecewise density needs at least two knots".into(),
            ));
        }
        let mut knots = knots;
        if knots[0].0.abs() <= BOUND_SLACK {
            knots[0].0 = 0.0;
        }
        if knots[0].0 != 0.0 {
            return Err(ModelError::InvalidDistribution(format!(
                "first knot must sit at 0, got {}",
                knots[0].0
            )));
        }
        for k in knots.iter_mut() {
            if !k.0.is_finite() || !k.1.is_finite() {
                return Err(ModelError::InvalidDistribution(
                    "knot coordinates must be finite".into(),
                ));
            }
            if k.1 < 0.0 {
                if k.1 < -BOUND_SLACK {
                    return Err(ModelError::InvalidDistribution(format!(
                        "negative density weight {} at theta {}",
                        k.1, k.0
                    )));
                }
                k.1 = 0.0;
            }
        }
        let mut cum_mass = vec![0.0];
        let mut cum_moment = vec![0.0];
        for w in knots.windows(2) {
            let ((x0, f0), (x1, f1)) = (w[0], w[1]);
            if x1 <= x0 {
                return Err(ModelError::InvalidDistribution(format!(
                    "knot thetas must be strictly increasing ({x0} then {x1})"
                )));
            }
            if f0 == 0.0 && f1 == 0.0 {
                return Err(ModelError::InvalidDistribution(format!(
                    "density vanishes on [{x0}, {x1}]; zero-density spans are not supported"
                )));
            }
            cum_mass.push(cum_mass.last().unwrap() + seg_mass(x0, f0, x1, f1, x1));
            cum_moment.push(cum_moment.last().unwrap() + seg_moment(x0, f0, x1, f1, x1));
        }
        let total = *cum_mass.last().unwrap();
        if (total - 1.0).abs() > 1e-10 {
            return Err(ModelError::InvalidDistribution(format!(
                "density must integrate to 1 within 1e-10, integrates to {total}"
            )));
        }
        Ok(TypeDistribution::PiecewiseLinear {
            knots,
            cum_mass,
            cum_moment,
        })
    }

    /// Upper end of the type support.
    pub fn theta_max(&self) -> f64 {
        match self {
            TypeDistribution::Uniform { theta_max } => *theta_max,
            TypeDistribution::PiecewiseLinear { knots, .. } => knots.last().unwrap().0,
        }
    }

    /// Clamp `t` onto the support, rejecting anything out by more than the slack.
    pub fn clamp(&self, t: f64) -> Result<f64> {
        let hi = self.theta_max();
        if !t.is_finite() || t < -BOUND_SLACK || t > hi + BOUND_SLACK {
            return Err(ModelError::Domain(format!(
                "type {t} outside support [0, {hi}]"
            )));
        }
        Ok(t.clamp(0.0, hi))
    }

    /// Density `f(t)`.
    pub fn density(&self, t: f64) -> Result<f64> {
        let t = self.clamp(t)?;
        match self {
            TypeDistribution::Uniform { theta_max } => Ok(1.0 / theta_max),
            TypeDistribution::PiecewiseLinear { knots, .. } => {
                let k = self.segment_of(t);
                let (x0, f0) = knots[k];
                let (x1, f1) = knots[k + 1];
                Ok(f0 + (f1 - f0) * (t - x0) / (x1 - x0))
            }
        }
    }

    /// CDF `F(t)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        let t = self.clamp(t)?;
        match self {
            TypeDistribution::Uniform { theta_max } => Ok(t / theta_max),
            TypeDistribution::PiecewiseLinear {
                knots, cum_mass, ..
            } => {
                let k = self.segment_of(t);
                let (x0, f0) = knots[k];
                let (x1, f1) = knots[k + 1];
                Ok(cum_mass[k] + seg_mass(x0, f0, x1, f1, t))
            }
        }
    }

    /// Partial first moment `M₁(t) = ∫₀ᵗ θ f(θ) dθ`.
    pub fn first_moment(&self, t: f64) -> Result<f64> {
        let t = self.clamp(t)?;
        match self {
            TypeDistribution::Uniform { theta_max } => Ok(t * t / (2.0 * theta_max)),
            TypeDistribution::PiecewiseLinear {
                knots, cum_moment, ..
            } => {
                let k = self.segment_of(t);
                let (x0, f0) = knots[k];
                let (x1, f1) = knots[k + 1];
                Ok(cum_moment[k] + seg_moment(x0, f0, x1, f1, t))
            }
        }
    }

    /// Signed mass `F(b) − F(a)`.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.cdf(b)? - self.cdf(a)?)
    }

    /// Conditional mean type `μ(a, b)` of the interval `[a, b]`, `a < b`.
    ///
    /// Reversed or degenerate intervals are a domain error (the conditional
    /// mean is 0/0 there); signed-interval conventions live in
    /// [`TypeDistribution::price_mass`] instead.
    pub fn mean_type(&self, a: f64, b: f64) -> Result<f64> {
        let (lo, hi) = (self.clamp(a)?, self.clamp(b)?);
        if hi - lo <= BOUND_SLACK {
            return Err(ModelError::Domain(format!(
                "mean type needs an interval with positive length, got [{lo}, {hi}]"
            )));
        }
        let mass = self.cdf(hi)? - self.cdf(lo)?;
        if mass <= MASS_EPS {
            return Err(ModelError::Domain(format!(
                "mean type of zero-mass interval [{lo}, {hi}]"
            )));
        }
        Ok((self.first_moment(hi)? - self.first_moment(lo)?) / mass)
    }

    /// Signed revenue integral `∫ₐᵇ f(θ) ρ(θ) dθ` of a linear price function.
    ///
    /// Evaluates `p_f·(F(b) − F(a)) + p_ℓ·(M₁(b) − M₁(a))`, so it is exactly
    /// antisymmetric in `(a, b)` and additive over adjacent intervals.
    pub fn price_mass(&self, rho: &PriceFunction, a: f64, b: f64) -> Result<f64> {
        let dm = self.mass(a, b)?;
        let dm1 = self.first_moment(b)? - self.first_moment(a)?;
        Ok(rho.fixed * dm + rho.slope * dm1)
    }

    /// Interior types where the density vanishes (isolated zero-weight knots).
    ///
    /// Cutoff candidates at these points leave the equilibrium price line
    /// unconstrained, so candidate search reports them with a flag.
    pub fn interior_density_zeros(&self) -> Vec<f64> {
        match self {
            TypeDistribution::Uniform { .. } => Vec::new(),
            TypeDistribution::PiecewiseLinear { knots, .. } => knots
                .iter()
                .skip(1)
                .take(knots.len().saturating_sub(2))
                .filter(|&&(_, f)| f == 0.0)
                .map(|&(x, _)| x)
                .collect(),
        }
    }

    /// Index of the knot segment containing `t` (piecewise only).
    fn segment_of(&self, t: f64) -> usize {
        match self {
            TypeDistribution::Uniform { .. } => 0,
            TypeDistribution::PiecewiseLinear { knots, .. } => {
                // partition_point: first knot with x > t, minus one.
                let idx = knots.partition_point(|&(x, _)| x <= t);
                idx.clamp(1, knots.len() - 1) - 1
            }
        }
    }
}

/// Mass of a linear-density segment `[x0, x1]` integrated up to `x ∈ [x0, x1]`.
fn seg_mass(x0: f64, f0: f64, x1: f64, f1: f64, x: f64) -> f64 {
    let fx = f0 + (f1 - f0) * (x - x0) / (x1 - x0);
    (x - x0) * 0.5 * (f0 + fx)
}

/// First moment of a linear-density segment integrated up to `x`.
fn seg_moment(x0: f64, f0: f64, x1: f64, f1: f64, x: f64) -> f64 {
    let s = (f1 - f0) / (x1 - x0);
    f0 * 0.5 * (x * x - x0 * x0) + s * ((x * x * x - x0 * x0 * x0) / 3.0 - x0 * 0.5 * (x * x - x0 * x0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> TypeDistribution {
        // f(θ) = 2 − 2θ on [0, 1]
        TypeDistribution::piecewise_linear(vec![(0.0, 2.0), (1.0, 0.0)]).unwrap()
    }

    #[test]
    fn uniform_closed_forms() {
        let d = TypeDistribution::uniform(1.0).unwrap();
        assert_eq!(d.cdf(0.25).unwrap(), 0.25);
        assert!((d.mean_type(0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.mean_type(0.2, 0.6).unwrap() - 0.4).abs() < 1e-15);
        // scaled support
        let d2 = TypeDistribution::uniform(2.0).unwrap();
        assert!((d2.cdf(0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((d2.mean_type(0.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_closed_forms() {
        let d = triangle();
        assert!((d.cdf(0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!((d.mean_type(0.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let rho = PriceFunction::new(0.1, 0.5);
        assert!((d.price_mass(&rho, 0.2, 0.8).unwrap() - 0.192).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        // Simpson's rule oracle over a two-segment density (unit mass).
        let d =
            TypeDistribution::piecewise_linear(vec![(0.0, 0.4), (0.5, 1.6), (1.0, 0.4)]).unwrap();
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            let n = 4000;
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for k in 1..n {
                let x = a + k as f64 * h;
                s += f(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        // Integrate piecewise around the density kink at 0.5 so the
        // quadrature oracle keeps its full accuracy.
        let kinked = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            if a < 0.5 && b > 0.5 {
                simpson(f, a, 0.5) + simpson(f, 0.5, b)
            } else {
                simpson(f, a, b)
            }
        };
        let fd = |x: f64| d.density(x).unwrap();
        let mf = |x: f64| x * d.density(x).unwrap();
        assert!((d.cdf(0.73).unwrap() - kinked(&fd, 0.0, 0.73)).abs() < 1e-9);
        assert!((d.first_moment(0.73).unwrap() - kinked(&mf, 0.0, 0.73)).abs() < 1e-9);
        let mass = d.mass(0.1, 0.9).unwrap();
        let mu = d.mean_type(0.1, 0.9).unwrap();
        assert!((mu - kinked(&mf, 0.1, 0.9) / kinked(&fd, 0.1, 0.9)).abs() < 1e-9);
        assert!(mass > 0.0);
    }

    #[test]
    fn price_mass_is_signed_and_additive() {
        let d = triangle();
        let rho = PriceFunction::new(-0.2, 1.3);
        let ab = d.price_mass(&rho, 0.1, 0.4).unwrap();
        let bc = d.price_mass(&rho, 0.4, 0.9).unwrap();
        let ac = d.price_mass(&rho, 0.1, 0.9).unwrap();
        assert!((ab + bc - ac).abs() < 1e-15);
        assert!((d.price_mass(&rho, 0.9, 0.1).unwrap() + ac).abs() < 1e-15);
        assert_eq!(d.price_mass(&rho, 0.3, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn clamping_and_domain_errors() {
        let d = TypeDistribution::uniform(1.0).unwrap();
        assert_eq!(d.cdf(1.0 + 5e-13).unwrap(), 1.0);
        assert_eq!(d.cdf(-5e-13).unwrap(), 0.0);
        assert!(d.cdf(1.001).is_err());
        assert!(d.cdf(-0.001).is_err());
        assert!(d.mean_type(0.5, 0.5).is_err());
        assert!(d.mean_type(0.7, 0.2).is_err());
    }

    #[test]
    fn reports_interior_density_zeros() {
        let d = TypeDistribution::uniform(1.0).unwrap();
        assert!(d.interior_density_zeros().is_empty());
        let d = TypeDistribution::piecewise_linear(vec![(0.0, 2.0), (0.5, 0.0), (1.0, 2.0)])
            .unwrap();
        assert_eq!(d.interior_density_zeros(), vec![0.5]);
        // endpoint zeros are not interior
        let d = TypeDistribution::piecewise_linear(vec![(0.0, 2.0), (1.0, 0.0)]).unwrap();
        assert!(d.interior_density_zeros().is_empty());
    }

    #[test]
    fn rejects_bad_densities() {
        assert!(TypeDistribution::uniform(0.0).is_err());
        assert!(TypeDistribution::uniform(f64::NAN).is_err());
        assert!(TypeDistribution::piecewise_linear(vec![(0.0, 1.0)]).is_err());
        // does not start at zero
        assert!(TypeDistribution::piecewise_linear(vec![(0.1, 1.0), (1.0, 1.0)]).is_err());
        // not strictly increasing
        assert!(
            TypeDistribution::piecewise_linear(vec![(0.0, 1.0), (0.5, 1.0), (0.5, 2.0)]).is_err()
        );
        // negative weight
        assert!(TypeDistribution::piecewise_linear(vec![(0.0, -0.5), (1.0, 2.5)]).is_err());
        // zero on a positive-measure span
        assert!(TypeDistribution::piecewise_linear(vec![
            (0.0, 2.0),
            (0.5, 0.0),
            (0.75, 0.0),
            (1.0, 2.0)
        ])
        .is_err());
        // does not integrate to one
        assert!(TypeDistribution::piecewise_linear(vec![(0.0, 1.0), (1.0, 0.5)]).is_err());
    }
}
