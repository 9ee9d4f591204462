//! Market primitives: providers, linear price functions, user profiles,
//! enforceable assignments, and realized outcomes (profits and welfare).
//!
//! A user of type `θ` pays `ρ_i(θ) = p_f + p_ℓ·θ` per unit when assigned to
//! provider `i`. An enforceable profile assigns `[0, t̂]` to one provider (the
//! "low" provider) and `(t̂, θ_max]` to the other; users must weakly prefer
//! their assignment pointwise, which pins the profile uniquely unless the two
//! price functions are identical.

use crate::cost::CostPolynomial;
use crate::distribution::TypeDistribution;
use crate::{ModelError, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One of the two providers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provider {
    One,
    Two,
}

impl Provider {
    pub fn index(self) -> usize {
        match self {
            Provider::One => 0,
            Provider::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn other(self) -> Provider {
        match self {
            Provider::One => Provider::Two,
            Provider::Two => Provider::One,
        }
    }

    pub fn from_number(n: u64) -> Result<Provider> {
        match n {
            1 => Ok(Provider::One),
            2 => Ok(Provider::Two),
            _ => Err(ModelError::InvalidScenario(format!(
                "provider must be 1 or 2, got {n}"
            ))),
        }
    }

    pub fn both() -> [Provider; 2] {
        [Provider::One, Provider::Two]
    }
}

impl std::fmt::Display for Provider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl Serialize for Provider {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.number())
    }
}

impl<'de> Deserialize<'de> for Provider {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let n = u64::deserialize(d)?;
        Provider::from_number(n).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Linear per-unit price `ρ(θ) = fixed + slope·θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceFunction {
    pub fixed: f64,
    pub slope: f64,
}

impl PriceFunction {
    pub fn new(fixed: f64, slope: f64) -> Self {
        PriceFunction { fixed, slope }
    }

    /// A conservative (variance-independent) price.
    pub fn constant(p: f64) -> Self {
        PriceFunction {
            fixed: p,
            slope: 0.0,
        }
    }

    pub fn price_at(&self, theta: f64) -> f64 {
        self.fixed + self.slope * theta
    }

    pub fn is_constant(&self) -> bool {
        self.slope == 0.0
    }
}

/// Assignment of `[0, cutoff]` to `low` and the rest to the other provider.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub cutoff: f64,
    pub low: Provider,
}

impl UserProfile {
    pub fn new(cutoff: f64, low: Provider) -> Self {
        UserProfile { cutoff, low }
    }

    pub fn high(&self) -> Provider {
        self.low.other()
    }
}

/// The set of enforceable profiles for a pair of posted prices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnforceableProfiles {
    /// Distinct price functions: a single profile is enforceable.
    Unique(UserProfile),
    /// Identical price functions: every cutoff and orientation ties.
    TieFamily,
}

/// The enforceable profile(s) when providers post `rho1` and `rho2`.
///
/// With distinct slopes the indifference point is
/// `t* = (p_f² − p_f¹)/(p_ℓ¹ − p_ℓ²)`; the steeper-sloped provider is cheaper
/// below it, so it serves the low segment with cutoff `t*` clamped to the
/// support. With equal slopes the cheaper fixed price takes the whole market.
pub fn enforceable_profiles(
    rho1: &PriceFunction,
    rho2: &PriceFunction,
    theta_max: f64,
) -> EnforceableProfiles {
    if rho1.slope == rho2.slope {
        if rho1.fixed == rho2.fixed {
            return EnforceableProfiles::TieFamily;
        }
        let winner = if rho1.fixed < rho2.fixed {
            Provider::One
        } else {
            Provider::Two
        };
        return EnforceableProfiles::Unique(UserProfile::new(theta_max, winner));
    }
    let (steep, flat) = if rho1.slope > rho2.slope {
        (Provider::One, (rho1, rho2))
    } else {
        (Provider::Two, (rho2, rho1))
    };
    let t_star = (flat.1.fixed - flat.0.fixed) / (flat.0.slope - flat.1.slope);
    EnforceableProfiles::Unique(UserProfile::new(t_star.clamp(0.0, theta_max), steep))
}

/// Realized profits and welfare under a profile.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MarketOutcome {
    pub profile: UserProfile,
    /// Profits indexed by provider (`[π₁, π₂]`).
    pub profits: [f64; 2],
    pub welfare: f64,
}

/// A fully specified market: a type distribution and both providers' costs.
#[derive(Clone, Debug)]
pub struct Market {
    pub dist: TypeDistribution,
    costs: [CostPolynomial; 2],
}

impl Market {
    pub fn new(dist: TypeDistribution, costs: [CostPolynomial; 2]) -> Result<Self> {
        if costs[0].provider != Provider::One || costs[1].provider != Provider::Two {
            return Err(ModelError::InvalidScenario(
                "costs must be supplied in provider order (1 then 2)".into(),
            ));
        }
        Ok(Market { dist, costs })
    }

    pub fn cost(&self, p: Provider) -> &CostPolynomial {
        &self.costs[p.index()]
    }

    pub fn theta_max(&self) -> f64 {
        self.dist.theta_max()
    }

    /// The larger of the two whole-market per-user costs; scales default grids.
    pub fn max_whole_cost(&self) -> Result<f64> {
        let hi = self.theta_max();
        let c1 = self.cost(Provider::One).cost(&self.dist, 0.0, hi)?;
        let c2 = self.cost(Provider::Two).cost(&self.dist, 0.0, hi)?;
        Ok(c1.max(c2))
    }

    /// Profits and welfare when providers post `prices` (ordered 1 then 2)
    /// and users follow `profile`.
    pub fn outcome(
        &self,
        prices: (&PriceFunction, &PriceFunction),
        profile: &UserProfile,
    ) -> Result<MarketOutcome> {
        let hi = self.theta_max();
        let t = self.dist.clamp(profile.cutoff)?;
        let (low, high) = (profile.low, profile.high());
        let rho_of = |p: Provider| if p == Provider::One { prices.0 } else { prices.1 };
        let pi_low = self.dist.price_mass(rho_of(low), 0.0, t)?
            - self.cost(low).mass_weighted_cost(&self.dist, 0.0, t)?;
        let pi_high = self.dist.price_mass(rho_of(high), t, hi)?
            - self.cost(high).mass_weighted_cost(&self.dist, t, hi)?;
        let mut profits = [0.0; 2];
        profits[low.index()] = pi_low;
        profits[high.index()] = pi_high;
        Ok(MarketOutcome {
            profile: UserProfile::new(t, low),
            profits,
            welfare: self.welfare(profile)?,
        })
    }

    /// Outcome when both providers post the same price function `rho`.
    pub fn tie_outcome(&self, rho: &PriceFunction, profile: &UserProfile) -> Result<MarketOutcome> {
        self.outcome((rho, rho), profile)
    }

    /// Welfare `−[total low-segment cost + total high-segment cost]`.
    ///
    /// Payments transfer between users and providers, so welfare depends only
    /// on the profile, never on prices.
    pub fn welfare(&self, profile: &UserProfile) -> Result<f64> {
        let hi = self.theta_max();
        let t = self.dist.clamp(profile.cutoff)?;
        let low_cost = self
            .cost(profile.low)
            .mass_weighted_cost(&self.dist, 0.0, t)?;
        let high_cost = self
            .cost(profile.high())
            .mass_weighted_cost(&self.dist, t, hi)?;
        Ok(-(low_cost + high_cost))
    }
}
