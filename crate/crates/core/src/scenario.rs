//! Scenario configuration: the JSON surface shared by the CLI and the C ABI.
//!
//! A scenario bundles the type distribution, both providers' cost polynomials,
//! which providers may use variance-dependent pricing, and the numeric
//! settings of the solvers. [`Scenario::from_json`] validates everything up
//! front so analysis code can assume a well-formed market.

use crate::cost::CostPolynomial;
use crate::distribution::TypeDistribution;
use crate::market::{Market, Provider};
use crate::{ModelError, Result};
use serde::{Deserialize, Serialize};

/// Distribution section of a scenario file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    /// Uniform on `[0, theta_max]`.
    Uniform { theta_max: f64 },
    /// Piecewise-linear density through `(theta, weight)` knots.
    #[serde(rename = "piecewise")]
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl DistributionConfig {
    pub fn build(&self) -> Result<TypeDistribution> {
        match self {
            DistributionConfig::Uniform { theta_max } => TypeDistribution::uniform(*theta_max),
            DistributionConfig::PiecewiseLinear { knots } => {
                TypeDistribution::piecewise_linear(knots.clone())
            }
        }
    }
}

/// One provider's cost section: `{"provider": 1, "poly": [0.0125, 0.0, 1.0]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub provider: Provider,
    /// Ascending-degree coefficients of the per-user cost polynomial.
    pub poly: Vec<f64>,
}

/// Numeric knobs of the solvers. All grids are relative to `θ_max`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Relative spacing of cutoff/condition grids (fraction of `θ_max`).
    pub grid_step: f64,
    /// Gain threshold for ε-equilibrium certification by the oracle.
    pub epsilon: f64,
    /// Slack accepted on equilibrium conditions (absorbs rounded inputs).
    pub check_tolerance: f64,
    /// Absolute tolerance when refining fixed-price family endpoints.
    pub segment_refine: f64,
    /// Points per axis of the oracle's deviation grid.
    pub grid_steps: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            grid_step: 1e-3,
            epsilon: 1e-4,
            check_tolerance: 1e-6,
            segment_refine: 1e-5,
            grid_steps: 201,
        }
    }
}

impl Settings {
    /// Grid spacing in type units.
    pub fn scaled_step(&self, theta_max: f64) -> f64 {
        self.grid_step * theta_max
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step <= 0.1) {
            return Err(ModelError::InvalidScenario(format!(
                "settings.grid_step must lie in (0, 0.1], got {}",
                self.grid_step
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ModelError::InvalidScenario(format!(
                "settings.epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.check_tolerance >= 0.0 && self.check_tolerance.is_finite()) {
            return Err(ModelError::InvalidScenario(format!(
                "settings.check_tolerance must be nonnegative, got {}",
                self.check_tolerance
            )));
        }
        if !(self.segment_refine > 0.0 && self.segment_refine.is_finite()) {
            return Err(ModelError::InvalidScenario(format!(
                "settings.segment_refine must be positive, got {}",
                self.segment_refine
            )));
        }
        if self.grid_steps < 2 {
            return Err(ModelError::InvalidScenario(format!(
                "settings.grid_steps must be at least 2, got {}",
                self.grid_steps
            )));
        }
        Ok(())
    }
}

fn both_true() -> [bool; 2] {
    [true, true]
}

/// On-disk scenario shape.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub distribution: DistributionConfig,
    /// Exactly two entries, one per provider, in any order.
    pub costs: Vec<CostConfig>,
    /// Whether provider 1 / provider 2 may post a nonzero slope.
    #[serde(default = "both_true")]
    pub innovative: [bool; 2],
    #[serde(default)]
    pub settings: Settings,
}

/// A validated scenario ready for analysis.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub market: Market,
    pub innovative: [bool; 2],
    pub settings: Settings,
    /// FNV-1a digest of the canonical config JSON; echoed in reports.
    pub digest: String,
}

impl ScenarioConfig {
    pub fn build(self) -> Result<Scenario> {
        self.settings.validate()?;
        let dist = self.distribution.build()?;
        if self.costs.len() != 2 {
            return Err(ModelError::InvalidScenario(format!(
                "expected exactly 2 cost entries, got {}",
                self.costs.len()
            )));
        }
        let mut slots: [Option<CostPolynomial>; 2] = [None, None];
        for c in &self.costs {
            let idx = c.provider.index();
            if slots[idx].is_some() {
                return Err(ModelError::InvalidScenario(format!(
                    "duplicate cost entry for provider {}",
                    c.provider
                )));
            }
            slots[idx] = Some(CostPolynomial::new(c.provider, c.poly.clone(), &dist)?);
        }
        let [Some(g1), Some(g2)] = slots else {
            return Err(ModelError::InvalidScenario(
                "costs must cover providers 1 and 2".into(),
            ));
        };
        let market = Market::new(dist, [g1, g2])?;
        let digest = digest_of(&self)?;
        Ok(Scenario {
            innovative: self.innovative,
            settings: self.settings,
            market,
            digest,
            config: self,
        })
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let config: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| ModelError::InvalidScenario(format!("scenario JSON: {e}")))?;
        config.build()
    }

    /// The worked example market bundled with the crate: uniform types on
    /// `[0, 1]`, `g₁(μ) = 0.0125 + μ²`, `g₂(μ) = 0.2 + 0.25μ²` (equal
    /// whole-market costs, different curvature).
    pub fn reference_example() -> Scenario {
        ScenarioConfig {
            distribution: DistributionConfig::Uniform { theta_max: 1.0 },
            costs: vec![
                CostConfig {
                    provider: Provider::One,
                    poly: vec![0.0125, 0.0, 1.0],
                },
                CostConfig {
                    provider: Provider::Two,
                    poly: vec![0.2, 0.0, 0.25],
                },
            ],
            innovative: [true, true],
            settings: Settings::default(),
        }
        .build()
        .expect("bundled example scenario is valid")
    }

    /// Check that `provider` is allowed to post variance-dependent prices.
    pub fn require_innovative(&self, provider: Provider) -> Result<()> {
        if !self.innovative[provider.index()] {
            return Err(ModelError::InvalidScenario(format!(
                "provider {provider} is marked conservative in this scenario"
            )));
        }
        Ok(())
    }
}

fn digest_of(config: &ScenarioConfig) -> Result<String> {
    let canonical = serde_json::to_string(config)
        .map_err(|e| ModelError::InvalidScenario(format!("scenario not serializable: {e}")))?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canonical.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(format!("{h:016x}"))
}
