//! Equilibrium analysis for a two-provider market with a continuum of user types.
//!
//! Users are indexed by a type `θ ∈ [0, θ_max]` (the per-request variance of their
//! workload) drawn from a known distribution. Each provider `i` posts a linear
//! per-unit price `ρ_i(θ) = p_i^f + p_i^ℓ·θ` and serves every user that picks it;
//! serving the users in an interval costs the provider `g_i(μ)` per unit mass,
//! where `μ` is the mean type of the interval. A provider restricted to `p^ℓ = 0`
//! is called *conservative*, one free to use a slope *innovative*.
//!
//! The crate computes, for this game:
//!
//! * the set of constant-price equilibria when both providers are conservative
//!   ([`conservative`]),
//! * guaranteed-profit pricing strategies for a single innovative provider
//!   ([`strategy`]),
//! * cutoff candidates and verified equilibrium price families when both
//!   providers are innovative ([`equilibrium`]),
//! * and an independent brute-force deviation oracle used to certify or refute
//!   ε-equilibria on a price grid ([`oracle`]).
//!
//! [`scenario`] and [`report`] provide the JSON configuration and reporting layer
//! shared by the CLI binary and the C ABI crate.

pub mod cli;
pub mod conservative;
pub mod cost;
pub mod distribution;
pub mod equilibrium;
pub mod market;
pub mod numeric;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod strategy;

pub use conservative::{constant_bne_set, constant_bne_welfare, ConstantBneSet};
pub use cost::{CostPolynomial, SplitConvexity};
pub use distribution::TypeDistribution;
pub use equilibrium::{
    candidate_cutoffs, check_bne, equilibrium_segment, find_all_bne, BneCandidate, BneCheck,
    ConditionKind, VerifiedFamily,
};
pub use market::{
    enforceable_profiles, EnforceableProfiles, Market, MarketOutcome, PriceFunction, Provider,
    UserProfile,
};
pub use oracle::{
    best_constant_response_refined, best_response, deviator_optimal_tie_profit,
    epsilon_bne_verify, one_innovative_scan, response_sweep, BestDeviation, BestResponse,
    Certification, DeviationGrid, OneInnovativeScan, ScanPair, SweepPoint,
};
pub use scenario::{Scenario, Settings};
pub use strategy::{
    dominant_strategy, one_innovative_bne_exists, positive_profit_strategy,
    profit_preserving_strategy, scan_positive_profit_t_bar, symmetric_diagnostics,
    ExistenceReport, Guarantee, PremiseCheck, StrategyCertificate, SymmetricDiagnostics,
};

/// Errors surfaced by model construction and analysis entry points.
///
/// Validation and premise failures ([`ModelError::InvalidDistribution`],
/// [`ModelError::InvalidCost`], [`ModelError::InvalidScenario`],
/// [`ModelError::Domain`], [`ModelError::PremiseViolation`]) map to CLI exit
/// code 2; everything else is an internal failure (exit code 1).
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid cost function: {0}")]
    InvalidCost(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("premise violation: {0}")]
    PremiseViolation(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ModelError {
    /// True for errors caused by user-supplied inputs rather than solver bugs.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            ModelError::InvalidDistribution(_)
                | ModelError::InvalidCost(_)
                | ModelError::InvalidScenario(_)
                | ModelError::Domain(_)
                | ModelError::PremiseViolation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
