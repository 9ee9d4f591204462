//! Guaranteed-profit pricing for a single innovative provider, the
//! equilibrium existence test for the one-innovative regime, and diagnostics
//! for markets with identical providers.
//!
//! All constructions return a [`StrategyCertificate`]: the price function,
//! the hypotheses that were checked, and a numerically verified worst-case
//! guarantee. Constructions whose hypotheses fail are rejected with a
//! [`ModelError::PremiseViolation`] naming the failing inequality; a
//! construction that passes its premises but misses its verified bound is a
//! solver bug and surfaces as [`ModelError::VerificationFailed`].

use serde::Serialize;

use crate::conservative::{constant_bne_set, ConstantBneSet};
use crate::cost::{CostPolynomial, SplitConvexity};
use crate::equilibrium::find_all_bne;
use crate::market::{Market, PriceFunction, Provider, UserProfile};
use crate::numeric::{bisect_root, golden_min, grid};
use crate::scenario::Settings;
use crate::{ModelError, Result};

/// Strict-positivity slack: verified quantities must clear their bound by
/// more than this before we assert a strict guarantee.
const STRICT_TOL: f64 = 1e-9;

/// Lower edge of slope-quotient refinement brackets, relative to `θ_max`.
const QUOTIENT_EDGE: f64 = 1e-6;

/// What a constructed strategy guarantees for the innovator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    /// Profit is never negative, whatever enforceable profile users land on.
    NonNegativeAllCutoffs,
    /// Profit is strictly positive at every cutoff at least one grid step
    /// above zero (it tends to zero as the served segment vanishes).
    PositiveAllCutoffs,
    /// Strictly more profit than the innovator earns in any constant-price
    /// equilibrium, against every individually rational constant response.
    BeatsAllConstantBne,
    /// At least the innovator's best constant-price equilibrium profit.
    WeaklyBeatsConstantBne,
}

/// One checked hypothesis of a construction.
#[derive(Clone, Debug, Serialize)]
pub struct PremiseCheck {
    /// Role-level statement of the inequality, e.g. `c_i(0,t̄) < c_j(0,θ_max)`.
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl PremiseCheck {
    fn strict_less(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        PremiseCheck {
            name: name.into(),
            lhs,
            rhs,
            satisfied: lhs < rhs,
        }
    }
}

/// Reject on the first failed premise, naming it with both values.
fn require_premises(premises: &[PremiseCheck]) -> Result<()> {
    if let Some(p) = premises.iter().find(|p| !p.satisfied) {
        return Err(ModelError::PremiseViolation(format!(
            "{}: {} vs {}",
            p.name, p.lhs, p.rhs
        )));
    }
    Ok(())
}

/// A constructed innovative price function with its verified guarantee.
#[derive(Clone, Debug, Serialize)]
pub struct StrategyCertificate {
    /// Who plays the strategy; the rival is assumed conservative.
    pub innovator: Provider,
    pub rho: PriceFunction,
    pub guarantee: Guarantee,
    /// Every hypothesis that was checked, with pass/fail and both sides.
    pub premises: Vec<PremiseCheck>,
    /// Verified bound: minimal guaranteed profit over the quantified set
    /// (cutoffs or rational responses, depending on the guarantee).
    pub worst_case_profit: f64,
    /// Cutoff attaining (or witnessing) the worst case.
    pub witness_cutoff: f64,
    /// Segment-boundary parameter of the construction, when it has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_bar: Option<f64>,
    /// Undercut margin of the dominant construction, when it has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// True when the guarantee holds vacuously because the innovator earns
    /// zero in every constant-price equilibrium.
    pub trivial: bool,
}

/// Verdict of the one-innovative-provider equilibrium existence scan.
#[derive(Clone, Debug, Serialize)]
pub struct ExistenceReport {
    pub innovator: Provider,
    pub exists: bool,
    /// First cutoff witnessing non-existence (scan order: ascending).
    pub witness: Option<f64>,
    /// Largest non-existence gap found (≤ 0 up to tolerance when a BNE exists).
    pub max_gap: f64,
    /// Cutoff attaining `max_gap`.
    pub gap_at: f64,
    /// When an equilibrium exists it coincides with a constant-price one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant_equilibrium: Option<ConstantBneSet>,
}

/// Diagnostics for a market whose providers share one cost function.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetricDiagnostics {
    /// Split-convexity class of the shared cost function.
    pub convexity: SplitConvexity,
    /// When the shared cost is split-convex, no equilibrium can leave either
    /// provider with strictly positive profit.
    pub zero_profit_required: bool,
    /// Equal-profit check at every verified equilibrium family.
    pub families: Vec<FamilyDiagnostic>,
}

/// Profit symmetry of one verified equilibrium family (at its midpoint price).
#[derive(Clone, Debug, Serialize)]
pub struct FamilyDiagnostic {
    pub cutoff: f64,
    pub low: Provider,
    pub profits: [f64; 2],
    /// `|π₁ − π₂|`; an equilibrium of a symmetric market must equalize profits.
    pub equal_profit_gap: f64,
    /// Larger of the two profits; must vanish when `zero_profit_required`.
    pub max_profit: f64,
}

/// Decide whether any equilibrium survives when `innovator` may use a slope
/// but the rival must quote a constant price.
///
/// A cutoff `t̂` *witnesses non-existence* when
/// `c_i(0,θ_max) − F(t̂)·c_i(0,t̂) ≥ (1−F(t̂))·(c_i(0,θ_max) − c_j(0,θ_max))`:
/// the innovator then prefers grabbing the low segment over any whole-market
/// tie the rival could tolerate. The scan walks an ascending cutoff grid,
/// reports the first witness (bisected back to the earliest crossing), and
/// only declares existence after refining the largest gap found.
pub fn one_innovative_bne_exists(
    market: &Market,
    innovator: Provider,
    settings: &Settings,
) -> Result<ExistenceReport> {
    settings.validate()?;
    let hi = market.theta_max();
    let dist = &market.dist;
    let inn = market.cost(innovator);
    let c_inn_full = inn.cost(dist, 0.0, hi)?;
    let c_oth_full = market.cost(innovator.other()).cost(dist, 0.0, hi)?;
    let advantage = c_inn_full - c_oth_full;

    let gap = |t: f64| -> Result<f64> {
        let served = inn.mass_weighted_cost(dist, 0.0, t)?;
        let tail = 1.0 - dist.cdf(t)?;
        Ok(c_inn_full - served - tail * advantage)
    };

    let ts = grid(0.0, hi, settings.scaled_step(hi));
    let mut first_witness: Option<(usize, f64)> = None;
    let mut max_gap = f64::NEG_INFINITY;
    let mut gap_at = 0.0;
    for (k, &t) in ts.iter().enumerate() {
        let g = gap(t)?;
        if g > max_gap {
            max_gap = g;
            gap_at = t;
        }
        if first_witness.is_none() && g > STRICT_TOL {
            first_witness = Some((k, t));
        }
    }

    // Polish the reported maximum between its grid neighbours.
    let imax = ts.iter().position(|&t| t == gap_at).unwrap_or(0);
    let lo = if imax == 0 { ts[0] } else { ts[imax - 1] };
    let up = *ts.get(imax + 1).unwrap_or(&ts[imax]);
    if up > lo {
        let (x, neg) = golden_min(|t| -gap(t).unwrap_or(f64::NEG_INFINITY), lo, up, 1e-10 * hi);
        if -neg > max_gap {
            max_gap = -neg;
            gap_at = x;
        }
    }

    let witness = match first_witness {
        Some((0, t)) => Some(t),
        Some((k, t)) => {
            // Bisect back to the earliest point where the gap clears the
            // strictness tolerance.
            let w = bisect_root(
                |x| gap(x).unwrap_or(f64::NEG_INFINITY) - STRICT_TOL,
                ts[k - 1],
                t,
                1e-12 * hi.max(1.0),
            );
            Some(w)
        }
        None if max_gap > STRICT_TOL => Some(gap_at),
        None => None,
    };

    let exists = witness.is_none();
    Ok(ExistenceReport {
        innovator,
        exists,
        witness,
        max_gap,
        gap_at,
        constant_equilibrium: if exists {
            Some(constant_bne_set(market)?)
        } else {
            None
        },
    })
}

/// Construct the strategy that prices the innovator's low-segment cost into
/// the slope: `p^f = c_i(0,t̄)`, `p^ℓ = c_i(0,t̄) / ∫₀^{t̄} θ f(θ) dθ`.
///
/// Under its premises the strategy earns strictly positive profit at every
/// cutoff profile `[0,t̂]→i` with `t̂` at least one grid step above zero, no
/// matter what constant price the rival quotes.
pub fn positive_profit_strategy(
    market: &Market,
    innovator: Provider,
    t_bar: f64,
    settings: &Settings,
) -> Result<StrategyCertificate> {
    settings.validate()?;
    let hi = market.theta_max();
    let dist = &market.dist;
    if !(t_bar.is_finite() && t_bar > 0.0 && t_bar < hi) {
        return Err(ModelError::Domain(format!(
            "segment boundary t̄ must lie strictly inside (0, θ_max), got {t_bar}"
        )));
    }
    let inn = market.cost(innovator);
    let c_bar = inn.cost(dist, 0.0, t_bar)?;
    let c_full = inn.cost(dist, 0.0, hi)?;
    let c_oth_full = market.cost(innovator.other()).cost(dist, 0.0, hi)?;

    let premises = vec![
        PremiseCheck::strict_less(
            "low-segment cost below the rival's whole-market cost: c_i(0,t̄) < c_j(0,θ_max)",
            c_bar,
            c_oth_full,
        ),
        PremiseCheck::strict_less(
            "low-segment cost below own whole-market cost: c_i(0,t̄) < c_i(0,θ_max)",
            c_bar,
            c_full,
        ),
        PremiseCheck::strict_less(
            "own whole-market cost below twice the low-segment cost: c_i(0,θ_max) < 2·c_i(0,t̄)",
            c_full,
            2.0 * c_bar,
        ),
    ];
    require_premises(&premises)?;

    let weighted_mass = dist.first_moment(t_bar)?;
    if weighted_mass <= 0.0 {
        return Err(ModelError::Domain(format!(
            "no type mass below t̄ = {t_bar}; the slope is undefined"
        )));
    }
    let rho = PriceFunction::new(c_bar, c_bar / weighted_mass);

    // Verified bound: profit over [0,t̂] for every cutoff one step or more
    // above zero (profit vanishes as t̂ → 0, so zero itself is excluded).
    let step = settings.scaled_step(hi);
    let profit = |t: f64| -> Result<f64> {
        Ok(dist.price_mass(&rho, 0.0, t)? - inn.mass_weighted_cost(dist, 0.0, t)?)
    };
    let ts = grid(step, hi, step);
    let mut worst = f64::INFINITY;
    let mut witness = step;
    for &t in &ts {
        let p = profit(t)?;
        if p < worst {
            worst = p;
            witness = t;
        }
    }
    let imin = ts.iter().position(|&t| t == witness).unwrap_or(0);
    let lo = if imin == 0 { ts[0] } else { ts[imin - 1] };
    let up = *ts.get(imin + 1).unwrap_or(&ts[imin]);
    if up > lo {
        let (x, v) = golden_min(|t| profit(t).unwrap_or(f64::INFINITY), lo, up, 1e-10 * hi);
        if v < worst {
            worst = v;
            witness = x;
        }
    }
    if worst <= STRICT_TOL {
        return Err(ModelError::VerificationFailed(format!(
            "constructed strategy is not strictly profitable: profit {worst} at cutoff {witness}"
        )));
    }

    Ok(StrategyCertificate {
        innovator,
        rho,
        guarantee: Guarantee::PositiveAllCutoffs,
        premises,
        worst_case_profit: worst,
        witness_cutoff: witness,
        t_bar: Some(t_bar),
        epsilon: None,
        trivial: false,
    })
}

/// Scan segment boundaries `t̄` for the premise-satisfying choice that
/// maximizes the worst-case profit of [`positive_profit_strategy`].
pub fn scan_positive_profit_t_bar(
    market: &Market,
    innovator: Provider,
    settings: &Settings,
) -> Result<StrategyCertificate> {
    settings.validate()?;
    let hi = market.theta_max();
    let dist = &market.dist;
    let inn = market.cost(innovator);
    let c_full = inn.cost(dist, 0.0, hi)?;
    let c_oth_full = market.cost(innovator.other()).cost(dist, 0.0, hi)?;
    let step = settings.scaled_step(hi);

    // Precompute the cutoff grid once; each candidate t̄ is then a linear
    // sweep over it.
    let ts = grid(step, hi, step);
    let mut mass = Vec::with_capacity(ts.len());
    let mut weighted = Vec::with_capacity(ts.len());
    let mut served_cost = Vec::with_capacity(ts.len());
    for &t in &ts {
        mass.push(dist.cdf(t)?);
        weighted.push(dist.first_moment(t)?);
        served_cost.push(inn.mass_weighted_cost(dist, 0.0, t)?);
    }

    let mut best: Option<(f64, f64)> = None; // (worst-case profit, t̄)
    for (k, &t_bar) in ts.iter().enumerate() {
        if t_bar >= hi {
            break;
        }
        let c_bar = inn.cost(dist, 0.0, t_bar)?;
        let m1 = weighted[k];
        if !(c_bar < c_oth_full && c_bar < c_full && c_full < 2.0 * c_bar && m1 > 0.0) {
            continue;
        }
        let (pf, pl) = (c_bar, c_bar / m1);
        let mut worst = f64::INFINITY;
        for i in 0..ts.len() {
            let p = pf * mass[i] + pl * weighted[i] - served_cost[i];
            if p < worst {
                worst = p;
            }
        }
        if best.map_or(true, |(w, _)| worst > w) {
            best = Some((worst, t_bar));
        }
    }

    let (_, t_bar) = best.ok_or_else(|| {
        ModelError::PremiseViolation(
            "no segment boundary t̄ satisfies the positive-profit premises".into(),
        )
    })?;
    positive_profit_strategy(market, innovator, t_bar, settings)
}

/// Slope of the dominant construction: the smallest difference quotient
/// `(c_j(t,θ_max) − c_j(0,θ_max)) / t`, including its `t → 0` limit.
///
/// Returns `(t̄, slope)` with `t̄ = 0` when the limit attains the infimum.
fn dominant_slope(market: &Market, rival: Provider, settings: &Settings) -> Result<(f64, f64)> {
    let hi = market.theta_max();
    let dist = &market.dist;
    let oth = market.cost(rival);
    let c_full = oth.cost(dist, 0.0, hi)?;
    let quotient = |t: f64| -> Result<f64> { Ok((oth.cost(dist, t, hi)? - c_full) / t) };

    let step = settings.scaled_step(hi);
    let ts = grid(step, hi - step, step);
    let mut q_min = f64::INFINITY;
    let mut t_min = step;
    for &t in &ts {
        let q = quotient(t)?;
        if q < q_min {
            q_min = q;
            t_min = t;
        }
    }
    let imin = ts.iter().position(|&t| t == t_min).unwrap_or(0);
    let lo = if imin == 0 {
        QUOTIENT_EDGE * hi
    } else {
        ts[imin - 1]
    };
    let up = *ts.get(imin + 1).unwrap_or(&ts[imin]);
    if up > lo {
        let (x, v) = golden_min(|t| quotient(t).unwrap_or(f64::INFINITY), lo, up, 1e-10 * hi);
        if v < q_min {
            q_min = v;
            t_min = x;
        }
    }

    // The quotient extends continuously to t = 0 with the marginal saving of
    // shedding the cheapest users from the whole market.
    let limit = oth.lower_cost_derivative(dist, 0.0)?;
    if limit <= q_min {
        Ok((0.0, limit))
    } else {
        Ok((t_min, q_min))
    }
}

/// Construct the strategy that undercuts the rival's whole-market cost by
/// `ε` while pricing the slope at the cheapest rate the rival could match:
/// `p^ℓ = min_t (c_j(t,θ_max) − c_j(0,θ_max))/t`, `p^f = c_j(0,θ_max) − ε`.
///
/// Any constant response that attracts users loses the rival at least
/// `(1 − F(t̂))·ε`, so every individually rational response leaves the whole
/// market to the innovator at strictly more than his best constant-price
/// equilibrium profit. `epsilon = None` picks half its admissible bound.
pub fn dominant_strategy(
    market: &Market,
    innovator: Provider,
    epsilon: Option<f64>,
    settings: &Settings,
) -> Result<StrategyCertificate> {
    settings.validate()?;
    let hi = market.theta_max();
    let dist = &market.dist;
    let rival = innovator.other();
    let inn = market.cost(innovator);
    let oth = market.cost(rival);
    let c_inn_full = inn.cost(dist, 0.0, hi)?;
    let c_oth_full = oth.cost(dist, 0.0, hi)?;

    let mut premises = vec![PremiseCheck::strict_less(
        "innovator profits in some constant-price equilibrium: c_i(0,θ_max) < c_j(0,θ_max)",
        c_inn_full,
        c_oth_full,
    )];
    require_premises(&premises)?;

    let (t_bar, slope) = dominant_slope(market, rival, settings)?;
    if slope <= 0.0 {
        return Err(ModelError::VerificationFailed(format!(
            "dominant slope must be positive for an increasing rival cost, got {slope}"
        )));
    }
    let mean_all = dist.mean_type(0.0, hi)?;
    let bound = mean_all * slope;
    let eps = epsilon.unwrap_or(0.5 * bound);
    premises.push(PremiseCheck {
        name: "undercut margin within the slope's whole-market value: 0 < ε < μ(0,θ_max)·p^ℓ"
            .into(),
        lhs: eps,
        rhs: bound,
        satisfied: eps > 0.0 && eps < bound,
    });
    require_premises(&premises)?;

    let rho = PriceFunction::new(c_oth_full - eps, slope);

    // A constant response p attracts the types above t̂ = (p − p^f)/p^ℓ
    // (clamped to the support); verify the rival's loss on a grid of
    // response prices from deep undercuts up to the tie at θ_max.
    let rival_margin = |t: f64| -> Result<f64> {
        let t = t.clamp(0.0, hi);
        let tail = 1.0 - dist.cdf(t)?;
        let revenue = rho.price_at(t) * tail;
        Ok(revenue - oth.mass_weighted_cost(dist, t, hi)? + tail * eps)
    };
    let p_lo = rho.price_at(0.0) - 0.25 * c_oth_full.abs().max(1.0);
    let p_hi = rho.price_at(hi);
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_cutoff = 0.0;
    for &p in &grid(p_lo, p_hi, (p_hi - p_lo) * settings.grid_step) {
        let t = ((p - rho.fixed) / rho.slope).clamp(0.0, hi);
        let m = rival_margin(t)?;
        if m > worst_margin {
            worst_margin = m;
            worst_cutoff = t;
        }
    }
    let (x, neg) = golden_min(
        |t| -rival_margin(t).unwrap_or(f64::NEG_INFINITY),
        0.0,
        hi,
        1e-10 * hi,
    );
    if -neg > worst_margin {
        worst_margin = -neg;
        worst_cutoff = x;
    }
    if worst_margin > STRICT_TOL {
        return Err(ModelError::VerificationFailed(format!(
            "a constant response attracting the types above {worst_cutoff} loses the rival less \
             than the required margin (excess {worst_margin})"
        )));
    }

    // With every user-attracting response irrational, the innovator keeps the
    // whole market; his profit there must beat the best constant-price
    // equilibrium profit c_j(0,θ_max) − c_i(0,θ_max).
    let whole = dist.price_mass(&rho, 0.0, hi)? - inn.mass_weighted_cost(dist, 0.0, hi)?;
    let constant_best = c_oth_full - c_inn_full;
    if whole <= constant_best {
        return Err(ModelError::VerificationFailed(format!(
            "whole-market profit {whole} fails to beat the constant-equilibrium profit \
             {constant_best}"
        )));
    }

    Ok(StrategyCertificate {
        innovator,
        rho,
        guarantee: Guarantee::BeatsAllConstantBne,
        premises,
        worst_case_profit: whole,
        witness_cutoff: hi,
        t_bar: Some(t_bar),
        epsilon: Some(eps),
        trivial: false,
    })
}

/// Construct the strategy that tangents the rival's cost at the whole-market
/// mean: `p^ℓ = g_j′(μ(0,θ_max))`, `p^f = c_j(0,θ_max) − p^ℓ·μ(0,θ_max)`.
///
/// When the rival's cost is strictly split-convex, every interior segment
/// priced on this tangent line loses him money (the chord of a strictly
/// convex function lies above its tangent), so any individually rational
/// response cedes the whole market and the innovator keeps his best
/// constant-price equilibrium profit — trivially so when that profit is zero.
pub fn profit_preserving_strategy(
    market: &Market,
    innovator: Provider,
    settings: &Settings,
) -> Result<StrategyCertificate> {
    settings.validate()?;
    let hi = market.theta_max();
    let dist = &market.dist;
    let rival = innovator.other();
    let inn = market.cost(innovator);
    let oth = market.cost(rival);
    let c_inn_full = inn.cost(dist, 0.0, hi)?;
    let c_oth_full = oth.cost(dist, 0.0, hi)?;

    let convexity = oth.split_convexity(dist, settings.grid_step)?;
    let (min_gap, strict) = match &convexity {
        SplitConvexity::StrictlySplitConvex { min_gap, .. } => (*min_gap, true),
        SplitConvexity::SplitConvex { min_gap, .. } => (*min_gap, false),
        SplitConvexity::NotSplitConvex { min_gap, .. } => (*min_gap, false),
    };
    let premises = vec![PremiseCheck {
        name: "rival cost strictly split-convex: every interior split strictly raises total cost"
            .into(),
        lhs: min_gap,
        rhs: 0.0,
        satisfied: strict,
    }];
    require_premises(&premises)?;

    let slope = oth.mean_derivative(dist, 0.0, hi)?;
    let mean_all = dist.mean_type(0.0, hi)?;
    let rho = PriceFunction::new(c_oth_full - slope * mean_all, slope);

    // Tangent-line verification: at a price tie the rival must lose on every
    // interior segment, whichever side of the cutoff he ends up serving.
    let step = settings.scaled_step(hi);
    for &t in &grid(step, hi - step, step) {
        for profile in [
            UserProfile::new(t, rival),
            UserProfile::new(t, innovator),
        ] {
            let outcome = market.tie_outcome(&rho, &profile)?;
            let rival_profit = outcome.profits[rival.index()];
            if rival_profit >= 0.0 {
                return Err(ModelError::VerificationFailed(format!(
                    "rival breaks even on the {} segment at cutoff {t} (profit {rival_profit})",
                    if profile.low == rival { "low" } else { "high" }
                )));
            }
        }
    }

    let constant_best = (c_oth_full - c_inn_full).max(0.0);
    Ok(StrategyCertificate {
        innovator,
        rho,
        guarantee: Guarantee::WeaklyBeatsConstantBne,
        premises,
        worst_case_profit: constant_best,
        witness_cutoff: hi,
        t_bar: None,
        epsilon: None,
        trivial: constant_best == 0.0,
    })
}

/// Diagnostics for a market whose two providers share one cost function:
/// whether split-convexity forces zero profit in equilibrium, and the
/// equal-profit gap at every verified equilibrium family.
pub fn symmetric_diagnostics(market: &Market, settings: &Settings) -> Result<SymmetricDiagnostics> {
    settings.validate()?;
    let shared: &CostPolynomial = market.cost(Provider::One);
    if shared.coeffs != market.cost(Provider::Two).coeffs {
        return Err(ModelError::InvalidScenario(
            "symmetric diagnostics need identical cost polynomials for both providers".into(),
        ));
    }
    let convexity = shared.split_convexity(&market.dist, settings.grid_step)?;
    let zero_profit_required = convexity.holds();

    let families = find_all_bne(market, settings)?
        .into_iter()
        .map(|family| FamilyDiagnostic {
            cutoff: family.candidate.cutoff,
            low: family.candidate.low,
            profits: family.profits,
            equal_profit_gap: (family.profits[0] - family.profits[1]).abs(),
            max_profit: family.profits[0].max(family.profits[1]),
        })
        .collect();

    Ok(SymmetricDiagnostics {
        convexity,
        zero_profit_required,
        families,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostPolynomial;
    use crate::distribution::TypeDistribution;
    use crate::scenario::Scenario;

    fn reference_market() -> (Market, Settings) {
        let s = Scenario::reference_example();
        (s.market, s.settings)
    }

    fn market_with(
        dist: TypeDistribution,
        poly1: Vec<f64>,
        poly2: Vec<f64>,
    ) -> Result<Market> {
        let c1 = CostPolynomial::new(Provider::One, poly1, &dist)?;
        let c2 = CostPolynomial::new(Provider::Two, poly2, &dist)?;
        Market::new(dist, [c1, c2])
    }

    #[test]
    fn existence_fails_on_reference_market_with_witness_zero() {
        let (market, settings) = reference_market();
        let report = one_innovative_bne_exists(&market, Provider::One, &settings).unwrap();
        assert!(!report.exists);
        let w = report.witness.expect("a witness cutoff");
        assert!(w.abs() < 1e-12, "witness should be the zero cutoff, got {w}");
        // Gap at the zero cutoff equals the rival's whole-market cost here.
        assert!((report.max_gap - 0.2625).abs() < 1e-9);
        assert!(report.gap_at.abs() < 1e-9);
        assert!(report.constant_equilibrium.is_none());
    }

    #[test]
    fn existence_gap_matches_closed_form_for_affine_shared_cost() {
        // Shared affine cost g(x) = 0.1 + 0.5x, uniform types: the gap is
        // c(0,1) − F(t)·c(0,t) = 0.35 − t(0.1 + 0.25t), strictly decreasing,
        // so the maximum 0.35 and the first witness both sit at t = 0.
        let dist = TypeDistribution::uniform(1.0).unwrap();
        let market = market_with(dist, vec![0.1, 0.5], vec![0.1, 0.5]).unwrap();
        let report =
            one_innovative_bne_exists(&market, Provider::One, &Settings::default()).unwrap();
        assert!(!report.exists);
        let w = report.witness.unwrap();
        assert!(w.abs() < 1e-12, "witness {w}");
        assert!((report.max_gap - 0.35).abs() < 1e-9);
        assert!(report.gap_at.abs() < 1e-9);
    }

    #[test]
    fn existence_holds_when_the_gap_never_clears_zero() {
        // Tiny support, nearly flat own cost, rival whole-market cost negative:
        // the gap 0.5005·t − 0.005·t² − 0.05 stays ≤ 0 on [0, 0.1] with
        // equality only at θ_max, which the strict witness rule excludes.
        let dist = TypeDistribution::piecewise_linear(vec![(0.0, 10.0), (0.1, 10.0)]).unwrap();
        let market = market_with(dist, vec![0.0, 0.001], vec![-0.1, 1.0]).unwrap();
        let report =
            one_innovative_bne_exists(&market, Provider::One, &Settings::default()).unwrap();
        assert!(report.exists);
        assert!(report.witness.is_none());
        assert!(report.max_gap.abs() <= 1e-9, "max gap {}", report.max_gap);
        assert!((report.gap_at - 0.1).abs() < 1e-3);
        assert!(report.constant_equilibrium.is_some());
    }

    #[test]
    fn positive_profit_construction_matches_reference_prices() {
        let (market, settings) = reference_market();
        let cert = positive_profit_strategy(&market, Provider::One, 0.9, &settings).unwrap();
        assert_eq!(cert.guarantee, Guarantee::PositiveAllCutoffs);
        assert!((cert.rho.fixed - 0.215).abs() < 1e-9);
        assert!((cert.rho.slope - 0.530_864_197_530_864_2).abs() < 1e-9);
        // Worst case sits at the smallest admitted cutoff (one grid step).
        assert!((cert.worst_case_profit - 2.027_651_820_987_654e-4).abs() < 1e-12);
        assert!((cert.witness_cutoff - 1e-3).abs() < 1e-9);
        assert_eq!(cert.t_bar, Some(0.9));
        assert!(!cert.trivial);
        assert!(cert.premises.iter().all(|p| p.satisfied));
    }

    #[test]
    fn positive_profit_construction_swapped_roles() {
        let (market, settings) = reference_market();
        let cert = positive_profit_strategy(&market, Provider::Two, 0.9, &settings).unwrap();
        assert!((cert.rho.fixed - 0.250_625).abs() < 1e-9);
        assert!((cert.rho.slope - 0.618_827_160_493_827_2).abs() < 1e-9);
        assert!((cert.worst_case_profit - 5.093_435_108_024_686e-5).abs() < 1e-12);
    }

    #[test]
    fn positive_profit_rejects_segment_cheaper_than_half_the_market() {
        let (market, settings) = reference_market();
        let err = positive_profit_strategy(&market, Provider::One, 0.5, &settings).unwrap_err();
        assert!(err.is_validation(), "expected premise violation, got {err:?}");
        let msg = err.to_string();
        assert!(msg.contains("0.2625") && msg.contains("0.15"), "message: {msg}");
    }

    #[test]
    fn positive_profit_rejects_boundary_t_bar() {
        let (market, settings) = reference_market();
        assert!(positive_profit_strategy(&market, Provider::One, 0.0, &settings).is_err());
        assert!(positive_profit_strategy(&market, Provider::One, 1.0, &settings).is_err());
    }

    #[test]
    fn scan_picks_the_most_profitable_segment_boundary() {
        let (market, settings) = reference_market();
        let best = scan_positive_profit_t_bar(&market, Provider::One, &settings).unwrap();
        // The worst case improves with the low-segment cost, so the scan runs
        // to the premise frontier at the last interior grid point.
        assert!((best.t_bar.unwrap() - 0.999).abs() < 1e-9);
        let manual = positive_profit_strategy(&market, Provider::One, 0.9, &settings).unwrap();
        assert!(best.worst_case_profit > manual.worst_case_profit);
    }

    #[test]
    fn dominant_strategy_rejects_equal_whole_market_costs() {
        let (market, settings) = reference_market();
        let err = dominant_strategy(&market, Provider::One, None, &settings).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("constant-price equilibrium"));
    }

    fn advantaged_market() -> Market {
        // Rival cost lifted to 0.25 + μ²/4: difference quotient (2+t)/16,
        // infimum 0.125 attained in the t → 0 limit.
        let dist = TypeDistribution::uniform(1.0).unwrap();
        market_with(dist, vec![0.0125, 0.0, 1.0], vec![0.25, 0.0, 0.25]).unwrap()
    }

    #[test]
    fn dominant_strategy_takes_the_limit_slope_and_beats_constant_profit() {
        let market = advantaged_market();
        let cert = dominant_strategy(&market, Provider::One, None, &Settings::default()).unwrap();
        assert_eq!(cert.guarantee, Guarantee::BeatsAllConstantBne);
        assert_eq!(cert.t_bar, Some(0.0));
        assert!((cert.rho.slope - 0.125).abs() < 1e-9);
        assert!((cert.epsilon.unwrap() - 0.031_25).abs() < 1e-12);
        assert!((cert.rho.fixed - 0.281_25).abs() < 1e-9);
        // Whole-market profit 0.08125 strictly beats the constant-equilibrium
        // profit 0.3125 − 0.2625 = 0.05.
        assert!((cert.worst_case_profit - 0.081_25).abs() < 1e-9);
        assert!((cert.witness_cutoff - 1.0).abs() < 1e-12);
        assert!(!cert.trivial);
    }

    #[test]
    fn dominant_strategy_rejects_undercut_at_its_bound() {
        let market = advantaged_market();
        let settings = Settings::default();
        let err = dominant_strategy(&market, Provider::One, Some(0.0625), &settings).unwrap_err();
        assert!(err.is_validation(), "bound is strict, got {err:?}");
        let err = dominant_strategy(&market, Provider::One, Some(0.0), &settings).unwrap_err();
        assert!(err.is_validation());
        // Interior choices other than the default work fine.
        let cert = dominant_strategy(&market, Provider::One, Some(0.01), &settings).unwrap();
        assert!((cert.rho.fixed - 0.3025).abs() < 1e-9);
    }

    #[test]
    fn profit_preserving_matches_reference_tangent() {
        let (market, settings) = reference_market();
        let cert = profit_preserving_strategy(&market, Provider::One, &settings).unwrap();
        assert_eq!(cert.guarantee, Guarantee::WeaklyBeatsConstantBne);
        assert!((cert.rho.slope - 0.25).abs() < 1e-9);
        assert!((cert.rho.fixed - 0.1375).abs() < 1e-9);
        // Whole-market costs tie, so the preserved profit is the trivial zero.
        assert!(cert.trivial);
        assert_eq!(cert.worst_case_profit, 0.0);
    }

    #[test]
    fn profit_preserving_swapped_roles_uses_the_other_tangent() {
        let (market, settings) = reference_market();
        let cert = profit_preserving_strategy(&market, Provider::Two, &settings).unwrap();
        assert!((cert.rho.slope - 1.0).abs() < 1e-9);
        assert!((cert.rho.fixed + 0.2375).abs() < 1e-9);
        assert!(cert.trivial);
    }

    #[test]
    fn profit_preserving_nontrivial_when_the_rival_is_costlier() {
        let market = advantaged_market();
        let cert =
            profit_preserving_strategy(&market, Provider::One, &Settings::default()).unwrap();
        assert!((cert.rho.slope - 0.25).abs() < 1e-9);
        assert!((cert.rho.fixed - 0.1875).abs() < 1e-9);
        assert!(!cert.trivial);
        assert!((cert.worst_case_profit - 0.05).abs() < 1e-9);
    }

    #[test]
    fn profit_preserving_rejects_mean_affine_rival_cost() {
        // An affine g has exactly cost-neutral splits: split-convex but not
        // strictly, so the tangent argument has no strict margin.
        let dist = TypeDistribution::uniform(1.0).unwrap();
        let market = market_with(dist, vec![0.0125, 0.0, 1.0], vec![0.1, 0.5]).unwrap();
        let err =
            profit_preserving_strategy(&market, Provider::One, &Settings::default()).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("split-convex"));
    }

    #[test]
    fn symmetric_diagnostics_force_zero_equal_profits() {
        let dist = TypeDistribution::uniform(1.0).unwrap();
        let market =
            market_with(dist, vec![0.05, 0.1, 1.0], vec![0.05, 0.1, 1.0]).unwrap();
        let diag = symmetric_diagnostics(&market, &Settings::default()).unwrap();
        assert!(diag.zero_profit_required);
        assert!(!diag.families.is_empty());
        for fam in &diag.families {
            assert!(fam.equal_profit_gap <= 1e-9, "gap {}", fam.equal_profit_gap);
            assert!(fam.max_profit <= 1e-6, "profit {}", fam.max_profit);
        }
    }

    #[test]
    fn symmetric_diagnostics_reject_distinct_costs() {
        let (market, settings) = reference_market();
        let err = symmetric_diagnostics(&market, &settings).unwrap_err();
        assert!(err.is_validation());
    }
}
