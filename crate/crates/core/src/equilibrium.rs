//! Verification and search of equilibria when both providers may post
//! variance-dependent prices.
//!
//! An equilibrium of this game requires both providers to post the *same*
//! price line `ρ` together with a cutoff profile `[0, t̂]→low` that users would
//! follow at that tie. [`check_bne`] certifies a given `(ρ, profile)` pair by
//! discharging the four one-dimensional deviation conditions (parametrised by
//! an alternative cutoff `a`) on a grid with local refinement.
//! [`candidate_cutoffs`] finds the only cutoffs that can appear in an
//! equilibrium — interior tangency points of the two providers' marginal-cost
//! expressions plus the two whole-market boundary profiles — each carrying the
//! one-dimensional line of prices compatible with it. [`equilibrium_segment`]
//! then locates the maximal verified fixed-price interval along that line, and
//! [`find_all_bne`] composes the three into the full search pipeline.

use serde::Serialize;

use crate::market::{Market, PriceFunction, Provider, UserProfile};
use crate::numeric::{bisect_root, golden_max, golden_min, grid};
use crate::scenario::Settings;
use crate::{ModelError, Result};

/// Gap slack accepted when locating family endpoints along a price line.
///
/// Endpoints are the exact zero crossings of the minimal condition gap; the
/// slack only guards the sign tests against rounding, so single-point families
/// (min gap exactly 0 at one price) are still found.
const SEGMENT_SLACK: f64 = 1e-9;

/// Interval-width tolerance for interior cutoff roots.
const ROOT_TOL: f64 = 1e-12;

/// Cutoffs closer than this are treated as the same candidate.
const DEDUPE_TOL: f64 = 1e-8;

/// Densities below this are treated as zero when deciding whether a
/// candidate's price line is defined.
const DENSITY_ZERO_TOL: f64 = 1e-12;

/// The four deviation families of the equilibrium characterisation.
///
/// Each is a one-parameter family of alternative cutoffs `a ∈ [0, θ_max]`:
/// the *chain* conditions keep the serving orientation and move the boundary,
/// the *switch* conditions swap which provider serves the low-variance side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConditionKind {
    /// The low provider must not prefer serving `[0, a]` instead of `[0, t̂]`.
    LowChain,
    /// The high provider must not prefer serving `[a, θ_max]` instead of `[t̂, θ_max]`.
    HighChain,
    /// The high provider must not prefer switching to the low segment `[0, a]`.
    HighSwitch,
    /// The low provider must not prefer switching to the high segment `[a, θ_max]`.
    LowSwitch,
}

impl ConditionKind {
    /// All conditions in the order they are checked and reported.
    pub const ALL: [ConditionKind; 4] = [
        ConditionKind::LowChain,
        ConditionKind::HighChain,
        ConditionKind::HighSwitch,
        ConditionKind::LowSwitch,
    ];

    /// Human-readable description of the deviation the condition rules out.
    pub fn description(self) -> &'static str {
        match self {
            ConditionKind::LowChain => "low provider prefers serving [0, a]",
            ConditionKind::HighChain => "high provider prefers serving [a, θ_max]",
            ConditionKind::HighSwitch => "high provider prefers switching to [0, a]",
            ConditionKind::LowSwitch => "low provider prefers switching to [a, θ_max]",
        }
    }
}

impl std::fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ConditionKind::LowChain => "low-chain",
            ConditionKind::HighChain => "high-chain",
            ConditionKind::HighSwitch => "high-switch",
            ConditionKind::LowSwitch => "low-switch",
        };
        f.write_str(name)
    }
}

/// Result of certifying one `(ρ, profile)` pair.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(tag = "status")]
pub enum BneCheck {
    /// Every condition holds at every checked `a` (within the configured
    /// slack); reports the smallest gap found and where it occurs.
    Verified {
        min_gap: f64,
        worst_a: f64,
        condition: ConditionKind,
    },
    /// The first condition (in [`ConditionKind::ALL`] order) that fails,
    /// with the most violating alternative cutoff and the signed gap there.
    Violated {
        condition: ConditionKind,
        at_a: f64,
        gap: f64,
    },
}

impl BneCheck {
    pub fn is_verified(&self) -> bool {
        matches!(self, BneCheck::Verified { .. })
    }
}

/// Precomputed quantities for evaluating the four condition gaps at a fixed
/// `(ρ, profile)`.
///
/// All gaps are *requirement minus temptation*: nonnegative means the
/// deviation is unprofitable. Signed revenue integrals make each chain formula
/// valid on both sides of the cutoff.
struct ConditionEvaluator<'m> {
    market: &'m Market,
    rho: PriceFunction,
    cutoff: f64,
    hi: f64,
    low: Provider,
    /// Total cost the low provider pays for its whole segment `[0, t̂]`.
    low_cost_full: f64,
    /// Total cost the high provider pays for its whole segment `[t̂, θ_max]`.
    high_cost_tail: f64,
    low_profit: f64,
    high_profit: f64,
}

impl<'m> ConditionEvaluator<'m> {
    fn new(market: &'m Market, rho: &PriceFunction, profile: &UserProfile) -> Result<Self> {
        if !rho.fixed.is_finite() || !rho.slope.is_finite() {
            return Err(ModelError::Domain(format!(
                "price function must be finite, got ({}, {})",
                rho.fixed, rho.slope
            )));
        }
        let hi = market.theta_max();
        let cutoff = market.dist.clamp(profile.cutoff)?;
        let low = profile.low;
        let high = profile.high();
        let low_cost_full = market
            .cost(low)
            .mass_weighted_cost(&market.dist, 0.0, cutoff)?;
        let high_cost_tail = market
            .cost(high)
            .mass_weighted_cost(&market.dist, cutoff, hi)?;
        let low_profit = market.dist.price_mass(rho, 0.0, cutoff)? - low_cost_full;
        let high_profit = market.dist.price_mass(rho, cutoff, hi)? - high_cost_tail;
        Ok(ConditionEvaluator {
            market,
            rho: *rho,
            cutoff,
            hi,
            low,
            low_cost_full,
            high_cost_tail,
            low_profit,
            high_profit,
        })
    }

    fn low_poly(&self) -> &crate::cost::CostPolynomial {
        self.market.cost(self.low)
    }

    fn high_poly(&self) -> &crate::cost::CostPolynomial {
        self.market.cost(self.low.other())
    }

    /// Signed condition gap at alternative cutoff `a`; the pair `(ρ, profile)`
    /// satisfies the condition iff the gap is nonnegative for every `a`.
    fn gap(&self, kind: ConditionKind, a: f64) -> f64 {
        let dist = &self.market.dist;
        let a = dist.clamp(a).expect("alternative cutoff within support");
        let msg = "condition gap terms are total on the support";
        match kind {
            // Moving the low provider's boundary from t̂ to a changes its
            // profit by pm(a→t̂) − [cost(0,t̂) − cost(0,a)]; that change must
            // favour staying, so the gap itself must be ≥ 0.
            ConditionKind::LowChain => {
                let revenue = dist.price_mass(&self.rho, a, self.cutoff).expect(msg);
                let cost_at_a = self
                    .low_poly()
                    .mass_weighted_cost(dist, 0.0, a)
                    .expect(msg);
                revenue - (self.low_cost_full - cost_at_a)
            }
            // The high provider extending (or shrinking) to [a, θ_max] gains
            // revenue pm(a→t̂) and pays the cost difference; the cost excess
            // must cover the revenue.
            ConditionKind::HighChain => {
                let revenue = dist.price_mass(&self.rho, a, self.cutoff).expect(msg);
                let cost_at_a = self
                    .high_poly()
                    .mass_weighted_cost(dist, a, self.hi)
                    .expect(msg);
                (cost_at_a - self.high_cost_tail) - revenue
            }
            // The high provider must not do better by serving the low
            // segment [0, a] at the posted prices.
            ConditionKind::HighSwitch => {
                let revenue = dist.price_mass(&self.rho, 0.0, a).expect(msg);
                let cost = self
                    .high_poly()
                    .mass_weighted_cost(dist, 0.0, a)
                    .expect(msg);
                self.high_profit - (revenue - cost)
            }
            // The low provider must not do better by serving the high
            // segment [a, θ_max] at the posted prices.
            ConditionKind::LowSwitch => {
                let revenue = dist.price_mass(&self.rho, a, self.hi).expect(msg);
                let cost = self
                    .low_poly()
                    .mass_weighted_cost(dist, a, self.hi)
                    .expect(msg);
                self.low_profit - (revenue - cost)
            }
        }
    }
}

/// Alternative-cutoff grid: `[0, θ_max]` at the configured spacing with the
/// profile cutoff inserted exactly (the switch conditions bind there).
fn deviation_grid(hi: f64, cutoff: f64, step: f64) -> Vec<f64> {
    let mut points = grid(0.0, hi, step);
    if let Err(pos) = points.binary_search_by(|x| x.partial_cmp(&cutoff).expect("finite grid")) {
        if pos == 0 || pos == points.len() || (points[pos] - cutoff).abs() > 1e-15 {
            points.insert(pos.min(points.len()), cutoff);
        }
    }
    points
}

/// Certify that both providers posting `rho` with users following `profile`
/// is an equilibrium.
///
/// Each of the four deviation conditions is evaluated on the alternative-cutoff
/// grid and locally refined around the minimising grid point; a condition fails
/// if its smallest gap drops below `−settings.check_tolerance` (the slack
/// absorbs rounded published prices). Conditions are checked in
/// [`ConditionKind::ALL`] order and the first failure is reported with its
/// worst `a`.
pub fn check_bne(
    market: &Market,
    rho: &PriceFunction,
    profile: &UserProfile,
    settings: &Settings,
) -> Result<BneCheck> {
    settings.validate()?;
    let eval = ConditionEvaluator::new(market, rho, profile)?;
    let hi = market.theta_max();
    let step = settings.scaled_step(hi);
    let points = deviation_grid(hi, eval.cutoff, step);
    let refine_tol = 1e-8 * hi;

    let mut overall: Option<(f64, f64, ConditionKind)> = None;
    for kind in ConditionKind::ALL {
        let mut min_gap = f64::INFINITY;
        let mut min_idx = 0usize;
        for (idx, &a) in points.iter().enumerate() {
            let g = eval.gap(kind, a);
            if g < min_gap {
                min_gap = g;
                min_idx = idx;
            }
        }
        let mut worst_a = points[min_idx];
        // Refine between the neighbours of the minimising grid point: the gap
        // is smooth in `a` away from the kinks the grid already contains.
        let lo = if min_idx > 0 { points[min_idx - 1] } else { points[0] };
        let hi_a = points[(min_idx + 1).min(points.len() - 1)];
        if hi_a > lo {
            let (a_ref, g_ref) = golden_min(|a| eval.gap(kind, a), lo, hi_a, refine_tol);
            if g_ref < min_gap {
                min_gap = g_ref;
                worst_a = a_ref;
            }
        }
        if min_gap < -settings.check_tolerance {
            return Ok(BneCheck::Violated {
                condition: kind,
                at_a: worst_a,
                gap: min_gap,
            });
        }
        if overall.map_or(true, |(g, _, _)| min_gap < g) {
            overall = Some((min_gap, worst_a, kind));
        }
    }
    let (min_gap, worst_a, condition) = overall.expect("at least one condition evaluated");
    Ok(BneCheck::Verified {
        min_gap,
        worst_a,
        condition,
    })
}

/// The one-dimensional set of prices compatible with a candidate cutoff:
/// `p_f + anchor·p_ℓ = target`.
///
/// For interior candidates the anchor is the cutoff itself (the tangency
/// equation divided by the density). Boundary candidates pin the serving
/// provider's whole-market profit to zero instead, so their anchor is the
/// whole-market mean type.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PriceLine {
    pub target: f64,
    pub anchor: f64,
}

impl PriceLine {
    /// The price function on the line with fixed part `p_f`.
    pub fn price_at(&self, p_f: f64) -> PriceFunction {
        PriceFunction::new(p_f, (self.target - p_f) / self.anchor)
    }
}

/// A cutoff profile that survives the necessary-condition filter, together
/// with its price line (when the density at the cutoff defines one).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BneCandidate {
    pub cutoff: f64,
    /// Which provider serves the low-variance segment.
    pub low: Provider,
    /// `None` when the density vanishes at the cutoff, leaving prices
    /// unconstrained by the tangency equation.
    pub price_line: Option<PriceLine>,
    /// True for the whole-market profiles `t̂ = 0` and `t̂ = θ_max`.
    pub boundary: bool,
}

impl BneCandidate {
    pub fn profile(&self) -> UserProfile {
        UserProfile::new(self.cutoff, self.low)
    }

    pub fn line_defined(&self) -> bool {
        self.price_line.is_some()
    }
}

/// Marginal price a low provider `i` would need at `t` to be exactly tangent
/// to its average-cost expression: `g_i(μ(0,t)) + g_i′(μ(0,t))·(t − μ(0,t))`.
fn low_side_marginal(market: &Market, low: Provider, t: f64) -> Result<f64> {
    let mu = market.dist.mean_type(0.0, t)?;
    let g = market.cost(low);
    Ok(g.eval(mu) + g.derivative(mu) * (t - mu))
}

/// Marginal price the high provider `j` supports at `t`:
/// `g_j(μ(t,θ_max)) − g_j′(μ(t,θ_max))·(μ(t,θ_max) − t)`.
fn high_side_marginal(market: &Market, high: Provider, t: f64) -> Result<f64> {
    let hi = market.theta_max();
    let mu = market.dist.mean_type(t, hi)?;
    let g = market.cost(high);
    Ok(g.eval(mu) - g.derivative(mu) * (mu - t))
}

/// Tangency residual whose interior roots are the only cutoffs that can occur
/// in an equilibrium with `low` serving the low segment (density factored out).
fn tangency_residual(market: &Market, low: Provider, t: f64) -> Result<f64> {
    Ok(low_side_marginal(market, low, t)? - high_side_marginal(market, low.other(), t)?)
}

/// Enumerate every cutoff profile that can be part of an equilibrium.
///
/// Interior candidates are roots of the tangency residual for each serving
/// orientation, bracketed by sign changes on the grid and bisected to full
/// precision; each carries the price line `p_f + t̂·p_ℓ = target`. The two
/// whole-market boundary profiles are always appended, parametrised by the
/// serving provider's zero-profit line. Cutoffs where the density vanishes
/// (interior zero-density knots, or roots landing on one) are reported with
/// `price_line = None` since the tangency equation degenerates there.
pub fn candidate_cutoffs(market: &Market, settings: &Settings) -> Result<Vec<BneCandidate>> {
    settings.validate()?;
    let hi = market.theta_max();
    let step = settings.scaled_step(hi);
    let interior = grid(step, hi - step, step);

    let mut out: Vec<BneCandidate> = Vec::new();
    for low in Provider::both() {
        let mut roots: Vec<f64> = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for &t in &interior {
            let val = tangency_residual(market, low, t)?;
            if val == 0.0 {
                roots.push(t);
                prev = Some((t, val));
                continue;
            }
            if let Some((t0, v0)) = prev {
                if v0 * val < 0.0 {
                    let root = bisect_root(
                        |x| tangency_residual(market, low, x).expect("interior residual"),
                        t0,
                        t,
                        ROOT_TOL,
                    );
                    roots.push(root);
                }
            }
            prev = Some((t, val));
        }
        roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
        roots.dedup_by(|a, b| (*a - *b).abs() <= DEDUPE_TOL);
        for root in roots {
            let density = market.dist.density(root)?;
            let price_line = if density > DENSITY_ZERO_TOL {
                Some(PriceLine {
                    target: low_side_marginal(market, low, root)?,
                    anchor: root,
                })
            } else {
                None
            };
            out.push(BneCandidate {
                cutoff: root,
                low,
                price_line,
                boundary: false,
            });
        }
    }

    // Cutoffs with zero density satisfy the (density-weighted) tangency
    // equation for every price, so they are candidates in both orientations
    // with no price line to search.
    for zero in market.dist.interior_density_zeros() {
        out.retain(|c| c.boundary || (c.cutoff - zero).abs() > DEDUPE_TOL || !c.line_defined());
        for low in Provider::both() {
            let duplicate = out
                .iter()
                .any(|c| c.low == low && !c.boundary && (c.cutoff - zero).abs() <= DEDUPE_TOL);
            if !duplicate {
                out.push(BneCandidate {
                    cutoff: zero,
                    low,
                    price_line: None,
                    boundary: false,
                });
            }
        }
    }

    // Whole-market boundary profiles. `t̂ = 0` hands the market to provider 2,
    // `t̂ = θ_max` to provider 1; both are canonically expressed with
    // provider 1 on the (possibly empty) low side.
    let mean_all = market.dist.mean_type(0.0, hi)?;
    for (cutoff, serving) in [(0.0, Provider::Two), (hi, Provider::One)] {
        out.push(BneCandidate {
            cutoff,
            low: Provider::One,
            price_line: Some(PriceLine {
                target: market.cost(serving).cost(&market.dist, 0.0, hi)?,
                anchor: mean_all,
            }),
            boundary: true,
        });
    }

    out.sort_by(|a, b| {
        (a.cutoff, a.low.number())
            .partial_cmp(&(b.cutoff, b.low.number()))
            .expect("finite cutoffs")
    });
    Ok(out)
}

/// A maximal verified interval of fixed prices along one candidate's line.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerifiedFamily {
    pub candidate: BneCandidate,
    /// Fixed-price range `[p_f_lo, p_f_hi]` over which every condition holds.
    pub p_f_lo: f64,
    pub p_f_hi: f64,
    /// Largest minimal condition gap over the family (robustness margin).
    pub max_gap: f64,
    /// Representative price function at the midpoint of the range.
    pub rho_mid: PriceFunction,
    /// Provider profits at the midpoint price (`[π₁, π₂]`).
    pub profits: [f64; 2],
    /// Welfare of the profile; identical across the family.
    pub welfare: f64,
}

/// Upper bound on slopes worth searching on a price line: no equilibrium
/// tangent is steeper than the steepest marginal cost in the market.
fn slope_cap(market: &Market, settings: &Settings) -> f64 {
    let hi = market.theta_max();
    let mut cap: f64 = 0.0;
    for &t in grid(0.0, hi, settings.scaled_step(hi)).iter() {
        for p in Provider::both() {
            cap = cap.max(market.cost(p).derivative(t));
        }
    }
    3.0 * cap + 1.0
}

/// Locate the maximal verified fixed-price interval on a candidate's line.
///
/// The minimal condition gap is affine in `p_f` at each `(condition, a)` pair,
/// so its pointwise minimum is concave and piecewise linear: the verified set
/// is a single interval. The affine coefficients are extracted with two grid
/// sweeps, the maximum located by golden section and the interval endpoints by
/// bisection to `settings.segment_refine`. `p_f_range` overrides the searched
/// range; the default covers `[0, target]` for interior candidates with a
/// positive target, and slopes from `0` up to a market-scaled cap otherwise.
/// Returns `None` when no price on the searched range verifies.
pub fn equilibrium_segment(
    market: &Market,
    candidate: &BneCandidate,
    p_f_range: Option<(f64, f64)>,
    settings: &Settings,
) -> Result<Option<VerifiedFamily>> {
    settings.validate()?;
    let line = candidate.price_line.ok_or_else(|| {
        ModelError::Domain(format!(
            "candidate at cutoff {} has an undefined price line (zero density)",
            candidate.cutoff
        ))
    })?;
    let (range_lo, range_hi) = match p_f_range {
        Some((lo, hi)) => {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ModelError::Domain(format!(
                    "fixed-price search range must be a finite interval, got [{lo}, {hi}]"
                )));
            }
            (lo, hi)
        }
        None => {
            if !candidate.boundary && line.target > 0.0 {
                (0.0, line.target)
            } else {
                (line.target - line.anchor * slope_cap(market, settings), line.target)
            }
        }
    };

    let hi = market.theta_max();
    let profile = candidate.profile();
    let points = deviation_grid(hi, candidate.cutoff, settings.scaled_step(hi));

    // Affine gap coefficients from sweeps at p_f = 0 and p_f = 1:
    // gap(cond, a; p_f) = base + slope·p_f exactly.
    let eval0 = ConditionEvaluator::new(market, &line.price_at(0.0), &profile)?;
    let eval1 = ConditionEvaluator::new(market, &line.price_at(1.0), &profile)?;
    let mut base = Vec::with_capacity(4 * points.len());
    let mut slope = Vec::with_capacity(4 * points.len());
    for kind in ConditionKind::ALL {
        for &a in &points {
            let g0 = eval0.gap(kind, a);
            let g1 = eval1.gap(kind, a);
            base.push(g0);
            slope.push(g1 - g0);
        }
    }
    let min_gap = |p_f: f64| -> f64 {
        base.iter()
            .zip(&slope)
            .map(|(b, s)| b + s * p_f)
            .fold(f64::INFINITY, f64::min)
    };

    let (mut best_pf, mut best_gap) = golden_max(min_gap, range_lo, range_hi, settings.segment_refine * 0.1);
    for bound in [range_lo, range_hi] {
        let g = min_gap(bound);
        if g > best_gap {
            best_gap = g;
            best_pf = bound;
        }
    }
    if best_gap < -SEGMENT_SLACK {
        return Ok(None);
    }

    // m(p_f) + SEGMENT_SLACK changes sign between each range end and the
    // maximiser; bisect those crossings for the interval endpoints.
    let crossing = |lo: f64, hi_pf: f64| -> f64 {
        bisect_root(|p| min_gap(p) + SEGMENT_SLACK, lo, hi_pf, settings.segment_refine)
    };
    let p_f_lo = if min_gap(range_lo) >= -SEGMENT_SLACK {
        range_lo
    } else {
        crossing(range_lo, best_pf)
    };
    let p_f_hi = if min_gap(range_hi) >= -SEGMENT_SLACK {
        range_hi
    } else {
        crossing(best_pf, range_hi)
    };

    let p_f_mid = 0.5 * (p_f_lo + p_f_hi);
    let rho_mid = line.price_at(p_f_mid);
    let outcome = market.tie_outcome(&rho_mid, &profile)?;
    Ok(Some(VerifiedFamily {
        candidate: *candidate,
        p_f_lo,
        p_f_hi,
        max_gap: best_gap,
        rho_mid,
        profits: outcome.profits,
        welfare: outcome.welfare,
    }))
}

/// Full equilibrium search: enumerate candidates, trace each defined price
/// line for its verified interval, and keep the families whose midpoint
/// passes the full check.
///
/// Candidates without a price line (zero density at the cutoff) cannot be
/// searched along a line and are skipped; [`candidate_cutoffs`] still reports
/// them for inspection.
pub fn find_all_bne(market: &Market, settings: &Settings) -> Result<Vec<VerifiedFamily>> {
    let mut families = Vec::new();
    for candidate in candidate_cutoffs(market, settings)? {
        if !candidate.line_defined() {
            continue;
        }
        if let Some(family) = equilibrium_segment(market, &candidate, None, settings)? {
            let mid_check = check_bne(market, &family.rho_mid, &candidate.profile(), settings)?;
            if mid_check.is_verified() {
                families.push(family);
            }
        }
    }
    Ok(families)
}
