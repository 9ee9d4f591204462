//! Brute-force deviation oracle.
//!
//! Everything here knows only the profit accounting — never the analytic
//! equilibrium conditions — so it can independently certify or refute what
//! the solvers claim: grid best responses, ε-equilibrium certification,
//! constant-response sweeps, and an exhaustive scan of the regime where only
//! one provider may post a slope.

use serde::Serialize;

use crate::market::{
    enforceable_profiles, EnforceableProfiles, Market, PriceFunction, Provider, UserProfile,
};
use crate::numeric::golden_min;
use crate::{ModelError, Result};

/// Slack granted to strict comparisons against accumulated rounding.
const ORACLE_TOL: f64 = 1e-9;

/// Cutoff samples used when optimizing over enforceable tie profiles.
const TIE_SAMPLES: usize = 201;

/// Discretization of the deviation space: a rectangle of price functions.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeviationGrid {
    /// Fixed-price axis `[lo, hi]`.
    pub p_f_range: (f64, f64),
    /// Slope axis `[lo, hi]`.
    pub p_l_range: (f64, f64),
    /// Points per axis (endpoints included).
    pub steps: usize,
}

impl DeviationGrid {
    pub fn new(p_f_range: (f64, f64), p_l_range: (f64, f64), steps: usize) -> Result<Self> {
        let g = DeviationGrid {
            p_f_range,
            p_l_range,
            steps,
        };
        g.validate()?;
        Ok(g)
    }

    /// Default rectangle scaled to the market: fixed prices within
    /// `[−0.5, 1.5]`× the larger whole-market cost, slopes within
    /// `[−1, 3]`× that cost per unit of type.
    pub fn default_for(market: &Market, steps: usize) -> Result<Self> {
        let scale = market.max_whole_cost()?.abs().max(1e-6);
        let hi = market.theta_max();
        DeviationGrid::new(
            (-0.5 * scale, 1.5 * scale),
            (-scale / hi, 3.0 * scale / hi),
            steps,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let ok_range = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if !ok_range(self.p_f_range) || !ok_range(self.p_l_range) {
            return Err(ModelError::Domain(format!(
                "deviation grid ranges must be finite and ordered, got p_f {:?}, p_l {:?}",
                self.p_f_range, self.p_l_range
            )));
        }
        if self.steps < 2 {
            return Err(ModelError::Domain(format!(
                "deviation grid needs at least 2 steps per axis, got {}",
                self.steps
            )));
        }
        Ok(())
    }

    pub fn p_f_values(&self) -> Vec<f64> {
        linspace(self.p_f_range.0, self.p_f_range.1, self.steps)
    }

    pub fn p_l_values(&self) -> Vec<f64> {
        linspace(self.p_l_range.0, self.p_l_range.1, self.steps)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || hi == lo {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + k as f64 * step).collect()
}

/// A grid maximizer of deviation profit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BestResponse {
    pub rho: PriceFunction,
    pub profit: f64,
    /// Profile the users settle on against the response.
    pub induced_profile: UserProfile,
}

/// The deviator's best enforceable profile at a full price tie, found by a
/// cutoff scan over both orientations with golden-section polish.
///
/// A provider deviating *to* the rival's exact price function can steer users
/// onto any tie profile at infinitesimal loss, so tie evaluations credit the
/// deviator with the best of them.
pub fn deviator_optimal_tie_profit(
    market: &Market,
    deviator: Provider,
    rho: &PriceFunction,
) -> Result<(f64, UserProfile)> {
    let hi = market.theta_max();
    let mut best: Option<(f64, UserProfile)> = None;
    for low in [deviator, deviator.other()] {
        let profit_at = |t: f64| -> Result<f64> {
            let outcome = market.tie_outcome(rho, &UserProfile::new(t, low))?;
            Ok(outcome.profits[deviator.index()])
        };
        let ts = linspace(0.0, hi, TIE_SAMPLES);
        let mut loc_best = f64::NEG_INFINITY;
        let mut loc_at = 0.0;
        for &t in &ts {
            let p = profit_at(t)?;
            if p > loc_best {
                loc_best = p;
                loc_at = t;
            }
        }
        let idx = ts.iter().position(|&t| t == loc_at).unwrap_or(0);
        let lo = if idx == 0 { ts[0] } else { ts[idx - 1] };
        let up = *ts.get(idx + 1).unwrap_or(&ts[idx]);
        if up > lo {
            let (x, neg) = golden_min(
                |t| -profit_at(t).unwrap_or(f64::NEG_INFINITY),
                lo,
                up,
                1e-9 * hi,
            );
            if -neg > loc_best {
                loc_best = -neg;
                loc_at = x;
            }
        }
        if best.as_ref().map_or(true, |(b, _)| loc_best > *b) {
            best = Some((loc_best, UserProfile::new(loc_at, low)));
        }
    }
    Ok(best.expect("tie scan always evaluates at least one profile"))
}

/// Profit `deviator` obtains by posting `rho_self` against `rho_other`, with
/// users splitting at the enforceable profile (deviator-optimal at ties).
fn deviation_profit(
    market: &Market,
    deviator: Provider,
    rho_self: &PriceFunction,
    rho_other: &PriceFunction,
) -> Result<(f64, UserProfile)> {
    let (rho1, rho2) = if deviator == Provider::One {
        (rho_self, rho_other)
    } else {
        (rho_other, rho_self)
    };
    match enforceable_profiles(rho1, rho2, market.theta_max()) {
        EnforceableProfiles::Unique(profile) => {
            let outcome = market.outcome((rho1, rho2), &profile)?;
            Ok((outcome.profits[deviator.index()], profile))
        }
        EnforceableProfiles::TieFamily => deviator_optimal_tie_profit(market, deviator, rho_self),
    }
}

/// Exhaustive grid best response of `deviator` to `rho_other`.
///
/// Iterates the grid in ascending `(p_f, p_l)` order and keeps the first
/// maximizer, so ties break deterministically toward the lowest fixed price,
/// then the lowest slope. `constant_only` collapses the slope axis to `{0}`.
/// When every grid point loses money, the response falls back to pricing
/// strictly above the rival everywhere: no users, zero profit.
pub fn best_response(
    market: &Market,
    deviator: Provider,
    rho_other: &PriceFunction,
    grid: &DeviationGrid,
    constant_only: bool,
) -> Result<BestResponse> {
    grid.validate()?;
    let slopes = if constant_only {
        vec![0.0]
    } else {
        grid.p_l_values()
    };
    let mut best: Option<BestResponse> = None;
    for &pf in &grid.p_f_values() {
        for &pl in &slopes {
            let rho = PriceFunction::new(pf, pl);
            let (profit, induced_profile) = deviation_profit(market, deviator, &rho, rho_other)?;
            if best.as_ref().map_or(true, |b| profit > b.profit) {
                best = Some(BestResponse {
                    rho,
                    profit,
                    induced_profile,
                });
            }
        }
    }
    let mut best = best.expect("validated grids are nonempty");
    if best.profit < 0.0 {
        // Individually rational exit: parallel to the rival but strictly
        // above it, attracting nobody.
        let margin = 1.0 + market.max_whole_cost()?.abs();
        let rho = PriceFunction::new(rho_other.fixed + margin, rho_other.slope);
        let (profit, induced_profile) = deviation_profit(market, deviator, &rho, rho_other)?;
        best = BestResponse {
            rho,
            profit,
            induced_profile,
        };
    }
    Ok(best)
}

/// Best constant response refined past the grid: scan `steps` fixed prices
/// over `p_f_range`, then polish the maximizer between its grid neighbours.
pub fn best_constant_response_refined(
    market: &Market,
    deviator: Provider,
    rho_other: &PriceFunction,
    p_f_range: (f64, f64),
    steps: usize,
) -> Result<BestResponse> {
    let grid = DeviationGrid::new(p_f_range, (0.0, 0.0), steps)?;
    let coarse = best_response(market, deviator, rho_other, &grid, true)?;
    let step = (p_f_range.1 - p_f_range.0) / (steps - 1) as f64;
    let lo = (coarse.rho.fixed - step).max(p_f_range.0);
    let up = (coarse.rho.fixed + step).min(p_f_range.1);
    if up <= lo {
        return Ok(coarse);
    }
    let profit_at = |p: f64| -> Result<(f64, UserProfile)> {
        deviation_profit(market, deviator, &PriceFunction::constant(p), rho_other)
    };
    let (x, neg) = golden_min(
        |p| -profit_at(p).map(|r| r.0).unwrap_or(f64::NEG_INFINITY),
        lo,
        up,
        1e-10 * (1.0 + p_f_range.1.abs()),
    );
    if -neg > coarse.profit {
        let (profit, induced_profile) = profit_at(x)?;
        return Ok(BestResponse {
            rho: PriceFunction::constant(x),
            profit,
            induced_profile,
        });
    }
    Ok(coarse)
}

/// A profitable deviation found by [`epsilon_bne_verify`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BestDeviation {
    pub provider: Provider,
    pub rho: PriceFunction,
    /// Improvement over the provider's profit at the candidate point.
    pub gain: f64,
    pub induced_profile: UserProfile,
}

/// Verdict of the ε-equilibrium grid certification.
#[derive(Clone, Debug, Serialize)]
pub struct Certification {
    pub certified: bool,
    pub epsilon: f64,
    /// Profits at the candidate strategies and profile (`[π₁, π₂]`).
    pub baseline_profits: [f64; 2],
    /// Largest grid improvement per provider (`[gain₁, gain₂]`).
    pub gains: [f64; 2],
    /// The refuting deviation when not certified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_deviation: Option<BestDeviation>,
}

/// True when `a` and `b` assign (almost) every user to the same provider.
fn profiles_equivalent(a: &UserProfile, b: &UserProfile, theta_max: f64, tol: f64) -> bool {
    let whole_market = |p: &UserProfile| -> Option<Provider> {
        if p.cutoff <= tol {
            Some(p.high())
        } else if p.cutoff >= theta_max - tol {
            Some(p.low)
        } else {
            None
        }
    };
    match (whole_market(a), whole_market(b)) {
        (Some(x), Some(y)) => x == y,
        _ => a.low == b.low && (a.cutoff - b.cutoff).abs() <= tol,
    }
}

/// Certify `(rho1, rho2, profile)` as an ε-equilibrium on the deviation grid:
/// neither provider's grid best response may improve its profit by more than
/// `epsilon`. `innovative[i] = false` restricts provider `i+1` to constant
/// deviations. Rejects profiles the posted prices cannot enforce.
pub fn epsilon_bne_verify(
    market: &Market,
    rho1: &PriceFunction,
    rho2: &PriceFunction,
    profile: &UserProfile,
    innovative: [bool; 2],
    epsilon: f64,
    grid: &DeviationGrid,
) -> Result<Certification> {
    grid.validate()?;
    if !(epsilon > 0.0) {
        return Err(ModelError::Domain(format!(
            "certification tolerance must be positive, got {epsilon}"
        )));
    }
    let hi = market.theta_max();
    let enforce_tol = 1e-6 * hi;
    match enforceable_profiles(rho1, rho2, hi) {
        EnforceableProfiles::TieFamily => {
            if !(-enforce_tol..=hi + enforce_tol).contains(&profile.cutoff) {
                return Err(ModelError::InvalidScenario(format!(
                    "tie profile cutoff {} lies outside the support [0, {hi}]",
                    profile.cutoff
                )));
            }
        }
        EnforceableProfiles::Unique(unique) => {
            if !profiles_equivalent(&unique, profile, hi, enforce_tol) {
                return Err(ModelError::InvalidScenario(format!(
                    "profile (cutoff {}, low provider {}) is not enforceable under the posted \
                     prices; they induce (cutoff {}, low provider {})",
                    profile.cutoff, profile.low, unique.cutoff, unique.low
                )));
            }
        }
    }

    let baseline = market.outcome((rho1, rho2), profile)?.profits;
    let mut gains = [0.0; 2];
    let mut best_deviation: Option<BestDeviation> = None;
    for p in Provider::both() {
        let rho_other = if p == Provider::One { rho2 } else { rho1 };
        let br = best_response(market, p, rho_other, grid, !innovative[p.index()])?;
        let gain = br.profit - baseline[p.index()];
        gains[p.index()] = gain;
        if gain > epsilon && best_deviation.as_ref().map_or(true, |b| gain > b.gain) {
            best_deviation = Some(BestDeviation {
                provider: p,
                rho: br.rho,
                gain,
                induced_profile: br.induced_profile,
            });
        }
    }
    Ok(Certification {
        certified: best_deviation.is_none(),
        epsilon,
        baseline_profits: baseline,
        gains,
        best_deviation,
    })
}

/// One evaluated constant response in a sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepPoint {
    /// The conservative provider's fixed price.
    pub p_f: f64,
    pub profit_1: f64,
    pub profit_2: f64,
    pub welfare: f64,
    /// Cutoff of the induced profile.
    pub cutoff: f64,
}

/// Evaluate every constant response in `p_f_samples` against the innovator's
/// posted price function: assignment, profits, and welfare per response.
pub fn response_sweep(
    market: &Market,
    innovator: Provider,
    rho_innovator: &PriceFunction,
    p_f_samples: &[f64],
) -> Result<Vec<SweepPoint>> {
    if p_f_samples.iter().any(|p| !p.is_finite()) {
        return Err(ModelError::Domain(
            "sweep samples must all be finite".into(),
        ));
    }
    let responder = innovator.other();
    let mut out = Vec::with_capacity(p_f_samples.len());
    for &p in p_f_samples {
        let rho_c = PriceFunction::constant(p);
        let (rho1, rho2) = if innovator == Provider::One {
            (rho_innovator, &rho_c)
        } else {
            (&rho_c, rho_innovator)
        };
        let profile = match enforceable_profiles(rho1, rho2, market.theta_max()) {
            EnforceableProfiles::Unique(profile) => profile,
            // Exact tie (only possible for a constant innovator price): credit
            // the responder with its best enforceable split.
            EnforceableProfiles::TieFamily => {
                deviator_optimal_tie_profit(market, responder, &rho_c)?.1
            }
        };
        let outcome = market.outcome((rho1, rho2), &profile)?;
        out.push(SweepPoint {
            p_f: p,
            profit_1: outcome.profits[0],
            profit_2: outcome.profits[1],
            welfare: outcome.welfare,
            cutoff: outcome.profile.cutoff,
        });
    }
    Ok(out)
}

/// A candidate strategy pair examined by [`one_innovative_scan`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanPair {
    pub rho_innovator: PriceFunction,
    /// The conservative provider's fixed price.
    pub response: f64,
    /// Certified (or least-refuted) profile for the pair.
    pub profile: UserProfile,
    /// Certification excess `max_i(best gain_i) − ε`; ≤ 0 when certified.
    pub excess: f64,
}

/// Verdict of the exhaustive one-innovative-regime scan.
#[derive(Clone, Debug, Serialize)]
pub struct OneInnovativeScan {
    pub innovator: Provider,
    pub epsilon: f64,
    /// Whether any grid pair is an ε-equilibrium.
    pub exists: bool,
    /// The best-certified pair: a witness when `exists`, otherwise the pair
    /// closest to certification.
    pub closest: ScanPair,
}

/// Profits of both providers when the innovator posts `(pf, pl)`, the rival
/// the constant `q`, and users split at the unique enforceable profile.
/// Returns the deviator-optimal tie values at an exact price tie.
fn scan_cell(
    market: &Market,
    innovator: Provider,
    pf: f64,
    pl: f64,
    q: f64,
) -> Result<([f64; 2], UserProfile)> {
    let rho_inn = PriceFunction::new(pf, pl);
    let rho_con = PriceFunction::constant(q);
    let (rho1, rho2) = if innovator == Provider::One {
        (&rho_inn, &rho_con)
    } else {
        (&rho_con, &rho_inn)
    };
    match enforceable_profiles(rho1, rho2, market.theta_max()) {
        EnforceableProfiles::Unique(profile) => {
            let outcome = market.outcome((rho1, rho2), &profile)?;
            Ok((outcome.profits, profile))
        }
        EnforceableProfiles::TieFamily => {
            // Each provider, *as a deviator*, could steer the tie to its own
            // best profile; report those upper envelopes.
            let mut profits = [0.0; 2];
            let mut profile = UserProfile::new(0.0, innovator);
            for p in Provider::both() {
                let (v, prof) = deviator_optimal_tie_profit(market, p, &rho_inn)?;
                profits[p.index()] = v;
                if p == innovator {
                    profile = prof;
                }
            }
            Ok((profits, profile))
        }
    }
}

/// Exhaustively decide whether any ε-equilibrium exists on the grid when
/// `innovator` may post any grid price function but the rival only constants.
///
/// Pass 1 tabulates, for every innovator strategy, the rival's best constant
/// reply, and for every constant reply, the innovator's best strategy. Pass 2
/// then certifies every pair against those envelopes; exact ties are checked
/// against every enforceable split on a cutoff grid. The slope axis always
/// contains the exact zero so constant-vs-constant ties are represented.
pub fn one_innovative_scan(
    market: &Market,
    innovator: Provider,
    epsilon: f64,
    grid: &DeviationGrid,
) -> Result<OneInnovativeScan> {
    grid.validate()?;
    if !(epsilon > 0.0) {
        return Err(ModelError::Domain(format!(
            "certification tolerance must be positive, got {epsilon}"
        )));
    }
    let hi = market.theta_max();
    let pfs = grid.p_f_values();
    let mut pls = grid.p_l_values();
    if !pls.contains(&0.0) {
        pls.push(0.0);
        pls.sort_by(f64::total_cmp);
    }
    let idx_inn = innovator.index();
    let idx_con = innovator.other().index();

    // Pass 1: deviation envelopes. best_con[cell]: the rival's best constant
    // reply to that innovator strategy; best_inn[j]: the innovator's best
    // strategy against that constant.
    let n_cells = pfs.len() * pls.len();
    let mut best_con = vec![f64::NEG_INFINITY; n_cells];
    let mut best_inn = vec![f64::NEG_INFINITY; pfs.len()];
    let mut cell = 0;
    for &pf in &pfs {
        for &pl in &pls {
            for (j, &q) in pfs.iter().enumerate() {
                let (profits, _) = scan_cell(market, innovator, pf, pl, q)?;
                if profits[idx_con] > best_con[cell] {
                    best_con[cell] = profits[idx_con];
                }
                if profits[idx_inn] > best_inn[j] {
                    best_inn[j] = profits[idx_inn];
                }
            }
            cell += 1;
        }
    }

    // Pass 2: certify each pair against the envelopes. A pair is an
    // ε-equilibrium when some enforceable profile leaves both providers
    // within ε of their envelope.
    let mut closest: Option<ScanPair> = None;
    let tie_cutoffs = linspace(0.0, hi, TIE_SAMPLES);
    let mut cell = 0;
    for &pf in &pfs {
        for &pl in &pls {
            for (j, &q) in pfs.iter().enumerate() {
                let (profits, profile) = scan_cell(market, innovator, pf, pl, q)?;
                let tie = pl == 0.0 && pf == q;
                let (excess, profile) = if tie {
                    // Search the whole tie family for the most defensible
                    // split.
                    let rho = PriceFunction::new(pf, pl);
                    let mut best_excess = f64::INFINITY;
                    let mut best_profile = profile;
                    for low in Provider::both() {
                        for &t in &tie_cutoffs {
                            let p = UserProfile::new(t, low);
                            let pr = market.tie_outcome(&rho, &p)?.profits;
                            let e = (best_inn[j] - pr[idx_inn])
                                .max(best_con[cell] - pr[idx_con])
                                - epsilon;
                            if e < best_excess {
                                best_excess = e;
                                best_profile = p;
                            }
                        }
                    }
                    (best_excess, best_profile)
                } else {
                    (
                        (best_inn[j] - profits[idx_inn]).max(best_con[cell] - profits[idx_con])
                            - epsilon,
                        profile,
                    )
                };
                if closest.as_ref().map_or(true, |c| excess < c.excess) {
                    closest = Some(ScanPair {
                        rho_innovator: PriceFunction::new(pf, pl),
                        response: q,
                        profile,
                        excess,
                    });
                }
            }
            cell += 1;
        }
    }

    let closest = closest.expect("validated grids are nonempty");
    Ok(OneInnovativeScan {
        innovator,
        epsilon,
        exists: closest.excess <= ORACLE_TOL,
        closest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn reference_market() -> Market {
        Scenario::reference_example().market
    }

    #[test]
    fn default_grid_scales_with_the_market() {
        let market = reference_market();
        let grid = DeviationGrid::default_for(&market, 201).unwrap();
        assert!((grid.p_f_range.0 + 0.131_25).abs() < 1e-12);
        assert!((grid.p_f_range.1 - 0.393_75).abs() < 1e-12);
        assert!((grid.p_l_range.0 + 0.2625).abs() < 1e-12);
        assert!((grid.p_l_range.1 - 0.7875).abs() < 1e-12);
        assert!(DeviationGrid::new((0.0, 1.0), (0.0, 1.0), 1).is_err());
        assert!(DeviationGrid::new((1.0, 0.0), (0.0, 1.0), 10).is_err());
    }

    #[test]
    fn best_constant_response_matches_the_interior_optimum() {
        // Against the role-swapped positive-profit strategy (0.2506, 0.6188),
        // the rival's profit (1−t)(ρ(t) − c₁(t,1)) peaks at p ≈ 0.3941.
        let market = reference_market();
        let rho2 = PriceFunction::new(0.2506, 0.6188);
        let br = best_constant_response_refined(&market, Provider::One, &rho2, (0.2, 0.6), 201)
            .unwrap();
        assert!((br.rho.fixed - 0.394_07).abs() < 2e-4, "p_f {}", br.rho.fixed);
        assert_eq!(br.rho.slope, 0.0);
        assert_eq!(br.induced_profile.low, Provider::Two);
        assert!((br.induced_profile.cutoff - 0.2319).abs() < 1e-3);
        assert!(br.profit > 0.0);
    }

    #[test]
    fn best_constant_response_to_the_positive_profit_strategy() {
        // Against (0.215, 0.5309) the responder's profit peaks where
        // 0.1875t² − 0.9368t + 0.4534 = 0, i.e. a cutoff near 0.543.
        let market = reference_market();
        let rho1 = PriceFunction::new(0.215, 0.5309);
        let br = best_constant_response_refined(&market, Provider::Two, &rho1, (0.3, 0.7), 201)
            .unwrap();
        assert!((br.induced_profile.cutoff - 0.543_002).abs() < 1e-4);
        assert!((br.rho.fixed - 0.503_28).abs() < 1e-3);
        assert!((br.profit - 0.070_595_3).abs() < 2e-5);
    }

    #[test]
    fn best_response_exits_when_the_rival_prices_below_cost() {
        let market = reference_market();
        let grid = DeviationGrid::default_for(&market, 41).unwrap();
        let br = best_response(
            &market,
            Provider::One,
            &PriceFunction::constant(-1.0),
            &grid,
            false,
        )
        .unwrap();
        assert_eq!(br.profit, 0.0);
    }

    #[test]
    fn certification_accepts_the_reference_equilibrium() {
        let market = reference_market();
        let rho = PriceFunction::new(0.0, 0.4676);
        let profile = UserProfile::new(0.595, Provider::One);
        let grid = DeviationGrid::default_for(&market, 201).unwrap();
        let cert =
            epsilon_bne_verify(&market, &rho, &rho, &profile, [true, true], 1e-4, &grid).unwrap();
        assert!(
            cert.certified,
            "expected certification, best deviation {:?} with gains {:?}",
            cert.best_deviation, cert.gains
        );
        assert!(cert.best_deviation.is_none());
    }

    #[test]
    fn certification_refutes_the_constant_tie_when_one_provider_innovates() {
        let market = reference_market();
        let rho = PriceFunction::constant(0.2625);
        let profile = UserProfile::new(1.0, Provider::One);
        let grid = DeviationGrid::default_for(&market, 201).unwrap();
        let cert =
            epsilon_bne_verify(&market, &rho, &rho, &profile, [true, false], 1e-4, &grid).unwrap();
        assert!(!cert.certified);
        let dev = cert.best_deviation.unwrap();
        assert_eq!(dev.provider, Provider::One);
        assert!(dev.gain > 1e-3, "gain {}", dev.gain);
        assert!(dev.rho.slope > 0.0, "improving deviation uses a slope");
    }

    #[test]
    fn certification_is_vacuous_at_infinite_tolerance() {
        let market = reference_market();
        let rho = PriceFunction::constant(0.2625);
        let profile = UserProfile::new(1.0, Provider::One);
        let grid = DeviationGrid::default_for(&market, 21).unwrap();
        let cert = epsilon_bne_verify(
            &market,
            &rho,
            &rho,
            &profile,
            [true, true],
            f64::INFINITY,
            &grid,
        )
        .unwrap();
        assert!(cert.certified);
    }

    #[test]
    fn certification_rejects_unenforceable_profiles() {
        let market = reference_market();
        let rho1 = PriceFunction::new(0.0, 0.4676);
        let rho2 = PriceFunction::new(0.1, 0.4676);
        let grid = DeviationGrid::default_for(&market, 21).unwrap();
        let err = epsilon_bne_verify(
            &market,
            &rho1,
            &rho2,
            &UserProfile::new(0.5, Provider::One),
            [true, true],
            1e-4,
            &grid,
        )
        .unwrap_err();
        assert!(err.is_validation(), "got {err:?}");
    }

    #[test]
    fn sweep_tracks_the_responder_optimum_and_welfare() {
        let market = reference_market();
        let rho1 = PriceFunction::new(0.215, 0.5309);
        let samples = linspace(0.0, rho1.price_at(1.0), 301);
        let series = response_sweep(&market, Provider::One, &rho1, &samples).unwrap();
        assert_eq!(series.len(), 301);
        let best = series
            .iter()
            .max_by(|a, b| a.profit_2.total_cmp(&b.profit_2))
            .unwrap();
        assert!((best.profit_2 - 0.070_595).abs() < 2e-3);
        assert!((best.cutoff - 0.543).abs() < 5e-3);
        assert!((best.welfare + 0.206_2).abs() < 2e-3);
        // Whole-market undercut branch: a response below ρ1(0) takes all
        // users at the constant price.
        let low = &series[0];
        assert!(low.cutoff.abs() < 1e-12);
        assert!((low.profit_1 - 0.0).abs() < 1e-12);
        assert!((low.profit_2 - (0.0 - 0.2625)).abs() < 1e-9);
    }

    #[test]
    fn deviation_profit_never_beats_the_matching_tie_bound() {
        // The deviator never gains more than its optimal enforceable profile
        // at matched prices.
        let market = reference_market();
        let rho2 = PriceFunction::new(0.2506, 0.6188);
        let (bound, _) = deviator_optimal_tie_profit(&market, Provider::One, &rho2).unwrap();
        for pf in [-0.1, 0.0, 0.2, 0.39] {
            for pl in [-0.2, 0.0, 0.4676, 0.7] {
                let rho1 = PriceFunction::new(pf, pl);
                let (profit, _) =
                    deviation_profit(&market, Provider::One, &rho1, &rho2).unwrap();
                assert!(
                    profit <= bound.max(0.0) + ORACLE_TOL,
                    "profit {profit} at ({pf}, {pl}) exceeds tie bound {bound}"
                );
            }
        }
    }

    #[test]
    fn scan_refutes_every_one_innovative_pair_on_the_reference_market() {
        let market = reference_market();
        let grid = DeviationGrid::default_for(&market, 61).unwrap();
        let scan = one_innovative_scan(&market, Provider::One, 1e-4, &grid).unwrap();
        assert!(!scan.exists, "closest pair {:?}", scan.closest);
        assert!(scan.closest.excess > 0.0);
    }
}
