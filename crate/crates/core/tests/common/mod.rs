//! Shared machinery for the integration suites: a seeded generator over the
//! supported scenario families and the randomized invariants that both the
//! property suite and the acceptance gate execute.

use duoprice::market::{enforceable_profiles, EnforceableProfiles, Market, PriceFunction};
use duoprice::numeric::central_diff;
use duoprice::{
    deviator_optimal_tie_profit, find_all_bne, CostPolynomial, Provider, Settings,
    TypeDistribution,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform or piecewise-linear type distribution with randomized support.
pub fn random_distribution(rng: &mut ChaCha8Rng) -> TypeDistribution {
    if rng.gen_bool(0.5) {
        let theta_max = rng.gen_range(0.5..2.0);
        TypeDistribution::uniform(theta_max).expect("positive support")
    } else {
        let theta_max: f64 = rng.gen_range(0.5..2.0);
        let interior = rng.gen_range(0..=2usize);
        let mut thetas = vec![0.0];
        for _ in 0..interior {
            thetas.push(rng.gen_range(0.05 * theta_max..0.95 * theta_max));
        }
        thetas.push(theta_max);
        thetas.sort_by(f64::total_cmp);
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * theta_max);
        if *thetas.last().unwrap() < theta_max {
            thetas.push(theta_max);
        }
        let weights: Vec<f64> = thetas.iter().map(|_| rng.gen_range(0.1..2.0)).collect();
        // Normalize to unit mass (trapezoid areas between knots).
        let mut mass = 0.0;
        for i in 1..thetas.len() {
            mass += 0.5 * (weights[i - 1] + weights[i]) * (thetas[i] - thetas[i - 1]);
        }
        let knots: Vec<(f64, f64)> = thetas
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| (t, w / mass))
            .collect();
        TypeDistribution::piecewise_linear(knots).expect("normalized knots are valid")
    }
}

/// Quadratic cost polynomial, increasing on the support by construction.
pub fn random_cost(
    rng: &mut ChaCha8Rng,
    provider: Provider,
    dist: &TypeDistribution,
) -> CostPolynomial {
    let c0 = rng.gen_range(0.01..0.5);
    let c1 = rng.gen_range(0.0..0.5);
    let c2 = rng.gen_range(0.05..1.0);
    CostPolynomial::new(provider, vec![c0, c1, c2], dist)
        .expect("increasing quadratics are valid costs")
}

/// Randomized market; `symmetric` forces identical cost functions.
pub fn random_market(rng: &mut ChaCha8Rng, symmetric: bool) -> Market {
    let dist = random_distribution(rng);
    let c1 = random_cost(rng, Provider::One, &dist);
    let c2 = if symmetric {
        CostPolynomial::new(Provider::Two, c1.coeffs.clone(), &dist)
            .expect("mirrored cost is valid")
    } else {
        random_cost(rng, Provider::Two, &dist)
    };
    Market::new(dist, [c1, c2]).expect("generated markets are valid")
}

/// Price function with market-scaled fixed part and slope (either sign).
pub fn random_price(rng: &mut ChaCha8Rng, market: &Market) -> PriceFunction {
    let scale = market.max_whole_cost().expect("valid market");
    let hi = market.theta_max();
    PriceFunction::new(
        rng.gen_range(-0.5 * scale..1.5 * scale),
        rng.gen_range(-scale / hi..3.0 * scale / hi),
    )
}

/// Outcome of one randomized suite: scenario count and failure descriptions.
pub struct SuiteOutcome {
    pub scenarios: usize,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    // Used by the harnessed property target; the acceptance binary formats
    // failures itself.
    #[allow(dead_code)]
    pub fn assert_clean(&self, name: &str) {
        assert!(
            self.failures.is_empty(),
            "{name}: {} of {} scenarios failed:\n{}",
            self.failures.len(),
            self.scenarios,
            self.failures.join("\n")
        );
    }
}

/// Cheap per-scenario invariants: price-mass additivity, welfare sign and
/// price-independence, closed-form derivatives against central differences,
/// and the best-response tie bound.
pub fn run_cheap_invariants(seed: u64, scenarios: usize) -> SuiteOutcome {
    let mut rng = rng(seed);
    let mut failures = Vec::new();
    for case in 0..scenarios {
        let symmetric = rng.gen_bool(0.25);
        let market = random_market(&mut rng, symmetric);
        let mut fail = |what: String| failures.push(format!("case {case}: {what}"));

        let hi = market.theta_max();
        let dist = &market.dist;

        // Price-mass additivity over a random split.
        {
            let rho = random_price(&mut rng, &market);
            let mut cuts = [
                rng.gen_range(0.0..hi),
                rng.gen_range(0.0..hi),
                rng.gen_range(0.0..hi),
            ];
            cuts.sort_by(f64::total_cmp);
            let (a, m, b) = (cuts[0], cuts[1], cuts[2]);
            let whole = dist.price_mass(&rho, a, b).unwrap();
            let parts = dist.price_mass(&rho, a, m).unwrap() + dist.price_mass(&rho, m, b).unwrap();
            if (whole - parts).abs() > 1e-9 * (1.0 + whole.abs()) {
                fail(format!(
                    "price-mass additivity broke: [{a},{b}] gives {whole} vs {parts}"
                ));
            }
        }

        // Welfare: nonpositive, and identical under different posted prices.
        {
            let rho_a = random_price(&mut rng, &market);
            let rho_b = random_price(&mut rng, &market);
            let profile = duoprice::UserProfile::new(
                rng.gen_range(0.0..hi),
                if rng.gen_bool(0.5) {
                    Provider::One
                } else {
                    Provider::Two
                },
            );
            let w1 = market.outcome((&rho_a, &rho_b), &profile).unwrap().welfare;
            let w2 = market.outcome((&rho_b, &rho_a), &profile).unwrap().welfare;
            if w1 > 1e-12 {
                fail(format!("welfare {w1} is positive"));
            }
            if (w1 - w2).abs() > 1e-12 {
                fail(format!("welfare depends on prices: {w1} vs {w2}"));
            }
        }

        // Closed-form derivatives vs central differences.
        {
            let g = market.cost(Provider::One);
            let x = rng.gen_range(0.0..hi);
            let h = 1e-6 * hi.max(1.0);
            let closed = g.derivative(x);
            let numeric = central_diff(|y| g.eval(y), x, h);
            if (closed - numeric).abs() > 1e-5 * closed.abs().max(1e-3) {
                fail(format!(
                    "polynomial derivative mismatch at {x}: {closed} vs {numeric}"
                ));
            }
            // Boundary-cost derivatives at fixed interior fractions (away
            // from density knots with overwhelming probability).
            for frac in [0.31, 0.57, 0.83] {
                let t = frac * hi;
                let up_closed = g.upper_cost_derivative(dist, t).unwrap();
                let up_numeric =
                    central_diff(|y| g.cost(dist, 0.0, y).unwrap(), t, h);
                if (up_closed - up_numeric).abs() > 1e-5 * up_closed.abs().max(1e-3) {
                    fail(format!(
                        "low-segment cost derivative mismatch at {t}: {up_closed} vs {up_numeric}"
                    ));
                }
                let lo_closed = g.lower_cost_derivative(dist, t).unwrap();
                let lo_numeric = central_diff(|y| g.cost(dist, y, hi).unwrap(), t, h);
                if (lo_closed - lo_numeric).abs() > 1e-5 * lo_closed.abs().max(1e-3) {
                    fail(format!(
                        "high-segment cost derivative mismatch at {t}: {lo_closed} vs {lo_numeric}"
                    ));
                }
            }
        }

        // Best-response tie bound: a deviator at distinct prices never beats
        // its own best enforceable profile at matched prices.
        {
            let rho_other = random_price(&mut rng, &market);
            for deviator in Provider::both() {
                let rho_self = random_price(&mut rng, &market);
                let (rho1, rho2) = if deviator == Provider::One {
                    (&rho_self, &rho_other)
                } else {
                    (&rho_other, &rho_self)
                };
                match enforceable_profiles(rho1, rho2, hi) {
                    EnforceableProfiles::Unique(profile) => {
                        let profit =
                            market.outcome((rho1, rho2), &profile).unwrap().profits
                                [deviator.index()];
                        let (tie, _) =
                            deviator_optimal_tie_profit(&market, deviator, &rho_other).unwrap();
                        if profit > tie.max(0.0) + 1e-9 {
                            fail(format!(
                                "deviation profit {profit} beats the tie bound {tie} \
                                 (deviator {deviator}, rho_self ({}, {}), rho_other ({}, {}))",
                                rho_self.fixed, rho_self.slope, rho_other.fixed, rho_other.slope
                            ));
                        }
                    }
                    EnforceableProfiles::TieFamily => {}
                }
            }
        }
    }
    SuiteOutcome {
        scenarios,
        failures,
    }
}

/// Equilibrium invariants on randomized markets (half of them symmetric):
/// the welfare floor at every verified family, and — for symmetric markets —
/// equal profits, plus zero profits whenever the shared cost is split-convex.
pub fn run_bne_invariants(seed: u64, scenarios: usize) -> SuiteOutcome {
    let mut rng = rng(seed);
    let mut failures = Vec::new();
    let mut settings = Settings::default();
    settings.grid_step = 5e-3;
    settings.segment_refine = 1e-4;
    for case in 0..scenarios {
        let symmetric = case % 2 == 0;
        let market = random_market(&mut rng, symmetric);
        let hi = market.theta_max();
        let families = match find_all_bne(&market, &settings) {
            Ok(f) => f,
            Err(e) => {
                failures.push(format!("case {case}: solver error: {e}"));
                continue;
            }
        };
        let floor = -Provider::both()
            .into_iter()
            .map(|p| {
                market
                    .cost(p)
                    .mass_weighted_cost(&market.dist, 0.0, hi)
                    .unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        for family in &families {
            if family.welfare < floor - 1e-9 {
                failures.push(format!(
                    "case {case}: welfare {} below the floor {floor} at cutoff {}",
                    family.welfare, family.candidate.cutoff
                ));
            }
            if symmetric {
                let [p1, p2] = family.profits;
                if (p1 - p2).abs() > 1e-6 {
                    failures.push(format!(
                        "case {case}: symmetric market with unequal profits {p1} vs {p2}"
                    ));
                }
                let convex = market
                    .cost(Provider::One)
                    .split_convexity(&market.dist, settings.scaled_step(hi))
                    .unwrap();
                if convex.holds() && (p1.abs() > 1e-6 || p2.abs() > 1e-6) {
                    failures.push(format!(
                        "case {case}: split-convex symmetric market with nonzero profits \
                         {p1}, {p2}"
                    ));
                }
            }
        }
    }
    SuiteOutcome {
        scenarios,
        failures,
    }
}
