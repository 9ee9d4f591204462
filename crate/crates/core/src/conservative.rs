//! Equilibria when both providers are restricted to constant prices.
//!
//! With variance-independent prices this is classic price competition: the
//! cheaper provider (by whole-market per-user cost) serves everyone, and any
//! shared price between the two whole-market costs is an equilibrium. The
//! canonical selection prices at the loser's cost — the unique point where
//! the loser is indifferent to undercutting.

use crate::market::{Market, Provider};
use crate::Result;
use serde::{Deserialize, Serialize};

/// The interval of constant-price equilibria of a market.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantBneSet {
    /// Lowest equilibrium price: the winner's whole-market cost.
    pub price_lo: f64,
    /// Highest equilibrium price: the loser's whole-market cost.
    pub price_hi: f64,
    /// Provider serving the whole market (ties resolve to provider 1).
    pub winner: Provider,
    /// Canonical equilibrium price (= `price_hi`): the unique point where the
    /// loser is indifferent to undercutting, i.e. the only non-knife-edge
    /// selection.
    pub canonical_price: f64,
    /// Profits at the canonical price, indexed by provider.
    pub canonical_profits: [f64; 2],
    /// Welfare (price-invariant across the whole set).
    pub welfare: f64,
    /// With equal whole-market costs both serving orientations are equilibria.
    pub symmetric_tie: bool,
}

impl ConstantBneSet {
    /// Winner's profit at an arbitrary common equilibrium price.
    pub fn winner_profit_at(&self, price: f64) -> f64 {
        price - self.price_lo
    }

    /// Canonical profit of one provider.
    pub fn profit_of(&self, p: Provider) -> f64 {
        self.canonical_profits[p.index()]
    }
}

/// Compute the constant-price equilibrium set of `market`.
pub fn constant_bne_set(market: &Market) -> Result<ConstantBneSet> {
    let hi = market.theta_max();
    let c1 = market.cost(Provider::One).cost(&market.dist, 0.0, hi)?;
    let c2 = market.cost(Provider::Two).cost(&market.dist, 0.0, hi)?;
    let winner = if c1 <= c2 { Provider::One } else { Provider::Two };
    let (c_win, c_lose) = if winner == Provider::One {
        (c1, c2)
    } else {
        (c2, c1)
    };
    let mut canonical_profits = [0.0; 2];
    canonical_profits[winner.index()] = c_lose - c_win;
    Ok(ConstantBneSet {
        price_lo: c_win,
        price_hi: c_lose,
        winner,
        canonical_price: c_lose,
        canonical_profits,
        welfare: -c_win,
        symmetric_tie: c1 == c2,
    })
}

/// Welfare of every constant-price equilibrium (the winner serves everyone).
pub fn constant_bne_welfare(market: &Market) -> Result<f64> {
    Ok(constant_bne_set(market)?.welfare)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostPolynomial;
    use crate::distribution::TypeDistribution;

    #[test]
    fn symmetric_whole_market_costs_tie() {
        // Reference market: both whole-market costs equal 0.2625.
        let d = TypeDistribution::uniform(1.0).unwrap();
        let g1 = CostPolynomial::new(Provider::One, vec![0.0125, 0.0, 1.0], &d).unwrap();
        let g2 = CostPolynomial::new(Provider::Two, vec![0.2, 0.0, 0.25], &d).unwrap();
        let m = Market::new(d, [g1, g2]).unwrap();
        let set = constant_bne_set(&m).unwrap();
        assert_eq!(set.winner, Provider::One);
        assert!((set.price_lo - 0.2625).abs() < 1e-15);
        assert!((set.price_hi - 0.2625).abs() < 1e-15);
        assert_eq!(set.canonical_profits, [0.0, 0.0]);
        assert!((set.welfare - -0.2625).abs() < 1e-15);
        assert!(set.symmetric_tie);
    }

    #[test]
    fn asymmetric_costs_pick_the_cheaper_provider() {
        let d = TypeDistribution::uniform(1.0).unwrap();
        // c₁(0,1) = g₁(0.5) = 0.05 + 0.25·0.25 = 0.1125; c₂(0,1) = 0.2 + 0.0625 = 0.2625
        let g1 = CostPolynomial::new(Provider::One, vec![0.05, 0.0, 0.25], &d).unwrap();
        let g2 = CostPolynomial::new(Provider::Two, vec![0.2, 0.0, 0.25], &d).unwrap();
        let m = Market::new(d, [g1, g2]).unwrap();
        let set = constant_bne_set(&m).unwrap();
        assert_eq!(set.winner, Provider::One);
        assert!((set.price_lo - 0.1125).abs() < 1e-15);
        assert!((set.canonical_price - 0.2625).abs() < 1e-15);
        assert!((set.canonical_profits[0] - 0.15).abs() < 1e-15);
        assert_eq!(set.canonical_profits[1], 0.0);
        assert!((set.welfare - -0.1125).abs() < 1e-15);
        assert!(!set.symmetric_tie);
        assert!((set.winner_profit_at(0.2) - 0.0875).abs() < 1e-15);
        // Flipped costs flip the winner.
        let d = TypeDistribution::uniform(1.0).unwrap();
        let g1 = CostPolynomial::new(Provider::One, vec![0.2, 0.0, 0.25], &d).unwrap();
        let g2 = CostPolynomial::new(Provider::Two, vec![0.05, 0.0, 0.25], &d).unwrap();
        let m = Market::new(d, [g1, g2]).unwrap();
        assert_eq!(constant_bne_set(&m).unwrap().winner, Provider::Two);
    }
}
