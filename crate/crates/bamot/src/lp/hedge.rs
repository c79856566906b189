//! High-level pricing: from bid/ask marginals and a payoff to a price bound
//! with an explicit hedge portfolio and an optimal pricing measure.
//!
//! The dual side trades cash, forwards, and calls at the quoted strikes and
//! must dominate (superhedge) or be dominated by (subhedge) the payoff; the
//! superhedge pays the ask for longs and receives the bid for shorts, while
//! the subhedge values its portfolio at the opposite sides because the lower
//! bound is realized by selling it. The primal side searches measures on a
//! support grid repricing every quote inside its band, with a martingale
//! constraint when two maturities are involved. Both problems are posed on
//! the same grids, so for piecewise-linear payoffs the reported gap is pure
//! solver tolerance.

use super::build::{
    build_dual_single, build_dual_two, build_primal_single, build_primal_two, DualSpecSingle,
    DualSpecTwo, PrimalSpecSingle, Side, StrikeQuote,
};
use super::problem::{LpSolution, LpStatus};
use super::solve;
use crate::error::{Error, Result};
use crate::measures::{convex_order_leq, Grid, Marginal};
use crate::payoff::Payoff;
use serde::{Deserialize, Serialize};

/// A single-maturity market: spot/forward and the bid and ask marginals
/// backing the call quotes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketSingle {
    pub x0: f64,
    pub bid: Marginal,
    pub ask: Marginal,
}

impl MarketSingle {
    /// Checks the standing assumptions: both marginals centered at `x0` and
    /// the bid marginal below the ask in convex order.
    pub fn validate(&self) -> Result<()> {
        check_barycenter(&self.bid, self.x0)?;
        check_barycenter(&self.ask, self.x0)?;
        check_convex_order(&self.bid, &self.ask, 1, 1)
    }
}

/// A two-maturity market with bid and ask marginals at each date.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketTwo {
    pub x0: f64,
    pub bid1: Marginal,
    pub ask1: Marginal,
    pub bid2: Marginal,
    pub ask2: Marginal,
}

impl MarketTwo {
    /// Per-maturity bid-ask order plus the cross-maturity condition making a
    /// consistent martingale possible: the first bid below the second ask.
    pub fn validate(&self) -> Result<()> {
        for m in [&self.bid1, &self.ask1, &self.bid2, &self.ask2] {
            check_barycenter(m, self.x0)?;
        }
        check_convex_order(&self.bid1, &self.ask1, 1, 1)?;
        check_convex_order(&self.bid2, &self.ask2, 2, 2)?;
        check_convex_order(&self.bid1, &self.ask2, 1, 2)
    }
}

fn check_barycenter(m: &Marginal, x0: f64) -> Result<()> {
    let b = m.barycenter();
    if (b - x0).abs() > 1e-8 * x0.max(1.0) {
        return Err(Error::ForwardMismatch(b, x0));
    }
    Ok(())
}

fn check_convex_order(lo: &Marginal, hi: &Marginal, i: usize, j: usize) -> Result<()> {
    let tol = 1e-9 * lo.barycenter().max(1.0);
    let check = convex_order_leq(lo, hi, tol);
    if !check.ordered {
        let k = check.witness.unwrap_or(0.0);
        return Err(Error::ConvexOrderViolation {
            strike: k,
            i,
            j,
            bid: lo.call_price(k),
            ask: hi.call_price(k),
        });
    }
    Ok(())
}

/// How the hedging strikes are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrikeMode {
    /// Use exactly these strikes.
    Quoted(Vec<f64>),
    /// Place this many strikes on ask-marginal quantiles (payoff kinks are
    /// always added).
    Dense(usize),
}

/// Discretization controls for the pricing LPs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HedgeConfig {
    /// Quantile grid points per maturity (support and constraint grid).
    pub grid_points: usize,
    /// Quantile mass left out on each side of the grid.
    pub tail_quantile: f64,
    /// Relative extension of the grid beyond its last quantile point.
    pub tail_extension: f64,
    /// Extra half-width added to every quote band, relative to `x0`. Zero by
    /// default; useful to regularize markets quoted without any spread.
    pub band_epsilon: f64,
    pub strikes: StrikeMode,
}

impl Default for HedgeConfig {
    fn default() -> Self {
        Self {
            grid_points: 400,
            tail_quantile: 1e-6,
            tail_extension: 0.3,
            band_epsilon: 0.0,
            strikes: StrikeMode::Dense(25),
        }
    }
}

/// One traded leg of a hedge portfolio. `price` is the side of the quote the
/// leg is valued at: ask for superhedge longs and subhedge shorts, bid for
/// superhedge shorts and subhedge longs.
#[derive(Debug, Clone, Serialize)]
pub struct HedgeLeg {
    pub maturity: usize,
    pub strike: f64,
    pub weight: f64,
    pub price: f64,
}

/// A static-plus-forward hedge: cash, a forward position per maturity, call
/// legs, and (two maturities) a delta adjustment per first-maturity level.
#[derive(Debug, Clone, Serialize)]
pub struct HedgePortfolio {
    pub cash: f64,
    pub forwards: Vec<f64>,
    pub legs: Vec<HedgeLeg>,
    /// Pairs (x1 level, delta) for the self-financing rebalancing at the
    /// first maturity; empty in the single-maturity problem.
    pub deltas: Vec<(f64, f64)>,
    /// Portfolio value at the quotes: cash + forwards at x0 + long legs minus
    /// short legs, each at its `price`.
    pub cost: f64,
}

impl HedgePortfolio {
    /// Terminal value in the single-maturity problem.
    pub fn value_single(&self, x: f64) -> f64 {
        let mut v = self.cash + self.forwards[0] * x;
        for leg in &self.legs {
            v += leg.weight * (x - leg.strike).max(0.0);
        }
        v
    }

    /// Terminal value in the two-maturity problem; the delta is looked up at
    /// the nearest tabulated first-maturity level.
    pub fn value_two(&self, x1: f64, x2: f64) -> f64 {
        let mut v = self.cash + self.forwards[0] * x1 + self.forwards[1] * x2;
        for leg in &self.legs {
            let x = if leg.maturity == 1 { x1 } else { x2 };
            v += leg.weight * (x - leg.strike).max(0.0);
        }
        if !self.deltas.is_empty() {
            let mut best = self.deltas[0];
            for &(lvl, d) in &self.deltas {
                if (lvl - x1).abs() < (best.0 - x1).abs() {
                    best = (lvl, d);
                }
            }
            v += best.1 * (x2 - x1);
        }
        v
    }
}

/// One support point of the optimal pricing measure; `x` has one entry per
/// maturity.
#[derive(Debug, Clone, Serialize)]
pub struct PricingAtom {
    pub x: Vec<f64>,
    pub weight: f64,
}

/// A robust price bound: the LP values from both sides, the hedge portfolio
/// realizing the dual value, and the extremal measure realizing the primal.
#[derive(Debug, Clone, Serialize)]
pub struct PriceBound {
    pub side: Side,
    /// Best model price over grid measures consistent with the quotes.
    pub primal_value: f64,
    /// Cost of the optimal hedge portfolio.
    pub dual_value: f64,
    /// dual - primal for superhedges, primal - dual for subhedges; up to
    /// solver tolerance this is nonnegative.
    pub gap: f64,
    /// Worst signed slack of the hedge against the payoff on an audit grid;
    /// nonnegative means the hedge is valid pointwise.
    pub audit_margin: f64,
    pub portfolio: HedgePortfolio,
    pub measure: Vec<PricingAtom>,
}

fn sorted_dedup(mut pts: Vec<f64>, scale: f64) -> Vec<f64> {
    pts.retain(|x| x.is_finite() && *x >= 0.0);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale);
    pts
}

fn hedge_strikes(ask: &Marginal, payoff_kinks: &[f64], cfg: &HedgeConfig, x0: f64) -> Vec<f64> {
    let mut ks = match &cfg.strikes {
        StrikeMode::Quoted(v) => v.clone(),
        StrikeMode::Dense(n) => {
            let n = (*n).max(2);
            (1..=n)
                .map(|i| ask.quantile(i as f64 / (n + 1) as f64))
                .collect()
        }
    };
    ks.extend_from_slice(payoff_kinks);
    ks.retain(|k| *k > 0.0);
    sorted_dedup(ks, x0.max(1.0))
}

fn pricing_grid(
    ask: &Marginal,
    strikes: &[f64],
    payoff_kinks: &[f64],
    cfg: &HedgeConfig,
    x0: f64,
) -> Result<Vec<f64>> {
    let grid = Grid::quantile(ask, cfg.tail_quantile, 1.0 - cfg.tail_quantile, cfg.grid_points)?;
    let mut pts = grid.points().to_vec();
    let hi = pts.last().copied().unwrap_or(x0) * (1.0 + cfg.tail_extension);
    pts.push(0.0);
    pts.push(x0);
    pts.push(hi);
    pts.extend_from_slice(strikes);
    pts.extend_from_slice(payoff_kinks);
    let pts = sorted_dedup(pts, x0.max(1.0));
    if pts.len() < 3 {
        return Err(Error::Lp("pricing grid degenerated to fewer than 3 points".into()));
    }
    Ok(pts)
}

fn band_quotes(
    bid: &Marginal,
    ask: &Marginal,
    strikes: &[f64],
    eps: f64,
    x0: f64,
) -> Vec<StrikeQuote> {
    strikes
        .iter()
        .map(|&k| {
            let lo = (bid.call_price(k) - eps * x0).max(0.0);
            let hi = ask.call_price(k) + eps * x0;
            StrikeQuote { strike: k, bid: lo, ask: hi }
        })
        .collect()
}

fn expect_optimal(sol: &LpSolution, what: &str) -> Result<()> {
    match sol.status {
        LpStatus::Optimal => Ok(()),
        LpStatus::Infeasible => Err(Error::Infeasible(format!(
            "{what}: no arrangement satisfies the quote bands"
        ))),
        LpStatus::Unbounded => Err(Error::Infeasible(format!(
            "{what}: unbounded, the quotes admit an arbitrage on the grid"
        ))),
        LpStatus::IterationLimit => Err(Error::Lp(format!("{what}: iteration limit reached"))),
    }
}

/// Robust price bound for a single-maturity payoff.
pub fn price_single(
    market: &MarketSingle,
    payoff: &Payoff,
    side: Side,
    cfg: &HedgeConfig,
) -> Result<PriceBound> {
    if payoff.two_maturity() {
        return Err(Error::Parse(
            "payoff references two maturities; price it against a two-maturity market".into(),
        ));
    }
    market.validate()?;
    let x0 = market.x0;
    let kinks = payoff.kinks();
    let strikes = hedge_strikes(&market.ask, &kinks, cfg, x0);
    let grid = pricing_grid(&market.ask, &strikes, &kinks, cfg, x0)?;
    let quotes = band_quotes(&market.bid, &market.ask, &strikes, cfg.band_epsilon, x0);
    let h: Vec<f64> = grid.iter().map(|&y| payoff.eval(y)).collect();

    let dual_spec = DualSpecSingle {
        x0,
        quotes: quotes.clone(),
        grid: grid.clone(),
        h: h.clone(),
        terminal_slope: payoff.terminal_slope(),
    };
    let (dual_lp, layout) = build_dual_single(&dual_spec, side)?;
    let dual = solve(&dual_lp)?;
    expect_optimal(&dual, "hedging dual")?;

    let primal_spec = PrimalSpecSingle { x0, quotes: quotes.clone(), grid: grid.clone(), h };
    let primal = solve(&build_primal_single(&primal_spec, side)?)?;
    expect_optimal(&primal, "pricing primal")?;

    let (long_of, short_of): (fn(&StrikeQuote) -> f64, fn(&StrikeQuote) -> f64) = match side {
        Side::Super => (|q| q.ask, |q| q.bid),
        Side::Sub => (|q| q.bid, |q| q.ask),
    };
    let mut legs = Vec::new();
    for (i, q) in quotes.iter().enumerate() {
        let long = dual.x[layout.call_long.start + i];
        let short = dual.x[layout.call_short.start + i];
        if long.abs() > 1e-12 {
            legs.push(HedgeLeg { maturity: 1, strike: q.strike, weight: long, price: long_of(q) });
        }
        if short.abs() > 1e-12 {
            legs.push(HedgeLeg {
                maturity: 1,
                strike: q.strike,
                weight: -short,
                price: short_of(q),
            });
        }
    }
    let portfolio = HedgePortfolio {
        cash: dual.x[layout.a],
        forwards: vec![dual.x[layout.b]],
        legs,
        deltas: Vec::new(),
        cost: dual.value,
    };

    // Audit on a 10x refined grid: between constraint points the hedge is
    // piecewise linear while the payoff may only be sampled, so refinement
    // guards against any grid too coarse for the payoff's kinks.
    let sign = match side {
        Side::Super => 1.0,
        Side::Sub => -1.0,
    };
    let mut margin = f64::INFINITY;
    for w in grid.windows(2) {
        for s in 0..10 {
            let x = w[0] + (w[1] - w[0]) * s as f64 / 10.0;
            margin = margin.min(sign * (portfolio.value_single(x) - payoff.eval(x)));
        }
    }
    let last = *grid.last().unwrap();
    margin = margin.min(sign * (portfolio.value_single(last) - payoff.eval(last)));
    let scale = x0.max(1.0);
    if margin < -1e-6 * scale {
        return Err(Error::Lp(format!(
            "hedge audit failed: worst slack {margin:.3e} on a refined grid"
        )));
    }

    let measure: Vec<PricingAtom> = grid
        .iter()
        .zip(&primal.x)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(&y, &w)| PricingAtom { x: vec![y], weight: w })
        .collect();

    Ok(PriceBound {
        side,
        primal_value: primal.value,
        dual_value: dual.value,
        gap: sign * (dual.value - primal.value),
        audit_margin: margin,
        portfolio,
        measure,
    })
}

/// Robust price bound for a two-maturity payoff h(x1, x2) under a martingale
/// linking the maturities.
pub fn price_two(
    market: &MarketTwo,
    payoff: &Payoff,
    side: Side,
    cfg: &HedgeConfig,
) -> Result<PriceBound> {
    market.validate()?;
    let x0 = market.x0;
    let kinks = payoff.kinks();
    let strikes1 = hedge_strikes(&market.ask1, &[], cfg, x0);
    let strikes2 = hedge_strikes(&market.ask2, &kinks, cfg, x0);
    let grid1 = pricing_grid(&market.ask1, &strikes1, &[], cfg, x0)?;
    let grid2 = pricing_grid(&market.ask2, &strikes2, &kinks, cfg, x0)?;
    let quotes1 = band_quotes(&market.bid1, &market.ask1, &strikes1, cfg.band_epsilon, x0);
    let quotes2 = band_quotes(&market.bid2, &market.ask2, &strikes2, cfg.band_epsilon, x0);
    let h: Vec<Vec<f64>> = grid1
        .iter()
        .map(|&y1| grid2.iter().map(|&y2| payoff.eval2(y1, y2)).collect())
        .collect();
    let spec = DualSpecTwo {
        x0,
        quotes1: quotes1.clone(),
        quotes2: quotes2.clone(),
        grid1: grid1.clone(),
        grid2: grid2.clone(),
        h,
        terminal_slope_x2: vec![payoff.terminal_slope_x2(); grid1.len()],
    };

    let (dual_lp, layout) = build_dual_two(&spec, side)?;
    let dual = solve(&dual_lp)?;
    expect_optimal(&dual, "hedging dual")?;

    let primal = solve(&build_primal_two(&spec, side)?)?;
    expect_optimal(&primal, "pricing primal")?;

    let (long_of, short_of): (fn(&StrikeQuote) -> f64, fn(&StrikeQuote) -> f64) = match side {
        Side::Super => (|q| q.ask, |q| q.bid),
        Side::Sub => (|q| q.bid, |q| q.ask),
    };
    let mut legs = Vec::new();
    let maturities = [(1, &quotes1, &layout.call_long1, &layout.call_short1),
        (2, &quotes2, &layout.call_long2, &layout.call_short2)];
    for (mat, quotes, longs, shorts) in maturities {
        for (i, q) in quotes.iter().enumerate() {
            let long = dual.x[longs.start + i];
            let short = dual.x[shorts.start + i];
            if long.abs() > 1e-12 {
                legs.push(HedgeLeg {
                    maturity: mat,
                    strike: q.strike,
                    weight: long,
                    price: long_of(q),
                });
            }
            if short.abs() > 1e-12 {
                legs.push(HedgeLeg {
                    maturity: mat,
                    strike: q.strike,
                    weight: -short,
                    price: short_of(q),
                });
            }
        }
    }
    let deltas: Vec<(f64, f64)> = grid1
        .iter()
        .enumerate()
        .map(|(i, &y1)| (y1, dual.x[layout.delta.start + i]))
        .collect();
    let portfolio = HedgePortfolio {
        cash: dual.x[layout.a],
        forwards: vec![dual.x[layout.b1], dual.x[layout.b2]],
        legs,
        deltas,
        cost: dual.value,
    };

    // Audit replays the product-grid constraints: the delta leg is only
    // defined at tabulated first-maturity levels, so refining in x1 would
    // test points the hedge never promises to cover.
    let sign = match side {
        Side::Super => 1.0,
        Side::Sub => -1.0,
    };
    let mut margin = f64::INFINITY;
    for &y1 in &grid1 {
        for &y2 in &grid2 {
            margin = margin.min(sign * (portfolio.value_two(y1, y2) - payoff.eval2(y1, y2)));
        }
    }
    let scale = x0.max(1.0);
    if margin < -1e-6 * scale {
        return Err(Error::Lp(format!(
            "hedge audit failed: worst slack {margin:.3e} on the product grid"
        )));
    }

    let n2 = grid2.len();
    let measure: Vec<PricingAtom> = primal
        .x
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 1e-12)
        .map(|(k, &w)| PricingAtom {
            x: vec![grid1[k / n2], grid2[k % n2]],
            weight: w,
        })
        .collect();

    Ok(PriceBound {
        side,
        primal_value: primal.value,
        dual_value: dual.value,
        gap: sign * (dual.value - primal.value),
        audit_margin: margin,
        portfolio,
        measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MixtureMarginal;

    fn bs_market(x0: f64, vol_bid: f64, vol_ask: f64) -> MarketSingle {
        MarketSingle {
            x0,
            bid: MixtureMarginal::black_scholes(x0, vol_bid).into(),
            ask: MixtureMarginal::black_scholes(x0, vol_ask).into(),
        }
    }

    fn small_cfg() -> HedgeConfig {
        HedgeConfig {
            grid_points: 80,
            strikes: StrikeMode::Dense(9),
            ..HedgeConfig::default()
        }
    }

    #[test]
    fn super_bounds_sub_for_digital() {
        let market = bs_market(1.0, 0.18, 0.22);
        let payoff = Payoff::digital(1.05);
        let cfg = small_cfg();
        let hi = price_single(&market, &payoff, Side::Super, &cfg).unwrap();
        let lo = price_single(&market, &payoff, Side::Sub, &cfg).unwrap();
        assert!(hi.dual_value >= lo.dual_value - 1e-9, "{} < {}", hi.dual_value, lo.dual_value);
        assert!(hi.gap > -1e-7 && lo.gap > -1e-7, "gaps {} {}", hi.gap, lo.gap);
        assert!(hi.audit_margin > -1e-7 && lo.audit_margin > -1e-7);
        assert!(lo.dual_value >= -1e-9 && hi.dual_value <= 1.0 + 1e-9);
    }

    #[test]
    fn quoted_call_prices_at_its_own_band() {
        // A call struck exactly at a quoted strike: the superhedge buys it at
        // the ask and the subhedge shorts it at the bid.
        let market = bs_market(1.0, 0.18, 0.22);
        let k = 1.1;
        let payoff = Payoff::call(k);
        let cfg = HedgeConfig {
            grid_points: 80,
            strikes: StrikeMode::Quoted(vec![0.9, 1.0, k]),
            ..HedgeConfig::default()
        };
        let hi = price_single(&market, &payoff, Side::Super, &cfg).unwrap();
        let lo = price_single(&market, &payoff, Side::Sub, &cfg).unwrap();
        assert!((hi.dual_value - market.ask.call_price(k)).abs() < 1e-8, "{}", hi.dual_value);
        assert!((lo.dual_value - market.bid.call_price(k)).abs() < 1e-8, "{}", lo.dual_value);
    }

    #[test]
    fn convex_payoff_priced_by_the_ask() {
        // For a convex payoff the worst-case model saturates the ask quotes,
        // so the bound matches the ask-marginal expectation on dense strikes.
        let market = bs_market(1.0, 0.15, 0.25);
        let payoff = Payoff::call(1.02);
        let cfg = HedgeConfig {
            grid_points: 150,
            strikes: StrikeMode::Dense(40),
            ..HedgeConfig::default()
        };
        let hi = price_single(&market, &payoff, Side::Super, &cfg).unwrap();
        let want = market.ask.call_price(1.02);
        assert!((hi.dual_value - want).abs() < 2e-3, "{} vs {want}", hi.dual_value);
    }

    #[test]
    fn two_maturity_forward_start_brackets_zero_strike() {
        let x0 = 1.0;
        let market = MarketTwo {
            x0,
            bid1: MixtureMarginal::black_scholes(x0, 0.14).into(),
            ask1: MixtureMarginal::black_scholes(x0, 0.16).into(),
            bid2: MixtureMarginal::black_scholes(x0, 0.20).into(),
            ask2: MixtureMarginal::black_scholes(x0, 0.23).into(),
        };
        let payoff = Payoff::forward_start(1.0);
        let cfg = HedgeConfig {
            grid_points: 25,
            strikes: StrikeMode::Dense(6),
            ..HedgeConfig::default()
        };
        let hi = price_two(&market, &payoff, Side::Super, &cfg).unwrap();
        let lo = price_two(&market, &payoff, Side::Sub, &cfg).unwrap();
        assert!(hi.dual_value >= lo.dual_value - 1e-9);
        assert!(hi.gap > -1e-7 && lo.gap > -1e-7, "gaps {} {}", hi.gap, lo.gap);
        assert!(hi.dual_value > 0.0 && hi.dual_value < 0.2, "{}", hi.dual_value);
        assert!(lo.dual_value >= -1e-9, "{}", lo.dual_value);
    }

    #[test]
    fn unordered_market_is_rejected() {
        // Bid strictly fatter than ask violates the convex order.
        let market = bs_market(1.0, 0.25, 0.15);
        let err = price_single(&market, &Payoff::call(1.0), Side::Super, &small_cfg());
        assert!(matches!(err, Err(Error::ConvexOrderViolation { .. })));
    }
}
