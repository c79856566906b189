//! Builders mapping discretized pricing problems onto `LinearProgram`.
//!
//! Superhedging duals: variables are cash `a`, forwards `b_i`, long call
//! positions priced at the ask, short call positions priced at the bid, and
//! (two maturities) a free delta per first-maturity grid point. Constraints
//! require the portfolio payoff to dominate `h` on the grid, plus one
//! asymptotic-slope row per tail so nothing escapes beyond the last grid
//! point. Primals maximize the expected payoff over grid measures repricing
//! every quote inside its bid-ask band.

use super::problem::{LinearProgram, Relation};
use crate::error::{Error, Result};

/// Which price bound is being computed. The superhedge minimizes the cost of
/// a dominating portfolio, paying the ask for longs and receiving the bid for
/// shorts. The subhedge maximizes the proceeds of selling a portfolio
/// dominated by the payoff, so its longs are valued at the bid and its shorts
/// at the ask (selling a dominated portfolio is the trade realizing the lower
/// bound).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Super,
    Sub,
}

/// One quoted call: bid and ask prices at a strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrikeQuote {
    pub strike: f64,
    pub bid: f64,
    pub ask: f64,
}

impl StrikeQuote {
    pub fn validate(&self, x0: f64) -> Result<()> {
        if self.bid > self.ask + 1e-12 * x0.max(1.0) {
            return Err(Error::QuoteArbitrage {
                strike: self.strike,
                bid: self.bid,
                ask: self.ask,
            });
        }
        let tol = 1e-9 * x0.max(1.0);
        if self.ask < (x0 - self.strike).max(0.0) - tol || self.bid > x0 + tol {
            return Err(Error::QuoteArbitrage {
                strike: self.strike,
                bid: self.bid,
                ask: self.ask,
            });
        }
        Ok(())
    }
}

/// Single-maturity superhedging dual data.
#[derive(Debug, Clone)]
pub struct DualSpecSingle {
    pub x0: f64,
    pub quotes: Vec<StrikeQuote>,
    /// Constraint grid; must contain the payoff kinks and all strikes.
    pub grid: Vec<f64>,
    /// Payoff sampled on the grid.
    pub h: Vec<f64>,
    /// Slope of the payoff at +infinity.
    pub terminal_slope: f64,
}

/// Variable layout of the single-maturity dual.
pub struct DualLayoutSingle {
    pub a: usize,
    pub b: usize,
    pub call_long: std::ops::Range<usize>,
    pub call_short: std::ops::Range<usize>,
}

pub fn build_dual_single(
    spec: &DualSpecSingle,
    side: Side,
) -> Result<(LinearProgram, DualLayoutSingle)> {
    if spec.grid.len() != spec.h.len() || spec.grid.len() < 2 {
        return Err(Error::Lp("dual grid and payoff size mismatch".into()));
    }
    for q in &spec.quotes {
        q.validate(spec.x0)?;
    }
    let m = spec.quotes.len();
    let layout = DualLayoutSingle {
        a: 0,
        b: 1,
        call_long: 2..2 + m,
        call_short: 2 + m..2 + 2 * m,
    };
    let mut c = vec![0.0; 2 + 2 * m];
    c[layout.a] = 1.0;
    c[layout.b] = spec.x0;
    for (i, q) in spec.quotes.iter().enumerate() {
        let (long_px, short_px) = match side {
            Side::Super => (q.ask, q.bid),
            Side::Sub => (q.bid, q.ask),
        };
        c[layout.call_long.start + i] = long_px;
        c[layout.call_short.start + i] = -short_px;
    }
    let rel = match side {
        Side::Super => Relation::Ge,
        Side::Sub => Relation::Le,
    };
    let mut lp = match side {
        Side::Super => LinearProgram::minimize(c),
        Side::Sub => LinearProgram::maximize(c),
    };
    lp.set_free(layout.a);
    lp.set_free(layout.b);
    for (&y, &hy) in spec.grid.iter().zip(&spec.h) {
        let mut row = vec![(layout.a, 1.0), (layout.b, y)];
        for (i, q) in spec.quotes.iter().enumerate() {
            let payoff = (y - q.strike).max(0.0);
            if payoff > 0.0 {
                row.push((layout.call_long.start + i, payoff));
                row.push((layout.call_short.start + i, -payoff));
            }
        }
        lp.add_constraint(row, rel, hy);
    }
    // Tail: the portfolio slope beyond the last grid point stays on the
    // correct side of the payoff's asymptotic slope.
    let mut tail = vec![(layout.b, 1.0)];
    for i in 0..m {
        tail.push((layout.call_long.start + i, 1.0));
        tail.push((layout.call_short.start + i, -1.0));
    }
    lp.add_constraint(tail, rel, spec.terminal_slope);
    Ok((lp, layout))
}

/// Two-maturity superhedging dual data for payoffs h(x1, x2).
#[derive(Debug, Clone)]
pub struct DualSpecTwo {
    pub x0: f64,
    pub quotes1: Vec<StrikeQuote>,
    pub quotes2: Vec<StrikeQuote>,
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    /// h[i][j] = payoff at (grid1[i], grid2[j]).
    pub h: Vec<Vec<f64>>,
    /// Slope of x2 -> h(x1, x2) at +infinity, per grid1 point.
    pub terminal_slope_x2: Vec<f64>,
}

pub struct DualLayoutTwo {
    pub a: usize,
    pub b1: usize,
    pub b2: usize,
    pub call_long1: std::ops::Range<usize>,
    pub call_short1: std::ops::Range<usize>,
    pub call_long2: std::ops::Range<usize>,
    pub call_short2: std::ops::Range<usize>,
    pub delta: std::ops::Range<usize>,
}

pub fn build_dual_two(
    spec: &DualSpecTwo,
    side: Side,
) -> Result<(LinearProgram, DualLayoutTwo)> {
    let (n1, n2) = (spec.grid1.len(), spec.grid2.len());
    if spec.h.len() != n1 || spec.h.iter().any(|r| r.len() != n2) || n1 < 2 || n2 < 2 {
        return Err(Error::Lp("dual product grid and payoff size mismatch".into()));
    }
    if spec.terminal_slope_x2.len() != n1 {
        return Err(Error::Lp("terminal slope vector size mismatch".into()));
    }
    for q in spec.quotes1.iter().chain(&spec.quotes2) {
        q.validate(spec.x0)?;
    }
    let (m1, m2) = (spec.quotes1.len(), spec.quotes2.len());
    let mut at = 3;
    let call_long1 = at..at + m1;
    at += m1;
    let call_short1 = at..at + m1;
    at += m1;
    let call_long2 = at..at + m2;
    at += m2;
    let call_short2 = at..at + m2;
    at += m2;
    let delta = at..at + n1;
    at += n1;
    let layout = DualLayoutTwo {
        a: 0,
        b1: 1,
        b2: 2,
        call_long1,
        call_short1,
        call_long2,
        call_short2,
        delta,
    };
    let mut c = vec![0.0; at];
    c[layout.a] = 1.0;
    c[layout.b1] = spec.x0;
    c[layout.b2] = spec.x0;
    let px = |q: &StrikeQuote| match side {
        Side::Super => (q.ask, q.bid),
        Side::Sub => (q.bid, q.ask),
    };
    for (i, q) in spec.quotes1.iter().enumerate() {
        let (long_px, short_px) = px(q);
        c[layout.call_long1.start + i] = long_px;
        c[layout.call_short1.start + i] = -short_px;
    }
    for (i, q) in spec.quotes2.iter().enumerate() {
        let (long_px, short_px) = px(q);
        c[layout.call_long2.start + i] = long_px;
        c[layout.call_short2.start + i] = -short_px;
    }
    let rel = match side {
        Side::Super => Relation::Ge,
        Side::Sub => Relation::Le,
    };
    let mut lp = match side {
        Side::Super => LinearProgram::minimize(c),
        Side::Sub => LinearProgram::maximize(c),
    };
    lp.set_free(layout.a);
    lp.set_free(layout.b1);
    lp.set_free(layout.b2);
    for j in layout.delta.clone() {
        lp.set_free(j);
    }
    for (i, &y1) in spec.grid1.iter().enumerate() {
        for (j, &y2) in spec.grid2.iter().enumerate() {
            let mut row = vec![
                (layout.a, 1.0),
                (layout.b1, y1),
                (layout.b2, y2),
                (layout.delta.start + i, y2 - y1),
            ];
            for (m, q) in spec.quotes1.iter().enumerate() {
                let p = (y1 - q.strike).max(0.0);
                if p > 0.0 {
                    row.push((layout.call_long1.start + m, p));
                    row.push((layout.call_short1.start + m, -p));
                }
            }
            for (m, q) in spec.quotes2.iter().enumerate() {
                let p = (y2 - q.strike).max(0.0);
                if p > 0.0 {
                    row.push((layout.call_long2.start + m, p));
                    row.push((layout.call_short2.start + m, -p));
                }
            }
            lp.add_constraint(row, rel, spec.h[i][j]);
        }
    }
    // Tail rows in x2 per first-maturity point: the portfolio slope in x2
    // beyond the grid stays on the correct side of the payoff slope.
    for (i, &slope) in spec.terminal_slope_x2.iter().enumerate() {
        let mut row = vec![(layout.b2, 1.0), (layout.delta.start + i, 1.0)];
        for m in 0..m2 {
            row.push((layout.call_long2.start + m, 1.0));
            row.push((layout.call_short2.start + m, -1.0));
        }
        lp.add_constraint(row, rel, slope);
    }
    Ok((lp, layout))
}

/// Single-maturity primal data: measures on a support grid repricing every
/// quote inside its band.
#[derive(Debug, Clone)]
pub struct PrimalSpecSingle {
    pub x0: f64,
    pub quotes: Vec<StrikeQuote>,
    pub grid: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn build_primal_single(spec: &PrimalSpecSingle, side: Side) -> Result<LinearProgram> {
    let n = spec.grid.len();
    if spec.h.len() != n || n < 3 {
        return Err(Error::Lp("primal grid needs >= 3 points matching h".into()));
    }
    for q in &spec.quotes {
        q.validate(spec.x0)?;
    }
    let mut lp = match side {
        Side::Super => LinearProgram::maximize(spec.h.clone()),
        Side::Sub => LinearProgram::minimize(spec.h.clone()),
    };
    lp.add_constraint((0..n).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
    lp.add_constraint(
        (0..n).map(|j| (j, spec.grid[j])).collect(),
        Relation::Eq,
        spec.x0,
    );
    for q in &spec.quotes {
        let coeffs: Vec<(usize, f64)> = (0..n)
            .filter_map(|j| {
                let p = (spec.grid[j] - q.strike).max(0.0);
                (p > 0.0).then_some((j, p))
            })
            .collect();
        lp.add_range_constraint(coeffs, q.bid, q.ask);
    }
    Ok(lp)
}

/// Two-maturity primal: couplings p_{ij} on the product grid, martingale in
/// the second step, repricing both maturities inside their bands.
pub fn build_primal_two(spec: &DualSpecTwo, side: Side) -> Result<LinearProgram> {
    let (n1, n2) = (spec.grid1.len(), spec.grid2.len());
    if spec.h.len() != n1 || spec.h.iter().any(|r| r.len() != n2) {
        return Err(Error::Lp("primal product grid and payoff size mismatch".into()));
    }
    for q in spec.quotes1.iter().chain(&spec.quotes2) {
        q.validate(spec.x0)?;
    }
    let idx = |i: usize, j: usize| i * n2 + j;
    let mut obj = vec![0.0; n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            obj[idx(i, j)] = spec.h[i][j];
        }
    }
    let mut lp = match side {
        Side::Super => LinearProgram::maximize(obj),
        Side::Sub => LinearProgram::minimize(obj),
    };
    lp.add_constraint(
        (0..n1 * n2).map(|k| (k, 1.0)).collect(),
        Relation::Eq,
        1.0,
    );
    lp.add_constraint(
        (0..n1)
            .flat_map(|i| (0..n2).map(move |j| (idx(i, j), spec.grid1[i])))
            .collect(),
        Relation::Eq,
        spec.x0,
    );
    // Martingale rows: conditional mean of x2 given x1 = y1_i equals y1_i.
    for (i, &y1) in spec.grid1.iter().enumerate() {
        let coeffs: Vec<(usize, f64)> = (0..n2)
            .map(|j| (idx(i, j), spec.grid2[j] - y1))
            .collect();
        lp.add_constraint(coeffs, Relation::Eq, 0.0);
    }
    for q in &spec.quotes1 {
        let coeffs: Vec<(usize, f64)> = (0..n1)
            .filter(|&i| spec.grid1[i] > q.strike)
            .flat_map(|i| {
                let p = spec.grid1[i] - q.strike;
                (0..n2).map(move |j| (idx(i, j), p))
            })
            .collect();
        lp.add_range_constraint(coeffs, q.bid, q.ask);
    }
    for q in &spec.quotes2 {
        let coeffs: Vec<(usize, f64)> = (0..n2)
            .filter(|&j| spec.grid2[j] > q.strike)
            .flat_map(|j| {
                let p = spec.grid2[j] - q.strike;
                (0..n1).map(move |i| (idx(i, j), p))
            })
            .collect();
        lp.add_range_constraint(coeffs, q.bid, q.ask);
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve, LpStatus};

    fn flat_quote(strike: f64, price: f64, spread: f64) -> StrikeQuote {
        StrikeQuote {
            strike,
            bid: price - spread / 2.0,
            ask: price + spread / 2.0,
        }
    }

    #[test]
    fn dual_single_constant_payoff_costs_the_constant() {
        let grid: Vec<f64> = (0..41).map(|i| i as f64 / 20.0).collect();
        let spec = DualSpecSingle {
            x0: 1.0,
            quotes: vec![flat_quote(1.0, 0.08, 0.01)],
            grid: grid.clone(),
            h: vec![7.0; grid.len()],
            terminal_slope: 0.0,
        };
        let (lp, _) = build_dual_single(&spec, Side::Super).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 7.0).abs() < 1e-9, "value {}", sol.value);
    }

    #[test]
    fn dual_single_quoted_call_costs_the_ask() {
        let k = 1.0;
        let mut grid: Vec<f64> = (0..41).map(|i| i as f64 / 20.0).collect();
        grid.push(k);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        let h: Vec<f64> = grid.iter().map(|&y| (y - k).max(0.0)).collect();
        let spec = DualSpecSingle {
            x0: 1.0,
            quotes: vec![flat_quote(k, 0.08, 0.01)],
            grid,
            h,
            terminal_slope: 1.0,
        };
        let (lp, layout) = build_dual_single(&spec, Side::Super).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 0.085).abs() < 1e-9, "value {}", sol.value);
        assert!((sol.x[layout.call_long.start] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn primal_single_degenerate_band_forces_dirac() {
        // Quotes priced by the point mass at x0 with zero spread admit only
        // that measure; E[y^2] is then x0^2.
        let x0 = 1.0;
        let grid = vec![0.0, 0.5, 1.0, 1.5, 2.0];
        let quotes: Vec<StrikeQuote> = [0.25, 0.5, 0.75, 1.25]
            .iter()
            .map(|&k| flat_quote(k, (x0 - k.min(2.0)).max(0.0), 0.0))
            .collect();
        let h: Vec<f64> = grid.iter().map(|&y| y * y).collect();
        let spec = PrimalSpecSingle { x0, quotes, grid, h };
        let lp = build_primal_single(&spec, Side::Super).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - x0 * x0).abs() < 1e-9, "value {}", sol.value);
    }

    #[test]
    fn primal_infeasible_band_is_flagged() {
        // Bid above any achievable price on the grid.
        let spec = PrimalSpecSingle {
            x0: 1.0,
            quotes: vec![StrikeQuote { strike: 0.5, bid: 0.99, ask: 1.0 }],
            grid: vec![0.0, 1.0, 1.4],
            h: vec![0.0, 0.0, 0.0],
        };
        let lp = build_primal_single(&spec, Side::Super).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    fn tiny_two_spec() -> DualSpecTwo {
        let grid1 = vec![0.6, 0.8, 1.0, 1.2, 1.4];
        let grid2 = vec![0.4, 0.7, 1.0, 1.3, 1.6];
        // Quotes from uniform-ish reference measures with generous spreads
        // so both maturities are feasible on these grids.
        let ref1 = |k: f64| {
            grid1
                .iter()
                .map(|&y| 0.2 * (y - k).max(0.0))
                .sum::<f64>()
        };
        let ref2 = |k: f64| {
            grid2
                .iter()
                .map(|&y| 0.2 * (y - k).max(0.0))
                .sum::<f64>()
        };
        let quotes1 = vec![
            StrikeQuote { strike: 0.9, bid: ref1(0.9) - 0.05, ask: ref1(0.9) + 0.05 },
            StrikeQuote { strike: 1.1, bid: ref1(1.1) - 0.05, ask: ref1(1.1) + 0.05 },
        ];
        let quotes2 = vec![
            StrikeQuote { strike: 0.9, bid: ref2(0.9) - 0.05, ask: ref2(0.9) + 0.05 },
            StrikeQuote { strike: 1.1, bid: ref2(1.1) - 0.05, ask: ref2(1.1) + 0.05 },
        ];
        let h: Vec<Vec<f64>> = grid1
            .iter()
            .map(|&y1| grid2.iter().map(|&y2| y2 - y1).collect())
            .collect();
        DualSpecTwo {
            x0: 1.0,
            quotes1,
            quotes2,
            grid1: grid1.clone(),
            grid2,
            h,
            terminal_slope_x2: vec![1.0; grid1.len()],
        }
    }

    #[test]
    fn dual_two_martingale_increment_is_free() {
        // h = x2 - x1 is replicated by delta == 1 at zero cost.
        let spec = tiny_two_spec();
        let (lp, _) = build_dual_two(&spec, Side::Super).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.value.abs() < 1e-9, "value {}", sol.value);
    }

    #[test]
    fn primal_two_martingale_increment_is_zero() {
        let spec = tiny_two_spec();
        let lp = build_primal_two(&spec, Side::Super).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.value.abs() < 1e-9, "value {}", sol.value);
    }

    #[test]
    fn weak_duality_on_tiny_forward_start() {
        let mut spec = tiny_two_spec();
        for (i, &y1) in spec.grid1.clone().iter().enumerate() {
            for (j, &y2) in spec.grid2.clone().iter().enumerate() {
                spec.h[i][j] = (y2 - y1).max(0.0);
            }
        }
        let primal = solve(&build_primal_two(&spec, Side::Super).unwrap()).unwrap();
        let (dlp, _) = build_dual_two(&spec, Side::Super).unwrap();
        let dual = solve(&dlp).unwrap();
        assert_eq!(primal.status, LpStatus::Optimal);
        assert_eq!(dual.status, LpStatus::Optimal);
        assert!(
            primal.value <= dual.value + 1e-7,
            "primal {} > dual {}",
            primal.value,
            dual.value
        );
    }

    #[test]
    fn crossed_quote_rejected() {
        let q = StrikeQuote { strike: 1.0, bid: 0.2, ask: 0.1 };
        assert!(q.validate(1.0).is_err());
    }
}
