//! Option-chain ingestion and quote enhancement.
//!
//! Raw chains carry optional put and call quotes per strike. The pipeline
//! imputes missing sides from model-free bounds, folds puts into calls via
//! put-call parity, then tightens every quote to the best super/subhedging
//! price achievable with the other calls. The enhanced ask curve is convex
//! and nonincreasing, which yields an explicit discrete marginal repricing
//! every enhanced ask exactly.

use crate::error::{Error, Result};
use crate::lp::build::{build_primal_single, PrimalSpecSingle, Side, StrikeQuote};
use crate::lp::{solve, LinearProgram, LpStatus, Relation};
use crate::measures::DiscreteMeasure;
use serde::{Deserialize, Serialize};
use std::io;

/// One strike of a raw chain; `None` marks an unavailable quote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteRow {
    pub strike: f64,
    pub put_bid: Option<f64>,
    pub put_ask: Option<f64>,
    pub call_bid: Option<f64>,
    pub call_ask: Option<f64>,
}

/// Metadata accompanying a chain CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSidecar {
    pub forward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation_date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expiry: Option<String>,
}

/// A raw option chain with the zero-strike boundary row pinned to the
/// forward: the strike-0 call is the underlying itself and trades at `F`
/// with no spread, the strike-0 put is worthless.
#[derive(Debug, Clone, PartialEq)]
pub struct QuoteChain {
    pub forward: f64,
    rows: Vec<QuoteRow>,
}

impl QuoteChain {
    /// Builds a chain, inserting or normalizing the strike-0 boundary row.
    /// Strikes must be strictly increasing and present quotes uncrossed.
    pub fn new(forward: f64, mut rows: Vec<QuoteRow>) -> Result<Self> {
        if !(forward.is_finite() && forward > 0.0) {
            return Err(Error::Parse(format!("forward must be positive, got {forward}")));
        }
        rows.sort_by(|a, b| {
            a.strike
                .partial_cmp(&b.strike)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if rows.first().map_or(true, |r| r.strike != 0.0) {
            rows.insert(
                0,
                QuoteRow {
                    strike: 0.0,
                    put_bid: None,
                    put_ask: None,
                    call_bid: None,
                    call_ask: None,
                },
            );
        }
        rows[0] = QuoteRow {
            strike: 0.0,
            put_bid: Some(0.0),
            put_ask: Some(0.0),
            call_bid: Some(forward),
            call_ask: Some(forward),
        };
        for w in rows.windows(2) {
            if w[1].strike <= w[0].strike {
                return Err(Error::Parse(format!(
                    "strikes must be strictly increasing: {} then {}",
                    w[0].strike, w[1].strike
                )));
            }
        }
        for r in &rows {
            if !r.strike.is_finite() || r.strike < 0.0 {
                return Err(Error::Parse(format!("bad strike {}", r.strike)));
            }
            for (b, a) in [(r.put_bid, r.put_ask), (r.call_bid, r.call_ask)] {
                for v in [b, a].into_iter().flatten() {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::Parse(format!(
                            "bad quote {v} at strike {}",
                            r.strike
                        )));
                    }
                }
                if let (Some(b), Some(a)) = (b, a) {
                    if b > a + 1e-12 * forward {
                        return Err(Error::QuoteArbitrage { strike: r.strike, bid: b, ask: a });
                    }
                }
            }
        }
        Ok(Self { forward, rows })
    }

    pub fn rows(&self) -> &[QuoteRow] {
        &self.rows
    }

    /// Reads `strike,put_bid,put_ask,call_bid,call_ask` records; blank cells
    /// are missing quotes and `#` lines are comments.
    pub fn from_csv<R: io::Read>(reader: R, forward: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            rows.push(rec?);
        }
        Self::new(forward, rows)
    }

    pub fn to_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Fills every missing quote from its model-free bound: puts are worth at
    /// most their strike, calls at most the underlying (= forward at cost).
    pub fn impute(&self) -> QuoteChain {
        let rows = self
            .rows
            .iter()
            .map(|r| QuoteRow {
                strike: r.strike,
                put_bid: r.put_bid.or(Some(0.0)),
                put_ask: r.put_ask.or(Some(r.strike)),
                call_bid: r.call_bid.or(Some(0.0)),
                call_ask: r.call_ask.or(Some(self.forward)),
            })
            .collect();
        QuoteChain { forward: self.forward, rows }
    }

    /// Folds put quotes into the calls through put-call parity (the forward
    /// trades with no spread) and drops the puts.
    pub fn combine_put_call(&self) -> Result<CallChain> {
        let full = self.impute();
        let mut quotes = Vec::with_capacity(full.rows.len());
        for r in &full.rows {
            let parity = self.forward - r.strike;
            let bid = r.call_bid.unwrap().max(r.put_bid.unwrap() + parity);
            let ask = r.call_ask.unwrap().min(r.put_ask.unwrap() + parity);
            if bid > ask + 1e-9 * self.forward {
                return Err(Error::QuoteArbitrage { strike: r.strike, bid, ask });
            }
            quotes.push(StrikeQuote { strike: r.strike, bid, ask: ask.max(bid) });
        }
        Ok(CallChain { forward: self.forward, quotes })
    }
}

/// A call-only chain after parity combination; the first quote is the
/// zero-strike boundary (bid = ask = forward).
#[derive(Debug, Clone, PartialEq)]
pub struct CallChain {
    pub forward: f64,
    pub quotes: Vec<StrikeQuote>,
}

/// Per-strike best super/subhedging prices using the other calls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnhancedChain {
    pub forward: f64,
    pub strikes: Vec<f64>,
    /// Enhanced (raised) bids.
    pub bid: Vec<f64>,
    /// Enhanced (lowered) asks.
    pub ask: Vec<f64>,
    pub original_bid: Vec<f64>,
    pub original_ask: Vec<f64>,
    /// Last index where the enhanced ask still strictly decreases; quotes
    /// beyond it are redundant.
    pub truncation: usize,
}

/// Checks the chain admits some measure repricing every band: a martingale-
/// measure feasibility LP on a refined strike grid.
fn feasibility_precheck(chain: &CallChain) -> Result<()> {
    let f = chain.forward;
    let last = chain.quotes.last().map_or(f, |q| q.strike).max(f);
    let mut grid = Vec::new();
    for w in chain.quotes.windows(2) {
        let (a, b) = (w[0].strike, w[1].strike);
        for s in 0..4 {
            grid.push(a + (b - a) * s as f64 / 4.0);
        }
    }
    grid.push(last);
    grid.push(last * 1.25);
    grid.push(last * 1.6);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * f);
    let h = vec![0.0; grid.len()];
    let spec = PrimalSpecSingle { x0: f, quotes: chain.quotes.clone(), grid, h };
    let sol = solve(&build_primal_single(&spec, Side::Super)?)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible(
            "no martingale measure reprices the chain inside its bands".into(),
        ));
    }
    Ok(())
}

/// One enhancement LP: tighten the quote at `strikes[m]` by hedging with all
/// calls. Longs cost the ask, shorts earn the bid; the superhedge minimizes
/// and must dominate the call, the subhedge maximizes the proceeds of a
/// dominated portfolio.
fn enhance_one(chain: &CallChain, m: usize, side: Side) -> Result<f64> {
    let n = chain.quotes.len();
    let km = chain.quotes[m].strike;
    let mut c = Vec::with_capacity(2 * n);
    for q in &chain.quotes {
        c.push(q.ask);
    }
    for q in &chain.quotes {
        c.push(-q.bid);
    }
    let (mut lp, rel) = match side {
        Side::Super => (LinearProgram::minimize(c), Relation::Ge),
        Side::Sub => {
            // Selling the dominated portfolio: longs valued at bid, shorts
            // at ask.
            let mut c2 = Vec::with_capacity(2 * n);
            for q in &chain.quotes {
                c2.push(q.bid);
            }
            for q in &chain.quotes {
                c2.push(-q.ask);
            }
            (LinearProgram::maximize(c2), Relation::Le)
        }
    };
    for x in chain.quotes.iter().map(|q| q.strike) {
        let mut row = Vec::new();
        for (l, q) in chain.quotes.iter().enumerate() {
            let p = (x - q.strike).max(0.0);
            if p > 0.0 {
                row.push((l, p));
                row.push((n + l, -p));
            }
        }
        lp.add_constraint(row, rel, (x - km).max(0.0));
    }
    let tail: Vec<(usize, f64)> = (0..n)
        .map(|l| (l, 1.0))
        .chain((0..n).map(|l| (n + l, -1.0)))
        .collect();
    lp.add_constraint(tail, rel, 1.0);
    let sol = solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        LpStatus::Unbounded => Err(Error::Infeasible(format!(
            "quote enhancement at strike {km} is unbounded: the chain admits a static arbitrage"
        ))),
        other => Err(Error::Lp(format!(
            "enhancement LP at strike {km} ended with {other:?}"
        ))),
    }
}

/// Tightens every quote to its best hedging price. Fails if the chain admits
/// a static arbitrage.
pub fn enhance(chain: &CallChain) -> Result<EnhancedChain> {
    if chain.quotes.len() < 2 {
        return Err(Error::Parse("a chain needs at least one nonzero strike".into()));
    }
    feasibility_precheck(chain)?;
    let n = chain.quotes.len();
    let mut bid = Vec::with_capacity(n);
    let mut ask = Vec::with_capacity(n);
    for m in 0..n {
        let lo = enhance_one(chain, m, Side::Sub)?;
        let hi = enhance_one(chain, m, Side::Super)?;
        // The quote itself is a feasible hedge on both sides; the min/max
        // also clears solver-level roundoff off the exact values.
        let hi = hi.min(chain.quotes[m].ask);
        bid.push(lo.max(chain.quotes[m].bid).min(hi));
        ask.push(hi);
    }
    let strikes: Vec<f64> = chain.quotes.iter().map(|q| q.strike).collect();
    let tol = 1e-12 * chain.forward;
    let truncation = (1..n)
        .rev()
        .find(|&m| ask[m] < ask[m - 1] - tol)
        .unwrap_or(0);
    Ok(EnhancedChain {
        forward: chain.forward,
        strikes,
        bid,
        ask,
        original_bid: chain.quotes.iter().map(|q| q.bid).collect(),
        original_ask: chain.quotes.iter().map(|q| q.ask).collect(),
        truncation,
    })
}

/// Property report for an enhanced chain: consistency (bid below ask),
/// monotonicity of both curves from the forward, and convexity of the ask.
#[derive(Debug, Clone, Serialize)]
pub struct EnhancedReport {
    pub consistent: bool,
    pub max_crossing: f64,
    pub monotone: bool,
    pub max_monotonicity_violation: f64,
    pub ask_convex: bool,
    pub max_convexity_violation: f64,
    /// Strike triple witnessing the worst convexity violation, if any.
    pub convexity_witness: Option<(f64, f64, f64)>,
}

impl EnhancedReport {
    pub fn all_pass(&self) -> bool {
        self.consistent && self.monotone && self.ask_convex
    }
}

pub fn validate_enhanced(e: &EnhancedChain) -> EnhancedReport {
    let tol = 1e-8 * e.forward.max(1.0);
    let n = e.strikes.len();
    let mut max_crossing: f64 = 0.0;
    for m in 0..n {
        max_crossing = max_crossing.max(e.bid[m] - e.ask[m]);
    }
    let mut max_mono: f64 = (e.ask[0] - e.forward)
        .abs()
        .max((e.bid[0] - e.forward).abs());
    for m in 1..n {
        max_mono = max_mono
            .max(e.ask[m] - e.ask[m - 1])
            .max(e.bid[m] - e.bid[m - 1]);
    }
    let mut max_convex: f64 = 0.0;
    let mut witness = None;
    for lo in 0..n {
        for mid in lo + 1..n {
            for hi in mid + 1..n {
                let gamma = (e.strikes[hi] - e.strikes[mid]) / (e.strikes[hi] - e.strikes[lo]);
                let chord = gamma * e.ask[lo] + (1.0 - gamma) * e.ask[hi];
                let v = e.ask[mid] - chord;
                if v > max_convex {
                    max_convex = v;
                    witness = Some((e.strikes[lo], e.strikes[mid], e.strikes[hi]));
                }
            }
        }
    }
    EnhancedReport {
        consistent: max_crossing <= tol,
        max_crossing,
        monotone: max_mono <= tol,
        max_monotonicity_violation: max_mono,
        ask_convex: max_convex <= tol,
        max_convexity_violation: max_convex,
        convexity_witness: if max_convex > tol { witness } else { None },
    }
}

/// Exact ask marginal: the discrete measure whose call prices interpolate the
/// enhanced asks. Mass sits at the quoted strikes plus one synthetic strike
/// where the extrapolated ask curve hits zero.
pub fn ask_marginal(e: &EnhancedChain) -> Result<DiscreteMeasure> {
    let f = e.forward;
    let tol = 1e-12 * f;
    // Truncate where the ask stops strictly decreasing; beyond that index the
    // quotes repeat and carry no extra mass.
    let m_last = e.truncation;
    if m_last == 0 {
        return Err(Error::DegenerateMarket);
    }
    let mut ks: Vec<f64> = e.strikes[..=m_last].to_vec();
    let mut cs: Vec<f64> = e.ask[..=m_last].to_vec();
    let last_slope = (cs[m_last] - cs[m_last - 1]) / (ks[m_last] - ks[m_last - 1]);
    debug_assert!(last_slope < 0.0);
    if cs[m_last] > tol {
        ks.push(ks[m_last] - cs[m_last] / last_slope);
        cs.push(0.0);
    } else {
        cs[m_last] = 0.0;
    }
    let n = ks.len();
    // Right derivatives of the interpolated ask curve on each interval; zero
    // beyond the synthetic strike.
    let d: Vec<f64> = (0..n - 1)
        .map(|m| (cs[m + 1] - cs[m]) / (ks[m + 1] - ks[m]))
        .collect();
    let mut atoms = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let w0 = 1.0 + d[0];
    if w0 > tol {
        atoms.push(0.0);
        weights.push(w0);
    }
    for m in 1..n {
        let left = d[m - 1];
        let right = if m < n - 1 { d[m] } else { 0.0 };
        let w = right - left;
        if w > tol {
            atoms.push(ks[m]);
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    DiscreteMeasure::new(atoms, weights)
}

/// Writes strikes with original and enhanced quotes side by side.
pub fn write_enhanced_csv<W: io::Write>(e: &EnhancedChain, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["strike", "bid", "ask", "enhanced_bid", "enhanced_ask"])?;
    for m in 0..e.strikes.len() {
        wtr.write_record([
            e.strikes[m].to_string(),
            e.original_bid[m].to_string(),
            e.original_ask[m].to_string(),
            e.bid[m].to_string(),
            e.ask[m].to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Arbitrage-free synthetic chain: exact prices from a two-component
/// log-normal mixture centered at the forward, widened by random spreads and
/// with random quotes knocked out. `uniform` supplies draws in [0, 1).
pub fn synthetic_chain(
    forward: f64,
    n_strikes: usize,
    uniform: &mut dyn FnMut() -> f64,
) -> Result<QuoteChain> {
    use crate::measures::{Marginal, MixtureComponent, MixtureMarginal};
    let w1 = 0.3 + 0.4 * uniform();
    let m1 = forward * (0.85 + 0.3 * uniform());
    let m2 = (forward - w1 * m1) / (1.0 - w1);
    let v1 = 0.1 + 0.25 * uniform();
    let v2 = 0.1 + 0.25 * uniform();
    let mix: Marginal = MixtureMarginal::new(
        vec![
            MixtureComponent { mean: m1, vol: v1, weight: w1 },
            MixtureComponent { mean: m2, vol: v2, weight: 1.0 - w1 },
        ],
        None,
    )?
    .into();
    let mut rows = Vec::with_capacity(n_strikes);
    for i in 1..=n_strikes {
        let q = i as f64 / (n_strikes + 1) as f64;
        let k = mix.quantile(q);
        let call = mix.call_price(k);
        let put = call - forward + k;
        let half = (0.01 + 0.04 * uniform()) * call.max(1e-3 * forward);
        let half_p = (0.01 + 0.04 * uniform()) * put.max(1e-3 * forward);
        let keep = |u: f64| u > 0.15;
        rows.push(QuoteRow {
            strike: k,
            put_bid: keep(uniform()).then_some((put - half_p).max(0.0)),
            put_ask: keep(uniform()).then_some((put + half_p).min(k)),
            call_bid: keep(uniform()).then_some((call - half).max(0.0)),
            call_ask: keep(uniform()).then_some((call + half).min(forward)),
        });
    }
    QuoteChain::new(forward, rows)
}
