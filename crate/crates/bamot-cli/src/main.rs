//! Batch front end for the bid-ask robust pricing library: prices payoffs,
//! enhances quote chains, calibrates marginals, and emits plot-ready CSVs.

use bamot_cli::config;

use bamot::calibration::{
    calibrate_ask, calibrate_bid_from_ask, CalibrationProblem, CalibrationSide,
};
use bamot::closedform::{one_sided_digital, primal_dual_iv_touch};
use bamot::lp::build::Side;
use bamot::lp::hedge::{price_single, price_two, MarketSingle, MarketTwo, PriceBound};
use bamot::measures::{deform, mid_marginal, Marginal};
use bamot::metrics::{bid_ask_distance, directed_distance, wasserstein1};
use bamot::payoff::{Leg, Payoff};
use bamot::quotes::{ask_marginal, enhance, validate_enhanced, write_enhanced_csv, QuoteChain};
use bamot::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};
use config::RunConfig;
use serde::Deserialize;
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "bamot", version, about = "Robust bid-ask option price bounds")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for emitted files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for synthetic data generators.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Super,
    Sub,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Price a payoff against a market of bid/ask marginals.
    Price {
        /// Payoff expression, e.g. "digital(6154.05)*100" or
        /// "call(105) - put(95)".
        #[arg(long)]
        payoff: String,
        /// Market JSON: {x0, bid, ask} or {x0, bid1, ask1, bid2, ask2}.
        #[arg(long)]
        market: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
    },
    /// Tighten a vanilla quote chain and extract its ask marginal.
    Enhance {
        /// CSV with strike, put_bid, put_ask, call_bid, call_ask columns.
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        forward: f64,
    },
    /// Fit log-normal mixtures to out-of-the-money quotes.
    Calibrate {
        /// Ask quotes CSV (strike, otm_price, vega).
        #[arg(long)]
        quotes: PathBuf,
        /// Optional bid quotes CSV; fit by shrinking the ask volatilities.
        #[arg(long)]
        bid_quotes: Option<PathBuf>,
        /// JSON sidecar: {forward, spot, components}.
        #[arg(long)]
        sidecar: PathBuf,
    },
    /// Bid-ask distance between two marginals.
    Distance {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
    },
    /// Closed-form one-sided digital bound against an ask marginal.
    DigitalOneSided {
        #[arg(long)]
        ask: PathBuf,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        spot: f64,
    },
    /// Sweep the bid/ask pair toward the mid and record premium vs distance.
    Converge {
        #[arg(long)]
        payoff: String,
        #[arg(long)]
        bid: PathBuf,
        #[arg(long)]
        ask: PathBuf,
        /// Number of deformation levels.
        #[arg(long, default_value_t = 14)]
        points: usize,
    },
    /// Forward-start bound sweep, with mid-marginal (zero-spread) columns.
    ForwardStart {
        /// Two-maturity market JSON.
        #[arg(long)]
        market: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        k_min: f64,
        #[arg(long, default_value_t = 1.2)]
        k_max: f64,
        #[arg(long, default_value_t = 0.05)]
        k_step: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    let mut cfg = match RunConfig::load(cli.config.as_ref()) {
        Ok(c) => c,
        Err(e) => fail(&e),
    };
    if let Some(out) = cli.out {
        cfg.out_dir = Some(out);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Err(e) = run(&cli.cmd, &cfg) {
        fail(&e);
    }
}

/// Prints a machine-readable diagnostic and exits: 2 for input or arbitrage
/// problems, 3 for numerical failures.
fn fail(e: &Error) -> ! {
    let (kind, code) = match e {
        Error::Lp(_) => ("numerical", 3),
        Error::Infeasible(_)
        | Error::QuoteArbitrage { .. }
        | Error::ConvexOrderViolation { .. }
        | Error::DegenerateMarket => ("arbitrage", 2),
        _ => ("input", 2),
    };
    eprintln!(
        "{}",
        json!({ "code": code, "kind": kind, "message": e.to_string() })
    );
    std::process::exit(code);
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    match &cfg.out_dir {
        Some(d) => d.join(name),
        None => PathBuf::from(name),
    }
}

fn write_json<T: serde::Serialize>(cfg: &RunConfig, name: &str, value: &T) -> Result<PathBuf> {
    let path = out_path(cfg, name);
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(&path, serde_json::to_vec_pretty(value)?)?;
    Ok(path)
}

fn create_csv(cfg: &RunConfig, name: &str, header: &str) -> Result<(fs::File, PathBuf)> {
    let path = out_path(cfg, name);
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut file = fs::File::create(&path)?;
    writeln!(file, "{}", cfg.provenance())?;
    if !header.is_empty() {
        writeln!(file, "{header}")?;
    }
    Ok((file, path))
}

fn load_marginal(path: &Path) -> Result<Marginal> {
    Ok(serde_json::from_reader(fs::File::open(path)?)?)
}

fn run(cmd: &Cmd, cfg: &RunConfig) -> Result<()> {
    match cmd {
        Cmd::Price { payoff, market, side } => cmd_price(payoff, market, *side, cfg),
        Cmd::Enhance { chain, forward } => cmd_enhance(chain, *forward, cfg),
        Cmd::Calibrate { quotes, bid_quotes, sidecar } => {
            cmd_calibrate(quotes, bid_quotes.as_deref(), sidecar, cfg)
        }
        Cmd::Distance { mu, nu } => cmd_distance(mu, nu, cfg),
        Cmd::DigitalOneSided { ask, strike, spot } => {
            cmd_digital_one_sided(ask, *strike, *spot, cfg)
        }
        Cmd::Converge { payoff, bid, ask, points } => {
            cmd_converge(payoff, bid, ask, *points, cfg)
        }
        Cmd::ForwardStart { market, k_min, k_max, k_step } => {
            cmd_forward_start(market, *k_min, *k_max, *k_step, cfg)
        }
    }
}

// ---------------------------------------------------------------------------
// price
// ---------------------------------------------------------------------------

enum Market {
    Single(MarketSingle),
    Two(MarketTwo),
}

fn load_market(path: &Path) -> Result<Market> {
    let value: serde_json::Value = serde_json::from_reader(fs::File::open(path)?)?;
    if value.get("bid1").is_some() {
        Ok(Market::Two(serde_json::from_value(value)?))
    } else {
        Ok(Market::Single(serde_json::from_value(value)?))
    }
}

fn price_once(market: &Market, payoff: &Payoff, side: Side, cfg: &RunConfig) -> Result<PriceBound> {
    match market {
        Market::Single(m) => price_single(m, payoff, side, &cfg.hedge_config(false)),
        Market::Two(m) => price_two(m, payoff, side, &cfg.hedge_config(true)),
    }
}

fn write_portfolio(cfg: &RunConfig, name: &str, bound: &PriceBound) -> Result<PathBuf> {
    let (mut file, path) = create_csv(cfg, name, "maturity,strike,weight,side,price")?;
    for leg in &bound.portfolio.legs {
        let dir = if leg.weight >= 0.0 { "long" } else { "short" };
        writeln!(
            file,
            "{},{},{},{},{}",
            leg.maturity, leg.strike, leg.weight, dir, leg.price
        )?;
    }
    Ok(path)
}

fn cmd_price(spec: &str, market_path: &Path, side: SideArg, cfg: &RunConfig) -> Result<()> {
    let payoff: Payoff = spec.parse()?;
    let market = load_market(market_path)?;
    if payoff.two_maturity() != matches!(market, Market::Two(_)) {
        return Err(Error::Parse(
            "payoff and market disagree on the number of maturities".into(),
        ));
    }
    let sides: &[Side] = match side {
        SideArg::Super => &[Side::Super],
        SideArg::Sub => &[Side::Sub],
        SideArg::Both => &[Side::Super, Side::Sub],
    };
    let mut summary = json!({ "payoff": payoff.to_string() });
    for &s in sides {
        let bound = price_once(&market, &payoff, s, cfg)?;
        let tag = match s {
            Side::Super => "super",
            Side::Sub => "sub",
        };
        write_json(cfg, &format!("price_{tag}.json"), &bound)?;
        write_portfolio(cfg, &format!("portfolio_{tag}.csv"), &bound)?;
        summary[tag] = json!({
            "primal": bound.primal_value,
            "dual": bound.dual_value,
            "gap": bound.gap,
        });
    }
    println!("{summary}");
    Ok(())
}

// ---------------------------------------------------------------------------
// enhance
// ---------------------------------------------------------------------------

fn cmd_enhance(chain_path: &Path, forward: f64, cfg: &RunConfig) -> Result<()> {
    let chain = QuoteChain::from_csv(fs::File::open(chain_path)?, forward)?;
    let calls = chain.impute().combine_put_call()?;
    let enhanced = enhance(&calls)?;
    let report = validate_enhanced(&enhanced);

    let (mut file, csv_path) = create_csv(cfg, "enhanced.csv", "")?;
    write_enhanced_csv(&enhanced, &mut file)?;
    let marginal = ask_marginal(&enhanced)?;
    let json_path = write_json(cfg, "ask_marginal.json", &Marginal::from(marginal))?;

    println!(
        "{}",
        json!({
            "report": report,
            "truncation": enhanced.truncation,
            "enhanced_csv": csv_path,
            "ask_marginal_json": json_path,
        })
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct Sidecar {
    forward: f64,
    spot: f64,
    components: usize,
}

fn cmd_calibrate(
    quotes: &Path,
    bid_quotes: Option<&Path>,
    sidecar: &Path,
    cfg: &RunConfig,
) -> Result<()> {
    let meta: Sidecar = serde_json::from_reader(fs::File::open(sidecar)?)?;
    let ask_problem = CalibrationProblem::from_csv(
        fs::File::open(quotes)?,
        meta.forward,
        meta.spot,
        meta.components,
        CalibrationSide::Ask,
    )?;
    let ask_fit = calibrate_ask(&ask_problem)?;
    write_json(cfg, "calibrated_ask.json", &ask_fit.mixture)?;
    let mut summary = json!({ "ask_objective": ask_fit.objective });

    if let Some(bid_path) = bid_quotes {
        let bid_problem = CalibrationProblem::from_csv(
            fs::File::open(bid_path)?,
            meta.forward,
            meta.spot,
            meta.components,
            CalibrationSide::BidFromAsk,
        )?;
        let bid_fit = calibrate_bid_from_ask(&ask_fit.mixture, &bid_problem)?;
        write_json(cfg, "calibrated_bid.json", &bid_fit.mixture)?;
        summary["bid_objective"] = json!(bid_fit.objective);
    }
    println!("{summary}");
    Ok(())
}

// ---------------------------------------------------------------------------
// distance
// ---------------------------------------------------------------------------

fn cmd_distance(mu_path: &Path, nu_path: &Path, cfg: &RunConfig) -> Result<()> {
    let mu = load_marginal(mu_path)?;
    let nu = load_marginal(nu_path)?;
    let report = json!({
        "directed_mu_nu": directed_distance(&mu, &nu)?,
        "directed_nu_mu": directed_distance(&nu, &mu)?,
        "symmetrized": bid_ask_distance(&mu, &nu)?,
        "wasserstein1": wasserstein1(&mu, &nu),
    });
    write_json(cfg, "distance.json", &report)?;
    println!("{report}");
    Ok(())
}

// ---------------------------------------------------------------------------
// digital-one-sided
// ---------------------------------------------------------------------------

fn cmd_digital_one_sided(ask_path: &Path, strike: f64, spot: f64, cfg: &RunConfig) -> Result<()> {
    let ask = load_marginal(ask_path)?;
    let result = one_sided_digital(&ask, strike, spot)?;
    let touch = primal_dual_iv_touch(&result, &ask);
    write_json(cfg, "digital.json", &result)?;
    println!(
        "{}",
        json!({
            "price": result.price,
            "critical_strike": result.critical_strike,
            "touch": touch,
        })
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------------

/// Model price of a single-maturity payoff under one marginal.
fn expect_payoff(m: &Marginal, h: &Payoff) -> Result<f64> {
    let x0 = m.barycenter();
    let mut value = 0.0;
    for &(w, leg) in h.terms() {
        let price = match leg {
            Leg::Cash => 1.0,
            Leg::Call(k) => m.call_price(k),
            Leg::Put(k) => m.call_price(k) - x0 + k,
            Leg::Digital(k) => match m.as_discrete() {
                Some(d) => d
                    .atoms()
                    .iter()
                    .zip(d.weights())
                    .filter(|(&a, _)| a >= k)
                    .map(|(_, &w)| w)
                    .sum(),
                None => 1.0 - m.cdf(k),
            },
            Leg::ForwardStart(_) => {
                return Err(Error::Parse(
                    "forward-start payoffs have no single-marginal price".into(),
                ))
            }
        };
        value += w * price;
    }
    Ok(value)
}

/// Least-squares slope of log(premium) against log(distance) over the
/// `take` smallest distances.
fn loglog_slope(points: &[(f64, f64)], take: usize) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, p)| *d > 1e-12 && *p > 0.0)
        .map(|&(d, p)| (d.ln(), p.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.truncate(take);
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy): (f64, f64) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

fn cmd_converge(
    spec: &str,
    bid_path: &Path,
    ask_path: &Path,
    points: usize,
    cfg: &RunConfig,
) -> Result<()> {
    let payoff: Payoff = spec.parse()?;
    if payoff.two_maturity() {
        return Err(Error::Parse("converge sweeps single-maturity payoffs".into()));
    }
    let bid = load_marginal(bid_path)?;
    let ask = load_marginal(ask_path)?;
    let mid = mid_marginal(&bid, &ask)?;
    let mid_price = expect_payoff(&mid, &payoff)?;
    let hedge_cfg = cfg.hedge_config(false);

    let (mut file, csv_path) = create_csv(cfg, "converge.csv", "gamma,distance,premium")?;
    let mut samples = Vec::with_capacity(points);
    for i in 0..points {
        // gamma -> 1 shrinks the spread; log-space the remaining width.
        let lambda = if points == 1 {
            1.0
        } else {
            10f64.powf(-3.0 * i as f64 / (points - 1) as f64)
        };
        let gamma = 1.0 - lambda;
        let bid_g = deform(&bid, &mid, gamma)?;
        let ask_g = deform(&ask, &mid, gamma)?;
        let d = bid_ask_distance(&bid_g, &ask_g)?.value;
        let market = MarketSingle {
            x0: mid.barycenter(),
            bid: bid_g,
            ask: ask_g,
        };
        let bound = price_single(&market, &payoff, Side::Super, &hedge_cfg)?;
        let premium = bound.dual_value - mid_price;
        writeln!(file, "{gamma},{d},{premium}")?;
        samples.push((d, premium));
    }
    let slope = loglog_slope(&samples, 10);
    println!(
        "{}",
        json!({ "slope": slope, "points": samples.len(), "csv": csv_path })
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// forward-start
// ---------------------------------------------------------------------------

fn cmd_forward_start(
    market_path: &Path,
    k_min: f64,
    k_max: f64,
    k_step: f64,
    cfg: &RunConfig,
) -> Result<()> {
    if !(k_step > 0.0 && k_max >= k_min) {
        return Err(Error::Parse("strike-ratio sweep bounds are inverted".into()));
    }
    let market = match load_market(market_path)? {
        Market::Two(m) => m,
        Market::Single(_) => {
            return Err(Error::Parse("forward-start needs a two-maturity market".into()))
        }
    };
    market.validate()?;
    let mid1 = mid_marginal(&market.bid1, &market.ask1)?;
    let mid2 = mid_marginal(&market.bid2, &market.ask2)?;
    let mot_market = MarketTwo {
        x0: market.x0,
        bid1: mid1.clone(),
        ask1: mid1,
        bid2: mid2.clone(),
        ask2: mid2,
    };
    let hedge_cfg = cfg.hedge_config(true);
    // Zero-width bands need a little slack for the discretized marginals.
    let mut mot_cfg = hedge_cfg.clone();
    mot_cfg.band_epsilon = mot_cfg.band_epsilon.max(1e-6);

    let (mut file, csv_path) =
        create_csv(cfg, "forward_start.csv", "k,bamot_super,bamot_sub,mot_super,mot_sub")?;
    let mut k = k_min;
    let mut rows = 0usize;
    while k <= k_max + 1e-12 {
        let payoff = Payoff::forward_start(k);
        let b_sup = price_two(&market, &payoff, Side::Super, &hedge_cfg)?.dual_value;
        let b_sub = price_two(&market, &payoff, Side::Sub, &hedge_cfg)?.dual_value;
        let m_sup = price_two(&mot_market, &payoff, Side::Super, &mot_cfg)?.dual_value;
        let m_sub = price_two(&mot_market, &payoff, Side::Sub, &mot_cfg)?.dual_value;
        writeln!(file, "{k},{b_sup},{b_sub},{m_sup},{m_sub}")?;
        rows += 1;
        k += k_step;
    }
    println!("{}", json!({ "rows": rows, "csv": csv_path }));
    Ok(())
}
