use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("forward mismatch: {0} vs {1}")]
    ForwardMismatch(f64, f64),

    #[error("barycenter mismatch ({mu} vs {nu}); the closed form requires equal means, use the LP oracle")]
    BarycenterMismatch { mu: f64, nu: f64 },

    #[error("convex order violated at strike {strike} (maturities {i} <= {j}): bid call {bid} > ask call {ask}")]
    ConvexOrderViolation {
        strike: f64,
        i: usize,
        j: usize,
        bid: f64,
        ask: f64,
    },

    #[error("arbitrage in quotes at strike {strike}: bid {bid} > ask {ask}")]
    QuoteArbitrage { strike: f64, bid: f64, ask: f64 },

    #[error("linear program: {0}")]
    Lp(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("degenerate market: all enhanced ask quotes equal the forward")]
    DegenerateMarket,

    #[error("trivial digital: ask marginal is supported in [0, {strike}]")]
    TrivialDigital { strike: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
