//! Robust pricing bounds for exotic options when the vanillas used for
//! hedging trade with a bid-ask spread.
//!
//! The library models each maturity by a pair of marginals (a bid measure
//! and an ask measure in convex order) and computes super/subhedging bounds
//! over all martingale models consistent with that band, together with the
//! optimal semi-static hedge portfolios. Supporting modules provide the
//! bid-ask distance between measures, closed-form one-sided digital bounds,
//! quote-chain enhancement, and log-normal mixture calibration.

pub mod calibration;
pub mod closedform;
pub mod error;
pub mod lp;
pub mod measures;
pub mod metrics;
pub mod payoff;
pub mod quotes;

pub use error::{Error, Result};
