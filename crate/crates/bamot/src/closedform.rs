//! Closed-form digital pricing in a one-sided market: when only the ask side
//! of the vanilla surface constrains the model, the robust price of a digital
//! struck at K is realized by a call spread between a critical lower strike
//! L* and K, and by the measure that keeps the ask distribution below L* and
//! parks all remaining mass at K.

use crate::error::{Error, Result};
use crate::measures::{convex_order_leq, DiscreteMeasure, Marginal};
use serde::Serialize;

/// The optimal superhedge of the digital: a call spread between
/// `lower_strike` and `upper_strike` scaled to reach 1 at the upper strike.
#[derive(Debug, Clone, Serialize)]
pub struct DualProfile {
    pub lower_strike: f64,
    pub upper_strike: f64,
    pub slope: f64,
}

/// Closed-form solution of the one-sided digital problem.
#[derive(Debug, Clone, Serialize)]
pub struct OneSidedDigitalResult {
    pub strike: f64,
    pub critical_strike: f64,
    /// Robust digital price per unit notional, in [0, 1].
    pub price: f64,
    pub dual_profile: DualProfile,
    /// Worst-case measure: the ask marginal restricted to [0, L*], locally
    /// concentrated, plus an atom of the remaining mass at the strike.
    pub optimal_measure: DiscreteMeasure,
}

/// Residuals confirming that the optimal measure reprices the ask call at the
/// critical strike and places no mass strictly between L* and K.
#[derive(Debug, Clone, Serialize)]
pub struct TouchReport {
    pub reprices_at_critical: bool,
    pub call_residual: f64,
    pub gap_empty: bool,
    pub gap_mass: f64,
}

fn ensure_mixture(ask: &Marginal, x0: f64, k: f64) -> Result<()> {
    if ask.is_discrete() {
        return Err(Error::InvalidMeasure(
            "the closed form needs an atomless ask marginal; price discrete markets through the LP"
                .into(),
        ));
    }
    let bary = ask.barycenter();
    if (bary - x0).abs() > 1e-8 * x0.max(1.0) {
        return Err(Error::ForwardMismatch(bary, x0));
    }
    if k <= x0 {
        return Err(Error::InvalidMeasure(format!(
            "digital strike {k} must exceed the forward {x0} for the one-sided closed form"
        )));
    }
    Ok(())
}

/// Shortfall of the call spread [L, K] against the digital's worst-case mass:
/// b(L) = c^a(L) - (K - L)(1 - F^a(L)). Nondecreasing in L; its root is the
/// optimal lower strike.
fn spread_slack(ask: &Marginal, k: f64, l: f64) -> f64 {
    ask.call_price(l) - (k - l) * (1.0 - ask.cdf(l))
}

/// Optimal lower strike of the digital superhedge: the root of `spread_slack`
/// in [0, K), located by bisection to 1e-12 relative accuracy.
pub fn critical_strike(ask: &Marginal, k: f64, x0: f64) -> Result<f64> {
    ensure_mixture(ask, x0, k)?;
    if ask.call_price(k) <= 1e-14 * x0.max(1.0) {
        return Err(Error::TrivialDigital { strike: k });
    }
    let mut lo = 0.0;
    let mut hi = k;
    debug_assert!(spread_slack(ask, k, lo) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spread_slack(ask, k, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * k {
            break;
        }
    }
    let l = 0.5 * (lo + hi);
    if l >= k - 1e-12 * k {
        return Err(Error::TrivialDigital { strike: k });
    }
    Ok(l)
}

/// Prices the digital 1{x >= K} against the ask marginal alone, with a
/// 256-cell concentration of the optimal measure's lower part.
pub fn one_sided_digital(ask: &Marginal, k: f64, x0: f64) -> Result<OneSidedDigitalResult> {
    one_sided_digital_with_cells(ask, k, x0, 256)
}

/// As [`one_sided_digital`] with an explicit concentration granularity.
pub fn one_sided_digital_with_cells(
    ask: &Marginal,
    k: f64,
    x0: f64,
    cells: usize,
) -> Result<OneSidedDigitalResult> {
    let l = critical_strike(ask, k, x0)?;
    let price = 1.0 - ask.cdf(l);
    let optimal_measure = concentrate_below(ask, l, k, cells.max(1))?;
    Ok(OneSidedDigitalResult {
        strike: k,
        critical_strike: l,
        price,
        dual_profile: DualProfile {
            lower_strike: l,
            upper_strike: k,
            slope: 1.0 / (k - l),
        },
        optimal_measure,
    })
}

/// Locally concentrates ask|[0, l] on `cells` equal cells and adds the tail
/// mass as an atom at `k`. Each cell keeps its exact mass and mean, so call
/// prices at cell boundaries (in particular at l) are preserved.
fn concentrate_below(ask: &Marginal, l: f64, k: f64, cells: usize) -> Result<DiscreteMeasure> {
    let mut atoms = Vec::with_capacity(cells + 1);
    let mut weights = Vec::with_capacity(cells + 1);
    for i in 0..cells {
        let a = l * i as f64 / cells as f64;
        let b = l * (i + 1) as f64 / cells as f64;
        let w = ask.cdf(b) - ask.cdf(a);
        if w <= 1e-15 {
            continue;
        }
        let mean = (ask.upper_partial_mean(a) - ask.upper_partial_mean(b)) / w;
        // Guard against roundoff pushing a cell mean outside its cell.
        let mean = mean.clamp(a, b);
        if let Some(&last) = atoms.last() {
            if mean <= last {
                continue;
            }
        }
        atoms.push(mean);
        weights.push(w);
    }
    let tail = 1.0 - ask.cdf(l);
    if tail > 0.0 {
        atoms.push(k);
        weights.push(tail);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    DiscreteMeasure::new(atoms, weights)
}

/// Checks the defining identities of the optimal measure: it reprices the ask
/// call at the critical strike and charges no mass to the open gap (L*, K).
pub fn primal_dual_iv_touch(result: &OneSidedDigitalResult, ask: &Marginal) -> TouchReport {
    let l = result.critical_strike;
    let k = result.strike;
    let star: Marginal = result.optimal_measure.clone().into();
    let call_residual = (star.call_price(l) - ask.call_price(l)).abs();
    let scale = ask.barycenter().max(1.0);
    let gap_mass: f64 = result
        .optimal_measure
        .atoms()
        .iter()
        .zip(result.optimal_measure.weights())
        .filter(|(&x, _)| x > l + 1e-9 * scale && x < k - 1e-9 * scale)
        .map(|(_, &w)| w)
        .sum();
    TouchReport {
        reprices_at_critical: call_residual <= 1e-8 * scale,
        call_residual,
        gap_empty: gap_mass == 0.0,
        gap_mass,
    }
}

/// Convenience feasibility check: dirac(x0) below the optimal measure below
/// the ask in convex order.
pub fn optimal_measure_feasible(result: &OneSidedDigitalResult, ask: &Marginal, x0: f64) -> bool {
    let star: Marginal = result.optimal_measure.clone().into();
    let tol = 1e-7 * x0.max(1.0);
    convex_order_leq(&Marginal::dirac(x0), &star, tol).ordered
        && convex_order_leq(&star, ask, tol).ordered
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{MixtureComponent, MixtureMarginal};

    fn bs_ask(x0: f64, total_vol: f64) -> Marginal {
        MixtureMarginal::black_scholes(x0, total_vol).into()
    }

    fn short_dated_example() -> (Marginal, f64, f64) {
        // 20% annual vol over one month, spot 1, strike 1.05.
        (bs_ask(1.0, 0.20 / 12f64.sqrt()), 1.05, 1.0)
    }

    #[test]
    fn short_dated_digital_matches_known_values() {
        let (ask, k, x0) = short_dated_example();
        let res = one_sided_digital(&ask, k, x0).unwrap();
        assert!((res.price - 0.46).abs() < 0.005, "price {}", res.price);
        assert!(
            (res.critical_strike - 1.004).abs() < 0.002,
            "L* {}",
            res.critical_strike
        );
        // The robust bound towers over the plain ask-marginal digital.
        let plain = 1.0 - ask.cdf(k);
        assert!((plain - 0.19).abs() < 0.01, "plain {plain}");
    }

    #[test]
    fn price_identity_and_profile() {
        let (ask, k, x0) = short_dated_example();
        let res = one_sided_digital(&ask, k, x0).unwrap();
        let spread = ask.call_price(res.critical_strike) / (k - res.critical_strike);
        assert!((res.price - spread).abs() < 1e-9);
        assert!((res.dual_profile.slope - 1.0 / (k - res.critical_strike)).abs() < 1e-12);
        assert!(res.critical_strike < k && res.critical_strike >= 0.0);
    }

    #[test]
    fn optimal_measure_touches_and_is_feasible() {
        let (ask, k, x0) = short_dated_example();
        let res = one_sided_digital(&ask, k, x0).unwrap();
        let touch = primal_dual_iv_touch(&res, &ask);
        assert!(touch.reprices_at_critical, "residual {}", touch.call_residual);
        assert!(touch.gap_empty, "gap mass {}", touch.gap_mass);
        assert!(optimal_measure_feasible(&res, &ask, x0));
        // The measure prices the digital at the bound: its mass at K.
        let at_k: f64 = res
            .optimal_measure
            .atoms()
            .iter()
            .zip(res.optimal_measure.weights())
            .filter(|(&x, _)| x >= k)
            .map(|(_, &w)| w)
            .sum();
        assert!((at_k - res.price).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_strike() {
        let ask = bs_ask(1.0, 0.3);
        let mut last_price = f64::INFINITY;
        let mut last_l = 0.0;
        for k in [1.05, 1.2, 1.4, 1.8, 2.5] {
            let res = one_sided_digital(&ask, k, 1.0).unwrap();
            assert!(res.price <= last_price + 1e-12);
            assert!(res.critical_strike >= last_l - 1e-12);
            last_price = res.price;
            last_l = res.critical_strike;
        }
        assert!(last_price < 0.05, "far digital still prices {last_price}");
    }

    #[test]
    fn index_mixture_is_internally_consistent() {
        // Four-component ask mixture for a 5861-forward index. With only the
        // ask side constraining the model the critical strike sits where the
        // upper tail's conditional mean hits the digital strike; the tighter
        // published call spread needs the bid side too and lives in the LP.
        let comps = [
            (6250.0, 0.04009, 0.09591),
            (6098.0, 0.07408, 0.5814),
            (5531.0, 0.1360, 0.2741),
            (4116.0, 0.3198, 0.04852),
        ];
        let total: f64 = comps.iter().map(|c| c.2).sum();
        let ask: Marginal = MixtureMarginal::new(
            comps
                .iter()
                .map(|&(mean, vol, weight)| MixtureComponent {
                    mean,
                    vol,
                    weight: weight / total,
                })
                .collect(),
            None,
        )
        .unwrap()
        .into();
        let x0 = ask.barycenter();
        let k = 6154.05;
        let res = one_sided_digital(&ask, k, x0).unwrap();
        let l = res.critical_strike;
        // Root condition: conditional mean above L* equals the strike.
        let tail_mass = 1.0 - ask.cdf(l);
        let tail_mean = ask.upper_partial_mean(l) / tail_mass;
        assert!((tail_mean - k).abs() < 1e-6 * k, "tail mean {tail_mean}");
        assert!((res.price - tail_mass).abs() < 1e-9);
        assert!((res.price * (k - l) - ask.call_price(l)).abs() < 1e-6);
        let touch = primal_dual_iv_touch(&res, &ask);
        assert!(touch.reprices_at_critical && touch.gap_empty);
    }

    #[test]
    fn rejects_bad_inputs() {
        let ask = bs_ask(1.0, 0.2);
        assert!(matches!(
            one_sided_digital(&ask, 0.9, 1.0),
            Err(Error::InvalidMeasure(_))
        ));
        let discrete: Marginal = DiscreteMeasure::new(vec![0.5, 1.5], vec![0.5, 0.5])
            .unwrap()
            .into();
        assert!(one_sided_digital(&discrete, 1.2, 1.0).is_err());
        // Essentially no mass above K: trivial problem.
        assert!(matches!(
            one_sided_digital(&bs_ask(1.0, 0.01), 3.0, 1.0),
            Err(Error::TrivialDigital { .. })
        ));
    }
}
