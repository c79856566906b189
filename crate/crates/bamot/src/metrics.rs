//! Directed and symmetrized bid-ask distances, 1-Wasserstein, and the
//! discrete counterexample family separating the two topologies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus, Relation};
use crate::measures::{verification_grid, DiscreteMeasure, Marginal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMethod {
    CallSup,
    LpOracle,
    CdfIntegral,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceReport {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_strike: Option<f64>,
    pub method: DistanceMethod,
}

fn require_equal_barycenters(mu: &Marginal, nu: &Marginal) -> Result<f64> {
    let (bm, bn) = (mu.barycenter(), nu.barycenter());
    let scale = bm.abs().max(bn.abs()).max(1.0);
    if (bm - bn).abs() > 1e-9 * scale {
        return Err(Error::BarycenterMismatch { mu: bm, nu: bn });
    }
    Ok(scale)
}

/// Golden-section maximization of `f` on [a, b].
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Directed distance for equal-barycenter measures: 2 sup_K (c_mu - c_nu),
/// by dense grid scan refined with golden section.
pub fn directed_distance(mu: &Marginal, nu: &Marginal) -> Result<DistanceReport> {
    require_equal_barycenters(mu, nu)?;
    let gap = |k: f64| mu.call_price(k) - nu.call_price(k);

    let grid = verification_grid(mu, nu, 1024);
    let (mut best_i, mut best) = (0usize, f64::NEG_INFINITY);
    for (i, &k) in grid.iter().enumerate() {
        let g = gap(k);
        if g > best {
            best = g;
            best_i = i;
        }
    }
    let mut argmax = grid[best_i];
    // Call curves of discrete pairs are piecewise linear with kinks at the
    // atoms, so the grid maximum is already exact.
    if !(mu.is_discrete() && nu.is_discrete()) {
        let lo = if best_i > 0 { grid[best_i - 1] } else { grid[best_i] };
        let hi = if best_i + 1 < grid.len() {
            grid[best_i + 1]
        } else {
            grid[best_i]
        };
        if hi > lo {
            let (k, g) = golden_max(gap, lo, hi, 60);
            if g > best {
                best = g;
                argmax = k;
            }
        }
    }
    Ok(DistanceReport {
        value: (2.0 * best).max(0.0),
        argmax_strike: Some(argmax),
        method: DistanceMethod::CallSup,
    })
}

/// Symmetrized bid-ask distance (d->(mu,nu) + d->(nu,mu)) / 2.
pub fn bid_ask_distance(mu: &Marginal, nu: &Marginal) -> Result<DistanceReport> {
    let fwd = directed_distance(mu, nu)?;
    let bwd = directed_distance(nu, mu)?;
    let (value, argmax) = if fwd.value >= bwd.value {
        ((fwd.value + bwd.value) / 2.0, fwd.argmax_strike)
    } else {
        ((fwd.value + bwd.value) / 2.0, bwd.argmax_strike)
    };
    Ok(DistanceReport {
        value,
        argmax_strike: argmax,
        method: DistanceMethod::CallSup,
    })
}

/// LP oracle for the directed distance between discrete measures: optimize
/// (mu - nu)(psi) over piecewise-linear convex psi with knots at the union
/// of atoms and slopes nondecreasing in [-1, 1]. Exact regardless of
/// barycenter equality.
pub fn directed_distance_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<DistanceReport> {
    let mut knots: Vec<f64> = mu.atoms().iter().chain(nu.atoms()).cloned().collect();
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
    let r = knots.len();
    if r < 2 {
        return Ok(DistanceReport {
            value: 0.0,
            argmax_strike: None,
            method: DistanceMethod::LpOracle,
        });
    }
    let signed_mass = |k: f64| -> f64 {
        let at = |m: &DiscreteMeasure| {
            m.atoms()
                .iter()
                .zip(m.weights())
                .find(|(&x, _)| (x - k).abs() <= 1e-14 * x.abs().max(1.0))
                .map(|(_, &w)| w)
                .unwrap_or(0.0)
        };
        at(mu) - at(nu)
    };
    let w: Vec<f64> = knots.iter().map(|&k| signed_mass(k)).collect();

    // psi(t_k) = sum_{j<k} s_j (t_{j+1} - t_j), psi(t_0) = 0 wlog since
    // constants integrate to zero against mu - nu. Variables are the segment
    // slopes s_0..s_{r-2}; objective coefficient of s_j collects the mass to
    // the right of segment j.
    let nvars = r - 1;
    let mut objective = vec![0.0; nvars];
    for j in 0..nvars {
        let delta = knots[j + 1] - knots[j];
        let tail: f64 = w[j + 1..].iter().sum();
        objective[j] = -(delta * tail); // minimize the negation
    }
    let mut lp = LinearProgram::minimize(objective);
    for j in 0..nvars {
        lp.set_bounds(j, -1.0, 1.0);
    }
    for j in 0..nvars.saturating_sub(1) {
        lp.add_constraint(vec![(j, -1.0), (j + 1, 1.0)], Relation::Ge, 0.0);
    }
    let sol = crate::lp::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!(
            "distance oracle LP ended with status {:?}",
            sol.status
        )));
    }
    Ok(DistanceReport {
        value: (-sol.value).max(0.0),
        argmax_strike: None,
        method: DistanceMethod::LpOracle,
    })
}

/// W1(mu, nu) = int |F_mu - F_nu|. Exact piecewise sum for discrete pairs,
/// composite Simpson otherwise.
pub fn wasserstein1(mu: &Marginal, nu: &Marginal) -> f64 {
    if let (Some(dm), Some(dn)) = (mu.as_discrete(), nu.as_discrete()) {
        let mut pts: Vec<f64> = dm.atoms().iter().chain(dn.atoms()).cloned().collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
        let mut total = 0.0;
        for w in pts.windows(2) {
            total += (mu.cdf(w[0]) - nu.cdf(w[0])).abs() * (w[1] - w[0]);
        }
        return total;
    }
    let lo = mu.quantile(1e-9).min(nu.quantile(1e-9)).max(0.0);
    let hi = mu.quantile(1.0 - 1e-9).max(nu.quantile(1.0 - 1e-9));
    let n = 16384usize; // even
    let h = (hi - lo) / n as f64;
    let f = |x: f64| (mu.cdf(x) - nu.cdf(x)).abs();
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let x = lo + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

/// The discrete pair (mu_n, nu_n) separating the bid-ask distance from W1:
/// mu_n uniform on 2n+1 even integers, nu_n its Rademacher smear, both
/// shifted right by 2n+2 so the support lies on R+.
pub fn counterexample_pair(n: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    assert!(n >= 1, "counterexample family starts at n = 1");
    let shift = (2 * n + 2) as f64;
    let c = 1.0 / (2 * n + 1) as f64;
    let m = n as i64;
    let mu_atoms: Vec<f64> = (-m..=m).map(|k| 2.0 * k as f64 + shift).collect();
    let mu_weights = vec![c; mu_atoms.len()];
    let nu_atoms: Vec<f64> = (-m - 1..=m).map(|k| 2.0 * k as f64 + 1.0 + shift).collect();
    let mut nu_weights = vec![c; nu_atoms.len()];
    nu_weights[0] = c / 2.0;
    *nu_weights.last_mut().unwrap() = c / 2.0;
    (
        DiscreteMeasure::new(mu_atoms, mu_weights).unwrap(),
        DiscreteMeasure::new(nu_atoms, nu_weights).unwrap(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{convex_order_leq, MixtureMarginal};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_discrete(rng: &mut impl Rng, mean: f64) -> DiscreteMeasure {
        // Random measure with the given mean: sample atoms, solve weights by
        // rebalancing towards the mean.
        loop {
            let n = rng.gen_range(2..6);
            let mut atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
            atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
            atoms.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            if atoms.len() < 2 || atoms[0] >= mean || *atoms.last().unwrap() <= mean {
                continue;
            }
            let mut weights: Vec<f64> = (0..atoms.len()).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            // Shift mass between the extremes to hit the mean exactly.
            let cur: f64 = atoms.iter().zip(&weights).map(|(&x, &w)| w * x).sum();
            let (lo, hi) = (atoms[0], *atoms.last().unwrap());
            let t = (mean - cur) / (hi - lo);
            let last = weights.len() - 1;
            if weights[0] - (-t).max(0.0) < 0.01 || weights[last] + t < 0.01 {
                continue;
            }
            weights[0] -= t;
            weights[last] += t;
            if weights.iter().any(|&w| w <= 0.0) {
                continue;
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            if let Ok(m) = DiscreteMeasure::new(atoms, weights) {
                if (m.barycenter() - mean).abs() < 1e-12 {
                    return m;
                }
            }
        }
    }

    #[test]
    fn distance_of_measure_to_itself_is_zero() {
        let m = Marginal::Mixture(MixtureMarginal::black_scholes(1.0, 0.2));
        assert!(directed_distance(&m, &m).unwrap().value < 1e-12);
        assert!(bid_ask_distance(&m, &m).unwrap().value < 1e-12);
        assert!(wasserstein1(&m, &m) < 1e-12);
    }

    #[test]
    fn counterexample_shape_n1() {
        let (mu, nu) = counterexample_pair(1);
        assert_eq!(mu.atoms(), &[2.0, 4.0, 6.0]);
        assert_eq!(mu.weights(), &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(nu.atoms(), &[1.0, 3.0, 5.0, 7.0]);
        assert!((nu.weights()[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((nu.weights()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn counterexample_convex_order() {
        for n in 1..=3 {
            let (mu, nu) = counterexample_pair(n);
            let check = convex_order_leq(
                &Marginal::Discrete(mu),
                &Marginal::Discrete(nu),
                1e-12,
            );
            assert!(check.ordered, "n={n} witness {:?}", check.witness);
        }
    }

    #[test]
    fn counterexample_distances() {
        for n in 1..=5 {
            let (mu, nu) = counterexample_pair(n);
            let (mu, nu) = (Marginal::Discrete(mu), Marginal::Discrete(nu));
            let cn = 1.0 / (2 * n + 1) as f64;
            let bwd = directed_distance(&nu, &mu).unwrap().value;
            assert!((bwd - cn).abs() < 1e-12, "n={n}: directed {bwd} expected {cn}");
            let d = bid_ask_distance(&mu, &nu).unwrap().value;
            assert!((d - cn / 2.0).abs() < 1e-12, "n={n}: d={d} expected {}", cn / 2.0);
            let fwd = directed_distance(&mu, &nu).unwrap().value;
            assert!(fwd < 1e-12, "mu <=c nu so the forward distance vanishes");
            let w1 = wasserstein1(&mu, &nu);
            assert!((w1 - 1.0).abs() < 1e-12, "n={n}: W1={w1}");
        }
    }

    #[test]
    fn counterexample_lp_value_n1() {
        let (mu, nu) = counterexample_pair(1);
        let d = directed_distance_lp(&nu, &mu).unwrap().value;
        assert!((d - 1.0 / 3.0).abs() < 1e-9, "lp value {d}");
        // The strangle psi(x) = (4-x)^+ + (x-8)^+ (shifted knots) attains it.
        let shift = 4.0;
        let strangle = |x: f64| (-(2.0) - (x - shift)).max(0.0) + ((x - shift) - 2.0).max(0.0);
        let pairing: f64 = nu
            .atoms()
            .iter()
            .zip(nu.weights())
            .map(|(&x, &w)| w * strangle(x))
            .sum::<f64>()
            - mu.atoms()
                .iter()
                .zip(mu.weights())
                .map(|(&x, &w)| w * strangle(x))
                .sum::<f64>();
        assert!((pairing - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lp_agrees_with_call_sup_on_random_equal_mean_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_discrete(&mut rng, 2.0);
            let b = random_discrete(&mut rng, 2.0);
            let closed = directed_distance(&Marginal::Discrete(a.clone()), &Marginal::Discrete(b.clone()))
                .unwrap()
                .value;
            let lp = directed_distance_lp(&a, &b).unwrap().value;
            assert!((closed - lp).abs() < 1e-8, "closed {closed} vs lp {lp}");
        }
    }

    #[test]
    fn directed_zero_iff_convex_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = random_discrete(&mut rng, 2.0);
            let b = random_discrete(&mut rng, 2.0);
            let (ma, mb) = (Marginal::Discrete(a), Marginal::Discrete(b));
            let d = directed_distance(&ma, &mb).unwrap().value;
            let ordered = convex_order_leq(&ma, &mb, 1e-10).ordered;
            assert_eq!(d < 1e-9, ordered, "d={d}, ordered={ordered}");
        }
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let trio: Vec<Marginal> = (0..3)
                .map(|_| Marginal::Discrete(random_discrete(&mut rng, 2.0)))
                .collect();
            let d = |x: &Marginal, y: &Marginal| directed_distance(x, y).unwrap().value;
            assert!(d(&trio[0], &trio[2]) <= d(&trio[0], &trio[1]) + d(&trio[1], &trio[2]) + 1e-9);
        }
    }

    #[test]
    fn distance_below_wasserstein() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let a = Marginal::Discrete(random_discrete(&mut rng, 2.0));
            let b = Marginal::Discrete(random_discrete(&mut rng, 2.0));
            let d = bid_ask_distance(&a, &b).unwrap().value;
            assert!(d <= wasserstein1(&a, &b) + 1e-12);
        }
    }

    #[test]
    fn dirac_wasserstein() {
        let a = Marginal::dirac(0.0);
        let b = Marginal::dirac(2.5);
        assert!((wasserstein1(&a, &b) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bs_pair_argmax_near_the_money() {
        let bid = Marginal::Mixture(MixtureMarginal::black_scholes(1.0, 0.15));
        let ask = Marginal::Mixture(MixtureMarginal::black_scholes(1.0, 0.20));
        let rep = directed_distance(&ask, &bid).unwrap();
        let k = rep.argmax_strike.unwrap();
        assert!((k - 1.0).abs() < 0.05, "argmax {k} should be near the money");
        // value equals twice the max call spread
        let spread = ask.call_price(k) - bid.call_price(k);
        assert!((rep.value - 2.0 * spread).abs() < 1e-12);
    }

    #[test]
    fn deform_halves_the_distance() {
        let bid = Marginal::Mixture(MixtureMarginal::black_scholes(1.0, 0.15));
        let ask = Marginal::Mixture(MixtureMarginal::black_scholes(1.0, 0.20));
        let mid = crate::measures::mid_marginal(&bid, &ask).unwrap();
        let d0 = bid_ask_distance(&bid, &ask).unwrap().value;
        let b5 = crate::measures::deform(&bid, &mid, 0.5).unwrap();
        let a5 = crate::measures::deform(&ask, &mid, 0.5).unwrap();
        let d5 = bid_ask_distance(&b5, &a5).unwrap().value;
        assert!((d5 - 0.5 * d0).abs() < 1e-9, "d0={d0}, d_half={d5}");
    }

    #[test]
    fn barycenter_mismatch_directs_to_lp() {
        let a = Marginal::dirac(1.0);
        let b = Marginal::dirac(2.0);
        assert!(matches!(
            directed_distance(&a, &b),
            Err(Error::BarycenterMismatch { .. })
        ));
        // LP oracle handles it.
        let rep = directed_distance_lp(a.as_discrete().unwrap(), b.as_discrete().unwrap()).unwrap();
        assert!(rep.value > 0.0);
    }
}
