//! Probability measures on the half-line and the convex-order machinery
//! shared by the pricing and metric modules.
//!
//! Two concrete models are supported: discrete measures (finitely many
//! atoms) and log-normal mixtures. Both expose call prices, CDF, potential
//! function, and barycenter. The `vol` of a mixture component is the total
//! (non-annualized) log-volatility over the maturity, so a component is
//! fully determined by `(mean, vol, weight)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Component vols below this are treated as point masses to avoid density
/// overflow in the log-normal formulas.
pub const ATOM_VOL: f64 = 1e-8;

fn norm_cdf(x: f64) -> f64 {
    // Normal::new(0,1) cannot fail.
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Undiscounted Black call on forward `z` with total vol `sigma`.
pub fn black_call(z: f64, sigma: f64, k: f64) -> f64 {
    if k <= 0.0 {
        return z - k;
    }
    if sigma < ATOM_VOL {
        return (z - k).max(0.0);
    }
    let d1 = (z / k).ln() / sigma + 0.5 * sigma;
    let d2 = d1 - sigma;
    z * norm_cdf(d1) - k * norm_cdf(d2)
}

/// CDF of the log-normal with forward `z` and total vol `sigma`.
pub fn lognormal_cdf(z: f64, sigma: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if sigma < ATOM_VOL {
        return if x >= z { 1.0 } else { 0.0 };
    }
    norm_cdf(((x / z).ln() + 0.5 * sigma * sigma) / sigma)
}

/// Density of the log-normal with forward `z` and total vol `sigma`.
pub fn lognormal_pdf(z: f64, sigma: f64, x: f64) -> f64 {
    if x <= 0.0 || sigma < ATOM_VOL {
        return 0.0;
    }
    let d = ((x / z).ln() + 0.5 * sigma * sigma) / sigma;
    norm_pdf(d) / (x * sigma)
}

/// Partial first moment E[X 1{X <= b}] of the log-normal `(z, sigma)`.
fn lognormal_partial_mean(z: f64, sigma: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    if sigma < ATOM_VOL {
        return if b >= z { z } else { 0.0 };
    }
    z * norm_cdf(((b / z).ln() - 0.5 * sigma * sigma) / sigma)
}

/// A measure with finitely many atoms, strictly increasing, all on R+.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.is_empty() {
            return Err(Error::InvalidMeasure(
                "atoms and weights must be non-empty and of equal length".into(),
            ));
        }
        for pair in atoms.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidMeasure(format!(
                    "atoms must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if atoms[0] < 0.0 {
            return Err(Error::InvalidMeasure("atoms must be nonnegative".into()));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidMeasure("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        Ok(Self { atoms, weights })
    }

    pub fn dirac(x: f64) -> Self {
        Self {
            atoms: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn call_price(&self, k: f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * (x - k).max(0.0))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .filter(|(&a, _)| a <= x)
            .map(|(_, &w)| w)
            .sum()
    }

    pub fn barycenter(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * x)
            .sum()
    }
}

/// One log-normal mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub mean: f64,
    pub vol: f64,
    pub weight: f64,
}

/// A log-normal mixture marginal; `maturity` is calendar metadata only.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureMarginal {
    components: Vec<MixtureComponent>,
    maturity: Option<String>,
}

impl MixtureMarginal {
    pub fn new(components: Vec<MixtureComponent>, maturity: Option<String>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMeasure("mixture needs components".into()));
        }
        for c in &components {
            if !(c.mean > 0.0) || !(c.vol > 0.0) || c.weight < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "component (mean {}, vol {}, weight {}) out of range",
                    c.mean, c.vol, c.weight
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        Ok(Self {
            components,
            maturity,
        })
    }

    /// Single log-normal with forward `z` and total vol `sigma`.
    pub fn black_scholes(z: f64, sigma: f64) -> Self {
        Self {
            components: vec![MixtureComponent {
                mean: z,
                vol: sigma,
                weight: 1.0,
            }],
            maturity: None,
        }
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn maturity(&self) -> Option<&str> {
        self.maturity.as_deref()
    }

    pub fn barycenter(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn call_price(&self, k: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * black_call(c.mean, c.vol, k))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * lognormal_cdf(c.mean, c.vol, x))
            .sum()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * lognormal_pdf(c.mean, c.vol, x))
            .sum()
    }
}

/// A one-dimensional law on R+ with finite first moment.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Discrete(DiscreteMeasure),
    Mixture(MixtureMarginal),
}

impl From<DiscreteMeasure> for Marginal {
    fn from(m: DiscreteMeasure) -> Self {
        Marginal::Discrete(m)
    }
}

impl From<MixtureMarginal> for Marginal {
    fn from(m: MixtureMarginal) -> Self {
        Marginal::Mixture(m)
    }
}

impl Marginal {
    pub fn dirac(x: f64) -> Self {
        Marginal::Discrete(DiscreteMeasure::dirac(x))
    }

    /// E[(X - K)^+].
    pub fn call_price(&self, k: f64) -> f64 {
        match self {
            Marginal::Discrete(m) => m.call_price(k),
            Marginal::Mixture(m) => m.call_price(k),
        }
    }

    /// Right-continuous distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Discrete(m) => m.cdf(x),
            Marginal::Mixture(m) => m.cdf(x),
        }
    }

    /// Density at `x`; `None` for discrete measures.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Marginal::Discrete(_) => None,
            Marginal::Mixture(m) => Some(m.density(x)),
        }
    }

    pub fn barycenter(&self) -> f64 {
        match self {
            Marginal::Discrete(m) => m.barycenter(),
            Marginal::Mixture(m) => m.barycenter(),
        }
    }

    /// Potential function U(x) = E|x - X| via the call-price identity
    /// |x - y| = 2(y - x)^+ + x - y.
    pub fn potential(&self, x: f64) -> f64 {
        2.0 * self.call_price(x) + x - self.barycenter()
    }

    /// E[X 1{X > a}]. Uses the identity E[X 1{X>a}] = c(a) + a (1 - F(a)).
    pub fn upper_partial_mean(&self, a: f64) -> f64 {
        match self {
            Marginal::Discrete(m) => m
                .atoms
                .iter()
                .zip(&m.weights)
                .filter(|(&x, _)| x > a)
                .map(|(&x, &w)| w * x)
                .sum(),
            Marginal::Mixture(m) => {
                let total = m.barycenter();
                total
                    - m.components
                        .iter()
                        .map(|c| c.weight * lognormal_partial_mean(c.mean, c.vol, a))
                        .sum::<f64>()
            }
        }
    }

    /// Smallest x with F(x) >= q.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Marginal::Discrete(m) => {
                let mut acc = 0.0;
                for (&x, &w) in m.atoms.iter().zip(&m.weights) {
                    acc += w;
                    if acc >= q - 1e-15 {
                        return x;
                    }
                }
                *m.atoms.last().unwrap()
            }
            Marginal::Mixture(m) => {
                if q <= 0.0 {
                    return 0.0;
                }
                // Bracket then bisect on the CDF.
                let mut hi = m
                    .components
                    .iter()
                    .map(|c| c.mean * (8.0 * c.vol).exp())
                    .fold(f64::MIN, f64::max);
                while m.cdf(hi) < q && hi.is_finite() {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if m.cdf(mid) >= q {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo <= 1e-14 * hi.max(1.0) {
                        break;
                    }
                }
                hi
            }
        }
    }

    pub fn atoms(&self) -> &[f64] {
        match self {
            Marginal::Discrete(m) => &m.atoms,
            Marginal::Mixture(_) => &[],
        }
    }

    pub fn as_discrete(&self) -> Option<&DiscreteMeasure> {
        match self {
            Marginal::Discrete(m) => Some(m),
            Marginal::Mixture(_) => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Marginal::Discrete(_))
    }
}

/// Outcome of a convex-order test. `witness` is a strike where domination
/// fails (or 0 for a barycenter mismatch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexOrderCheck {
    pub ordered: bool,
    pub witness: Option<f64>,
}

impl ConvexOrderCheck {
    fn ok() -> Self {
        Self {
            ordered: true,
            witness: None,
        }
    }

    fn fail(k: f64) -> Self {
        Self {
            ordered: false,
            witness: Some(k),
        }
    }
}

/// Verification grid for convex-order and distance computations: the union
/// of both measures' atoms, an `n`-point quantile grid of each, and the
/// extreme 1e-6 quantiles.
pub fn verification_grid(mu: &Marginal, nu: &Marginal, n: usize) -> Vec<f64> {
    let mut pts = vec![0.0];
    for m in [mu, nu] {
        pts.extend_from_slice(m.atoms());
        pts.push(m.quantile(1e-6));
        pts.push(m.quantile(1.0 - 1e-6));
        if !m.is_discrete() {
            for i in 1..n {
                pts.push(m.quantile(i as f64 / n as f64));
            }
        }
    }
    pts.retain(|x| x.is_finite() && *x >= 0.0);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
    pts
}

/// Tests mu <=c nu: equal barycenters (within `tol`) and dominated call
/// prices on a verification grid.
pub fn convex_order_leq(mu: &Marginal, nu: &Marginal, tol: f64) -> ConvexOrderCheck {
    if (mu.barycenter() - nu.barycenter()).abs() > tol {
        return ConvexOrderCheck::fail(0.0);
    }
    for k in verification_grid(mu, nu, 512) {
        if mu.call_price(k) > nu.call_price(k) + tol {
            return ConvexOrderCheck::fail(k);
        }
    }
    ConvexOrderCheck::ok()
}

/// Call-price curve K -> E[(X-K)^+], either closed-form through a marginal,
/// piecewise linear, or a lazy pointwise maximum.
#[derive(Debug, Clone)]
pub enum CallCurve {
    Marginal(Marginal),
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64> },
    Max(Vec<CallCurve>),
}

impl CallCurve {
    pub fn price(&self, k: f64) -> f64 {
        match self {
            CallCurve::Marginal(m) => m.call_price(k),
            CallCurve::PiecewiseLinear { knots, values } => {
                match knots.binary_search_by(|x| x.partial_cmp(&k).unwrap()) {
                    Ok(i) => values[i],
                    Err(0) => values[0],
                    Err(i) if i == knots.len() => {
                        let n = knots.len();
                        if n < 2 {
                            return values[n - 1];
                        }
                        let slope =
                            (values[n - 1] - values[n - 2]) / (knots[n - 1] - knots[n - 2]);
                        (values[n - 1] + slope * (k - knots[n - 1])).max(0.0)
                    }
                    Err(i) => {
                        let t = (k - knots[i - 1]) / (knots[i] - knots[i - 1]);
                        values[i - 1] * (1.0 - t) + values[i] * t
                    }
                }
            }
            CallCurve::Max(curves) => curves
                .iter()
                .map(|c| c.price(k))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn forward(&self) -> f64 {
        self.price(0.0)
    }

    fn sample_points(&self, out: &mut Vec<f64>, n: usize) {
        match self {
            CallCurve::Marginal(m) => {
                out.extend_from_slice(m.atoms());
                if !m.is_discrete() {
                    for i in 0..=n {
                        let q = 1e-6 + (1.0 - 2e-6) * i as f64 / n as f64;
                        out.push(m.quantile(q));
                    }
                } else {
                    out.push(m.quantile(1.0 - 1e-9));
                }
            }
            CallCurve::PiecewiseLinear { knots, .. } => out.extend_from_slice(knots),
            CallCurve::Max(curves) => {
                for c in curves {
                    c.sample_points(out, n);
                }
            }
        }
    }
}

fn check_common_forward(curves: &[CallCurve]) -> Result<f64> {
    let f0 = curves[0].forward();
    for c in curves.iter().skip(1) {
        let f = c.forward();
        if (f - f0).abs() > 1e-9 * f0.abs().max(1.0) {
            return Err(Error::ForwardMismatch(f0, f));
        }
    }
    Ok(f0)
}

/// Greatest convex minorant of the pointwise minimum of the curves: the call
/// curve of the convex-order infimum among measures with the shared
/// barycenter. Computed by sampling the pointwise min on a quantile grid and
/// taking the lower convex hull (Andrew monotone chain).
pub fn convex_meet(curves: &[CallCurve]) -> Result<CallCurve> {
    if curves.is_empty() {
        return Err(Error::InvalidMeasure("convex_meet of no curves".into()));
    }
    let forward = check_common_forward(curves)?;
    if curves.len() == 1 {
        return Ok(curves[0].clone());
    }
    let mut grid = vec![0.0];
    for c in curves {
        c.sample_points(&mut grid, 2048);
    }
    let k_hi = 1.3 * grid.iter().cloned().fold(0.0, f64::max);
    grid.push(k_hi);
    grid.retain(|x| x.is_finite() && *x >= 0.0);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(1.0));

    let min_price = |k: f64| -> f64 {
        curves
            .iter()
            .map(|c| c.price(k))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    };
    // Lower hull anchored at (0, forward) since every curve passes there.
    let build_hull = |grid: &[f64]| -> Vec<(f64, f64)> {
        let mut hull: Vec<(f64, f64)> = vec![(0.0, forward)];
        for &x in grid.iter().skip(1) {
            let y = min_price(x);
            while hull.len() >= 2 {
                let (x1, y1) = hull[hull.len() - 2];
                let (x2, y2) = hull[hull.len() - 1];
                // keep turn strictly convex: cross product of (p2-p1, p3-p1)
                if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push((x, y));
        }
        hull
    };
    // Hull chords between sample points can overshoot a strictly convex
    // curve in between; refine by splitting any violated segment at its
    // midpoint until the hull is dominated everywhere.
    let tol = 1e-12 * forward.max(1.0);
    let mut hull = build_hull(&grid);
    for _ in 0..16 {
        let mut extra = Vec::new();
        for w in hull.windows(2) {
            let ((x1, y1), (x2, y2)) = (w[0], w[1]);
            let xm = 0.5 * (x1 + x2);
            if xm <= x1 || xm >= x2 {
                continue;
            }
            if 0.5 * (y1 + y2) > min_price(xm) + tol {
                extra.push(xm);
            }
        }
        if extra.is_empty() {
            break;
        }
        grid.extend(extra);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        hull = build_hull(&grid);
    }
    let (knots, values) = hull.into_iter().unzip();
    Ok(CallCurve::PiecewiseLinear { knots, values })
}

/// Pointwise maximum of the curves (automatically convex).
pub fn convex_join(curves: &[CallCurve]) -> Result<CallCurve> {
    if curves.is_empty() {
        return Err(Error::InvalidMeasure("convex_join of no curves".into()));
    }
    check_common_forward(curves)?;
    if curves.len() == 1 {
        return Ok(curves[0].clone());
    }
    Ok(CallCurve::Max(curves.to_vec()))
}

/// A strictly increasing evaluation grid on R+.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(1.0));
        if points.len() < 2 || points[0] < 0.0 || points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("grid must be >= 2 finite points on R+".into()));
        }
        Ok(Self { points })
    }

    /// Quantile grid of `m` covering `[q_lo, q_hi]` with `n` points.
    pub fn quantile(m: &Marginal, q_lo: f64, q_hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMeasure("grid needs at least 2 points".into()));
        }
        let lo = m.quantile(q_lo);
        let hi = m.quantile(q_hi);
        // Uniform in quantile space, plus the endpoints in price space.
        let mut pts = Vec::with_capacity(n + 2);
        pts.push(lo);
        for i in 1..n {
            pts.push(m.quantile(q_lo + (q_hi - q_lo) * i as f64 / n as f64));
        }
        pts.push(hi);
        Self::from_points(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Maximum spacing between consecutive points.
    pub fn max_spacing(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Local concentration of `m` onto cells around the grid points: each cell's
/// mass is placed at its conditional barycenter, yielding a measure below
/// `m` in convex order with the same mean.
pub fn discretize(m: &Marginal, grid: &Grid) -> Result<DiscreteMeasure> {
    let pts = grid.points();
    let lo = m.quantile(1e-6);
    let hi = m.quantile(1.0 - 1e-6);
    if pts[0] > lo + 1e-12 * hi.max(1.0) || *pts.last().unwrap() < hi - 1e-12 * hi.max(1.0) {
        return Err(Error::InvalidMeasure(format!(
            "grid [{}, {}] does not span the [1e-6, 1-1e-6] quantile range [{lo}, {hi}]",
            pts[0],
            pts.last().unwrap()
        )));
    }
    // Cell boundaries at midpoints; cells are (b[i-1], b[i]] with b[-1] = -inf.
    let mut bounds = Vec::with_capacity(pts.len() + 1);
    bounds.push(f64::NEG_INFINITY);
    for w in pts.windows(2) {
        bounds.push(0.5 * (w[0] + w[1]));
    }
    bounds.push(f64::INFINITY);

    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    match m {
        Marginal::Discrete(d) => {
            // Exact binning of atoms into cells.
            for i in 0..pts.len() {
                let (a, b) = (bounds[i], bounds[i + 1]);
                let mut mass = 0.0;
                let mut first = 0.0;
                for (&x, &w) in d.atoms().iter().zip(d.weights()) {
                    if x > a && x <= b {
                        mass += w;
                        first += w * x;
                    }
                }
                if mass >= 1e-14 {
                    atoms.push(first / mass);
                    weights.push(mass);
                }
            }
        }
        Marginal::Mixture(mix) => {
            for i in 0..pts.len() {
                let (a, b) = (bounds[i].max(0.0), bounds[i + 1]);
                let mut mass = 0.0;
                let mut first = 0.0;
                for c in mix.components() {
                    let fa = lognormal_cdf(c.mean, c.vol, a);
                    let fb = if b.is_finite() {
                        lognormal_cdf(c.mean, c.vol, b)
                    } else {
                        1.0
                    };
                    mass += c.weight * (fb - fa);
                    let pa = lognormal_partial_mean(c.mean, c.vol, a);
                    let pb = if b.is_finite() {
                        lognormal_partial_mean(c.mean, c.vol, b)
                    } else {
                        c.mean
                    };
                    first += c.weight * (pb - pa);
                }
                if mass >= 1e-14 {
                    atoms.push(first / mass);
                    weights.push(mass);
                }
            }
        }
    }
    // Merge any coincident conditional barycenters, then renormalize the
    // tiny mass dropped with the empty cells.
    let mut ma: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut mw: Vec<f64> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms.into_iter().zip(weights) {
        if let (Some(&last), Some(lw)) = (ma.last(), mw.last_mut()) {
            if x - last <= 1e-13 * x.abs().max(1.0) {
                let merged = (*lw * last + w * x) / (*lw + w);
                *lw += w;
                *ma.last_mut().unwrap() = merged;
                continue;
            }
        }
        ma.push(x);
        mw.push(w);
    }
    let total: f64 = mw.iter().sum();
    for w in &mut mw {
        *w /= total;
    }
    DiscreteMeasure::new(ma, mw)
}

/// The convex combination (1-gamma) s + gamma mid, as a measure.
pub fn deform(s: &Marginal, mid: &Marginal, gamma: f64) -> Result<Marginal> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidMeasure(format!("gamma {gamma} not in [0,1]")));
    }
    if (s.barycenter() - mid.barycenter()).abs() > 1e-9 * s.barycenter().abs().max(1.0) {
        return Err(Error::BarycenterMismatch {
            mu: s.barycenter(),
            nu: mid.barycenter(),
        });
    }
    if gamma == 0.0 {
        return Ok(s.clone());
    }
    if gamma == 1.0 {
        return Ok(mid.clone());
    }
    mix_measures(s, 1.0 - gamma, mid, gamma)
}

/// The 50/50 average of two measures of the same kind.
pub fn mid_marginal(bid: &Marginal, ask: &Marginal) -> Result<Marginal> {
    mix_measures(bid, 0.5, ask, 0.5)
}

fn mix_measures(a: &Marginal, wa: f64, b: &Marginal, wb: f64) -> Result<Marginal> {
    match (a, b) {
        (Marginal::Mixture(ma), Marginal::Mixture(mb)) => {
            let mut comps = Vec::with_capacity(ma.components().len() + mb.components().len());
            for c in ma.components() {
                comps.push(MixtureComponent {
                    weight: c.weight * wa,
                    ..*c
                });
            }
            for c in mb.components() {
                comps.push(MixtureComponent {
                    weight: c.weight * wb,
                    ..*c
                });
            }
            Ok(Marginal::Mixture(MixtureMarginal::new(
                comps,
                ma.maturity().map(str::to_owned),
            )?))
        }
        (Marginal::Discrete(da), Marginal::Discrete(db)) => {
            let mut pairs: Vec<(f64, f64)> = da
                .atoms()
                .iter()
                .zip(da.weights())
                .map(|(&x, &w)| (x, w * wa))
                .chain(db.atoms().iter().zip(db.weights()).map(|(&x, &w)| (x, w * wb)))
                .collect();
            pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
            let mut atoms = Vec::new();
            let mut weights: Vec<f64> = Vec::new();
            for (x, w) in pairs {
                if let Some(&last) = atoms.last() {
                    if x - last <= 1e-13 * x.abs().max(1.0) {
                        *weights.last_mut().unwrap() += w;
                        continue;
                    }
                }
                atoms.push(x);
                weights.push(w);
            }
            Ok(Marginal::Discrete(DiscreteMeasure::new(atoms, weights)?))
        }
        _ => Err(Error::InvalidMeasure(
            "cannot mix a discrete measure with a mixture".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// serde: the external JSON schemas
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MixtureJson {
    components: Vec<MixtureComponent>,
    forward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    maturity: Option<String>,
}

impl Serialize for MixtureMarginal {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        MixtureJson {
            components: self.components.clone(),
            forward: self.barycenter(),
            maturity: self.maturity.clone(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MixtureMarginal {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = MixtureJson::deserialize(de)?;
        let m = MixtureMarginal::new(raw.components, raw.maturity)
            .map_err(serde::de::Error::custom)?;
        let f = m.barycenter();
        if (f - raw.forward).abs() > 1e-9 * raw.forward.abs().max(1.0) {
            return Err(serde::de::Error::custom(format!(
                "declared forward {} does not match the barycenter {}",
                raw.forward, f
            )));
        }
        Ok(m)
    }
}

impl Serialize for Marginal {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Marginal::Discrete(m) => m.serialize(ser),
            Marginal::Mixture(m) => m.serialize(ser),
        }
    }
}

impl<'de> Deserialize<'de> for Marginal {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(de)?;
        if value.get("atoms").is_some() {
            let raw: DiscreteJson =
                serde_json::from_value(value).map_err(serde::de::Error::custom)?;
            DiscreteMeasure::new(raw.atoms, raw.weights)
                .map(Marginal::Discrete)
                .map_err(serde::de::Error::custom)
        } else {
            serde_json::from_value::<MixtureMarginal>(value)
                .map(Marginal::Mixture)
                .map_err(serde::de::Error::custom)
        }
    }
}

#[derive(Deserialize)]
struct DiscreteJson {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}
