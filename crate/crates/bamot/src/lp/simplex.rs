//! Bounded-variable two-phase revised simplex with a dense basis inverse.
//!
//! Every row `lo <= a.x <= hi` is rewritten as `a.x - s = 0` with the slack
//! `s` carrying the activity bounds, so the equality system always has a
//! zero right-hand side. Phase 1 starts from an artificial basis and
//! minimizes total infeasibility; phase 2 reuses the basis. Very tall
//! problems whose variable bounds are sign constraints are transposed and
//! solved through their dual instead.

use super::problem::{LinearProgram, LpSolution, LpStatus, Row};
use crate::error::{Error, Result};

const RC_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const DEGEN_LIMIT: usize = 60;
const REFACTOR_EVERY: usize = 64;

/// Solve the program; `Err` only for internal failures (singular basis,
/// audit failure), soft outcomes land in `LpSolution::status`.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let sense = if lp.maximize { -1.0 } else { 1.0 };
    let c: Vec<f64> = lp.c.iter().map(|&v| sense * v).collect();
    let mut sol = if should_dualize(lp) {
        solve_dualized(&c, lp)?
    } else {
        solve_direct(&c, &lp.lo, &lp.hi, &lp.rows)?
    };
    sol.value *= sense;
    if lp.maximize {
        for d in &mut sol.duals {
            *d = -*d;
        }
    }
    Ok(sol)
}

/// Dualization pays off when the problem is much taller than wide; it is
/// available when the variable bounds are pure sign constraints.
fn should_dualize(lp: &LinearProgram) -> bool {
    lp.rows.len() > 2000 && lp.rows.len() > 4 * lp.c.len() && dualizable(lp)
}

fn dualizable(lp: &LinearProgram) -> bool {
    let sign_bound = |lo: f64, hi: f64| {
        (lo == f64::NEG_INFINITY || lo == 0.0) && (hi == f64::INFINITY || hi == 0.0)
            || (lo == f64::NEG_INFINITY && hi == f64::INFINITY)
    };
    let plain_row = |r: &Row| {
        (r.lo == r.hi)
            || (r.lo.is_finite() && r.hi == f64::INFINITY)
            || (r.lo == f64::NEG_INFINITY && r.hi.is_finite())
    };
    lp.lo
        .iter()
        .zip(&lp.hi)
        .all(|(&l, &h)| sign_bound(l, h))
        && lp.rows.iter().all(plain_row)
}

/// Solve min c.x by solving the transposed program max b.y and reading the
/// original solution off the transposed row duals.
pub(crate) fn solve_dualized(c: &[f64], lp: &LinearProgram) -> Result<LpSolution> {
    let n = c.len();
    let m = lp.rows.len();

    // Dual variable y_i per row: objective coefficient is the binding side
    // of the activity range, sign from the row direction.
    let mut dc = vec![0.0; m];
    let mut dlo = vec![0.0; m];
    let mut dhi = vec![0.0; m];
    for (i, r) in lp.rows.iter().enumerate() {
        if r.lo == r.hi {
            dc[i] = r.lo;
            dlo[i] = f64::NEG_INFINITY;
            dhi[i] = f64::INFINITY;
        } else if r.hi == f64::INFINITY {
            dc[i] = r.lo;
            dlo[i] = 0.0;
            dhi[i] = f64::INFINITY;
        } else {
            dc[i] = r.hi;
            dlo[i] = f64::NEG_INFINITY;
            dhi[i] = 0.0;
        }
    }
    // Transposed rows: one per original variable, A^T y vs c_j.
    let mut tcoeffs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, r) in lp.rows.iter().enumerate() {
        for &(j, v) in &r.coeffs {
            tcoeffs[j].push((i, v));
        }
    }
    let mut drows = Vec::with_capacity(n);
    for j in 0..n {
        let (lo, hi) = if lp.lo[j] == 0.0 {
            (f64::NEG_INFINITY, c[j]) // x_j >= 0
        } else if lp.hi[j] == 0.0 {
            (c[j], f64::INFINITY) // x_j <= 0
        } else {
            (c[j], c[j]) // free
        };
        drows.push(Row {
            coeffs: std::mem::take(&mut tcoeffs[j]),
            lo,
            hi,
        });
    }
    // max b.y == min -b.y
    let neg_dc: Vec<f64> = dc.iter().map(|&v| -v).collect();
    let dual_sol = solve_direct(&neg_dc, &dlo, &dhi, &drows)?;
    let status = match dual_sol.status {
        LpStatus::Optimal => LpStatus::Optimal,
        // An infeasible transposed program means the original is unbounded
        // (or itself infeasible; callers here always build feasible duals).
        LpStatus::Infeasible => LpStatus::Unbounded,
        LpStatus::Unbounded => LpStatus::Infeasible,
        LpStatus::IterationLimit => LpStatus::IterationLimit,
    };
    if status != LpStatus::Optimal {
        return Ok(LpSolution {
            status,
            value: f64::NAN,
            x: vec![0.0; n],
            duals: vec![0.0; m],
        });
    }
    // Original optimum = max b.y = -(transposed minimum); original primal
    // values are the negated transposed row duals.
    let x: Vec<f64> = dual_sol.duals.iter().map(|&w| -w).collect();
    let value = -dual_sol.value;
    let sol = LpSolution {
        status: LpStatus::Optimal,
        value,
        x,
        duals: dual_sol.x,
    };
    audit(&sol.x, c, &lp.lo, &lp.hi, &lp.rows, 1e-6)?;
    Ok(sol)
}

struct Tableau {
    m: usize,
    /// Total variable count: structurals, slacks, artificials.
    ntot: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>, // m x m row-major
    pivots_since_refactor: usize,
}

impl Tableau {
    /// y = c_B B^-1.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[k * m + i];
                }
            }
        }
        y
    }

    /// alpha = B^-1 a_j.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(r, v) in &self.cols[j] {
            for i in 0..m {
                alpha[i] += self.binv[i * m + r] * v;
            }
        }
        alpha
    }

    /// Rebuild B^-1 from scratch and recompute the basic values.
    fn refactorize(&mut self) -> Result<()> {
        let m = self.m;
        // Dense basis matrix, columns in basis order.
        let mut a = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[j] {
                a[r * m + k] += v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        // Gauss-Jordan with partial pivoting.
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(Error::Lp("singular basis during refactorization".into()));
            }
            if piv != col {
                for k in 0..m {
                    a.swap(col * m + k, piv * m + k);
                    inv.swap(col * m + k, piv * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        a[r * m + k] -= f * a[col * m + k];
                        inv[r * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
        // inv now maps row space to basis order: x_B = -inv * (A_N x_N).
        self.binv = inv;
        let mut rhs = vec![0.0; m];
        for j in 0..self.ntot {
            if !self.in_basis[j] && self.x[j] != 0.0 {
                for &(r, v) in &self.cols[j] {
                    rhs[r] += v * self.x[j];
                }
            }
        }
        for k in 0..m {
            let mut acc = 0.0;
            for r in 0..m {
                acc += self.binv[k * m + r] * rhs[r];
            }
            self.x[self.basis[k]] = -acc;
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    /// Replace basis row r by variable q whose ftran column is alpha.
    fn eta_update(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let pivot = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= pivot;
        }
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = alpha[i];
            if f != 0.0 {
                for k in 0..m {
                    self.binv[i * m + k] -= f * self.binv[r * m + k];
                }
            }
        }
        self.pivots_since_refactor += 1;
    }

    fn run(&mut self, max_iter: usize) -> Result<LpStatus> {
        let cost_scale = 1.0
            + self
                .cost
                .iter()
                .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        let rc_tol = RC_TOL * cost_scale;
        let mut degen = 0usize;
        let mut bland = false;
        for _ in 0..max_iter {
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactorize()?;
            }
            let y = self.duals();
            // Pricing.
            let mut enter: Option<(usize, f64)> = None; // (var, direction)
            let mut best = rc_tol;
            for j in 0..self.ntot {
                if self.in_basis[j] || self.lo[j] == self.hi[j] {
                    continue;
                }
                let mut d = self.cost[j];
                for &(r, v) in &self.cols[j] {
                    d -= y[r] * v;
                }
                let at_lo = self.lo[j].is_finite()
                    && (self.x[j] - self.lo[j]).abs() <= 1e-9 * (1.0 + self.lo[j].abs());
                let at_hi = !at_lo
                    && self.hi[j].is_finite()
                    && (self.x[j] - self.hi[j]).abs() <= 1e-9 * (1.0 + self.hi[j].abs());
                let (viol, dir) = if at_lo {
                    (-d, 1.0)
                } else if at_hi {
                    (d, -1.0)
                } else {
                    // Free variable resting between bounds.
                    (d.abs(), if d < 0.0 { 1.0 } else { -1.0 })
                };
                if viol > rc_tol {
                    if bland {
                        enter = Some((j, dir));
                        break;
                    }
                    if viol > best {
                        best = viol;
                        enter = Some((j, dir));
                    }
                }
            }
            let Some((q, sigma)) = enter else {
                return Ok(LpStatus::Optimal);
            };
            let alpha = self.ftran(q);
            // Two-pass (Harris) ratio test: entering moves by sigma * t and
            // basics by -sigma t alpha. Pass 1 finds the largest step every
            // basic tolerates within a small feasibility margin; pass 2 picks
            // the largest pivot among rows blocking at that step and takes
            // that row's exact ratio, so snapping the leaving variable to its
            // bound never injects error proportional to the pivot size.
            let span = self.hi[q] - self.lo[q]; // own bound span, may be inf
            let mut t_max = span;
            for (r, &a) in alpha.iter().enumerate() {
                let d = sigma * a;
                let b = self.basis[r];
                if d > PIVOT_TOL && self.lo[b] > f64::NEG_INFINITY {
                    let margin = 1e-9 * (1.0 + self.lo[b].abs());
                    let tr = (self.x[b] - self.lo[b] + margin) / d;
                    if tr < t_max {
                        t_max = tr;
                    }
                } else if d < -PIVOT_TOL && self.hi[b] < f64::INFINITY {
                    let margin = 1e-9 * (1.0 + self.hi[b].abs());
                    let tr = (self.x[b] - self.hi[b] - margin) / d;
                    if tr < t_max {
                        t_max = tr;
                    }
                }
            }
            if t_max == f64::INFINITY {
                return Ok(LpStatus::Unbounded);
            }
            let mut best_piv = 0.0;
            let mut chosen: Option<(usize, bool, f64)> = None;
            let mut fallback: Option<(usize, bool, f64)> = None; // min exact ratio
            for (r, &a) in alpha.iter().enumerate() {
                let d = sigma * a;
                let b = self.basis[r];
                let (tr, to_lower) = if d > PIVOT_TOL && self.lo[b] > f64::NEG_INFINITY {
                    ((self.x[b] - self.lo[b]) / d, true)
                } else if d < -PIVOT_TOL && self.hi[b] < f64::INFINITY {
                    ((self.x[b] - self.hi[b]) / d, false)
                } else {
                    continue;
                };
                if tr <= t_max && a.abs() > best_piv {
                    best_piv = a.abs();
                    chosen = Some((r, to_lower, tr));
                }
                if fallback.map_or(true, |(_, _, ft)| tr < ft) {
                    fallback = Some((r, to_lower, tr));
                }
            }
            // The margins can push t_max below every exact ratio; fall back to
            // the strict minimum-ratio row in that case.
            if chosen.is_none() {
                if let Some(f) = fallback {
                    if f.2 <= t_max || !span.is_finite() || f.2 <= span {
                        chosen = Some(f);
                    }
                }
            }
            let (t, leave) = match chosen {
                Some((r, to_lower, tr)) => (tr.max(0.0), Some((r, to_lower))),
                None => {
                    if !span.is_finite() {
                        return Ok(LpStatus::Unbounded);
                    }
                    (span, None)
                }
            };
            // Apply the step.
            for (r, &a) in alpha.iter().enumerate() {
                self.x[self.basis[r]] -= sigma * t * a;
            }
            self.x[q] += sigma * t;
            match leave {
                None => {
                    // Bound flip: snap exactly to the other bound.
                    self.x[q] = if sigma > 0.0 { self.hi[q] } else { self.lo[q] };
                    degen = 0;
                }
                Some((r, to_lower)) => {
                    let b = self.basis[r];
                    self.x[b] = if to_lower { self.lo[b] } else { self.hi[b] };
                    self.in_basis[b] = false;
                    self.in_basis[q] = true;
                    self.basis[r] = q;
                    self.eta_update(r, &alpha);
                    if t <= 1e-10 {
                        degen += 1;
                        if degen > DEGEN_LIMIT {
                            bland = true;
                        }
                    } else {
                        degen = 0;
                        bland = false;
                    }
                }
            }
        }
        Ok(LpStatus::IterationLimit)
    }
}

pub(crate) fn solve_direct(
    c: &[f64],
    vlo: &[f64],
    vhi: &[f64],
    rows: &[Row],
) -> Result<LpSolution> {
    let n = c.len();
    let m = rows.len();
    if m == 0 {
        return solve_unconstrained(c, vlo, vhi);
    }
    let ntot = n + 2 * m; // structurals, slacks, artificials

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ntot];
    for (i, r) in rows.iter().enumerate() {
        for &(j, v) in &r.coeffs {
            debug_assert!(j < n);
            cols[j].push((i, v));
        }
        cols[n + i].push((i, -1.0)); // slack
    }
    let mut lo = vlo.to_vec();
    let mut hi = vhi.to_vec();
    for r in rows {
        lo.push(r.lo);
        hi.push(r.hi);
    }

    // Start nonbasic variables at their nearest finite bound.
    let mut x = vec![0.0; ntot];
    for j in 0..n + m {
        x[j] = if lo[j].is_finite() {
            lo[j]
        } else if hi[j].is_finite() {
            hi[j]
        } else {
            0.0
        };
    }
    // Residual of A x = 0 absorbed by the artificial basis.
    let mut resid = vec![0.0; m];
    for j in 0..n + m {
        if x[j] != 0.0 {
            for &(i, v) in &cols[j] {
                resid[i] += v * x[j];
            }
        }
    }
    let mut basis = Vec::with_capacity(m);
    let mut in_basis = vec![false; ntot];
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        let s = if -resid[i] >= 0.0 { 1.0 } else { -1.0 };
        let aj = n + m + i;
        cols[aj].push((i, s));
        lo.push(0.0);
        hi.push(f64::INFINITY);
        x[aj] = resid[i].abs();
        basis.push(aj);
        in_basis[aj] = true;
        binv[i * m + i] = s;
    }
    debug_assert_eq!(lo.len(), ntot);

    let mut phase1_cost = vec![0.0; ntot];
    for j in n + m..ntot {
        phase1_cost[j] = 1.0;
    }
    let mut tab = Tableau {
        m,
        ntot,
        cols,
        lo,
        hi,
        x,
        cost: phase1_cost,
        basis,
        in_basis,
        binv,
        pivots_since_refactor: 0,
    };
    let max_iter = 200_000.min(50 * (m + n) + 10_000);

    // Phase 1.
    let status = tab.run(max_iter)?;
    if status == LpStatus::IterationLimit {
        return Ok(empty_solution(LpStatus::IterationLimit, n, m));
    }
    let infeas: f64 = (n + m..ntot).map(|j| tab.x[j]).sum();
    let scale = rows
        .iter()
        .flat_map(|r| [r.lo, r.hi])
        .filter(|v| v.is_finite())
        .fold(1.0f64, |a, v| a.max(v.abs()));
    if infeas > 1e-7 * scale {
        return Ok(empty_solution(LpStatus::Infeasible, n, m));
    }
    // Pin artificials at zero for phase 2.
    for j in n + m..ntot {
        tab.lo[j] = 0.0;
        tab.hi[j] = 0.0;
        tab.x[j] = tab.x[j].max(0.0).min(1e-9);
    }
    tab.cost = c.to_vec();
    tab.cost.resize(ntot, 0.0);
    tab.refactorize()?;

    // Phase 2.
    let status = tab.run(max_iter)?;
    if status != LpStatus::Optimal {
        return Ok(empty_solution(status, n, m));
    }
    tab.refactorize()?;
    let y = tab.duals();
    let value: f64 = (0..n).map(|j| c[j] * tab.x[j]).sum();
    let sol = LpSolution {
        status: LpStatus::Optimal,
        value,
        x: tab.x[..n].to_vec(),
        duals: y,
    };
    audit(&sol.x, c, vlo, vhi, rows, 1e-7)?;
    Ok(sol)
}

fn empty_solution(status: LpStatus, n: usize, m: usize) -> LpSolution {
    LpSolution {
        status,
        value: f64::NAN,
        x: vec![0.0; n],
        duals: vec![0.0; m],
    }
}

fn solve_unconstrained(c: &[f64], lo: &[f64], hi: &[f64]) -> Result<LpSolution> {
    let mut x = vec![0.0; c.len()];
    let mut value = 0.0;
    for j in 0..c.len() {
        let v = if c[j] > 0.0 {
            lo[j]
        } else if c[j] < 0.0 {
            hi[j]
        } else if lo[j].is_finite() {
            lo[j]
        } else {
            hi[j].min(0.0)
        };
        if !v.is_finite() && c[j] != 0.0 {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                value: f64::NEG_INFINITY,
                x,
                duals: Vec::new(),
            });
        }
        x[j] = if v.is_finite() { v } else { 0.0 };
        value += c[j] * x[j];
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        x,
        duals: Vec::new(),
    })
}

/// Post-solve feasibility audit with a relative tolerance.
fn audit(x: &[f64], _c: &[f64], lo: &[f64], hi: &[f64], rows: &[Row], tol: f64) -> Result<()> {
    for (j, &v) in x.iter().enumerate() {
        let s = tol * (1.0 + v.abs());
        if v < lo[j] - s || v > hi[j] + s {
            return Err(Error::Lp(format!(
                "solution audit: x{j} = {v} outside [{}, {}]",
                lo[j], hi[j]
            )));
        }
    }
    for (i, r) in rows.iter().enumerate() {
        let mut act = 0.0;
        let mut mag = 1.0f64;
        for &(j, v) in &r.coeffs {
            act += v * x[j];
            mag = mag.max((v * x[j]).abs());
        }
        let s = tol * mag;
        if act < r.lo - s || act > r.hi + s {
            return Err(Error::Lp(format!(
                "solution audit: row {i} activity {act} outside [{}, {}]",
                r.lo, r.hi
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LinearProgram, Relation};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_corner() {
        let mut lp = LinearProgram::minimize(vec![-1.0, -2.0, 3.0]);
        for j in 0..3 {
            lp.set_bounds(j, 0.0, 1.0);
        }
        lp.add_constraint(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Le, 10.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - (-3.0)).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9 && s.x[2] < 1e-9);
    }

    #[test]
    fn knapsack_relaxation() {
        // max x + y, x + y <= 1, x,y >= 0
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 1.0).abs() < 1e-9);
        // Dual of the binding <= row in a max problem is >= 0 and equals 1.
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x0 + x1 with x0 free, x0 + x1 = 3, x0 - x1 >= -1, x1 in [0, 4]
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.set_free(0);
        lp.set_bounds(1, 0.0, 4.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 3.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Ge, -1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        // Objective is constant 3 on the equality.
        assert!((s.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::minimize(vec![-1.0]);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 0.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn range_row() {
        // min x, 2 <= x + y <= 5, y in [0, 1]
        let mut lp = LinearProgram::minimize(vec![1.0, 0.0]);
        lp.set_bounds(1, 0.0, 1.0);
        lp.add_range_constraint(vec![(0, 1.0), (1, 1.0)], 2.0, 5.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_transportation() {
        // Transportation-style LP with many ties.
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0, 1.0, 1.0]);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(2, 1.0), (3, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(0, 1.0), (2, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(1, 1.0), (3, 1.0)], Relation::Eq, 1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 2.0).abs() < 1e-9);
    }

    fn random_feasible_lp(rng: &mut impl Rng, n: usize, m: usize) -> (LinearProgram, Vec<f64>) {
        // x >= 0, a known interior point guarantees feasibility; positive
        // costs guarantee boundedness.
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let mut lp = LinearProgram::minimize(c);
        for _ in 0..m {
            let coeffs: Vec<(usize, f64)> = (0..n)
                .filter(|_| rng.gen_bool(0.6))
                .map(|_| 0)
                .collect::<Vec<_>>()
                .iter()
                .map(|_| (rng.gen_range(0..n), rng.gen_range(-1.0..1.0)))
                .collect();
            if coeffs.is_empty() {
                continue;
            }
            let act: f64 = coeffs.iter().map(|&(j, v)| v * x0[j]).sum();
            lp.add_constraint(coeffs, Relation::Ge, act - rng.gen_range(0.0..0.5));
        }
        (lp, x0)
    }

    #[test]
    fn dualized_matches_direct_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..40 {
            let (lp, _) = random_feasible_lp(&mut rng, 6, 12);
            let c = lp.c.clone();
            let direct = solve_direct(&c, &lp.lo, &lp.hi, &lp.rows).unwrap();
            let dual = solve_dualized(&c, &lp).unwrap();
            assert_eq!(direct.status, LpStatus::Optimal);
            assert_eq!(dual.status, LpStatus::Optimal);
            assert!(
                (direct.value - dual.value).abs() < 1e-7 * (1.0 + direct.value.abs()),
                "direct {} vs dualized {}",
                direct.value,
                dual.value
            );
            // Recovered point must be feasible with the right objective.
            let val: f64 = c.iter().zip(&dual.x).map(|(a, b)| a * b).sum();
            assert!((val - dual.value).abs() < 1e-7 * (1.0 + val.abs()));
        }
    }

    #[test]
    fn duals_price_binding_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (lp, _) = random_feasible_lp(&mut rng, 5, 8);
            let s = solve(&lp).unwrap();
            assert_eq!(s.status, LpStatus::Optimal);
            // Strong duality: b.y == value for >=-row LPs with x >= 0.
            let mut by = 0.0;
            for (r, &y) in lp.rows.iter().zip(&s.duals) {
                assert!(y >= -1e-9, ">= row dual must be nonnegative, got {y}");
                by += r.lo * y;
            }
            assert!(
                (by - s.value).abs() < 1e-6 * (1.0 + s.value.abs()),
                "b.y = {by} vs value {}",
                s.value
            );
        }
    }

    #[test]
    fn maximize_flips_signs_consistently() {
        let mut lp = LinearProgram::maximize(vec![2.0]);
        lp.set_bounds(0, 0.0, 3.0);
        let s = solve(&lp).unwrap();
        assert!((s.value - 6.0).abs() < 1e-12);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn larger_random_lp_is_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (lp, _) = random_feasible_lp(&mut rng, 60, 120);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        let val: f64 = lp.c.iter().zip(&s.x).map(|(a, b)| a * b).sum();
        assert!((val - s.value).abs() < 1e-7 * (1.0 + val.abs()));
    }
}
