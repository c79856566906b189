//! Problem container for linear programs with bounded variables and ranged
//! constraints.

use std::fmt::Write as _;

/// Relation of a constraint row to its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: Vec<(usize, f64)>,
    /// Lower bound on the row activity (may be -inf).
    pub lo: f64,
    /// Upper bound on the row activity (may be +inf).
    pub hi: f64,
}

/// min (or max) c.x subject to row-activity bounds and variable bounds.
/// Variables default to [0, +inf).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub(crate) c: Vec<f64>,
    pub(crate) lo: Vec<f64>,
    pub(crate) hi: Vec<f64>,
    pub(crate) rows: Vec<Row>,
    pub(crate) maximize: bool,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            c: objective,
            lo: vec![0.0; n],
            hi: vec![f64::INFINITY; n],
            rows: Vec::new(),
            maximize: false,
        }
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        let mut lp = Self::minimize(objective);
        lp.maximize = true;
        lp
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        assert!(lo <= hi, "variable {j}: lower bound {lo} above upper {hi}");
        self.lo[j] = lo;
        self.hi[j] = hi;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        let (lo, hi) = match rel {
            Relation::Le => (f64::NEG_INFINITY, rhs),
            Relation::Eq => (rhs, rhs),
            Relation::Ge => (rhs, f64::INFINITY),
        };
        self.rows.push(Row {
            coeffs: coalesce(coeffs),
            lo,
            hi,
        });
    }

    /// lo <= a.x <= hi in a single row.
    pub fn add_range_constraint(&mut self, coeffs: Vec<(usize, f64)>, lo: f64, hi: f64) {
        assert!(lo <= hi, "range row: lower bound {lo} above upper {hi}");
        self.rows.push(Row {
            coeffs: coalesce(coeffs),
            lo,
            hi,
        });
    }

    /// Plain-text dump for debugging and bug reports.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sense = if self.maximize { "max" } else { "min" };
        let _ = writeln!(s, "{sense} {:?}", self.c);
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(s, "r{i}: {} <= {:?} <= {}", r.lo, r.coeffs, r.hi);
        }
        for j in 0..self.c.len() {
            let _ = writeln!(s, "x{j} in [{}, {}]", self.lo[j], self.hi[j]);
        }
        s
    }
}

/// Merge duplicate variable indices so each row stores one entry per column.
fn coalesce(mut coeffs: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    coeffs.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
    for (j, v) in coeffs {
        match out.last_mut() {
            Some((lj, lv)) if *lj == j => *lv += v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|&(_, v)| v != 0.0);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Solver output. `duals` holds one multiplier per constraint row, in the
/// convention of the stated objective sense (for `minimize`: >= rows carry
/// nonnegative duals, <= rows nonpositive ones).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
}
