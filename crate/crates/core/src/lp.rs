//! Dense two-phase simplex.
//!
//! Small problems only: the tableau is stored densely and rebuilt from scratch
//! on every call. Pricing is Dantzig's rule until a run of degenerate pivots
//! suggests cycling, after which Bland's rule takes over.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarBounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl VarBounds {
    pub const FREE: VarBounds = VarBounds {
        lower: None,
        upper: None,
    };

    pub fn nonneg() -> Self {
        VarBounds {
            lower: Some(0.0),
            upper: None,
        }
    }

    pub fn fixed(v: f64) -> Self {
        VarBounds {
            lower: Some(v),
            upper: Some(v),
        }
    }

    pub fn between(lo: f64, hi: f64) -> Self {
        VarBounds {
            lower: Some(lo),
            upper: Some(hi),
        }
    }

    pub fn at_least(lo: f64) -> Self {
        VarBounds {
            lower: Some(lo),
            upper: None,
        }
    }

    pub fn at_most(hi: f64) -> Self {
        VarBounds {
            lower: None,
            upper: Some(hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `minimize objectiveᵀx` over rows and per-variable bounds. Variables are free
/// unless bounded with [`set_bounds`](Self::set_bounds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub bounds: Vec<VarBounds>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let p = objective.len();
        LinearProgram {
            objective,
            rows: Vec::new(),
            bounds: vec![VarBounds::FREE; p],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> &mut Self {
        self.rows.push(Row { coeffs, sense, rhs });
        self
    }

    pub fn set_bounds(&mut self, j: usize, bounds: VarBounds) -> &mut Self {
        self.bounds[j] = bounds;
        self
    }

    fn check(&self) -> Result<()> {
        let p = self.num_vars();
        if self.bounds.len() != p {
            return Err(Error::DimensionMismatch {
                field: "var_bounds".into(),
                expected: p,
                found: self.bounds.len(),
            });
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                field: "objective".into(),
            });
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != p {
                return Err(Error::DimensionMismatch {
                    field: format!("rows[{k}]"),
                    expected: p,
                    found: row.coeffs.len(),
                });
            }
            if row.coeffs.iter().any(|v| !v.is_finite()) || !row.rhs.is_finite() {
                return Err(Error::NonFinite {
                    field: format!("rows[{k}]"),
                });
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower.is_some_and(|v| v.is_nan() || v == f64::INFINITY)
                || b.upper.is_some_and(|v| v.is_nan() || v == f64::NEG_INFINITY)
            {
                return Err(Error::NonFinite {
                    field: format!("var_bounds[{j}]"),
                });
            }
            if let (Some(lo), Some(hi)) = (b.lower, b.upper) {
                if lo > hi {
                    return Err(Error::Precondition(format!("variable {j} has lower bound above upper bound")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// One multiplier per row: ≥ 0 on `Ge` rows, ≤ 0 on `Le` rows.
    pub duals: Vec<f64>,
    /// `objective − Σ duals_r · rows_r`; the bound multipliers.
    pub reduced_costs: Vec<f64>,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible { phase_one: f64 },
    /// A feasible direction along which the objective decreases.
    Unbounded { ray: Vec<f64> },
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.optimal().map(|s| s.value)
    }
}

/// Original variable j expressed through nonnegative standard columns.
struct VarMap {
    offset: f64,
    terms: Vec<(usize, f64)>,
}

struct Standard {
    maps: Vec<VarMap>,
    ncols: usize,
    cost: Vec<f64>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
    /// Number of leading rows that came from the user (the rest encode bounds).
    user_rows: usize,
}

fn standardize(lp: &LinearProgram) -> Standard {
    let mut maps = Vec::with_capacity(lp.num_vars());
    let mut ncols = 0;
    let mut bound_rows = Vec::new();
    for b in &lp.bounds {
        let map = match (b.lower, b.upper) {
            (Some(lo), Some(hi)) if lo == hi => VarMap {
                offset: lo,
                terms: vec![],
            },
            (Some(lo), Some(hi)) if lo.is_finite() && hi.is_finite() => {
                bound_rows.push((ncols, hi - lo));
                ncols += 1;
                VarMap {
                    offset: lo,
                    terms: vec![(ncols - 1, 1.0)],
                }
            }
            (Some(lo), _) if lo.is_finite() => {
                ncols += 1;
                VarMap {
                    offset: lo,
                    terms: vec![(ncols - 1, 1.0)],
                }
            }
            (_, Some(hi)) if hi.is_finite() => {
                ncols += 1;
                VarMap {
                    offset: hi,
                    terms: vec![(ncols - 1, -1.0)],
                }
            }
            _ => {
                ncols += 2;
                VarMap {
                    offset: 0.0,
                    terms: vec![(ncols - 2, 1.0), (ncols - 1, -1.0)],
                }
            }
        };
        maps.push(map);
    }
    let mut cost = vec![0.0; ncols];
    for (j, map) in maps.iter().enumerate() {
        for &(k, s) in &map.terms {
            cost[k] += s * lp.objective[j];
        }
    }
    let mut rows = Vec::with_capacity(lp.rows.len() + bound_rows.len());
    for row in &lp.rows {
        let mut dense = vec![0.0; ncols];
        let mut rhs = row.rhs;
        for (j, map) in maps.iter().enumerate() {
            let a = row.coeffs[j];
            if a == 0.0 {
                continue;
            }
            rhs -= a * map.offset;
            for &(k, s) in &map.terms {
                dense[k] += s * a;
            }
        }
        rows.push((dense, row.sense, rhs));
    }
    for (k, cap) in bound_rows {
        let mut dense = vec![0.0; ncols];
        dense[k] = 1.0;
        rows.push((dense, Sense::Le, cap));
    }
    Standard {
        maps,
        ncols,
        cost,
        rows,
        user_rows: lp.rows.len(),
    }
}

struct Tableau {
    /// rows × (cols + 1); last column is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Reduced-cost row, same width; last entry is minus the objective value.
    d: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
    cap: usize,
}

enum Phase {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn pivot(&mut self, r: usize, k: usize) {
        let w = self.cols + 1;
        let piv = self.t[r][k];
        for v in self.t[r].iter_mut() {
            *v /= piv;
        }
        self.t[r][k] = 1.0;
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[k];
            if f == 0.0 {
                continue;
            }
            for c in 0..w {
                row[c] -= f * prow[c];
                if row[c].abs() < 1e-14 {
                    row[c] = 0.0;
                }
            }
            row[k] = 0.0;
        }
        let f = self.d[k];
        if f != 0.0 {
            for c in 0..w {
                self.d[c] -= f * prow[c];
            }
            self.d[k] = 0.0;
        }
        self.basis[r] = k;
        self.pivots += 1;
    }

    /// Runs simplex iterations; columns with `allowed[k] == false` never enter.
    fn run(&mut self, allowed: &[bool]) -> Result<Phase> {
        let rhs = self.cols;
        let bland_after = 10 * (self.cols + self.t.len());
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.pivots >= self.cap {
                return Err(Error::NumericalFailure(format!("iteration limit {} reached", self.cap)));
            }
            let entering = if bland {
                (0..self.cols).find(|&k| allowed[k] && self.d[k] < -OPT_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for k in 0..self.cols {
                    if allowed[k] && self.d[k] < -OPT_TOL && best.is_none_or(|(_, v)| self.d[k] < v) {
                        best = Some((k, self.d[k]));
                    }
                }
                best.map(|(k, _)| k)
            };
            let Some(k) = entering else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.t.iter().enumerate() {
                let a = row[k];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = row[rhs].max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, bv)) => {
                        if ratio < bv - PIVOT_TOL || (ratio <= bv + PIVOT_TOL && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bv))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Ok(Phase::Unbounded(k));
            };
            if ratio <= PIVOT_TOL {
                degenerate += 1;
                if degenerate >= bland_after {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, k);
        }
    }

    fn reset_costs(&mut self, cost: &[f64]) {
        let w = self.cols + 1;
        self.d = vec![0.0; w];
        self.d[..cost.len()].copy_from_slice(cost);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = if b < cost.len() { cost[b] } else { 0.0 };
            if cb != 0.0 {
                for c in 0..w {
                    self.d[c] -= cb * self.t[r][c];
                }
            }
        }
    }
}

/// Solves `lp`. Deterministic: identical inputs yield identical outcomes.
static INVOCATIONS: AtomicU64 = AtomicU64::new(0);

/// Number of [`solve_lp`] calls made by this process so far.
pub fn invocations() -> u64 {
    INVOCATIONS.load(Ordering::Relaxed)
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    INVOCATIONS.fetch_add(1, Ordering::Relaxed);
    lp.check()?;
    let std = standardize(lp);
    let n = std.ncols;
    let m = std.rows.len();

    // Columns: structural [0, n), one slack/surplus per inequality row, then
    // one artificial per Ge/Eq row. `unit[r]` is the column equal to +e_r.
    let mut flipped = vec![false; m];
    let mut senses = Vec::with_capacity(m);
    for (r, (_, sense, rhs)) in std.rows.iter().enumerate() {
        let mut s = *sense;
        if *rhs < 0.0 {
            flipped[r] = true;
            s = match s {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        senses.push(s);
    }
    let n_slack = senses.iter().filter(|s| **s != Sense::Eq).count();
    let n_art = senses.iter().filter(|s| **s != Sense::Le).count();
    let cols = n + n_slack + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let mut unit = vec![0; m];
    let mut is_art = vec![false; cols];
    let mut next_slack = n;
    let mut next_art = n + n_slack;
    for r in 0..m {
        let sign = if flipped[r] { -1.0 } else { 1.0 };
        let (coeffs, _, rhs) = &std.rows[r];
        for k in 0..n {
            t[r][k] = sign * coeffs[k];
        }
        t[r][cols] = sign * rhs;
        match senses[r] {
            Sense::Le => {
                t[r][next_slack] = 1.0;
                basis[r] = next_slack;
                unit[r] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t[r][next_slack] = -1.0;
                next_slack += 1;
                t[r][next_art] = 1.0;
                is_art[next_art] = true;
                basis[r] = next_art;
                unit[r] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t[r][next_art] = 1.0;
                is_art[next_art] = true;
                basis[r] = next_art;
                unit[r] = next_art;
                next_art += 1;
            }
        }
    }
    let cap = 10_000usize.max(50 * (cols + m));
    let mut tab = Tableau {
        t,
        d: Vec::new(),
        basis,
        cols,
        pivots: 0,
        cap,
    };

    if n_art > 0 {
        let phase_one: Vec<f64> = (0..cols).map(|k| if is_art[k] { 1.0 } else { 0.0 }).collect();
        tab.reset_costs(&phase_one);
        let all = vec![true; cols];
        tab.run(&all)?;
        let infeas = -tab.d[cols];
        if infeas > FEAS_TOL {
            return Ok(LpOutcome::Infeasible { phase_one: infeas });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if !is_art[tab.basis[r]] {
                continue;
            }
            let k = (0..cols)
                .filter(|&k| !is_art[k])
                .max_by(|&a, &b| tab.t[r][a].abs().total_cmp(&tab.t[r][b].abs()).then(b.cmp(&a)));
            if let Some(k) = k {
                if tab.t[r][k].abs() > 1e-9 {
                    tab.pivot(r, k);
                }
            }
        }
    }

    let mut cost = std.cost.clone();
    cost.resize(cols, 0.0);
    tab.reset_costs(&cost);
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    match tab.run(&allowed)? {
        Phase::Unbounded(k) => {
            let mut dir = vec![0.0; cols];
            dir[k] = 1.0;
            for (r, &b) in tab.basis.iter().enumerate() {
                dir[b] = -tab.t[r][k];
            }
            let ray = std
                .maps
                .iter()
                .map(|map| map.terms.iter().map(|&(c, s)| s * dir[c]).sum())
                .collect();
            Ok(LpOutcome::Unbounded { ray })
        }
        Phase::Optimal => {
            let mut s = vec![0.0; cols];
            for (r, &b) in tab.basis.iter().enumerate() {
                s[b] = tab.t[r][cols];
            }
            let x: Vec<f64> = std
                .maps
                .iter()
                .map(|map| map.offset + map.terms.iter().map(|&(c, sgn)| sgn * s[c]).sum::<f64>())
                .collect();
            let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            let duals: Vec<f64> = (0..std.user_rows)
                .map(|r| {
                    let y = -tab.d[unit[r]];
                    if flipped[r] {
                        -y
                    } else {
                        y
                    }
                })
                .collect();
            let mut reduced_costs = lp.objective.clone();
            for (row, y) in lp.rows.iter().zip(&duals) {
                for (rc, a) in reduced_costs.iter_mut().zip(&row.coeffs) {
                    *rc -= y * a;
                }
            }
            let worst = lp
                .rows
                .iter()
                .map(|row| row_violation(row, &x) / (1.0 + row.rhs.abs()))
                .fold(0.0, f64::max);
            if worst > 1e-7 {
                return Err(Error::NumericalFailure(format!("row residual {worst:.3e} after simplex")));
            }
            Ok(LpOutcome::Optimal(LpSolution {
                x,
                value,
                duals,
                reduced_costs,
                pivots: tab.pivots,
            }))
        }
    }
}

/// How far `x` is from satisfying `row` (0 when satisfied).
pub fn row_violation(row: &Row, x: &[f64]) -> f64 {
    let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
    match row.sense {
        Sense::Le => (lhs - row.rhs).max(0.0),
        Sense::Ge => (row.rhs - lhs).max(0.0),
        Sense::Eq => (lhs - row.rhs).abs(),
    }
}

/// Solves each program independently; outcomes are returned in input order.
pub fn solve_lp_batch(lps: &[LinearProgram]) -> Vec<Result<LpOutcome>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        lps.par_iter().map(solve_lp).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        lps.iter().map(solve_lp).collect()
    }
}
