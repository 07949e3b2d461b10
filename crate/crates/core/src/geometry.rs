//! Norms, closed-form projections, robust row realizations, the budgeted
//! protection function and its continuous-knapsack structure.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ForwardProblem, FEAS_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

impl NormKind {
    pub fn dual(self) -> NormKind {
        match self {
            NormKind::L1 => NormKind::Linf,
            NormKind::L2 => NormKind::L2,
            NormKind::Linf => NormKind::L1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::Linf => "linf",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "l2" => Ok(NormKind::L2),
            "linf" | "l-inf" | "inf" => Ok(NormKind::Linf),
            _ => Err(Error::Precondition(format!("unknown norm `{s}`"))),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// sgn with sgn(0) = +1.
pub fn sgn(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn norm(x: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::L1 => x.iter().map(|v| v.abs()).sum(),
        NormKind::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::Linf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// ‖x‖* for the dual of `kind`.
pub fn dual_norm(x: &[f64], kind: NormKind) -> f64 {
    norm(x, kind.dual())
}

/// A unit vector v (in `kind`) with xᵀv = ‖x‖*.
pub fn dual_norm_maximizer(x: &[f64], kind: NormKind) -> Result<Vec<f64>> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(match kind {
        NormKind::L2 => {
            let n = norm(x, NormKind::L2);
            x.iter().map(|v| v / n).collect()
        }
        NormKind::L1 => {
            let mut k = 0;
            for (j, v) in x.iter().enumerate() {
                if v.abs() > x[k].abs() {
                    k = j;
                }
            }
            let mut v = vec![0.0; x.len()];
            v[k] = sgn(x[k]);
            v
        }
        NormKind::Linf => x.iter().map(|v| sgn(*v)).collect(),
    })
}

/// Closest point (in `kind`) to `a_hat` on {a : aᵀx̂ = b}, and its distance.
pub fn project_hyperplane(a_hat: &[f64], x_hat: &[f64], b: f64, kind: NormKind) -> Result<(Vec<f64>, f64)> {
    let v = dual_norm_maximizer(x_hat, kind)?;
    let dn = dual_norm(x_hat, kind);
    let r = dot(a_hat, x_hat) - b;
    let step = r / dn;
    let a: Vec<f64> = a_hat.iter().zip(&v).map(|(a, v)| a - step * v).collect();
    Ok((a, r.abs() / dn))
}

/// Closest point to `a_hat` on {a : aᵀx̂ ≥ b}, and its distance.
pub fn project_halfspace(a_hat: &[f64], x_hat: &[f64], b: f64, kind: NormKind) -> Result<(Vec<f64>, f64)> {
    if x_hat.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    if dot(a_hat, x_hat) >= b {
        Ok((a_hat.to_vec(), 0.0))
    } else {
        project_hyperplane(a_hat, x_hat, b, kind)
    }
}

fn check_alpha(alpha: &[f64], cols: &[usize]) -> Result<()> {
    if alpha.len() != cols.len() {
        return Err(Error::DimensionMismatch {
            field: "alpha".into(),
            expected: cols.len(),
            found: alpha.len(),
        });
    }
    if alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
        return Err(Error::Precondition("alpha must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Row i at the worst case of the interval set: a_ij − sgn(x_j)α_ij on J_i.
/// `alpha[k]` belongs to column `cols[k]`.
pub fn realized_row_interval(a: &[f64], alpha: &[f64], cols: &[usize], x: &[f64]) -> Result<Vec<f64>> {
    check_alpha(alpha, cols)?;
    let mut row = a.to_vec();
    for (&j, &al) in cols.iter().zip(alpha) {
        row[j] -= sgn(x[j]) * al;
    }
    Ok(row)
}

/// Uncertain columns sorted by α_ij|x_j|, largest first, ties by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedUncertainty {
    /// Positions into `cols`/`alpha`, in sorted order.
    pub order: Vec<usize>,
    pub values: Vec<f64>,
}

impl SortedUncertainty {
    pub fn new(alpha: &[f64], cols: &[usize], x: &[f64]) -> Result<Self> {
        check_alpha(alpha, cols)?;
        let raw: Vec<f64> = cols.iter().zip(alpha).map(|(&j, a)| a * x[j].abs()).collect();
        let mut order: Vec<usize> = (0..cols.len()).collect();
        order.sort_by(|&p, &q| raw[q].total_cmp(&raw[p]).then(cols[p].cmp(&cols[q])));
        let values = order.iter().map(|&p| raw[p]).collect();
        Ok(SortedUncertainty { order, values })
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// max over φ ∈ [0,1]^J, Σφ ≤ Γ of Σ values·φ.
    pub fn protection(&self, gamma: f64) -> f64 {
        let full = gamma.floor() as usize;
        let frac = gamma - gamma.floor();
        let mut total: f64 = self.values.iter().take(full).sum();
        if let Some(v) = self.values.get(full) {
            total += frac * v;
        }
        total
    }
}

fn check_gamma(gamma: f64, len: usize) -> Result<f64> {
    let hi = len as f64;
    if !gamma.is_finite() || gamma < -FEAS_TOL || gamma > hi + FEAS_TOL {
        return Err(Error::Precondition(format!("budget {gamma} outside [0, {len}]")));
    }
    Ok(gamma.clamp(0.0, hi))
}

pub fn protection_value(alpha: &[f64], gamma: f64, cols: &[usize], x: &[f64]) -> Result<f64> {
    let gamma = check_gamma(gamma, cols.len())?;
    Ok(SortedUncertainty::new(alpha, cols, x)?.protection(gamma))
}

/// Row i at the worst case of the budgeted set: the ⌊Γ⌋ largest deviations
/// in full and the next one by the fractional part of Γ.
pub fn realized_row_cardinality(a: &[f64], alpha: &[f64], gamma: f64, cols: &[usize], x: &[f64]) -> Result<Vec<f64>> {
    let gamma = check_gamma(gamma, cols.len())?;
    let sorted = SortedUncertainty::new(alpha, cols, x)?;
    let (phi, _) = knapsack_sorted(&sorted, gamma);
    let mut row = a.to_vec();
    for (k, &j) in cols.iter().enumerate() {
        row[j] -= sgn(x[j]) * alpha[k] * phi[k];
    }
    Ok(row)
}

pub(crate) fn knapsack_sorted(sorted: &SortedUncertainty, capacity: f64) -> (Vec<f64>, f64) {
    let mut phi = vec![0.0; sorted.order.len()];
    let mut left = capacity.max(0.0);
    let mut total = 0.0;
    for (&p, &v) in sorted.order.iter().zip(&sorted.values) {
        if left <= 0.0 {
            break;
        }
        let take = left.min(1.0);
        phi[p] = take;
        total += take * v;
        left -= take;
    }
    (phi, total)
}

/// Greedy fractional knapsack with unit weights: fills the largest values
/// first (ties by position). Returns φ in input order and the total.
pub fn knapsack_continuous(values: &[f64], capacity: f64) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&p, &q| values[q].total_cmp(&values[p]).then(p.cmp(&q)));
    let sorted = SortedUncertainty {
        values: order.iter().map(|&p| values[p]).collect(),
        order,
    };
    knapsack_sorted(&sorted, capacity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotApplicableReason {
    NominallyInfeasible,
    SurplusExceedsProtection,
}

/// Budgets at which row i of the budgeted counterpart is exactly active at x̂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GammaBar {
    Unique { value: f64 },
    /// Every Γ in `[value, over]` makes the row active.
    Interval { value: f64, over: f64 },
    NotApplicable { reason: NotApplicableReason },
}

impl GammaBar {
    /// Smallest activating budget, if any.
    pub fn value(&self) -> Option<f64> {
        match *self {
            GammaBar::Unique { value } | GammaBar::Interval { value, .. } => Some(value),
            GammaBar::NotApplicable { .. } => None,
        }
    }

    /// Largest activating budget, if any.
    pub fn over(&self) -> Option<f64> {
        match *self {
            GammaBar::Unique { value } => Some(value),
            GammaBar::Interval { over, .. } => Some(over),
            GammaBar::NotApplicable { .. } => None,
        }
    }
}

static GAMMA_BAR_CALLS: AtomicU64 = AtomicU64::new(0);

/// Number of [`gamma_bar`] evaluations made by this process so far.
pub fn gamma_bar_invocations() -> u64 {
    GAMMA_BAR_CALLS.load(Ordering::Relaxed)
}

/// Minimal budget whose protection equals the nominal surplus of row i at x̂,
/// by inverting the sorted cumulative sums.
pub fn gamma_bar(problem: &ForwardProblem, i: usize, cols: &[usize], alpha: &[f64], x: &[f64]) -> Result<GammaBar> {
    GAMMA_BAR_CALLS.fetch_add(1, Ordering::Relaxed);
    let surplus = problem.surplus(i, x);
    let sorted = SortedUncertainty::new(alpha, cols, x)?;
    Ok(gamma_bar_sorted(surplus, &sorted))
}

pub(crate) fn gamma_bar_sorted(surplus: f64, sorted: &SortedUncertainty) -> GammaBar {
    if surplus < -FEAS_TOL {
        return GammaBar::NotApplicable {
            reason: NotApplicableReason::NominallyInfeasible,
        };
    }
    let total = sorted.total();
    if surplus > total + FEAS_TOL {
        return GammaBar::NotApplicable {
            reason: NotApplicableReason::SurplusExceedsProtection,
        };
    }
    let len = sorted.values.len();
    let mut value = len as f64;
    let mut cum = 0.0;
    for (k, &v) in sorted.values.iter().enumerate() {
        let need = surplus - cum;
        if need <= FEAS_TOL {
            value = k as f64;
            break;
        }
        if need <= v + FEAS_TOL {
            value = k as f64 + (need / v).min(1.0);
            break;
        }
        cum += v;
    }
    // Past `value`, the remaining deviations are zero iff the surplus already
    // equals the full protection; any larger budget then stays active.
    let rest_zero = (surplus - total).abs() <= FEAS_TOL && value < len as f64;
    if rest_zero {
        GammaBar::Interval {
            value,
            over: len as f64,
        }
    } else {
        GammaBar::Unique { value }
    }
}

/// Optimal auxiliary variables of the protection LP's dual at budget Γ:
/// u = α|x̂|, z = the ⌈Γ⌉-th largest u (the largest when Γ = 0), y = (u − z)⁺.
/// Vectors are aligned with `cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxOptimum {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
}

pub fn aux_optimum(alpha: &[f64], gamma: f64, cols: &[usize], x: &[f64]) -> Result<AuxOptimum> {
    let gamma = check_gamma(gamma, cols.len())?;
    let sorted = SortedUncertainty::new(alpha, cols, x)?;
    let u: Vec<f64> = cols.iter().zip(alpha).map(|(&j, a)| a * x[j].abs()).collect();
    let z = if sorted.values.is_empty() {
        0.0
    } else {
        let k = (gamma.ceil() as usize).clamp(1, sorted.values.len());
        sorted.values[k - 1]
    };
    let y = u.iter().map(|v| (v - z).max(0.0)).collect();
    Ok(AuxOptimum { u, y, z })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_norms() {
        let x = [-2.0, 6.0];
        assert!((dual_norm(&x, NormKind::L2) - 40f64.sqrt()).abs() < 1e-12);
        assert_eq!(dual_norm(&[3.0, -4.0], NormKind::L1), 4.0);
        assert_eq!(dual_norm(&[0.0, 0.0], NormKind::Linf), 0.0);
        assert_eq!(dual_norm_maximizer(&[0.0, 5.0], NormKind::L1).unwrap(), vec![0.0, 1.0]);
        assert_eq!(dual_norm_maximizer(&[1.0, -1.0], NormKind::Linf).unwrap(), vec![1.0, -1.0]);
        assert_eq!(dual_norm_maximizer(&[0.0, 0.0], NormKind::L2), Err(Error::ZeroVector));
    }

    #[test]
    fn hyperplane_projection() {
        let (a, f) = project_hyperplane(&[1.0, 0.0], &[-2.0, 6.0], -6.0, NormKind::L2).unwrap();
        assert!((f - 0.632_455_532).abs() < 1e-8);
        assert!((a[0] - 1.2).abs() < 1e-12 && (a[1] + 0.6).abs() < 1e-12);
        let (a, g) = project_halfspace(&[-1.0, -1.0], &[2.0, 2.0], 0.0, NormKind::L2).unwrap();
        assert!(a.iter().all(|v| v.abs() < 1e-12));
        assert!((g - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn budgeted_rows() {
        let x = [-2.0, 6.0];
        let row = realized_row_cardinality(&[-2.0, -1.0], &[2.0, 1.0], 1.5, &[0, 1], &x).unwrap();
        assert!((row[0] + 1.0).abs() < 1e-12 && (row[1] + 2.0).abs() < 1e-12);
        assert!((protection_value(&[2.0, 1.0], 1.5, &[0, 1], &x).unwrap() - 8.0).abs() < 1e-12);
        let iu = realized_row_interval(&[-2.0, -1.0], &[0.5, 1.0], &[0, 1], &x).unwrap();
        assert_eq!(iu, vec![-1.5, -2.0]);
        let aux = aux_optimum(&[2.0, 1.0], 1.5, &[0, 1], &x).unwrap();
        assert_eq!(aux.z, 4.0);
        assert_eq!(aux.y, vec![0.0, 2.0]);
        assert!(realized_row_interval(&[1.0], &[-1.0], &[0], &[1.0]).is_err());
        assert!(protection_value(&[1.0], 2.0, &[0], &[1.0]).is_err());
    }

    #[test]
    fn knapsack() {
        let (phi, total) = knapsack_continuous(&[4.0, 6.0], 1.5);
        assert_eq!(phi, vec![0.5, 1.0]);
        assert_eq!(total, 8.0);
        assert_eq!(knapsack_continuous(&[4.0, 6.0], 0.0).1, 0.0);
        assert_eq!(knapsack_continuous(&[4.0, 6.0], 5.0).1, 10.0);
    }

    #[test]
    fn gamma_bars() {
        let p = ForwardProblem::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-2.0, -1.0]],
            vec![-6.0, -6.0, -10.0],
        )
        .unwrap();
        let x = [-2.0, 6.0];
        let g1 = gamma_bar(&p, 0, &[0], &[2.5], &x).unwrap();
        assert!((g1.value().unwrap() - 0.8).abs() < 1e-12);
        let g2 = gamma_bar(&p, 1, &[1], &[0.5], &x).unwrap();
        assert!(matches!(g2, GammaBar::NotApplicable { .. }));
        let g3 = gamma_bar(&p, 2, &[0, 1], &[2.0, 1.0], &x).unwrap();
        assert_eq!(g3, GammaBar::Unique { value: 1.5 });
        // Surplus 4 reached by the first column alone; the second contributes nothing.
        let g = gamma_bar(&p, 0, &[0, 1], &[2.0, 0.0], &x).unwrap();
        assert_eq!(g, GammaBar::Interval { value: 1.0, over: 2.0 });
    }
}
