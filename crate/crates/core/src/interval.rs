//! Inverse models for the interval-uncertainty robust counterpart: impute
//! the deviation magnitudes α with the nominal matrix and the uncertain
//! columns J_i fixed.

use crate::error::{Error, Result};
use crate::geometry::{self, dot, NormKind};
use crate::lp::{self, LinearProgram, Sense, VarBounds};
use crate::model::{
    canonical_params, nominal_violations, Family, ForwardProblem, Imputed, InverseSolution, ModelKind,
    ObservedPoint, PerConstraint, Prior, SideConstraints, SolveStats, SolveStatus, UncertaintyStructure,
};
use crate::nominal::{argmin_lowest, collect_subproblems, is_zero, unit};
use crate::verify;

fn interval_cols(structure: &UncertaintyStructure) -> Result<&[Vec<usize>]> {
    match structure {
        UncertaintyStructure::Interval { cols } => Ok(cols),
        _ => Err(Error::ModelMismatch("interval models need an interval uncertainty structure".into())),
    }
}

/// Offsets of each row's α block inside the flattened α vector.
fn offsets(cols: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut off = Vec::with_capacity(cols.len());
    let mut total = 0;
    for c in cols {
        off.push(total);
        total += c.len();
    }
    (off, total)
}

/// Robust feasibility rows `a_kᵀx̂ − Σ α_kj|x̂_j| ≥ b_k` over the first
/// `width` variables (α first, anything else after).
fn robust_rows(
    lp: &mut LinearProgram,
    problem: &ForwardProblem,
    x: &[f64],
    cols: &[Vec<usize>],
    off: &[usize],
    width: usize,
    active: Option<usize>,
) {
    for (k, ck) in cols.iter().enumerate() {
        let mut row = vec![0.0; width];
        for (p, &j) in ck.iter().enumerate() {
            row[off[k] + p] = -x[j].abs();
        }
        let rhs = problem.b()[k] - dot(problem.row(k), x);
        let sense = if active == Some(k) { Sense::Eq } else { Sense::Ge };
        lp.push_row(row, sense, rhs);
    }
}

fn split(flat: &[f64], cols: &[Vec<usize>], off: &[usize]) -> Vec<Vec<f64>> {
    cols.iter()
        .enumerate()
        .map(|(k, c)| flat[off[k]..off[k] + c.len()].iter().map(|v| v.max(0.0)).collect())
        .collect()
}

fn finish(
    model: ModelKind,
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
    alpha: Vec<Vec<f64>>,
    star: usize,
    t: Vec<Option<f64>>,
) -> Result<InverseSolution> {
    let cols = interval_cols(structure)?;
    let m = problem.num_constraints();
    let x = x_hat.as_slice();
    let cost = geometry::realized_row_interval(problem.row(star), &alpha[star], &cols[star], x)?;
    let gap = dot(&cost, x) - problem.b()[star];
    let objective = t[star].unwrap_or(gap);
    let mut sol = InverseSolution {
        model,
        status: if is_zero(&cost) {
            SolveStatus::TrivialDetected
        } else {
            SolveStatus::Optimal
        },
        imputed: Imputed::Alpha(alpha),
        cost,
        dual_pi: unit(m, star),
        duality_gap: if model.minimizes_gap() { gap } else { 0.0 },
        active_row: star,
        objective_value: objective,
        per_constraint: PerConstraint::Subproblems { t },
        gamma_bounds: None,
        certificate: Default::default(),
        stats: SolveStats {
            lp_solves: m,
            gamma_bar_evals: 0,
        },
        remediation: Vec::new(),
    };
    verify::attach_certificate(&mut sol, problem, x_hat, structure)?;
    Ok(sol)
}

/// Minimizes the duality gap over α ≥ 0 in Ω keeping x̂ robust feasible.
pub fn solve_rlo_iu_dg(
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
    omega: &SideConstraints,
) -> Result<InverseSolution> {
    let cols = interval_cols(structure)?;
    let m = problem.num_constraints();
    let x = x_hat.as_slice();
    let (off, width) = offsets(cols);
    let canonical = canonical_params(Family::Interval, problem, structure);
    let omega_rows = omega.canonical_rows(&canonical)?;

    let mut base = LinearProgram::new(vec![0.0; width]);
    for v in 0..width {
        base.set_bounds(v, VarBounds::nonneg());
    }
    robust_rows(&mut base, problem, x, cols, &off, width, None);
    for (row, h) in omega_rows {
        base.push_row(row, Sense::Le, h);
    }
    let lps: Vec<LinearProgram> = (0..m)
        .map(|i| {
            let mut lp = base.clone();
            for (p, &j) in cols[i].iter().enumerate() {
                lp.objective[off[i] + p] = -x[j].abs();
            }
            lp
        })
        .collect();
    let solved = collect_subproblems(lp::solve_lp_batch(&lps))?;
    let t: Vec<Option<f64>> = solved
        .iter()
        .enumerate()
        .map(|(i, s)| s.as_ref().map(|s| s.value + problem.surplus(i, x)))
        .collect();
    let star = argmin_lowest(t.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v)))).expect("some feasible");
    let alpha = split(&solved[star].as_ref().expect("feasible").x, cols, &off);
    finish(ModelKind::RloIuDg, problem, x_hat, structure, alpha, star, t)
}

/// Closest α ≥ 0 to the prior α̂ (weighted L1 or L∞) that makes x̂ optimal
/// for the robust counterpart. One LP per candidate active row.
pub fn solve_rlo_iu_sd(
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
    prior: &Prior,
) -> Result<InverseSolution> {
    let cols = interval_cols(structure)?;
    let m = problem.num_constraints();
    let x = x_hat.as_slice();
    if prior.norm == NormKind::L2 {
        return Err(Error::UnsupportedNorm("l2"));
    }
    let alpha_hat = prior.alpha()?;
    if alpha_hat.len() != m || alpha_hat.iter().zip(cols).any(|(a, c)| a.len() != c.len()) {
        return Err(Error::DimensionMismatch {
            field: "prior.estimates".into(),
            expected: m,
            found: alpha_hat.len(),
        });
    }
    if prior.xi.len() != m {
        return Err(Error::DimensionMismatch {
            field: "prior.xi".into(),
            expected: m,
            found: prior.xi.len(),
        });
    }
    if let Some(&row) = nominal_violations(problem, x).first() {
        return Err(Error::NominalInfeasible { row });
    }
    let (off, width) = offsets(cols);
    // Epigraph variables: one per α entry (L1) or one per row (L∞).
    let n_epi = match prior.norm {
        NormKind::L1 => width,
        _ => m,
    };
    let total = width + n_epi;
    let mut base = LinearProgram::new(vec![0.0; total]);
    for v in 0..width {
        base.set_bounds(v, VarBounds::nonneg());
    }
    for k in 0..m {
        for p in 0..cols[k].len() {
            let var = off[k] + p;
            let epi = match prior.norm {
                NormKind::L1 => {
                    base.objective[width + var] = prior.xi[k];
                    width + var
                }
                _ => {
                    base.objective[width + k] = prior.xi[k];
                    width + k
                }
            };
            let mut up = vec![0.0; total];
            up[epi] = 1.0;
            up[var] = -1.0;
            base.push_row(up, Sense::Ge, -alpha_hat[k][p]);
            let mut down = vec![0.0; total];
            down[epi] = 1.0;
            down[var] = 1.0;
            base.push_row(down, Sense::Ge, alpha_hat[k][p]);
        }
    }
    for e in width..total {
        base.set_bounds(e, VarBounds::nonneg());
    }
    let lps: Vec<LinearProgram> = (0..m)
        .map(|i| {
            let mut lp = base.clone();
            robust_rows(&mut lp, problem, x, cols, &off, total, Some(i));
            lp
        })
        .collect();
    let solved = collect_subproblems(lp::solve_lp_batch(&lps))?;
    let t: Vec<Option<f64>> = solved.iter().map(|s| s.as_ref().map(|s| s.value)).collect();
    let star = argmin_lowest(t.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v)))).expect("some feasible");
    let alpha = split(&solved[star].as_ref().expect("feasible").x, cols, &off);
    finish(ModelKind::RloIuSd, problem, x_hat, structure, alpha, star, t)
}
