//! Inverse models for the budgeted (cardinality-constrained) robust
//! counterpart: impute the budgets Γ with A, α and J_i fixed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, dot, GammaBar, SortedUncertainty};
use crate::lp::{self, LinearProgram, Sense, VarBounds};
use crate::model::{
    canonical_params, nominal_violations, Family, ForwardProblem, Imputed, InverseSolution, ModelKind,
    ObservedPoint, PerConstraint, Prior, SideConstraints, SolveStats, SolveStatus, UncertaintyStructure,
};
use crate::nominal::{argmin_lowest, collect_subproblems, is_zero, unit};
use crate::verify;

/// Which rows can be made active by some budget, the activating budgets, and
/// the box Θ of budgets that keep x̂ robust feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaBounds {
    /// 0-based rows in Î.
    pub i_hat: Vec<usize>,
    pub gamma_bar: Vec<GammaBar>,
    pub theta_upper: Vec<f64>,
}

impl GammaBounds {
    pub fn contains(&self, i: usize) -> bool {
        self.i_hat.contains(&i)
    }
}

pub(crate) fn cardinality_parts(structure: &UncertaintyStructure) -> Result<(&[Vec<usize>], &[Vec<f64>])> {
    match structure {
        UncertaintyStructure::Cardinality { cols, alpha } => Ok((cols, alpha)),
        _ => Err(Error::ModelMismatch("budget models need a cardinality uncertainty structure".into())),
    }
}

pub fn compute_gamma_bounds(
    problem: &ForwardProblem,
    structure: &UncertaintyStructure,
    x_hat: &ObservedPoint,
) -> Result<GammaBounds> {
    let (cols, alpha) = cardinality_parts(structure)?;
    let x = x_hat.as_slice();
    if let Some(&row) = nominal_violations(problem, x).first() {
        return Err(Error::NominalInfeasible { row });
    }
    let m = problem.num_constraints();
    let mut out = GammaBounds {
        i_hat: Vec::new(),
        gamma_bar: Vec::with_capacity(m),
        theta_upper: Vec::with_capacity(m),
    };
    for i in 0..m {
        let gb = geometry::gamma_bar(problem, i, &cols[i], &alpha[i], x)?;
        match gb.over() {
            Some(over) => {
                out.i_hat.push(i);
                out.theta_upper.push(over);
            }
            None => out.theta_upper.push(cols[i].len() as f64),
        }
        out.gamma_bar.push(gb);
    }
    Ok(out)
}

fn finish(
    model: ModelKind,
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
    gamma: Vec<f64>,
    star: usize,
    objective: f64,
    per_constraint: PerConstraint,
    bounds: GammaBounds,
    lp_solves: usize,
) -> Result<InverseSolution> {
    let (cols, alpha) = cardinality_parts(structure)?;
    let m = problem.num_constraints();
    let x = x_hat.as_slice();
    let cost = geometry::realized_row_cardinality(problem.row(star), &alpha[star], gamma[star], &cols[star], x)?;
    let gap = dot(&cost, x) - problem.b()[star];
    let mut sol = InverseSolution {
        model,
        status: if is_zero(&cost) {
            SolveStatus::TrivialDetected
        } else {
            SolveStatus::Optimal
        },
        imputed: Imputed::Gamma(gamma),
        cost,
        dual_pi: unit(m, star),
        duality_gap: if model.minimizes_gap() { gap } else { 0.0 },
        active_row: star,
        objective_value: objective,
        per_constraint,
        gamma_bounds: Some(bounds),
        certificate: Default::default(),
        stats: SolveStats {
            lp_solves,
            gamma_bar_evals: m,
        },
        remediation: Vec::new(),
    };
    verify::attach_certificate(&mut sol, problem, x_hat, structure)?;
    Ok(sol)
}

/// Minimizes the duality gap over budgets in Θ ∩ Ω. The subproblem for row i
/// carries all budgets plus the knapsack allocation φ_i of row i.
pub fn solve_rlo_ccu_dg(
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
    omega: &SideConstraints,
) -> Result<InverseSolution> {
    let (cols, alpha) = cardinality_parts(structure)?;
    let bounds = compute_gamma_bounds(problem, structure, x_hat)?;
    let m = problem.num_constraints();
    let x = x_hat.as_slice();
    let canonical = canonical_params(Family::Cardinality, problem, structure);
    let omega_rows = omega.canonical_rows(&canonical)?;

    let lps: Vec<LinearProgram> = (0..m)
        .map(|i| {
            let width = m + cols[i].len();
            let mut lp = LinearProgram::new(vec![0.0; width]);
            for (k, &up) in bounds.theta_upper.iter().enumerate() {
                lp.set_bounds(k, VarBounds::between(0.0, up));
            }
            let mut budget = vec![0.0; width];
            budget[i] = -1.0;
            for (p, &j) in cols[i].iter().enumerate() {
                lp.set_bounds(m + p, VarBounds::between(0.0, 1.0));
                lp.objective[m + p] = -alpha[i][p] * x[j].abs();
                budget[m + p] = 1.0;
            }
            lp.push_row(budget, Sense::Le, 0.0);
            for (row, h) in &omega_rows {
                let mut r = row.clone();
                r.resize(width, 0.0);
                lp.push_row(r, Sense::Le, *h);
            }
            lp
        })
        .collect();
    let solved = match collect_subproblems(lp::solve_lp_batch(&lps)) {
        Err(Error::Infeasible { .. }) => return Err(Error::EmptyThetaOmega),
        other => other?,
    };
    let t: Vec<Option<f64>> = solved
        .iter()
        .enumerate()
        .map(|(i, s)| s.as_ref().map(|s| s.value + problem.surplus(i, x)))
        .collect();
    let star = argmin_lowest(t.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v)))).expect("some feasible");
    let sol = solved[star].as_ref().expect("feasible");
    let gamma: Vec<f64> = (0..m)
        .map(|k| sol.x[k].clamp(0.0, bounds.theta_upper[k]))
        .collect();
    let objective = t[star].expect("feasible");
    finish(
        ModelKind::RloCcuDg,
        problem,
        x_hat,
        structure,
        gamma,
        star,
        objective,
        PerConstraint::Subproblems { t },
        bounds,
        m,
    )
}

/// Closest budgets to the prior Γ̂ that make x̂ optimal, in closed form from
/// the activating budgets Γ̄. No LPs are solved.
pub fn solve_rlo_ccu_sd(
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
    prior: &Prior,
) -> Result<InverseSolution> {
    let (cols, _) = cardinality_parts(structure)?;
    let m = problem.num_constraints();
    let gamma_prior = prior.gamma()?;
    if gamma_prior.len() != m {
        return Err(Error::DimensionMismatch {
            field: "prior.estimates".into(),
            expected: m,
            found: gamma_prior.len(),
        });
    }
    let bounds = compute_gamma_bounds(problem, structure, x_hat)?;
    if bounds.i_hat.is_empty() {
        return Err(Error::EmptyIhat);
    }
    let hat: Vec<f64> = (0..m)
        .map(|i| gamma_prior[i].clamp(0.0, cols[i].len() as f64))
        .collect();
    let target: Vec<f64> = (0..m)
        .map(|i| match bounds.gamma_bar[i] {
            GammaBar::Unique { value } => value,
            GammaBar::Interval { value, over } => hat[i].clamp(value, over),
            GammaBar::NotApplicable { .. } => hat[i],
        })
        .collect();
    let f: Vec<f64> = (0..m)
        .map(|i| if bounds.contains(i) { target[i] - hat[i] } else { 0.0 })
        .collect();
    let g: Vec<f64> = (0..m)
        .map(|i| (bounds.theta_upper[i] - hat[i]).min(0.0))
        .collect();
    let candidate = |i: usize| {
        let mut d = g.clone();
        d[i] = f[i];
        geometry::norm(&d, prior.norm)
    };
    let star = argmin_lowest(bounds.i_hat.iter().map(|&i| (i, candidate(i)))).expect("Î nonempty");
    let gamma: Vec<f64> = (0..m)
        .map(|i| {
            if i == star {
                target[i]
            } else if bounds.contains(i) {
                hat[i].min(bounds.theta_upper[i])
            } else {
                hat[i]
            }
        })
        .collect();
    let diff: Vec<f64> = gamma.iter().zip(&hat).map(|(a, b)| a - b).collect();
    let objective = geometry::norm(&diff, prior.norm);
    finish(
        ModelKind::RloCcuSd,
        problem,
        x_hat,
        structure,
        gamma,
        star,
        objective,
        PerConstraint::Projections { f, g },
        bounds,
        0,
    )
}

/// Optimal knapsack allocation of row i at budget Γ_i, aligned with `cols[i]`.
pub fn budget_allocation(alpha: &[f64], gamma: f64, cols: &[usize], x: &[f64]) -> Result<Vec<f64>> {
    let sorted = SortedUncertainty::new(alpha, cols, x)?;
    Ok(geometry::knapsack_sorted(&sorted, gamma).0)
}
