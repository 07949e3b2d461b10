//! Inverse models for the nominal forward problem: imputing the constraint
//! matrix by minimizing the duality gap under side constraints, or by
//! projecting a prior matrix so that x̂ becomes exactly optimal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, dot};
use crate::lp::{self, LinearProgram, LpOutcome, Sense};
use crate::model::{
    canonical_params, Family, ForwardProblem, Imputed, InverseSolution, ModelKind, ObservedPoint, PerConstraint,
    Prior, PriorEstimates, Remediation, SideConstraints, SolveStats, SolveStatus, UncertaintyStructure, FEAS_TOL,
};
use crate::verify;

/// Index of the smallest value, lowest index on ties.
pub(crate) fn argmin_lowest(values: impl IntoIterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values {
        match best {
            Some((_, b)) if v >= b - 1e-12 * b.abs().max(1.0) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

pub(crate) fn unit(m: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[i] = 1.0;
    e
}

pub(crate) fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|x| x.abs() <= FEAS_TOL)
}

/// Pools per-row subproblem outcomes: any unbounded row is an error, and the
/// problem is infeasible only when every subproblem is.
pub(crate) fn collect_subproblems(outcomes: Vec<Result<LpOutcome>>) -> Result<Vec<Option<lp::LpSolution>>> {
    let mut out = Vec::with_capacity(outcomes.len());
    let mut phase_one = f64::INFINITY;
    for (row, o) in outcomes.into_iter().enumerate() {
        match o? {
            LpOutcome::Optimal(s) => out.push(Some(s)),
            LpOutcome::Infeasible { phase_one: p } => {
                phase_one = phase_one.min(p);
                out.push(None);
            }
            LpOutcome::Unbounded { ray } => return Err(Error::UnboundedGap { row, ray }),
        }
    }
    if out.iter().all(Option::is_none) {
        return Err(Error::Infeasible {
            phase_one: if phase_one.is_finite() { phase_one } else { 0.0 },
        });
    }
    Ok(out)
}

/// Minimizes the duality gap of x̂ over constraint matrices in Ω with x̂
/// feasible. One LP over the flattened matrix per constraint.
pub fn solve_nlo_dg(problem: &ForwardProblem, x_hat: &ObservedPoint, omega: &SideConstraints) -> Result<InverseSolution> {
    let m = problem.num_constraints();
    let n = problem.num_vars();
    let x = x_hat.as_slice();
    check_x(problem, x_hat)?;
    let canonical = canonical_params(Family::Nominal, problem, &UncertaintyStructure::Nominal);
    let omega_rows = omega.canonical_rows(&canonical)?;

    let mut base = LinearProgram::new(vec![0.0; m * n]);
    for k in 0..m {
        let mut row = vec![0.0; m * n];
        row[k * n..(k + 1) * n].copy_from_slice(x);
        base.push_row(row, Sense::Ge, problem.b()[k]);
    }
    for (row, h) in omega_rows {
        base.push_row(row, Sense::Le, h);
    }
    let lps: Vec<LinearProgram> = (0..m)
        .map(|i| {
            let mut lp = base.clone();
            lp.objective[i * n..(i + 1) * n].copy_from_slice(x);
            lp
        })
        .collect();
    let solved = collect_subproblems(lp::solve_lp_batch(&lps))?;
    let t: Vec<Option<f64>> = solved
        .iter()
        .enumerate()
        .map(|(i, s)| s.as_ref().map(|s| s.value - problem.b()[i]))
        .collect();
    let star = argmin_lowest(t.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))))
        .expect("at least one subproblem is feasible");
    let flat = &solved[star].as_ref().expect("argmin is feasible").x;
    let a: Vec<Vec<f64>> = flat.chunks(n).map(<[f64]>::to_vec).collect();
    let cost = a[star].clone();
    let gap = dot(&cost, x) - problem.b()[star];
    let status = if is_zero(&cost) || a.iter().any(|r| is_zero(r)) {
        SolveStatus::TrivialDetected
    } else {
        SolveStatus::Optimal
    };
    let mut sol = InverseSolution {
        model: ModelKind::NloDg,
        status,
        imputed: Imputed::Matrix(a),
        cost,
        dual_pi: unit(m, star),
        duality_gap: gap,
        active_row: star,
        objective_value: t[star].unwrap_or(gap),
        per_constraint: PerConstraint::Subproblems { t },
        gamma_bounds: None,
        certificate: Default::default(),
        stats: SolveStats {
            lp_solves: m,
            gamma_bar_evals: 0,
        },
        remediation: Vec::new(),
    };
    verify::attach_certificate(&mut sol, problem, x_hat, &UncertaintyStructure::Nominal)?;
    Ok(sol)
}

fn check_x(problem: &ForwardProblem, x_hat: &ObservedPoint) -> Result<()> {
    if x_hat.len() != problem.num_vars() {
        return Err(Error::DimensionMismatch {
            field: "x_hat".into(),
            expected: problem.num_vars(),
            found: x_hat.len(),
        });
    }
    Ok(())
}

/// Per-row projection costs of the prior onto the activity hyperplane (`f`,
/// `a_f`) and onto the feasible halfspace (`g`, `a_g`), weighted by ξ.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    pub f: Vec<f64>,
    pub a_f: Vec<Vec<f64>>,
    pub g: Vec<f64>,
    pub a_g: Vec<Vec<f64>>,
}

pub fn nominal_projections(problem: &ForwardProblem, x_hat: &ObservedPoint, prior: &Prior) -> Result<Projections> {
    let a_hat = prior.matrix()?;
    let x = x_hat.as_slice();
    let m = problem.num_constraints();
    let mut out = Projections {
        f: Vec::with_capacity(m),
        a_f: Vec::with_capacity(m),
        g: Vec::with_capacity(m),
        a_g: Vec::with_capacity(m),
    };
    for i in 0..m {
        let b = problem.b()[i];
        let (a_f, f) = geometry::project_hyperplane(&a_hat[i], x, b, prior.norm)?;
        let (a_g, g) = geometry::project_halfspace(&a_hat[i], x, b, prior.norm)?;
        out.f.push(prior.xi[i] * f);
        out.a_f.push(a_f);
        out.g.push(prior.xi[i] * g);
        out.a_g.push(a_g);
    }
    Ok(out)
}

/// Closest matrix to the prior (weighted row norms) that makes x̂ exactly
/// optimal: one row projected onto its activity hyperplane, the others onto
/// their feasible halfspaces. No LPs are solved.
pub fn solve_nlo_sd(problem: &ForwardProblem, x_hat: &ObservedPoint, prior: &Prior) -> Result<InverseSolution> {
    check_x(problem, x_hat)?;
    if x_hat.is_zero() {
        return Err(Error::ZeroObservation);
    }
    let m = problem.num_constraints();
    if prior.xi.len() != m {
        return Err(Error::DimensionMismatch {
            field: "prior.xi".into(),
            expected: m,
            found: prior.xi.len(),
        });
    }
    let a_hat = prior.matrix()?;
    if a_hat.len() != m {
        return Err(Error::DimensionMismatch {
            field: "prior.estimates".into(),
            expected: m,
            found: a_hat.len(),
        });
    }
    let x = x_hat.as_slice();
    let p = nominal_projections(problem, x_hat, prior)?;
    let star = argmin_lowest((0..m).map(|i| (i, p.f[i] - p.g[i]))).expect("m ≥ 1");
    let a: Vec<Vec<f64>> = (0..m)
        .map(|i| if i == star { p.a_f[i].clone() } else { p.a_g[i].clone() })
        .collect();
    let objective = p.f[star] + (0..m).filter(|&i| i != star).map(|i| p.g[i]).sum::<f64>();
    let cost = a[star].clone();
    let gap = dot(&cost, x) - problem.b()[star];
    let trivial = is_zero(&cost) || a.iter().any(|r| is_zero(r));
    let mut sol = InverseSolution {
        model: ModelKind::NloSd,
        status: if trivial {
            SolveStatus::TrivialDetected
        } else {
            SolveStatus::Optimal
        },
        imputed: Imputed::Matrix(a),
        cost,
        dual_pi: unit(m, star),
        duality_gap: gap,
        active_row: star,
        objective_value: objective,
        per_constraint: PerConstraint::Projections { f: p.f, g: p.g },
        gamma_bounds: None,
        certificate: Default::default(),
        stats: SolveStats::default(),
        remediation: Vec::new(),
    };
    verify::attach_certificate(&mut sol, problem, x_hat, &UncertaintyStructure::Nominal)?;
    if trivial {
        sol.remediation = verify::diagnose_trivial(&sol, problem, x_hat, prior)
            .into_iter()
            .map(|s| s.remediation)
            .collect();
    }
    Ok(sol)
}

/// Perturbed data and the solution obtained from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedSolve {
    pub strategy: Remediation,
    pub problem: ForwardProblem,
    pub prior: Prior,
    pub solution: InverseSolution,
}

/// Applies one perturbation to (b, Â, ξ) and re-solves the strong-duality model.
pub fn perturb_and_resolve(
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    prior: &Prior,
    strategy: Remediation,
) -> Result<PerturbedSolve> {
    let m = problem.num_constraints();
    let mut problem = problem.clone();
    let mut prior = prior.clone();
    match strategy {
        Remediation::RhsEpsilon { row, delta } => {
            check_row(row, m)?;
            problem = problem.with_rhs(row, problem.b()[row] + delta);
        }
        Remediation::PriorEpsilon { row, col, delta } => {
            check_row(row, m)?;
            let PriorEstimates::Matrix(a) = &mut prior.estimates else {
                return Err(Error::ModelMismatch("prior must hold a constraint matrix".into()));
            };
            if col >= a[row].len() {
                return Err(Error::Precondition(format!("column {} out of range", col + 1)));
            }
            a[row][col] += delta;
        }
        Remediation::WeightBoost { row, weight } => {
            check_row(row, m)?;
            if !(weight >= 0.0) {
                return Err(Error::Precondition("weight must be nonnegative".into()));
            }
            prior.xi[row] = weight;
        }
    }
    let solution = solve_nlo_sd(&problem, x_hat, &prior)?;
    Ok(PerturbedSolve {
        strategy,
        problem,
        prior,
        solution,
    })
}

fn check_row(row: usize, m: usize) -> Result<()> {
    if row >= m {
        return Err(Error::Precondition(format!("row {} out of range", row + 1)));
    }
    Ok(())
}
