//! Independent checks of solver output: certificate reconstruction and
//! residuals, trivial-solution diagnostics, and a brute-force grid oracle
//! that evaluates model objectives from the geometry kernel alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, dot, sgn, NormKind, SortedUncertainty};
use crate::model::{
    canonical_params, Certificate, Family, ForwardProblem, Imputed, InverseInstance, InverseSolution, ModelKind,
    ObservedPoint, Prior, PriorEstimates, Remediation, UncertaintyStructure, FEAS_TOL, REPORT_TOL,
};

/// Residual groups of the inverse formulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualGroup {
    /// Robust (or nominal) feasibility of x̂, parameter domains, side constraints.
    Primal,
    /// Auxiliary variables u, y, z of the robust counterpart.
    Auxiliary,
    /// c equals the dual combination of the realized rows.
    DualEquality,
    /// Sign and coupling constraints on π, λ, μ, φ.
    DualBounds,
    /// Σπ = 1.
    Normalization,
    /// Strong duality (exact models) or gap consistency (gap models).
    Duality,
    /// Reported objective against a recomputation from the prior.
    Objective,
}

impl ResidualGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            ResidualGroup::Primal => "primal",
            ResidualGroup::Auxiliary => "auxiliary",
            ResidualGroup::DualEquality => "dual-equality",
            ResidualGroup::DualBounds => "dual-bounds",
            ResidualGroup::Normalization => "normalization",
            ResidualGroup::Duality => "duality",
            ResidualGroup::Objective => "objective",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Invalid { group: ResidualGroup, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Infinity-norm residual per group.
    pub residuals: BTreeMap<ResidualGroup, f64>,
    pub cost_is_zero: bool,
    /// 1-based rows whose realized coefficients vanish in some orthant.
    pub zero_rows: Vec<usize>,
    pub verdict: Verdict,
}

impl CertificateReport {
    pub fn is_valid(&self) -> bool {
        self.verdict == Verdict::Valid
    }

    pub fn residual(&self, group: ResidualGroup) -> f64 {
        self.residuals.get(&group).copied().unwrap_or(0.0)
    }
}

/// Rebuilds the auxiliary and dual blocks from the solution's parameters and
/// π, following the explicit feasible constructions: u = α|x̂|, (y, z) from
/// the protection dual, φ from the greedy knapsack, and (λ, μ) splitting π or
/// φ by the sign of x̂_j (sgn(0) = +1).
pub fn reconstruct_certificate(
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
    solution: &InverseSolution,
) -> Result<Certificate> {
    let x = x_hat.as_slice();
    let pi = &solution.dual_pi;
    if pi.len() != problem.num_constraints() {
        return Err(Error::DimensionMismatch {
            field: "dual_pi".into(),
            expected: problem.num_constraints(),
            found: pi.len(),
        });
    }
    let mut cert = Certificate::default();
    match (&solution.imputed, structure) {
        (Imputed::Matrix(_), _) => {}
        (Imputed::Alpha(alpha), UncertaintyStructure::Interval { cols }) => {
            for (i, ci) in cols.iter().enumerate() {
                cert.u.push(ci.iter().zip(&alpha[i]).map(|(&j, a)| a * x[j].abs()).collect());
                let (l, m) = split_by_sign(ci, x, &vec![pi[i]; ci.len()]);
                cert.lambda.push(l);
                cert.mu.push(m);
            }
        }
        (Imputed::Gamma(gamma), UncertaintyStructure::Cardinality { cols, alpha }) => {
            for (i, ci) in cols.iter().enumerate() {
                let g = gamma[i].clamp(0.0, ci.len() as f64);
                let aux = geometry::aux_optimum(&alpha[i], g, ci, x)?;
                cert.u.push(aux.u);
                cert.y.push(aux.y);
                cert.z.push(aux.z);
                let sorted = SortedUncertainty::new(&alpha[i], ci, x)?;
                let phi: Vec<f64> = geometry::knapsack_sorted(&sorted, g).0.iter().map(|p| p * pi[i]).collect();
                let (l, m) = split_by_sign(ci, x, &phi);
                cert.lambda.push(l);
                cert.mu.push(m);
                cert.phi.push(phi);
            }
        }
        _ => {
            return Err(Error::ModelMismatch(
                "imputed parameters do not match the uncertainty structure".into(),
            ))
        }
    }
    Ok(cert)
}

fn split_by_sign(cols: &[usize], x: &[f64], weight: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut lambda = vec![0.0; cols.len()];
    let mut mu = vec![0.0; cols.len()];
    for (p, &j) in cols.iter().enumerate() {
        if sgn(x[j]) < 0.0 {
            lambda[p] = weight[p];
        } else {
            mu[p] = weight[p];
        }
    }
    (lambda, mu)
}

/// Fills `solution.certificate` with the reconstructed blocks and residuals.
pub(crate) fn attach_certificate(
    solution: &mut InverseSolution,
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
) -> Result<()> {
    let mut cert = reconstruct_certificate(problem, x_hat, structure, solution)?;
    let residuals = residuals(problem, x_hat, structure, None, None, solution, &cert);
    cert.residuals = residuals.iter().map(|(g, v)| (g.as_str().to_string(), *v)).collect();
    solution.certificate = cert;
    Ok(())
}

fn max0(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v.max(0.0)
    }
}

fn residuals(
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
    omega: Option<&crate::model::SideConstraints>,
    prior: Option<&Prior>,
    solution: &InverseSolution,
    cert: &Certificate,
) -> BTreeMap<ResidualGroup, f64> {
    let m = problem.num_constraints();
    let n = problem.num_vars();
    let x = x_hat.as_slice();
    let pi = &solution.dual_pi;
    let c = &solution.cost;
    let mut r: BTreeMap<ResidualGroup, f64> = [
        ResidualGroup::Primal,
        ResidualGroup::Auxiliary,
        ResidualGroup::DualEquality,
        ResidualGroup::DualBounds,
        ResidualGroup::Normalization,
        ResidualGroup::Duality,
    ]
    .into_iter()
    .map(|g| (g, 0.0))
    .collect();
    let mut bump = |g: ResidualGroup, v: f64| {
        let e = r.entry(g).or_insert(0.0);
        *e = e.max(if v.is_nan() { f64::INFINITY } else { v });
    };
    if pi.len() != m || c.len() != n {
        bump(ResidualGroup::DualEquality, f64::INFINITY);
        return r;
    }

    bump(ResidualGroup::Normalization, (pi.iter().sum::<f64>() - 1.0).abs());
    for &p in pi {
        bump(ResidualGroup::DualBounds, max0(-p));
    }
    // Dual combination Σ_i π_i a_i + Σ α_ij(λ_ij − μ_ij) e_j.
    let mut combo = vec![0.0; n];
    match (&solution.imputed, structure) {
        (Imputed::Matrix(a), _) => {
            if a.len() != m || a.iter().any(|row| row.len() != n) {
                bump(ResidualGroup::Primal, f64::INFINITY);
                return r;
            }
            for i in 0..m {
                bump(ResidualGroup::Primal, max0(problem.b()[i] - dot(&a[i], x)));
                for j in 0..n {
                    combo[j] += pi[i] * a[i][j];
                }
            }
        }
        (Imputed::Alpha(alpha), UncertaintyStructure::Interval { cols }) => {
            if cert.u.len() != m || cert.lambda.len() != m || cert.mu.len() != m || alpha.len() != m {
                bump(ResidualGroup::Auxiliary, f64::INFINITY);
                return r;
            }
            for i in 0..m {
                let a = problem.row(i);
                let usum: f64 = cert.u[i].iter().sum();
                bump(ResidualGroup::Primal, max0(problem.b()[i] - (dot(a, x) - usum)));
                for (p, &j) in cols[i].iter().enumerate() {
                    let al = alpha[i][p];
                    bump(ResidualGroup::Primal, max0(-al));
                    bump(ResidualGroup::Auxiliary, max0(-(al * x[j] + cert.u[i][p])));
                    bump(ResidualGroup::Auxiliary, max0(-(-al * x[j] + cert.u[i][p])));
                    let (l, mu) = (cert.lambda[i][p], cert.mu[i][p]);
                    bump(ResidualGroup::DualBounds, max0(-l).max(max0(-mu)));
                    bump(ResidualGroup::DualEquality, (pi[i] - l - mu).abs());
                    combo[j] += al * (l - mu);
                }
                for j in 0..n {
                    combo[j] += pi[i] * a[j];
                }
            }
        }
        (Imputed::Gamma(gamma), UncertaintyStructure::Cardinality { cols, alpha }) => {
            if [cert.u.len(), cert.y.len(), cert.z.len(), cert.lambda.len(), cert.mu.len(), cert.phi.len(), gamma.len()]
                .iter()
                .any(|&k| k != m)
            {
                bump(ResidualGroup::Auxiliary, f64::INFINITY);
                return r;
            }
            for i in 0..m {
                let a = problem.row(i);
                let g = gamma[i];
                bump(ResidualGroup::Primal, max0(-g).max(max0(g - cols[i].len() as f64)));
                let ysum: f64 = cert.y[i].iter().sum();
                bump(ResidualGroup::Primal, max0(problem.b()[i] - (dot(a, x) - ysum - g * cert.z[i])));
                bump(ResidualGroup::Auxiliary, max0(-cert.z[i]));
                let mut phisum = 0.0;
                for (p, &j) in cols[i].iter().enumerate() {
                    let al = alpha[i][p];
                    let u = cert.u[i][p];
                    bump(ResidualGroup::Auxiliary, max0(-(al * x[j] + u)));
                    bump(ResidualGroup::Auxiliary, max0(-(-al * x[j] + u)));
                    bump(ResidualGroup::Auxiliary, max0(u - cert.y[i][p] - cert.z[i]));
                    bump(ResidualGroup::Auxiliary, max0(-cert.y[i][p]));
                    let (l, mu, phi) = (cert.lambda[i][p], cert.mu[i][p], cert.phi[i][p]);
                    bump(ResidualGroup::DualBounds, max0(-l).max(max0(-mu)).max(max0(-phi)));
                    bump(ResidualGroup::DualBounds, max0(phi - pi[i]));
                    bump(ResidualGroup::DualEquality, (phi - l - mu).abs());
                    phisum += phi;
                    combo[j] += al * (l - mu);
                }
                bump(ResidualGroup::DualBounds, max0(phisum - g * pi[i]));
                for j in 0..n {
                    combo[j] += pi[i] * a[j];
                }
            }
        }
        _ => {
            bump(ResidualGroup::Primal, f64::INFINITY);
            return r;
        }
    }
    for j in 0..n {
        bump(ResidualGroup::DualEquality, (combo[j] - c[j]).abs());
    }
    let gap = dot(c, x) - dot(problem.b(), pi);
    if solution.model.minimizes_gap() {
        bump(ResidualGroup::Duality, (gap - solution.duality_gap).abs());
        bump(ResidualGroup::Duality, (solution.duality_gap - solution.objective_value).abs());
        bump(ResidualGroup::Duality, max0(-solution.duality_gap));
        if let Some(omega) = omega {
            let canonical = canonical_params(solution.model.family(), problem, structure);
            let viol = omega
                .violation(&canonical, &solution.imputed.flatten())
                .unwrap_or(f64::INFINITY);
            bump(ResidualGroup::Primal, viol);
        }
    } else {
        bump(ResidualGroup::Duality, gap.abs());
        if let Some(prior) = prior {
            if let Some(obj) = prior_objective(structure, prior, &solution.imputed) {
                r.insert(ResidualGroup::Objective, (obj - solution.objective_value).abs());
            }
        }
    }
    r
}

/// Σ ξ_i‖p_i − p̂_i‖ for matrices and α, ‖Γ − Γ̂‖ for budgets (Γ̂ clamped to
/// [0, |J_i|]).
pub fn prior_objective(structure: &UncertaintyStructure, prior: &Prior, imputed: &Imputed) -> Option<f64> {
    match (imputed, &prior.estimates) {
        (Imputed::Matrix(a), PriorEstimates::Matrix(h)) | (Imputed::Alpha(a), PriorEstimates::Alpha(h)) => {
            if a.len() != h.len() || prior.xi.len() != a.len() {
                return None;
            }
            Some(
                a.iter()
                    .zip(h)
                    .zip(&prior.xi)
                    .map(|((ai, hi), w)| {
                        let d: Vec<f64> = ai.iter().zip(hi).map(|(p, q)| p - q).collect();
                        w * geometry::norm(&d, prior.norm)
                    })
                    .sum(),
            )
        }
        (Imputed::Gamma(g), PriorEstimates::Gamma(h)) => {
            let cols = structure.cols()?;
            if g.len() != h.len() || cols.len() != g.len() {
                return None;
            }
            let d: Vec<f64> = (0..g.len())
                .map(|i| g[i] - h[i].clamp(0.0, cols[i].len() as f64))
                .collect();
            Some(geometry::norm(&d, prior.norm))
        }
        _ => None,
    }
}

/// Verifies a solution against the optimality system of its model. Uses the
/// certificate carried by the solution when present, otherwise rebuilds one.
pub fn check_certificate(instance: &InverseInstance, solution: &InverseSolution) -> CertificateReport {
    let cert = if solution.certificate.is_empty() {
        reconstruct_certificate(&instance.problem, &instance.x_hat, &instance.structure, solution).unwrap_or_default()
    } else {
        solution.certificate.clone()
    };
    let omega = if solution.model.minimizes_gap() {
        instance.omega.as_ref()
    } else {
        None
    };
    let residuals = residuals(
        &instance.problem,
        &instance.x_hat,
        &instance.structure,
        omega,
        instance.prior.as_ref(),
        solution,
        &cert,
    );
    let worst = residuals
        .iter()
        .filter(|(_, v)| !(**v <= REPORT_TOL))
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(g, v)| (*g, *v));
    let verdict = match worst {
        None => Verdict::Valid,
        Some((group, residual)) => Verdict::Invalid { group, residual },
    };
    CertificateReport {
        residuals,
        cost_is_zero: solution.cost.iter().all(|v| v.abs() <= FEAS_TOL),
        zero_rows: vanishing_rows(&instance.problem, &instance.structure, &solution.imputed)
            .into_iter()
            .map(|i| i + 1)
            .collect(),
        verdict,
    }
}

/// Rows whose realized coefficient vector is zero at some unit-magnitude
/// orthant representative x ∈ {−1, 1}ⁿ (n ≤ 12; larger n checks x = 1 only).
pub fn vanishing_rows(problem: &ForwardProblem, structure: &UncertaintyStructure, imputed: &Imputed) -> Vec<usize> {
    let m = problem.num_constraints();
    let n = problem.num_vars();
    let zero = |v: &[f64]| v.iter().all(|x| x.abs() <= FEAS_TOL);
    let patterns: Vec<Vec<f64>> = if n <= 12 {
        (0..1usize << n)
            .map(|mask| (0..n).map(|j| if mask >> j & 1 == 1 { -1.0 } else { 1.0 }).collect())
            .collect()
    } else {
        vec![vec![1.0; n]]
    };
    (0..m)
        .filter(|&i| match (imputed, structure) {
            (Imputed::Matrix(a), _) => a.get(i).is_some_and(|r| zero(r)),
            (Imputed::Alpha(alpha), UncertaintyStructure::Interval { cols }) => patterns.iter().any(|x| {
                geometry::realized_row_interval(problem.row(i), &alpha[i], &cols[i], x).is_ok_and(|r| zero(&r))
            }),
            (Imputed::Gamma(g), UncertaintyStructure::Cardinality { cols, alpha }) => patterns.iter().any(|x| {
                let gi = g[i].clamp(0.0, cols[i].len() as f64);
                geometry::realized_row_cardinality(problem.row(i), &alpha[i], gi, &cols[i], x)
                    .is_ok_and(|r| zero(&r))
            }),
            _ => false,
        })
        .collect()
}

/// A suggested data perturbation for a trivial strong-duality solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrivialFix {
    pub remediation: Remediation,
    /// The perturbation is not known to work in general.
    pub heuristic: bool,
}

/// Perturbations that may lift a trivial matrix imputation: shift b_i away
/// from zero in the direction of â_iᵀx̂, nudge the prior row, or (when the
/// trivial row is the active one and is strictly feasible under the prior)
/// raise its weight until another row becomes cheaper to activate.
pub fn diagnose_trivial(
    solution: &InverseSolution,
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    prior: &Prior,
) -> Vec<TrivialFix> {
    let Imputed::Matrix(a) = &solution.imputed else {
        return Vec::new();
    };
    let Ok(a_hat) = prior.matrix() else {
        return Vec::new();
    };
    let x = x_hat.as_slice();
    let zero = |v: &[f64]| v.iter().all(|x| x.abs() <= FEAS_TOL);
    let mut rows: Vec<usize> = (0..a.len()).filter(|&i| zero(&a[i])).collect();
    if zero(&solution.cost) && !rows.contains(&solution.active_row) {
        rows.push(solution.active_row);
        rows.sort_unstable();
    }
    let mut out = Vec::new();
    for &i in &rows {
        let b = problem.b()[i];
        let delta = 0.1 * b.abs().max(1.0) * sgn(dot(&a_hat[i], x));
        out.push(TrivialFix {
            remediation: Remediation::RhsEpsilon { row: i, delta },
            heuristic: false,
        });
        out.push(TrivialFix {
            remediation: Remediation::PriorEpsilon {
                row: i,
                col: 0,
                delta: 0.1,
            },
            heuristic: true,
        });
        if i == solution.active_row {
            if let Some((f, g)) = solution.projections() {
                let own = f[i] - g[i];
                let rival = (0..f.len())
                    .filter(|&k| k != i)
                    .map(|k| f[k] - g[k])
                    .fold(f64::INFINITY, f64::min);
                if own > FEAS_TOL && rival.is_finite() {
                    let needed = prior.xi[i] * rival / own;
                    out.push(TrivialFix {
                        remediation: Remediation::WeightBoost {
                            row: i,
                            weight: (2.0 * needed).max(10.0),
                        },
                        heuristic: false,
                    });
                }
            }
        }
    }
    out
}

/// Grid for [`brute_force_min`]: one `[lo, hi]` per imputed parameter in
/// canonical order; a parameter with `lo == hi` is held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOracleSpec {
    pub parameter_box: Vec<(f64, f64)>,
    pub step: f64,
    pub model: ModelKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    /// Minimizing parameters in canonical order.
    pub argmin: Vec<f64>,
    /// 0-based row the minimum was attained with.
    pub active_row: usize,
    pub points: u128,
}

pub const GRID_LIMIT: u128 = 10_000_000;

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let k = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=k).map(|t| lo + t as f64 * step).collect();
    if hi - v[k] > 1e-12 {
        v.push(hi);
    }
    v
}

fn for_each_point(axes: &[Vec<f64>], mut visit: impl FnMut(&[f64])) {
    if axes.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; axes.len()];
    let mut point: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    loop {
        visit(&point);
        let mut k = 0;
        loop {
            if k == axes.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                point[k] = axes[k][idx[k]];
                break;
            }
            idx[k] = 0;
            point[k] = axes[k][0];
            k += 1;
        }
    }
}

fn grid_size(axes: &[Vec<f64>]) -> u128 {
    axes.iter().map(|a| a.len() as u128).product()
}

/// Exhaustive minimization of the model objective over a parameter grid.
///
/// Gap models scan the full product grid, keeping points in Ω with x̂
/// robust feasible and scoring them by the smallest robust surplus. Exact
/// models decompose by row: each row is scored separately as feasible (grid
/// scan) or active (one coordinate solved from the activity equation, or a
/// bisection for budgets), then combined over the choice of active row.
pub fn brute_force_min(instance: &InverseInstance, spec: &GridOracleSpec) -> Result<OracleResult> {
    if !(spec.step > 0.0) || !spec.step.is_finite() {
        return Err(Error::Precondition("grid step must be positive".into()));
    }
    if spec.parameter_box.iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo > hi) {
        return Err(Error::Precondition("parameter box must be finite with lo ≤ hi".into()));
    }
    let problem = &instance.problem;
    let canonical = canonical_params(spec.model.family(), problem, &instance.structure);
    if spec.parameter_box.len() != canonical.len() {
        return Err(Error::DimensionMismatch {
            field: "parameter_box".into(),
            expected: canonical.len(),
            found: spec.parameter_box.len(),
        });
    }
    if spec.model.minimizes_gap() {
        gap_oracle(instance, spec, &canonical)
    } else {
        exact_oracle(instance, spec)
    }
}

/// Robust surplus of row i under the canonical parameter vector `z`.
fn robust_surplus(
    model: ModelKind,
    problem: &ForwardProblem,
    structure: &UncertaintyStructure,
    x: &[f64],
    z: &[f64],
    offsets: &[usize],
    i: usize,
) -> Option<f64> {
    let n = problem.num_vars();
    match model.family() {
        Family::Nominal => Some(dot(&z[i * n..(i + 1) * n], x) - problem.b()[i]),
        Family::Interval => {
            let cols = structure.cols()?;
            let al = &z[offsets[i]..offsets[i] + cols[i].len()];
            if al.iter().any(|a| *a < 0.0) {
                return None;
            }
            let prot: f64 = cols[i].iter().zip(al).map(|(&j, a)| a * x[j].abs()).sum();
            Some(problem.surplus(i, x) - prot)
        }
        Family::Cardinality => {
            let UncertaintyStructure::Cardinality { cols, alpha } = structure else {
                return None;
            };
            let prot = geometry::protection_value(&alpha[i], z[i], &cols[i], x).ok()?;
            Some(problem.surplus(i, x) - prot)
        }
    }
}

fn structure_offsets(structure: &UncertaintyStructure) -> Vec<usize> {
    let mut off = Vec::new();
    let mut acc = 0;
    for c in structure.cols().unwrap_or(&[]) {
        off.push(acc);
        acc += c.len();
    }
    off
}

fn gap_oracle(
    instance: &InverseInstance,
    spec: &GridOracleSpec,
    canonical: &[crate::model::ParamRef],
) -> Result<OracleResult> {
    let axes: Vec<Vec<f64>> = spec
        .parameter_box
        .iter()
        .map(|&(lo, hi)| axis(lo, hi, spec.step))
        .collect();
    let points = grid_size(&axes);
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }
    let omega_rows = match &instance.omega {
        Some(o) => o.canonical_rows(canonical)?,
        None => Vec::new(),
    };
    let problem = &instance.problem;
    let x = instance.x_hat.as_slice();
    let m = problem.num_constraints();
    let off = structure_offsets(&instance.structure);
    let mut best: Option<OracleResult> = None;
    for_each_point(&axes, |z| {
        if omega_rows.iter().any(|(g, h)| dot(g, z) > h + FEAS_TOL) {
            return;
        }
        let mut min = f64::INFINITY;
        let mut arg = 0;
        for i in 0..m {
            match robust_surplus(spec.model, problem, &instance.structure, x, z, &off, i) {
                Some(s) if s >= -FEAS_TOL => {
                    if s < min {
                        min = s;
                        arg = i;
                    }
                }
                _ => return,
            }
        }
        if best.as_ref().is_none_or(|b| min < b.value) {
            best = Some(OracleResult {
                value: min,
                argmin: z.to_vec(),
                active_row: arg,
                points,
            });
        }
    });
    best.ok_or(Error::Infeasible { phase_one: 0.0 })
}

/// Best feasible and best active value of one row block, with the minimizers.
struct BlockScore {
    feasible: Option<(f64, Vec<f64>)>,
    active: Option<(f64, Vec<f64>)>,
}

fn exact_oracle(instance: &InverseInstance, spec: &GridOracleSpec) -> Result<OracleResult> {
    let prior = instance
        .prior
        .as_ref()
        .ok_or_else(|| Error::Precondition("exact models need a prior".into()))?;
    let problem = &instance.problem;
    let m = problem.num_constraints();
    let n = problem.num_vars();
    let x = instance.x_hat.as_slice();
    let step = spec.step;

    // Per-row parameter boxes.
    let off = structure_offsets(&instance.structure);
    let block = |i: usize| -> std::ops::Range<usize> {
        match spec.model.family() {
            Family::Nominal => i * n..(i + 1) * n,
            Family::Interval => {
                let len = instance.structure.cols().map_or(0, |c| c[i].len());
                off[i]..off[i] + len
            }
            Family::Cardinality => i..i + 1,
        }
    };
    let mut points: u128 = 0;
    let mut scores = Vec::with_capacity(m);
    for i in 0..m {
        let range = block(i);
        let bx = &spec.parameter_box[range];
        let score = match spec.model.family() {
            Family::Nominal | Family::Interval => {
                let (hat, weight, coef, rhs) = match spec.model.family() {
                    Family::Nominal => {
                        let hat = prior.matrix()?[i].clone();
                        // a·x̂ ≥ b_i
                        (hat, prior.xi[i], x.to_vec(), problem.b()[i])
                    }
                    _ => {
                        let cols = instance.structure.cols().unwrap_or(&[]);
                        let hat = prior.alpha()?[i].clone();
                        // −Σ α|x̂_j| ≥ b_i − a_iᵀx̂
                        let coef: Vec<f64> = cols[i].iter().map(|&j| -x[j].abs()).collect();
                        (hat, prior.xi[i], coef, -problem.surplus(i, x))
                    }
                };
                let (s, p) = linear_block(bx, &hat, weight, &coef, rhs, prior.norm, step)?;
                points += p;
                s
            }
            Family::Cardinality => {
                let UncertaintyStructure::Cardinality { cols, alpha } = &instance.structure else {
                    return Err(Error::ModelMismatch("budget oracle needs a cardinality structure".into()));
                };
                let hat = prior.gamma()?[i].clamp(0.0, cols[i].len() as f64);
                let surplus = problem.surplus(i, x);
                let prot = |g: f64| geometry::protection_value(&alpha[i], g, &cols[i], x).unwrap_or(f64::INFINITY);
                let (lo, hi) = bx[0];
                let mut feasible: Option<(f64, Vec<f64>)> = None;
                let grid = axis(lo, hi, step);
                points += grid.len() as u128;
                for &g in &grid {
                    if prot(g) <= surplus + FEAS_TOL {
                        let d = (g - hat).abs();
                        if feasible.as_ref().is_none_or(|(b, _)| d < *b) {
                            feasible = Some((d, vec![g]));
                        }
                    }
                }
                // Activating budgets form an interval [first, last] of the
                // nondecreasing protection function.
                let active = if surplus < -FEAS_TOL || prot(hi) < surplus - FEAS_TOL || prot(lo) > surplus + FEAS_TOL {
                    None
                } else {
                    let first = bisect(lo, hi, |g| prot(g) >= surplus - FEAS_TOL);
                    let last = bisect(lo, hi, |g| prot(g) > surplus + FEAS_TOL);
                    let last = if prot(hi) <= surplus + FEAS_TOL { hi } else { last };
                    let g = hat.clamp(first, last.max(first));
                    Some(((g - hat).abs(), vec![g]))
                };
                BlockScore { feasible, active }
            }
        };
        scores.push(score);
    }
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }

    let combine = |d: &[f64]| match spec.model.family() {
        Family::Cardinality => geometry::norm(d, prior.norm),
        _ => d.iter().sum(),
    };
    let mut best: Option<OracleResult> = None;
    for star in 0..m {
        let Some((av, ap)) = &scores[star].active else {
            continue;
        };
        let mut parts = Vec::with_capacity(m);
        let mut params = Vec::new();
        let mut ok = true;
        for (i, s) in scores.iter().enumerate() {
            let (v, p) = if i == star {
                (*av, ap)
            } else if let Some((v, p)) = &s.feasible {
                (*v, p)
            } else {
                ok = false;
                break;
            };
            parts.push(v);
            params.extend_from_slice(p);
        }
        if !ok {
            continue;
        }
        let value = combine(&parts);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(OracleResult {
                value,
                argmin: params,
                active_row: star,
                points,
            });
        }
    }
    best.ok_or(Error::Infeasible { phase_one: 0.0 })
}

/// Smallest g in [lo, hi] with `pred(g)` for a monotone predicate (hi if none).
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(lo) {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Scores one row block with constraint `coefᵀp ≥ rhs` (feasible) or
/// `coefᵀp = rhs` (active) and cost `weight·‖p − hat‖`.
fn linear_block(
    bx: &[(f64, f64)],
    hat: &[f64],
    weight: f64,
    coef: &[f64],
    rhs: f64,
    norm: NormKind,
    step: f64,
) -> Result<(BlockScore, u128)> {
    let axes: Vec<Vec<f64>> = bx.iter().map(|&(lo, hi)| axis(lo, hi, step)).collect();
    let points = grid_size(&axes);
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }
    let cost = |p: &[f64]| {
        let d: Vec<f64> = p.iter().zip(hat).map(|(a, b)| a - b).collect();
        weight * geometry::norm(&d, norm)
    };
    let mut feasible: Option<(f64, Vec<f64>)> = None;
    for_each_point(&axes, |p| {
        if dot(coef, p) >= rhs - FEAS_TOL {
            let v = cost(p);
            if feasible.as_ref().is_none_or(|(b, _)| v < *b) {
                feasible = Some((v, p.to_vec()));
            }
        }
    });
    // Activity: solve for the coordinate with the largest |coef|, grid the rest.
    let mut active: Option<(f64, Vec<f64>)> = None;
    let pivot = (0..coef.len()).max_by(|&a, &b| coef[a].abs().total_cmp(&coef[b].abs()).then(b.cmp(&a)));
    match pivot {
        Some(k) if coef[k] != 0.0 => {
            let mut rest = axes.clone();
            rest[k] = vec![0.0];
            let (lo, hi) = bx[k];
            for_each_point(&rest, |p| {
                let mut q = p.to_vec();
                let others: f64 = (0..q.len()).filter(|&j| j != k).map(|j| coef[j] * q[j]).sum();
                q[k] = (rhs - others) / coef[k];
                if q[k] < lo - FEAS_TOL || q[k] > hi + FEAS_TOL {
                    return;
                }
                let v = cost(&q);
                if active.as_ref().is_none_or(|(b, _)| v < *b) {
                    active = Some((v, q));
                }
            });
        }
        _ => {
            // Activity does not depend on the block: it holds iff rhs = 0.
            if rhs.abs() <= FEAS_TOL {
                active = feasible.clone();
            }
        }
    }
    Ok((BlockScore { feasible, active }, points))
}
