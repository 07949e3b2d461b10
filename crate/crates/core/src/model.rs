//! Shared domain types: the forward problem, the observed decision, the
//! uncertainty structure, side constraints on the imputed parameters, priors,
//! and the solution/certificate data model. Also hosts [`validate`], which
//! checks dimensions and reports which standing assumptions hold.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cardinality::GammaBounds;
use crate::error::{Error, Result};
use crate::geometry::{self, GammaBar, NormKind};
use crate::lp::{self, LinearProgram, LpOutcome, Sense, VarBounds};

/// Absolute tolerance used when deciding whether a value is zero, a row is
/// active, or a constraint is satisfied.
pub const FEAS_TOL: f64 = 1e-9;

/// Tolerance used when comparing reported quantities.
pub const REPORT_TOL: f64 = 1e-7;

/// The six inverse models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    NloDg,
    NloSd,
    RloIuDg,
    RloIuSd,
    RloCcuDg,
    RloCcuSd,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::NloDg,
        ModelKind::NloSd,
        ModelKind::RloIuDg,
        ModelKind::RloIuSd,
        ModelKind::RloCcuDg,
        ModelKind::RloCcuSd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::NloDg => "nlo-dg",
            ModelKind::NloSd => "nlo-sd",
            ModelKind::RloIuDg => "rlo-iu-dg",
            ModelKind::RloIuSd => "rlo-iu-sd",
            ModelKind::RloCcuDg => "rlo-ccu-dg",
            ModelKind::RloCcuSd => "rlo-ccu-sd",
        }
    }

    /// Duality-gap models take side constraints; strong-duality models take a prior.
    pub fn minimizes_gap(self) -> bool {
        matches!(self, ModelKind::NloDg | ModelKind::RloIuDg | ModelKind::RloCcuDg)
    }

    pub fn family(self) -> Family {
        match self {
            ModelKind::NloDg | ModelKind::NloSd => Family::Nominal,
            ModelKind::RloIuDg | ModelKind::RloIuSd => Family::Interval,
            ModelKind::RloCcuDg | ModelKind::RloCcuSd => Family::Cardinality,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::ModelMismatch(format!("unknown model `{s}`")))
    }
}

/// Which forward problem a model inverts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Nominal,
    Interval,
    Cardinality,
}

/// `minimize cᵀx subject to Ax ≥ b`, with the cost vector unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardProblem {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl ForwardProblem {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::DimensionMismatch {
                field: "A".into(),
                expected: 1,
                found: 0,
            });
        }
        let n = a[0].len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                field: "A[0]".into(),
                expected: 1,
                found: 0,
            });
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    field: format!("A[{i}]"),
                    expected: n,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    field: format!("A[{i}]"),
                });
            }
        }
        if b.len() != a.len() {
            return Err(Error::DimensionMismatch {
                field: "b".into(),
                expected: a.len(),
                found: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { field: "b".into() });
        }
        Ok(ForwardProblem { a, b })
    }

    pub fn num_constraints(&self) -> usize {
        self.a.len()
    }

    pub fn num_vars(&self) -> usize {
        self.a[0].len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Nominal surplus `a_iᵀx − b_i`.
    pub fn surplus(&self, i: usize, x: &[f64]) -> f64 {
        geometry::dot(&self.a[i], x) - self.b[i]
    }

    pub fn with_rhs(&self, i: usize, value: f64) -> ForwardProblem {
        let mut out = self.clone();
        out.b[i] = value;
        out
    }
}

/// The observed decision x̂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservedPoint(Vec<f64>);

impl ObservedPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                field: "x_hat".into(),
            });
        }
        Ok(ObservedPoint(x))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }
}

/// Which coefficients are uncertain and how.
///
/// `cols[i]` lists the 0-based uncertain columns J_i of row i. For the
/// cardinality structure, `alpha[i][k]` is the fixed deviation of column
/// `cols[i][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UncertaintyStructure {
    Nominal,
    Interval {
        cols: Vec<Vec<usize>>,
    },
    Cardinality {
        cols: Vec<Vec<usize>>,
        alpha: Vec<Vec<f64>>,
    },
}

impl UncertaintyStructure {
    pub fn cols(&self) -> Option<&[Vec<usize>]> {
        match self {
            UncertaintyStructure::Nominal => None,
            UncertaintyStructure::Interval { cols } => Some(cols),
            UncertaintyStructure::Cardinality { cols, .. } => Some(cols),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            UncertaintyStructure::Nominal => Family::Nominal,
            UncertaintyStructure::Interval { .. } => Family::Interval,
            UncertaintyStructure::Cardinality { .. } => Family::Cardinality,
        }
    }

    fn check(&self, m: usize, n: usize) -> Result<()> {
        let Some(cols) = self.cols() else {
            return Ok(());
        };
        if cols.len() != m {
            return Err(Error::DimensionMismatch {
                field: "uncertain_columns".into(),
                expected: m,
                found: cols.len(),
            });
        }
        for (i, row) in cols.iter().enumerate() {
            for (k, &j) in row.iter().enumerate() {
                if j >= n {
                    return Err(Error::Precondition(format!(
                        "uncertain column {} of row {} is out of range",
                        j + 1,
                        i + 1
                    )));
                }
                if row[..k].contains(&j) {
                    return Err(Error::Precondition(format!(
                        "uncertain column {} repeated in row {}",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        if let UncertaintyStructure::Cardinality { alpha, .. } = self {
            check_ragged("alpha", alpha, cols)?;
            for (i, row) in alpha.iter().enumerate() {
                if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Precondition(format!(
                        "alpha of row {} must be finite and nonnegative",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_ragged(field: &str, values: &[Vec<f64>], cols: &[Vec<usize>]) -> Result<()> {
    if values.len() != cols.len() {
        return Err(Error::DimensionMismatch {
            field: field.into(),
            expected: cols.len(),
            found: values.len(),
        });
    }
    for (i, (v, c)) in values.iter().zip(cols).enumerate() {
        if v.len() != c.len() {
            return Err(Error::DimensionMismatch {
                field: format!("{field}[{i}]"),
                expected: c.len(),
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// One imputed parameter, addressed by 0-based row/column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "param", rename_all = "lowercase")]
pub enum ParamRef {
    A { row: usize, col: usize },
    Alpha { row: usize, col: usize },
    Gamma { row: usize },
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamRef::A { row, col } => write!(f, "a[{},{}]", row + 1, col + 1),
            ParamRef::Alpha { row, col } => write!(f, "alpha[{},{}]", row + 1, col + 1),
            ParamRef::Gamma { row } => write!(f, "gamma[{}]", row + 1),
        }
    }
}

/// The imputed parameters of a model in canonical order: row-major entries of
/// A, then α row by row following `cols`, or Γ by row.
pub fn canonical_params(family: Family, problem: &ForwardProblem, structure: &UncertaintyStructure) -> Vec<ParamRef> {
    let m = problem.num_constraints();
    match family {
        Family::Nominal => (0..m)
            .flat_map(|row| (0..problem.num_vars()).map(move |col| ParamRef::A { row, col }))
            .collect(),
        Family::Interval => structure
            .cols()
            .unwrap_or(&[])
            .iter()
            .enumerate()
            .flat_map(|(row, cols)| cols.iter().map(move |&col| ParamRef::Alpha { row, col }))
            .collect(),
        Family::Cardinality => (0..m).map(|row| ParamRef::Gamma { row }).collect(),
    }
}

/// The polyhedron Ω = {z : Gz ≤ h} over the imputed parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideConstraints {
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub vars: Vec<ParamRef>,
}

impl SideConstraints {
    /// An unconstrained Ω over `vars`; add rows with [`le`](Self::le),
    /// [`ge`](Self::ge), [`eq`](Self::eq), and [`bounds`](Self::bounds).
    pub fn over(vars: Vec<ParamRef>) -> Self {
        SideConstraints {
            g: Vec::new(),
            h: Vec::new(),
            vars,
        }
    }

    pub fn new(vars: Vec<ParamRef>, g: Vec<Vec<f64>>, h: Vec<f64>) -> Result<Self> {
        let out = SideConstraints { g, h, vars };
        out.check_shape()?;
        Ok(out)
    }

    fn check_shape(&self) -> Result<()> {
        if self.g.len() != self.h.len() {
            return Err(Error::DimensionMismatch {
                field: "omega.h".into(),
                expected: self.g.len(),
                found: self.h.len(),
            });
        }
        for (k, row) in self.g.iter().enumerate() {
            if row.len() != self.vars.len() {
                return Err(Error::DimensionMismatch {
                    field: format!("omega.G[{k}]"),
                    expected: self.vars.len(),
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) || !self.h[k].is_finite() {
                return Err(Error::NonFinite {
                    field: format!("omega row {k}"),
                });
            }
        }
        Ok(())
    }

    fn dense(&self, terms: &[(ParamRef, f64)]) -> Vec<f64> {
        let mut row = vec![0.0; self.vars.len()];
        for (p, c) in terms {
            let col = self
                .vars
                .iter()
                .position(|v| v == p)
                .unwrap_or_else(|| panic!("{p} is not a variable of this side-constraint set"));
            row[col] += c;
        }
        row
    }

    /// Adds `Σ coef·param ≤ rhs`.
    ///
    /// # Panics
    /// If a term names a parameter outside `vars`.
    pub fn le(mut self, terms: &[(ParamRef, f64)], rhs: f64) -> Self {
        let row = self.dense(terms);
        self.g.push(row);
        self.h.push(rhs);
        self
    }

    pub fn ge(self, terms: &[(ParamRef, f64)], rhs: f64) -> Self {
        let neg: Vec<_> = terms.iter().map(|(p, c)| (*p, -c)).collect();
        self.le(&neg, -rhs)
    }

    pub fn eq(self, terms: &[(ParamRef, f64)], rhs: f64) -> Self {
        self.le(terms, rhs).ge(terms, rhs)
    }

    pub fn bounds(self, p: ParamRef, lo: f64, hi: f64) -> Self {
        self.ge(&[(p, 1.0)], lo).le(&[(p, 1.0)], hi)
    }

    /// Maps each of this set's columns onto a position in `canonical`,
    /// rejecting anything that is not a bijection.
    pub fn column_map(&self, canonical: &[ParamRef]) -> Result<Vec<usize>> {
        self.check_shape()?;
        if self.vars.len() != canonical.len() {
            return Err(Error::DimensionMismatch {
                field: "omega.variable_order".into(),
                expected: canonical.len(),
                found: self.vars.len(),
            });
        }
        let mut seen = vec![false; canonical.len()];
        let mut map = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            let pos = canonical
                .iter()
                .position(|c| c == v)
                .ok_or_else(|| Error::Precondition(format!("omega variable {v} is not imputed by this model")))?;
            if seen[pos] {
                return Err(Error::Precondition(format!("omega variable {v} listed twice")));
            }
            seen[pos] = true;
            map.push(pos);
        }
        Ok(map)
    }

    /// Rows of Ω re-expressed over the canonical parameter vector.
    pub fn canonical_rows(&self, canonical: &[ParamRef]) -> Result<Vec<(Vec<f64>, f64)>> {
        let map = self.column_map(canonical)?;
        Ok(self
            .g
            .iter()
            .zip(&self.h)
            .map(|(row, &h)| {
                let mut dense = vec![0.0; canonical.len()];
                for (k, &c) in row.iter().enumerate() {
                    dense[map[k]] += c;
                }
                (dense, h)
            })
            .collect())
    }

    /// Largest violation of `Gz ≤ h` for a canonical parameter vector.
    pub fn violation(&self, canonical: &[ParamRef], z: &[f64]) -> Result<f64> {
        Ok(self
            .canonical_rows(canonical)?
            .iter()
            .map(|(row, h)| geometry::dot(row, z) - h)
            .fold(0.0, f64::max))
    }
}

/// Prior parameter values for the strong-duality models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum PriorEstimates {
    /// Rows â_i of the constraint matrix.
    Matrix(Vec<Vec<f64>>),
    /// α̂_i aligned with the uncertain columns of each row.
    Alpha(Vec<Vec<f64>>),
    /// Γ̂ per row.
    Gamma(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub estimates: PriorEstimates,
    pub xi: Vec<f64>,
    pub norm: NormKind,
}

impl Prior {
    /// Unit weights.
    pub fn new(estimates: PriorEstimates, norm: NormKind) -> Self {
        let m = match &estimates {
            PriorEstimates::Matrix(v) | PriorEstimates::Alpha(v) => v.len(),
            PriorEstimates::Gamma(v) => v.len(),
        };
        Prior {
            estimates,
            xi: vec![1.0; m],
            norm,
        }
    }

    pub fn with_weights(mut self, xi: Vec<f64>) -> Self {
        self.xi = xi;
        self
    }

    pub fn matrix(&self) -> Result<&[Vec<f64>]> {
        match &self.estimates {
            PriorEstimates::Matrix(v) => Ok(v),
            _ => Err(Error::ModelMismatch("prior must hold a constraint matrix".into())),
        }
    }

    pub fn alpha(&self) -> Result<&[Vec<f64>]> {
        match &self.estimates {
            PriorEstimates::Alpha(v) => Ok(v),
            _ => Err(Error::ModelMismatch("prior must hold alpha estimates".into())),
        }
    }

    pub fn gamma(&self) -> Result<&[f64]> {
        match &self.estimates {
            PriorEstimates::Gamma(v) => Ok(v),
            _ => Err(Error::ModelMismatch("prior must hold gamma estimates".into())),
        }
    }

    fn check(&self, problem: &ForwardProblem, structure: &UncertaintyStructure) -> Result<()> {
        let m = problem.num_constraints();
        let n = problem.num_vars();
        if self.xi.len() != m {
            return Err(Error::DimensionMismatch {
                field: "prior.xi".into(),
                expected: m,
                found: self.xi.len(),
            });
        }
        if self.xi.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Precondition("weights xi must be finite and nonnegative".into()));
        }
        match &self.estimates {
            PriorEstimates::Matrix(rows) => {
                if rows.len() != m {
                    return Err(Error::DimensionMismatch {
                        field: "prior.estimates".into(),
                        expected: m,
                        found: rows.len(),
                    });
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.len() != n {
                        return Err(Error::DimensionMismatch {
                            field: format!("prior.estimates[{i}]"),
                            expected: n,
                            found: r.len(),
                        });
                    }
                }
            }
            PriorEstimates::Alpha(rows) => {
                let cols = structure
                    .cols()
                    .ok_or_else(|| Error::ModelMismatch("alpha prior needs uncertain columns".into()))?;
                check_ragged("prior.estimates", rows, cols)?;
            }
            PriorEstimates::Gamma(g) => {
                if g.len() != m {
                    return Err(Error::DimensionMismatch {
                        field: "prior.estimates".into(),
                        expected: m,
                        found: g.len(),
                    });
                }
            }
        }
        let finite = match &self.estimates {
            PriorEstimates::Matrix(v) | PriorEstimates::Alpha(v) => v.iter().flatten().all(|x| x.is_finite()),
            PriorEstimates::Gamma(v) => v.iter().all(|x| x.is_finite()),
        };
        if !finite {
            return Err(Error::NonFinite {
                field: "prior.estimates".into(),
            });
        }
        Ok(())
    }
}

/// Imputed parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum Imputed {
    Matrix(Vec<Vec<f64>>),
    Alpha(Vec<Vec<f64>>),
    Gamma(Vec<f64>),
}

impl Imputed {
    /// Flattened in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        match self {
            Imputed::Matrix(v) | Imputed::Alpha(v) => v.iter().flatten().copied().collect(),
            Imputed::Gamma(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    UnboundedGap,
    TrivialDetected,
}

/// Per-constraint quantities the solvers rank rows by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerConstraint {
    /// Optimal values t_i of the per-row subproblems (`None` when a
    /// subproblem is infeasible).
    Subproblems { t: Vec<Option<f64>> },
    /// Closed-form activation cost f_i and feasibility cost g_i.
    Projections { f: Vec<f64>, g: Vec<f64> },
}

/// Auxiliary primal and dual blocks of the inverse formulation, plus the
/// residual of each constraint group.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub u: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub lambda: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub residuals: BTreeMap<String, f64>,
}

impl Certificate {
    pub fn is_empty(&self) -> bool {
        self.u.is_empty() && self.lambda.is_empty() && self.phi.is_empty()
    }
}

/// Counts of the optimization problems a solve performed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub lp_solves: usize,
    pub gamma_bar_evals: usize,
}

/// A data perturbation that can lift a trivial strong-duality imputation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Remediation {
    /// Add `delta` to b_row.
    RhsEpsilon { row: usize, delta: f64 },
    /// Add `delta` to â_{row,col}.
    PriorEpsilon { row: usize, col: usize, delta: f64 },
    /// Set ξ_row to `weight`.
    WeightBoost { row: usize, weight: f64 },
}

impl fmt::Display for Remediation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Remediation::RhsEpsilon { row, delta } => write!(f, "RhsEpsilon(b{} += {delta})", row + 1),
            Remediation::PriorEpsilon { row, col, delta } => {
                write!(f, "PriorEpsilon(a{}{} += {delta})", row + 1, col + 1)
            }
            Remediation::WeightBoost { row, weight } => write!(f, "WeightBoost(xi{} = {weight})", row + 1),
        }
    }
}

/// Result of one of the six solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseSolution {
    pub model: ModelKind,
    pub status: SolveStatus,
    pub imputed: Imputed,
    pub cost: Vec<f64>,
    pub dual_pi: Vec<f64>,
    pub duality_gap: f64,
    /// 0-based index i* of the constraint the cost vector is perpendicular to.
    pub active_row: usize,
    /// Duality gap for the gap models, prior deviation for the others.
    pub objective_value: f64,
    pub per_constraint: PerConstraint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_bounds: Option<GammaBounds>,
    #[serde(default)]
    pub certificate: Certificate,
    #[serde(default)]
    pub stats: SolveStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub remediation: Vec<Remediation>,
}

impl InverseSolution {
    /// 1-based i*.
    pub fn active_index(&self) -> usize {
        self.active_row + 1
    }

    pub fn matrix(&self) -> Option<&[Vec<f64>]> {
        match &self.imputed {
            Imputed::Matrix(a) => Some(a),
            _ => None,
        }
    }

    pub fn alpha(&self) -> Option<&[Vec<f64>]> {
        match &self.imputed {
            Imputed::Alpha(a) => Some(a),
            _ => None,
        }
    }

    pub fn gamma(&self) -> Option<&[f64]> {
        match &self.imputed {
            Imputed::Gamma(g) => Some(g),
            _ => None,
        }
    }

    pub fn subproblem_values(&self) -> Option<&[Option<f64>]> {
        match &self.per_constraint {
            PerConstraint::Subproblems { t } => Some(t),
            _ => None,
        }
    }

    pub fn projections(&self) -> Option<(&[f64], &[f64])> {
        match &self.per_constraint {
            PerConstraint::Projections { f, g } => Some((f, g)),
            _ => None,
        }
    }
}

/// Everything an inverse model is solved from.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseInstance {
    pub problem: ForwardProblem,
    pub x_hat: ObservedPoint,
    pub structure: UncertaintyStructure,
    pub omega: Option<SideConstraints>,
    pub prior: Option<Prior>,
}

impl InverseInstance {
    pub fn nominal(problem: ForwardProblem, x_hat: ObservedPoint) -> Self {
        InverseInstance {
            problem,
            x_hat,
            structure: UncertaintyStructure::Nominal,
            omega: None,
            prior: None,
        }
    }

    pub fn with_structure(mut self, structure: UncertaintyStructure) -> Self {
        self.structure = structure;
        self
    }

    pub fn with_omega(mut self, omega: SideConstraints) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn with_prior(mut self, prior: Prior) -> Self {
        self.prior = Some(prior);
        self
    }
}

/// Outcome of one assumption check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckOutcome {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    /// Assumption number, 1 through 10.
    pub id: u8,
    pub outcome: CheckOutcome,
    /// 1-based rows responsible for a warn or fail.
    pub rows: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn get(&self, id: u8) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn outcome(&self, id: u8) -> Option<CheckOutcome> {
        self.get(id).map(|c| c.outcome)
    }

    /// No assumption failed (warnings allowed).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != CheckOutcome::Fail)
    }

    fn push(&mut self, id: u8, rows: Vec<usize>, bad: CheckOutcome, detail: impl Into<String>) {
        let outcome = if rows.is_empty() { CheckOutcome::Pass } else { bad };
        self.checks.push(AssumptionCheck {
            id,
            outcome,
            rows: rows.into_iter().map(|i| i + 1).collect(),
            detail: detail.into(),
        });
    }
}

/// Checks dimensions (hard errors) and the standing assumptions that apply to
/// `model` (reported per assumption).
pub fn validate(
    problem: &ForwardProblem,
    x_hat: &ObservedPoint,
    structure: &UncertaintyStructure,
    model: ModelKind,
    omega: Option<&SideConstraints>,
    prior: Option<&Prior>,
) -> Result<ValidationReport> {
    let m = problem.num_constraints();
    let n = problem.num_vars();
    if x_hat.len() != n {
        return Err(Error::DimensionMismatch {
            field: "x_hat".into(),
            expected: n,
            found: x_hat.len(),
        });
    }
    if structure.family() != model.family() {
        return Err(Error::ModelMismatch(format!(
            "{model} needs a {:?} uncertainty structure",
            model.family()
        )));
    }
    structure.check(m, n)?;
    let canonical = canonical_params(model.family(), problem, structure);
    if let Some(omega) = omega {
        omega.column_map(&canonical)?;
    }
    if let Some(prior) = prior {
        prior.check(problem, structure)?;
    }

    let x = x_hat.as_slice();
    let mut report = ValidationReport::default();
    match model {
        ModelKind::NloDg => {
            let rows = assumption_one_violations(problem, x, omega, &canonical)?;
            report.push(1, rows, CheckOutcome::Warn, "b_i > 0 or a_i cannot vanish under Ω and Ax̂ ≥ b");
        }
        ModelKind::NloSd => {
            let zero_b = (0..m).filter(|&i| problem.b()[i] == 0.0).collect();
            report.push(2, zero_b, CheckOutcome::Warn, "b_i ≠ 0 (trivial solutions possible otherwise)");
            if let Some(prior) = prior {
                let zero_rows = prior
                    .matrix()?
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.iter().all(|v| *v == 0.0))
                    .map(|(i, _)| i)
                    .collect();
                report.push(2, zero_rows, CheckOutcome::Warn, "prior rows â_i ≠ 0");
            }
            let rows = if x_hat.is_zero() { vec![0] } else { vec![] };
            report.push(3, rows, CheckOutcome::Fail, "x̂ ≠ 0");
        }
        ModelKind::RloIuDg | ModelKind::RloIuSd => {
            let cols = structure.cols().unwrap_or(&[]);
            let empty = (0..m).filter(|&i| cols[i].is_empty()).collect();
            report.push(4, empty, CheckOutcome::Fail, "every row has an uncertain coefficient");
            let bad = (0..m)
                .filter(|&i| {
                    problem.b()[i] <= 0.0 && !(0..n).any(|j| !cols[i].contains(&j) && problem.row(i)[j] != 0.0)
                })
                .collect();
            report.push(5, bad, CheckOutcome::Warn, "b_i > 0 or a certain coefficient is nonzero");
            if model == ModelKind::RloIuSd {
                let any = cols.iter().flatten().any(|&j| x[j] != 0.0);
                let rows = if any { vec![] } else { (0..m).collect() };
                report.push(6, rows, CheckOutcome::Fail, "some uncertain column has x̂_j ≠ 0");
                let infeasible = nominal_violations(problem, x);
                report.push(7, infeasible, CheckOutcome::Fail, "x̂ nominally feasible");
            }
        }
        ModelKind::RloCcuDg | ModelKind::RloCcuSd => {
            let UncertaintyStructure::Cardinality { cols, alpha } = structure else {
                unreachable!("family checked above");
            };
            let infeasible = nominal_violations(problem, x);
            let nominal_ok = infeasible.is_empty();
            report.push(7, infeasible, CheckOutcome::Fail, "x̂ nominally feasible");
            if nominal_ok {
                let non_unique = (0..m)
                    .filter(|&i| {
                        matches!(
                            geometry::gamma_bar(problem, i, &cols[i], &alpha[i], x),
                            Ok(GammaBar::Interval { .. })
                        )
                    })
                    .collect();
                report.push(8, non_unique, CheckOutcome::Warn, "Γ̄_i unique");
            }
            if model == ModelKind::RloCcuSd {
                if let Some(prior) = prior {
                    let gamma = prior.gamma()?;
                    let outside = (0..m)
                        .filter(|&i| gamma[i] < 0.0 || gamma[i] > cols[i].len() as f64)
                        .collect();
                    report.push(9, outside, CheckOutcome::Warn, "Γ̂_i ∈ [0, |J_i|] (clamped otherwise)");
                }
            }
            let bad = (0..m)
                .filter(|&i| {
                    let uncertain_ok = cols[i]
                        .iter()
                        .zip(&alpha[i])
                        .any(|(&j, &al)| problem.row(i)[j].abs() > al);
                    let certain_ok = (0..n).any(|j| !cols[i].contains(&j) && problem.row(i)[j] != 0.0);
                    !(uncertain_ok || certain_ok)
                })
                .collect();
            report.push(10, bad, CheckOutcome::Warn, "|a_ij| > α_ij for some j ∈ J_i, or a certain a_ij ≠ 0");
        }
    }
    Ok(report)
}

pub(crate) fn nominal_violations(problem: &ForwardProblem, x: &[f64]) -> Vec<usize> {
    (0..problem.num_constraints())
        .filter(|&i| problem.surplus(i, x) < -FEAS_TOL)
        .collect()
}

/// Rows with b_i ≤ 0 for which some A ∈ Ω with Ax̂ ≥ b has a_i = 0. Decided
/// exactly by one feasibility LP per such row.
fn assumption_one_violations(
    problem: &ForwardProblem,
    x: &[f64],
    omega: Option<&SideConstraints>,
    canonical: &[ParamRef],
) -> Result<Vec<usize>> {
    let m = problem.num_constraints();
    let n = problem.num_vars();
    let omega_rows = match omega {
        Some(o) => o.canonical_rows(canonical)?,
        None => Vec::new(),
    };
    let mut bad = Vec::new();
    for i in 0..m {
        if problem.b()[i] > 0.0 {
            continue;
        }
        let mut lp = LinearProgram::new(vec![0.0; m * n]);
        for k in 0..m {
            let mut row = vec![0.0; m * n];
            row[k * n..(k + 1) * n].copy_from_slice(x);
            lp.push_row(row, Sense::Ge, problem.b()[k]);
        }
        for (row, h) in &omega_rows {
            lp.push_row(row.clone(), Sense::Le, *h);
        }
        for j in 0..n {
            lp.set_bounds(i * n + j, VarBounds::fixed(0.0));
        }
        if let LpOutcome::Optimal(_) = lp::solve_lp(&lp)? {
            bad.push(i);
        }
    }
    Ok(bad)
}
