//! On-disk JSON documents.
//!
//! Problem files are written by hand, so rows, columns and parameter names in
//! them are 1-based. Solution and region documents are produced by the tool
//! and carry the library's 0-based indices.

use std::fmt;
use std::fs;
use std::path::Path;

use io_recover::regions::RegionPolyline;
use io_recover::{
    canonical_params, CertificateReport, Family, ForwardProblem, InverseInstance, InverseSolution, ModelKind,
    NormKind, ObservedPoint, ParamRef, Prior, PriorEstimates, SideConstraints, UncertaintyStructure,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "1";

/// A malformed or inconsistent input document.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    /// Dotted path of the offending field, when known.
    pub field: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl InputError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        InputError {
            field: Some(field.into()),
            line: None,
            column: None,
            message: message.into(),
        }
    }

    fn plain(message: impl Into<String>) -> Self {
        InputError {
            field: None,
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "line {l} column {c}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "field `{field}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for InputError {}

impl From<io_recover::Error> for InputError {
    fn from(e: io_recover::Error) -> Self {
        match &e {
            io_recover::Error::DimensionMismatch { field, .. } | io_recover::Error::NonFinite { field } => {
                InputError::field(field.clone(), e.to_string())
            }
            _ => InputError::plain(e.to_string()),
        }
    }
}

/// Parses JSON, reporting the field path and position of the first problem.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let out: T = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        InputError {
            field: (path != "." && !path.is_empty()).then_some(path),
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: strip_position(&inner.to_string()),
        }
    })?;
    Ok(out)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(k) => msg[..k].to_string(),
        None => msg.to_string(),
    }
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|e| InputError::plain(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn write<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    fs::write(path, to_text(value).map_err(std::io::Error::other)?)
}

/// Indented JSON with each array of scalars (a vector, or one matrix row) on a
/// single line.
pub fn to_text<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    emit(&v, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

fn emit(v: &Value, depth: usize, out: &mut String) -> serde_json::Result<()> {
    let indent = |d: usize| "  ".repeat(d);
    match v {
        Value::Array(items) if items.is_empty() || items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            let parts = items.iter().map(serde_json::to_string).collect::<serde_json::Result<Vec<_>>>()?;
            out.push('[');
            out.push_str(&parts.join(", "));
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                out.push_str(&indent(depth + 1));
                emit(x, depth + 1, out)?;
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&indent(depth));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                out.push_str(&indent(depth + 1));
                out.push_str(&serde_json::to_string(key)?);
                out.push_str(": ");
                emit(x, depth + 1, out)?;
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&indent(depth));
            out.push('}');
        }
        _ => out.push_str(&serde_json::to_string(v)?),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: String,
    pub model: ModelKind,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub x_hat: Vec<f64>,
    /// J_i per row, 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertain_columns: Option<Vec<Vec<usize>>>,
    /// Fixed deviations for the budgeted models, the prior α̂ for the
    /// interval strong-duality model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorFile>,
}

/// Ω = {z : Gz ≤ h}; `variable_order` names the columns of G, e.g. `a[3,1]`,
/// `alpha[3,2]` or `gamma[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaFile {
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub variable_order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorFile {
    /// Â for nlo-sd (defaults to A), Γ̂ for rlo-ccu-sd. The interval model
    /// takes its prior from `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimates: Option<Estimates>,
    /// Row weights ξ, all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<f64>>,
    pub norm: NormKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Estimates {
    Matrix(Vec<Vec<f64>>),
    Vector(Vec<f64>),
}

/// Parses `a[i,j]`, `alpha[i,j]` or `gamma[i]` with 1-based indices.
pub fn parse_param(name: &str) -> Option<ParamRef> {
    let name = name.trim();
    let open = name.find('[')?;
    let inner = name[open + 1..].strip_suffix(']')?;
    let idx: Vec<usize> = inner
        .split(',')
        .map(|s| s.trim().parse::<usize>().ok().filter(|&k| k >= 1).map(|k| k - 1))
        .collect::<Option<_>>()?;
    match (&name[..open], idx.as_slice()) {
        ("a", &[row, col]) => Some(ParamRef::A { row, col }),
        ("alpha", &[row, col]) => Some(ParamRef::Alpha { row, col }),
        ("gamma", &[row]) => Some(ParamRef::Gamma { row }),
        _ => None,
    }
}

fn to_zero_based(cols: &[Vec<usize>]) -> Result<Vec<Vec<usize>>, InputError> {
    cols.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|&j| {
                    j.checked_sub(1).ok_or_else(|| {
                        InputError::field(format!("uncertain_columns[{i}]"), "columns are numbered from 1")
                    })
                })
                .collect()
        })
        .collect()
}

impl ProblemFile {
    /// Builds the solver instance, checking that the fields present are the
    /// ones the model uses.
    pub fn to_instance(&self) -> Result<InverseInstance, InputError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(InputError::field(
                "schema_version",
                format!("unsupported version `{}`, expected `{SCHEMA_VERSION}`", self.schema_version),
            ));
        }
        let model = self.model;
        let problem = ForwardProblem::new(self.a.clone(), self.b.clone())?;
        let x_hat = ObservedPoint::new(self.x_hat.clone()).map_err(|e| InputError::field("x_hat", e.to_string()))?;
        let family = model.family();
        let forbid = |present: bool, field: &str| {
            if present {
                Err(InputError::field(field, format!("not used by {model}")))
            } else {
                Ok(())
            }
        };
        let require = |field: &str| InputError::field(field, format!("required by {model}"));

        let cols = match (family, &self.uncertain_columns) {
            (Family::Nominal, c) => {
                forbid(c.is_some(), "uncertain_columns")?;
                None
            }
            (_, Some(c)) => Some(to_zero_based(c)?),
            (_, None) => return Err(require("uncertain_columns")),
        };
        let structure = match family {
            Family::Nominal => UncertaintyStructure::Nominal,
            Family::Interval => UncertaintyStructure::Interval { cols: cols.unwrap() },
            Family::Cardinality => UncertaintyStructure::Cardinality {
                cols: cols.unwrap(),
                alpha: self.alpha.clone().ok_or_else(|| require("alpha"))?,
            },
        };
        match model {
            ModelKind::NloDg | ModelKind::NloSd | ModelKind::RloIuDg => forbid(self.alpha.is_some(), "alpha")?,
            ModelKind::RloIuSd => {
                if self.alpha.is_none() {
                    return Err(require("alpha"));
                }
            }
            _ => {}
        }

        let mut instance = InverseInstance::nominal(problem, x_hat).with_structure(structure);
        if model.minimizes_gap() {
            forbid(self.prior.is_some(), "prior")?;
            if let Some(o) = &self.omega {
                let omega = omega_from_file(o, family, &instance)?;
                instance = instance.with_omega(omega);
            }
        } else {
            forbid(self.omega.is_some(), "omega")?;
            let p = self.prior.as_ref().ok_or_else(|| require("prior"))?;
            let estimates = match (model, &p.estimates) {
                (ModelKind::NloSd, None) => PriorEstimates::Matrix(self.a.clone()),
                (ModelKind::NloSd, Some(Estimates::Matrix(a))) => PriorEstimates::Matrix(a.clone()),
                (ModelKind::RloIuSd, None) => PriorEstimates::Alpha(self.alpha.clone().unwrap()),
                (ModelKind::RloIuSd, Some(_)) => {
                    return Err(InputError::field("prior.estimates", "the interval prior is given by `alpha`"))
                }
                (ModelKind::RloCcuSd, Some(Estimates::Vector(g))) => PriorEstimates::Gamma(g.clone()),
                (ModelKind::RloCcuSd, None) => return Err(require("prior.estimates")),
                _ => {
                    let want = if model == ModelKind::NloSd { "a matrix" } else { "one budget per row" };
                    return Err(InputError::field("prior.estimates", format!("{model} expects {want}")));
                }
            };
            let mut prior = Prior::new(estimates, p.norm);
            if let Some(xi) = &p.xi {
                prior = prior.with_weights(xi.clone());
            }
            instance = instance.with_prior(prior);
        }
        // Dimension and range errors only; assumption outcomes are the caller's.
        io_recover::validate(
            &instance.problem,
            &instance.x_hat,
            &instance.structure,
            model,
            instance.omega.as_ref(),
            instance.prior.as_ref(),
        )?;
        Ok(instance)
    }

    /// Inverse of [`to_instance`](Self::to_instance).
    pub fn from_instance(model: ModelKind, instance: &InverseInstance) -> Self {
        let problem = &instance.problem;
        let (uncertain_columns, mut alpha) = match &instance.structure {
            UncertaintyStructure::Nominal => (None, None),
            UncertaintyStructure::Interval { cols } => (Some(cols.clone()), None),
            UncertaintyStructure::Cardinality { cols, alpha } => (Some(cols.clone()), Some(alpha.clone())),
        };
        let uncertain_columns =
            uncertain_columns.map(|c: Vec<Vec<usize>>| c.into_iter().map(|r| r.into_iter().map(|j| j + 1).collect()).collect());
        let prior = instance.prior.as_ref().map(|p| {
            let estimates = match &p.estimates {
                PriorEstimates::Matrix(a) => Some(Estimates::Matrix(a.clone())),
                PriorEstimates::Alpha(a) => {
                    alpha = Some(a.clone());
                    None
                }
                PriorEstimates::Gamma(g) => Some(Estimates::Vector(g.clone())),
            };
            PriorFile {
                estimates,
                xi: Some(p.xi.clone()),
                norm: p.norm,
            }
        });
        let omega = instance.omega.as_ref().map(|o| OmegaFile {
            g: o.g.clone(),
            h: o.h.clone(),
            variable_order: o.vars.iter().map(|v| v.to_string()).collect(),
        });
        ProblemFile {
            schema_version: SCHEMA_VERSION.into(),
            model,
            a: problem.a().to_vec(),
            b: problem.b().to_vec(),
            x_hat: instance.x_hat.as_slice().to_vec(),
            uncertain_columns,
            alpha,
            omega,
            prior,
        }
    }
}

fn omega_from_file(o: &OmegaFile, family: Family, instance: &InverseInstance) -> Result<SideConstraints, InputError> {
    let vars = o
        .variable_order
        .iter()
        .enumerate()
        .map(|(k, name)| {
            parse_param(name)
                .ok_or_else(|| InputError::field(format!("omega.variable_order[{k}]"), format!("cannot read `{name}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let omega = SideConstraints::new(vars, o.g.clone(), o.h.clone())?;
    omega.column_map(&canonical_params(family, &instance.problem, &instance.structure))?;
    Ok(omega)
}

/// Output of `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub schema_version: String,
    pub solution: InverseSolution,
    pub certificate_report: CertificateReport,
}

/// Output of `regions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsFile {
    pub schema_version: String,
    pub bbox: [f64; 4],
    pub polylines: Vec<RegionPolyline>,
}
