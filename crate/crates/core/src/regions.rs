//! Boundary polylines of nominal and robust feasible regions in the plane.
//!
//! A robust row is piecewise affine in x: the interval counterpart changes
//! with the sign of each coordinate, and the budgeted counterpart also with
//! the order of α_j|x_j|. Splitting the bounding box along the axes and the
//! ordering lines α₁|x₁| = α₂|x₂| gives convex cells on which every row is
//! affine, so each piece of boundary is an exact segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, dot};
use crate::model::{
    ForwardProblem, Imputed, InverseInstance, InverseSolution, PriorEstimates, UncertaintyStructure,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Nominal,
    PriorRobust,
    ImputedRobust,
}

/// Boundary of one constraint within the bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPolyline {
    /// 0-based row.
    pub constraint_index: usize,
    pub kind: RegionKind,
    pub segments: Vec<[[f64; 2]; 2]>,
}

/// How one row's coefficients are realized at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum RowShape {
    Affine(Vec<f64>),
    Interval {
        a: Vec<f64>,
        alpha: Vec<f64>,
        cols: Vec<usize>,
    },
    Budget {
        a: Vec<f64>,
        alpha: Vec<f64>,
        gamma: f64,
        cols: Vec<usize>,
    },
}

impl RowShape {
    pub fn realize(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            RowShape::Affine(a) => Ok(a.clone()),
            RowShape::Interval { a, alpha, cols } => geometry::realized_row_interval(a, alpha, cols, x),
            RowShape::Budget { a, alpha, gamma, cols } => {
                geometry::realized_row_cardinality(a, alpha, *gamma, cols, x)
            }
        }
    }

    /// Lines through the origin (as normals) across which the realization
    /// may change.
    fn breaks(&self) -> Vec<[f64; 2]> {
        match self {
            RowShape::Affine(_) => Vec::new(),
            RowShape::Interval { .. } => vec![[1.0, 0.0], [0.0, 1.0]],
            RowShape::Budget { alpha, cols, .. } => {
                let mut out = vec![[1.0, 0.0], [0.0, 1.0]];
                if let ([j, k], [aj, ak]) = (cols.as_slice(), alpha.as_slice()) {
                    if *aj > 0.0 && *ak > 0.0 && j != k {
                        let mut w = [0.0; 2];
                        w[*j] = *aj;
                        let mut v = w;
                        w[*k] -= ak;
                        v[*k] += ak;
                        out.push(w);
                        out.push(v);
                    }
                }
                out
            }
        }
    }
}

/// Row shapes of the forward problem under the given parameters.
pub fn row_shapes(problem: &ForwardProblem, structure: &UncertaintyStructure, params: &Imputed) -> Result<Vec<RowShape>> {
    let m = problem.num_constraints();
    let shape = |i: usize| -> Result<RowShape> {
        let a = problem.row(i).to_vec();
        Ok(match (params, structure) {
            (Imputed::Matrix(rows), _) => RowShape::Affine(rows[i].clone()),
            (Imputed::Alpha(alpha), UncertaintyStructure::Interval { cols }) => RowShape::Interval {
                a,
                alpha: alpha[i].clone(),
                cols: cols[i].clone(),
            },
            (Imputed::Gamma(gamma), UncertaintyStructure::Cardinality { cols, alpha }) => RowShape::Budget {
                a,
                alpha: alpha[i].clone(),
                gamma: gamma[i].clamp(0.0, cols[i].len() as f64),
                cols: cols[i].clone(),
            },
            _ => return Err(Error::ModelMismatch("parameters do not match the uncertainty structure".into())),
        })
    };
    (0..m).map(shape).collect()
}

/// Polylines for the nominal rows, the prior's robust rows (when the
/// instance carries a prior), and the solution's imputed rows.
pub fn regions(
    instance: &InverseInstance,
    solution: Option<&InverseSolution>,
    bbox: [f64; 4],
) -> Result<Vec<RegionPolyline>> {
    let problem = &instance.problem;
    let n = problem.num_vars();
    if n != 2 {
        return Err(Error::DimensionNotPlottable(n));
    }
    let [x0, y0, x1, y1] = bbox;
    if !(x0 < x1 && y0 < y1) || bbox.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("bounding box must be finite with x0 < x1 and y0 < y1".into()));
    }
    let mut layers = vec![(RegionKind::Nominal, problem.a().iter().cloned().map(RowShape::Affine).collect())];
    if let Some(prior) = &instance.prior {
        let params = match &prior.estimates {
            PriorEstimates::Matrix(a) => Imputed::Matrix(a.clone()),
            PriorEstimates::Alpha(a) => Imputed::Alpha(a.clone()),
            PriorEstimates::Gamma(g) => Imputed::Gamma(g.clone()),
        };
        layers.push((RegionKind::PriorRobust, row_shapes(problem, &instance.structure, &params)?));
    }
    if let Some(sol) = solution {
        layers.push((
            RegionKind::ImputedRobust,
            row_shapes(problem, &instance.structure, &sol.imputed)?,
        ));
    }
    let boxed = vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
    let mut out = Vec::new();
    for (kind, shapes) in layers {
        for (i, shape) in shapes.iter().enumerate() {
            out.push(RegionPolyline {
                constraint_index: i,
                kind,
                segments: boundary(shape, problem.b()[i], &boxed)?,
            });
        }
    }
    Ok(out)
}

/// Segments of {x : realized(x)ᵀx = b} inside the convex polygon `bbox`.
pub fn boundary(shape: &RowShape, b: f64, bbox: &[[f64; 2]]) -> Result<Vec<[[f64; 2]; 2]>> {
    let mut cells = vec![bbox.to_vec()];
    for normal in shape.breaks() {
        cells = cells
            .into_iter()
            .flat_map(|c| [clip(&c, normal), clip(&c, [-normal[0], -normal[1]])])
            .filter(|c| area(c) > 1e-12)
            .collect();
    }
    let mut segments = Vec::new();
    for cell in &cells {
        let k = cell.len() as f64;
        let centroid = [
            cell.iter().map(|p| p[0]).sum::<f64>() / k,
            cell.iter().map(|p| p[1]).sum::<f64>() / k,
        ];
        let a = shape.realize(&centroid)?;
        if let Some(seg) = line_in_polygon(&a, b, cell) {
            segments.push(seg);
        }
    }
    Ok(segments)
}

/// Part of the convex polygon on the side `normal·x ≥ 0`.
fn clip(poly: &[[f64; 2]], normal: [f64; 2]) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| normal[0] * p[0] + normal[1] * p[1];
    let mut out = Vec::new();
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let (sp, sq) = (side(&p), side(&q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        s += p[0] * q[1] - p[1] * q[0];
    }
    0.5 * s.abs()
}

/// Intersection of the line aᵀx = b with a counterclockwise convex polygon.
fn line_in_polygon(a: &[f64], b: f64, poly: &[[f64; 2]]) -> Option<[[f64; 2]; 2]> {
    let nn = dot(a, a);
    if nn <= 1e-18 {
        return None;
    }
    let p0 = [a[0] * b / nn, a[1] * b / nn];
    let d = [-a[1], a[0]];
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..poly.len() {
        let v = poly[k];
        let w = poly[(k + 1) % poly.len()];
        let e = [w[0] - v[0], w[1] - v[1]];
        // inside: cross(e, p − v) ≥ 0
        let base = e[0] * (p0[1] - v[1]) - e[1] * (p0[0] - v[0]);
        let rate = e[0] * d[1] - e[1] * d[0];
        if rate.abs() <= 1e-15 {
            if base < -1e-12 {
                return None;
            }
        } else if rate > 0.0 {
            lo = lo.max(-base / rate);
        } else {
            hi = hi.min(-base / rate);
        }
    }
    if hi - lo <= 1e-12 {
        return None;
    }
    let at = |t: f64| [p0[0] + t * d[0], p0[1] + t * d[1]];
    Some([at(lo), at(hi)])
}
