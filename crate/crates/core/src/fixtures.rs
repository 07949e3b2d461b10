//! The eight worked examples as ready-made instances.
//!
//! Examples 1 to 6 cover one model each. Examples 7 and 8 are strong-duality
//! nominal instances whose zero right-hand side produces a trivial imputation.

use crate::geometry::NormKind;
use crate::model::{
    canonical_params, Family, ForwardProblem, InverseInstance, ModelKind, ObservedPoint, ParamRef, Prior,
    PriorEstimates, SideConstraints, UncertaintyStructure,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub id: u8,
    pub name: &'static str,
    pub model: ModelKind,
    pub instance: InverseInstance,
}

fn problem(a: &[[f64; 2]], b: &[f64]) -> ForwardProblem {
    ForwardProblem::new(a.iter().map(|r| r.to_vec()).collect(), b.to_vec()).expect("fixture data is valid")
}

fn point(x: [f64; 2]) -> ObservedPoint {
    ObservedPoint::new(x.to_vec()).expect("fixture data is valid")
}

/// The triangle shared by examples 2 to 6.
fn triangle() -> ForwardProblem {
    problem(&[[1.0, 0.0], [0.0, 1.0], [-2.0, -1.0]], &[-6.0, -6.0, -10.0])
}

fn robust_cols() -> Vec<Vec<usize>> {
    vec![vec![0], vec![1], vec![0, 1]]
}

fn budgeted() -> UncertaintyStructure {
    UncertaintyStructure::Cardinality {
        cols: robust_cols(),
        alpha: vec![vec![2.5], vec![0.5], vec![2.0, 1.0]],
    }
}

pub fn example(id: u8) -> Option<Fixture> {
    let x = point([-2.0, 6.0]);
    let fixture = match id {
        1 => {
            let p = problem(&[[1.0, 0.0], [0.0, 1.0], [-2.0, -1.0]], &[-6.0, -6.0, -10.0]);
            let a = |row, col| ParamRef::A { row, col };
            let omega = SideConstraints::over(canonical_params(Family::Nominal, &p, &UncertaintyStructure::Nominal))
                .bounds(a(0, 0), 1.0, 1.5)
                .bounds(a(1, 1), 2.0, 3.0)
                .eq(&[(a(0, 1), 1.0)], 0.0)
                .eq(&[(a(1, 0), 1.0)], 0.0)
                .le(&[(a(2, 0), 1.0)], -2.0)
                .bounds(a(2, 1), -2.0, -0.5)
                .le(&[(a(2, 0), 1.0), (a(1, 1), 2.0)], 2.0);
            Fixture {
                id,
                name: "nominal, duality gap",
                model: ModelKind::NloDg,
                instance: InverseInstance::nominal(p, x).with_omega(omega),
            }
        }
        2 => {
            let p = triangle();
            let prior = Prior::new(PriorEstimates::Matrix(p.a().to_vec()), NormKind::L2);
            Fixture {
                id,
                name: "nominal, strong duality",
                model: ModelKind::NloSd,
                instance: InverseInstance::nominal(p, x).with_prior(prior),
            }
        }
        3 => {
            let structure = UncertaintyStructure::Interval { cols: robust_cols() };
            let p = triangle();
            let vars = canonical_params(Family::Interval, &p, &structure);
            let mut omega = SideConstraints::over(vars.clone());
            for &v in &vars {
                omega = omega.ge(&[(v, 1.0)], 0.5);
            }
            let all: Vec<(ParamRef, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
            omega = omega.le(&all, 2.5);
            Fixture {
                id,
                name: "interval uncertainty, duality gap",
                model: ModelKind::RloIuDg,
                instance: InverseInstance::nominal(p, x).with_structure(structure).with_omega(omega),
            }
        }
        4 => {
            let structure = UncertaintyStructure::Interval { cols: robust_cols() };
            let prior = Prior::new(
                PriorEstimates::Alpha(vec![vec![0.5], vec![0.5], vec![1.0, 0.0]]),
                NormKind::L1,
            );
            Fixture {
                id,
                name: "interval uncertainty, strong duality",
                model: ModelKind::RloIuSd,
                instance: InverseInstance::nominal(triangle(), x)
                    .with_structure(structure)
                    .with_prior(prior),
            }
        }
        5 => {
            let p = triangle();
            let structure = budgeted();
            let vars = canonical_params(Family::Cardinality, &p, &structure);
            let mut omega = SideConstraints::over(vars.clone());
            for &v in &vars {
                omega = omega.ge(&[(v, 1.0)], 0.2);
            }
            let all: Vec<(ParamRef, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
            omega = omega.le(&all, 1.0);
            Fixture {
                id,
                name: "budgeted uncertainty, duality gap",
                model: ModelKind::RloCcuDg,
                instance: InverseInstance::nominal(p, x).with_structure(structure).with_omega(omega),
            }
        }
        6 => Fixture {
            id,
            name: "budgeted uncertainty, strong duality",
            model: ModelKind::RloCcuSd,
            instance: InverseInstance::nominal(triangle(), x)
                .with_structure(budgeted())
                .with_prior(Prior::new(PriorEstimates::Gamma(vec![0.2, 1.0, 1.0]), NormKind::L1)),
        },
        7 => {
            let a = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, -1.0]];
            let p = problem(&a, &[-3.0, -3.0, 0.0, -10.0]);
            let prior = Prior::new(PriorEstimates::Matrix(p.a().to_vec()), NormKind::L2);
            Fixture {
                id,
                name: "trivial cost vector and constraint",
                model: ModelKind::NloSd,
                instance: InverseInstance::nominal(p, point([2.0, 2.0])).with_prior(prior),
            }
        }
        8 => {
            let a = [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]];
            let p = problem(&a, &[2.0, -4.0, 0.0]);
            let prior = Prior::new(PriorEstimates::Matrix(p.a().to_vec()), NormKind::L2);
            Fixture {
                id,
                name: "trivial constraint, nontrivial cost vector",
                model: ModelKind::NloSd,
                instance: InverseInstance::nominal(p, point([2.0, 2.0])).with_prior(prior),
            }
        }
        _ => return None,
    };
    Some(fixture)
}

/// All eight examples in order.
pub fn all() -> Vec<Fixture> {
    (1..=8).filter_map(example).collect()
}
