use io_recover::geometry::{self, dot, NormKind};
use io_recover::regions::{regions, RegionKind};
use io_recover::verify::{brute_force_min, diagnose_trivial, GridOracleSpec};
use io_recover::*;

fn ex(id: u8) -> fixtures::Fixture {
    fixtures::example(id).unwrap()
}

fn solved(id: u8) -> (InverseInstance, InverseSolution) {
    let f = ex(id);
    let sol = solve(f.model, &f.instance).unwrap();
    (f.instance, sol)
}

#[test]
fn fixtures_pass_validation() {
    for f in fixtures::all() {
        let i = &f.instance;
        let report = validate(&i.problem, &i.x_hat, &i.structure, f.model, i.omega.as_ref(), i.prior.as_ref()).unwrap();
        assert!(report.passed(), "example {}: {report:?}", f.id);
    }
    // The shared triangle has no certain nonzero coefficient in rows with
    // b_i ≤ 0, so the robust examples carry nontriviality warnings.
    let f = ex(3);
    let i = &f.instance;
    let report = validate(&i.problem, &i.x_hat, &i.structure, f.model, i.omega.as_ref(), None).unwrap();
    assert_eq!(report.outcome(5), Some(CheckOutcome::Warn));
    let f = ex(6);
    let i = &f.instance;
    let report = validate(&i.problem, &i.x_hat, &i.structure, f.model, None, i.prior.as_ref()).unwrap();
    assert_eq!(report.outcome(10), Some(CheckOutcome::Warn));
    assert_eq!(report.get(10).unwrap().rows, vec![1, 3]);
    let f = ex(7);
    let i = &f.instance;
    let report = validate(&i.problem, &i.x_hat, &i.structure, f.model, None, i.prior.as_ref()).unwrap();
    let zero_b = report.get(2).unwrap();
    assert_eq!(zero_b.outcome, CheckOutcome::Warn);
    assert_eq!(zero_b.rows, vec![3]);
}

#[test]
fn side_constraints_that_allow_a_zero_row_fail_validation() {
    let f = ex(1);
    let p = &f.instance.problem;
    let vars = canonical_params(Family::Nominal, p, &UncertaintyStructure::Nominal);
    let omega = SideConstraints::over(vars).bounds(ParamRef::A { row: 0, col: 0 }, 0.0, 1.0);
    let report = validate(p, &f.instance.x_hat, &UncertaintyStructure::Nominal, ModelKind::NloDg, Some(&omega), None).unwrap();
    assert_eq!(report.outcome(1), Some(CheckOutcome::Warn));
    assert_eq!(report.get(1).unwrap().rows, vec![1, 2, 3]);
}

#[test]
fn interval_exact_model_rejects_euclidean_prior() {
    let mut inst = ex(4).instance;
    inst.prior.as_mut().unwrap().norm = NormKind::L2;
    assert_eq!(solve(ModelKind::RloIuSd, &inst).unwrap_err(), Error::UnsupportedNorm("l2"));
}

#[test]
fn nominally_infeasible_observation_is_reported_with_its_row() {
    let mut inst = ex(4).instance;
    inst.x_hat = ObservedPoint::new(vec![-7.0, 6.0]).unwrap();
    assert_eq!(solve(ModelKind::RloIuSd, &inst).unwrap_err(), Error::NominalInfeasible { row: 0 });
    let mut inst = ex(6).instance;
    inst.x_hat = ObservedPoint::new(vec![-2.0, 15.0]).unwrap();
    assert_eq!(solve(ModelKind::RloCcuSd, &inst).unwrap_err(), Error::NominalInfeasible { row: 2 });
}

#[test]
fn zero_observation_is_rejected() {
    let mut inst = ex(2).instance;
    inst.x_hat = ObservedPoint::new(vec![0.0, 0.0]).unwrap();
    assert_eq!(solve(ModelKind::NloSd, &inst).unwrap_err(), Error::ZeroObservation);
}

#[test]
fn model_and_structure_must_agree() {
    let inst = ex(2).instance;
    assert!(matches!(solve(ModelKind::RloIuDg, &inst), Err(Error::ModelMismatch(_))));
    let inst = ex(4).instance;
    assert!(matches!(solve(ModelKind::RloCcuSd, &inst), Err(Error::ModelMismatch(_))));
}

#[test]
fn unconstrained_matrix_closes_the_gap() {
    let f = ex(1);
    let inst = InverseInstance::nominal(f.instance.problem.clone(), f.instance.x_hat.clone());
    let sol = solve(ModelKind::NloDg, &inst).unwrap();
    assert!(sol.duality_gap.abs() < 1e-9);
    assert_eq!(sol.active_row, 0);
    assert!(check_certificate(&inst, &sol).is_valid());
}

#[test]
fn empty_budget_box_and_empty_activation_set() {
    let mut inst = ex(5).instance;
    let vars = canonical_params(Family::Cardinality, &inst.problem, &inst.structure);
    inst.omega = Some(SideConstraints::over(vars).ge(&[(ParamRef::Gamma { row: 0 }, 1.0)], 0.9));
    // Θ caps Γ1 at 0.8, and rows 2 and 3 cannot be activated by Γ1 alone.
    let sol = solve(ModelKind::RloCcuDg, &inst);
    assert!(matches!(sol, Err(Error::EmptyThetaOmega)) || sol.unwrap().active_row != 0);

    let mut inst = ex(6).instance;
    inst.x_hat = ObservedPoint::new(vec![0.0, 0.0]).unwrap();
    assert_eq!(solve(ModelKind::RloCcuSd, &inst).unwrap_err(), Error::EmptyIhat);
}

#[test]
fn budgets_outside_theta_make_the_gap_model_infeasible() {
    let mut inst = ex(5).instance;
    let vars = canonical_params(Family::Cardinality, &inst.problem, &inst.structure);
    let omega = SideConstraints::over(vars)
        .ge(&[(ParamRef::Gamma { row: 0 }, 1.0)], 0.9)
        .ge(&[(ParamRef::Gamma { row: 2 }, 1.0)], 1.6);
    inst.omega = Some(omega);
    assert_eq!(solve(ModelKind::RloCcuDg, &inst).unwrap_err(), Error::EmptyThetaOmega);
}

#[test]
fn trivial_diagnostics() {
    let (inst, sol) = solved(7);
    let prior = inst.prior.as_ref().unwrap();
    let fixes = diagnose_trivial(&sol, &inst.problem, &inst.x_hat, prior);
    assert!(fixes.iter().any(|f| !f.heuristic && f.remediation == Remediation::RhsEpsilon { row: 2, delta: 0.1 }));
    assert!(fixes.iter().any(|f| f.heuristic && matches!(f.remediation, Remediation::PriorEpsilon { row: 2, .. })));
    assert!(fixes.iter().any(|f| f.remediation == Remediation::WeightBoost { row: 2, weight: 10.0 }));
    assert_eq!(sol.remediation.len(), fixes.len());

    let (inst, sol) = solved(8);
    let fixes = diagnose_trivial(&sol, &inst.problem, &inst.x_hat, inst.prior.as_ref().unwrap());
    assert!(fixes.iter().any(|f| f.remediation == Remediation::RhsEpsilon { row: 2, delta: -0.1 }));
    assert!(!fixes.iter().any(|f| matches!(f.remediation, Remediation::WeightBoost { .. })));

    let (inst, sol) = solved(2);
    assert!(diagnose_trivial(&sol, &inst.problem, &inst.x_hat, inst.prior.as_ref().unwrap()).is_empty());
    assert!(sol.remediation.is_empty());
}

#[test]
fn suggested_rhs_shift_removes_the_trivial_row() {
    for id in [7, 8] {
        let (inst, sol) = solved(id);
        let prior = inst.prior.as_ref().unwrap();
        for fix in diagnose_trivial(&sol, &inst.problem, &inst.x_hat, prior) {
            if let Remediation::RhsEpsilon { .. } = fix.remediation {
                let out = perturb_and_resolve(&inst.problem, &inst.x_hat, prior, fix.remediation).unwrap();
                assert_eq!(out.solution.status, SolveStatus::Optimal, "example {id}");
            }
        }
    }
}

fn polyline_points(
    instance: &InverseInstance,
    sol: &InverseSolution,
    kind: RegionKind,
    row: usize,
) -> Vec<[f64; 2]> {
    let lines = regions(instance, Some(sol), [-10.0, -10.0, 10.0, 10.0]).unwrap();
    let line = lines
        .iter()
        .find(|l| l.kind == kind && l.constraint_index == row)
        .unwrap();
    line.segments.iter().flatten().copied().collect()
}

#[test]
fn region_points_lie_on_their_realized_rows() {
    for id in 1..=8 {
        let (inst, sol) = solved(id);
        for line in regions(&inst, Some(&sol), [-12.0, -8.0, 14.0, 26.0]).unwrap() {
            let params = match line.kind {
                RegionKind::Nominal => Imputed::Matrix(inst.problem.a().to_vec()),
                RegionKind::ImputedRobust => sol.imputed.clone(),
                RegionKind::PriorRobust => match &inst.prior.as_ref().unwrap().estimates {
                    PriorEstimates::Matrix(a) => Imputed::Matrix(a.clone()),
                    PriorEstimates::Alpha(a) => Imputed::Alpha(a.clone()),
                    PriorEstimates::Gamma(g) => Imputed::Gamma(g.clone()),
                },
            };
            let shapes = regions::row_shapes(&inst.problem, &inst.structure, &params).unwrap();
            let i = line.constraint_index;
            for p in line.segments.iter().flatten() {
                let r = shapes[i].realize(p).unwrap();
                assert!((dot(&r, p) - inst.problem.b()[i]).abs() <= 1e-6, "example {id} row {i} at {p:?}");
            }
        }
    }
}

#[test]
fn interval_row_breaks_on_the_vertical_axis() {
    let (inst, sol) = solved(4);
    let pts = polyline_points(&inst, &sol, RegionKind::ImputedRobust, 2);
    assert!(pts.iter().any(|p| p[0].abs() < 1e-9), "{pts:?}");
    // x̂ lies on the imputed boundary.
    let xh = inst.x_hat.as_slice();
    let r = geometry::realized_row_interval(inst.problem.row(2), &sol.alpha().unwrap()[2], &[0, 1], xh).unwrap();
    assert!((dot(&r, xh) + 10.0).abs() < 1e-9);
}

#[test]
fn budget_row_breaks_on_axes_and_ordering_lines() {
    let (inst, sol) = solved(6);
    let pts = polyline_points(&inst, &sol, RegionKind::ImputedRobust, 2);
    let on = |f: &dyn Fn(&[f64; 2]) -> f64| pts.iter().any(|p| f(p).abs() < 1e-9);
    assert!(on(&|p| p[0]));
    assert!(on(&|p| p[1]));
    assert!(on(&|p| p[1] - 2.0 * p[0]));
    assert!(on(&|p| p[1] + 2.0 * p[0]));
}

#[test]
fn nominal_rows_are_single_segments() {
    let (inst, sol) = solved(2);
    for line in regions(&inst, Some(&sol), [-10.0, -10.0, 10.0, 30.0]).unwrap() {
        if line.kind == RegionKind::Nominal {
            assert_eq!(line.segments.len(), 1, "row {}", line.constraint_index);
        }
    }
}

#[test]
fn regions_need_two_variables() {
    let p = ForwardProblem::new(vec![vec![1.0, 0.0, 0.0]], vec![0.0]).unwrap();
    let inst = InverseInstance::nominal(p, ObservedPoint::new(vec![1.0, 1.0, 1.0]).unwrap());
    assert_eq!(regions(&inst, None, [0.0, 0.0, 1.0, 1.0]).unwrap_err(), Error::DimensionNotPlottable(3));
}

#[test]
fn grid_oracle_on_worked_examples() {
    // Interval gap model: α in [0.5, 1] covers Ω; the gap is linear in α with
    // slope |x̂_j| ≤ 6 per coordinate.
    let f = ex(3);
    let spec = GridOracleSpec {
        parameter_box: vec![(0.5, 1.0); 4],
        step: 0.05,
        model: ModelKind::RloIuDg,
    };
    let out = brute_force_min(&f.instance, &spec).unwrap();
    assert!(out.value >= 1.0 - 1e-9 && out.value <= 1.0 + 0.05 * 8.0, "{out:?}");
    assert_eq!(out.active_row, 2);

    let f = ex(5);
    let spec = GridOracleSpec {
        parameter_box: vec![(0.2, 1.0); 3],
        step: 0.05,
        model: ModelKind::RloCcuDg,
    };
    let out = brute_force_min(&f.instance, &spec).unwrap();
    assert!((out.value - 1.0).abs() < 1e-9, "{out:?}");

    let f = ex(6);
    let spec = GridOracleSpec {
        parameter_box: vec![(0.0, 1.0), (0.0, 1.0), (0.0, 2.0)],
        step: 0.05,
        model: ModelKind::RloCcuSd,
    };
    let out = brute_force_min(&f.instance, &spec).unwrap();
    assert!((out.value - 0.5).abs() < 1e-9, "{out:?}");
}

#[test]
fn one_point_grid_returns_that_points_objective() {
    let f = ex(3);
    let spec = GridOracleSpec {
        parameter_box: vec![(0.5, 0.5), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)],
        step: 0.05,
        model: ModelKind::RloIuDg,
    };
    let out = brute_force_min(&f.instance, &spec).unwrap();
    assert_eq!(out.points, 1);
    assert!((out.value - 1.0).abs() < 1e-12);
    assert_eq!(out.argmin, vec![0.5, 0.5, 0.5, 1.0]);
}

#[test]
fn oversized_grid_is_refused() {
    let f = ex(1);
    let spec = GridOracleSpec {
        parameter_box: vec![(-2.0, 2.0); 6],
        step: 0.01,
        model: ModelKind::NloDg,
    };
    assert!(matches!(brute_force_min(&f.instance, &spec), Err(Error::GridTooLarge { .. })));
}
