//! One line per acceptance criterion.
//!
//! Every criterion is evaluated in full. Criteria listed in
//! `EXPECTED_FAILURES` are known to disagree with their stated target; the
//! run fails if the set of failing criteria differs from that list in
//! either direction.

mod common;

use std::io::Write;
use std::result::Result;
use std::time::{Duration, Instant};

use io_recover::geometry::{self};
use io_recover::verify::{check_certificate, diagnose_trivial, ResidualGroup, Verdict};
use io_recover::*;

/// Example 7's prior perturbation lands on (0.05, −0.05), a factor of ten
/// away from the stated (0.005, −0.005).
const EXPECTED_FAILURES: &[u8] = &[7];

type Check = Result<String, String>;

fn close(label: &str, got: &[f64], want: &[f64], tol: f64) -> Result<(), String> {
    if got.len() != want.len() || got.iter().zip(want).any(|(g, w)| (g - w).abs() > tol) {
        return Err(format!("{label}: got {got:?}, want {want:?}"));
    }
    Ok(())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn run(id: u8) -> Result<(InverseInstance, InverseSolution, Duration), String> {
    let ex = fixtures::example(id).expect("fixture exists");
    // Warm-up so the timing excludes first-touch costs.
    let _ = solve(ex.model, &ex.instance);
    let (sol, elapsed) = timed(|| solve(ex.model, &ex.instance));
    let sol = sol.map_err(|e| format!("solver error: {e}"))?;
    Ok((ex.instance, sol, elapsed))
}

fn t_values(sol: &InverseSolution) -> Vec<f64> {
    sol.subproblem_values()
        .map(|t| t.iter().map(|v| v.unwrap_or(f64::NAN)).collect())
        .unwrap_or_default()
}

fn criterion_1() -> Check {
    let (_, sol, elapsed) = run(1)?;
    close("t", &t_values(&sol), &[3.0, 18.0, 2.0], 1e-6)?;
    ensure(sol.active_index() == 3, || format!("i* = {}", sol.active_index()))?;
    close("gap", &[sol.duality_gap], &[2.0], 1e-6)?;
    close("c", &sol.cost, &[-2.0, -2.0], 1e-6)?;
    let a = sol.matrix().ok_or("no matrix")?;
    close("A*", &a.concat(), &[1.0, 0.0, 0.0, 2.0, -2.0, -2.0], 1e-6)?;
    ensure(elapsed < Duration::from_millis(50), || format!("took {elapsed:?}"))?;
    Ok(format!("t=(3,18,2), i*=3, gap=2, c=(−2,−2) in {elapsed:?}"))
}

fn criterion_2() -> Check {
    let (inst, sol, elapsed) = run(2)?;
    let (f, _) = sol.projections().ok_or("no projections")?;
    close("f", f, &[0.6325, 1.8974, 1.2649], 5e-5)?;
    let rounded: Vec<f64> = f.iter().map(|v| (v * 100.0).round() / 100.0).collect();
    close("f at 2 decimals", &rounded, &[0.63, 1.90, 1.26], 1e-12)?;
    ensure(sol.active_index() == 1, || format!("i* = {}", sol.active_index()))?;
    let a1 = &sol.matrix().ok_or("no matrix")?[0];
    close("a1", a1, &[1.2, -0.6], 1e-9)?;
    close("a1ᵀx̂", &[geometry::dot(a1, inst.x_hat.as_slice())], &[-6.0], 1e-9)?;
    ensure(elapsed < Duration::from_millis(10), || format!("took {elapsed:?}"))?;
    Ok(format!("f=(0.63,1.90,1.26), i*=1, a1=(1.2,−0.6) in {elapsed:?}"))
}

fn criterion_3() -> Check {
    let (_, sol, _) = run(3)?;
    close("t", &t_values(&sol), &[2.0, 6.0, 1.0], 1e-6)?;
    ensure(sol.active_index() == 3, || format!("i* = {}", sol.active_index()))?;
    close("α3", &sol.alpha().ok_or("no α")?[2], &[0.5, 1.0], 1e-6)?;
    close("c", &sol.cost, &[-1.5, -2.0], 1e-6)?;
    Ok("t=(2,6,1), i*=3, α3=(0.5,1), c=(−1.5,−2)".into())
}

fn criterion_4() -> Check {
    let (_, sol, _) = run(4)?;
    close("t", &t_values(&sol), &[1.5, 1.5, 1.0], 1e-6)?;
    ensure(sol.active_index() == 3, || format!("i* = {}", sol.active_index()))?;
    close("α3", &sol.alpha().ok_or("no α")?[2], &[1.0, 1.0], 1e-6)?;
    close("c", &sol.cost, &[-1.0, -2.0], 1e-6)?;
    Ok("t=(1.5,1.5,1), i*=3, α3=(1,1), c=(−1,−2)".into())
}

fn criterion_5() -> Check {
    let (_, sol, _) = run(5)?;
    close("t", &t_values(&sol), &[1.0, 10.2, 4.4], 1e-6)?;
    ensure(sol.active_index() == 1, || format!("i* = {}", sol.active_index()))?;
    close("Γ*", sol.gamma().ok_or("no Γ")?, &[0.6, 0.2, 0.2], 1e-6)?;
    close("c", &sol.cost, &[2.5, 0.0], 1e-6)?;
    Ok("t=(1,10.2,4.4), i*=1, Γ*=(0.6,0.2,0.2), c=(2.5,0)".into())
}

fn criterion_6() -> Check {
    let (_, sol, _) = run(6)?;
    let bounds = sol.gamma_bounds.as_ref().ok_or("no Γ bounds")?;
    ensure(bounds.i_hat == vec![0, 2], || format!("Î (0-based) = {:?}", bounds.i_hat))?;
    let bar = |i: usize| bounds.gamma_bar[i].value().unwrap_or(f64::NAN);
    close("Γ̄1, Γ̄3", &[bar(0), bar(2)], &[0.8, 1.5], 1e-6)?;
    ensure(sol.active_index() == 3, || format!("i* = {}", sol.active_index()))?;
    close("objective", &[sol.objective_value], &[0.5], 1e-6)?;
    close("Γ3", &[sol.gamma().ok_or("no Γ")?[2]], &[1.5], 1e-6)?;
    close("c", &sol.cost, &[-1.0, -2.0], 1e-6)?;
    Ok("Î={1,3}, Γ̄=(0.8,·,1.5), i*=3, objective 0.5, c=(−1,−2)".into())
}

fn perturbed(id: u8, strategy: Remediation) -> Result<InverseSolution, String> {
    let ex = fixtures::example(id).expect("fixture exists");
    let prior = ex.instance.prior.as_ref().expect("prior");
    nominal::perturb_and_resolve(&ex.instance.problem, &ex.instance.x_hat, prior, strategy)
        .map(|p| p.solution)
        .map_err(|e| format!("{strategy}: {e}"))
}

fn criterion_7() -> Check {
    let (_, sol, _) = run(7)?;
    ensure(sol.status == SolveStatus::TrivialDetected, || format!("status {:?}", sol.status))?;
    let a = sol.matrix().ok_or("no matrix")?;
    close("a3", &a[2], &[0.0, 0.0], 1e-9)?;
    close("c", &sol.cost, &[0.0, 0.0], 1e-9)?;
    let mut failures = Vec::new();
    let rhs = perturbed(7, Remediation::RhsEpsilon { row: 2, delta: 0.1 })?;
    let a3 = &rhs.matrix().ok_or("no matrix")?[2];
    if let Err(e) = close("RhsEpsilon a3", a3, &[0.025, 0.025], 1e-6).and(close("RhsEpsilon c", &rhs.cost, &[0.025, 0.025], 1e-6)) {
        failures.push(e);
    }
    let prior = perturbed(7, Remediation::PriorEpsilon { row: 2, col: 0, delta: 0.1 })?;
    if let Err(e) = close("PriorEpsilon a3", &prior.matrix().ok_or("no matrix")?[2], &[0.005, -0.005], 1e-6) {
        failures.push(e);
    }
    let boost = perturbed(7, Remediation::WeightBoost { row: 2, weight: 10.0 })?;
    if let Err(e) = close("WeightBoost row 1", &boost.matrix().ok_or("no matrix")?[0], &[-0.25, -1.25], 1e-6) {
        failures.push(e);
    }
    if failures.is_empty() {
        Ok("trivial detected; RhsEpsilon, PriorEpsilon, WeightBoost as stated".into())
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_8() -> Check {
    let ex = fixtures::example(8).unwrap();
    let (inst, sol, _) = run(8)?;
    close("c", &sol.cost, &[1.0, 0.0], 1e-9)?;
    close("a3", &sol.matrix().ok_or("no matrix")?[2], &[0.0, 0.0], 1e-9)?;
    ensure(sol.status == SolveStatus::TrivialDetected, || format!("status {:?}", sol.status))?;
    let rhs = perturbed(8, Remediation::RhsEpsilon { row: 2, delta: -0.1 })?;
    close("RhsEpsilon a3", &rhs.matrix().ok_or("no matrix")?[2], &[-0.025, -0.025], 1e-6)?;
    let prior = perturbed(8, Remediation::PriorEpsilon { row: 2, col: 0, delta: 0.1 })?;
    close("PriorEpsilon a3", &prior.matrix().ok_or("no matrix")?[2], &[0.05, -0.05], 1e-6)?;
    let fixes = diagnose_trivial(&sol, &inst.problem, &inst.x_hat, ex.instance.prior.as_ref().unwrap());
    ensure(
        !fixes.iter().any(|f| matches!(f.remediation, Remediation::WeightBoost { .. })),
        || "WeightBoost suggested".into(),
    )?;
    let boost = perturbed(8, Remediation::WeightBoost { row: 2, weight: 10.0 })?;
    close("a3 after WeightBoost", &boost.matrix().ok_or("no matrix")?[2], &[0.0, 0.0], 1e-9)?;
    Ok("c=(1,0), a3 trivial; RhsEpsilon and PriorEpsilon lift it; WeightBoost unusable".into())
}

fn criterion_9() -> Check {
    let mut r = common::rng(9);
    let mut checked = 0;
    for model in ModelKind::ALL {
        for k in 0..50 {
            let case = common::oracle_case(model, &mut r);
            let m = case.instance.problem.num_constraints() as u64;
            let lps = lp::invocations();
            let bars = geometry::gamma_bar_invocations();
            let sol = solve(model, &case.instance).map_err(|e| format!("{model} #{k}: {e}"))?;
            let lps = lp::invocations() - lps;
            let bars = geometry::gamma_bar_invocations() - bars;
            let want_lps = match model {
                ModelKind::NloSd | ModelKind::RloCcuSd => 0,
                _ => m,
            };
            ensure(lps == want_lps, || format!("{model} #{k}: {lps} LPs for m = {m}"))?;
            ensure(sol.stats.lp_solves as u64 == lps, || format!("{model} #{k}: stats report {} LPs", sol.stats.lp_solves))?;
            match model.family() {
                Family::Cardinality => ensure(bars <= m, || format!("{model} #{k}: {bars} Γ̄ evaluations"))?,
                _ => ensure(bars == 0, || format!("{model} #{k}: {bars} Γ̄ evaluations"))?,
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} instrumented solves: m LPs for DG / IU-SD models, none for NLO-SD / CCU-SD, ≤ m Γ̄"))
}

fn criterion_10() -> Check {
    let (out, elapsed) = timed(|| common::oracle_agreement(200, 10));
    let detail = out?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!("{detail} in {:.1}s", elapsed.as_secs_f64()))
}

fn criterion_11() -> Check {
    let mut n = 0;
    for ex in fixtures::all() {
        let sol = solve(ex.model, &ex.instance).map_err(|e| format!("example {}: {e}", ex.id))?;
        let report = check_certificate(&ex.instance, &sol);
        ensure(report.is_valid(), || format!("example {}: {:?}", ex.id, report.verdict))?;
        if ex.id == 1 {
            close("example 1 gap", &[sol.duality_gap], &[2.0], 1e-9)?;
        }
        if !ex.model.minimizes_gap() {
            ensure(report.residual(ResidualGroup::Duality) <= 1e-7, || format!("example {}: strong duality", ex.id))?;
        }
        n += 1;
    }
    // Each group corrupted by 1e-3 flips the verdict.
    let ex4 = fixtures::example(4).unwrap();
    let base4 = solve(ex4.model, &ex4.instance).unwrap();
    let ex3 = fixtures::example(3).unwrap();
    let base3 = solve(ex3.model, &ex3.instance).unwrap();
    type Fault = fn(&mut InverseSolution);
    let faults: [(ResidualGroup, bool, Fault); 6] = [
        (ResidualGroup::Primal, false, |s| s.certificate.u[2][0] += 1e-3),
        (ResidualGroup::Auxiliary, false, |s| s.certificate.u[2][0] -= 1e-3),
        (ResidualGroup::DualEquality, false, |s| s.cost[0] += 1e-3),
        (ResidualGroup::DualBounds, false, |s| s.certificate.lambda[0][0] -= 1e-3),
        (ResidualGroup::Normalization, false, |s| s.dual_pi[2] += 1e-3),
        (ResidualGroup::Duality, true, |s| s.duality_gap += 1e-3),
    ];
    for (group, gap_model, fault) in faults {
        let (inst, mut sol) = if gap_model {
            (&ex3.instance, base3.clone())
        } else {
            (&ex4.instance, base4.clone())
        };
        fault(&mut sol);
        let report = check_certificate(inst, &sol);
        ensure(matches!(report.verdict, Verdict::Invalid { .. }), || format!("{group:?} fault not detected"))?;
        ensure(report.residual(group) >= 5e-4, || format!("{group:?} fault shows residual {}", report.residual(group)))?;
    }
    Ok(format!("{n} fixture solutions valid; all 6 fault injections detected"))
}

fn criterion_12() -> Check {
    common::geometry_suite(1000, 12)
}

#[test]
fn acceptance() {
    let criteria: [(u8, fn() -> Check); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    // Straight to the stderr handle: the harness only captures the print
    // macros, and these lines belong in every run's log.
    let mut log = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (id, check) in criteria {
        let line = match check() {
            Ok(detail) => format!("criterion {id:>2}: PASS  {detail}"),
            Err(detail) => {
                failed.push(id);
                let note = if EXPECTED_FAILURES.contains(&id) { " (known)" } else { "" };
                format!("criterion {id:>2}: FAIL{note}  {detail}")
            }
        };
        let _ = writeln!(log, "{line}");
    }
    assert_eq!(failed, EXPECTED_FAILURES, "failing criteria differ from the known list");
}
