//! Browser bindings for the bundled examples: re-solve with a moved
//! observation or another prior norm, and apply the perturbations that lift a
//! trivial imputation. Every function returns a JSON string; failures come
//! back as `{"ok": false, "error": ...}` so the page never sees an exception.

use io_recover::regions::regions;
use io_recover::verify::diagnose_trivial;
use io_recover::{
    check_certificate, fixtures, perturb_and_resolve, solve, InverseInstance, InverseSolution, NormKind,
    ObservedPoint, Remediation,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn fail(msg: impl ToString) -> String {
    json!({ "ok": false, "error": msg.to_string() }).to_string()
}

fn example(id: u8) -> Result<fixtures::Fixture, String> {
    fixtures::example(id).ok_or_else(|| format!("no example {id}"))
}

fn document(
    id: u8,
    inst: &InverseInstance,
    sol: &InverseSolution,
    bbox: [f64; 4],
    extra: Value,
) -> Result<String, String> {
    let polylines = regions(inst, Some(sol), bbox).map_err(|e| e.to_string())?;
    let report = check_certificate(inst, sol);
    let mut doc = json!({
        "ok": true,
        "id": id,
        "model": sol.model.as_str(),
        "status": format!("{:?}", sol.status),
        "x_hat": inst.x_hat.as_slice(),
        "b": inst.problem.b(),
        "cost": sol.cost,
        "i_star": sol.active_index(),
        "objective": sol.objective_value,
        "gap": sol.duality_gap,
        "imputed": sol.imputed,
        "certificate_valid": report.is_valid(),
        "remediation": sol.remediation.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        "polylines": polylines,
    });
    if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
        d.extend(e);
    }
    Ok(doc.to_string())
}

/// Ids, names and models of the bundled examples.
#[wasm_bindgen]
pub fn examples() -> String {
    let list: Vec<Value> = fixtures::all()
        .into_iter()
        .map(|f| {
            json!({
                "id": f.id,
                "name": f.name,
                "model": f.model.as_str(),
                "x_hat": f.instance.x_hat.as_slice(),
                "norm": f.instance.prior.as_ref().map(|p| p.norm.as_str()),
            })
        })
        .collect();
    Value::Array(list).to_string()
}

/// Solves example `id` with x̂ moved to (x1, x2). `norm` replaces the prior's
/// norm for the strong-duality models; pass an empty string to keep it.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn solve_example(id: u8, x1: f64, x2: f64, norm: &str, x0: f64, y0: f64, xmax: f64, ymax: f64) -> String {
    let run = || -> Result<String, String> {
        let ex = example(id)?;
        let mut inst = ex.instance;
        inst.x_hat = ObservedPoint::new(vec![x1, x2]).map_err(|e| e.to_string())?;
        if !norm.is_empty() {
            if let Some(p) = inst.prior.as_mut() {
                p.norm = norm.parse::<NormKind>().map_err(|e| e.to_string())?;
            }
        }
        let sol = solve(ex.model, &inst).map_err(|e| e.to_string())?;
        document(id, &inst, &sol, [x0, y0, xmax, ymax], json!({}))
    };
    run().unwrap_or_else(fail)
}

/// Applies one perturbation (`rhs`, `prior` or `weight`) to the trivial row of
/// example `id` and re-solves. The suggested magnitude is used when the
/// diagnosis offers one; otherwise a weight of 10 is tried anyway so the page
/// can show that it does not help.
#[wasm_bindgen]
pub fn remediate_example(id: u8, kind: &str, x0: f64, y0: f64, xmax: f64, ymax: f64) -> String {
    let run = || -> Result<String, String> {
        let ex = example(id)?;
        let inst = &ex.instance;
        let prior = inst.prior.as_ref().ok_or("example has no prior to perturb")?;
        let sol = solve(ex.model, inst).map_err(|e| e.to_string())?;
        let fixes = diagnose_trivial(&sol, &inst.problem, &inst.x_hat, prior);
        let row = fixes
            .first()
            .map(|f| match f.remediation {
                Remediation::RhsEpsilon { row, .. }
                | Remediation::PriorEpsilon { row, .. }
                | Remediation::WeightBoost { row, .. } => row,
            })
            .ok_or("the imputation is not trivial")?;
        let pick = fixes.iter().map(|f| f.remediation).find(|r| {
            matches!(
                (kind, r),
                ("rhs", Remediation::RhsEpsilon { .. })
                    | ("prior", Remediation::PriorEpsilon { .. })
                    | ("weight", Remediation::WeightBoost { .. })
            )
        });
        let strategy = match (kind, pick) {
            (_, Some(r)) => r,
            ("weight", None) => Remediation::WeightBoost { row, weight: 10.0 },
            _ => return Err(format!("no `{kind}` perturbation applies to example {id}")),
        };
        let out = perturb_and_resolve(&inst.problem, &inst.x_hat, prior, strategy).map_err(|e| e.to_string())?;
        let perturbed = InverseInstance {
            problem: out.problem,
            prior: Some(out.prior),
            ..inst.clone()
        };
        document(
            id,
            &perturbed,
            &out.solution,
            [x0, y0, xmax, ymax],
            json!({ "applied": strategy.to_string(), "suggested": pick.is_some() }),
        )
    };
    run().unwrap_or_else(fail)
}
