//! Random instance generators and the heavier checks shared by the
//! integration tests.
#![allow(dead_code)]

use io_recover::geometry::{self, dot, NormKind};
use io_recover::lp::{self, LinearProgram, LpOutcome, Sense, VarBounds};
use io_recover::model::*;
use io_recover::verify::{brute_force_min, GridOracleSpec};
use io_recover::solve;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub const STEP: f64 = 0.05;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A multiple of the grid step in [lo, hi].
pub fn on_grid(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let k = ((hi - lo) / STEP).round() as i64;
    lo + rng.gen_range(0..=k) as f64 * STEP
}

pub fn any_norm(rng: &mut ChaCha8Rng) -> NormKind {
    *[NormKind::L1, NormKind::L2, NormKind::Linf].choose(rng).unwrap()
}

fn nonempty_subset(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> Vec<usize> {
    let mut cols: Vec<usize> = (0..n).collect();
    cols.shuffle(rng);
    let len = rng.gen_range(1..=n.min(max_len));
    let mut c = cols[..len].to_vec();
    c.sort_unstable();
    c
}

fn away_from_zero(rng: &mut ChaCha8Rng) -> f64 {
    let v = rng.gen_range(1.0..2.0);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

/// A random instance for `model` together with a grid covering its optimum
/// and the per-instance Lipschitz factor of the grid error.
pub struct OracleCase {
    pub instance: InverseInstance,
    pub spec: GridOracleSpec,
    pub lipschitz: f64,
}

pub fn oracle_case(model: ModelKind, rng: &mut ChaCha8Rng) -> OracleCase {
    let m = rng.gen_range(1..=4);
    let n = rng.gen_range(1..=3);
    match model {
        ModelKind::NloDg | ModelKind::RloIuDg | ModelKind::RloCcuDg => gap_case(model, m, n, rng),
        _ => exact_case(model, m, n, rng),
    }
}

/// Gap models: Ω is a box that fixes all but at most three parameters; a
/// reference parameter on the grid keeps x̂ feasible.
fn gap_case(model: ModelKind, m: usize, n: usize, rng: &mut ChaCha8Rng) -> OracleCase {
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let structure = match model {
        ModelKind::NloDg => UncertaintyStructure::Nominal,
        ModelKind::RloIuDg => UncertaintyStructure::Interval {
            cols: (0..m).map(|_| nonempty_subset(rng, n, 3)).collect(),
        },
        _ => {
            let cols: Vec<Vec<usize>> = (0..m).map(|_| nonempty_subset(rng, n, 2)).collect();
            let alpha = cols
                .iter()
                .map(|c| c.iter().map(|_| rng.gen_range(0.0..2.0)).collect())
                .collect();
            UncertaintyStructure::Cardinality { cols, alpha }
        }
    };
    let placeholder = ForwardProblem::new(a.clone(), vec![0.0; m]).unwrap();
    let params = canonical_params(model.family(), &placeholder, &structure);
    let upper = |p: &ParamRef| match (p, &structure) {
        (ParamRef::Gamma { row }, UncertaintyStructure::Cardinality { cols, .. }) => cols[*row].len() as f64,
        _ => 2.0,
    };
    let reference: Vec<f64> = params.iter().map(|p| on_grid(rng, 0.0, upper(p))).collect();
    let mut order: Vec<usize> = (0..params.len()).collect();
    order.shuffle(rng);
    let free = &order[..params.len().min(rng.gen_range(1..=3))];
    let boxes: Vec<(f64, f64)> = (0..params.len())
        .map(|k| if free.contains(&k) { (0.0, upper(&params[k])) } else { (reference[k], reference[k]) })
        .collect();

    // Rows of the reference, and b with nonnegative robust slack.
    let mut b = Vec::with_capacity(m);
    let mut lipschitz: f64 = 0.0;
    for i in 0..m {
        let (value, slope) = match &structure {
            UncertaintyStructure::Nominal => {
                let row = &reference[i * n..(i + 1) * n];
                let slope: f64 = (0..n).filter(|j| free.contains(&(i * n + j))).map(|j| x[j].abs()).sum();
                (dot(row, &x), slope)
            }
            UncertaintyStructure::Interval { cols } => {
                let off: usize = cols[..i].iter().map(Vec::len).sum();
                let prot: f64 = cols[i].iter().enumerate().map(|(p, &j)| reference[off + p] * x[j].abs()).sum();
                let slope: f64 = cols[i]
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| free.contains(&(off + p)))
                    .map(|(_, &j)| x[j].abs())
                    .sum();
                (dot(&a[i], &x) - prot, slope)
            }
            UncertaintyStructure::Cardinality { cols, alpha } => {
                let prot = geometry::protection_value(&alpha[i], reference[i], &cols[i], &x).unwrap();
                let slope = if free.contains(&i) {
                    cols[i].iter().zip(&alpha[i]).map(|(&j, al)| al * x[j].abs()).fold(0.0, f64::max)
                } else {
                    0.0
                };
                (dot(&a[i], &x) - prot, slope)
            }
        };
        b.push(value - rng.gen_range(0.0..1.0));
        lipschitz = lipschitz.max(slope);
    }
    let problem = ForwardProblem::new(a, b).unwrap();
    let mut omega = SideConstraints::over(params.clone());
    for (k, &(lo, hi)) in boxes.iter().enumerate() {
        omega = omega.bounds(params[k], lo, hi);
    }
    OracleCase {
        instance: InverseInstance::nominal(problem, ObservedPoint::new(x).unwrap())
            .with_structure(structure)
            .with_omega(omega),
        spec: GridOracleSpec {
            parameter_box: boxes,
            step: STEP,
            model,
        },
        lipschitz,
    }
}

/// Exact models: priors on the grid, slacks small enough that the optimum
/// stays inside the [0, 2] box.
fn exact_case(model: ModelKind, m: usize, n: usize, rng: &mut ChaCha8Rng) -> OracleCase {
    let x: Vec<f64> = (0..n).map(|_| away_from_zero(rng)).collect();
    let xi: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
    match model {
        ModelKind::NloSd => {
            let a_hat: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| on_grid(rng, 0.5, 1.5)).collect()).collect();
            let b: Vec<f64> = a_hat.iter().map(|r| dot(r, &x) - rng.gen_range(-0.5..0.5)).collect();
            let problem = ForwardProblem::new(a_hat.clone(), b).unwrap();
            let prior = Prior::new(PriorEstimates::Matrix(a_hat), any_norm(rng)).with_weights(xi.clone());
            OracleCase {
                instance: InverseInstance::nominal(problem, ObservedPoint::new(x).unwrap()).with_prior(prior),
                spec: GridOracleSpec {
                    parameter_box: vec![(0.0, 2.0); m * n],
                    step: STEP,
                    model,
                },
                lipschitz: xi.iter().sum::<f64>() * 2.0 * n as f64,
            }
        }
        ModelKind::RloIuSd => {
            let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let cols: Vec<Vec<usize>> = (0..m).map(|_| nonempty_subset(rng, n, 3)).collect();
            let alpha_hat: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(|_| on_grid(rng, 0.0, 1.5)).collect()).collect();
            let b: Vec<f64> = (0..m)
                .map(|i| {
                    let prot: f64 = cols[i].iter().zip(&alpha_hat[i]).map(|(&j, al)| al * x[j].abs()).sum();
                    let slack = rng.gen_range(-0.5..0.5f64).max(-prot);
                    dot(&a[i], &x) - prot - slack
                })
                .collect();
            let width: usize = cols.iter().map(Vec::len).sum();
            let norm = if rng.gen_bool(0.5) { NormKind::L1 } else { NormKind::Linf };
            let prior = Prior::new(PriorEstimates::Alpha(alpha_hat), norm).with_weights(xi.clone());
            OracleCase {
                instance: InverseInstance::nominal(ForwardProblem::new(a, b).unwrap(), ObservedPoint::new(x).unwrap())
                    .with_structure(UncertaintyStructure::Interval { cols })
                    .with_prior(prior),
                spec: GridOracleSpec {
                    parameter_box: vec![(0.0, 2.0); width],
                    step: STEP,
                    model,
                },
                lipschitz: xi.iter().sum::<f64>() * 2.0 * n as f64,
            }
        }
        _ => {
            let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let cols: Vec<Vec<usize>> = (0..m).map(|_| nonempty_subset(rng, n, 2)).collect();
            let alpha: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(|_| rng.gen_range(0.2..2.0)).collect()).collect();
            let tight = rng.gen_range(0..m);
            let b: Vec<f64> = (0..m)
                .map(|i| {
                    let g0 = rng.gen_range(0.0..=cols[i].len() as f64);
                    let prot = geometry::protection_value(&alpha[i], g0, &cols[i], &x).unwrap();
                    let slack = if i == tight { 0.0 } else { rng.gen_range(0.0..0.5) };
                    dot(&a[i], &x) - prot - slack
                })
                .collect();
            let gamma_hat: Vec<f64> = cols.iter().map(|c| on_grid(rng, 0.0, c.len() as f64)).collect();
            let boxes = cols.iter().map(|c| (0.0, c.len() as f64)).collect();
            let prior = Prior::new(PriorEstimates::Gamma(gamma_hat), any_norm(rng));
            OracleCase {
                instance: InverseInstance::nominal(ForwardProblem::new(a, b).unwrap(), ObservedPoint::new(x).unwrap())
                    .with_structure(UncertaintyStructure::Cardinality { cols, alpha })
                    .with_prior(prior),
                spec: GridOracleSpec {
                    parameter_box: boxes,
                    step: STEP,
                    model,
                },
                lipschitz: m as f64,
            }
        }
    }
}

/// Solver optimum against the grid oracle: the solver may not be worse than
/// any grid point, and the grid may not be worse than the solver by more
/// than step × Lipschitz.
pub fn oracle_agreement(instances_per_model: usize, seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for model in ModelKind::ALL {
        for k in 0..instances_per_model {
            let case = oracle_case(model, &mut r);
            let sol = solve(model, &case.instance).map_err(|e| format!("{model} #{k}: solver error {e}"))?;
            let grid = brute_force_min(&case.instance, &case.spec).map_err(|e| format!("{model} #{k}: oracle error {e}"))?;
            let tol = STEP * case.lipschitz + 1e-7;
            let diff = grid.value - sol.objective_value;
            if diff < -1e-7 || diff > tol {
                return Err(format!(
                    "{model} #{k}: solver {} vs grid {} (allowed [−1e-7, {tol}])",
                    sol.objective_value, grid.value
                ));
            }
            worst = worst.max(diff / tol);
        }
    }
    Ok(format!(
        "{} instances per model, worst gap {:.0}% of tolerance",
        instances_per_model,
        worst * 100.0
    ))
}

/// LP for the smallest budget with protection ≥ s:
/// min Γ s.t. Σ vφ ≥ s, Σφ ≤ Γ, 0 ≤ φ ≤ 1.
pub fn gamma_bar_by_lp(values: &[f64], s: f64) -> Option<f64> {
    let k = values.len();
    let mut lp = LinearProgram::new(std::iter::once(1.0).chain(std::iter::repeat(0.0).take(k)).collect());
    lp.set_bounds(0, VarBounds::nonneg());
    for p in 0..k {
        lp.set_bounds(p + 1, VarBounds::between(0.0, 1.0));
    }
    lp.push_row(std::iter::once(0.0).chain(values.iter().copied()).collect(), Sense::Ge, s);
    lp.push_row(std::iter::once(-1.0).chain(std::iter::repeat(1.0).take(k)).collect(), Sense::Le, 0.0);
    match lp::solve_lp(&lp).unwrap() {
        LpOutcome::Optimal(sol) => Some(sol.value),
        _ => None,
    }
}

/// Random x and a random uncertain row over it.
pub fn random_row(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>, Vec<usize>, Vec<f64>) {
    let x: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(-3.0..3.0) })
        .collect();
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let cols = nonempty_subset(rng, n, n);
    let alpha = cols.iter().map(|_| rng.gen_range(0.0..2.0)).collect();
    (x, a, cols, alpha)
}

/// The five randomized geometry properties, `trials` each.
pub fn geometry_suite(trials: usize, seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    for t in 0..trials {
        let n = r.gen_range(1..=5);
        let norm = any_norm(&mut r);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();

        // Hölder, and tightness at the dual-norm maximizer.
        let bound = geometry::norm(&x, norm) * geometry::dual_norm(&y, norm);
        if dot(&x, &y).abs() > bound + 1e-9 {
            return Err(format!("Hölder violated at trial {t}"));
        }
        if let Ok(w) = geometry::dual_norm_maximizer(&y, norm) {
            if (geometry::norm(&w, norm) - 1.0).abs() > 1e-9 || (dot(&w, &y) - geometry::dual_norm(&y, norm)).abs() > 1e-9 {
                return Err(format!("dual-norm maximizer not tight at trial {t}"));
            }
        }

        // Projections beat random feasible samples.
        if y.iter().any(|v| *v != 0.0) {
            let b = r.gen_range(-5.0..5.0);
            let (a_f, f) = geometry::project_hyperplane(&x, &y, b, norm).unwrap();
            let (a_g, g) = geometry::project_halfspace(&x, &y, b, norm).unwrap();
            if (dot(&a_f, &y) - b).abs() > 1e-9 || dot(&a_g, &y) < b - 1e-9 {
                return Err(format!("projection misses its set at trial {t}"));
            }
            let yy = dot(&y, &y);
            for _ in 0..50 {
                let mut s: Vec<f64> = x.iter().map(|v| v + r.gen_range(-3.0..3.0)).collect();
                let shift = (b - dot(&s, &y)) / yy;
                let on_plane: Vec<f64> = s.iter().zip(&y).map(|(v, w)| v + shift * w).collect();
                let d: Vec<f64> = on_plane.iter().zip(&x).map(|(p, q)| p - q).collect();
                if geometry::norm(&d, norm) < f - 1e-9 {
                    return Err(format!("hyperplane projection beaten at trial {t}"));
                }
                if dot(&s, &y) < b {
                    s = on_plane;
                }
                let d: Vec<f64> = s.iter().zip(&x).map(|(p, q)| p - q).collect();
                if geometry::norm(&d, norm) < g - 1e-9 {
                    return Err(format!("halfspace projection beaten at trial {t}"));
                }
            }
        }

        // Protection: zero at Γ = 0, full at |J|, linear between integers, concave.
        let (x, a, cols, alpha) = random_row(&mut r, n);
        let p = |g: f64| geometry::protection_value(&alpha, g, &cols, &x).unwrap();
        let full: f64 = cols.iter().zip(&alpha).map(|(&j, al)| al * x[j].abs()).sum();
        let len = cols.len() as f64;
        if p(0.0).abs() > 1e-12 || (p(len) - full).abs() > 1e-9 {
            return Err(format!("protection endpoints wrong at trial {t}"));
        }
        let g1 = r.gen_range(0.0..=len);
        let g2 = r.gen_range(0.0..=len);
        let lam = r.gen_range(0.0..=1.0);
        if p(lam * g1 + (1.0 - lam) * g2) < lam * p(g1) + (1.0 - lam) * p(g2) - 1e-9 {
            return Err(format!("protection not concave at trial {t}"));
        }
        let k = g1.floor().min(len - 1.0);
        let frac = r.gen_range(0.0..=1.0);
        if (p(k + frac) - ((1.0 - frac) * p(k) + frac * p(k + 1.0))).abs() > 1e-9 {
            return Err(format!("protection not linear between breakpoints at trial {t}"));
        }

        // Γ̄ from the greedy inversion against the LP.
        let values: Vec<f64> = cols.iter().zip(&alpha).map(|(&j, al)| al * x[j].abs()).collect();
        let s = r.gen_range(0.0..full * 1.2 + 0.1);
        let problem = ForwardProblem::new(vec![a.clone()], vec![dot(&a, &x) - s]).unwrap();
        let greedy = geometry::gamma_bar(&problem, 0, &cols, &alpha, &x).unwrap();
        match (greedy.value(), gamma_bar_by_lp(&values, s)) {
            (Some(gv), Some(lv)) if (gv - lv).abs() <= 1e-7 => {}
            (None, None) => {}
            other => return Err(format!("Γ̄ greedy/LP mismatch {other:?} at trial {t}")),
        }

        // Full budget realizes the interval row.
        let full_row = geometry::realized_row_cardinality(&a, &alpha, len, &cols, &x).unwrap();
        let interval_row = geometry::realized_row_interval(&a, &alpha, &cols, &x).unwrap();
        if full_row.iter().zip(&interval_row).any(|(p, q)| (p - q).abs() > 1e-12) {
            return Err(format!("Γ = |J| realization differs at trial {t}"));
        }
    }
    Ok(format!("{trials} trials of each property"))
}
