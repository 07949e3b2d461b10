//! Inverse linear optimization and inverse robust linear optimization.
//!
//! Given a forward problem `min cᵀx s.t. Ax ≥ b` and an observed decision x̂,
//! the solvers impute a cost vector together with either the constraint
//! matrix, the interval deviations α of an interval uncertainty set, or the
//! budgets Γ of a cardinality-constrained uncertainty set, so that x̂ is
//! optimal (strong-duality models) or as close to optimal as the side
//! constraints allow (duality-gap models).
//!
//! ```
//! use io_recover::{fixtures, solve, ModelKind};
//!
//! let ex = fixtures::example(1).unwrap();
//! let sol = solve(ModelKind::NloDg, &ex.instance).unwrap();
//! assert_eq!(sol.active_index(), 3);
//! assert!((sol.duality_gap - 2.0).abs() < 1e-9);
//! ```

pub mod cardinality;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod interval;
pub mod lp;
pub mod model;
pub mod nominal;
pub mod regions;
pub mod verify;

pub use cardinality::{compute_gamma_bounds, solve_rlo_ccu_dg, solve_rlo_ccu_sd, GammaBounds};
pub use error::{Error, Result};
pub use geometry::{GammaBar, NormKind};
pub use interval::{solve_rlo_iu_dg, solve_rlo_iu_sd};
pub use model::*;
pub use nominal::{perturb_and_resolve, solve_nlo_dg, solve_nlo_sd, PerturbedSolve};
pub use verify::{brute_force_min, check_certificate, diagnose_trivial, CertificateReport, GridOracleSpec, Verdict};

/// Solves `model` on `instance`. Gap models use `instance.omega` (no side
/// constraints when absent); exact models require `instance.prior`.
pub fn solve(model: ModelKind, instance: &InverseInstance) -> Result<InverseSolution> {
    let problem = &instance.problem;
    let x_hat = &instance.x_hat;
    let structure = &instance.structure;
    if structure.family() != model.family() {
        return Err(Error::ModelMismatch(format!(
            "{model} needs a {:?} uncertainty structure",
            model.family()
        )));
    }
    let unconstrained = SideConstraints::over(canonical_params(model.family(), problem, structure));
    let omega = instance.omega.as_ref().unwrap_or(&unconstrained);
    let prior = || {
        instance
            .prior
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("{model} needs a prior")))
    };
    match model {
        ModelKind::NloDg => solve_nlo_dg(problem, x_hat, omega),
        ModelKind::NloSd => solve_nlo_sd(problem, x_hat, prior()?),
        ModelKind::RloIuDg => solve_rlo_iu_dg(problem, x_hat, structure, omega),
        ModelKind::RloIuSd => solve_rlo_iu_sd(problem, x_hat, structure, prior()?),
        ModelKind::RloCcuDg => solve_rlo_ccu_dg(problem, x_hat, structure, omega),
        ModelKind::RloCcuSd => solve_rlo_ccu_sd(problem, x_hat, structure, prior()?),
    }
}
