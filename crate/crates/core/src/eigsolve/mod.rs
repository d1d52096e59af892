//! First-eigenpair solvers over functions vanishing outside a mask.
//!
//! `p = 2` is a symmetric matrix problem and is solved by inverse iteration
//! on a dense Cholesky factorization ([`solve_p2`]). General `p` minimizes the
//! Rayleigh quotient directly ([`solve_descent`]).

mod dense;
mod descent;

pub use dense::{assemble_p2_matrix, dense_eigenvalues, solve_p2};
pub use descent::solve_descent;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{EnergyBreakdown, MaskedOperator, OperatorParams};
use crate::error::EigsolveError;
use crate::geometry::DomainMask;
use crate::rearrange::GridFunction;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance: residual bound for `p = 2`, relative Rayleigh
    /// decrease for descent.
    pub tol_rel: f64,
    pub max_iter: usize,
    /// Initial step, relative to `‖u‖ / ‖direction‖`.
    pub step_init: f64,
    pub backtrack_factor: f64,
    /// Seeds the perturbation of the initial profile in descent.
    pub seed: u64,
    /// Relative weak-equation residual required to report convergence.
    pub grad_tol: f64,
}

impl SolverOptions {
    pub fn p2() -> Self {
        Self { tol_rel: 1e-8, ..Self::descent() }
    }

    pub fn descent() -> Self {
        Self { tol_rel: 1e-6, max_iter: 5000, step_init: 1.0, backtrack_factor: 0.5, seed: 0, grad_tol: 1e-4 }
    }

    /// Defaults for the solver [`solve`] picks at exponent `p`.
    pub fn for_p(p: f64) -> Self {
        if p == 2.0 {
            Self::p2()
        } else {
            Self::descent()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), EigsolveError> {
        let bad = |m: &str| Err(EigsolveError::InvalidOptions(m.into()));
        if !(self.tol_rel > 0.0) {
            return bad("tol_rel must be positive");
        }
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1");
        }
        if !(self.step_init > 0.0) {
            return bad("step_init must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        Ok(())
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::descent()
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub lambda: f64,
    /// Nonnegative, `‖u‖_p = 1`, supported in the mask.
    pub eigenfunction: GridFunction,
    pub iterations: usize,
    /// `‖∇N(u) - λ ∇D(u)‖ / (λ ‖∇D(u)‖)` with `N` the weighted energy and
    /// `D = ‖u‖_p^p`, over mask nodes.
    pub residual: f64,
    pub converged: bool,
    /// Smallest eigenfunction value over the mask.
    pub interior_min: f64,
    pub breakdown: EnergyBreakdown,
    /// Rayleigh value after each accepted iterate (descent), or the final value.
    pub history: Vec<f64>,
}

/// Dispatches to [`solve_p2`] at `p = 2` and [`solve_descent`] otherwise.
pub fn solve(mask: &DomainMask, params: &OperatorParams, opts: &SolverOptions) -> Result<EigenResult, EigsolveError> {
    if params.p == 2.0 {
        solve_p2(mask, params, opts)
    } else {
        solve_descent(mask, params, opts)
    }
}

/// Erosion-depth profile on the mask, optionally perturbed by up to 25 %.
pub(crate) fn initial_profile(op: &MaskedOperator, seed: Option<u64>) -> Vec<f64> {
    let depth = op.mask().erosion_depth();
    let mut u: Vec<f64> = op.nodes().iter().map(|&i| depth[i] as f64).collect();
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut u {
            *v *= 1.0 + 0.25 * rng.gen::<f64>();
        }
    }
    u
}

/// Relative weak-equation residual and energy summary shared by both solvers.
pub(crate) fn finish(op: &MaskedOperator, u: &[f64], iterations: usize, converged_hint: Option<bool>, history: Vec<f64>, grad_tol: f64) -> EigenResult {
    let p = op.params().p;
    let norm = op.lp_norm_p(u);
    let (parts, grad) = op.energy_and_gradient(u);
    let lambda = op.weighted(parts) / norm;
    let law = crate::energy::PowerLaw::new(p);
    let dscale = p * op.lattice().cell_volume();
    let mut r2 = 0.0;
    let mut d2 = 0.0;
    for (k, &g) in grad.iter().enumerate() {
        let dd = dscale * law.phi(u[k]);
        r2 += (g - lambda * dd).powi(2);
        d2 += dd * dd;
    }
    let residual = r2.sqrt() / (lambda * d2.sqrt());
    let eigenfunction = op.to_grid(u);
    let interior_min = u.iter().copied().fold(f64::INFINITY, f64::min);
    EigenResult {
        lambda,
        eigenfunction,
        iterations,
        residual,
        converged: converged_hint.unwrap_or(true) && residual <= grad_tol,
        interior_min,
        breakdown: EnergyBreakdown { lp_norm_p: norm, local_energy: parts.local, nonlocal_energy: parts.nonlocal, rayleigh: lambda },
        history,
    }
}
