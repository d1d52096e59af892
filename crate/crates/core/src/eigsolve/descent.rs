use super::{finish, initial_profile, EigenResult, SolverOptions};
use crate::energy::{MaskedOperator, OperatorParams, PowerLaw};
use crate::error::EigsolveError;
use crate::geometry::DomainMask;

/// Consecutive small decreases required before stopping on `tol_rel`.
const PATIENCE: usize = 3;
const MAX_LINE_TRIALS: usize = 60;

struct Problem<'a> {
    op: &'a MaskedOperator,
    law: PowerLaw,
    dscale: f64,
}

impl Problem<'_> {
    /// `|v|` rescaled to unit `L^p` norm, and its Rayleigh value.
    fn project(&self, v: &mut [f64]) -> Option<f64> {
        for x in v.iter_mut() {
            *x = x.abs();
        }
        let norm = self.op.lp_norm_p(v);
        if !(norm > 0.0) {
            return None;
        }
        let scale = norm.powf(-1.0 / self.op.params().p);
        for x in v.iter_mut() {
            *x *= scale;
        }
        Some(self.op.weighted(self.op.energy(v)))
    }

    /// Gradient of the Rayleigh quotient at a unit-norm `u` with value `r`.
    fn rayleigh_gradient(&self, u: &[f64], r: f64) -> (Vec<f64>, f64) {
        let (_, mut g) = self.op.energy_and_gradient(u);
        let mut r2 = 0.0;
        let mut d2 = 0.0;
        for (gk, &uk) in g.iter_mut().zip(u) {
            let dd = self.dscale * self.law.phi(uk);
            *gk -= r * dd;
            r2 += *gk * *gk;
            d2 += dd * dd;
        }
        (g, r2.sqrt() / (r * d2.sqrt()))
    }

    fn trial(&self, u: &[f64], dir: &[f64], t: f64) -> Option<(Vec<f64>, f64)> {
        let mut v: Vec<f64> = u.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        self.project(&mut v).map(|r| (v, r))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes the Rayleigh quotient over nonnegative functions on the mask.
///
/// Starts from the (seed-perturbed) erosion-depth profile. Each step moves
/// along a Polak-Ribière conjugate direction of the Rayleigh gradient
/// (falling back to steepest descent), takes `u ← |u + t d| / ‖·‖_p` and
/// backtracks `t` until the Rayleigh value decreases, refining the accepted
/// step with one quadratic interpolation. The recorded Rayleigh sequence is
/// strictly decreasing. Stops after `PATIENCE` consecutive relative decreases
/// below `tol_rel` once the residual is below `grad_tol`, when the residual is
/// negligible, when no decrease can be found, or at `max_iter`.
pub fn solve_descent(mask: &DomainMask, params: &OperatorParams, opts: &SolverOptions) -> Result<EigenResult, EigsolveError> {
    opts.validate()?;
    if mask.is_empty() {
        return Err(EigsolveError::EmptyMask);
    }
    let op = MaskedOperator::new(mask, params)?;
    let pb = Problem { op: &op, law: PowerLaw::new(params.p), dscale: params.p * op.lattice().cell_volume() };

    let mut u = initial_profile(&op, Some(opts.seed));
    let mut r = pb.project(&mut u).ok_or(EigsolveError::EmptyMask)?;
    let mut history = vec![r];
    let (mut g, mut residual) = pb.rayleigh_gradient(&u, r);
    let mut dir: Vec<f64> = g.iter().map(|x| -x).collect();
    let mut g_prev: Option<Vec<f64>> = None;
    let mut t = f64::NAN;
    let mut small_steps = 0;
    let mut iterations = 0;
    let mut stalled = false;

    while iterations < opts.max_iter {
        if residual <= opts.grad_tol * 1e-4 {
            break;
        }
        if let Some(gp) = &g_prev {
            let num = dot(&g, &g) - dot(&g, gp);
            let beta = (num / dot(gp, gp)).max(0.0);
            for (d, gk) in dir.iter_mut().zip(&g) {
                *d = -gk + beta * *d;
            }
        }
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            for (d, gk) in dir.iter_mut().zip(&g) {
                *d = -gk;
            }
            slope = dot(&g, &dir);
        }
        if !t.is_finite() {
            t = opts.step_init * dot(&u, &u).sqrt() / dot(&dir, &dir).sqrt() * 1e-2;
        }

        // backtracking until the Rayleigh value decreases
        let mut accepted = None;
        let mut first_try = true;
        for _ in 0..MAX_LINE_TRIALS {
            if let Some((v, rv)) = pb.trial(&u, &dir, t) {
                if rv < r {
                    accepted = Some((v, rv, first_try));
                    break;
                }
            }
            first_try = false;
            t *= opts.backtrack_factor;
        }
        let Some((mut v, mut rv, first_try)) = accepted else {
            stalled = true;
            break;
        };
        // quadratic model through R(0), R'(0), R(t)
        let curv = rv - r - slope * t;
        if curv > 0.0 {
            let t_star = (-slope * t * t / (2.0 * curv)).clamp(0.1 * t, 10.0 * t);
            if (t_star - t).abs() > 1e-3 * t {
                if let Some((w, rw)) = pb.trial(&u, &dir, t_star) {
                    if rw < rv {
                        v = w;
                        rv = rw;
                        t = t_star;
                    }
                }
            }
        }
        if first_try {
            t *= 1.5;
        }

        iterations += 1;
        let decrease = (r - rv) / r;
        u = v;
        r = rv;
        history.push(r);
        let (g_new, res_new) = pb.rayleigh_gradient(&u, r);
        g_prev = Some(std::mem::replace(&mut g, g_new));
        residual = res_new;

        small_steps = if decrease < opts.tol_rel { small_steps + 1 } else { 0 };
        if small_steps >= PATIENCE && residual <= opts.grad_tol {
            break;
        }
    }
    let hint = !stalled || residual <= opts.grad_tol;
    let mut result = finish(&op, &u, iterations, Some(hint), history, opts.grad_tol);
    // report the value the monotone sequence ended on
    result.lambda = r;
    result.breakdown.rayleigh = r;
    Ok(result)
}
