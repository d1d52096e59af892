//! Discrete functionals on grid functions.
//!
//! Everything here is evaluated over the whole lattice box with the zero
//! extension outside it. [`MaskedOperator`] evaluates the same quantities for
//! functions supported in a fixed mask, in `O(|Ω|^2)` instead of `O(N_box^2)`;
//! it is what the solvers use.

mod kernel;
mod masked;
mod power;

use std::fmt;
use std::str::FromStr;

pub use kernel::{tail_kappa, tail_weight, KernelTable};
pub use masked::{EnergyParts, MaskedOperator};
pub use power::PowerLaw;

use crate::error::EnergyError;
use crate::geometry::Lattice;
use crate::par;
use crate::rearrange::GridFunction;

/// Discretization of `‖∇u‖_p^p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LocalForm {
    /// `h^{d-p} Σ_edges |u_j - u_i|^p`: the graph p-Dirichlet energy.
    #[default]
    Edge,
    /// `h^d Σ_i |∇_h u(i)|^p` with forward differences.
    Euclidean,
}

impl fmt::Display for LocalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Edge => "edge",
            Self::Euclidean => "euclidean",
        })
    }
}

impl FromStr for LocalForm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge" => Ok(Self::Edge),
            "euclidean" => Ok(Self::Euclidean),
            other => Err(format!("unknown local form {other:?} (expected edge or euclidean)")),
        }
    }
}

/// Exponents and weights of `-a Δ_p + b (-Δ_p)^s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorParams {
    pub p: f64,
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub tail: bool,
    pub local_form: LocalForm,
}

impl OperatorParams {
    /// `a = b = 1`, tail on, edge form.
    pub fn mixed(p: f64, s: f64) -> Self {
        Self { p, s, a: 1.0, b: 1.0, tail: true, local_form: LocalForm::Edge }
    }

    pub fn weighted(p: f64, s: f64, a: f64, b: f64) -> Self {
        Self { a, b, ..Self::mixed(p, s) }
    }

    pub fn with_tail(self, tail: bool) -> Self {
        Self { tail, ..self }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        let bad = |m: String| Err(EnergyError::InvalidParams(m));
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p must exceed 1, got {}", self.p));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("s must lie in (0, 1), got {}", self.s));
        }
        if !(self.a >= 0.0 && self.b >= 0.0 && self.a + self.b > 0.0) {
            return bad(format!("weights need a, b >= 0 and a + b > 0, got a = {}, b = {}", self.a, self.b));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    /// `‖u‖_p^p`.
    pub lp_norm_p: f64,
    pub local_energy: f64,
    /// Gagliardo energy including the tail.
    pub nonlocal_energy: f64,
    pub rayleigh: f64,
}

/// `h^d Σ_i |u_i|^p`.
pub fn lp_norm_p(u: &GridFunction, p: f64) -> f64 {
    let law = PowerLaw::new(p);
    u.lattice().cell_volume() * par::pairwise_sum(&u.values().iter().map(|&v| law.pow(v)).collect::<Vec<_>>())
}

fn value_at(u: &GridFunction, m: [i64; 2]) -> f64 {
    u.lattice().checked_index(m).map(|i| u.value(i)).unwrap_or(0.0)
}

fn signed(l: &Lattice, i: usize) -> [i64; 2] {
    let m = l.multi_index(i);
    [m[0] as i64, m[1] as i64]
}

fn step(m: [i64; 2], axis: usize, by: i64) -> [i64; 2] {
    let mut out = m;
    out[axis] += by;
    out
}

/// Squared forward-difference magnitude `Σ_k (u(m+e_k) - u(m))^2` at a possibly off-box node.
fn forward_sq(u: &GridFunction, m: [i64; 2]) -> f64 {
    let here = value_at(u, m);
    (0..u.lattice().dim()).map(|k| (value_at(u, step(m, k, 1)) - here).powi(2)).sum()
}

/// Local energy of the zero extension. Edge form counts every lattice edge
/// touching the box, including edges to off-box nodes.
pub fn local_energy(u: &GridFunction, p: f64, form: LocalForm) -> f64 {
    let l = *u.lattice();
    let d = l.dim();
    let scale = l.h().powf(d as f64 - p);
    let law = PowerLaw::new(p);
    let rows = match form {
        LocalForm::Edge => par::map_range(l.len(), |i| {
            let m = signed(&l, i);
            let here = u.value(i);
            let mut acc = 0.0;
            for k in 0..d {
                acc += law.pow(value_at(u, step(m, k, 1)) - here);
                if m[k] == 0 {
                    acc += law.pow(here);
                }
            }
            acc
        }),
        LocalForm::Euclidean => {
            // nodes of the box plus the ghost layer below it on each axis
            let [nx, ny] = l.extent();
            let gx = nx + 1;
            let gy = if d == 2 { ny + 1 } else { 1 };
            let off = if d == 2 { 1 } else { 0 };
            par::map_range(gx * gy, |g| {
                let m = [(g % gx) as i64 - 1, (g / gx) as i64 - off];
                law.pow(forward_sq(u, m).sqrt())
            })
        }
    };
    scale * par::pairwise_sum(&rows)
}

fn check_tail_support(u: &GridFunction, tail: bool) -> Result<(), EnergyError> {
    if tail {
        let l = u.lattice();
        if let Some(i) = (0..l.len()).find(|&i| u.value(i) != 0.0 && l.is_boundary_node(i)) {
            return Err(EnergyError::SupportTouchesBoundary(i));
        }
    }
    Ok(())
}

/// `h^{2d} Σ_{i≠j} |u_i - u_j|^p / |x_i - x_j|^{d+sp}` over box pairs, plus
/// the exterior tail `2 h^d Σ_i |u_i|^p κ(x_i)` when `tail` is set.
pub fn gagliardo_p(u: &GridFunction, p: f64, s: f64, tail: bool) -> Result<f64, EnergyError> {
    check_tail_support(u, tail)?;
    let l = *u.lattice();
    let kernel = KernelTable::new(&l, s, p);
    let law = PowerLaw::new(p);
    let vals = u.values();
    let multi: Vec<[usize; 2]> = (0..l.len()).map(|i| l.multi_index(i)).collect();
    let params = OperatorParams { p, s, a: 0.0, b: 1.0, tail, local_form: LocalForm::Edge };
    let rows = par::map_range(l.len(), |i| {
        let ui = vals[i];
        let mut acc = 0.0;
        for j in 0..l.len() {
            let uj = vals[j];
            if j != i && (ui != 0.0 || uj != 0.0) {
                acc += law.pow(ui - uj) * kernel.between(multi[i], multi[j]);
            }
        }
        acc + law.pow(ui) * tail_weight(&l, i, &params)
    });
    Ok(par::pairwise_sum(&rows))
}

/// Local, nonlocal and `L^p` parts together with the weighted quotient.
pub fn rayleigh_quotient(u: &GridFunction, params: &OperatorParams) -> Result<EnergyBreakdown, EnergyError> {
    params.validate()?;
    let norm = lp_norm_p(u, params.p);
    if norm == 0.0 {
        return Err(EnergyError::Degenerate);
    }
    let local = if params.a != 0.0 { local_energy(u, params.p, params.local_form) } else { 0.0 };
    let nonlocal = if params.b != 0.0 { gagliardo_p(u, params.p, params.s, params.tail)? } else { 0.0 };
    Ok(EnergyBreakdown {
        lp_norm_p: norm,
        local_energy: local,
        nonlocal_energy: nonlocal,
        rayleigh: (params.a * local + params.b * nonlocal) / norm,
    })
}

/// Gradient of `a·local + b·nonlocal` with respect to every box value.
/// Entries off the support mask are reported as computed; solvers project
/// them away.
pub fn energy_gradient(u: &GridFunction, params: &OperatorParams) -> Result<Vec<f64>, EnergyError> {
    params.validate()?;
    let l = *u.lattice();
    let d = l.dim();
    let p = params.p;
    let law = PowerLaw::new(p);
    let vals = u.values();
    let n = l.len();
    let mut grad = vec![0.0; n];
    if params.a != 0.0 {
        let scale = params.a * p * l.h().powf(d as f64 - p);
        match params.local_form {
            LocalForm::Edge => {
                for (i, g) in grad.iter_mut().enumerate() {
                    let m = signed(&l, i);
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += law.phi(vals[i] - value_at(u, step(m, k, 1)));
                        acc += law.phi(vals[i] - value_at(u, step(m, k, -1)));
                    }
                    *g += scale * acc;
                }
            }
            LocalForm::Euclidean => {
                // coefficient of S^{p/2-1}, zero where S vanishes
                let coef = |m: [i64; 2]| {
                    let sq = forward_sq(u, m);
                    if sq == 0.0 {
                        0.0
                    } else {
                        sq.powf(p / 2.0 - 1.0)
                    }
                };
                for (i, g) in grad.iter_mut().enumerate() {
                    let m = signed(&l, i);
                    let here = vals[i];
                    let own = coef(m);
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc -= own * (value_at(u, step(m, k, 1)) - here);
                        let back = step(m, k, -1);
                        acc += coef(back) * (here - value_at(u, back));
                    }
                    *g += scale * acc;
                }
            }
        }
    }
    if params.b != 0.0 {
        check_tail_support(u, params.tail)?;
        let kernel = KernelTable::new(&l, params.s, p);
        let multi: Vec<[usize; 2]> = (0..n).map(|i| l.multi_index(i)).collect();
        let rows = par::map_range(n, |i| {
            let ui = vals[i];
            let mut acc = 0.0;
            for j in 0..n {
                if j != i {
                    acc += law.phi(ui - vals[j]) * kernel.between(multi[i], multi[j]);
                }
            }
            2.0 * p * acc + p * law.phi(ui) * tail_weight(&l, i, params)
        });
        for (g, r) in grad.iter_mut().zip(rows) {
            *g += params.b * r;
        }
    }
    Ok(grad)
}
