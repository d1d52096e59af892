use nalgebra::{DMatrix, DVector};

use super::{finish, initial_profile, EigenResult, SolverOptions};
use crate::energy::{MaskedOperator, OperatorParams};
use crate::error::EigsolveError;
use crate::geometry::DomainMask;
use crate::par;

/// Symmetric matrix `M` over mask nodes (ordered as `mask.indices()`) with
/// `uᵀ M u = a·local_energy(u, 2) + b·gagliardo_2(u)` for every `u`
/// supported in the mask. Exterior edges, exterior kernel mass and the tail
/// fold into the diagonal.
pub fn assemble_p2_matrix(mask: &DomainMask, params: &OperatorParams) -> Result<DMatrix<f64>, EigsolveError> {
    if params.p != 2.0 {
        return Err(EigsolveError::NotQuadratic(params.p));
    }
    if mask.is_empty() {
        return Err(EigsolveError::EmptyMask);
    }
    let op = MaskedOperator::new(mask, params)?;
    Ok(assemble_from(&op))
}

fn assemble_from(op: &MaskedOperator) -> DMatrix<f64> {
    let n = op.len();
    let params = *op.params();
    let multi = op.multi_indices();
    let kernel = op.kernel();
    let la = params.a * op.local_scale();
    let d = op.lattice().dim();
    let rows = par::map_range(n, |i| {
        let mut row = vec![0.0; n];
        if params.b != 0.0 {
            let mut diag = 0.0;
            for j in 0..n {
                if j != i {
                    let w = kernel.between(multi[i], multi[j]);
                    row[j] = -2.0 * params.b * w;
                    diag += w;
                }
            }
            row[i] = params.b * (2.0 * diag + op.exterior_weight(i));
        }
        row[i] += la * (2 * d) as f64;
        row
    });
    let mut m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if params.a != 0.0 {
        for i in 0..n {
            for j in op.forward_neighbors(i).into_iter().flatten() {
                m[(i, j)] -= la;
                m[(j, i)] -= la;
            }
        }
    }
    m
}

/// All eigenvalues of `M / h^d` in increasing order, by full symmetric
/// eigendecomposition.
pub fn dense_eigenvalues(mask: &DomainMask, params: &OperatorParams) -> Result<Vec<f64>, EigsolveError> {
    let m = assemble_p2_matrix(mask, params)?;
    let vol = mask.lattice().cell_volume();
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().map(|v| v / vol).collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Smallest eigenpair at `p = 2` by inverse iteration with a dense Cholesky
/// factorization, started from the erosion-depth profile. Stops when the
/// relative residual `‖Mu - μu‖ / μ` drops below `tol_rel`.
pub fn solve_p2(mask: &DomainMask, params: &OperatorParams, opts: &SolverOptions) -> Result<EigenResult, EigsolveError> {
    opts.validate()?;
    if params.p != 2.0 {
        return Err(EigsolveError::NotQuadratic(params.p));
    }
    if mask.is_empty() {
        return Err(EigsolveError::EmptyMask);
    }
    let op = MaskedOperator::new(mask, params)?;
    let m = assemble_from(&op);
    let chol = m.clone().cholesky().ok_or(EigsolveError::Factorization)?;
    let mut x = DVector::from_vec(initial_profile(&op, None));
    x /= x.norm();
    let mut iterations = 0;
    let mut reached = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let y = chol.solve(&x);
        x = &y / y.norm();
        let mx = &m * &x;
        let mu = x.dot(&mx);
        let res = (&mx - &x * mu).norm() / mu;
        if res <= opts.tol_rel {
            reached = true;
            break;
        }
    }
    if x.sum() < 0.0 {
        x = -x;
    }
    let mut u: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let norm = op.lp_norm_p(&u).sqrt();
    for v in &mut u {
        *v /= norm;
    }
    let mut result = finish(&op, &u, iterations, Some(reached), Vec::new(), 10.0 * opts.tol_rel);
    result.history.push(result.lambda);
    Ok(result)
}
