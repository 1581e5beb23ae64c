use super::csr::CsrMatrix;
use super::nullspace::NullSpace;
use super::schwarz::Preconditioner;
use crate::error::{Error, Result};

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            restart: 100,
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative residual `||b - A x|| / ||b||` on the constrained subspace.
    pub residual: f64,
    pub converged: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Flexible GMRES with right preconditioning and restarts.
///
/// Iterates on the subspace orthogonal to the null-space blocks: the right-hand side,
/// every Krylov vector and every preconditioned vector are projected. Always returns the
/// best iterate together with a report; see [`solve`] for the error-returning variant.
pub fn fgmres(
    a: &CsrMatrix,
    b: &[f64],
    precond: &dyn Preconditioner,
    null: &NullSpace,
    opts: &SolverOptions,
) -> (Vec<f64>, SolveReport) {
    let n = b.len();
    assert_eq!(a.n_rows(), n);
    let mut rhs = b.to_vec();
    null.project(&mut rhs);
    let b_norm = norm(&rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return (
            x,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        );
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    let mut r = vec![0.0; n];
    let mut rel;
    loop {
        // true residual
        a.matvec(&x, &mut r);
        for i in 0..n {
            r[i] = rhs[i] - r[i];
        }
        null.project(&mut r);
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= opts.tol || total >= opts.max_iter || !rel.is_finite() {
            break;
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        v.push(r.iter().map(|t| t / beta).collect());
        let mut k_used = 0;
        for k in 0..m {
            if total >= opts.max_iter {
                break;
            }
            let mut zk = vec![0.0; n];
            precond.apply(&v[k], &mut zk);
            null.project(&mut zk);
            let mut w = vec![0.0; n];
            a.matvec(&zk, &mut w);
            null.project(&mut w);
            for j in 0..=k {
                // modified Gram-Schmidt, applied twice for robustness
                let hjk = dot(&w, &v[j]);
                h[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * v[j][i];
                }
            }
            for j in 0..=k {
                let c = dot(&w, &v[j]);
                h[j][k] += c;
                for i in 0..n {
                    w[i] -= c * v[j][i];
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            z.push(zk);
            total += 1;
            k_used = k + 1;
            let est = g[k + 1].abs() / b_norm;
            if est <= opts.tol * 0.5 || hn <= 1e-14 * beta {
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        // back substitution
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * z[j][i];
            }
        }
        null.project(&mut x);
        if k_used == 0 {
            break;
        }
    }
    let converged = rel <= opts.tol;
    (
        x,
        SolveReport {
            iterations: total,
            residual: rel,
            converged,
        },
    )
}

/// Like [`fgmres`], but non-convergence is an error carrying the achieved residual.
pub fn solve(
    a: &CsrMatrix,
    b: &[f64],
    precond: &dyn Preconditioner,
    null: &NullSpace,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let (x, report) = fgmres(a, b, precond, null, opts);
    if report.converged {
        Ok((x, report))
    } else {
        Err(Error::LinearNotConverged {
            iterations: report.iterations,
            residual: report.residual,
        })
    }
}
