//! Sparse storage and preconditioned flexible GMRES for the linearized saddle point systems.

mod csr;
mod fgmres;
mod nullspace;
mod schwarz;

pub use csr::CsrMatrix;
pub use fgmres::{fgmres, solve, SolveReport, SolverOptions};
pub use nullspace::NullSpace;
pub use schwarz::{AdditiveSchwarz, IdentityPreconditioner, Preconditioner};

/// Preconditioner selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PreconditionerKind {
    None,
    #[default]
    AdditiveSchwarz,
}

impl std::str::FromStr for PreconditionerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "asm" | "additive-schwarz" => Ok(Self::AdditiveSchwarz),
            other => Err(format!("unknown preconditioner `{other}` (expected none or asm)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn periodic_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            t.push((i, (i + 1) % n, -1.0));
            t.push((i, (i + n - 1) % n, -1.0));
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_in_one_iteration() {
        let a = CsrMatrix::identity(7);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        let (x, rep) = solve(&a, &b, &IdentityPreconditioner, &NullSpace::none(), &SolverOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        for i in 0..7 {
            assert!((x[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn periodic_poisson_matches_dense() {
        let n = 16;
        let a = periodic_laplacian(n);
        let mut b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 1.0).collect();
        let mean = b.iter().sum::<f64>() / n as f64;
        b.iter_mut().for_each(|v| *v -= mean);
        let ns = NullSpace::new(vec![0..n]);
        let (x, _) = solve(&a, &b, &IdentityPreconditioner, &ns, &SolverOptions::default()).unwrap();
        // dense oracle: pin the mean through a bordered system
        let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&a.to_dense());
        for i in 0..n {
            m[(i, n)] = 1.0;
            m[(n, i)] = 1.0;
        }
        let mut rhs = nalgebra::DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = b[i];
        }
        let exact = m.lu().solve(&rhs).unwrap();
        for i in 0..n {
            assert!((x[i] - exact[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_without_projection_fails() {
        let n = 16;
        let a = periodic_laplacian(n);
        let b = vec![1.0; n];
        let opts = SolverOptions { tol: 1e-10, max_iter: 50, restart: 10 };
        match solve(&a, &b, &IdentityPreconditioner, &NullSpace::none(), &opts) {
            Err(crate::Error::LinearNotConverged { residual, .. }) => assert!(residual > 1e-3),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn schwarz_preconditioned_solve() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5 + (i % 3) as f64));
            t.push((i, (i + 1) % n, -1.0));
            t.push((i, (i + n - 1) % n, -1.2));
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let subs: Vec<Vec<usize>> = (0..5).map(|s| (0..10).map(|k| (8 * s + k) % n).collect()).collect();
        let p = AdditiveSchwarz::new(&a, subs).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x, rep) = solve(&a, &b, &p, &NullSpace::none(), &SolverOptions::default()).unwrap();
        let r = a.mul_vec(&x);
        let err: f64 = r.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-9);
        assert!(rep.iterations < 40);
    }

    #[test]
    fn parse_kind() {
        assert_eq!("none".parse::<PreconditionerKind>().unwrap(), PreconditionerKind::None);
        assert!("ilu".parse::<PreconditionerKind>().is_err());
    }
}
