use nalgebra::{DMatrix, DVector, LU};

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

/// Action of an approximate inverse.
pub trait Preconditioner {
    /// `z = M^{-1} r`
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// No preconditioning.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// One-level overlapping additive Schwarz: `M^{-1} = sum_i R_i^T A_i^{-1} R_i`
/// with exact dense factorizations of the subdomain matrices.
pub struct AdditiveSchwarz {
    subdomains: Vec<Vec<usize>>,
    factors: Vec<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    n: usize,
}

impl std::fmt::Debug for AdditiveSchwarz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdditiveSchwarz")
            .field("subdomains", &self.subdomains.len())
            .field("n", &self.n)
            .finish()
    }
}

impl AdditiveSchwarz {
    /// Factorizes the principal submatrix of every (possibly overlapping) index set.
    /// A subdomain matrix that turns out singular is shifted slightly on its diagonal.
    pub fn new(matrix: &CsrMatrix, subdomains: Vec<Vec<usize>>) -> Result<Self> {
        let n = matrix.n_rows();
        let mut local_of = vec![usize::MAX; n];
        let mut factors = Vec::with_capacity(subdomains.len());
        for dofs in &subdomains {
            let m = dofs.len();
            for (l, &g) in dofs.iter().enumerate() {
                if g >= n {
                    return Err(Error::InvalidInput(format!("subdomain index {g} out of range")));
                }
                local_of[g] = l;
            }
            let mut a = DMatrix::<f64>::zeros(m, m);
            for (l, &g) in dofs.iter().enumerate() {
                let (cols, vals) = matrix.row(g);
                for (&c, &v) in cols.iter().zip(vals) {
                    let lc = local_of[c];
                    if lc != usize::MAX {
                        a[(l, lc)] = v;
                    }
                }
            }
            for &g in dofs {
                local_of[g] = usize::MAX;
            }
            let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
            let mut lu = a.clone().lu();
            let mut shift = 1e-12 * scale;
            while !lu.is_invertible() || !lu_is_well_conditioned(&lu) {
                if shift > 1e-2 * scale {
                    return Err(Error::Singular("additive Schwarz subdomain matrix".into()));
                }
                let mut b = a.clone();
                for i in 0..m {
                    b[(i, i)] += shift;
                }
                lu = b.lu();
                shift *= 100.0;
            }
            factors.push(lu);
        }
        Ok(Self {
            subdomains,
            factors,
            n,
        })
    }

    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }
}

fn lu_is_well_conditioned(lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> bool {
    let u = lu.u();
    let diag: Vec<f64> = u.diagonal().iter().map(|v| v.abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    max > 0.0 && min > 1e-14 * max
}

impl Preconditioner for AdditiveSchwarz {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        assert_eq!(r.len(), self.n);
        z.iter_mut().for_each(|v| *v = 0.0);
        for (dofs, lu) in self.subdomains.iter().zip(&self.factors) {
            let mut local = DVector::from_iterator(dofs.len(), dofs.iter().map(|&g| r[g]));
            lu.solve_mut(&mut local);
            for (l, &g) in dofs.iter().enumerate() {
                z[g] += local[l];
            }
        }
    }
}
