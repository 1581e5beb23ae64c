use super::space::{MixedSplineSpace, ScalarSplineSpace};
use crate::domain::{BoxDomain, QuadratureRule, Vec3};

/// Basis values, gradients and Laplacians of one scalar space at every point of a
/// quadrature rule. On a uniform grid these tables are the same for every element.
#[derive(Debug, Clone)]
pub struct BasisCache {
    pub dim: usize,
    pub n_local: usize,
    pub n_points: usize,
    /// `values[q * n_local + a]`
    pub values: Vec<f64>,
    /// `gradients[(q * n_local + a) * dim + j]`
    pub gradients: Vec<f64>,
    /// `laplacians[q * n_local + a]`
    pub laplacians: Vec<f64>,
}

impl BasisCache {
    pub fn new(space: &ScalarSplineSpace, rule: &QuadratureRule) -> Self {
        let dim = space.dim();
        let n_local = space.local_count();
        let n_points = rule.len();
        let mut values = Vec::with_capacity(n_points * n_local);
        let mut gradients = Vec::with_capacity(n_points * n_local * dim);
        let mut laplacians = Vec::with_capacity(n_points * n_local);
        for pt in &rule.points {
            let ev = space.eval_basis(0, pt);
            for a in 0..n_local {
                values.push(ev.values[a]);
                gradients.extend_from_slice(&ev.gradients[a][..dim]);
                laplacians.push((0..dim).map(|j| ev.hessians[a][j][j]).sum());
            }
        }
        Self {
            dim,
            n_local,
            n_points,
            values,
            gradients,
            laplacians,
        }
    }

    #[inline]
    pub fn value(&self, q: usize, a: usize) -> f64 {
        self.values[q * self.n_local + a]
    }

    #[inline]
    pub fn gradient(&self, q: usize, a: usize) -> &[f64] {
        let s = (q * self.n_local + a) * self.dim;
        &self.gradients[s..s + self.dim]
    }

    #[inline]
    pub fn laplacian(&self, q: usize, a: usize) -> f64 {
        self.laplacians[q * self.n_local + a]
    }

    /// Value of a field with given global coefficients at point `q` of an element.
    pub fn eval_value(&self, q: usize, indices: &[usize], coeffs: &[f64]) -> f64 {
        let row = &self.values[q * self.n_local..(q + 1) * self.n_local];
        row.iter().zip(indices).map(|(v, &g)| v * coeffs[g]).sum()
    }

    /// Gradient of a field at point `q` of an element.
    pub fn eval_gradient(&self, q: usize, indices: &[usize], coeffs: &[f64]) -> Vec3 {
        let mut g = [0.0; 3];
        for (a, &gi) in indices.iter().enumerate() {
            let c = coeffs[gi];
            for (j, gj) in self.gradient(q, a).iter().enumerate() {
                g[j] += c * gj;
            }
        }
        g
    }

    pub fn eval_laplacian(&self, q: usize, indices: &[usize], coeffs: &[f64]) -> f64 {
        let row = &self.laplacians[q * self.n_local..(q + 1) * self.n_local];
        row.iter().zip(indices).map(|(v, &g)| v * coeffs[g]).sum()
    }
}

/// Basis tables of all subspaces plus element connectivity, shared by assembly,
/// projection and diagnostics.
#[derive(Debug, Clone)]
pub struct MixedBasisCache {
    pub rule: QuadratureRule,
    pub velocity: Vec<BasisCache>,
    pub pressure: BasisCache,
    /// Quadrature weights scaled by the element Jacobian determinant.
    pub weights: Vec<f64>,
    /// `velocity_indices[comp][element]`: global (per component) indices.
    pub velocity_indices: Vec<Vec<Vec<usize>>>,
    pub pressure_indices: Vec<Vec<usize>>,
    /// Reference-point-to-physical offsets `xi * h` of each quadrature point.
    pub offsets: Vec<Vec3>,
}

impl MixedBasisCache {
    pub fn new(space: &MixedSplineSpace, domain: &BoxDomain, rule: QuadratureRule) -> Self {
        let det = domain.jacobian_det();
        let weights = rule.weights.iter().map(|w| w * det).collect();
        let velocity = space
            .velocity_spaces()
            .iter()
            .map(|v| BasisCache::new(v, &rule))
            .collect();
        let pressure = BasisCache::new(space.pressure(), &rule);
        let n_el = space.n_elements();
        let velocity_indices = space
            .velocity_spaces()
            .iter()
            .map(|v| (0..n_el).map(|e| v.local_indices(e)).collect())
            .collect();
        let pressure_indices = (0..n_el).map(|e| space.pressure().local_indices(e)).collect();
        let offsets = rule
            .points
            .iter()
            .map(|xi| {
                let mut o = [0.0; 3];
                for (k, slot) in o.iter_mut().enumerate().take(domain.dim()) {
                    *slot = xi[k] * domain.h(k);
                }
                o
            })
            .collect();
        Self {
            rule,
            velocity,
            pressure,
            weights,
            velocity_indices,
            pressure_indices,
            offsets,
        }
    }

    pub fn n_points(&self) -> usize {
        self.rule.len()
    }

    pub fn n_elements(&self) -> usize {
        self.pressure_indices.len()
    }

    pub fn dim(&self) -> usize {
        self.pressure.dim
    }

    /// Physical coordinates of point `q` in element `element`.
    pub fn point(&self, domain: &BoxDomain, element: usize, q: usize) -> Vec3 {
        let o = domain.element_origin(element);
        let mut x = [0.0; 3];
        for k in 0..3 {
            x[k] = o[k] + self.offsets[q][k];
        }
        x
    }
}
