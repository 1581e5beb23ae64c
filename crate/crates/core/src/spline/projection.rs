use nalgebra::DMatrix;

use super::cache::{BasisCache, MixedBasisCache};
use super::space::{MixedSplineSpace, ScalarSplineSpace, SpaceVariant};
use crate::domain::{BoxDomain, QuadratureRule, Vec3};
use crate::error::{Error, Result};

/// Inverse of the mass matrix of a tensor-product space under a tensor quadrature rule.
///
/// The mass matrix factors as a Kronecker product of one-dimensional mass matrices,
/// so its inverse is applied direction by direction.
#[derive(Debug, Clone)]
pub struct MassInverse {
    sizes: Vec<usize>,
    inverses: Vec<DMatrix<f64>>,
}

impl MassInverse {
    pub fn new(space: &ScalarSplineSpace, rule: &QuadratureRule) -> Result<Self> {
        let mut inverses = Vec::with_capacity(space.dim());
        let mut sizes = Vec::with_capacity(space.dim());
        for dir in 0..space.dim() {
            let kv = space.knots(dir);
            let n = kv.n_basis();
            let mut m = DMatrix::<f64>::zeros(n, n);
            for e in 0..kv.n_elements() {
                let h = kv.span_width(e);
                let first = kv.first_basis(e);
                for (xq, wq) in rule.nodes_1d.iter().zip(&rule.weights_1d) {
                    let vals = &kv.local_derivatives(e, *xq, 0)[0];
                    for (a, va) in vals.iter().enumerate() {
                        for (b, vb) in vals.iter().enumerate() {
                            m[((first + a) % n, (first + b) % n)] += wq * h * va * vb;
                        }
                    }
                }
            }
            let inv = m
                .try_inverse()
                .ok_or_else(|| Error::Singular(format!("1D mass matrix in direction {dir}")))?;
            inverses.push(inv);
            sizes.push(n);
        }
        Ok(Self { sizes, inverses })
    }

    /// In-place `x <- M^{-1} x` (coefficients x fastest).
    pub fn apply(&self, x: &mut [f64]) {
        let total: usize = self.sizes.iter().product();
        assert_eq!(x.len(), total);
        let mut stride = 1;
        let mut fiber = vec![0.0; *self.sizes.iter().max().unwrap_or(&0)];
        for (dir, inv) in self.inverses.iter().enumerate() {
            let n = self.sizes[dir];
            let outer = total / (n * stride);
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for (i, f) in fiber.iter_mut().take(n).enumerate() {
                        *f = x[base + i * stride];
                    }
                    for i in 0..n {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += inv[(i, j)] * fiber[j];
                        }
                        x[base + i * stride] = acc;
                    }
                }
            }
            stride *= n;
        }
    }
}

/// Result of projecting an analytic field into the mixed space.
#[derive(Debug, Clone)]
pub struct ProjectedField {
    /// Stacked velocity coefficients (component after component).
    pub velocity: Vec<f64>,
    /// Zero-mean pressure coefficients.
    pub pressure: Vec<f64>,
    /// Largest `|(grad theta_i, u)|` left after the constrained solve.
    pub constraint_residual: f64,
    pub iterations: usize,
}

fn load_vector(
    cache: &BasisCache,
    indices: &[Vec<usize>],
    weights: &[f64],
    samples: &[f64],
    n: usize,
) -> Vec<f64> {
    let nq = cache.n_points;
    let mut b = vec![0.0; n];
    for (e, idx) in indices.iter().enumerate() {
        for q in 0..nq {
            let s = weights[q] * samples[e * nq + q];
            for (a, &g) in idx.iter().enumerate() {
                b[g] += s * cache.value(q, a);
            }
        }
    }
    b
}

/// Plain L2 projection of a scalar function onto `space`.
pub fn project_scalar(
    space: &ScalarSplineSpace,
    domain: &BoxDomain,
    rule: &QuadratureRule,
    f: &dyn Fn(&Vec3) -> f64,
) -> Result<Vec<f64>> {
    let cache = BasisCache::new(space, rule);
    let indices: Vec<Vec<usize>> = (0..space.n_elements()).map(|e| space.local_indices(e)).collect();
    let det = domain.jacobian_det();
    let weights: Vec<f64> = rule.weights.iter().map(|w| w * det).collect();
    let mut samples = Vec::with_capacity(indices.len() * rule.len());
    for e in 0..indices.len() {
        for q in 0..rule.len() {
            samples.push(f(&domain.map_point(e, &rule.points[q])));
        }
    }
    let mut b = load_vector(&cache, &indices, &weights, &samples, space.n_basis());
    MassInverse::new(space, rule)?.apply(&mut b);
    Ok(b)
}

/// Constraint operator `B u = ((grad theta_i, u))_i` and its transpose, matrix free.
struct Constraint<'a> {
    space: &'a MixedSplineSpace,
    cache: &'a MixedBasisCache,
}

impl Constraint<'_> {
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let d = self.space.dim();
        let c = self.cache;
        let mut out = vec![0.0; self.space.pressure().n_basis()];
        for e in 0..c.n_elements() {
            for q in 0..c.n_points() {
                let mut uq = [0.0; 3];
                for (comp, slot) in uq.iter_mut().enumerate().take(d) {
                    let off = self.space.velocity_offset(comp);
                    *slot = c.velocity[comp].eval_value(q, &c.velocity_indices[comp][e], &u[off..]);
                }
                let w = c.weights[q];
                for (a, &g) in c.pressure_indices[e].iter().enumerate() {
                    let grad = c.pressure.gradient(q, a);
                    let dot: f64 = (0..d).map(|j| grad[j] * uq[j]).sum();
                    out[g] += w * dot;
                }
            }
        }
        out
    }

    fn apply_transpose(&self, lambda: &[f64]) -> Vec<f64> {
        let d = self.space.dim();
        let c = self.cache;
        let mut out = vec![0.0; self.space.n_velocity()];
        for e in 0..c.n_elements() {
            for q in 0..c.n_points() {
                let g = c.pressure.eval_gradient(q, &c.pressure_indices[e], lambda);
                let w = c.weights[q];
                for comp in 0..d {
                    let off = self.space.velocity_offset(comp);
                    let s = w * g[comp];
                    for (a, &gi) in c.velocity_indices[comp][e].iter().enumerate() {
                        out[off + gi] += s * c.velocity[comp].value(q, a);
                    }
                }
            }
        }
        out
    }
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Divergence-constrained L2 projection of a velocity field and plain zero-mean L2
/// projection of a pressure field. On the elevated (non-conforming) variant the velocity is
/// projected without the constraint.
///
/// The velocity minimizes the L2 distance to the target subject to
/// `(grad theta, u) = 0` for every pressure basis function `theta`. The saddle point
/// problem is reduced to its pressure-space Schur complement and solved by conjugate
/// gradients with exact Kronecker mass inverses.
pub fn project_initial_condition(
    space: &MixedSplineSpace,
    domain: &BoxDomain,
    cache: &MixedBasisCache,
    velocity: &dyn Fn(&Vec3) -> Vec3,
    pressure: Option<&dyn Fn(&Vec3) -> f64>,
) -> Result<ProjectedField> {
    let d = space.dim();
    let n_el = cache.n_elements();
    let nq = cache.n_points();
    let mut samples = vec![Vec::with_capacity(n_el * nq); d];
    for e in 0..n_el {
        for q in 0..nq {
            let v = velocity(&cache.point(domain, e, q));
            for (comp, s) in samples.iter_mut().enumerate() {
                s.push(v[comp]);
            }
        }
    }
    let minv: Vec<MassInverse> = space
        .velocity_spaces()
        .iter()
        .map(|v| MassInverse::new(v, &cache.rule))
        .collect::<Result<_>>()?;
    let apply_minv = |x: &mut [f64]| {
        for (comp, m) in minv.iter().enumerate() {
            let off = space.velocity_offset(comp);
            let n = space.velocity(comp).n_basis();
            m.apply(&mut x[off..off + n]);
        }
    };
    let mut u0 = vec![0.0; space.n_velocity()];
    for comp in 0..d {
        let off = space.velocity_offset(comp);
        let b = load_vector(
            &cache.velocity[comp],
            &cache.velocity_indices[comp],
            &cache.weights,
            &samples[comp],
            space.velocity(comp).n_basis(),
        );
        u0[off..off + b.len()].copy_from_slice(&b);
    }
    apply_minv(&mut u0);

    let op = Constraint { space, cache };
    let schur = |lambda: &[f64]| -> Vec<f64> {
        let mut t = op.apply_transpose(lambda);
        apply_minv(&mut t);
        let mut y = op.apply(&t);
        remove_mean(&mut y);
        y
    };

    let mut rhs = op.apply(&u0);
    remove_mean(&mut rhs);
    if space.variant() == SpaceVariant::Elevated {
        // Divergence does not map into the pressure space; plain projection only.
        rhs.iter_mut().for_each(|v| *v = 0.0);
    }
    let b_norm = dot(&rhs, &rhs).sqrt();
    let np = rhs.len();
    let mut lambda = vec![0.0; np];
    let mut iterations = 0;
    if b_norm > 0.0 {
        let mut r = rhs.clone();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let max_iter = 20 * np + 100;
        let target = (1e-15 * b_norm).max(1e-300);
        while rr.sqrt() > target {
            if iterations >= max_iter {
                return Err(Error::Singular(format!(
                    "divergence constraint did not converge (residual {:.3e})",
                    rr.sqrt() / b_norm
                )));
            }
            let ap = schur(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Singular(
                    "divergence constraint operator is not positive on zero-mean pressures".into(),
                ));
            }
            let alpha = rr / pap;
            for i in 0..np {
                lambda[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..np {
                p[i] = r[i] + beta * p[i];
            }
            iterations += 1;
        }
    }
    let mut corr = op.apply_transpose(&lambda);
    apply_minv(&mut corr);
    let u: Vec<f64> = u0.iter().zip(&corr).map(|(a, b)| a - b).collect();
    let constraint_residual = op.apply(&u).iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let p = match pressure {
        Some(f) => {
            let mut samples = Vec::with_capacity(n_el * nq);
            for e in 0..n_el {
                for q in 0..nq {
                    samples.push(f(&cache.point(domain, e, q)));
                }
            }
            let mut b = load_vector(
                &cache.pressure,
                &cache.pressure_indices,
                &cache.weights,
                &samples,
                space.pressure().n_basis(),
            );
            MassInverse::new(space.pressure(), &cache.rule)?.apply(&mut b);
            // basis functions all have the same integral, so a constant shift of
            // the coefficients removes the mean
            remove_mean(&mut b);
            b
        }
        None => vec![0.0; space.pressure().n_basis()],
    };
    Ok(ProjectedField {
        velocity: u,
        pressure: p,
        constraint_residual,
        iterations,
    })
}
