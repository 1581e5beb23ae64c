use super::knots::{build_periodic_knots, KnotVector};
use crate::domain::{BoxDomain, Mat3, Vec3, MAX_DIM};
use crate::error::{Error, Result};

/// Values and physical derivatives of the basis functions supported at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    /// Global basis indices, local order x fastest.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec3>,
    pub hessians: Vec<Mat3>,
}

/// Tensor-product periodic spline space on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSplineSpace {
    knots: Vec<KnotVector>,
}

impl ScalarSplineSpace {
    pub fn new(knots: Vec<KnotVector>) -> Result<Self> {
        if knots.is_empty() || knots.len() > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "a spline space needs 1..={MAX_DIM} knot vectors, got {}",
                knots.len()
            )));
        }
        Ok(Self { knots })
    }

    pub fn dim(&self) -> usize {
        self.knots.len()
    }

    pub fn knots(&self, dir: usize) -> &KnotVector {
        &self.knots[dir]
    }

    pub fn degree(&self, dir: usize) -> usize {
        self.knots[dir].degree()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.knots.iter().map(|k| k.degree()).collect()
    }

    pub fn n_basis_dir(&self, dir: usize) -> usize {
        self.knots[dir].n_basis()
    }

    /// Total number of basis functions.
    pub fn n_basis(&self) -> usize {
        self.knots.iter().map(|k| k.n_basis()).product()
    }

    pub fn n_elements(&self) -> usize {
        self.knots.iter().map(|k| k.n_elements()).product()
    }

    /// Number of basis functions supported on one element.
    pub fn local_count(&self) -> usize {
        self.knots.iter().map(|k| k.degree() + 1).product()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for dir in (0..self.dim()).rev() {
            flat = flat * self.n_basis_dir(dir) + idx[dir];
        }
        flat
    }

    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rest = flat;
        for (dir, slot) in idx.iter_mut().enumerate().take(self.dim()) {
            let n = self.n_basis_dir(dir);
            *slot = rest % n;
            rest /= n;
        }
        idx
    }

    fn element_multi_index(&self, element: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rest = element;
        for (dir, slot) in idx.iter_mut().enumerate().take(self.dim()) {
            let n = self.knots[dir].n_elements();
            *slot = rest % n;
            rest /= n;
        }
        idx
    }

    /// Global indices of the functions supported on an element (x fastest).
    pub fn local_indices(&self, element: usize) -> Vec<usize> {
        let eidx = self.element_multi_index(element);
        let d = self.dim();
        let counts: Vec<usize> = (0..d).map(|k| self.degree(k) + 1).collect();
        let first: Vec<usize> = (0..d).map(|k| self.knots[k].first_basis(eidx[k])).collect();
        let mut out = Vec::with_capacity(self.local_count());
        for local in 0..self.local_count() {
            let mut rest = local;
            let mut g = [0; MAX_DIM];
            for k in 0..d {
                let r = rest % counts[k];
                rest /= counts[k];
                g[k] = (first[k] + r) % self.n_basis_dir(k);
            }
            out.push(self.flat_index(&g));
        }
        out
    }

    /// One-dimensional derivative tables (orders 0..=2) in every direction.
    fn tables(&self, eidx: &[usize; MAX_DIM], xi: &Vec3) -> Vec<Vec<Vec<f64>>> {
        (0..self.dim())
            .map(|k| self.knots[k].local_derivatives(eidx[k], xi[k], 2))
            .collect()
    }

    /// Basis values, gradients and Hessians at reference coordinates `xi` of `element`.
    pub fn eval_basis(&self, element: usize, xi: &Vec3) -> BasisEval {
        let eidx = self.element_multi_index(element);
        let tables = self.tables(&eidx, xi);
        self.combine(element, &tables)
    }

    /// Evaluation at a physical point (wrapped periodically).
    pub fn eval_point(&self, x: &Vec3) -> BasisEval {
        let d = self.dim();
        let mut eidx = [0; MAX_DIM];
        let mut xi = [0.0; MAX_DIM];
        for k in 0..d {
            let (e, t) = self.knots[k].locate(x[k]);
            eidx[k] = e;
            xi[k] = t;
        }
        let mut element = 0;
        for k in (0..d).rev() {
            element = element * self.knots[k].n_elements() + eidx[k];
        }
        let tables = self.tables(&eidx, &xi);
        self.combine(element, &tables)
    }

    fn combine(&self, element: usize, tables: &[Vec<Vec<f64>>]) -> BasisEval {
        let d = self.dim();
        let n = self.local_count();
        let indices = self.local_indices(element);
        let mut values = Vec::with_capacity(n);
        let mut gradients = Vec::with_capacity(n);
        let mut hessians = Vec::with_capacity(n);
        for local in 0..n {
            let mut r = [0; MAX_DIM];
            let mut rest = local;
            for k in 0..d {
                let c = self.degree(k) + 1;
                r[k] = rest % c;
                rest /= c;
            }
            // product over directions with derivative order ord[k] in direction k
            let prod = |ord: [usize; MAX_DIM]| -> f64 {
                (0..d).map(|k| tables[k][ord[k]][r[k]]).product()
            };
            values.push(prod([0; MAX_DIM]));
            let mut g = [0.0; MAX_DIM];
            let mut hs = [[0.0; MAX_DIM]; MAX_DIM];
            for a in 0..d {
                let mut o = [0; MAX_DIM];
                o[a] = 1;
                g[a] = prod(o);
                for b in 0..d {
                    let mut o = [0; MAX_DIM];
                    o[a] += 1;
                    o[b] += 1;
                    hs[a][b] = prod(o);
                }
            }
            gradients.push(g);
            hessians.push(hs);
        }
        BasisEval {
            indices,
            values,
            gradients,
            hessians,
        }
    }
}

/// Choice of velocity space relative to the pressure space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpaceVariant {
    /// Component `i` is one degree higher (and one order smoother) in direction `i` only.
    #[default]
    DivConforming,
    /// Every component is one degree higher in every direction. Divergence is not
    /// contained in the pressure space; used as a negative control.
    Elevated,
}

/// Per-subspace dimensions of a mixed space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedDimensions {
    pub velocity: Vec<usize>,
    pub pressure: usize,
    pub multiplier: usize,
}

/// Velocity components, pressure and multiplier spaces on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSplineSpace {
    base_degree: usize,
    variant: SpaceVariant,
    velocity: Vec<ScalarSplineSpace>,
    pressure: ScalarSplineSpace,
}

/// Divergence-conforming mixed space on `domain` with base degree `p`.
pub fn build_mixed_space(domain: &BoxDomain, p: usize) -> Result<MixedSplineSpace> {
    build_mixed_space_variant(domain, p, SpaceVariant::DivConforming)
}

pub fn build_mixed_space_variant(
    domain: &BoxDomain,
    p: usize,
    variant: SpaceVariant,
) -> Result<MixedSplineSpace> {
    if p < 1 {
        return Err(Error::InvalidInput("base degree must be at least 1".into()));
    }
    let d = domain.dim();
    let knots_with = |deg: &dyn Fn(usize) -> usize| -> Result<Vec<KnotVector>> {
        (0..d)
            .map(|k| build_periodic_knots(domain.elements()[k], deg(k), domain.lengths()[k]))
            .collect()
    };
    let pressure = ScalarSplineSpace::new(knots_with(&|_| p)?)?;
    let mut velocity = Vec::with_capacity(d);
    for comp in 0..d {
        let knots = match variant {
            SpaceVariant::DivConforming => knots_with(&|k| if k == comp { p + 1 } else { p })?,
            SpaceVariant::Elevated => knots_with(&|_| p + 1)?,
        };
        velocity.push(ScalarSplineSpace::new(knots)?);
    }
    Ok(MixedSplineSpace {
        base_degree: p,
        variant,
        velocity,
        pressure,
    })
}

impl MixedSplineSpace {
    pub fn dim(&self) -> usize {
        self.pressure.dim()
    }

    pub fn base_degree(&self) -> usize {
        self.base_degree
    }

    pub fn variant(&self) -> SpaceVariant {
        self.variant
    }

    pub fn velocity(&self, comp: usize) -> &ScalarSplineSpace {
        &self.velocity[comp]
    }

    pub fn velocity_spaces(&self) -> &[ScalarSplineSpace] {
        &self.velocity
    }

    pub fn pressure(&self) -> &ScalarSplineSpace {
        &self.pressure
    }

    /// The multiplier shares the pressure basis.
    pub fn multiplier(&self) -> &ScalarSplineSpace {
        &self.pressure
    }

    pub fn n_elements(&self) -> usize {
        self.pressure.n_elements()
    }

    pub fn n_velocity(&self) -> usize {
        self.velocity.iter().map(|v| v.n_basis()).sum()
    }

    /// Offset of velocity component `comp` within a stacked velocity vector.
    pub fn velocity_offset(&self, comp: usize) -> usize {
        self.velocity[..comp].iter().map(|v| v.n_basis()).sum()
    }

    pub fn dimensions(&self) -> MixedDimensions {
        MixedDimensions {
            velocity: self.velocity.iter().map(|v| v.n_basis()).collect(),
            pressure: self.pressure.n_basis(),
            multiplier: self.pressure.n_basis(),
        }
    }

    /// Pressure-space coefficients of the divergence of a stacked velocity vector.
    ///
    /// Uses `d/dx B^{p+1}_j = (B^p_j - B^p_{j+1}) / h` on uniform knots; only valid
    /// for the divergence-conforming variant.
    pub fn divergence_coefficients(&self, velocity: &[f64]) -> Result<Vec<f64>> {
        if self.variant != SpaceVariant::DivConforming {
            return Err(Error::InvalidInput(
                "divergence lies in the pressure space only for the div-conforming variant".into(),
            ));
        }
        if velocity.len() != self.n_velocity() {
            return Err(Error::InvalidInput(format!(
                "expected {} velocity coefficients, got {}",
                self.n_velocity(),
                velocity.len()
            )));
        }
        let q = &self.pressure;
        let mut div = vec![0.0; q.n_basis()];
        for comp in 0..self.dim() {
            let off = self.velocity_offset(comp);
            let n = q.n_basis_dir(comp);
            let h = q.knots(comp).span_width(0);
            for (j, slot) in div.iter_mut().enumerate() {
                let mut idx = q.multi_index(j);
                let cj = velocity[off + q.flat_index(&idx)];
                idx[comp] = (idx[comp] + n - 1) % n;
                let cjm = velocity[off + q.flat_index(&idx)];
                *slot += (cj - cjm) / h;
            }
        }
        Ok(div)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(n: usize, d: usize) -> BoxDomain {
        BoxDomain::periodic_cube(d, n).unwrap()
    }

    #[test]
    fn quadratic_base_has_cubic_associated_direction() {
        let s = build_mixed_space(&cube(4, 3), 2).unwrap();
        assert_eq!(s.velocity(0).degrees(), vec![3, 2, 2]);
        assert_eq!(s.velocity(1).degrees(), vec![2, 3, 2]);
        assert_eq!(s.velocity(2).degrees(), vec![2, 2, 3]);
        assert_eq!(s.pressure().degrees(), vec![2, 2, 2]);
        let dims = s.dimensions();
        assert_eq!(dims.velocity, vec![64, 64, 64]);
        assert_eq!(dims.pressure, 64);
        assert_eq!(dims.multiplier, 64);
    }

    #[test]
    fn linear_base_has_quadratic_associated_direction() {
        let s = build_mixed_space(&cube(4, 3), 1).unwrap();
        assert_eq!(s.velocity(1).degrees(), vec![1, 2, 1]);
        assert_eq!(s.pressure().degrees(), vec![1, 1, 1]);
    }

    #[test]
    fn zero_degree_rejected() {
        assert!(build_mixed_space(&cube(4, 2), 0).is_err());
    }

    #[test]
    fn too_coarse_grid_rejected() {
        assert!(matches!(
            build_mixed_space(&cube(3, 2), 2),
            Err(Error::InsufficientElements { .. })
        ));
    }

    #[test]
    fn midpoint_tensor_values() {
        let s = build_mixed_space(&cube(5, 3), 2).unwrap();
        let ev = s.pressure().eval_basis(31, &[0.5, 0.5, 0.5]);
        let w = [0.125, 0.75, 0.125];
        for local in 0..27 {
            let e = w[local % 3] * w[(local / 3) % 3] * w[local / 9];
            assert!((ev.values[local] - e).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_of_unity_and_symmetric_hessians() {
        let s = build_mixed_space(&cube(4, 3), 2).unwrap();
        for space in s.velocity_spaces().iter().chain([s.pressure()]) {
            for e in [0, 17, 63] {
                let ev = space.eval_basis(e, &[0.2, 0.7, 0.9]);
                let sum: f64 = ev.values.iter().sum();
                assert!((sum - 1.0).abs() < 1e-13);
                for a in 0..3 {
                    let gs: f64 = ev.gradients.iter().map(|g| g[a]).sum();
                    assert!(gs.abs() < 1e-12);
                    for b in 0..3 {
                        let hs: f64 = ev.hessians.iter().map(|h| h[a][b]).sum();
                        assert!(hs.abs() < 1e-11);
                    }
                }
                for h in &ev.hessians {
                    assert_eq!(h[0][1], h[1][0]);
                }
            }
        }
    }

    #[test]
    fn local_indices_are_distinct_and_wrap() {
        let s = build_mixed_space(&cube(4, 2), 2).unwrap();
        let idx = s.velocity(0).local_indices(0);
        let mut sorted = idx.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), idx.len());
        assert_eq!(idx.len(), 12);
        // first function in x for element 0 wraps to index n - degree
        assert_eq!(s.velocity(0).multi_index(idx[0])[0], 1);
    }

    #[test]
    fn divergence_coefficients_match_pointwise_divergence() {
        let s = build_mixed_space(&cube(4, 2), 2).unwrap();
        let u: Vec<f64> = (0..s.n_velocity()).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let div = s.divergence_coefficients(&u).unwrap();
        for &x in &[[0.3, 1.1, 0.0], [4.0, 5.9, 0.0], [2.2, 0.01, 0.0]] {
            let mut d_point = 0.0;
            for c in 0..2 {
                let ev = s.velocity(c).eval_point(&x);
                let off = s.velocity_offset(c);
                for (k, &g) in ev.indices.iter().enumerate() {
                    d_point += u[off + g] * ev.gradients[k][c];
                }
            }
            let ev = s.pressure().eval_point(&x);
            let q: f64 = ev.indices.iter().zip(&ev.values).map(|(&g, v)| div[g] * v).sum();
            assert!((q - d_point).abs() < 1e-11, "{q} vs {d_point}");
        }
    }
}
