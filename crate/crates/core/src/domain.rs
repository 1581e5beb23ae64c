//! Periodic box geometry, element affine maps and tensor-product Gauss rules.
//!
//! Elements are axis-aligned boxes mapped affinely from the reference cell
//! `[0,1]^d`. Up to three spatial directions are supported; arrays are sized
//! for three and the trailing entries are unused in 2D.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

pub type Vec3 = [f64; MAX_DIM];
pub type Mat3 = [[f64; MAX_DIM]; MAX_DIM];

/// Periodic box `[0, L_1) x ... x [0, L_d)` split into a uniform grid of elements.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lengths: Vec<f64>,
    elements: Vec<usize>,
}

impl BoxDomain {
    pub fn new(lengths: &[f64], elements: &[usize]) -> Result<Self> {
        if lengths.len() != elements.len() || !(1..=MAX_DIM).contains(&lengths.len()) {
            return Err(Error::InvalidInput(format!(
                "box needs 1..={MAX_DIM} directions with matching lengths/element counts, got {} and {}",
                lengths.len(),
                elements.len()
            )));
        }
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput("box lengths must be positive".into()));
        }
        if elements.contains(&0) {
            return Err(Error::InvalidInput("element counts must be positive".into()));
        }
        Ok(Self {
            lengths: lengths.to_vec(),
            elements: elements.to_vec(),
        })
    }

    /// The `[0, 2pi]^d` cube with `n` elements per direction.
    pub fn periodic_cube(dim: usize, n: usize) -> Result<Self> {
        Self::new(
            &vec![2.0 * std::f64::consts::PI; dim],
            &vec![n; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    /// Element width in direction `dir`.
    pub fn h(&self, dir: usize) -> f64 {
        self.lengths[dir] / self.elements[dir] as f64
    }

    pub fn n_elements(&self) -> usize {
        self.elements.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Multi-index of a flat element number (x fastest).
    pub fn element_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rest = flat;
        for (dir, &n) in self.elements.iter().enumerate() {
            idx[dir] = rest % n;
            rest /= n;
        }
        idx
    }

    pub fn flat_element(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for dir in (0..self.dim()).rev() {
            flat = flat * self.elements[dir] + idx[dir];
        }
        flat
    }

    /// Physical coordinates of the lower corner of an element.
    pub fn element_origin(&self, flat: usize) -> Vec3 {
        let idx = self.element_index(flat);
        let mut x = [0.0; MAX_DIM];
        for dir in 0..self.dim() {
            x[dir] = idx[dir] as f64 * self.h(dir);
        }
        x
    }

    /// Maps reference coordinates of an element to physical coordinates.
    pub fn map_point(&self, flat: usize, xi: &Vec3) -> Vec3 {
        let mut x = self.element_origin(flat);
        for dir in 0..self.dim() {
            x[dir] += xi[dir] * self.h(dir);
        }
        x
    }

    /// Jacobian determinant of the (affine, diagonal) element map.
    pub fn jacobian_det(&self) -> f64 {
        (0..self.dim()).map(|d| self.h(d)).product()
    }
}

/// Metric data of the element map used by the stabilization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMetric {
    pub dim: usize,
    /// Inverse Jacobian `d xi / d x`.
    pub inv_jacobian: Mat3,
    /// `G = (d xi/d x)^T (d xi/d x)`.
    pub g: Mat3,
    /// Frobenius contraction `G : G`.
    pub g_contract: f64,
}

impl ElementMetric {
    pub fn from_inverse_jacobian(dim: usize, inv_jacobian: Mat3) -> Self {
        let mut g = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..dim {
            for j in 0..dim {
                g[i][j] = (0..dim).map(|k| inv_jacobian[k][i] * inv_jacobian[k][j]).sum();
            }
        }
        let g_contract = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| g[i][j] * g[i][j])
            .sum();
        Self {
            dim,
            inv_jacobian,
            g,
            g_contract,
        }
    }

    /// `u . G u`
    pub fn quad_form(&self, u: &Vec3) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += u[i] * self.g[i][j] * u[j];
            }
        }
        acc
    }
}

/// Metric of one element. All elements of a uniform box share the same metric,
/// but the element index is kept in the signature so that callers do not rely on it.
pub fn element_metric(domain: &BoxDomain, element: usize) -> ElementMetric {
    debug_assert!(element < domain.n_elements());
    let d = domain.dim();
    let mut inv = [[0.0; MAX_DIM]; MAX_DIM];
    for (dir, row) in inv.iter_mut().enumerate().take(d) {
        row[dir] = 1.0 / domain.h(dir);
    }
    ElementMetric::from_inverse_jacobian(d, inv)
}

/// Tensor-product quadrature on the reference cell `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points_per_direction: usize,
    /// One-dimensional nodes on `[0,1]`.
    pub nodes_1d: Vec<f64>,
    pub weights_1d: Vec<f64>,
    /// Tensor points (x fastest).
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Multi-index of a flat point number.
    pub fn point_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let q = self.points_per_direction;
        let mut idx = [0; MAX_DIM];
        let mut rest = flat;
        for slot in idx.iter_mut().take(self.dim) {
            *slot = rest % q;
            rest /= q;
        }
        idx
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_q.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor-product Gauss rule with `q` points per direction on `[0,1]^d`.
/// Weights sum to one; the rule is exact for polynomials of degree `2q-1` per direction.
pub fn gauss_rule(q: usize, d: usize) -> Result<QuadratureRule> {
    if q == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one point".into()));
    }
    if !(1..=MAX_DIM).contains(&d) {
        return Err(Error::InvalidInput(format!("unsupported dimension {d}")));
    }
    let (x, w) = gauss_legendre(q);
    let nodes_1d: Vec<f64> = x.iter().map(|&t| 0.5 * (t + 1.0)).collect();
    let weights_1d: Vec<f64> = w.iter().map(|&t| 0.5 * t).collect();
    let total = q.pow(d as u32);
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let mut pt = [0.0; MAX_DIM];
        let mut wt = 1.0;
        for slot in pt.iter_mut().take(d) {
            let i = rest % q;
            rest /= q;
            *slot = nodes_1d[i];
            wt *= weights_1d[i];
        }
        points.push(pt);
        weights.push(wt);
    }
    Ok(QuadratureRule {
        dim: d,
        points_per_direction: q,
        nodes_1d,
        weights_1d,
        points,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn midpoint_rule() {
        let r = gauss_rule(1, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.points[0][0] - 0.5).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_point_rule_integrates_quintic() {
        let r = gauss_rule(3, 1).unwrap();
        let s: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(x, w)| w * x[0].powi(5))
            .sum();
        assert!((s - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exactness_up_to_2q_minus_1() {
        for q in 1..=8 {
            let r = gauss_rule(q, 1).unwrap();
            for deg in 0..2 * q {
                let s: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x[0].powi(deg as i32))
                    .sum();
                assert!((s - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "q={q} deg={deg}");
            }
        }
    }

    #[test]
    fn cube_rule_has_64_points() {
        let r = gauss_rule(4, 3).unwrap();
        assert_eq!(r.len(), 64);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_points_rejected() {
        assert!(gauss_rule(0, 2).is_err());
    }

    #[test]
    fn domain_volume_by_quadrature() {
        let dom = BoxDomain::new(&[1.5, 2.0 * PI, 0.7], &[3, 5, 2]).unwrap();
        let r = gauss_rule(2, 3).unwrap();
        let det = dom.jacobian_det();
        let vol: f64 = (0..dom.n_elements())
            .map(|_| r.weights.iter().map(|w| w * det).sum::<f64>())
            .sum();
        assert!((vol - 1.5 * 2.0 * PI * 0.7).abs() < 1e-12);
    }

    #[test]
    fn metric_of_pi_over_32_cube() {
        let dom = BoxDomain::new(&[PI; 3], &[32; 3]).unwrap();
        let m = element_metric(&dom, 0);
        let g = 1024.0 / (PI * PI);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { g } else { 0.0 };
                assert!((m.g[i][j] - expect).abs() < 1e-10 * g);
            }
        }
        assert!((m.g_contract - 3.0 * g * g).abs() < 1e-9 * g * g);
    }

    #[test]
    fn unit_element_metric_is_identity() {
        let dom = BoxDomain::new(&[4.0; 3], &[4; 3]).unwrap();
        let m = element_metric(&dom, 7);
        assert_eq!(m.g[0][0], 1.0);
        assert_eq!(m.g[1][2], 0.0);
        assert!((m.g_contract - 3.0).abs() < 1e-15);
    }

    #[test]
    fn anisotropic_2d_metric() {
        let dom = BoxDomain::new(&[1.0, 2.0], &[1, 1]).unwrap();
        let m = element_metric(&dom, 0);
        assert!((m.g[0][0] - 1.0).abs() < 1e-15);
        assert!((m.g[1][1] - 0.25).abs() < 1e-15);
        assert!((m.g_contract - (1.0 + 1.0 / 16.0)).abs() < 1e-15);
    }

    #[test]
    fn metric_contraction_scales_as_h_to_minus_four() {
        let coarse = element_metric(&BoxDomain::periodic_cube(3, 4).unwrap(), 0);
        let fine = element_metric(&BoxDomain::periodic_cube(3, 8).unwrap(), 0);
        assert!((fine.g_contract / coarse.g_contract - 16.0).abs() < 1e-12);
    }

    #[test]
    fn element_indexing_round_trips() {
        let dom = BoxDomain::new(&[1.0, 1.0, 1.0], &[3, 4, 5]).unwrap();
        for e in 0..dom.n_elements() {
            assert_eq!(dom.flat_element(&dom.element_index(e)), e);
        }
    }
}
