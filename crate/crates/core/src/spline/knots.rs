use crate::error::{Error, Result};

/// Periodic knot vector: `n` spans over one period `[0, L)`, degree `p`, maximal smoothness.
///
/// Basis function `j` is supported on knot spans `j, j+1, ..., j+p` (indices taken modulo `n`).
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    breakpoints: Vec<f64>,
    periodic: bool,
}

/// Uniform periodic knot vector with `n_elements` spans of width `length / n_elements`.
pub fn build_periodic_knots(n_elements: usize, degree: usize, length: f64) -> Result<KnotVector> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidInput(format!("period length must be positive, got {length}")));
    }
    let required = degree + 1;
    if n_elements < required {
        return Err(Error::InsufficientElements {
            n_elements,
            degree,
            required,
        });
    }
    let h = length / n_elements as f64;
    let mut breakpoints: Vec<f64> = (0..=n_elements).map(|i| i as f64 * h).collect();
    breakpoints[n_elements] = length;
    Ok(KnotVector {
        degree,
        breakpoints,
        periodic: true,
    })
}

impl KnotVector {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn n_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Number of basis functions over one period.
    pub fn n_basis(&self) -> usize {
        self.n_elements()
    }

    pub fn length(&self) -> f64 {
        self.breakpoints[self.n_elements()] - self.breakpoints[0]
    }

    pub fn span_width(&self, element: usize) -> f64 {
        self.breakpoints[element + 1] - self.breakpoints[element]
    }

    /// Knot `j` of the periodically extended sequence (`j` may be negative or exceed `n`).
    pub fn knot(&self, j: isize) -> f64 {
        let n = self.n_elements() as isize;
        let wraps = j.div_euclid(n);
        let r = j.rem_euclid(n) as usize;
        self.breakpoints[r] + wraps as f64 * self.length()
    }

    /// Global index of the first basis function that is nonzero on `element`.
    pub fn first_basis(&self, element: usize) -> usize {
        let n = self.n_elements();
        (element + n * (self.degree + 1) - self.degree) % n
    }

    /// Element containing the (periodically wrapped) coordinate and the local coordinate in `[0,1)`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let l = self.length();
        let x0 = self.breakpoints[0];
        let mut y = (x - x0).rem_euclid(l) + x0;
        if y >= self.breakpoints[self.n_elements()] {
            y = x0;
        }
        let e = match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&y).expect("finite knots"))
        {
            Ok(i) => i.min(self.n_elements() - 1),
            Err(i) => i - 1,
        };
        let xi = (y - self.breakpoints[e]) / self.span_width(e);
        (e, xi.clamp(0.0, 1.0))
    }

    /// Values and physical derivatives (orders `0..=n_deriv`) of the `degree+1` functions
    /// that are nonzero on `element`, at local coordinate `xi` in `[0,1]`.
    ///
    /// `out[k][r]` is the `k`-th derivative of local function `r`, whose global index is
    /// `(first_basis(element) + r) mod n`.
    pub fn local_derivatives(&self, element: usize, xi: f64, n_deriv: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let e = element as isize;
        let kn: Vec<f64> = (0..2 * p + 2).map(|m| self.knot(e - p as isize + m as isize)).collect();
        let u = kn[p] + xi * (kn[p + 1] - kn[p]);
        ders_basis_funs(p, u, &kn, n_deriv)
    }
}

/// Cox–de Boor evaluation of the nonzero functions and their derivatives on the span
/// `[kn[p], kn[p+1])` of the local knot array `kn` (length `2p+2`).
fn ders_basis_funs(p: usize, u: f64, kn: &[f64], n: usize) -> Vec<Vec<f64>> {
    let i = p;
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - kn[i + 1 - j];
        right[j] = kn[i + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; n + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let nmax = n.min(p);
    let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nmax {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1: usize = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2: usize = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for (k, row) in ders.iter_mut().enumerate().take(nmax + 1).skip(1) {
        for v in row.iter_mut() {
            *v *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eight_quadratic_spans_over_two_pi() {
        let kv = build_periodic_knots(8, 2, 2.0 * PI).unwrap();
        assert_eq!(kv.n_elements(), 8);
        assert_eq!(kv.n_basis(), 8);
        for e in 0..8 {
            assert!((kv.span_width(e) - PI / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn too_few_elements_rejected() {
        match build_periodic_knots(2, 2, 1.0) {
            Err(Error::InsufficientElements { required, .. }) => assert_eq!(required, 3),
            other => panic!("expected error, got {other:?}"),
        }
    }

    #[test]
    fn thirty_two_spans_have_width_pi_over_sixteen() {
        let kv = build_periodic_knots(32, 2, 2.0 * PI).unwrap();
        assert!((kv.span_width(5) - PI / 16.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_midpoint_values() {
        let kv = build_periodic_knots(5, 2, 5.0).unwrap();
        let d = kv.local_derivatives(2, 0.5, 2);
        let expect = [0.125, 0.75, 0.125];
        for r in 0..3 {
            assert!((d[0][r] - expect[r]).abs() < 1e-15);
        }
        // derivatives of the cardinal quadratic at the midpoint: -1/2, 0, 1/2
        let dexp = [-0.5, 0.0, 0.5];
        for r in 0..3 {
            assert!((d[1][r] - dexp[r]).abs() < 1e-14);
        }
        // second derivatives 1, -2, 1
        let d2 = [1.0, -2.0, 1.0];
        for r in 0..3 {
            assert!((d[2][r] - d2[r]).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_second_derivative_is_zero() {
        let kv = build_periodic_knots(4, 1, 1.0).unwrap();
        let d = kv.local_derivatives(0, 0.3, 2);
        assert_eq!(d[2], vec![0.0, 0.0]);
        assert!((d[0][0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_and_seam_continuity() {
        for p in 0..5 {
            let n = p + 2;
            let kv = build_periodic_knots(n, p, 3.0).unwrap();
            for e in 0..n {
                for &xi in &[0.0, 0.13, 0.5, 0.99] {
                    let d = kv.local_derivatives(e, xi, 1);
                    let s: f64 = d[0].iter().sum();
                    let g: f64 = d[1].iter().sum();
                    assert!((s - 1.0).abs() < 1e-14);
                    assert!(g.abs() < 1e-12);
                }
            }
            // value of each global function just left and right of the seam
            if p >= 1 {
                let left = kv.local_derivatives(n - 1, 1.0, 0);
                let right = kv.local_derivatives(0, 0.0, 0);
                let mut lv = vec![0.0; n];
                let mut rv = vec![0.0; n];
                for r in 0..=p {
                    lv[(kv.first_basis(n - 1) + r) % n] += left[0][r];
                    rv[(kv.first_basis(0) + r) % n] += right[0][r];
                }
                for j in 0..n {
                    assert!((lv[j] - rv[j]).abs() < 1e-14, "p={p} j={j}");
                }
            }
        }
    }

    #[test]
    fn locate_wraps() {
        let kv = build_periodic_knots(4, 2, 2.0).unwrap();
        let (e, xi) = kv.locate(2.25);
        assert_eq!(e, 0);
        assert!((xi - 0.5).abs() < 1e-14);
        let (e, xi) = kv.locate(-0.25);
        assert_eq!(e, 3);
        assert!((xi - 0.5).abs() < 1e-14);
    }
}
