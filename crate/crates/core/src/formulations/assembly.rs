use nalgebra::DMatrix;

use super::kernel::{self, Flux, PointInputs, PointSolution, Slots, MAX_SLOTS};
use super::{Formulation, Physics};
use crate::domain::{element_metric, BoxDomain, ElementMetric, QuadratureRule, Vec3, MAX_DIM};
use crate::linear_solver::{CsrMatrix, NullSpace};
use crate::spline::{MixedBasisCache, MixedSplineSpace};
use crate::stabilization::{tau_c, tau_m, tau_m_static};

/// Global unknown numbering: velocity components, then pressure, then (optionally) multiplier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofLayout {
    pub velocity: Vec<usize>,
    pub velocity_offsets: Vec<usize>,
    pub n_velocity: usize,
    pub n_pressure: usize,
    pub has_multiplier: bool,
}

impl DofLayout {
    pub fn new(space: &MixedSplineSpace, has_multiplier: bool) -> Self {
        let velocity: Vec<usize> = space.velocity_spaces().iter().map(|v| v.n_basis()).collect();
        let velocity_offsets = (0..velocity.len()).map(|c| velocity[..c].iter().sum()).collect();
        Self {
            n_velocity: velocity.iter().sum(),
            velocity,
            velocity_offsets,
            n_pressure: space.pressure().n_basis(),
            has_multiplier,
        }
    }

    pub fn pressure_offset(&self) -> usize {
        self.n_velocity
    }

    pub fn multiplier_offset(&self) -> usize {
        self.n_velocity + self.n_pressure
    }

    pub fn total(&self) -> usize {
        self.n_velocity + self.n_pressure * if self.has_multiplier { 2 } else { 1 }
    }

    /// Zero-mean constraints: pressure, multiplier and, for steady problems, each velocity
    /// component (constant velocities are then in the kernel).
    pub fn null_space(&self, steady: bool) -> NullSpace {
        let mut blocks = Vec::new();
        if steady {
            for (c, &n) in self.velocity.iter().enumerate() {
                blocks.push(self.velocity_offsets[c]..self.velocity_offsets[c] + n);
            }
        }
        blocks.push(self.pressure_offset()..self.pressure_offset() + self.n_pressure);
        if self.has_multiplier {
            blocks.push(self.multiplier_offset()..self.multiplier_offset() + self.n_pressure);
        }
        NullSpace::new(blocks)
    }
}

/// Coefficients and parameters at the intermediate time level.
#[derive(Debug, Clone, Copy)]
pub struct StageInput<'a> {
    pub u: &'a [f64],
    pub u_dot: &'a [f64],
    pub p: &'a [f64],
    pub zeta: &'a [f64],
    /// Sensitivity of the intermediate velocity to the unknown.
    pub beta: f64,
    /// Sensitivity of the intermediate velocity rate to the unknown.
    pub mu: f64,
    pub time: f64,
    pub rate_coefficient: f64,
    /// Per-point offset of the small-scale rate relation (empty means zero).
    pub rate_offset: &'a [Vec3],
    pub tau_m: &'a [f64],
    pub tau_c: &'a [f64],
}

/// Assembled residual, optional Jacobian and the condensed small scales.
#[derive(Debug, Clone)]
pub struct AssemblyOutput {
    pub residual: Vec<f64>,
    pub jacobian: Option<CsrMatrix>,
    pub small: Vec<Vec3>,
    pub small_rate: Vec<Vec3>,
    pub small_pressure: Vec<f64>,
}

/// Shape data of one unknown group on the reference element.
#[derive(Debug, Clone)]
struct Group {
    start: usize,
    len: usize,
    slots: Vec<usize>,
    /// `len x (n_points * slots)`: column `q * slots + s` holds slot `s` shapes at point `q`.
    cols: DMatrix<f64>,
    /// Transpose of `cols`.
    rows: DMatrix<f64>,
}

/// Element-local fields gathered from global coefficients.
struct LocalFields {
    u: Vec<Vec<f64>>,
    u_dot: Vec<Vec<f64>>,
    p: Vec<f64>,
    zeta: Vec<f64>,
}

/// Assembles residuals and Jacobians of one formulation on one mixed space.
#[derive(Debug, Clone)]
pub struct Assembler {
    domain: BoxDomain,
    space: MixedSplineSpace,
    cache: MixedBasisCache,
    form: Formulation,
    physics: Physics,
    layout: DofLayout,
    metric: ElementMetric,
    element_dofs: Vec<Vec<usize>>,
    groups: Vec<Group>,
    pattern: CsrMatrix,
}

impl Assembler {
    pub fn new(
        domain: BoxDomain,
        space: MixedSplineSpace,
        rule: QuadratureRule,
        form: Formulation,
        physics: Physics,
    ) -> Self {
        let cache = MixedBasisCache::new(&space, &domain, rule);
        let layout = DofLayout::new(&space, form.has_multiplier());
        let metric = element_metric(&domain, 0);
        let d = space.dim();
        let n_el = space.n_elements();
        let element_dofs: Vec<Vec<usize>> = (0..n_el)
            .map(|e| {
                let mut dofs = Vec::new();
                for c in 0..d {
                    dofs.extend(cache.velocity_indices[c][e].iter().map(|g| g + layout.velocity_offsets[c]));
                }
                dofs.extend(cache.pressure_indices[e].iter().map(|g| g + layout.pressure_offset()));
                if layout.has_multiplier {
                    dofs.extend(cache.pressure_indices[e].iter().map(|g| g + layout.multiplier_offset()));
                }
                dofs
            })
            .collect();
        let groups = build_groups(&cache, d, form.has_multiplier());
        let pattern = build_pattern(layout.total(), &element_dofs);
        Self {
            domain,
            space,
            cache,
            form,
            physics,
            layout,
            metric,
            element_dofs,
            groups,
            pattern,
        }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn space(&self) -> &MixedSplineSpace {
        &self.space
    }

    pub fn cache(&self) -> &MixedBasisCache {
        &self.cache
    }

    pub fn formulation(&self) -> Formulation {
        self.form
    }

    pub fn physics(&self) -> &Physics {
        &self.physics
    }

    pub fn physics_mut(&mut self) -> &mut Physics {
        &mut self.physics
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn metric(&self) -> &ElementMetric {
        &self.metric
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn n_elements(&self) -> usize {
        self.cache.n_elements()
    }

    pub fn n_points(&self) -> usize {
        self.cache.n_points()
    }

    /// Total number of quadrature points.
    pub fn n_total_points(&self) -> usize {
        self.n_elements() * self.n_points()
    }

    /// Global unknowns supported on an element.
    pub fn element_dofs(&self, element: usize) -> &[usize] {
        &self.element_dofs[element]
    }

    /// Sparsity pattern of the system matrix (all values zero).
    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    fn gather(&self, e: usize, u: &[f64], u_dot: &[f64], p: &[f64], zeta: &[f64]) -> LocalFields {
        let d = self.dim();
        let c = &self.cache;
        let pick = |coeffs: &[f64], idx: &[usize], off: usize| -> Vec<f64> {
            if coeffs.is_empty() {
                vec![0.0; idx.len()]
            } else {
                idx.iter().map(|&g| coeffs[off + g]).collect()
            }
        };
        LocalFields {
            u: (0..d)
                .map(|k| pick(u, &c.velocity_indices[k][e], self.layout.velocity_offsets[k]))
                .collect(),
            u_dot: (0..d)
                .map(|k| pick(u_dot, &c.velocity_indices[k][e], self.layout.velocity_offsets[k]))
                .collect(),
            p: pick(p, &c.pressure_indices[e], 0),
            zeta: pick(zeta, &c.pressure_indices[e], 0),
        }
    }

    fn eval_local(&self, lf: &LocalFields, q: usize) -> PointInputs {
        let d = self.dim();
        let c = &self.cache;
        let mut inp = PointInputs::default();
        for k in 0..d {
            let b = &c.velocity[k];
            let n = b.n_local;
            let vals = &b.values[q * n..(q + 1) * n];
            let laps = &b.laplacians[q * n..(q + 1) * n];
            let grads = &b.gradients[q * n * d..(q + 1) * n * d];
            let (mut v, mut vd, mut l) = (0.0, 0.0, 0.0);
            let mut g = [0.0; MAX_DIM];
            for a in 0..n {
                let ca = lf.u[k][a];
                v += vals[a] * ca;
                vd += vals[a] * lf.u_dot[k][a];
                l += laps[a] * ca;
                for j in 0..d {
                    g[j] += grads[a * d + j] * ca;
                }
            }
            inp.u[k] = v;
            inp.u_dot[k] = vd;
            inp.lap[k] = l;
            inp.grad[k] = g;
        }
        let b = &c.pressure;
        let n = b.n_local;
        for a in 0..n {
            let psi = b.values[q * n + a];
            inp.p += psi * lf.p[a];
            for j in 0..d {
                let gj = b.gradients[(q * n + a) * d + j];
                inp.grad_p[j] += gj * lf.p[a];
                inp.grad_zeta[j] += gj * lf.zeta[a];
            }
        }
        inp
    }

    /// Large-scale point data of one element (time scales, forcing and rate data unset).
    pub fn point_fields(&self, element: usize, u: &[f64], u_dot: &[f64], p: &[f64], zeta: &[f64]) -> Vec<PointInputs> {
        let lf = self.gather(element, u, u_dot, p, zeta);
        (0..self.n_points()).map(|q| self.eval_local(&lf, q)).collect()
    }

    /// Physical coordinates of a quadrature point.
    pub fn point(&self, element: usize, q: usize) -> Vec3 {
        self.cache.point(&self.domain, element, q)
    }

    /// Quadrature weight (including the Jacobian determinant) of point `q`.
    pub fn weight(&self, q: usize) -> f64 {
        self.cache.weights[q]
    }

    /// Stabilization time scales at every point from the advective velocity
    /// `u + small` (zero when convection is off). `static_dt` selects the
    /// static definition with its transient term.
    pub fn compute_tau(&self, u: &[f64], small: &[Vec3], static_dt: Option<f64>) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_total_points();
        let mut tm = Vec::with_capacity(n);
        let mut tc = Vec::with_capacity(n);
        let ph = &self.physics;
        for e in 0..self.n_elements() {
            let pts = self.point_fields(e, u, &[], &[], &[]);
            for (q, inp) in pts.iter().enumerate() {
                let mut a = [0.0; MAX_DIM];
                if ph.convection {
                    let s = small.get(e * self.n_points() + q).copied().unwrap_or([0.0; MAX_DIM]);
                    for i in 0..MAX_DIM {
                        a[i] = inp.u[i] + s[i];
                    }
                }
                let t = match static_dt {
                    Some(dt) => tau_m_static(&a, &self.metric, ph.nu, ph.c_i, dt),
                    None => tau_m(&a, &self.metric, ph.nu, ph.c_i, ph.tau_max),
                };
                tm.push(t);
                tc.push(tau_c(t, &self.metric));
            }
        }
        (tm, tc)
    }

    fn complete_inputs(&self, inp: &mut PointInputs, e: usize, q: usize, stage: &StageInput) {
        let idx = e * self.n_points() + q;
        inp.tau_m = stage.tau_m.get(idx).copied().unwrap_or(1.0);
        inp.tau_c = stage.tau_c.get(idx).copied().unwrap_or(1.0);
        inp.rate_coefficient = stage.rate_coefficient;
        inp.rate_offset = stage.rate_offset.get(idx).copied().unwrap_or([0.0; MAX_DIM]);
        if self.physics.forcing.is_some() {
            inp.f = self.physics.force(&self.point(e, q), stage.time);
        }
    }

    /// Residual (and optionally Jacobian) of the formulation at the given stage.
    pub fn assemble(&self, stage: &StageInput, want_jacobian: bool) -> AssemblyOutput {
        let d = self.dim();
        let nq = self.n_points();
        let ntot = self.n_total_points();
        let sl = Slots { d };
        let mut residual = vec![0.0; self.layout.total()];
        let mut jacobian = if want_jacobian { Some(self.pattern.clone()) } else { None };
        let mut small = vec![[0.0; MAX_DIM]; ntot];
        let mut small_rate = vec![[0.0; MAX_DIM]; ntot];
        let mut small_pressure = vec![0.0; if self.form == Formulation::Vmss { ntot } else { 0 }];
        let n_loc: usize = self.groups.iter().map(|g| g.len).sum();
        let mut r_loc = vec![0.0; n_loc];
        let mut wjac: Vec<[[f64; MAX_SLOTS]; MAX_SLOTS]> = if want_jacobian { vec![[[0.0; MAX_SLOTS]; MAX_SLOTS]; nq] } else { Vec::new() };
        let mut k_loc = DMatrix::<f64>::zeros(n_loc, n_loc);
        for e in 0..self.n_elements() {
            let lf = self.gather(e, stage.u, stage.u_dot, stage.p, stage.zeta);
            r_loc.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..nq {
                let mut inp = self.eval_local(&lf, q);
                self.complete_inputs(&mut inp, e, q, stage);
                let sol = kernel::solve_small_scales(self.form, d, &self.physics, &inp);
                let idx = e * nq + q;
                small[idx] = sol.small;
                small_rate[idx] = sol.small_rate;
                if !small_pressure.is_empty() {
                    small_pressure[idx] = sol.small_pressure;
                }
                let w = self.cache.weights[q];
                let fl = kernel::flux(self.form, d, &self.physics, &inp, &sol);
                self.accumulate_residual(&mut r_loc, q, w, &fl);
                if want_jacobian {
                    let jac = kernel::flux_jacobian(self.form, d, &self.physics, &inp, &sol, stage.beta, stage.mu);
                    let wj = &mut wjac[q];
                    for t in 0..sl.count() {
                        for m in 0..sl.count() {
                            wj[t][m] = w * jac[t][m];
                        }
                    }
                }
            }
            let dofs = &self.element_dofs[e];
            for (a, &g) in dofs.iter().enumerate() {
                residual[g] += r_loc[a];
            }
            if let Some(jm) = jacobian.as_mut() {
                self.element_matrix(&wjac, &mut k_loc);
                scatter(jm, dofs, &k_loc);
            }
        }
        AssemblyOutput {
            residual,
            jacobian,
            small,
            small_rate,
            small_pressure,
        }
    }

    fn accumulate_residual(&self, r_loc: &mut [f64], q: usize, w: f64, fl: &Flux) {
        for g in &self.groups {
            let s_n = g.slots.len();
            for (s, &slot) in g.slots.iter().enumerate() {
                let f = w * fl[slot];
                if f == 0.0 {
                    continue;
                }
                let col = g.cols.column(q * s_n + s);
                for a in 0..g.len {
                    r_loc[g.start + a] += col[a] * f;
                }
            }
        }
    }

    fn element_matrix(&self, wjac: &[[[f64; MAX_SLOTS]; MAX_SLOTS]], k_loc: &mut DMatrix<f64>) {
        let nq = self.n_points();
        for gt in &self.groups {
            for gm in &self.groups {
                let st = gt.slots.len();
                let sm = gm.slots.len();
                let mut left = DMatrix::<f64>::zeros(gt.len, nq * sm);
                let mut nonzero = false;
                for (q, wj) in wjac.iter().enumerate().take(nq) {
                    for (r, &mslot) in gm.slots.iter().enumerate() {
                        let mut out = left.column_mut(q * sm + r);
                        for (s, &tslot) in gt.slots.iter().enumerate() {
                            let c = wj[tslot][mslot];
                            if c == 0.0 {
                                continue;
                            }
                            nonzero = true;
                            let col = gt.cols.column(q * st + s);
                            out.axpy(c, &col, 1.0);
                        }
                    }
                }
                let mut block = k_loc.view_mut((gt.start, gm.start), (gt.len, gm.len));
                if nonzero {
                    block.gemm(1.0, &left, &gm.rows, 0.0);
                } else {
                    block.fill(0.0);
                }
            }
        }
    }

    /// Residual of the convective terms alone for prescribed velocity coefficients and
    /// small scales.
    pub fn assemble_convective(&self, u: &[f64], small: &[Vec3]) -> Vec<f64> {
        let d = self.dim();
        let nq = self.n_points();
        let mut residual = vec![0.0; self.layout.total()];
        let n_loc: usize = self.groups.iter().map(|g| g.len).sum();
        let mut r_loc = vec![0.0; n_loc];
        for e in 0..self.n_elements() {
            let lf = self.gather(e, u, &[], &[], &[]);
            r_loc.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..nq {
                let inp = self.eval_local(&lf, q);
                let s = small.get(e * nq + q).copied().unwrap_or([0.0; MAX_DIM]);
                let sol = PointSolution::with_small(&inp.u, &s, true);
                let fl = kernel::convective_flux(self.form, d, &inp, &sol);
                self.accumulate_residual(&mut r_loc, q, self.cache.weights[q], &fl);
            }
            for (a, &g) in self.element_dofs[e].iter().enumerate() {
                residual[g] += r_loc[a];
            }
        }
        residual
    }

    /// Overlapping subdomains for the additive Schwarz preconditioner: the unknowns
    /// supported on each block of `per_dir` elements per direction.
    pub fn schwarz_subdomains(&self, per_dir: usize) -> Vec<Vec<usize>> {
        let d = self.dim();
        let per_dir = per_dir.max(1);
        let counts: Vec<usize> = (0..d).map(|k| self.domain.elements()[k].div_ceil(per_dir)).collect();
        let n_blocks: usize = counts.iter().product();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_blocks];
        for e in 0..self.n_elements() {
            let idx = self.domain.element_index(e);
            let mut b = 0;
            for k in (0..d).rev() {
                b = b * counts[k] + idx[k] / per_dir;
            }
            members[b].extend_from_slice(&self.element_dofs[e]);
        }
        members
            .into_iter()
            .map(|mut m| {
                m.sort_unstable();
                m.dedup();
                m
            })
            .filter(|m| !m.is_empty())
            .collect()
    }
}

fn build_groups(cache: &MixedBasisCache, d: usize, multiplier: bool) -> Vec<Group> {
    let sl = Slots { d };
    let nq = cache.n_points();
    let mut groups = Vec::new();
    let mut start = 0;
    let mut push = |len: usize, slots: Vec<usize>, shape: &dyn Fn(usize, usize, usize) -> f64| {
        let s_n = slots.len();
        let mut cols = DMatrix::<f64>::zeros(len, nq * s_n);
        for q in 0..nq {
            for s in 0..s_n {
                for a in 0..len {
                    cols[(a, q * s_n + s)] = shape(q, a, s);
                }
            }
        }
        let rows = cols.transpose();
        groups.push(Group {
            start,
            len,
            slots,
            cols,
            rows,
        });
        start += len;
    };
    for k in 0..d {
        let b = &cache.velocity[k];
        let mut slots = vec![sl.value(k)];
        slots.extend((0..d).map(|j| sl.grad(k, j)));
        slots.push(sl.lap(k));
        push(b.n_local, slots, &|q, a, s| {
            if s == 0 {
                b.value(q, a)
            } else if s <= d {
                b.gradient(q, a)[s - 1]
            } else {
                b.laplacian(q, a)
            }
        });
    }
    let b = &cache.pressure;
    let mut slots = vec![sl.pressure()];
    slots.extend((0..d).map(|j| sl.pressure_grad(j)));
    push(b.n_local, slots, &|q, a, s| if s == 0 { b.value(q, a) } else { b.gradient(q, a)[s - 1] });
    if multiplier {
        let slots = (0..d).map(|j| sl.multiplier_grad(j)).collect();
        push(b.n_local, slots, &|q, a, s| b.gradient(q, a)[s]);
    }
    groups
}

fn build_pattern(n: usize, element_dofs: &[Vec<usize>]) -> CsrMatrix {
    let mut dof_elements = vec![Vec::new(); n];
    for (e, dofs) in element_dofs.iter().enumerate() {
        for &g in dofs {
            dof_elements[g].push(e);
        }
    }
    let mut mark = vec![usize::MAX; n];
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut cols = Vec::new();
            for &e in &dof_elements[i] {
                for &g in &element_dofs[e] {
                    if mark[g] != i {
                        mark[g] = i;
                        cols.push(g);
                    }
                }
            }
            cols
        })
        .collect();
    CsrMatrix::from_pattern(n, &rows)
}

fn scatter(m: &mut CsrMatrix, dofs: &[usize], k_loc: &DMatrix<f64>) {
    let mut order: Vec<usize> = (0..dofs.len()).collect();
    order.sort_unstable_by_key(|&b| dofs[b]);
    for (a, &ga) in dofs.iter().enumerate() {
        let start = m.row_ptr()[ga];
        let end = m.row_ptr()[ga + 1];
        // merge the sorted local columns with the sorted row
        let mut k = start;
        let cols = m.col_indices()[start..end].to_vec();
        let vals = m.values_mut();
        for &b in &order {
            let gb = dofs[b];
            while cols[k - start] < gb {
                k += 1;
            }
            vals[k] += k_loc[(a, b)];
        }
    }
}
