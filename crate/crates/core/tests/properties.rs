use proptest::prelude::*;

use vmsflow::domain::{element_metric, BoxDomain};
use vmsflow::formulations::Formulation;
use vmsflow::linear_solver::{AdditiveSchwarz, CsrMatrix, Preconditioner};
use vmsflow::spline::{build_mixed_space, ScalarSplineSpace};
use vmsflow::stabilization::{tau_c, tau_m, tau_m_static};
use vmsflow::time_integrator::{scalar_step, AlphaParams};
use vmsflow::verification::{jacobian_fd_error, skew_contraction, test_assembler};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn space(dim: usize, n: usize, p: usize) -> ScalarSplineSpace {
    let domain = BoxDomain::periodic_cube(dim, n).unwrap();
    build_mixed_space(&domain, p).unwrap().pressure().clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_is_a_partition_of_unity(x in 0.0..TWO_PI, y in 0.0..TWO_PI, p in 1usize..4, n in 5usize..9) {
        let s = space(2, n, p);
        let ev = s.eval_point(&[x, y, 0.0]);
        let sum: f64 = ev.values.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-13);
        let gsum: f64 = ev.gradients.iter().map(|g| g[0] + g[1]).sum();
        prop_assert!(gsum.abs() < 1e-10);
        prop_assert!(ev.values.iter().all(|&v| v >= -1e-15));
    }

    #[test]
    fn fields_are_periodic(x in 0.0..TWO_PI, y in 0.0..TWO_PI, seed in 0u64..1000) {
        let s = space(2, 6, 2);
        let coeffs: Vec<f64> = (0..s.n_basis()).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0).collect();
        let eval = |x: f64, y: f64| {
            let ev = s.eval_point(&[x, y, 0.0]);
            ev.indices.iter().zip(&ev.values).map(|(&g, &v)| coeffs[g] * v).sum::<f64>()
        };
        let base = eval(x, y);
        prop_assert!((base - eval(x + TWO_PI, y)).abs() < 1e-12);
        prop_assert!((base - eval(x, y - TWO_PI)).abs() < 1e-12);
    }

    #[test]
    fn tau_decreases_with_speed_and_scales_with_mesh(
        ux in -5.0..5.0f64, uy in -5.0..5.0f64, uz in -5.0..5.0f64, factor in 1.01..4.0f64, nu in 1e-4..1e-1f64
    ) {
        let d = BoxDomain::periodic_cube(3, 8).unwrap();
        let m = element_metric(&d, 0);
        let u = [ux, uy, uz];
        let faster = [ux * factor, uy * factor, uz * factor];
        let t0 = tau_m(&u, &m, nu, 36.0, 1e6);
        let t1 = tau_m(&faster, &m, nu, 36.0, 1e6);
        prop_assert!(t1 <= t0);
        prop_assert!(t0 > 0.0 && t0.is_finite());
        prop_assert!(tau_m_static(&u, &m, nu, 36.0, 0.1) < t0);
        // Halving h with the velocity fixed and no viscosity halves tau.
        let fine = element_metric(&BoxDomain::periodic_cube(3, 16).unwrap(), 0);
        if ux.abs() + uy.abs() + uz.abs() > 1e-3 {
            let r = tau_m(&u, &fine, 0.0, 36.0, 1e6) / tau_m(&u, &m, 0.0, 36.0, 1e6);
            prop_assert!((r - 0.5).abs() < 1e-12);
        }
        prop_assert!(tau_c(t0, &m) > 0.0);
    }

    #[test]
    fn schwarz_preconditioner_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, seed in 0u64..500) {
        let n = 12;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0 + (i as f64) * 0.1));
            trip.push((i, (i + 1) % n, -1.0));
            trip.push(((i + 1) % n, i, -1.0 - 0.01 * seed as f64 / 500.0));
        }
        let m = CsrMatrix::from_triplets(n, n, &trip).unwrap();
        let subs = vec![(0..5).collect(), (4..9).collect(), (8..12).chain(0..1).collect()];
        let pc = AdditiveSchwarz::new(&m, subs).unwrap();
        let x: Vec<f64> = (0..n).map(|i| ((i as u64 * 31 + seed) % 17) as f64 - 8.0).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i as u64 * 7 + seed * 3) % 13) as f64 - 6.0).collect();
        let comb: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (mut zx, mut zy, mut zc) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        pc.apply(&x, &mut zx);
        pc.apply(&y, &mut zy);
        pc.apply(&comb, &mut zc);
        for i in 0..n {
            prop_assert!((zc[i] - (a * zx[i] + b * zy[i])).abs() < 1e-11);
        }
    }

    #[test]
    fn scalar_scheme_never_amplifies_decay(lambda in -50.0..-0.01f64, dt in 0.001..2.0f64, af in 0.5..1.0f64) {
        let a = AlphaParams::new(0.5, af, 0.5, dt).unwrap();
        let (y, _) = scalar_step(lambda, 1.0, lambda, &a);
        prop_assert!(y.abs() <= 1.0 + 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn convection_is_skew_symmetric(seed in 0u64..10_000, glsdd in any::<bool>()) {
        let form = if glsdd { Formulation::Glsdd } else { Formulation::Galerkin };
        let asm = test_assembler(form, 2, 4, true).unwrap();
        prop_assert!(skew_contraction(&asm, seed).abs() < 1e-12);
    }

    #[test]
    fn assembled_jacobian_matches_finite_differences(seed in 0u64..10_000, which in 0usize..3) {
        let form = [Formulation::Galerkin, Formulation::Vmss, Formulation::Glsdd][which];
        let asm = test_assembler(form, 2, 4, true).unwrap();
        prop_assert!(jacobian_fd_error(&asm, seed) < 1e-5);
    }
}
