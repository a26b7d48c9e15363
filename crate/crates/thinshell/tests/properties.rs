use std::sync::Arc;

use proptest::prelude::*;
use thinshell::harness::fit_rate;
use thinshell::noise::{sample_path, standard_normal};
use thinshell::shell::{m_scalar, r_scalar, ShellGeometry};
use thinshell::shell_solver::ShellBasis;
use thinshell::sphere::{coeff_len, velocity, DivFreeSpectral, NormKind, SpectralScalar, SphereGrid};
use thinshell::sphere_solver::{nonlinear_term, SphereSolver, SphereSolverConfig};

fn spectral(lmax: usize) -> impl Strategy<Value = SpectralScalar> {
    prop::collection::vec(-1.0f64..1.0, coeff_len(lmax)).prop_map(move |c| SpectralScalar::from_coeffs(lmax, c).unwrap())
}

fn divfree(lmax: usize) -> impl Strategy<Value = DivFreeSpectral> {
    spectral(lmax).prop_map(DivFreeSpectral::from_stream)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transform_round_trip(a in (1usize..9).prop_flat_map(spectral)) {
        let grid = SphereGrid::new(a.lmax());
        let back = grid.analyze(&grid.synthesize(&a).unwrap()).unwrap();
        for (x, y) in a.coeffs().iter().zip(back.coeffs()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_energy_matches_spectral_norm(u in divfree(7)) {
        let grid = SphereGrid::new(7);
        let v = velocity(&grid, &u).unwrap();
        let n = u.norm(NormKind::L2S2);
        prop_assert!(close(grid.inner_tangent(&v, &v), n * n, 1e-11));
    }

    #[test]
    fn dainv_at_most_half_l2(u in divfree(9)) {
        prop_assert!(u.norm(NormKind::DaInv) <= 0.5 * u.norm(NormKind::L2S2) * (1.0 + 1e-14));
    }

    #[test]
    fn advection_is_energy_neutral(u in divfree(6)) {
        let grid = SphereGrid::new(7);
        let b = nonlinear_term(&grid, &u).unwrap();
        let scale = b.norm(NormKind::L2S2) * u.norm(NormKind::L2S2);
        prop_assert!(b.inner(&u, NormKind::L2S2).abs() <= 1e-11 * scale.max(1e-300));
    }

    #[test]
    fn average_inverts_retract(a in spectral(5), eps in 0.01f64..0.49, nr in 3usize..9) {
        let grid = Arc::new(SphereGrid::new(5));
        let geom = Arc::new(ShellGeometry::new(eps, nr, grid.clone()).unwrap());
        let phi = grid.synthesize(&a).unwrap();
        let back = m_scalar(&r_scalar(&phi, &geom).unwrap());
        prop_assert!(back.values.iter().zip(phi.values.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn basis_lift_has_no_fluctuation(u in divfree(4), eps in 0.02f64..0.45) {
        let grid = Arc::new(SphereGrid::new(5));
        let geom = Arc::new(ShellGeometry::new(eps, 6, grid).unwrap());
        let basis = ShellBasis::new(geom, 4).unwrap();
        let c = basis.lift(&u);
        let back = basis.mean_stream(&c);
        prop_assert!(back.sub(&u).norm(NormKind::L2S2) <= 1e-12 * u.norm(NormKind::L2S2).max(1e-300));
        prop_assert!(basis.energy(&basis.fluctuation(&c)) <= 1e-24 * basis.energy(&c).max(1e-300));
        // ‖R̊_ε u‖² = ε‖u‖²
        let n = u.norm(NormKind::L2S2);
        prop_assert!(close(basis.energy(&c), eps * n * n, 1e-10));
    }

    #[test]
    fn noise_is_random_access(seed in any::<u64>(), path in 0u64..1000, nsteps in 1usize..40) {
        let dt = 0.01;
        let w = sample_path(seed, path, 3, dt, nsteps).unwrap();
        for k in [0, nsteps / 2, nsteps - 1] {
            for j in 0..3 {
                prop_assert_eq!(w.step(k)[j], dt.sqrt() * standard_normal(seed, path, j, k));
            }
        }
    }

    #[test]
    fn rate_fit_recovers_power_law(p in 0.1f64..3.0, c in 0.01f64..100.0) {
        let eps = [0.4f64, 0.2, 0.1, 0.05];
        let err: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
        let r = fit_rate(&eps, &err).rate().unwrap();
        prop_assert!((r - p).abs() < 1e-12);
    }

    #[test]
    fn unforced_stokes_decay_is_exact(l in 1usize..7, m in -1i64..2, nu in 0.01f64..0.2) {
        let mut cfg = SphereSolverConfig::new(6, nu, 0.01, 0.5);
        cfg.nonlinear = false;
        cfg.sample_every = 50;
        let u0 = DivFreeSpectral::mode(6, l, m, 1.0).unwrap();
        let tr = SphereSolver::new(cfg).unwrap().run(&u0, None).unwrap();
        let lam = (l * (l + 1)) as f64;
        let expect = u0.norm(NormKind::L2S2) * (-nu * lam * 0.5).exp();
        prop_assert!(close(tr.states.last().unwrap().norm(NormKind::L2S2), expect, 1e-12));
    }
}
