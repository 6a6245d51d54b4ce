use paraosc_core::floquet::{floquet_spectrum, LabFrameParams};
use paraosc_core::fock::{build_ladder, parity_operator, DensityMatrix, FockSpace, Parity};
use paraosc_core::lz::{lz_asymptotic_alphas, lz_evolve_numeric, LzProblem};
use paraosc_core::open::{build_liouvillian, evolve_master};
use paraosc_core::rwa::{build_h_rwa, zero_drive_levels, RwaSystem};
use paraosc_core::spectrum::{eigenstate, parity_eigensystem, LevelLabel};
use paraosc_core::wigner::wigner_at;
use paraosc_core::C64;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn ladder_algebra(dim in 3usize..40) {
        let s = FockSpace::new(dim).unwrap();
        let (a, ad) = build_ladder(&s);
        let comm = a.commutator(&ad).into_matrix();
        for i in 0..dim - 1 {
            for j in 0..dim - 1 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((comm[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        let p = parity_operator(&s);
        let pap = p.mul(&a).mul(&p).into_matrix();
        prop_assert!((pap + a.matrix()).iter().all(|z| z.norm() < 1e-15));
        let p2 = p.mul(&p).into_matrix();
        prop_assert!((p2 - s.identity().into_matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn hamiltonian_is_hermitian_and_parity_symmetric(delta in -3.0f64..3.0, f in 0.0f64..6.0, dim in 4usize..50) {
        let s = FockSpace::new(dim).unwrap();
        let h = build_h_rwa(&s, &RwaSystem::new(delta, f).unwrap());
        prop_assert!(h.is_hermitian());
        prop_assert!(h.commutator(&parity_operator(&s)).max_abs() < 1e-12);
    }

    #[test]
    fn undriven_levels_are_fock_energies(delta in -3.0f64..3.0) {
        let s = FockSpace::new(16).unwrap();
        let sys = RwaSystem::new(delta, 0.0).unwrap();
        let e = zero_drive_levels(delta, 15);
        for parity in [Parity::Even, Parity::Odd] {
            let (vals, _) = parity_eigensystem(&s, &sys, parity);
            let mut want: Vec<f64> = parity.levels(16).map(|n| e[n]).collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in vals.iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenstates_have_definite_parity(delta in -1.0f64..2.5, f in 0.1f64..3.0, rank in 0usize..3, odd in any::<bool>()) {
        let s = FockSpace::new(40).unwrap();
        let parity = if odd { Parity::Odd } else { Parity::Even };
        let (_, phi) = eigenstate(&s, &RwaSystem::new(delta, f).unwrap(), LevelLabel::new(parity, rank)).unwrap();
        prop_assert!(phi.parity_population(parity.opposite()) == 0.0);
        prop_assert!((phi.norm() - 1.0).abs() < 1e-12);
        let rho = DensityMatrix::from_pure(&phi);
        let lambda = 1.0 / (2.0 * f);
        let bound = 1.0 / (std::f64::consts::PI * lambda) + 1e-8;
        for (q, p) in [(0.3, 0.1), (1.0, -0.4), (-0.2, 0.9)] {
            let w = wigner_at(&rho, lambda, q, p);
            prop_assert!((w - wigner_at(&rho, lambda, -q, -p)).abs() < 1e-8);
            prop_assert!(w.abs() <= bound);
        }
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn master_equation_preserves_trace_and_positivity(delta in -1.0f64..2.0, f in 0.0f64..1.5, g in 0.05f64..1.0, n0 in 0usize..4) {
        let s = FockSpace::new(18).unwrap();
        let l = build_liouvillian(&s, &RwaSystem::new(delta, f).unwrap(), g).unwrap();
        prop_assert!(l.trace_residual() < 1e-12);
        let rho0 = DensityMatrix::fock(&s, n0).unwrap();
        for r in evolve_master(&l, &rho0, &[0.5, 2.0, 5.0]).unwrap() {
            prop_assert!((r.trace().re - 1.0).abs() < 1e-8);
            prop_assert!(r.min_eigenvalue() > -1e-7);
            prop_assert!(r.hermiticity_residual() < 1e-8);
        }
    }

    #[test]
    fn quasienergies_lie_in_one_zone(delta in 0.0f64..2.0, f in 0.1f64..1.0) {
        let p = LabFrameParams::from_rwa(1.0, 1e-3, &RwaSystem::new(delta, f).unwrap(), 4, 12).unwrap();
        let q = floquet_spectrum(&p);
        prop_assert!(q.values.iter().all(|&e| (0.0..q.omega_f).contains(&e)));
        prop_assert!(q.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lz_alphas_normalized_and_complementary(ratio in 0.001f64..40.0) {
        let (u, d) = lz_asymptotic_alphas(&LzProblem::from_ratio(ratio, 1.0, true).unwrap());
        let (u2, _) = lz_asymptotic_alphas(&LzProblem::from_ratio(ratio, 1.0, false).unwrap());
        prop_assert!((u.norm_sqr() + d.norm_sqr() - 1.0).abs() < 1e-6);
        prop_assert!((u.norm_sqr() + u2.norm_sqr() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lz_propagator_is_unitary(delta in -3.0f64..3.0, s in 0.1f64..3.0, tol_exp in 6i32..11) {
        let tol = 10f64.powi(-tol_exp);
        let prob = LzProblem::new(delta, s).unwrap();
        let t_max = prob.asymptotic_time();
        let grid: Vec<f64> = (0..=50).map(|k| t_max * k as f64 / 50.0).collect();
        let sol = lz_evolve_numeric(&prob, &grid, tol).unwrap();
        prop_assert!(sol.max_norm_error() < 10.0 * tol);
    }
}
