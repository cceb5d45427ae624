//! Cross-checks of the continued-inversion solver against independent
//! references: the classical scalar continued fraction, direct residual
//! substitution into the equations of motion, and the monodromy oracle.

mod common;

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use floquet_modes_core::continued::{
    build_mode_set, find_exponents, mode_vectors, t_operators, y_matrix_double,
};
use floquet_modes_core::model::{SystemSpec, Tolerances};
use floquet_modes_core::oracle;
use floquet_modes_core::{Complex64, DMat};
use nalgebra::dmatrix;

fn tol() -> Tolerances {
    Tolerances::default()
}

#[test]
fn t_operators_match_scalar_continued_fractions() {
    // a = 0, q = 0.2 sits at beta ~ q/sqrt(2) ~ 0.1414
    let (a, q) = (0.0, 0.2);
    let spec = SystemSpec::new(dmatrix![a], dmatrix![q]).unwrap();
    let beta = 0.1414;
    let (t2, t0, _) = t_operators(beta, &spec, &tol()).unwrap();
    let cf_up = common::scalar_cf(a, q, beta, 1.0);
    // T_2 = 1 / (r_2 - q^2/(r_4 - ...)): the branch with the first stage peeled
    let r2 = a - (2.0 + beta).powi(2);
    let inner_up = common::scalar_cf_tail(a, q, beta, 1.0);
    let t2_cf = 1.0 / (r2 - inner_up);
    assert_abs_diff_eq!(t2[(0, 0)], t2_cf, epsilon = 1e-12);
    let t0_cf = (a - beta * beta) - common::scalar_cf(a, q, beta, -1.0);
    assert_abs_diff_eq!(t0[(0, 0)], t0_cf, epsilon = 1e-12);
    // consistency of the two scalar forms
    assert_abs_diff_eq!(q * q * t2_cf, cf_up, epsilon = 1e-13);
}

#[test]
fn scalar_exponents_match_classical_continued_fraction() {
    // ten (a, q) pairs spread over the stable region
    let cases = [
        (0.23, 0.05),
        (0.41, 0.10),
        (0.58, 0.15),
        (0.74, 0.08),
        (1.38, 0.12),
        (1.62, 0.20),
        (2.05, 0.18),
        (2.43, 0.25),
        (2.86, 0.15),
        (3.21, 0.10),
    ];
    for (a, q) in cases {
        let spec = SystemSpec::new(dmatrix![a], dmatrix![q]).unwrap();
        let betas = find_exponents(&spec, &tol()).unwrap();
        assert_eq!(betas.len(), 1, "case ({a}, {q})");
        let reference = common::scalar_cf_root(a, q, betas[0]);
        assert_abs_diff_eq!(betas[0], reference, epsilon = 1e-10);
    }
}

#[test]
fn scalar_mode_ratios_match_continued_fraction() {
    let (a, q) = (0.0, 0.2);
    let spec = SystemSpec::new(dmatrix![a], dmatrix![q]).unwrap();
    let beta = find_exponents(&spec, &tol()).unwrap()[0];
    let modes = mode_vectors(beta, &spec, &tol()).unwrap();
    let m = &modes[0];
    let c0 = m.coeff(0).unwrap()[0];
    let up = m.coeff(1).unwrap()[0] / c0;
    let down = m.coeff(-1).unwrap()[0] / c0;
    assert_abs_diff_eq!(
        up,
        common::scalar_cf_ratio(a, q, beta, 1.0),
        epsilon = 1e-10
    );
    assert_abs_diff_eq!(
        down,
        common::scalar_cf_ratio(a, q, beta, -1.0),
        epsilon = 1e-10
    );
}

#[test]
fn reconstructed_solutions_satisfy_equation_of_motion() {
    let spec = SystemSpec::new(
        dmatrix![0.5, 0.15; 0.15, 2.2],
        dmatrix![0.25, 0.05; 0.05, 0.15],
    )
    .unwrap();
    let mode_set = build_mode_set(&spec, &tol()).unwrap();
    for mode in mode_set.modes() {
        let mut worst: f64 = 0.0;
        for k in 0..100 {
            let t = PI * k as f64 / 99.0;
            let u = mode.eval_solution(t);
            let ddu = mode.eval_solution_dd(t);
            let k_mat = spec.stiffness(t).map(|x| Complex64::new(x, 0.0));
            let res = ddu + k_mat * u;
            worst = worst.max(res.norm());
        }
        assert!(worst < 1e-8, "EOM residual {worst} at beta {}", mode.beta());
    }
}

#[test]
fn coefficient_tails_decay() {
    let spec = SystemSpec::new(
        dmatrix![0.5, 0.15; 0.15, 2.2],
        dmatrix![0.25, 0.05; 0.05, 0.15],
    )
    .unwrap();
    let mode_set = build_mode_set(&spec, &tol()).unwrap();
    for mode in mode_set.modes() {
        let n_max = mode.n_max();
        let start = (n_max / 2).max(1);
        for dir in [1i64, -1] {
            let mut prev = mode.coeff(dir * start).unwrap().norm();
            for m in (start + 1)..=n_max {
                let cur = mode.coeff(dir * m).unwrap().norm();
                assert!(
                    cur <= prev * (1.0 + 1e-12) + 1e-300,
                    "tail grows at n = {} ({} -> {})",
                    dir * m,
                    prev,
                    cur
                );
                prev = cur;
            }
        }
    }
}

#[test]
fn truncation_refinement_leaves_roots_fixed() {
    let spec = SystemSpec::new(
        dmatrix![0.5, 0.15; 0.15, 2.2],
        dmatrix![0.25, 0.05; 0.05, 0.15],
    )
    .unwrap();
    let coarse = find_exponents(&spec, &tol()).unwrap();
    let mut fine_tol = tol();
    fine_tol.truncation_order = 32;
    let fine = find_exponents(&spec, &fine_tol).unwrap();
    for (b1, b2) in coarse.iter().zip(fine.iter()) {
        assert!((b1 - b2).abs() <= 10.0 * fine_tol.root_tol, "{b1} vs {b2}");
    }
}

#[test]
fn exponents_invariant_under_orthogonal_conjugation() {
    let a0 = dmatrix![0.5, 0.15; 0.15, 2.2];
    let q0 = dmatrix![0.25, 0.05; 0.05, 0.15];
    let spec = SystemSpec::new(a0.clone(), q0.clone()).unwrap();
    let betas = find_exponents(&spec, &tol()).unwrap();
    let base_modes = build_mode_set(&spec, &tol()).unwrap();

    for th in [0.3f64, 1.1, 2.4] {
        let o = dmatrix![th.cos(), -th.sin(); th.sin(), th.cos()];
        let spec_rot = SystemSpec::new(&o * &a0 * o.transpose(), &o * &q0 * o.transpose()).unwrap();
        let betas_rot = find_exponents(&spec_rot, &tol()).unwrap();
        for (b1, b2) in betas.iter().zip(betas_rot.iter()) {
            assert_abs_diff_eq!(b1, b2, epsilon = 1e-8);
        }
        // kernel vectors rotate, up to the overall sign convention
        let rot_modes = build_mode_set(&spec_rot, &tol()).unwrap();
        for (m0, m1) in base_modes.modes().iter().zip(rot_modes.modes().iter()) {
            let c0 = &o * m0.coeff(0).unwrap();
            let c1 = m1.coeff(0).unwrap();
            let d = (c1 - &c0).norm().min((c1 + &c0).norm());
            assert!(d < 1e-7, "kernel vector mismatch {d} at theta {th}");
        }
    }
}

#[test]
fn random_specs_match_oracle_multipliers() {
    let mut rng = common::Rng::new(0x1A2B3C4D);
    for f in [1usize, 2, 3] {
        let spec = common::random_stable_spec(&mut rng, f);
        let betas = find_exponents(&spec, &tol()).unwrap();
        assert_eq!(betas.len(), f);
        let xi = oracle::integrate_matrizant(&spec, PI, 4096).unwrap();
        let dec = oracle::floquet_decompose(&xi).unwrap();
        for beta in betas {
            let lam = Complex64::from_polar(1.0, beta * PI);
            let best = dec
                .multipliers
                .iter()
                .map(|l| (l - lam).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-6, "f = {f}, beta = {beta}, mismatch {best}");
        }
    }
}

#[test]
fn pure_cos4t_system_matches_oracle() {
    // Q2 = 0, Q4 only: exponents from the generalized chains against the
    // direct integration of u'' + (a - 2 q cos 4t) u = 0
    let spec = SystemSpec::new(dmatrix![0.5], dmatrix![0.0])
        .unwrap()
        .with_q4(dmatrix![0.12])
        .unwrap();
    let mode_set = build_mode_set(&spec, &tol()).unwrap();
    let betas = mode_set.exponents();
    assert_eq!(betas.len(), 1);
    let xi = oracle::integrate_matrizant(&spec, PI, 8192).unwrap();
    let dec = oracle::floquet_decompose(&xi).unwrap();
    let lam = Complex64::from_polar(1.0, betas[0] * PI);
    let best = dec
        .multipliers
        .iter()
        .map(|l| (l - lam).norm())
        .fold(f64::INFINITY, f64::min);
    assert!(best <= 1e-8, "mismatch {best}");
}

#[test]
fn double_cosine_modes_solve_their_equation() {
    let spec = SystemSpec::new(dmatrix![0.6], dmatrix![0.15])
        .unwrap()
        .with_q4(dmatrix![0.05])
        .unwrap();
    let mode_set = build_mode_set(&spec, &tol()).unwrap();
    for mode in mode_set.modes() {
        let mut worst: f64 = 0.0;
        for k in 0..100 {
            let t = PI * k as f64 / 99.0;
            let u = mode.eval_solution(t);
            let ddu = mode.eval_solution_dd(t);
            let k_mat = spec.stiffness(t).map(|x| Complex64::new(x, 0.0));
            worst = worst.max((ddu + k_mat * u).norm());
        }
        assert!(worst < 1e-8, "double-cosine EOM residual {worst}");
    }
}

#[test]
fn double_reduction_is_tight_on_a_grid_of_betas() {
    let spec =
        SystemSpec::new(dmatrix![0.5, 0.1; 0.1, 1.7], dmatrix![0.2, 0.05; 0.05, 0.1]).unwrap();
    let t = tol();
    for k in 0..10 {
        let beta = 0.15 + 0.17 * k as f64;
        let beta = if (beta - 1.0).abs() < 0.05 {
            beta + 0.07
        } else {
            beta
        };
        let y1 = floquet_modes_core::continued::y_matrix(beta, &spec, &t).unwrap();
        let y2 = y_matrix_double(beta, &spec, &t).unwrap();
        let d1 = y1.determinant();
        let d2 = y2.determinant();
        assert!(
            (d1 - d2).abs() <= 1e-12 * d1.abs().max(1.0),
            "beta {beta}: {d1} vs {d2}"
        );
    }
}

#[test]
fn y_matrix_is_symmetric() {
    let spec = SystemSpec::new(
        dmatrix![0.5, 0.15; 0.15, 2.2],
        dmatrix![0.25, 0.05; 0.05, 0.15],
    )
    .unwrap();
    for beta in [0.21, 0.77, 1.33, 1.9] {
        let y = floquet_modes_core::continued::y_matrix(beta, &spec, &tol()).unwrap();
        let asym = (&y - y.transpose()).norm();
        assert!(
            asym < 1e-9 * y.norm().max(1.0),
            "asymmetry {asym} at beta {beta}"
        );
    }
}

#[test]
fn solver_types_are_shareable_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<SystemSpec>();
    assert_send_sync::<floquet_modes_core::model::Tolerances>();
    assert_send_sync::<floquet_modes_core::continued::ModeSet>();
    assert_send_sync::<floquet_modes_core::transform::FLTransform>();
    assert_send_sync::<floquet_modes_core::inhom::PeriodicResponse>();
    assert_send_sync::<floquet_modes_core::oracle::FloquetDecomposition>();
}

#[test]
fn defective_monodromy_is_reported_on_a_boundary() {
    // on the first Mathieu instability tongue the monodromy has a Jordan
    // block; build a matrix with one directly
    let xi = DMat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    assert!(matches!(
        oracle::floquet_decompose(&xi),
        Err(floquet_modes_core::Error::DefectiveMonodromy { .. })
    ));
}
