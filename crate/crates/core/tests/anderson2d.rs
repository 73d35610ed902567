use std::f64::consts::PI;

use andersonlab::anderson2d::{unit_cosine, AndersonOperator2d, OperatorOptions, CONTRACTION_TARGET};
use andersonlab::config::RunConfig;
use andersonlab::fixed_point::random_smooth;
use andersonlab::fourier::{sobolev_norm, Complex64, TorusField};
use andersonlab::galerkin::GalerkinOperator;

fn cfg(amplitude: f64) -> RunConfig {
    RunConfig { m: 32, eps: 0.125, k_radius: Some(8.0), amplitude, seed: 3, ..Default::default() }
}

fn op(amplitude: f64) -> AndersonOperator2d {
    cfg(amplitude).operator_2d().unwrap()
}

fn probe(op: &AndersonOperator2d, seed: u64) -> TorusField {
    random_smooth(op.modes(), seed, 2.0)
}

#[test]
fn zero_noise_is_the_shifted_laplacian() {
    let op = op(0.0);
    assert!((op.shift() - 1.0).abs() < 1e-12);
    assert!(op.lambda_max_unshifted().abs() < 1e-12);
    for s in 0..3 {
        let u = probe(&op, s);
        assert!(op.gamma(&u).unwrap().sub(&u).max_abs() < 1e-14);
        assert!(op.b_xi(&u).unwrap().max_abs() < 1e-14);
        let want = u.laplacian().sub(&u);
        assert!(op.h_apply(&u).unwrap().sub(&want).max_abs() < 1e-9 * want.max_abs());
    }
    // The spectrum is -4π²|k|² - 1 over the disk.
    let mut want: Vec<f64> = (0..op.modes().len()).map(|p| -4.0 * PI * PI * op.modes().k2(p) - 1.0).collect();
    want.sort_by(f64::total_cmp);
    let got = &op.matrix().spectral().unwrap().values;
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
    }
}

#[test]
fn matrix_matches_convolution_oracle() {
    let op = op(1.0);
    let modes = op.modes();
    let xi = &op.noise().xi;
    let offset = op.noise().c_eps + op.shift();
    for k in [[0i64, 0], [3, -1], [0, 8], [5, 5]] {
        let e = TorusField::mode(op.grid(), &k).unwrap();
        let got = op.matrix().apply(&e).unwrap();
        for p in 0..modes.len() {
            let m = modes.wavevector(p);
            let mut want = xi.coeff(&[m[0] - k[0], m[1] - k[1]]);
            if m[..2] == k {
                want -= Complex64::new(4.0 * PI * PI * (k[0] * k[0] + k[1] * k[1]) as f64 + offset, 0.0);
            }
            assert!((got.coeff(&m[..2]) - want).norm() < 1e-10, "k = {k:?}, m = {m:?}");
        }
        assert_eq!(modes.excess(&got), 0.0);
    }
}

#[test]
fn matrix_is_symmetric_and_shifted_below_minus_one() {
    let op = op(1.0);
    let a = op.matrix().real_matrix();
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    assert!(worst < 1e-12, "{worst}");
    let u = probe(&op, 1);
    let v = probe(&op, 2);
    let lhs = op.matrix().apply(&u).unwrap().inner(&v);
    let rhs = u.inner(&op.matrix().apply(&v).unwrap());
    assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
    let top = *op.matrix().spectral().unwrap().values.last().unwrap();
    assert!((top - (op.lambda_max_unshifted() - op.shift())).abs() < 1e-8);
    assert!(top <= -1.0 + 1e-9);
    assert!((op.shift() - (op.lambda_max_unshifted().max(0.0) + 1.0)).abs() < 1e-12);
    assert!(op.energy_form(&u, &u).unwrap() >= u.norm_l2().powi(2) * (1.0 - 1e-9));
}

#[test]
fn krylov_top_eigenvalue_matches_dense() {
    let op = op(1.0);
    let bare = GalerkinOperator::new(op.modes().clone(), op.noise().xi.clone(), op.noise().c_eps).unwrap();
    let krylov = bare.top_eigenvalue(1e-10).unwrap();
    assert!((krylov - op.lambda_max_unshifted()).abs() < 1e-6 * (1.0 + krylov.abs()), "{krylov}");
}

#[test]
fn small_amplitude_top_eigenvalue_is_the_mean() {
    // First-order perturbation of the constant ground state.
    let lam = 1e-3;
    let op = op(lam);
    let mean = op.noise().xi.coeff(&[0, 0]).re;
    assert!((op.lambda_max_unshifted() - mean).abs() < 1e-5, "{} vs {mean}", op.lambda_max_unshifted());
}

#[test]
fn gamma_contracts_and_inverts() {
    let op = op(1.0);
    assert!(op.contraction_factor() <= CONTRACTION_TARGET);
    assert!(op.cutoff().is_power_of_two() && op.cutoff() <= 8);
    for s in 0..4 {
        let u = probe(&op, 10 + s);
        let solve = op.gamma_solve(&u).unwrap();
        let back = op.gamma_inverse(&solve.field).unwrap();
        assert!(sobolev_norm(&back.sub(&u), 0.9) <= 1e-8 * sobolev_norm(&u, 0.9));
    }
}

#[test]
fn paracontrolled_formula_agrees_with_matrix() {
    let op = op(1.0);
    for s in 0..3 {
        let us = probe(&op, 20 + s);
        let u = op.gamma(&us).unwrap();
        let a = op.h_apply_with(&u, &us).unwrap();
        let b = op.matrix().apply(&u).unwrap();
        assert!(a.sub(&b).norm_l2() <= 1e-8 * b.norm_l2(), "{}", a.sub(&b).norm_l2() / b.norm_l2());
        let hs = op.h_sharp_apply(&us).unwrap();
        let hm = op.h_sharp_apply_matrix(&us).unwrap();
        assert!(hs.sub(&hm).norm_l2() <= 1e-7 * hm.norm_l2());
    }
}

#[test]
fn fixed_cutoff_and_with_cutoff() {
    let c = RunConfig { cutoff: Some(4), ..cfg(1.0) };
    let op = c.operator_2d().unwrap();
    assert_eq!(op.cutoff(), 4);
    let other = op.with_cutoff(8, &OperatorOptions::default()).unwrap();
    assert_eq!(other.cutoff(), 8);
    assert_eq!(other.shift(), op.shift());
    // Raising N leaves less for the correction, so the contraction cannot get worse by much.
    assert!(other.contraction_factor() <= op.contraction_factor() + 0.05);
}

#[test]
fn inputs_outside_the_disk_are_rejected() {
    let op = op(1.0);
    let far = TorusField::cosine(op.grid(), &[12, 0]).unwrap();
    assert!(op.gamma(&far).is_err());
    assert!(op.energy_form(&far, &far).is_err());
    let e = unit_cosine(op.grid(), &[3, 4]).unwrap();
    assert!((e.norm_l2() - 1.0).abs() < 1e-14);
}

#[test]
fn manifest_records_the_shift() {
    let op = op(1.0);
    let m = op.manifest(Some(3));
    assert_eq!(m.dim, 2);
    assert_eq!(m.k_radius, 8.0);
    assert_eq!(m.modes, op.modes().len());
    assert!((m.lambda_min - (m.shift - m.lambda_max_unshifted)).abs() < 1e-15);
    assert!(m.lambda_min >= 1.0 - 1e-12);
    assert_eq!(m.constants["c_eps"], op.noise().c_eps);
    let json = serde_json::to_value(&m).unwrap();
    assert!(json.get("K").is_some() && json.get("N").is_some());
}

#[test]
fn perturbation_grows_slower_than_the_laplacian() {
    // ||(H♯ - Δ + shift) e_k|| against ||Δ e_k|| = 4π²|k|².
    let c = RunConfig { m: 64, eps: 1.0 / 16.0, k_radius: Some(16.0), ..cfg(1.0) };
    let op = c.operator_2d().unwrap();
    let rel: Vec<f64> = [2i64, 4, 8, 16]
        .iter()
        .map(|&k| {
            let e = unit_cosine(op.grid(), &[k, 0]).unwrap();
            let d = op.h_sharp_apply(&e).unwrap().sub(&e.laplacian()).add(&e.scale(op.shift()));
            d.norm_l2() / (4.0 * PI * PI * (k * k) as f64)
        })
        .collect();
    assert!(rel.windows(2).all(|w| w[1] < w[0]), "{rel:?}");
}
