use andersonlab::anderson2d::AndersonOperator2d;
use andersonlab::config::RunConfig;
use andersonlab::fixed_point::random_smooth;
use andersonlab::fourier::{sobolev_norm, Complex64, TorusField};
use andersonlab::nls::{cubic, ledger_csv, lipschitz_quotient, nonlinear_phase, NlsSystem};
use andersonlab::noise::sample_white_noise;
use andersonlab::propagator::Flow;

fn op(amplitude: f64) -> AndersonOperator2d {
    RunConfig { m: 32, eps: 0.125, k_radius: Some(8.0), amplitude, seed: 2, ..Default::default() }.operator_2d().unwrap()
}

fn data(op: &AndersonOperator2d, seed: u64, size: f64) -> TorusField {
    let u = random_smooth(op.modes(), seed, 2.0);
    u.scale(size / sobolev_norm(&u, 0.6))
}

fn rel(a: &TorusField, b: &TorusField) -> f64 {
    a.sub(b).norm_l2() / b.norm_l2()
}

#[test]
fn nonlinear_phase_solves_its_ode_and_keeps_modulus() {
    let u = sample_white_noise(2, 16, 1).unwrap().field.scale_complex(Complex64::new(0.3, 0.2));
    let tau = 0.17;
    let v = nonlinear_phase(&u, tau);
    for (a, b) in u.values().iter().zip(v.values()) {
        assert!((a.norm() - b.norm()).abs() < 1e-13);
    }
    // i∂_τ u = -|u|²u at τ.
    let h = 1e-6;
    let d = nonlinear_phase(&u, tau + h).sub(&nonlinear_phase(&u, tau - h)).scale(0.5 / h);
    let want = cubic(&v).scale_complex(Complex64::new(0.0, 1.0));
    assert!(rel(&d, &want) < 1e-6);
}

#[test]
fn linear_flow_matches_the_matrix_group_on_v_and_is_free_off_v() {
    let op = op(1.0);
    let sys = NlsSystem::new(&op).unwrap();
    let u = random_smooth(op.modes(), 3, 1.0);
    let flow = Flow::anderson2d_default(&op);
    for t in [0.05, 0.4] {
        assert!(rel(&sys.linear(&u, t), &flow.propagate(&u, t).unwrap()) < 1e-10);
    }
    let off = TorusField::mode(op.grid(), &[12, 3]).unwrap();
    let phase = 4.0 * std::f64::consts::PI.powi(2) * 153.0 + op.matrix().offset();
    let want = off.scale_complex(Complex64::from_polar(1.0, phase * 0.1));
    assert!(sys.linear(&off, 0.1).sub(&want).max_abs() < 1e-12);
    let w = sample_white_noise(2, 32, 5).unwrap().field;
    assert!((sys.linear(&w, 0.3).norm_l2() - w.norm_l2()).abs() < 1e-12 * w.norm_l2());
    assert!(rel(&sys.linear(&sys.linear(&w, 0.2), -0.2), &w) < 1e-12);
}

#[test]
fn constant_data_has_a_closed_form_orbit() {
    // Noise 0: H = Δ - 1, so u = a e^{i(1 + a²)t} solves (i∂_t - H)u = -|u|²u.
    let op = op(0.0);
    let sys = NlsSystem::new(&op).unwrap();
    let a = 0.8;
    let u0 = TorusField::constant(op.grid(), a);
    let t = 0.5;
    let want = u0.scale_complex(Complex64::from_polar(1.0, (1.0 + a * a) * t));
    let strang = sys.strang(&u0, t, 10, 0.6, 0.55, 5).unwrap();
    assert!(strang.u.sub(&want).max_abs() < 1e-12);
    let picard = sys.picard(&u0, t, 16, 60, 1e-14).unwrap();
    assert!(picard.u.sub(&want).max_abs() < 1e-10);
}

#[test]
fn strang_conserves_mass_and_energy_converges() {
    let op = op(1.0);
    let sys = NlsSystem::new(&op).unwrap();
    let u0 = sys.lift(&data(&op, 4, 1.0)).unwrap();
    let t = 0.05;
    let drift = |steps: usize| {
        let st = sys.strang(&u0, t, steps, 0.6, 0.55, steps).unwrap();
        let first = &st.ledger[0];
        let last = st.ledger.last().unwrap();
        // Exact in exact arithmetic; each step rounds through a dense orthogonal change of basis.
        assert!((last.mass - first.mass).abs() < 1e-10 * first.mass, "{} {}", first.mass, last.mass);
        (last.energy - first.energy).abs()
    };
    let (a, b) = (drift(400), drift(800));
    assert!(b < a / 3.0, "{a} -> {b}");
}

#[test]
fn ledger_rows_follow_the_stride() {
    let op = op(1.0);
    let sys = NlsSystem::new(&op).unwrap();
    let u0 = sys.lift(&data(&op, 5, 0.5)).unwrap();
    let st = sys.strang(&u0, 0.01, 25, 0.6, 0.55, 10).unwrap();
    let ts: Vec<f64> = st.ledger.iter().map(|r| r.t).collect();
    assert_eq!(ts.len(), 4);
    assert!((ts[1] - 0.004).abs() < 1e-15 && (ts[3] - 0.01).abs() < 1e-15);
    assert_eq!(st.ledger[0].l4w_accum, 0.0);
    assert!(st.ledger.windows(2).all(|w| w[1].l4w_accum > w[0].l4w_accum));
    let csv = ledger_csv(&st.ledger);
    assert!(csv.starts_with("t,mass,energy,Hs,L4W_accum\n"));
    assert_eq!(csv.lines().count(), 5);
    assert!(rel(&sys.lift(&st.u_sharp).unwrap(), &st.u) < 1e-9);
    assert!(sys.strang(&u0, 0.01, 0, 0.6, 0.55, 1).is_err());
}

#[test]
fn picard_agrees_with_fine_splitting() {
    let op = op(1.0);
    let sys = NlsSystem::new(&op).unwrap();
    let us = data(&op, 6, 1.0);
    let t = 0.02;
    let p = sys.picard(&us, t, 32, 60, 1e-13).unwrap();
    assert!(p.contraction() < 0.5, "{}", p.contraction());
    let s = sys.strang(&sys.lift(&us).unwrap(), t, 2000, 0.6, 0.55, 2000).unwrap();
    assert!(p.u.sub(&s.u).norm_l2() < 1e-6, "{}", p.u.sub(&s.u).norm_l2());
}

#[test]
fn lipschitz_quotient_is_stable_in_delta() {
    let op = op(1.0);
    let sys = NlsSystem::new(&op).unwrap();
    let us = data(&op, 7, 1.0);
    let h = random_smooth(op.modes(), 70, 2.0);
    let qs: Vec<f64> = [1e-5, 1e-6]
        .iter()
        .map(|&d| lipschitz_quotient(&sys, &us, &h, d, 0.02, 200, 0.6, 0.55).unwrap().0)
        .collect();
    assert!(qs[0] < 100.0 && qs[0] >= 0.5, "{qs:?}");
    assert!((qs[0] / qs[1] - 1.0).abs() < 0.01, "{qs:?}");
    let (zero, l4w) = lipschitz_quotient(&sys, &us, &h, 0.0, 0.02, 20, 0.6, 0.55).unwrap();
    assert_eq!(zero, 0.0);
    assert!(l4w > 0.0);
}

#[test]
fn energy_form_norm_is_coercive() {
    let op = op(1.0);
    let sys = NlsSystem::new(&op).unwrap();
    let u = sample_white_noise(2, 32, 9).unwrap().field.low_pass(12.0);
    // -A' >= 1 everywhere after the shift.
    assert!(sys.form_norm(&u).unwrap() >= u.norm_l2() * (1.0 - 1e-12));
    let e = sys.energy(&u).unwrap();
    assert!(e > sys.quadratic_energy(&u).unwrap());
}
