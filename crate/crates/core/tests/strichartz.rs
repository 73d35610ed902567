use andersonlab::config::RunConfig;
use andersonlab::fourier::{sobolev_norm, Grid, TorusField};
use andersonlab::propagator::{Flow, GeneratorKind, SharpFlow};
use andersonlab::stats::{linear_fit, mean, median, spread};
use andersonlab::strichartz::{
    anderson2d_config, anderson3d_config, laplacian_config, run_scaling, shell_data, short_time_config,
    spacetime_norm, summarize, time_grid, CellResult, Interval, PassRule, ScalingConfig,
};

fn l2_config(interval: Interval) -> ScalingConfig {
    ScalingConfig {
        generator: GeneratorKind::Free,
        d: 2,
        p: 2.0,
        q: 2.0,
        sigma: 0.0,
        n_list: vec![4.0, 8.0, 16.0],
        seeds: vec![1, 2],
        n_t: 32,
        interval,
        data_index: 0.0,
        theory_slope: 0.0,
        rule: PassRule::Within(1e-10),
        m: None,
    }
}

#[test]
fn time_grid_includes_both_ends() {
    let t = time_grid(0.0, 0.5, 33);
    assert_eq!(t.len(), 33);
    assert_eq!(t[0], 0.0);
    assert_eq!(t[32], 0.5);
    assert!((t[1] - 0.5 / 32.0).abs() < 1e-16);
}

#[test]
fn spacetime_norm_of_a_constant_trajectory() {
    let grid = Grid::new(2, 16).unwrap();
    let u = TorusField::constant(grid, 3.0);
    let times = time_grid(0.0, 2.0, 40);
    let samples = vec![u.clone(); times.len()];
    // (∫_0^2 3^p dt)^{1/p} = 3·2^{1/p}.
    for p in [2.0, 4.0, 10.0 / 3.0] {
        let got = spacetime_norm(&samples, &times, p, p, 0.0);
        assert!((got - 3.0 * 2f64.powf(1.0 / p)).abs() < 1e-12, "{p}: {got}");
    }
    // ⟨∇⟩^σ acts on a constant as the identity.
    assert!((spacetime_norm(&samples, &times, 4.0, 4.0, 0.7) - 3.0 * 2f64.powf(0.25)).abs() < 1e-12);
}

#[test]
fn shell_data_lives_on_the_shell_and_is_normalized() {
    let grid = Grid::new(2, 32).unwrap();
    for (n, s) in [(4.0, 0.0), (8.0, 1.5), (15.0, -0.5)] {
        let u = shell_data(grid, n, 7, s).unwrap();
        assert!((sobolev_norm(&u, s) - 1.0).abs() < 1e-12);
        for (i, c) in u.coeffs().iter().enumerate() {
            let k = grid.wavevector(i);
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            let nyquist = k[0].abs() >= grid.half() || k[1].abs() >= grid.half();
            if c.norm() > 0.0 {
                assert!(k2 > 0.25 * n * n && k2 <= n * n && !nyquist, "{k:?} for N = {n}");
            }
        }
    }
    let a = shell_data(grid, 8.0, 1, 0.0).unwrap();
    assert_eq!(a, shell_data(grid, 8.0, 1, 0.0).unwrap());
    assert_ne!(a, shell_data(grid, 8.0, 2, 0.0).unwrap());
    // Nothing with 0.25 < |k| <= 0.5 on the lattice.
    assert!(shell_data(grid, 0.5, 1, 0.0).is_err());
}

#[test]
fn pass_rules() {
    assert!(PassRule::AtMost(0.2).check(0.2, 5.0));
    assert!(!PassRule::AtMost(0.2).check(0.21, 0.0));
    assert!(PassRule::Within(0.1).check(-0.3, -0.25));
    assert!(!PassRule::Within(0.1).check(0.0, -0.25));
}

#[test]
fn preset_configurations() {
    let c = laplacian_config(2, 4.0, vec![4.0, 8.0], vec![1]).unwrap();
    assert_eq!(c.theory_slope, 0.0);
    assert_eq!(c.rule, PassRule::AtMost(0.2));
    let c = laplacian_config(2, 8.0, vec![4.0, 8.0], vec![1]).unwrap();
    assert!((c.theory_slope - 0.5).abs() < 1e-15);
    let c = laplacian_config(3, 10.0 / 3.0, vec![4.0, 8.0], vec![1]).unwrap();
    assert!(c.theory_slope.abs() < 1e-12);
    assert!(laplacian_config(2, 3.9, vec![4.0, 8.0], vec![1]).is_err());
    assert!(laplacian_config(3, 3.0, vec![4.0, 8.0], vec![1]).is_err());
    assert!(laplacian_config(1, 6.0, vec![4.0, 8.0], vec![1]).is_err());
    let s = short_time_config(2, 4.0, vec![4.0, 8.0], vec![1]).unwrap();
    assert_eq!(s.interval, Interval::Short);
    assert!((s.theory_slope + 0.25).abs() < 1e-15);
    let a = anderson2d_config(4.0, 0.3, vec![4.0, 8.0], vec![1], 0.2).unwrap();
    assert!((a.data_index - 0.3).abs() < 1e-15);
    assert!(anderson2d_config(3.0, 0.0, vec![4.0, 8.0], vec![1], 0.2).is_err());
    let b = anderson3d_config(10.0 / 3.0, 0.0, vec![4.0, 8.0], vec![1], 0.2).unwrap();
    assert!((b.data_index - 0.5).abs() < 1e-12);
    assert!(anderson3d_config(3.0, 0.0, vec![4.0, 8.0], vec![1], 0.2).is_err());
}

#[test]
fn invalid_scaling_runs_are_rejected() {
    let mut c = l2_config(Interval::Unit);
    c.n_t = 31;
    assert!(run_scaling(&c, None).is_err());
    let mut c = l2_config(Interval::Unit);
    c.n_list = vec![4.0];
    assert!(run_scaling(&c, None).is_err());
    let mut c = l2_config(Interval::Unit);
    c.seeds.clear();
    assert!(run_scaling(&c, None).is_err());
    let mut c = l2_config(Interval::Unit);
    c.generator = GeneratorKind::Anderson2d;
    assert!(run_scaling(&c, None).is_err());
}

#[test]
fn free_l2_norm_is_exactly_conserved() {
    // L²_t L²_x of a unitary flow on [0, T] is T^{1/2}·||u||_{L²}.
    let r = run_scaling(&l2_config(Interval::Unit), None).unwrap();
    assert_eq!(r.cells.len(), 6);
    for c in &r.cells {
        assert!((c.norm - 1.0).abs() < 1e-12 && (c.data_norm - 1.0).abs() < 1e-12);
    }
    assert!(r.slope.abs() < 1e-10 && r.pass);
    let s = run_scaling(&l2_config(Interval::Short), None).unwrap();
    for c in &s.cells {
        assert!((c.norm - c.n.powf(-0.5)).abs() < 1e-12);
    }
    assert!((s.slope + 0.5).abs() < 1e-10);
}

#[test]
fn scaling_runs_are_deterministic() {
    let c = laplacian_config(2, 4.0, vec![4.0, 8.0], vec![3, 4]).unwrap();
    let c = ScalingConfig { n_t: 32, ..c };
    let a = run_scaling(&c, None).unwrap();
    let b = run_scaling(&c, None).unwrap();
    assert_eq!(a.cells_csv(), b.cells_csv());
    assert_eq!(a.summary(), b.summary());
    let csv = a.cells_csv();
    assert!(csv.starts_with("generator,d,p,sigma,N,seed,norm,data_norm\nfree,2,4,0,4,3,"));
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(a.summary()["config"]["generator"], "free");
}

#[test]
fn anderson_run_checks_the_flow() {
    let op = RunConfig { m: 32, eps: 0.125, k_radius: Some(8.0), seed: 1, ..Default::default() }.operator_2d().unwrap();
    let sf = SharpFlow::tabulated(Flow::anderson2d_default(&op)).unwrap();
    let mut c = anderson2d_config(4.0, 0.0, vec![2.0, 4.0], vec![1], 0.2).unwrap();
    c.n_t = 32;
    let r = run_scaling(&c, Some(&sf)).unwrap();
    assert_eq!(r.cells.len(), 2);
    assert!(r.cells.iter().all(|c| c.norm.is_finite() && c.norm > 0.0));
    c.generator = GeneratorKind::Anderson3d;
    assert!(run_scaling(&c, Some(&sf)).is_err());
}

#[test]
fn summarize_recovers_a_planted_slope() {
    let c = laplacian_config(2, 4.0, vec![4.0, 8.0, 16.0, 32.0], vec![1, 2, 3]).unwrap();
    let mut cells = Vec::new();
    for &n in &c.n_list {
        for &seed in &c.seeds {
            let wobble = 1.0 + 0.01 * (seed as f64 - 2.0);
            cells.push(CellResult {
                generator: GeneratorKind::Free,
                d: 2,
                p: 4.0,
                sigma: 0.0,
                n,
                seed,
                norm: 2.0 * n.powf(0.15) * wobble,
                data_norm: 1.0,
            });
        }
    }
    let r = summarize(c, cells);
    // The wobble is the same at every N, so it cancels from the slope.
    assert!((r.slope - 0.15).abs() < 1e-12);
    // Per N the residuals are ln(0.99), 0, ln(1.01) less their mean; Sxx = 3·5·ln²2.
    let sse = 4.0 * (1.01f64.ln().powi(2) + 0.99f64.ln().powi(2));
    let mid = (1.01f64.ln() + 0.99f64.ln()) / 3.0;
    let sse = sse - 4.0 * 3.0 * mid * mid;
    let sxx = 15.0 * 2f64.ln().powi(2);
    assert!((r.stderr - (sse / 10.0 / sxx).sqrt()).abs() < 1e-12, "{}", r.stderr);
    assert!(r.pass);
    assert_eq!(r.per_n.len(), 4);
    let want = (2.0f64 * 8f64.powf(0.15)).ln();
    assert!((r.per_n[1].mean_log - want).abs() < 1e-4);
    assert!(r.per_n[1].std_log > 0.0 && r.per_n[1].std_log < 0.02);
}

#[test]
fn summary_statistics() {
    let xs = [0.0, 1.0, 2.0, 3.0];
    let ys = [1.0, 3.0, 5.0, 7.0];
    let f = linear_fit(&xs, &ys);
    assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
    assert!(f.slope_stderr.abs() < 1e-15 && (f.r2 - 1.0).abs() < 1e-15);
    // y = x plus residuals (1, -1, -1, 1): slope 1, SSE 4, Sxx 5.
    let f = linear_fit(&xs, &[1.0, 0.0, 1.0, 4.0]);
    assert!((f.slope - 1.0).abs() < 1e-15);
    assert!((f.slope_stderr - (4.0f64 / 2.0 / 5.0).sqrt()).abs() < 1e-15);
    assert_eq!(mean(&[1.0, 2.0, 6.0]), 3.0);
    assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    assert!(median(&[]).is_nan());
    assert_eq!(spread(&[2.0, 8.0, 4.0]), 4.0);
}
