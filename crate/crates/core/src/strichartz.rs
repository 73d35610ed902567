// SPDX-License-Identifier: Apache-2.0
//! Space-time norms of linear flows and their growth in the data frequency.

use std::io::Write;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{lp_norm, sobolev_norm, Grid, TorusField};
use crate::propagator::{free_propagate, GeneratorKind, SharpFlow};
use crate::stats::{linear_fit, LinearFit};

/// Minimum number of time samples.
pub const MIN_TIME_SAMPLES: usize = 32;
pub const DEFAULT_TIME_SAMPLES: usize = 128;

/// Seed salt so that shells of different `N` draw independent coefficients.
const SHELL_SALT: u64 = 0x5f3c_2a71_9d4e_b601;

/// `(∫ ||⟨∇⟩^σ u(t)||^p_{L^q} dt)^{1/p}` by the trapezoid rule on the sample times.
pub fn spacetime_norm(samples: &[TorusField], times: &[f64], p: f64, q: f64, sigma: f64) -> f64 {
    let vals: Vec<f64> = samples
        .iter()
        .map(|u| {
            let v = if sigma == 0.0 { u.clone() } else { u.bessel(sigma) };
            lp_norm(&v, q).powf(p)
        })
        .collect();
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (vals[i] + vals[i - 1]);
    }
    acc.powf(1.0 / p)
}

/// `n_t` equally spaced times on `[a, b]`, endpoints included.
pub fn time_grid(a: f64, b: f64, n_t: usize) -> Vec<f64> {
    (0..n_t).map(|i| a + (b - a) * i as f64 / (n_t - 1) as f64).collect()
}

/// Complex Gaussian coefficients on `N/2 < |k| ≤ N` (Nyquist layer excluded), normalized to `||u||_{H^s} = 1`.
pub fn shell_data(grid: Grid, n: f64, seed: u64, s: f64) -> Result<TorusField> {
    let mut rng = crate::noise::rng(seed ^ SHELL_SALT.wrapping_mul(n.to_bits()));
    let t = grid.tables();
    let mut c = vec![Complex64::default(); grid.len()];
    let (lo, hi) = (0.25 * n * n, n * n);
    let mut any = false;
    for i in 0..grid.len() {
        let k2 = t.k2[i];
        if k2 <= lo || k2 > hi || i64::from(t.linf[i]) >= grid.half() {
            continue;
        }
        c[i] = crate::noise::complex_gaussian(&mut rng);
        any = true;
    }
    if !any {
        return Err(Error::Config(format!("shell {}/2 < |k| <= {} is empty on {grid}", n, n)));
    }
    let f = TorusField::from_coeffs(grid, c, false)?;
    Ok(f.scale(1.0 / sobolev_norm(&f, s)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interval {
    /// `[0, 1]`.
    Unit,
    /// `[0, 1/N]`.
    Short,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum PassRule {
    /// `slope ≤ value`.
    AtMost(f64),
    /// `|slope - theory| ≤ value`.
    Within(f64),
}

impl PassRule {
    pub fn check(&self, slope: f64, theory: f64) -> bool {
        match *self {
            PassRule::AtMost(v) => slope <= v,
            PassRule::Within(v) => (slope - theory).abs() <= v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub generator: GeneratorKind,
    pub d: usize,
    /// Time exponent.
    pub p: f64,
    /// Space exponent.
    pub q: f64,
    pub sigma: f64,
    pub n_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_t: usize,
    pub interval: Interval,
    /// Sobolev index of the data normalization.
    pub data_index: f64,
    pub theory_slope: f64,
    pub rule: PassRule,
    /// Grid side for the free flow; `None` picks `max(32, 4N)` per `N`.
    pub m: Option<usize>,
}

impl ScalingConfig {
    fn validate(&self) -> Result<()> {
        if self.n_t < MIN_TIME_SAMPLES {
            return Err(Error::Config(format!("n_t must be at least {MIN_TIME_SAMPLES}, got {}", self.n_t)));
        }
        if self.n_list.len() < 2 || self.seeds.is_empty() {
            return Err(Error::Config("a slope needs at least two N values and one seed".into()));
        }
        if !(self.p >= 1.0 && self.q >= 1.0) {
            return Err(Error::Config(format!("exponents must be at least 1, got p = {}, q = {}", self.p, self.q)));
        }
        Ok(())
    }
}

/// Free Schrödinger group, Thm 2.4 normalization (`L²` data, `L^p_t L^p_x`).
pub fn laplacian_config(d: usize, p: f64, n_list: Vec<f64>, seeds: Vec<u64>) -> Result<ScalingConfig> {
    let ok = match d {
        2 => p >= 4.0,
        3 => p >= 10.0 / 3.0 - 1e-12,
        _ => false,
    };
    if !ok {
        return Err(Error::Config(format!("need d = 2 with p >= 4 or d = 3 with p >= 10/3, got d = {d}, p = {p}")));
    }
    let theory = d as f64 / 2.0 - (d as f64 + 2.0) / p;
    let tol = if theory.abs() < 1e-12 { PassRule::AtMost(if d == 2 { 0.2 } else { 0.25 }) } else { PassRule::AtMost(theory + 0.2) };
    Ok(ScalingConfig {
        generator: GeneratorKind::Free,
        d,
        p,
        q: p,
        sigma: 0.0,
        n_list,
        seeds,
        n_t: DEFAULT_TIME_SAMPLES,
        interval: Interval::Unit,
        data_index: 0.0,
        theory_slope: theory,
        rule: tol,
        m: None,
    })
}

/// Same ensembles on `[0, 1/N]`; the theory slope drops by `1/p`.
pub fn short_time_config(d: usize, p: f64, n_list: Vec<f64>, seeds: Vec<u64>) -> Result<ScalingConfig> {
    let mut c = laplacian_config(d, p, n_list, seeds)?;
    c.interval = Interval::Short;
    c.theory_slope -= 1.0 / p;
    c.rule = PassRule::Within(0.2);
    Ok(c)
}

/// `||e^{-itH♯}u♯||_{L^r W^{σ,r}}` against `||u♯||_{H^{σ+1-4/r}}` in 2d.
pub fn anderson2d_config(r: f64, sigma: f64, n_list: Vec<f64>, seeds: Vec<u64>, tol: f64) -> Result<ScalingConfig> {
    if r < 4.0 {
        return Err(Error::Config(format!("need r >= 4, got {r}")));
    }
    Ok(ScalingConfig {
        generator: GeneratorKind::Anderson2d,
        d: 2,
        p: r,
        q: r,
        sigma,
        n_list,
        seeds,
        n_t: DEFAULT_TIME_SAMPLES,
        interval: Interval::Unit,
        data_index: sigma + 1.0 - 4.0 / r,
        theory_slope: 0.0,
        rule: PassRule::AtMost(tol),
        m: None,
    })
}

/// `||e^{-itH♯}u♯||_{L^p W^{σ,p}}` against `||u♯||_{H^{σ+2-5/p}}` in 3d.
pub fn anderson3d_config(p: f64, sigma: f64, n_list: Vec<f64>, seeds: Vec<u64>, tol: f64) -> Result<ScalingConfig> {
    if p < 10.0 / 3.0 - 1e-12 {
        return Err(Error::Config(format!("need p >= 10/3, got {p}")));
    }
    Ok(ScalingConfig {
        generator: GeneratorKind::Anderson3d,
        d: 3,
        p,
        q: p,
        sigma,
        n_list,
        seeds,
        n_t: DEFAULT_TIME_SAMPLES,
        interval: Interval::Unit,
        data_index: sigma + 2.0 - 5.0 / p,
        theory_slope: 0.0,
        rule: PassRule::AtMost(tol),
        m: None,
    })
}

/// One `(N, seed)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub generator: GeneratorKind,
    pub d: usize,
    pub p: f64,
    pub sigma: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub seed: u64,
    pub norm: f64,
    pub data_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NStats {
    #[serde(rename = "N")]
    pub n: f64,
    pub mean_log: f64,
    pub std_log: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub cells: Vec<CellResult>,
    pub per_n: Vec<NStats>,
    pub slope: f64,
    pub stderr: f64,
    pub theory_slope: f64,
    pub pass: bool,
}

impl ScalingReport {
    pub fn cells_csv(&self) -> String {
        let mut out = Vec::new();
        writeln!(out, "generator,d,p,sigma,N,seed,norm,data_norm").expect("in memory");
        for c in &self.cells {
            let gen = serde_json::to_value(c.generator).expect("enum");
            writeln!(
                out,
                "{},{},{},{},{},{},{:.17e},{:.17e}",
                gen.as_str().unwrap_or("?"),
                c.d,
                c.p,
                c.sigma,
                c.n,
                c.seed,
                c.norm,
                c.data_norm
            )
            .expect("in memory");
        }
        String::from_utf8(out).expect("ascii")
    }

    /// `{slope, stderr, theory_slope, pass}` plus the configuration.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "stderr": self.stderr,
            "theory_slope": self.theory_slope,
            "pass": self.pass,
            "config": self.config,
        })
    }
}

fn interval_end(c: &ScalingConfig, n: f64) -> f64 {
    match c.interval {
        Interval::Unit => 1.0,
        Interval::Short => 1.0 / n,
    }
}

/// Runs every `(N, seed)` cell. `flow` is ignored for the free generator.
pub fn run_scaling(config: &ScalingConfig, flow: Option<&SharpFlow>) -> Result<ScalingReport> {
    config.validate()?;
    let cells_in: Vec<(f64, u64)> =
        config.n_list.iter().flat_map(|&n| config.seeds.iter().map(move |&s| (n, s))).collect();
    let cells: Vec<CellResult> = cells_in
        .par_iter()
        .map(|&(n, seed)| {
            let times = time_grid(0.0, interval_end(config, n), config.n_t);
            let (data, samples) = match (config.generator, flow) {
                (GeneratorKind::Free, _) => {
                    let m = config.m.unwrap_or_else(|| (4.0 * n).ceil().max(32.0) as usize);
                    let m = m + m % 2;
                    let grid = Grid::new(config.d, m)?;
                    let data = shell_data(grid, n, seed, config.data_index)?;
                    let samples: Vec<TorusField> = times.iter().map(|&t| free_propagate(&data, t)).collect();
                    (data, samples)
                }
                (_, Some(sf)) => {
                    if sf.flow.kind() != config.generator {
                        return Err(Error::Config("flow does not match the configured generator".into()));
                    }
                    let grid = sf.flow.matrix_flow().expect("matrix flow").matrix.modes().grid();
                    let data = shell_data(grid, n, seed, config.data_index)?;
                    let samples = sf.sharp_propagate_many(&data, &times)?;
                    (data, samples)
                }
                (_, None) => return Err(Error::Config("an Anderson scaling run needs an operator".into())),
            };
            Ok(CellResult {
                generator: config.generator,
                d: config.d,
                p: config.p,
                sigma: config.sigma,
                n,
                seed,
                norm: spacetime_norm(&samples, &times, config.p, config.q, config.sigma),
                data_norm: sobolev_norm(&data, config.data_index),
            })
        })
        .collect::<Result<_>>()?;
    Ok(summarize(config.clone(), cells))
}

pub fn summarize(config: ScalingConfig, cells: Vec<CellResult>) -> ScalingReport {
    let xs: Vec<f64> = cells.iter().map(|c| c.n.ln()).collect();
    let ys: Vec<f64> = cells.iter().map(|c| (c.norm / c.data_norm).ln()).collect();
    let LinearFit { slope, slope_stderr, .. } = linear_fit(&xs, &ys);
    let per_n = config
        .n_list
        .iter()
        .map(|&n| {
            let v: Vec<f64> =
                cells.iter().filter(|c| c.n == n).map(|c| (c.norm / c.data_norm).ln()).collect();
            let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len().max(2) - 1) as f64;
            NStats { n, mean_log: mean, std_log: var.sqrt() }
        })
        .collect();
    let pass = config.rule.check(slope, config.theory_slope);
    ScalingReport { theory_slope: config.theory_slope, config, cells, per_n, slope, stderr: slope_stderr, pass }
}
