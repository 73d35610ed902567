// SPDX-License-Identifier: Apache-2.0
//! Picard iteration for the paracontrolled ansatz `u = T(u) + u♯` with `T` linear.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{sobolev_norm, TorusField};
use crate::galerkin::ModeSet;

/// Iteration controls for `Γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationControl {
    /// Sobolev index of the stopping norm.
    pub norm_index: f64,
    /// Stop when the step falls below `tol · ||u♯||`.
    pub tol: f64,
    pub max_iter: usize,
}

/// Outcome of one `Γ` solve.
#[derive(Clone, Debug)]
pub struct GammaSolve {
    pub field: TorusField,
    /// Norms of successive steps `||u_{n+1} - u_n||`.
    pub steps: Vec<f64>,
}

impl GammaSolve {
    /// `max d_{n+1}/d_n` over the steps after the first two.
    pub fn contraction(&self) -> f64 {
        ratio_tail(&self.steps)
    }
}

fn ratio_tail(steps: &[f64]) -> f64 {
    let floor = steps.first().copied().unwrap_or(0.0) * 1e-13;
    steps
        .windows(2)
        .skip(1)
        .filter(|w| w[0] > floor)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max)
}

/// Solves `u = map(u) + u♯` from `u₀ = u♯`.
pub fn solve(
    u_sharp: &TorusField,
    map: impl Fn(&TorusField) -> Result<TorusField>,
    ctl: &IterationControl,
    cutoff: usize,
) -> Result<GammaSolve> {
    let scale = sobolev_norm(u_sharp, ctl.norm_index);
    let mut u = u_sharp.clone();
    let mut steps = Vec::new();
    if scale == 0.0 {
        return Ok(GammaSolve { field: u, steps });
    }
    for n in 0..ctl.max_iter {
        let next = map(&u)?.add(u_sharp);
        let d = sobolev_norm(&next.sub(&u), ctl.norm_index);
        u = next;
        steps.push(d);
        if d <= ctl.tol * scale {
            return Ok(GammaSolve { field: u, steps });
        }
        if n >= 2 {
            let ratio = d / steps[n - 1];
            if ratio >= 1.0 {
                return Err(Error::NonContraction { ratio, iteration: n, cutoff });
            }
        }
    }
    let ratio = ratio_tail(&steps);
    Err(Error::NonContraction { ratio, iteration: ctl.max_iter, cutoff })
}

/// Largest tail ratio of `d_n = ||Tⁿ⁺¹ u♯||` over `iterations` steps, maximized over probes.
pub fn measure_contraction(
    probes: &[TorusField],
    map: impl Fn(&TorusField) -> Result<TorusField>,
    norm_index: f64,
    iterations: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in probes {
        let mut v = p.clone();
        let mut steps = Vec::with_capacity(iterations);
        for _ in 0..iterations {
            v = map(&v)?;
            let d = sobolev_norm(&v, norm_index);
            steps.push(d);
            if d == 0.0 {
                break;
            }
        }
        worst = worst.max(ratio_tail(&steps));
    }
    Ok(worst)
}

/// Random field in `V` with coefficient envelope `(1 + |k|²)^{-decay/2}`, normalized in `L²`.
pub fn random_smooth(modes: &ModeSet, seed: u64, decay: f64) -> TorusField {
    let mut rng = crate::noise::rng(seed);
    let grid = modes.grid();
    let t = grid.tables();
    let mut c = vec![Complex64::default(); grid.len()];
    for &i in modes.indices() {
        let i = i as usize;
        let j = t.neg[i] as usize;
        if j < i {
            continue;
        }
        let w = (1.0 + t.k2[i]).powf(-0.5 * decay);
        if i == j {
            let z = crate::noise::complex_gaussian(&mut rng);
            c[i] = Complex64::new(z.re * w, 0.0);
        } else {
            let z = crate::noise::complex_gaussian(&mut rng) * w;
            c[i] = z;
            c[j] = z.conj();
        }
    }
    let f = TorusField::from_coeffs(grid, c, true).expect("grid-sized");
    let n = f.norm_l2();
    if n == 0.0 {
        f
    } else {
        f.scale(1.0 / n)
    }
}
