// SPDX-License-Identifier: Apache-2.0
//! Defocusing cubic NLS `(i∂_t - H)u = -u|u|²` on the 2d torus.
//!
//! The state lives on the full grid. The linear generator is the Galerkin
//! matrix `A` on `V` and the free diagonal `Δ - c - shift` off `V`, so the
//! linear flow is unitary on the grid. The nonlinear sub-flow solves
//! `i∂_t u = -|u|²u`, i.e. `u ← u e^{+i|u|²τ}` pointwise, which keeps `|u|`
//! fixed at every grid point.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anderson2d::AndersonOperator2d;
use crate::error::{Error, Result};
use crate::fourier::{lp_norm, sobolev_norm, wsp_norm, TorusField, FOUR_PI2};
use crate::galerkin::Spectral;
use crate::propagator::GAUSS_LEGENDRE_4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Strang,
    Picard,
}

/// Intervals of the Picard time grid.
pub const PICARD_INTERVALS: usize = 64;

/// `u e^{+i|u|²τ}` pointwise.
pub fn nonlinear_phase(u: &TorusField, tau: f64) -> TorusField {
    u.map_values(|z| z * Complex64::from_polar(1.0, z.norm_sqr() * tau))
}

/// `|u|²u` pointwise on the grid.
pub fn cubic(u: &TorusField) -> TorusField {
    u.map_values(|z| z * z.norm_sqr())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub hs: f64,
    /// `(∫_0^t ||u||⁴_{W^{σ,4}})^{1/4}` by the trapezoid rule on ledger times.
    pub l4w_accum: f64,
}

#[derive(Clone, Debug)]
pub struct EvolutionState {
    pub t: f64,
    pub u: TorusField,
    pub u_sharp: TorusField,
    pub ledger: Vec<LedgerRow>,
}

pub fn ledger_csv(rows: &[LedgerRow]) -> String {
    let mut out = Vec::new();
    writeln!(out, "t,mass,energy,Hs,L4W_accum").expect("in memory");
    for r in rows {
        writeln!(out, "{:.12e},{:.17e},{:.17e},{:.17e},{:.17e}", r.t, r.mass, r.energy, r.hs, r.l4w_accum)
            .expect("in memory");
    }
    String::from_utf8(out).expect("ascii")
}

/// Outcome of the Picard iteration.
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub u: TorusField,
    pub u_sharp: TorusField,
    /// `max_nodes ||u_{n+1} - u_n||_{L²}` per iteration.
    pub differences: Vec<f64>,
}

impl PicardOutcome {
    /// Largest ratio of successive differences, ignoring the rounding floor.
    pub fn contraction(&self) -> f64 {
        let floor = self.differences.first().copied().unwrap_or(0.0) * 1e-12;
        self.differences
            .windows(2)
            .filter(|w| w[1] > floor)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

/// The linear part, its flow and the change of variables to sharp coordinates.
#[derive(Clone, Debug)]
pub struct NlsSystem<'a> {
    op: &'a AndersonOperator2d,
    spectral: Arc<Spectral>,
    /// Row-major copy of the eigenvector matrix.
    vectors: Vec<f64>,
    offset: f64,
}

impl<'a> NlsSystem<'a> {
    pub fn new(op: &'a AndersonOperator2d) -> Result<Self> {
        let spectral = op.matrix().spectral()?;
        let n = spectral.values.len();
        let mut vectors = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                vectors[i * n + j] = spectral.vectors[(i, j)];
            }
        }
        Ok(Self { op, spectral, vectors, offset: op.matrix().offset() })
    }

    pub fn operator(&self) -> &AndersonOperator2d {
        self.op
    }

    fn split(&self, u: &TorusField) -> (Vec<Complex64>, TorusField) {
        let modes = self.op.modes();
        let inside = modes.gather(u);
        let outside = u.sub(&modes.scatter(&inside, false));
        (inside, outside)
    }

    fn eigen_flow(&self, x: &[Complex64], t: f64) -> Vec<Complex64> {
        let n = x.len();
        let r = self.op.modes().to_real_basis(x);
        let mut y = vec![Complex64::default(); n];
        for (i, ri) in r.iter().enumerate() {
            let row = &self.vectors[i * n..(i + 1) * n];
            for (yj, &uij) in y.iter_mut().zip(row) {
                *yj += ri * uij;
            }
        }
        for (yj, &l) in y.iter_mut().zip(&self.spectral.values) {
            *yj *= Complex64::from_polar(1.0, -l * t);
        }
        let z: Vec<Complex64> = (0..n)
            .map(|i| self.vectors[i * n..(i + 1) * n].iter().zip(&y).map(|(&a, b)| b * a).sum())
            .collect();
        self.op.modes().from_real_basis(&z)
    }

    /// `e^{-itA'} u` on the whole grid.
    pub fn linear(&self, u: &TorusField, t: f64) -> TorusField {
        let (inside, outside) = self.split(u);
        let k2 = u.grid().tables();
        let off = self.offset;
        let rest = outside.map_coeffs(|i, c| c * Complex64::from_polar(1.0, (FOUR_PI2 * k2.k2[i] + off) * t));
        self.op.modes().scatter(&self.eigen_flow(&inside, t), false).add(&rest)
    }

    /// `A' u`.
    pub fn generator_apply(&self, u: &TorusField) -> Result<TorusField> {
        let (inside, outside) = self.split(u);
        let v = self.op.matrix().apply(&self.op.modes().scatter(&inside, u.is_real()))?;
        let k2 = u.grid().tables();
        let off = self.offset;
        Ok(v.add(&outside.map_coeffs(|i, c| c * (-(FOUR_PI2 * k2.k2[i]) - off))))
    }

    /// `½⟨-A'u, u⟩`.
    pub fn quadratic_energy(&self, u: &TorusField) -> Result<f64> {
        Ok(-0.5 * self.generator_apply(u)?.inner(u).re)
    }

    /// `E(u) = ½⟨-A'u, u⟩ + ¼||u||⁴_{L⁴}`.
    pub fn energy(&self, u: &TorusField) -> Result<f64> {
        Ok(self.quadratic_energy(u)? + 0.25 * lp_norm(u, 4.0).powi(4))
    }

    /// `||u||_{D(√-H)} = ⟨-A'u, u⟩^{1/2}`.
    pub fn form_norm(&self, u: &TorusField) -> Result<f64> {
        Ok((2.0 * self.quadratic_energy(u)?).max(0.0).sqrt())
    }

    /// `Γ` on `V`, identity off `V`.
    pub fn lift(&self, u_sharp: &TorusField) -> Result<TorusField> {
        let modes = self.op.modes();
        let inside = modes.project(u_sharp);
        Ok(self.op.gamma(&inside)?.add(&u_sharp.sub(&inside)))
    }

    pub fn lower(&self, u: &TorusField) -> Result<TorusField> {
        let modes = self.op.modes();
        let inside = modes.project(u);
        Ok(self.op.gamma_inverse(&inside)?.add(&u.sub(&inside)))
    }

    /// One Strang step: half nonlinear, full linear, half nonlinear.
    pub fn strang_step(&self, u: &TorusField, dt: f64) -> TorusField {
        let u = nonlinear_phase(u, 0.5 * dt);
        let u = self.linear(&u, dt);
        nonlinear_phase(&u, 0.5 * dt)
    }

    /// Strang splitting to `t_final` with `steps` equal steps; ledger every `stride` steps.
    pub fn strang(&self, u0: &TorusField, t_final: f64, steps: usize, s: f64, sigma: f64, stride: usize) -> Result<EvolutionState> {
        if steps == 0 {
            return Err(Error::Config("at least one time step is required".into()));
        }
        let dt = t_final / steps as f64;
        let stride = stride.max(1);
        let mut u = u0.clone();
        let mut ledger = Vec::new();
        let mut acc = 0.0;
        let mut last: Option<(f64, f64)> = None;
        let mut record = |t: f64, u: &TorusField, ledger: &mut Vec<LedgerRow>| -> Result<()> {
            let w = wsp_norm(u, sigma, 4.0).powi(4);
            if let Some((t0, w0)) = last {
                acc += 0.5 * (t - t0) * (w + w0);
            }
            last = Some((t, w));
            ledger.push(LedgerRow {
                t,
                mass: u.norm_l2().powi(2),
                energy: self.energy(u)?,
                hs: sobolev_norm(&self.lower(u)?, s),
                l4w_accum: acc.powf(0.25),
            });
            Ok(())
        };
        record(0.0, &u, &mut ledger)?;
        for n in 1..=steps {
            u = self.strang_step(&u, dt);
            if n % stride == 0 || n == steps {
                record(n as f64 * dt, &u, &mut ledger)?;
            }
        }
        let u_sharp = self.lower(&u)?;
        Ok(EvolutionState { t: t_final, u, u_sharp, ledger })
    }

    /// Picard iteration of the mild formulation on a uniform grid of
    /// `intervals` panels with 4-stage Gauss collocation in the interaction picture.
    pub fn picard(&self, u0_sharp: &TorusField, t_final: f64, intervals: usize, max_iter: usize, tol: f64) -> Result<PicardOutcome> {
        let u0 = self.lift(u0_sharp)?;
        let h = t_final / intervals as f64;
        let c: Vec<f64> = GAUSS_LEGENDRE_4.iter().map(|&(x, _)| 0.5 * (1.0 + x)).collect();
        let b: Vec<f64> = GAUSS_LEGENDRE_4.iter().map(|&(_, w)| 0.5 * w).collect();
        let a = collocation_matrix(&c);
        let nodes: Vec<f64> = (0..intervals).flat_map(|p| c.iter().map(move |ci| (p as f64 + ci) * h)).collect();
        let mut u: Vec<TorusField> = nodes.par_iter().map(|&t| self.linear(&u0, t)).collect();
        let mut differences = Vec::new();
        let scale = u0.norm_l2().max(f64::MIN_POSITIVE);
        for it in 0..max_iter {
            let g: Vec<TorusField> = nodes
                .par_iter()
                .zip(u.par_iter())
                .map(|(&t, ut)| self.linear(&cubic(ut), -t).scale_complex(Complex64::i()))
                .collect();
            let mut v_start = u0.clone();
            let mut v_nodes = Vec::with_capacity(nodes.len());
            for p in 0..intervals {
                let gp = &g[4 * p..4 * p + 4];
                for row in &a {
                    let mut v = v_start.clone();
                    for (aij, gj) in row.iter().zip(gp) {
                        v = v.axpy(h * aij, gj);
                    }
                    v_nodes.push(v);
                }
                for (bj, gj) in b.iter().zip(gp) {
                    v_start = v_start.axpy(h * bj, gj);
                }
            }
            let next: Vec<TorusField> = nodes.par_iter().zip(v_nodes.par_iter()).map(|(&t, v)| self.linear(v, t)).collect();
            let d = next.iter().zip(&u).map(|(x, y)| x.sub(y).norm_l2()).fold(0.0, f64::max);
            u = next;
            differences.push(d);
            if d <= tol * scale {
                let u_final = self.linear(&v_start, t_final);
                let u_sharp = self.lower(&u_final)?;
                return Ok(PicardOutcome { u: u_final, u_sharp, differences });
            }
            if it >= 2 && d >= differences[it - 1] {
                return Err(Error::Divergence { ratio: d / differences[it - 1], iteration: it });
            }
        }
        let n = differences.len();
        Err(Error::Divergence { ratio: differences[n - 1] / differences[n - 2], iteration: n })
    }
}

/// `a_ij = ∫_0^{c_i} ℓ_j`, with `ℓ_j` the Lagrange basis on the nodes `c`.
fn collocation_matrix(c: &[f64]) -> Vec<Vec<f64>> {
    let lagrange = |j: usize, x: f64| {
        c.iter().enumerate().filter(|&(m, _)| m != j).map(|(_, &cm)| (x - cm) / (c[j] - cm)).product::<f64>()
    };
    c.iter()
        .map(|&ci| {
            (0..c.len())
                .map(|j| GAUSS_LEGENDRE_4.iter().map(|&(x, w)| 0.5 * ci * w * lagrange(j, 0.5 * ci * (1.0 + x))).sum())
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LwpSample {
    pub seed: u64,
    pub delta: f64,
    pub quotient: f64,
    pub l4w: f64,
}

/// Lipschitz quotient `sup_t ||u♯₁(t) - u♯₂(t)||_{H^s} / δ` for data `u0♯` and `u0♯ + δ h`,
/// with `||h||_{H^s} = 1`, evolved by Strang splitting.
pub fn lipschitz_quotient(
    sys: &NlsSystem,
    u0_sharp: &TorusField,
    h: &TorusField,
    delta: f64,
    t_final: f64,
    steps: usize,
    s: f64,
    sigma: f64,
) -> Result<(f64, f64)> {
    let h = h.scale(1.0 / sobolev_norm(h, s));
    let a = sys.lift(u0_sharp)?;
    let b = sys.lift(&u0_sharp.add(&h.scale(delta)))?;
    let dt = t_final / steps as f64;
    let (mut ua, mut ub) = (a, b);
    let mut q: f64 = 0.0;
    let mut acc = 0.0;
    let mut w_prev = wsp_norm(&ua, sigma, 4.0).powi(4);
    for _ in 0..steps {
        ua = sys.strang_step(&ua, dt);
        ub = sys.strang_step(&ub, dt);
        let w = wsp_norm(&ua, sigma, 4.0).powi(4);
        acc += 0.5 * dt * (w + w_prev);
        w_prev = w;
        if delta > 0.0 {
            let d = sobolev_norm(&sys.lower(&ua)?.sub(&sys.lower(&ub)?), s);
            q = q.max(d / delta);
        }
    }
    Ok((q, acc.powf(0.25)))
}
