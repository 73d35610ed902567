// SPDX-License-Identifier: Apache-2.0
//! Time evolution: the free group `e^{-itΔ}`, the Anderson group `e^{-itA}`
//! generated by the regularized Galerkin matrix, the sharpened groups and the
//! Duhamel difference identity.
//!
//! Sign convention: `e^{-itΔ}` multiplies `coeff(k)` by `e^{+i(2π|k|)²t}`.

use std::io::Write;
use std::path::Path;

use faer::{Mat, Side};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anderson2d::AndersonOperator2d;
use crate::anderson3d::AndersonOperator3d;
use crate::error::{Error, Result};
use crate::fourier::{io::write_atomic, sobolev_norm, TorusField, FOUR_PI2};
use crate::galerkin::GalerkinOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Free,
    Anderson2d,
    Anderson3d,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SpectralMultiplier,
    DenseEigendecomposition,
    Krylov,
}

/// Largest radius propagated by dense eigendecomposition unless asked otherwise.
pub const DENSE_RADIUS_2D: f64 = 32.0;
pub const DENSE_RADIUS_3D: f64 = 10.0;
pub const KRYLOV_DIM: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorPlan {
    pub generator: GeneratorKind,
    pub method: Method,
    /// Mode radius of the matrix methods.
    pub k_radius: Option<f64>,
    pub krylov_dim: usize,
    /// Krylov substep; by default `krylov_dim / (2 ||A||)`.
    pub substep_dt: Option<f64>,
}

impl PropagatorPlan {
    pub fn free() -> Self {
        Self {
            generator: GeneratorKind::Free,
            method: Method::SpectralMultiplier,
            k_radius: None,
            krylov_dim: KRYLOV_DIM,
            substep_dt: None,
        }
    }

    /// Dense up to the default radius for the dimension, Krylov beyond.
    pub fn for_matrix(generator: GeneratorKind, k_radius: f64) -> Self {
        let limit = if generator == GeneratorKind::Anderson3d { DENSE_RADIUS_3D } else { DENSE_RADIUS_2D };
        let method = if k_radius <= limit { Method::DenseEigendecomposition } else { Method::Krylov };
        Self { generator, method, k_radius: Some(k_radius), krylov_dim: KRYLOV_DIM, substep_dt: None }
    }
}

/// `e^{-itΔ} u`.
pub fn free_propagate(u: &TorusField, t: f64) -> TorusField {
    let k2 = u.grid().tables();
    u.map_coeffs(|i, c| c * Complex64::from_polar(1.0, FOUR_PI2 * k2.k2[i] * t))
}

/// `e^{-itA} v` for Hermitian `A` by Lanczos with full reorthogonalization.
pub fn lanczos_expm(apply: impl Fn(&[Complex64]) -> Vec<Complex64>, v: &[Complex64], t: f64, m: usize) -> Vec<Complex64> {
    let n = v.len();
    let beta0 = norm(v);
    if beta0 == 0.0 || t == 0.0 {
        return v.to_vec();
    }
    let mut q: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..m.min(n) {
        let mut w = apply(&q[j]);
        alpha.push(dot(&q[j], &w).re);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                w.iter_mut().zip(qi).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        if j + 1 == m.min(n) || b <= 1e-13 * alpha.iter().fold(1.0f64, |a, x| a.max(x.abs())) {
            break;
        }
        beta.push(b);
        q.push(w.iter().map(|x| x / b).collect());
    }
    let k = alpha.len();
    let tri = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let evd = tri.self_adjoint_eigen(Side::Lower).expect("small symmetric eigenproblem");
    let s = evd.S().column_vector();
    let u = evd.U();
    let coef: Vec<Complex64> = (0..k)
        .map(|i| {
            (0..k)
                .map(|l| Complex64::from_polar(u[(i, l)] * u[(0, l)], -s[l] * t))
                .sum::<Complex64>()
                * beta0
        })
        .collect();
    let mut out = vec![Complex64::default(); n];
    for (qi, c) in q.iter().zip(&coef) {
        out.iter_mut().zip(qi).for_each(|(o, y)| *o += c * y);
    }
    out
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `e^{-itA}` for a Galerkin matrix.
#[derive(Clone, Copy, Debug)]
pub struct MatrixFlow<'a> {
    pub matrix: &'a GalerkinOperator,
    pub method: Method,
    pub krylov_dim: usize,
    pub substep_dt: Option<f64>,
}

impl<'a> MatrixFlow<'a> {
    pub fn new(matrix: &'a GalerkinOperator, plan: &PropagatorPlan) -> Self {
        Self { matrix, method: plan.method, krylov_dim: plan.krylov_dim, substep_dt: plan.substep_dt }
    }

    fn norm_bound(&self) -> f64 {
        let modes = self.matrix.modes();
        let kmax = (0..modes.len()).map(|p| modes.k2(p)).fold(0.0, f64::max);
        FOUR_PI2 * kmax + self.matrix.offset().abs() + self.matrix.potential().max_abs()
    }

    fn substep(&self) -> f64 {
        self.substep_dt.unwrap_or(self.krylov_dim as f64 / (2.0 * self.norm_bound()))
    }

    /// Propagates mode coordinates from 0 to each time in `times` (any order).
    fn coords_many(&self, x: &[Complex64], times: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        let modes = self.matrix.modes();
        match self.method {
            Method::DenseEigendecomposition => {
                let spec = self.matrix.spectral()?;
                let n = x.len();
                let r = modes.to_real_basis(x);
                let u = spec.vectors.as_ref();
                let xm = Mat::<f64>::from_fn(n, 2, |i, j| if j == 0 { r[i].re } else { r[i].im });
                let y = u.transpose() * &xm;
                let mut z = Mat::<f64>::zeros(n, 2 * times.len());
                for (c, &t) in times.iter().enumerate() {
                    for i in 0..n {
                        let w = Complex64::new(y[(i, 0)], y[(i, 1)]) * Complex64::from_polar(1.0, -spec.values[i] * t);
                        z[(i, 2 * c)] = w.re;
                        z[(i, 2 * c + 1)] = w.im;
                    }
                }
                let out = u * &z;
                Ok((0..times.len())
                    .map(|c| {
                        let r: Vec<Complex64> =
                            (0..n).map(|i| Complex64::new(out[(i, 2 * c)], out[(i, 2 * c + 1)])).collect();
                        modes.from_real_basis(&r)
                    })
                    .collect())
            }
            Method::Krylov => {
                let h = self.substep();
                times
                    .par_iter()
                    .map(|&t| {
                        let steps = (t.abs() / h).ceil().max(1.0) as usize;
                        let dt = t / steps as f64;
                        let mut v = x.to_vec();
                        for _ in 0..steps {
                            v = lanczos_expm(|w| self.matrix.apply_coords(w), &v, dt, self.krylov_dim);
                        }
                        Ok(v)
                    })
                    .collect()
            }
            Method::SpectralMultiplier => {
                Err(Error::Config("the spectral multiplier only propagates the free group".into()))
            }
        }
    }

    /// `e^{-itA} u`; `u` must lie in the mode set.
    pub fn propagate(&self, u: &TorusField, t: f64) -> Result<TorusField> {
        Ok(self.propagate_many(u, &[t])?.pop().expect("one time"))
    }

    pub fn propagate_many(&self, u: &TorusField, times: &[f64]) -> Result<Vec<TorusField>> {
        let modes = self.matrix.modes();
        modes.require_inside(u)?;
        let x = modes.gather(u);
        let real = u.is_real() && times.iter().all(|&t| t == 0.0);
        Ok(self.coords_many(&x, times)?.iter().map(|y| modes.scatter(y, real)).collect())
    }

    /// `-Re⟨Au, u⟩`.
    pub fn energy(&self, u: &TorusField) -> Result<f64> {
        Ok(-self.matrix.apply(u)?.inner(u).re)
    }
}

/// A unitary group together with its sharpened version.
#[derive(Clone, Copy, Debug)]
pub enum Flow<'a> {
    Free,
    Anderson2d { op: &'a AndersonOperator2d, flow: MatrixFlow<'a> },
    Anderson3d { op: &'a AndersonOperator3d, flow: MatrixFlow<'a> },
}

impl<'a> Flow<'a> {
    pub fn anderson2d(op: &'a AndersonOperator2d, plan: &PropagatorPlan) -> Self {
        Flow::Anderson2d { op, flow: MatrixFlow::new(op.matrix(), plan) }
    }

    pub fn anderson3d(op: &'a AndersonOperator3d, plan: &PropagatorPlan) -> Self {
        Flow::Anderson3d { op, flow: MatrixFlow::new(op.matrix(), plan) }
    }

    /// Default plan for an operator's mode radius.
    pub fn anderson2d_default(op: &'a AndersonOperator2d) -> Self {
        let k = op.modes().radius().unwrap_or(f64::INFINITY);
        Self::anderson2d(op, &PropagatorPlan::for_matrix(GeneratorKind::Anderson2d, k))
    }

    pub fn anderson3d_default(op: &'a AndersonOperator3d) -> Self {
        let k = op.modes().radius().unwrap_or(f64::INFINITY);
        Self::anderson3d(op, &PropagatorPlan::for_matrix(GeneratorKind::Anderson3d, k))
    }

    pub fn kind(&self) -> GeneratorKind {
        match self {
            Flow::Free => GeneratorKind::Free,
            Flow::Anderson2d { .. } => GeneratorKind::Anderson2d,
            Flow::Anderson3d { .. } => GeneratorKind::Anderson3d,
        }
    }

    /// The shift subtracted from the generator, zero for the free group.
    pub fn shift(&self) -> f64 {
        match self {
            Flow::Free => 0.0,
            Flow::Anderson2d { op, .. } => op.shift(),
            Flow::Anderson3d { op, .. } => op.shift(),
        }
    }

    pub fn matrix_flow(&self) -> Option<&MatrixFlow<'a>> {
        match self {
            Flow::Free => None,
            Flow::Anderson2d { flow, .. } | Flow::Anderson3d { flow, .. } => Some(flow),
        }
    }

    /// `e^{-itH} u` in original coordinates.
    pub fn propagate(&self, u: &TorusField, t: f64) -> Result<TorusField> {
        Ok(self.propagate_many(u, &[t])?.pop().expect("one time"))
    }

    pub fn propagate_many(&self, u: &TorusField, times: &[f64]) -> Result<Vec<TorusField>> {
        match self.matrix_flow() {
            None => Ok(times.iter().map(|&t| free_propagate(u, t)).collect()),
            Some(f) => f.propagate_many(u, times),
        }
    }

    /// `-Re⟨Hu, u⟩` (`H = Δ` for the free group).
    pub fn energy(&self, u: &TorusField) -> Result<f64> {
        match self.matrix_flow() {
            None => Ok(-u.laplacian().inner(u).re),
            Some(f) => f.energy(u),
        }
    }

    /// Sharp data `u♯` to original coordinates: `Γ` in 2d, `Π e^W Γ` in 3d.
    pub fn lift(&self, u_sharp: &TorusField) -> Result<TorusField> {
        match self {
            Flow::Free => Ok(u_sharp.clone()),
            Flow::Anderson2d { op, .. } => op.gamma(u_sharp),
            Flow::Anderson3d { op, .. } => {
                let flat = op.gamma(u_sharp)?;
                Ok(op.modes().project(&op.exp_w_plus().mul_pointwise(&flat)))
            }
        }
    }

    /// Inverse of [`Flow::lift`] up to the projection onto `V`.
    pub fn lower(&self, u: &TorusField) -> Result<TorusField> {
        match self {
            Flow::Free => Ok(u.clone()),
            Flow::Anderson2d { op, .. } => op.gamma_inverse(u),
            Flow::Anderson3d { op, .. } => {
                let flat = op.modes().project(&op.exp_w_minus().mul_pointwise(u));
                op.gamma_inverse(&flat)
            }
        }
    }

    /// `e^{-itH♯} u♯`.
    pub fn sharp_propagate(&self, u_sharp: &TorusField, t: f64) -> Result<TorusField> {
        Ok(self.sharp_propagate_many(u_sharp, &[t])?.pop().expect("one time"))
    }

    pub fn sharp_propagate_many(&self, u_sharp: &TorusField, times: &[f64]) -> Result<Vec<TorusField>> {
        if let Flow::Free = self {
            return self.propagate_many(u_sharp, times);
        }
        let lifted = self.lift(u_sharp)?;
        let flows = self.propagate_many(&lifted, times)?;
        flows.par_iter().map(|u| self.lower(u)).collect()
    }
}

/// Nodes and weights of 4-point Gauss-Legendre quadrature on `[-1, 1]`.
pub const GAUSS_LEGENDRE_4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Composite Gauss-Legendre nodes and weights on `[a, b]` with `steps` panels.
pub fn composite_gauss(a: f64, b: f64, steps: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / steps as f64;
    (0..steps)
        .flat_map(|j| {
            let mid = a + (j as f64 + 0.5) * h;
            GAUSS_LEGENDRE_4.iter().map(move |&(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct DuhamelReport {
    pub lhs: TorusField,
    pub rhs: TorusField,
    /// `||lhs - rhs|| / max(||lhs||, ||rhs||)`.
    pub residual: f64,
}

/// Both sides of
/// `D(t) - e^{-i(t-t₀)Δ} D(t₀) = -i ∫_{t₀}^t e^{-i(t-s)Δ} (H♯ + shift - Δ) e^{-is(H♯ + shift)} u♯ ds`
/// with `D(t) = (e^{-it(H♯ + shift)} - e^{-itΔ}) u♯`.
pub fn duhamel_difference(flow: &Flow, u_sharp: &TorusField, t: f64, t0: f64, quad_steps: usize) -> Result<DuhamelReport> {
    if quad_steps < 8 {
        return Err(Error::Config(format!("quad_steps must be at least 8, got {quad_steps}")));
    }
    let grid = u_sharp.grid();
    let shift = flow.shift();
    let d = |s: f64| -> Result<TorusField> {
        let w = flow.sharp_propagate(u_sharp, s)?.scale_complex(Complex64::from_polar(1.0, -s * shift));
        Ok(w.sub(&free_propagate(u_sharp, s)))
    };
    let lhs = d(t)?.sub(&free_propagate(&d(t0)?, t - t0));
    let rhs = match flow {
        Flow::Free => TorusField::zeros(grid),
        Flow::Anderson3d { .. } => {
            return Err(Error::Config("the Duhamel identity is evaluated for the free and 2d generators".into()))
        }
        Flow::Anderson2d { op, flow: mf } => {
            let g = op.gamma(u_sharp)?;
            let nodes = composite_gauss(t0, t, quad_steps);
            let times: Vec<f64> = nodes.iter().map(|n| n.0).collect();
            let ws = mf.propagate_many(&g, &times)?;
            let terms: Vec<TorusField> = nodes
                .par_iter()
                .zip(ws.par_iter())
                .map(|(&(s, wt), w)| {
                    let w = w.scale_complex(Complex64::from_polar(1.0, -s * shift));
                    let aw = mf.matrix.apply(&w)?.add(&w.scale(shift));
                    let integrand = op.gamma_inverse(&aw)?.sub(&op.gamma_inverse(&w)?.laplacian());
                    Ok(free_propagate(&integrand, t - s).scale(wt))
                })
                .collect::<Result<_>>()?;
            let mut acc = TorusField::zeros(grid);
            for f in &terms {
                acc = acc.add(f);
            }
            acc.scale_complex(Complex64::new(0.0, -1.0))
        }
    };
    let scale = lhs.norm_l2().max(rhs.norm_l2());
    let residual = if scale == 0.0 { 0.0 } else { lhs.sub(&rhs).norm_l2() / scale };
    Ok(DuhamelReport { lhs, rhs, residual })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub hs: Vec<f64>,
}

/// Mass, energy and Sobolev norms of `e^{-itH} u0` on a time grid.
pub fn trajectory(flow: &Flow, u0: &TorusField, times: &[f64], s_list: &[f64]) -> Result<(Vec<TrajectoryRow>, Vec<TorusField>)> {
    let fields = flow.propagate_many(u0, times)?;
    let rows = times
        .par_iter()
        .zip(fields.par_iter())
        .map(|(&t, u)| {
            Ok(TrajectoryRow {
                t,
                mass: u.norm_l2().powi(2),
                energy: flow.energy(u)?,
                hs: s_list.iter().map(|&s| sobolev_norm(u, s)).collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok((rows, fields))
}

pub fn trajectory_csv(rows: &[TrajectoryRow], s_list: &[f64]) -> String {
    let mut out = Vec::new();
    write!(out, "t,mass,energy").expect("in memory");
    for s in s_list {
        write!(out, ",H^{s}").expect("in memory");
    }
    writeln!(out).expect("in memory");
    for r in rows {
        write!(out, "{:.12e},{:.17e},{:.17e}", r.t, r.mass, r.energy).expect("in memory");
        for h in &r.hs {
            write!(out, ",{h:.17e}").expect("in memory");
        }
        writeln!(out).expect("in memory");
    }
    String::from_utf8(out).expect("ascii")
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow], s_list: &[f64]) -> Result<()> {
    write_atomic(path, trajectory_csv(rows, s_list).as_bytes())
}

/// A linear map on the mode coordinates of `V`, stored densely.
#[derive(Clone, Debug)]
pub struct DenseMap {
    modes: std::sync::Arc<crate::galerkin::ModeSet>,
    /// Column-major, `n × n`.
    entries: Vec<Complex64>,
}

impl DenseMap {
    /// Tabulates `map` on the unit modes of `modes`.
    pub fn tabulate(
        modes: std::sync::Arc<crate::galerkin::ModeSet>,
        map: impl Fn(&TorusField) -> Result<TorusField> + Sync,
    ) -> Result<Self> {
        let n = modes.len();
        let cols: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|p| {
                let mut x = vec![Complex64::default(); n];
                x[p] = Complex64::new(1.0, 0.0);
                let out = map(&modes.scatter(&x, false))?;
                modes.require_inside(&out)?;
                Ok(modes.gather(&out))
            })
            .collect::<Result<_>>()?;
        Ok(Self { modes, entries: cols.concat() })
    }

    pub fn apply(&self, u: &TorusField) -> Result<TorusField> {
        self.modes.require_inside(u)?;
        let x = self.modes.gather(u);
        let n = x.len();
        let mut y = vec![Complex64::default(); n];
        for (col, xj) in self.entries.chunks_exact(n).zip(&x) {
            if *xj != Complex64::default() {
                y.iter_mut().zip(col).for_each(|(o, a)| *o += a * xj);
            }
        }
        Ok(self.modes.scatter(&y, false))
    }
}

/// A flow whose return map from original to sharp coordinates is tabulated once.
#[derive(Clone, Debug)]
pub struct SharpFlow<'a> {
    pub flow: Flow<'a>,
    lower: Option<DenseMap>,
}

impl<'a> SharpFlow<'a> {
    pub fn new(flow: Flow<'a>) -> Self {
        Self { flow, lower: None }
    }

    /// Tabulates `lower` on `V`; worthwhile when it is applied more than `dim V` times.
    pub fn tabulated(flow: Flow<'a>) -> Result<Self> {
        let lower = match flow.matrix_flow() {
            None => None,
            Some(mf) => Some(DenseMap::tabulate(mf.matrix.modes().clone(), |u| flow.lower(u))?),
        };
        Ok(Self { flow, lower })
    }

    pub fn sharp_propagate_many(&self, u_sharp: &TorusField, times: &[f64]) -> Result<Vec<TorusField>> {
        match &self.lower {
            None => self.flow.sharp_propagate_many(u_sharp, times),
            Some(map) => {
                let lifted = self.flow.lift(u_sharp)?;
                self.flow.propagate_many(&lifted, times)?.iter().map(|u| map.apply(u)).collect()
            }
        }
    }
}
