// SPDX-License-Identifier: Apache-2.0
//! Galerkin truncations `Π_V (Δ + V - c) Π_V` on a symmetric mode set `V`.
//!
//! The truncated operator is Hermitian and, for a real potential, real
//! symmetric in the basis `1, √2 cos(2πk·x), √2 sin(2πk·x)`. Dense spectral
//! data lives in that basis and is computed once per operator.

use std::sync::{Arc, OnceLock};

use faer::{Mat, Side};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{ensure_same_grid, Error, Result};
use crate::fourier::{Grid, TorusField, FOUR_PI2};
use crate::paraproducts::ProductEngine;

/// Largest side accepted by the dense eigensolver.
pub const DENSE_LIMIT: usize = 4000;

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModeShape {
    /// `|k| <= radius`.
    Disk(f64),
    /// Every mode off the Nyquist planes, `|k_a| <= M/2 - 1`.
    Interior,
}

/// A negation-symmetric set of grid modes.
#[derive(Debug)]
pub struct ModeSet {
    grid: Grid,
    shape: ModeShape,
    idx: Vec<u32>,
    pos: Vec<u32>,
    zero: Option<u32>,
    pairs: Vec<(u32, u32)>,
}

impl ModeSet {
    pub fn new(grid: Grid, shape: ModeShape) -> Result<Arc<Self>> {
        let lim = grid.half() - 1;
        if let ModeShape::Disk(r) = shape {
            if !(r >= 0.0) || r > lim as f64 {
                return Err(Error::Config(format!("mode radius {r} must lie in [0, {lim}] on grid {grid}")));
            }
        }
        let t = grid.tables();
        let mut idx = Vec::new();
        let mut pos = vec![ABSENT; grid.len()];
        for i in 0..grid.len() {
            let keep = t.linf[i] as i64 <= lim
                && match shape {
                    ModeShape::Disk(r) => t.k2[i] <= r * r,
                    ModeShape::Interior => true,
                };
            if keep {
                pos[i] = idx.len() as u32;
                idx.push(i as u32);
            }
        }
        let mut zero = None;
        let mut pairs = Vec::new();
        for &i in &idx {
            let j = t.neg[i as usize];
            if j == i {
                zero = Some(pos[i as usize]);
            } else if i < j {
                pairs.push((pos[i as usize], pos[j as usize]));
            }
        }
        Ok(Arc::new(Self { grid, shape, idx, pos, zero, pairs }))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn shape(&self) -> ModeShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    /// Output radius for a [`ProductEngine`] whose outputs land exactly in `V`.
    pub fn radius(&self) -> Option<f64> {
        match self.shape {
            ModeShape::Disk(r) => Some(r),
            ModeShape::Interior => None,
        }
    }

    pub fn engine(&self) -> ProductEngine {
        ProductEngine::new(self.grid).with_radius(self.radius())
    }

    /// Grid indices of the modes, in coordinate order.
    pub fn indices(&self) -> &[u32] {
        &self.idx
    }

    pub fn contains(&self, grid_index: usize) -> bool {
        self.pos[grid_index] != ABSENT
    }

    pub fn wavevector(&self, p: usize) -> [i64; 3] {
        self.grid.wavevector(self.idx[p] as usize)
    }

    pub fn k2(&self, p: usize) -> f64 {
        self.grid.tables().k2[self.idx[p] as usize]
    }

    pub fn gather(&self, f: &TorusField) -> Vec<Complex64> {
        let c = f.coeffs();
        self.idx.iter().map(|&i| c[i as usize]).collect()
    }

    pub fn scatter(&self, x: &[Complex64], real: bool) -> TorusField {
        let mut c = vec![Complex64::default(); self.grid.len()];
        for (&i, &v) in self.idx.iter().zip(x) {
            c[i as usize] = v;
        }
        TorusField::from_coeffs(self.grid, c, real).expect("mode set matches grid")
    }

    /// `Π_V f`.
    pub fn project(&self, f: &TorusField) -> TorusField {
        self.scatter(&self.gather(f), f.is_real())
    }

    /// `||(1-Π_V) f||_{L²} / ||f||_{L²}`.
    pub fn excess(&self, f: &TorusField) -> f64 {
        let total: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let outside: f64 = f
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.contains(*i))
            .map(|(_, c)| c.norm_sqr())
            .sum();
        (outside / total).sqrt()
    }

    /// Errors when more than a rounding-level fraction of `f` lies outside `V`.
    pub fn require_inside(&self, f: &TorusField) -> Result<()> {
        let excess = self.excess(f);
        if excess > 1e-12 {
            return Err(Error::Truncation { excess });
        }
        Ok(())
    }

    /// Coordinates in the cosine/sine basis (complex for non-real data).
    pub fn to_real_basis(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut x = Vec::with_capacity(self.len());
        let r = std::f64::consts::FRAC_1_SQRT_2;
        if let Some(z) = self.zero {
            x.push(v[z as usize]);
        }
        let i = Complex64::i();
        for &(p, q) in &self.pairs {
            let (a, b) = (v[p as usize], v[q as usize]);
            x.push((a + b) * r);
            x.push(i * (a - b) * r);
        }
        x
    }

    pub fn from_real_basis(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut v = vec![Complex64::default(); self.len()];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut n = 0;
        if let Some(z) = self.zero {
            v[z as usize] = x[0];
            n = 1;
        }
        let i = Complex64::i();
        for (m, &(p, q)) in self.pairs.iter().enumerate() {
            let (c, s) = (x[n + 2 * m], x[n + 2 * m + 1]);
            v[p as usize] = (c - i * s) * r;
            v[q as usize] = (c + i * s) * r;
        }
        v
    }

    /// `|k|²` of each real-basis vector.
    pub fn real_basis_k2(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        if let Some(z) = self.zero {
            out.push(self.k2(z as usize));
        }
        for &(p, _) in &self.pairs {
            let k2 = self.k2(p as usize);
            out.push(k2);
            out.push(k2);
        }
        out
    }

    fn real_basis_modes(&self) -> (bool, Vec<[i64; 3]>) {
        (self.zero.is_some(), self.pairs.iter().map(|&(p, _)| self.wavevector(p as usize)).collect())
    }
}

/// Coefficient of `f` at `k`, zero when `k` is not a representable frequency.
fn coeff_at(f: &TorusField, k: [i64; 3]) -> Complex64 {
    let g = f.grid();
    let h = g.half();
    let mut i = 0usize;
    for &c in k.iter().take(g.dim()) {
        if c <= -h || c > h {
            return Complex64::default();
        }
        i = i * g.m() + c.rem_euclid(g.m() as i64) as usize;
    }
    if k.iter().skip(g.dim()).any(|&c| c != 0) {
        return Complex64::default();
    }
    f.coeffs()[i]
}

/// Eigenpairs of the real-basis matrix, eigenvalues ascending.
#[derive(Debug)]
pub struct Spectral {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl Spectral {
    /// `U φ(D) Uᵀ x` for complex `x` in real-basis coordinates.
    pub fn apply_function(&self, x: &[Complex64], phi: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let n = x.len();
        let u = self.vectors.as_ref();
        let xm = Mat::<f64>::from_fn(n, 2, |i, j| if j == 0 { x[i].re } else { x[i].im });
        let y = u.transpose() * &xm;
        let mut z = Mat::<f64>::zeros(n, 2);
        for i in 0..n {
            let w = Complex64::new(y[(i, 0)], y[(i, 1)]) * phi(self.values[i]);
            z[(i, 0)] = w.re;
            z[(i, 1)] = w.im;
        }
        let out = u * &z;
        (0..n).map(|i| Complex64::new(out[(i, 0)], out[(i, 1)])).collect()
    }
}

/// `Π_V (Δ + potential - offset)` on `V`, with a real potential.
#[derive(Debug)]
pub struct GalerkinOperator {
    modes: Arc<ModeSet>,
    potential: TorusField,
    offset: f64,
    engine: ProductEngine,
    spectral: OnceLock<Arc<Spectral>>,
}

impl Clone for GalerkinOperator {
    fn clone(&self) -> Self {
        let out = Self::build(self.modes.clone(), self.potential.clone(), self.offset);
        if let Some(s) = self.spectral.get() {
            let _ = out.spectral.set(s.clone());
        }
        out
    }
}

impl GalerkinOperator {
    pub fn new(modes: Arc<ModeSet>, potential: TorusField, offset: f64) -> Result<Self> {
        ensure_same_grid(modes.grid(), potential.grid())?;
        if !potential.is_real() {
            return Err(Error::Config("Galerkin potential must be real-valued".into()));
        }
        Ok(Self::build(modes, potential, offset))
    }

    fn build(modes: Arc<ModeSet>, potential: TorusField, offset: f64) -> Self {
        let engine = modes.engine();
        Self { modes, potential, offset, engine, spectral: OnceLock::new() }
    }

    /// Same operator with another diagonal offset. Cached eigenvectors carry over.
    pub fn with_offset(&self, offset: f64) -> Self {
        let out = Self::build(self.modes.clone(), self.potential.clone(), offset);
        if let Some(s) = self.spectral.get() {
            let d = offset - self.offset;
            let shifted = Spectral {
                values: s.values.iter().map(|v| v - d).collect(),
                vectors: s.vectors.clone(),
            };
            let _ = out.spectral.set(Arc::new(shifted));
        }
        out
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn potential(&self) -> &TorusField {
        &self.potential
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    /// Applies the operator to `Π_V u`.
    pub fn apply(&self, u: &TorusField) -> Result<TorusField> {
        ensure_same_grid(self.modes.grid(), u.grid())?;
        let u = self.modes.project(u);
        let pu = self.engine.product(&self.potential, &u)?;
        Ok(self.modes.project(&u.laplacian().add(&pu).sub(&u.scale(self.offset))))
    }

    /// Action on mode coordinates.
    pub fn apply_coords(&self, x: &[Complex64]) -> Vec<Complex64> {
        let u = self.modes.scatter(x, false);
        let out = self.apply(&u).expect("same grid by construction");
        self.modes.gather(&out)
    }

    /// The matrix in the cosine/sine basis.
    pub fn real_matrix(&self) -> Mat<f64> {
        let (has_zero, ks) = self.modes.real_basis_modes();
        let n = self.modes.len();
        let off = usize::from(has_zero);
        let pot = &self.potential;
        let a = |k: [i64; 3]| coeff_at(pot, k);
        let add = |p: [i64; 3], q: [i64; 3]| [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
        let sub = |p: [i64; 3], q: [i64; 3]| [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
        let sqrt2 = std::f64::consts::SQRT_2;
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|r| {
                let mut row = vec![0.0; n];
                if has_zero && r == 0 {
                    row[0] = a([0; 3]).re;
                    for (m, &l) in ks.iter().enumerate() {
                        let al = a(l);
                        row[off + 2 * m] = sqrt2 * al.re;
                        row[off + 2 * m + 1] = -sqrt2 * al.im;
                    }
                    return row;
                }
                let (pk, is_sin) = ((r - off) / 2, (r - off) % 2 == 1);
                let k = ks[pk];
                if has_zero {
                    let ak = a(k);
                    row[0] = if is_sin { -sqrt2 * ak.im } else { sqrt2 * ak.re };
                }
                for (m, &l) in ks.iter().enumerate() {
                    let d = a(sub(k, l));
                    let s = a(add(k, l));
                    let (cc, cs) = if is_sin {
                        // (s_k, c_l) and (s_k, s_l)
                        (-d.im - s.im, d.re - s.re)
                    } else {
                        (d.re + s.re, d.im - s.im)
                    };
                    row[off + 2 * m] = cc;
                    row[off + 2 * m + 1] = cs;
                }
                row
            })
            .collect();
        let k2 = self.modes.real_basis_k2();
        Mat::<f64>::from_fn(n, n, |i, j| {
            let v = rows[i][j];
            if i == j {
                v - FOUR_PI2 * k2[i] - self.offset
            } else {
                v
            }
        })
    }

    /// Dense eigendecomposition, computed once.
    pub fn spectral(&self) -> Result<Arc<Spectral>> {
        if let Some(s) = self.spectral.get() {
            return Ok(s.clone());
        }
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::CostGuard(format!(
                "dense eigendecomposition of side {n} exceeds {DENSE_LIMIT}; use the Krylov method"
            )));
        }
        let m = self.real_matrix();
        let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let values = (0..n).map(|i| evd.S().column_vector()[i]).collect();
        let s = Arc::new(Spectral { values, vectors: evd.U().to_owned() });
        let _ = self.spectral.set(s);
        Ok(self.spectral.get().expect("just set").clone())
    }

    pub fn has_spectral(&self) -> bool {
        self.spectral.get().is_some()
    }

    /// Largest eigenvalue by preconditioned block iteration.
    pub fn top_eigenvalue(&self, tol: f64) -> Result<f64> {
        let k2: Vec<f64> = (0..self.dim()).map(|p| self.modes.k2(p)).collect();
        let scale = 1.0 + self.offset.abs() + self.potential.max_abs();
        let precond: Vec<f64> = k2.iter().map(|k2| 1.0 / (scale + FOUR_PI2 * k2)).collect();
        lobpcg_max(self.dim(), |x| self.apply_coords(x), &precond, tol)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn nrm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormalizes `cols` in place (two Gram-Schmidt passes), dropping near-dependent columns.
fn orthonormalize(cols: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(cols.len());
    for mut v in cols {
        let n0 = nrm(&v);
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n1 = nrm(&v);
        if n1 > 1e-10 * n0 {
            v.iter_mut().for_each(|x| *x /= n1);
            out.push(v);
        }
    }
    out
}

/// Largest eigenvalue of a Hermitian operator by locally optimal block
/// preconditioned conjugate gradients (block size 4, deterministic start).
pub fn lobpcg_max(
    n: usize,
    apply: impl Fn(&[Complex64]) -> Vec<Complex64> + Sync,
    precond: &[f64],
    tol: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Eigen("empty operator".into()));
    }
    let b = 4.min(n);
    let mut rng = crate::noise::rng(0x5eed);
    let start: Vec<Vec<Complex64>> = (0..b)
        .map(|j| {
            (0..n)
                .map(|i| crate::noise::complex_gaussian(&mut rng) * precond[i] + if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut x = orthonormalize(start);
    let mut p: Vec<Vec<Complex64>> = Vec::new();
    let mut w: Vec<Vec<Complex64>> = Vec::new();
    let mut last = f64::NAN;
    for _ in 0..500 {
        let mut basis = x.clone();
        basis.extend(w.iter().cloned());
        basis.extend(p.iter().cloned());
        let s = orthonormalize(basis);
        let a_s: Vec<Vec<Complex64>> = s.par_iter().map(|v| apply(v)).collect();
        let m = s.len();
        let g = Mat::<faer::c64>::from_fn(m, m, |i, j| {
            let v = (dot(&s[i], &a_s[j]) + dot(&s[j], &a_s[i]).conj()) * 0.5;
            faer::c64::new(v.re, v.im)
        });
        let evd = g.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let bx = b.min(m);
        let mut new_x = Vec::with_capacity(bx);
        let mut new_ax = Vec::with_capacity(bx);
        let mut new_p = Vec::with_capacity(bx);
        let mut thetas = Vec::with_capacity(bx);
        for c in 0..bx {
            let col = m - 1 - c;
            let coef: Vec<Complex64> = (0..m)
                .map(|i| {
                    let z = evd.U()[(i, col)];
                    Complex64::new(z.re, z.im)
                })
                .collect();
            let comb = |vs: &[Vec<Complex64>], from: usize| {
                let mut out = vec![Complex64::default(); n];
                for (v, &cf) in vs.iter().zip(&coef).skip(from) {
                    out.iter_mut().zip(v).for_each(|(o, y)| *o += cf * y);
                }
                out
            };
            new_x.push(comb(&s, 0));
            new_ax.push(comb(&a_s, 0));
            new_p.push(comb(&s, x.len().min(m)));
            thetas.push(evd.S().column_vector()[col].re);
        }
        let theta = thetas[0];
        let res: Vec<Vec<Complex64>> = new_x
            .iter()
            .zip(&new_ax)
            .zip(&thetas)
            .map(|((v, av), &t)| av.iter().zip(v).map(|(a, y)| a - y * t).collect())
            .collect();
        let r0 = nrm(&res[0]);
        if r0 <= tol * theta.abs().max(1.0) || (theta - last).abs() <= 1e-15 * theta.abs().max(1.0) {
            return Ok(theta);
        }
        last = theta;
        w = res
            .into_iter()
            .map(|r| r.iter().zip(precond).map(|(v, t)| v * *t).collect())
            .collect();
        x = new_x;
        p = new_p;
    }
    Err(Error::Eigen("block eigensolver did not converge in 500 iterations".into()))
}
