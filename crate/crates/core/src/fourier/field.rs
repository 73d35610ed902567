// SPDX-License-Identifier: Apache-2.0
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use rustfft::num_complex::Complex64;

use super::{fft, Grid};
use crate::error::{Error, Result};

pub(crate) const FOUR_PI2: f64 = 4.0 * PI * PI;

/// A complex scalar field on the discrete torus.
///
/// The coefficient array is the primary representation; point values are
/// computed on first request and cached. Fields are immutable values.
#[derive(Clone, Debug)]
pub struct TorusField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    real: bool,
    values: OnceLock<Vec<Complex64>>,
}

impl PartialEq for TorusField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.real == other.real && self.coeffs == other.coeffs
    }
}

impl TorusField {
    pub fn zeros(grid: Grid) -> Self {
        Self::raw(grid, vec![Complex64::default(); grid.len()], true)
    }

    pub(crate) fn raw(grid: Grid, coeffs: Vec<Complex64>, real: bool) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs, real, values: OnceLock::new() }
    }

    /// Builds a field from FFT-ordered coefficients. With `real = true` the
    /// array is projected onto Hermitian-symmetric data so the flag holds exactly.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Config(format!(
                "expected {} coefficients for grid {grid}, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let f = Self::raw(grid, coeffs, false);
        Ok(if real { f.real_part() } else { f })
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "expected {} point values for grid {grid}, got {}",
                grid.len(),
                values.len()
            )));
        }
        let coeffs = fft::forward(grid, &values);
        let f = Self::raw(grid, coeffs, false);
        let _ = f.values.set(values);
        Ok(f)
    }

    pub fn from_real_values(grid: Grid, values: &[f64]) -> Result<Self> {
        let v = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Ok(Self::from_values(grid, v)?.real_part())
    }

    /// The character `e_k(x) = e^{2πik·x}`.
    pub fn mode(grid: Grid, k: &[i64]) -> Result<Self> {
        let idx = grid
            .index_of(k)
            .ok_or_else(|| Error::Config(format!("wavevector {k:?} not representable on {grid}")))?;
        let mut c = vec![Complex64::default(); grid.len()];
        c[idx] = Complex64::new(1.0, 0.0);
        let real = grid.tables().neg[idx] as usize == idx;
        Ok(Self::raw(grid, c, real))
    }

    /// `cos(2πk·x)`, a real field.
    pub fn cosine(grid: Grid, k: &[i64]) -> Result<Self> {
        let e = Self::mode(grid, k)?;
        let neg: Vec<i64> = k.iter().map(|c| -c).collect();
        let f = match grid.index_of(&neg) {
            Some(_) => e.add(&Self::mode(grid, &neg)?).scale(0.5),
            None => e,
        };
        Ok(f.real_part())
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let mut coeffs = vec![Complex64::default(); grid.len()];
        coeffs[0] = Complex64::new(c, 0.0);
        Self::raw(grid, coeffs, true)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.grid.index_of(k).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// Point values on the grid, cached.
    pub fn values(&self) -> &[Complex64] {
        self.values.get_or_init(|| fft::inverse(self.grid, &self.coeffs))
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values().iter().map(|v| v.re).collect()
    }

    /// Hermitian-symmetric part: coefficients of `Re f`, flagged real.
    pub fn real_part(&self) -> Self {
        let t = self.grid.tables();
        let c: Vec<Complex64> = (0..self.coeffs.len())
            .map(|i| {
                let j = t.neg[i] as usize;
                if i == j {
                    Complex64::new(self.coeffs[i].re, 0.0)
                } else {
                    0.5 * (self.coeffs[i] + self.coeffs[j].conj())
                }
            })
            .collect();
        Self::raw(self.grid, c, true)
    }

    /// Largest violation of `c(-k) = conj c(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let t = self.grid.tables();
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[t.neg[i] as usize].conj()).norm())
            .fold(0.0, f64::max)
    }

    fn with_coeffs(&self, coeffs: Vec<Complex64>, real: bool) -> Self {
        Self::raw(self.grid, coeffs, real)
    }

    /// Coefficient-wise map from `(index, coefficient)`.
    pub fn map_coeffs(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        self.with_coeffs(self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect(), false)
    }

    /// Fourier multiplier depending on `|k|²` only; keeps the real flag.
    pub fn radial(&self, symbol: impl Fn(f64) -> f64) -> Self {
        let t = self.grid.tables();
        let c = self.coeffs.iter().zip(&t.k2).map(|(&c, &k2)| c * symbol(k2)).collect();
        self.with_coeffs(c, self.real)
    }

    pub fn laplacian(&self) -> Self {
        self.radial(|k2| -FOUR_PI2 * k2)
    }

    /// `(1-Δ)^{s/2}`.
    pub fn bessel(&self, s: f64) -> Self {
        self.radial(|k2| (1.0 + FOUR_PI2 * k2).powf(0.5 * s))
    }

    /// `(1-Δ)^{-1}`.
    pub fn inv_l(&self) -> Self {
        self.radial(|k2| 1.0 / (1.0 + FOUR_PI2 * k2))
    }

    /// `(1-Δ)`.
    pub fn apply_l(&self) -> Self {
        self.radial(|k2| 1.0 + FOUR_PI2 * k2)
    }

    /// `(-Δ)^{-1}` on mean-zero data; the zero mode is dropped.
    pub fn inv_neg_laplacian(&self) -> Self {
        self.radial(|k2| if k2 == 0.0 { 0.0 } else { 1.0 / (FOUR_PI2 * k2) })
    }

    /// `∂_a`, symbol `2πi k_a`. The Nyquist plane `k_a = M/2` is sent to zero
    /// so real fields stay real.
    pub fn partial(&self, axis: usize) -> Self {
        let t = self.grid.tables();
        let nyq = self.grid.half() as i32;
        let c = self
            .coeffs
            .iter()
            .zip(&t.k)
            .map(|(&c, k)| {
                if k[axis] == nyq {
                    Complex64::default()
                } else {
                    c * Complex64::new(0.0, 2.0 * PI * k[axis] as f64)
                }
            })
            .collect();
        self.with_coeffs(c, self.real)
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.grid.dim()).map(|a| self.partial(a)).collect()
    }

    /// Keeps modes with `|k| <= n` (Euclidean).
    pub fn low_pass(&self, n: f64) -> Self {
        self.mask(|k2| k2 <= n * n)
    }

    /// Keeps modes with `|k| > n`.
    pub fn high_pass(&self, n: f64) -> Self {
        self.mask(|k2| k2 > n * n)
    }

    pub(crate) fn mask(&self, keep: impl Fn(f64) -> bool) -> Self {
        let t = self.grid.tables();
        let c = self
            .coeffs
            .iter()
            .zip(&t.k2)
            .map(|(&c, &k2)| if keep(k2) { c } else { Complex64::default() })
            .collect();
        self.with_coeffs(c, self.real)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|&c| c * a).collect(), self.real)
    }

    pub fn scale_complex(&self, a: Complex64) -> Self {
        let real = self.real && a.im == 0.0;
        self.with_coeffs(self.coeffs.iter().map(|&c| c * a).collect(), real)
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.grid, other.grid, "field arithmetic on different grids");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let c = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        self.with_coeffs(c, self.real && other.real)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        let c = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        self.with_coeffs(c, self.real && other.real)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        self.check(other);
        let c = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect();
        self.with_coeffs(c, self.real && other.real)
    }

    /// `∫ f ḡ` (Parseval sum of coefficients).
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.check(other);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise product of grid values (aliased, no padding).
    pub fn mul_pointwise(&self, other: &Self) -> Self {
        self.check(other);
        let v: Vec<Complex64> = self.values().iter().zip(other.values()).map(|(a, b)| a * b).collect();
        let f = Self::from_values(self.grid, v).expect("grid length");
        if self.real && other.real {
            f.real_part()
        } else {
            f
        }
    }

    /// Pointwise map of grid values.
    pub fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let v: Vec<Complex64> = self.values().iter().map(|&z| f(z)).collect();
        Self::from_values(self.grid, v).expect("grid length")
    }

    /// Pointwise map of a real field's values, returning a real field.
    pub fn map_real(&self, f: impl Fn(f64) -> f64) -> Self {
        let v: Vec<f64> = self.values().iter().map(|z| f(z.re)).collect();
        Self::from_real_values(self.grid, &v).expect("grid length")
    }

    /// Relative weight of coefficients outside the Euclidean ball of radius `k`.
    pub fn excess_outside(&self, k: f64) -> f64 {
        let total = self.norm_l2();
        if total == 0.0 {
            return 0.0;
        }
        self.high_pass(k).norm_l2() / total
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::default())
    }
}

impl Add for &TorusField {
    type Output = TorusField;
    fn add(self, rhs: Self) -> TorusField {
        TorusField::add(self, rhs)
    }
}

impl Sub for &TorusField {
    type Output = TorusField;
    fn sub(self, rhs: Self) -> TorusField {
        TorusField::sub(self, rhs)
    }
}

impl Mul<f64> for &TorusField {
    type Output = TorusField;
    fn mul(self, rhs: f64) -> TorusField {
        self.scale(rhs)
    }
}

impl Neg for &TorusField {
    type Output = TorusField;
    fn neg(self) -> TorusField {
        self.scale(-1.0)
    }
}

/// Sum of a list of fields on one grid.
pub fn sum_fields<'a>(grid: Grid, fields: impl IntoIterator<Item = &'a TorusField>) -> TorusField {
    fields.into_iter().fold(TorusField::zeros(grid), |acc, f| acc.add(f))
}
