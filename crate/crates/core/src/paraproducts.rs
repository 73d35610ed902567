// SPDX-License-Identifier: Apache-2.0
//! Bony decomposition `f·g = f≺g + f∘g + f≻g` on block pairs.
//!
//! With blocks `i` of `f` and `j` of `g`: `≺` takes `i <= j-2`, `∘` takes
//! `|i-j| <= 1`, `≻` takes `i >= j+2`. Every block product is evaluated on a
//! padded grid large enough that the retained output modes are alias-free, so
//! the three parts reconstruct the truncated product exactly.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{ensure_same_grid, Result};
use crate::fourier::fft::{fast_size, fft_nd};
use crate::fourier::{Direction, DyadicDecomposition, Flavor, Grid, TorusField};

/// A sparse set of coefficients with its ℓ∞ bandwidth.
#[derive(Clone, Debug, Default)]
pub struct Spectrum {
    entries: Vec<(u32, Complex64)>,
    band: i64,
}

impl Spectrum {
    fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn extend(&mut self, other: &Spectrum) {
        if other.is_empty() {
            return;
        }
        self.entries.extend_from_slice(&other.entries);
        self.band = self.band.max(other.band);
    }
}

/// A field cut into its Littlewood-Paley blocks, kept for repeated products.
#[derive(Clone, Debug)]
pub struct BlockSplit {
    grid: Grid,
    real: bool,
    blocks: Vec<Spectrum>,
}

impl BlockSplit {
    pub fn new(f: &TorusField, decomp: &DyadicDecomposition) -> Self {
        let grid = f.grid();
        let t = grid.tables();
        let mut blocks = vec![Spectrum::default(); decomp.block_count()];
        for (i, &c) in f.coeffs().iter().enumerate() {
            if c == Complex64::default() {
                continue;
            }
            for &(b, w) in decomp.entries(i) {
                if w > 0.0 {
                    let s = &mut blocks[(b as i32 + 1) as usize];
                    s.entries.push((i as u32, c * w));
                    s.band = s.band.max(t.linf[i] as i64);
                }
            }
        }
        Self { grid, real: f.is_real(), blocks }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn j_max(&self) -> i32 {
        self.blocks.len() as i32 - 2
    }

    fn block(&self, j: i32) -> Option<&Spectrum> {
        if j < -1 || j > self.j_max() {
            None
        } else {
            Some(&self.blocks[(j + 1) as usize])
        }
    }

    /// Union of blocks `lo..=hi`.
    fn range(&self, lo: i32, hi: i32) -> Spectrum {
        let mut s = Spectrum::default();
        for j in lo.max(-1)..=hi.min(self.j_max()) {
            s.extend(&self.blocks[(j + 1) as usize]);
        }
        s
    }

    fn all(&self) -> Spectrum {
        self.range(-1, self.j_max())
    }
}

/// Which parts of the decomposition to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parts {
    pub lt: bool,
    pub res: bool,
    pub gt: bool,
}

impl Parts {
    pub const ALL: Parts = Parts { lt: true, res: true, gt: true };
    pub const LT: Parts = Parts { lt: true, res: false, gt: false };
    pub const RES: Parts = Parts { lt: false, res: true, gt: false };
    pub const GT: Parts = Parts { lt: false, res: false, gt: true };
}

/// The three Bony parts of `f·g`.
#[derive(Clone, Debug)]
pub struct ProductTriple {
    pub lt: TorusField,
    pub resonant: TorusField,
    pub gt: TorusField,
}

impl ProductTriple {
    pub fn sum(&self) -> TorusField {
        self.lt.add(&self.resonant).add(&self.gt)
    }
}

/// Evaluates paraproducts on one grid, optionally projecting every output onto
/// the ball `|k| <= radius`. Outputs never contain the Nyquist layer `|k_a| = M/2`.
#[derive(Clone, Debug)]
pub struct ProductEngine {
    grid: Grid,
    decomp: Arc<DyadicDecomposition>,
    radius: Option<f64>,
}

impl ProductEngine {
    pub fn new(grid: Grid) -> Self {
        Self { grid, decomp: DyadicDecomposition::sharp(grid), radius: None }
    }

    pub fn with_flavor(grid: Grid, flavor: Flavor) -> Self {
        Self { grid, decomp: DyadicDecomposition::new(grid, flavor), radius: None }
    }

    /// Restricts outputs to `|k| <= radius`.
    pub fn with_radius(mut self, radius: Option<f64>) -> Self {
        self.radius = radius;
        self
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn decomposition(&self) -> &DyadicDecomposition {
        &self.decomp
    }

    pub fn split(&self, f: &TorusField) -> Result<BlockSplit> {
        ensure_same_grid(self.grid, f.grid())?;
        Ok(BlockSplit::new(f, &self.decomp))
    }

    fn out_linf(&self) -> i64 {
        let lim = self.grid.half() - 1;
        match self.radius {
            Some(r) => lim.min(r.floor() as i64),
            None => lim,
        }
    }

    /// Accumulates `coef · Π(a·b)` into `out`.
    fn multiply_into(&self, a: &Spectrum, b: &Spectrum, coef: f64, out: &mut [Complex64]) {
        if a.is_empty() || b.is_empty() {
            return;
        }
        let lim = self.out_linf();
        if lim < 0 {
            return;
        }
        let reach = (a.band + b.band).min(lim);
        let p = fast_size((reach + a.band + b.band + 1) as usize);
        let d = self.grid.dim();
        let len = p.pow(d as u32);
        let t = self.grid.tables();
        let pidx = |i: usize| -> usize {
            let k = &t.k[i];
            (0..d).fold(0usize, |acc, ax| acc * p + (k[ax] as i64).rem_euclid(p as i64) as usize)
        };
        let load = |s: &Spectrum| {
            let mut buf = vec![Complex64::default(); len];
            for &(i, c) in &s.entries {
                buf[pidx(i as usize)] += c;
            }
            fft_nd(&mut buf, d, p, Direction::Inverse);
            buf
        };
        let mut pa = load(a);
        let pb = load(b);
        pa.iter_mut().zip(&pb).for_each(|(x, y)| *x *= y);
        fft_nd(&mut pa, d, p, Direction::Forward);
        let scale = coef / len as f64;
        let r2 = self.radius.map(|r| r * r);
        for (i, o) in out.iter_mut().enumerate() {
            if t.linf[i] as i64 > reach {
                continue;
            }
            if let Some(r2) = r2 {
                if t.k2[i] > r2 {
                    continue;
                }
            }
            *o += pa[pidx(i)] * scale;
        }
    }

    fn finish(&self, c: Vec<Complex64>, real: bool) -> TorusField {
        let f = TorusField::raw(self.grid, c, false);
        if real {
            f.real_part()
        } else {
            f
        }
    }

    /// Selected Bony parts from pre-split operands. Unrequested parts come back as zero.
    pub fn triple_split(&self, fs: &BlockSplit, gs: &BlockSplit, parts: Parts) -> Result<ProductTriple> {
        ensure_same_grid(self.grid, fs.grid())?;
        ensure_same_grid(self.grid, gs.grid())?;
        let n = self.grid.len();
        let zero = || vec![Complex64::default(); n];
        let (mut lt, mut res, mut gt) = (zero(), zero(), zero());
        let jm = fs.j_max();
        for j in -1..=jm {
            if parts.lt || parts.res {
                if let Some(gj) = gs.block(j).filter(|s| !s.is_empty()) {
                    if parts.lt {
                        self.multiply_into(&fs.range(-1, j - 2), gj, 1.0, &mut lt);
                    }
                    if parts.res {
                        self.multiply_into(&fs.range(j - 1, j + 1), gj, 1.0, &mut res);
                    }
                }
            }
            if parts.gt {
                if let Some(fj) = fs.block(j).filter(|s| !s.is_empty()) {
                    self.multiply_into(fj, &gs.range(-1, j - 2), 1.0, &mut gt);
                }
            }
        }
        let real = fs.real && gs.real;
        Ok(ProductTriple { lt: self.finish(lt, real), resonant: self.finish(res, real), gt: self.finish(gt, real) })
    }

    pub fn triple(&self, f: &TorusField, g: &TorusField) -> Result<ProductTriple> {
        self.triple_split(&self.split(f)?, &self.split(g)?, Parts::ALL)
    }

    pub fn lt(&self, f: &TorusField, g: &TorusField) -> Result<TorusField> {
        Ok(self.triple_split(&self.split(f)?, &self.split(g)?, Parts::LT)?.lt)
    }

    pub fn gt(&self, f: &TorusField, g: &TorusField) -> Result<TorusField> {
        Ok(self.triple_split(&self.split(f)?, &self.split(g)?, Parts::GT)?.gt)
    }

    pub fn resonant(&self, f: &TorusField, g: &TorusField) -> Result<TorusField> {
        Ok(self.triple_split(&self.split(f)?, &self.split(g)?, Parts::RES)?.resonant)
    }

    /// `f ≺ g` with `g` already split.
    pub fn lt_split(&self, f: &TorusField, gs: &BlockSplit) -> Result<TorusField> {
        Ok(self.triple_split(&self.split(f)?, gs, Parts::LT)?.lt)
    }

    /// `f ∘ g` with `g` already split.
    pub fn resonant_split(&self, f: &TorusField, gs: &BlockSplit) -> Result<TorusField> {
        Ok(self.triple_split(&self.split(f)?, gs, Parts::RES)?.resonant)
    }

    /// `f ≻ g` with `g` already split.
    pub fn gt_split(&self, f: &TorusField, gs: &BlockSplit) -> Result<TorusField> {
        Ok(self.triple_split(&self.split(f)?, gs, Parts::GT)?.gt)
    }

    /// Dealiased product, truncated to the engine's output modes.
    pub fn product(&self, f: &TorusField, g: &TorusField) -> Result<TorusField> {
        ensure_same_grid(self.grid, f.grid())?;
        ensure_same_grid(self.grid, g.grid())?;
        let fs = self.split(f)?;
        let gs = self.split(g)?;
        let mut out = vec![Complex64::default(); self.grid.len()];
        self.multiply_into(&fs.all(), &gs.all(), 1.0, &mut out);
        Ok(self.finish(out, f.is_real() && g.is_real()))
    }

    /// `C(f,g,h) = (f≺g)∘h - f·(g∘h)`.
    pub fn commutator(&self, f: &TorusField, g: &TorusField, h: &TorusField) -> Result<TorusField> {
        let hs = self.split(h)?;
        let first = self.resonant_split(&self.lt(f, g)?, &hs)?;
        let second = self.product(f, &self.resonant_split(g, &hs)?)?;
        Ok(first.sub(&second))
    }
}

pub fn triple(f: &TorusField, g: &TorusField) -> Result<ProductTriple> {
    ProductEngine::new(f.grid()).triple(f, g)
}

/// `f ≺ g = Σ_j S_{j-1}f Δ_j g`.
pub fn para_lt(f: &TorusField, g: &TorusField) -> Result<TorusField> {
    ProductEngine::new(f.grid()).lt(f, g)
}

/// `f ≻ g = g ≺ f`.
pub fn para_gt(f: &TorusField, g: &TorusField) -> Result<TorusField> {
    ProductEngine::new(f.grid()).gt(f, g)
}

pub fn resonant(f: &TorusField, g: &TorusField) -> Result<TorusField> {
    ProductEngine::new(f.grid()).resonant(f, g)
}

pub fn product(f: &TorusField, g: &TorusField) -> Result<TorusField> {
    ProductEngine::new(f.grid()).product(f, g)
}

pub fn commutator(f: &TorusField, g: &TorusField, h: &TorusField) -> Result<TorusField> {
    ProductEngine::new(f.grid()).commutator(f, g, h)
}
