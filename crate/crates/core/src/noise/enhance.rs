// SPDX-License-Identifier: Apache-2.0
//! Enhanced noise tuples.
//!
//! Every product is the alias-free product of [`ProductEngine`], so the Wick
//! constants of [`super::renorm`] are exact means of the fields they are
//! subtracted from.

use serde::{Deserialize, Serialize};

use super::{mollify, wick_constant_2d, wick_constants_3d, Mollifier};
use crate::error::{Error, Result};
use crate::fourier::{holder_norm, Grid, NormReport, TorusField};
use crate::paraproducts::ProductEngine;

fn check_resolution(grid: Grid, mollifier: &Mollifier) -> Result<()> {
    if !(mollifier.eps > 0.0) {
        return Err(Error::Config(format!("mollifier scale must be positive, got {}", mollifier.eps)));
    }
    let reach = 1.0 / mollifier.eps;
    if reach > grid.m() as f64 / 4.0 + 1e-9 {
        return Err(Error::Config(format!(
            "1/eps = {reach} exceeds M/4 = {} on grid {grid}; refine the grid or enlarge eps",
            grid.m() / 4
        )));
    }
    Ok(())
}

/// `Σ_a f_a · g_a` with alias-free products.
pub(crate) fn dot_product(engine: &ProductEngine, f: &[TorusField], g: &[TorusField]) -> Result<TorusField> {
    let mut acc = TorusField::zeros(engine.grid());
    for (a, b) in f.iter().zip(g) {
        acc = acc.add(&engine.product(a, b)?);
    }
    Ok(acc)
}

/// Scalar metadata shared by both enhancements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseScale {
    pub mollifier: Mollifier,
    /// Multiplies `ξ`; higher trees scale with their polynomial degree.
    pub amplitude: f64,
}

/// `(ξ_ε, Ξ₂)` with `X = (1-Δ)^{-1} ξ_ε` and `Ξ₂ = ξ_ε ∘ X - c`.
#[derive(Clone, Debug)]
pub struct EnhancedNoise2d {
    pub xi: TorusField,
    pub x: TorusField,
    pub xi2: TorusField,
    /// Subtracted constant, the exact mean of `ξ_ε ∘ X`.
    pub c_eps: f64,
    pub scale: NoiseScale,
    pub norms: NormReport,
}

pub const HOLDER_XI_2D: f64 = -1.1;
pub const HOLDER_XI2_2D: f64 = -0.2;

impl EnhancedNoise2d {
    pub fn grid(&self) -> Grid {
        self.xi.grid()
    }

    /// The noise-free tuple.
    pub fn zero(grid: Grid, mollifier: Mollifier) -> Self {
        let z = TorusField::zeros(grid);
        let mut out = Self {
            xi: z.clone(),
            x: z.clone(),
            xi2: z,
            c_eps: 0.0,
            scale: NoiseScale { mollifier, amplitude: 0.0 },
            norms: NormReport::new(grid),
        };
        out.refresh_norms();
        out
    }

    /// Replaces `ξ` by `λξ`; `X`, `Ξ₂`, `c` follow.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = Self {
            xi: self.xi.scale(lambda),
            x: self.x.scale(lambda),
            xi2: self.xi2.scale(lambda * lambda),
            c_eps: self.c_eps * lambda * lambda,
            scale: NoiseScale { amplitude: self.scale.amplitude * lambda, ..self.scale },
            norms: NormReport::new(self.grid()),
        };
        out.refresh_norms();
        out
    }

    /// `||ξ||_{C^{-1.1}} + ||Ξ₂||_{C^{-0.2}}`.
    pub fn size(&self) -> f64 {
        holder_norm(&self.xi, HOLDER_XI_2D) + holder_norm(&self.xi2, HOLDER_XI2_2D)
    }

    fn refresh_norms(&mut self) {
        let mut r = NormReport::new(self.grid());
        r.push("xi", format!("C^{HOLDER_XI_2D}"), holder_norm(&self.xi, HOLDER_XI_2D));
        r.push("xi2", format!("C^{HOLDER_XI2_2D}"), holder_norm(&self.xi2, HOLDER_XI2_2D));
        r.record("X", &self.x);
        self.norms = r;
    }
}

/// Mollifies `xi` and builds the 2d tuple.
pub fn enhance_2d(xi: &TorusField, mollifier: &Mollifier) -> Result<EnhancedNoise2d> {
    let grid = xi.grid();
    if grid.dim() != 2 {
        return Err(Error::Config(format!("enhance_2d needs a 2d field, got {grid}")));
    }
    check_resolution(grid, mollifier)?;
    let xi_e = mollify(xi, mollifier);
    let x = xi_e.inv_l();
    let c = wick_constant_2d(mollifier.eps, mollifier.kind, grid.m());
    let engine = ProductEngine::new(grid);
    let res = engine.resonant(&xi_e, &x)?;
    let xi2 = res.sub(&TorusField::constant(grid, c));
    let mut out = EnhancedNoise2d {
        xi: xi_e,
        x,
        xi2,
        c_eps: c,
        scale: NoiseScale { mollifier: *mollifier, amplitude: 1.0 },
        norms: NormReport::new(grid),
    };
    out.refresh_norms();
    Ok(out)
}

/// The 3d tuple, with the derived fields `W`, `W̃`, `Z`.
#[derive(Clone, Debug)]
pub struct EnhancedNoise3d {
    /// `ξ_ε`, kept for the regularized matrix.
    pub xi: TorusField,
    /// `(-Δ)^{-1} ξ_ε`.
    pub x: TorusField,
    pub x1: TorusField,
    pub x2: TorusField,
    pub x3: TorusField,
    pub x4: TorusField,
    /// `Σ_i ∂_i X ∘ ∂_i X3`.
    pub x5: TorusField,
    /// Mean of `|∇X|²`.
    pub c1_eps: f64,
    /// Mean of `|∇X1|²`.
    pub c2_eps: f64,
    pub w: TorusField,
    /// `(1-Δ)^{-1} ∇W`, three components.
    pub w_tilde: Vec<TorusField>,
    pub z: TorusField,
    pub scale: NoiseScale,
    pub norms: NormReport,
}

/// Hölder exponents used for the tree diagnostics.
pub const HOLDER_TREES_3D: [(&str, f64); 6] =
    [("X", 0.4), ("X1", 0.8), ("X2", 1.4), ("X3", 1.4), ("X4", 1.6), ("X5", -0.2)];

impl EnhancedNoise3d {
    pub fn grid(&self) -> Grid {
        self.x.grid()
    }

    pub fn zero(grid: Grid, mollifier: Mollifier) -> Result<Self> {
        let z = TorusField::zeros(grid);
        Self::from_trees(
            z.clone(),
            [z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z],
            (0.0, 0.0),
            NoiseScale { mollifier, amplitude: 0.0 },
        )
    }

    /// Rebuilds `W`, `W̃`, `Z` and the norm table from stored trees.
    pub fn from_trees(
        xi: TorusField,
        trees: [TorusField; 6],
        (c1, c2): (f64, f64),
        scale: NoiseScale,
    ) -> Result<Self> {
        let grid = xi.grid();
        let engine = ProductEngine::new(grid);
        let [x, x1, x2, x3, x4, x5] = trees;
        let w = x.add(&x1).add(&x2);
        let w_tilde: Vec<TorusField> = w.gradient().iter().map(|g| g.inv_l()).collect();
        let g1 = x1.gradient();
        let g2 = x2.gradient();
        let inner = dot_product(&engine, &g2, &g2)?
            .add(&dot_product(&engine, &g1, &g2)?.scale(2.0))
            .add(&x1)
            .add(&x2);
        let z = inner.inv_l().add(&x4).add(&x3.scale(2.0));
        let mut out = Self {
            xi,
            x,
            x1,
            x2,
            x3,
            x4,
            x5,
            c1_eps: c1,
            c2_eps: c2,
            w,
            w_tilde,
            z,
            scale,
            norms: NormReport::new(grid),
        };
        out.refresh_norms();
        Ok(out)
    }

    pub fn trees(&self) -> [&TorusField; 6] {
        [&self.x, &self.x1, &self.x2, &self.x3, &self.x4, &self.x5]
    }

    /// Replaces `ξ` by `λξ`. A tree of degree `n` in `ξ` picks up `λⁿ`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let p = |n: i32| lambda.powi(n);
        let degrees = [1, 2, 3, 4, 4, 5];
        let t = self.trees();
        let trees = std::array::from_fn(|i| t[i].scale(p(degrees[i])));
        Self::from_trees(
            self.xi.scale(lambda),
            trees,
            (self.c1_eps * p(2), self.c2_eps * p(4)),
            NoiseScale { amplitude: self.scale.amplitude * lambda, ..self.scale },
        )
    }

    /// Sum of the six tree Hölder norms.
    pub fn size(&self) -> f64 {
        self.trees().iter().zip(HOLDER_TREES_3D).map(|(f, (_, a))| holder_norm(f, a)).sum()
    }

    fn refresh_norms(&mut self) {
        let mut r = NormReport::new(self.grid());
        let trees = self.trees();
        for (f, (name, a)) in trees.iter().zip(HOLDER_TREES_3D) {
            r.push(name, format!("C^{a}"), holder_norm(f, a));
        }
        r.push("X4", "C^1.9".into(), holder_norm(&self.x4, 1.9));
        r.record("W", &self.w);
        r.record("Z", &self.z);
        self.norms = r;
    }
}

/// Mollifies `xi` (zero mode must already be absent) and builds the 3d trees.
pub fn enhance_3d(xi: &TorusField, mollifier: &Mollifier, cap: f64) -> Result<EnhancedNoise3d> {
    let grid = xi.grid();
    if grid.dim() != 3 {
        return Err(Error::Config(format!("enhance_3d needs a 3d field, got {grid}")));
    }
    if xi.coeffs()[0].norm() != 0.0 {
        return Err(Error::Config("3d noise must have its zero mode removed".into()));
    }
    check_resolution(grid, mollifier)?;
    let (c1, c2) = wick_constants_3d(mollifier.eps, mollifier.kind, grid.m(), cap)?;
    let engine = ProductEngine::new(grid);
    let xi_e = mollify(xi, mollifier);
    let x = xi_e.inv_neg_laplacian();
    let gx = x.gradient();
    let x1 = dot_product(&engine, &gx, &gx)?.sub(&TorusField::constant(grid, c1)).inv_l();
    let g1 = x1.gradient();
    let x2 = dot_product(&engine, &gx, &g1)?.inv_l().scale(2.0);
    let g2 = x2.gradient();
    let x3 = dot_product(&engine, &gx, &g2)?.inv_l();
    let x4 = dot_product(&engine, &g1, &g1)?.sub(&TorusField::constant(grid, c2)).inv_l();
    let g3 = x3.gradient();
    let mut x5 = TorusField::zeros(grid);
    for (a, b) in gx.iter().zip(&g3) {
        x5 = x5.add(&engine.resonant(a, b)?);
    }
    EnhancedNoise3d::from_trees(
        xi_e,
        [x, x1, x2, x3, x4, x5],
        (c1, c2),
        NoiseScale { mollifier: *mollifier, amplitude: 1.0 },
    )
}
