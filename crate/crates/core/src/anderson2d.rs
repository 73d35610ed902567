// SPDX-License-Identifier: Apache-2.0
//! The 2d Anderson Hamiltonian through the paracontrolled ansatz.
//!
//! With `X = (1-Δ)^{-1} ξ` and `Ξ₂ = ξ ∘ X - c`, a paracontrolled function is
//! `u = P_{>N}(u ≺ X + B(u)) + u♯` where
//! `B(u) = (1-Δ)^{-1}(Δu ≺ X + 2∇u ≺ ∇X + u ≻ ξ + u ≺ Ξ₂)`.
//! Everything is Galerkin-projected onto the disk `V = {|k| <= K}`, and on `V`
//! the paracontrolled formula for `HΓu♯` agrees with the truncated matrix
//! `Π_V(Δ + ξ - c)Π_V - shift` applied to `Γu♯` up to rounding.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_grid, Error, Result};
use crate::fixed_point::{self, GammaSolve, IterationControl};
use crate::fourier::{Grid, NormReport, TorusField};
use crate::galerkin::{GalerkinOperator, ModeSet, ModeShape};
use crate::noise::EnhancedNoise2d;
use crate::paraproducts::{BlockSplit, Parts, ProductEngine};

pub const GAMMA_2D: IterationControl = IterationControl { norm_index: 0.9, tol: 1e-10, max_iter: 200 };

/// A cutoff is accepted once the measured contraction factor is at most this.
pub const CONTRACTION_TARGET: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorOptions {
    /// Mode radius `K`; defaults to `M/4`.
    pub radius: Option<f64>,
    /// Fixed cutoff `N`, skipping the selection scan.
    pub cutoff: Option<usize>,
    pub probes: usize,
    pub probe_seed: u64,
    pub probe_iterations: usize,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self { radius: None, cutoff: None, probes: 5, probe_seed: 0xc0ffee, probe_iterations: 8 }
    }
}

/// JSON summary of an assembled operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorManifest {
    pub dim: usize,
    pub m: usize,
    #[serde(rename = "K")]
    pub k_radius: f64,
    pub modes: usize,
    #[serde(rename = "N")]
    pub cutoff: usize,
    pub shift: f64,
    pub eps: f64,
    pub amplitude: f64,
    pub seed: Option<u64>,
    pub contraction_factor: f64,
    /// Top of the spectrum of the truncated operator before the shift.
    pub lambda_max_unshifted: f64,
    /// Bottom of the spectrum of `-H`, i.e. `shift - lambda_max_unshifted`.
    pub lambda_min: f64,
    pub constants: BTreeMap<String, f64>,
    pub norms: NormReport,
}

pub(crate) fn default_radius(grid: Grid) -> f64 {
    (grid.m() / 4) as f64
}

/// Smallest dyadic `N` in `2..=M/4` whose measured contraction is at most the target.
pub(crate) fn scan_cutoffs(grid: Grid, measure: impl Fn(usize) -> Result<f64>) -> Result<(usize, f64)> {
    let max = (grid.m() / 4).max(2);
    let mut n = 2;
    while n <= max {
        let f = measure(n)?;
        if f <= CONTRACTION_TARGET {
            return Ok((n, f));
        }
        n *= 2;
    }
    Err(Error::CutoffExhausted { max })
}

/// Largest eigenvalue of the truncated operator and the resulting shift.
pub(crate) fn shift_from(op: &GalerkinOperator) -> Result<(f64, f64)> {
    let top = if op.has_spectral() {
        *op.spectral()?.values.last().expect("nonempty")
    } else {
        op.top_eigenvalue(1e-10)?
    };
    Ok((top, top.max(0.0) + 1.0))
}

#[derive(Clone, Debug)]
pub struct AndersonOperator2d {
    noise: EnhancedNoise2d,
    modes: Arc<ModeSet>,
    engine: ProductEngine,
    x: BlockSplit,
    grad_x: Vec<BlockSplit>,
    xi: BlockSplit,
    xi2: BlockSplit,
    /// `X ∘ ξ = Ξ₂ + c` on the full grid.
    x_res_xi: TorusField,
    cutoff: usize,
    contraction: f64,
    lambda_max: f64,
    shift: f64,
    matrix: GalerkinOperator,
}

impl AndersonOperator2d {
    pub fn new(noise: EnhancedNoise2d, opts: &OperatorOptions) -> Result<Self> {
        let grid = noise.grid();
        let radius = opts.radius.unwrap_or_else(|| default_radius(grid));
        let modes = ModeSet::new(grid, ModeShape::Disk(radius))?;
        let engine = modes.engine();
        let split = |f: &TorusField| engine.split(f);
        let x = split(&noise.x)?;
        let grad_x = noise.x.gradient().iter().map(split).collect::<Result<Vec<_>>>()?;
        let xi = split(&noise.xi)?;
        let xi2 = split(&noise.xi2)?;
        let x_res_xi = noise.xi2.add(&TorusField::constant(grid, noise.c_eps));
        let bare = GalerkinOperator::new(modes.clone(), noise.xi.clone(), noise.c_eps)?;
        let (lambda_max, shift) = shift_from(&bare)?;
        let matrix = bare.with_offset(noise.c_eps + shift);
        let mut op = Self {
            noise,
            modes,
            engine,
            x,
            grad_x,
            xi,
            xi2,
            x_res_xi,
            cutoff: 0,
            contraction: 0.0,
            lambda_max,
            shift,
            matrix,
        };
        let probes: Vec<TorusField> = (0..opts.probes as u64)
            .map(|i| fixed_point::random_smooth(&op.modes, opts.probe_seed.wrapping_add(i), 2.0))
            .collect();
        let measure = |n: usize| {
            fixed_point::measure_contraction(&probes, |u| op.correction(u, n), GAMMA_2D.norm_index, opts.probe_iterations)
        };
        let (cutoff, factor) = match opts.cutoff {
            Some(n) => (n, measure(n)?),
            None => scan_cutoffs(grid, measure)?,
        };
        op.cutoff = cutoff;
        op.contraction = factor;
        Ok(op)
    }

    pub fn grid(&self) -> Grid {
        self.modes.grid()
    }

    pub fn noise(&self) -> &EnhancedNoise2d {
        &self.noise
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn engine(&self) -> &ProductEngine {
        &self.engine
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn lambda_max_unshifted(&self) -> f64 {
        self.lambda_max
    }

    pub fn contraction_factor(&self) -> f64 {
        self.contraction
    }

    /// `Π_V(Δ + ξ - c)Π_V - shift`.
    pub fn matrix(&self) -> &GalerkinOperator {
        &self.matrix
    }

    /// Same noise and cutoff, different cutoff `N`; contraction is re-measured on one probe set.
    pub fn with_cutoff(&self, cutoff: usize, opts: &OperatorOptions) -> Result<Self> {
        let mut out = self.clone();
        out.cutoff = cutoff;
        let probes: Vec<TorusField> = (0..opts.probes as u64)
            .map(|i| fixed_point::random_smooth(&out.modes, opts.probe_seed.wrapping_add(i), 2.0))
            .collect();
        out.contraction = fixed_point::measure_contraction(
            &probes,
            |u| out.correction(u, cutoff),
            GAMMA_2D.norm_index,
            opts.probe_iterations,
        )?;
        Ok(out)
    }

    fn check(&self, u: &TorusField) -> Result<()> {
        ensure_same_grid(self.grid(), u.grid())?;
        self.modes.require_inside(u)
    }

    /// `B_Ξ(u)`.
    pub fn b_xi(&self, u: &TorusField) -> Result<TorusField> {
        ensure_same_grid(self.grid(), u.grid())?;
        let e = &self.engine;
        let us = e.split(u)?;
        let gt = e.triple_split(&us, &self.xi, Parts::GT)?.gt;
        self.b_with(u, &us, &gt)
    }

    fn b_with(&self, u: &TorusField, us: &BlockSplit, u_gt_xi: &TorusField) -> Result<TorusField> {
        let e = &self.engine;
        let mut acc = e.lt_split(&u.laplacian(), &self.x)?;
        for (a, gx) in self.grad_x.iter().enumerate() {
            acc = acc.add(&e.lt_split(&u.partial(a), gx)?.scale(2.0));
        }
        acc = acc.add(u_gt_xi).add(&e.triple_split(us, &self.xi2, Parts::LT)?.lt);
        Ok(acc.inv_l())
    }

    /// `P_{>N}(u ≺ X + B(u))` for a given cutoff.
    pub fn correction(&self, u: &TorusField, cutoff: usize) -> Result<TorusField> {
        let lt = self.engine.lt_split(u, &self.x)?;
        Ok(lt.add(&self.b_xi(u)?).high_pass(cutoff as f64))
    }

    /// `Φ(u) = u - P_{>N}(u ≺ X + B(u))`.
    pub fn gamma_inverse(&self, u: &TorusField) -> Result<TorusField> {
        ensure_same_grid(self.grid(), u.grid())?;
        Ok(u.sub(&self.correction(u, self.cutoff)?))
    }

    pub fn gamma_solve(&self, u_sharp: &TorusField) -> Result<GammaSolve> {
        self.check(u_sharp)?;
        fixed_point::solve(u_sharp, |u| self.correction(u, self.cutoff), &GAMMA_2D, self.cutoff)
    }

    pub fn gamma(&self, u_sharp: &TorusField) -> Result<TorusField> {
        Ok(self.gamma_solve(u_sharp)?.field)
    }

    /// `HΓu♯` from the paracontrolled formula, shift included.
    pub fn h_apply(&self, u_sharp: &TorusField) -> Result<TorusField> {
        let u = self.gamma(u_sharp)?;
        self.h_apply_with(&u, u_sharp)
    }

    /// As [`Self::h_apply`] with `u = Γu♯` already available.
    pub fn h_apply_with(&self, u: &TorusField, u_sharp: &TorusField) -> Result<TorusField> {
        let e = &self.engine;
        let n = self.cutoff as f64;
        let us = e.split(u)?;
        let by_xi = e.triple_split(&us, &self.xi, Parts::ALL)?;
        let by_xi2 = e.triple_split(&us, &self.xi2, Parts::ALL)?;
        let u_lt_x = e.triple_split(&us, &self.x, Parts::LT)?.lt;
        let b = self.b_with(u, &us, &by_xi.gt)?;
        let low = by_xi.lt.add(&by_xi.gt).add(&by_xi2.lt).low_pass(n);
        let high = u_lt_x.add(&b).high_pass(n);
        let comm = e.resonant_split(&u_lt_x, &self.xi)?.sub(&e.product(u, &self.x_res_xi)?);
        let fix_high = e.resonant_split(&b.high_pass(n), &self.xi)?;
        let fix_low = e.resonant_split(&u_lt_x.low_pass(n), &self.xi)?;
        let total = crate::fourier::sum_fields(
            self.grid(),
            [
                &u_sharp.laplacian(),
                &e.resonant_split(u_sharp, &self.xi)?,
                &low,
                &high,
                &by_xi2.resonant,
                &by_xi2.gt,
                &comm,
                &fix_high,
            ],
        )
        .sub(&fix_low);
        Ok(self.modes.project(&total).sub(&u.scale(self.shift)))
    }

    /// `H♯u♯ = Γ^{-1} H Γ u♯` along the paracontrolled path.
    pub fn h_sharp_apply(&self, u_sharp: &TorusField) -> Result<TorusField> {
        self.gamma_inverse(&self.h_apply(u_sharp)?)
    }

    /// `Γ^{-1} A Γ u♯` with the truncated matrix `A`.
    pub fn h_sharp_apply_matrix(&self, u_sharp: &TorusField) -> Result<TorusField> {
        let u = self.gamma(u_sharp)?;
        self.gamma_inverse(&self.matrix.apply(&u)?)
    }

    /// `-Re⟨Hu, v⟩` for `u, v` in `V`.
    pub fn energy_form(&self, u: &TorusField, v: &TorusField) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(-self.matrix.apply(u)?.inner(v).re)
    }

    pub fn manifest(&self, seed: Option<u64>) -> OperatorManifest {
        let mut constants = BTreeMap::new();
        constants.insert("c_eps".to_string(), self.noise.c_eps);
        OperatorManifest {
            dim: 2,
            m: self.grid().m(),
            k_radius: self.modes.radius().unwrap_or(f64::NAN),
            modes: self.modes.len(),
            cutoff: self.cutoff,
            shift: self.shift,
            eps: self.noise.scale.mollifier.eps,
            amplitude: self.noise.scale.amplitude,
            seed,
            contraction_factor: self.contraction,
            lambda_max_unshifted: self.lambda_max,
            lambda_min: self.shift - self.lambda_max,
            constants,
            norms: self.noise.norms.clone(),
        }
    }
}

/// `u♯ ↦ e_k` helper for scans: the real cosine mode scaled to unit `L²`.
pub fn unit_cosine(grid: Grid, k: &[i64]) -> Result<TorusField> {
    let f = TorusField::cosine(grid, k)?;
    let n = f.norm_l2();
    Ok(f.scale(1.0 / n))
}

/// A mode `e_k` as a complex field.
pub fn plane_wave(grid: Grid, k: &[i64]) -> Result<TorusField> {
    TorusField::mode(grid, k)
}
