// SPDX-License-Identifier: Apache-2.0
//! The 3d Anderson Hamiltonian after the exponential transform.
//!
//! With `u = e^W u♭` the operator becomes
//! `F(u♭) = Δu♭ + 2LW̃·∇u♭ + LZ u♭` (`L = 1-Δ`, `LW̃ = ∇W`), and
//! `u♭ = P_{>N}(u♭ ≺ Z + 2∇u♭ ≺ W̃ + B(u♭)) + u♯`. The noise-noise products are
//! `Y1_i = Z∘LW̃_i`, `y2 = Σ ∂_iZ∘LW̃_i`, `Y3_j = Σ_i ∂_iW̃_j∘LW̃_i`,
//! `y4 = Z∘LZ`, `Y5_j = W̃_j∘LZ`. Fields are Galerkin-projected onto `V`;
//! multiplication by `e^{±W}` is pointwise on the grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::anderson2d::{default_radius, scan_cutoffs, shift_from, OperatorManifest, OperatorOptions};
use crate::error::{ensure_same_grid, Result};
use crate::fixed_point::{self, GammaSolve, IterationControl};
use crate::fourier::{sum_fields, Grid, TorusField};
use crate::galerkin::{GalerkinOperator, ModeSet, ModeShape};
use crate::noise::EnhancedNoise3d;
use crate::paraproducts::{BlockSplit, Parts, ProductEngine};

pub const GAMMA_3D: IterationControl = IterationControl { norm_index: 1.4, tol: 1e-9, max_iter: 200 };

/// A field together with its block split.
#[derive(Clone, Debug)]
struct Split {
    f: TorusField,
    s: BlockSplit,
}

impl Split {
    fn new(e: &ProductEngine, f: TorusField) -> Result<Self> {
        let s = e.split(&f)?;
        Ok(Self { f, s })
    }
}

fn splits(e: &ProductEngine, fs: Vec<TorusField>) -> Result<Vec<Split>> {
    fs.into_iter().map(|f| Split::new(e, f)).collect()
}

/// Noise-dependent right factors, computed once.
#[derive(Clone, Debug)]
struct Factors {
    z: Split,
    lz: Split,
    dz: Vec<Split>,
    wt: Vec<Split>,
    /// `dwt[i][j] = ∂_i W̃_j`.
    dwt: Vec<Vec<Split>>,
    lwt: Vec<Split>,
    /// Full-grid resonant products.
    y1: Vec<TorusField>,
    y2: TorusField,
    y3: Vec<TorusField>,
    y4: TorusField,
    y5: Vec<TorusField>,
    /// `2y2 + y4`, multiplying `u` in the full products.
    u_full: Split,
    /// `2Y1_j + 4Y3_j + 2Y5_j`, multiplying `∂_j u`.
    du_full: Vec<Split>,
}

/// The pieces of one `H` evaluation in all three coordinate systems.
#[derive(Clone, Debug)]
pub struct H3Evaluation {
    pub u_sharp: TorusField,
    pub u_flat: TorusField,
    /// `u = e^W u♭` on the grid.
    pub u: TorusField,
    /// `Δu♯ + LZ∘u♯ + 2LW̃·∘∇u♯ + G(u♭) - shift·u♭`.
    pub flat: TorusField,
    /// `Hu = e^W (flat)`.
    pub hu: TorusField,
}

#[derive(Clone, Debug)]
pub struct AndersonOperator3d {
    noise: EnhancedNoise3d,
    modes: Arc<ModeSet>,
    engine: ProductEngine,
    k: Factors,
    exp_w_plus: TorusField,
    exp_w_minus: TorusField,
    cutoff: usize,
    contraction: f64,
    lambda_max: f64,
    shift: f64,
    matrix: GalerkinOperator,
}

impl AndersonOperator3d {
    pub fn new(noise: EnhancedNoise3d, opts: &OperatorOptions) -> Result<Self> {
        let grid = noise.grid();
        let radius = opts.radius.unwrap_or_else(|| default_radius(grid));
        let modes = ModeSet::new(grid, ModeShape::Disk(radius))?;
        let engine = modes.engine();
        let full = ProductEngine::new(grid);
        let k = Self::factors(&noise, &engine, &full)?;
        let c = noise.c1_eps + noise.c2_eps;
        let bare = GalerkinOperator::new(modes.clone(), noise.xi.clone(), c)?;
        let (lambda_max, shift) = shift_from(&bare)?;
        let matrix = bare.with_offset(c + shift);
        let exp_w_plus = noise.w.map_real(f64::exp);
        let exp_w_minus = noise.w.map_real(|w| (-w).exp());
        let mut op = Self {
            noise,
            modes,
            engine,
            k,
            exp_w_plus,
            exp_w_minus,
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
            fixed_point::measure_contraction(&probes, |u| op.correction(u, n), GAMMA_3D.norm_index, opts.probe_iterations)
        };
        let (cutoff, factor) = match opts.cutoff {
            Some(n) => (n, measure(n)?),
            None => scan_cutoffs(grid, measure)?,
        };
        op.cutoff = cutoff;
        op.contraction = factor;
        Ok(op)
    }

    fn factors(n: &EnhancedNoise3d, e: &ProductEngine, full: &ProductEngine) -> Result<Factors> {
        let z = n.z.clone();
        let lz = z.apply_l();
        let dz = z.gradient();
        let wt = n.w_tilde.clone();
        let dwt: Vec<Vec<TorusField>> = (0..3).map(|i| (0..3).map(|j| wt[j].partial(i)).collect()).collect();
        let lwt = n.w.gradient();
        let y1: Vec<TorusField> = lwt.iter().map(|l| full.resonant(&z, l)).collect::<Result<_>>()?;
        let mut y2 = TorusField::zeros(n.grid());
        for i in 0..3 {
            y2 = y2.add(&full.resonant(&dz[i], &lwt[i])?);
        }
        let mut y3 = Vec::with_capacity(3);
        for j in 0..3 {
            let mut acc = TorusField::zeros(n.grid());
            for i in 0..3 {
                acc = acc.add(&full.resonant(&dwt[i][j], &lwt[i])?);
            }
            y3.push(acc);
        }
        let y4 = full.resonant(&z, &lz)?;
        let y5: Vec<TorusField> = wt.iter().map(|w| full.resonant(w, &lz)).collect::<Result<_>>()?;
        let u_full = y2.scale(2.0).add(&y4);
        let du_full: Vec<TorusField> = (0..3)
            .map(|j| y1[j].scale(2.0).add(&y3[j].scale(4.0)).add(&y5[j].scale(2.0)))
            .collect();
        Ok(Factors {
            z: Split::new(e, z)?,
            lz: Split::new(e, lz)?,
            dz: splits(e, dz)?,
            wt: splits(e, wt)?,
            dwt: dwt.into_iter().map(|r| splits(e, r)).collect::<Result<_>>()?,
            lwt: splits(e, lwt)?,
            y1,
            y2,
            y3,
            y4,
            y5,
            u_full: Split::new(e, u_full)?,
            du_full: splits(e, du_full)?,
        })
    }

    pub fn grid(&self) -> Grid {
        self.modes.grid()
    }

    pub fn noise(&self) -> &EnhancedNoise3d {
        &self.noise
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn contraction_factor(&self) -> f64 {
        self.contraction
    }

    pub fn lambda_max_unshifted(&self) -> f64 {
        self.lambda_max
    }

    /// `Π_V(Δ + ξ - c¹ - c²)Π_V - shift`.
    pub fn matrix(&self) -> &GalerkinOperator {
        &self.matrix
    }

    pub fn exp_w_plus(&self) -> &TorusField {
        &self.exp_w_plus
    }

    pub fn exp_w_minus(&self) -> &TorusField {
        &self.exp_w_minus
    }

    fn lt(&self, f: &TorusField, g: &Split) -> Result<TorusField> {
        self.engine.lt_split(f, &g.s)
    }

    fn gt(&self, f: &TorusField, g: &Split) -> Result<TorusField> {
        self.engine.gt_split(f, &g.s)
    }

    fn res(&self, f: &TorusField, g: &Split) -> Result<TorusField> {
        self.engine.resonant_split(f, &g.s)
    }

    /// `u ≺ Z + 2∇u·≺W̃`.
    pub fn a_term(&self, u: &TorusField) -> Result<TorusField> {
        let mut acc = self.lt(u, &self.k.z)?;
        for j in 0..3 {
            acc = acc.add(&self.lt(&u.partial(j), &self.k.wt[j])?.scale(2.0));
        }
        Ok(acc)
    }

    /// The eighteen terms of `(1-Δ)B(u)`, named, before grouping.
    pub fn r_terms(&self, u: &TorusField) -> Result<Vec<(&'static str, TorusField)>> {
        let f = &self.k;
        let du = u.gradient();
        let lap = u.laplacian();
        let sum3 = |g: &dyn Fn(usize) -> Result<TorusField>| -> Result<TorusField> {
            let mut acc = TorusField::zeros(self.grid());
            for i in 0..3 {
                acc = acc.add(&g(i)?);
            }
            Ok(acc)
        };
        let e = &self.engine;
        let lt_y = |a: &TorusField, y: &TorusField| e.lt(a, y);
        let gt_y = |a: &TorusField, y: &TorusField| e.gt(a, y);
        let mut out: Vec<(&'static str, TorusField)> = Vec::with_capacity(18);
        out.push(("lap_u<Z", self.lt(&lap, &f.z)?));
        out.push(("2grad_u<grad_Z", sum3(&|i| Ok(self.lt(&du[i], &f.dz[i])?.scale(2.0)))?));
        out.push(("u<Z", self.lt(u, &f.z)?));
        out.push(("2grad_lap_u<Wt", sum3(&|j| Ok(self.lt(&lap.partial(j), &f.wt[j])?.scale(2.0)))?));
        out.push((
            "4hess_u<grad_Wt",
            sum3(&|i| sum3(&|j| Ok(self.lt(&du[j].partial(i), &f.dwt[i][j])?.scale(4.0))))?,
        ));
        out.push(("2grad_u<Wt", sum3(&|j| Ok(self.lt(&du[j], &f.wt[j])?.scale(2.0)))?));
        out.push(("2LWt<grad_u", sum3(&|j| Ok(self.gt(&du[j], &f.lwt[j])?.scale(2.0)))?));
        out.push(("LZ<u", self.gt(u, &f.lz)?));
        out.push(("2grad_u<Y1", sum3(&|j| Ok(lt_y(&du[j], &f.y1[j])?.scale(2.0)))?));
        out.push(("2grad_u>Y1", sum3(&|j| Ok(gt_y(&du[j], &f.y1[j])?.scale(2.0)))?));
        out.push(("2u<y2", lt_y(u, &f.y2)?.scale(2.0)));
        out.push(("2u>y2", gt_y(u, &f.y2)?.scale(2.0)));
        out.push(("4grad_u<Y3", sum3(&|j| Ok(lt_y(&du[j], &f.y3[j])?.scale(4.0)))?));
        out.push(("4grad_u>Y3", sum3(&|j| Ok(gt_y(&du[j], &f.y3[j])?.scale(4.0)))?));
        out.push(("u<y4", lt_y(u, &f.y4)?));
        out.push(("u>y4", gt_y(u, &f.y4)?));
        out.push(("2grad_u<Y5", sum3(&|j| Ok(lt_y(&du[j], &f.y5[j])?.scale(2.0)))?));
        out.push(("2grad_u>Y5", sum3(&|j| Ok(gt_y(&du[j], &f.y5[j])?.scale(2.0)))?));
        Ok(out)
    }

    /// `B(u)` term by term: each entry is `(1-Δ)^{-1}` of one `r_terms` entry.
    pub fn b_xi_terms(&self, u: &TorusField) -> Result<Vec<(&'static str, TorusField)>> {
        Ok(self.r_terms(u)?.into_iter().map(|(n, f)| (n, f.inv_l())).collect())
    }

    /// `(1-Δ)B(u)` with products sharing a left factor merged.
    fn r_grouped(&self, u: &TorusField, du: &[TorusField]) -> Result<TorusField> {
        let f = &self.k;
        let e = &self.engine;
        let us = e.split(u)?;
        let mut acc = self.lt(&u.laplacian(), &f.z)?;
        let u_lt = f.z.f.add(&f.u_full.f);
        let u_gt = f.lz.f.add(&f.u_full.f);
        acc = acc.add(&e.triple_split(&us, &e.split(&u_lt)?, Parts::LT)?.lt);
        acc = acc.add(&e.triple_split(&us, &e.split(&u_gt)?, Parts::GT)?.gt);
        let lap = u.laplacian();
        for j in 0..3 {
            let dj = e.split(&du[j])?;
            let right_lt = f.dz[j].f.add(&f.wt[j].f).scale(2.0).add(&f.du_full[j].f);
            let right_gt = f.lwt[j].f.scale(2.0).add(&f.du_full[j].f);
            acc = acc.add(&e.triple_split(&dj, &e.split(&right_lt)?, Parts::LT)?.lt);
            acc = acc.add(&e.triple_split(&dj, &e.split(&right_gt)?, Parts::GT)?.gt);
            acc = acc.add(&self.lt(&lap.partial(j), &f.wt[j])?.scale(2.0));
            for i in 0..3 {
                if i > j {
                    continue;
                }
                let hess = du[j].partial(i);
                let right = if i == j {
                    f.dwt[i][j].f.clone()
                } else {
                    f.dwt[i][j].f.add(&f.dwt[j][i].f)
                };
                acc = acc.add(&e.lt(&hess, &right)?.scale(4.0));
            }
        }
        Ok(acc)
    }

    /// `B_Ξ(u♭)`.
    pub fn b_xi(&self, u: &TorusField) -> Result<TorusField> {
        ensure_same_grid(self.grid(), u.grid())?;
        Ok(self.r_grouped(u, &u.gradient())?.inv_l())
    }

    /// `P_{>N}(A(u) + B(u))`.
    pub fn correction(&self, u: &TorusField, cutoff: usize) -> Result<TorusField> {
        Ok(self.a_term(u)?.add(&self.b_xi(u)?).high_pass(cutoff as f64))
    }

    pub fn gamma_solve(&self, u_sharp: &TorusField) -> Result<GammaSolve> {
        ensure_same_grid(self.grid(), u_sharp.grid())?;
        self.modes.require_inside(u_sharp)?;
        fixed_point::solve(u_sharp, |u| self.correction(u, self.cutoff), &GAMMA_3D, self.cutoff)
    }

    pub fn gamma(&self, u_sharp: &TorusField) -> Result<TorusField> {
        Ok(self.gamma_solve(u_sharp)?.field)
    }

    pub fn gamma_inverse(&self, u: &TorusField) -> Result<TorusField> {
        ensure_same_grid(self.grid(), u.grid())?;
        Ok(u.sub(&self.correction(u, self.cutoff)?))
    }

    /// `F(u♭) = Π(Δu♭ + 2∇W·∇u♭ + LZ u♭)`, no shift.
    pub fn flat_apply(&self, u: &TorusField) -> Result<TorusField> {
        let e = &self.engine;
        let mut acc = u.laplacian().add(&e.product(&self.k.lz.f, u)?);
        for j in 0..3 {
            acc = acc.add(&e.product(&self.k.lwt[j].f, &u.partial(j))?.scale(2.0));
        }
        Ok(self.modes.project(&acc))
    }

    /// `G(u♭)`, assembled term by term.
    pub fn g_apply(&self, u: &TorusField) -> Result<TorusField> {
        ensure_same_grid(self.grid(), u.grid())?;
        let f = &self.k;
        let e = &self.engine;
        let n = self.cutoff as f64;
        let g = self.grid();
        let du = u.gradient();
        let a = self.a_term(u)?;
        let b = self.r_grouped(u, &du)?.inv_l();
        let us = e.split(u)?;

        // Full_∘ and Full_≺≻ for u·(2y2 + y4) + Σ ∂_ju·(2Y1_j + 4Y3_j + 2Y5_j).
        let t = e.triple_split(&us, &f.u_full.s, Parts::ALL)?;
        let (mut full_res, mut full_side) = (t.resonant, t.lt.add(&t.gt));
        let mut full_prod = e.product(u, &f.u_full.f)?;
        for j in 0..3 {
            let t = e.triple_split(&e.split(&du[j])?, &f.du_full[j].s, Parts::ALL)?;
            full_res = full_res.add(&t.resonant);
            full_side = full_side.add(&t.lt).add(&t.gt);
            full_prod = full_prod.add(&e.product(&du[j], &f.du_full[j].f)?);
        }

        // Commutators C(f, g, h) = (f ≺ g) ∘ h - f·(g ∘ h), grouped by h.
        let mut by_lwt: Vec<TorusField> = Vec::with_capacity(3);
        for i in 0..3 {
            let mut acc = self.lt(&du[i], &f.z)?.scale(2.0);
            acc = acc.add(&self.lt(u, &f.dz[i])?.scale(2.0));
            for j in 0..3 {
                acc = acc.add(&self.lt(&du[j].partial(i), &f.wt[j])?.scale(4.0));
                acc = acc.add(&self.lt(&du[j], &f.dwt[i][j])?.scale(4.0));
            }
            by_lwt.push(acc);
        }
        let mut by_lz = self.lt(u, &f.z)?;
        for j in 0..3 {
            by_lz = by_lz.add(&self.lt(&du[j], &f.wt[j])?.scale(2.0));
        }
        let mut comm = self.res(&by_lz, &f.lz)?;
        for i in 0..3 {
            comm = comm.add(&self.res(&by_lwt[i], &f.lwt[i])?);
        }
        // The grid-level four-index term enters without a product subtraction.
        comm = comm.sub(&full_prod);

        // Resonant corrections from the projected parts of the ansatz.
        let pb = b.high_pass(n);
        let qa = a.low_pass(n);
        let mut corr = self.res(&pb, &f.lz)?.sub(&self.res(&qa, &f.lz)?);
        for i in 0..3 {
            let x = pb.partial(i).sub(&qa.partial(i)).scale(2.0);
            corr = corr.add(&self.res(&x, &f.lwt[i])?);
        }

        // Low-frequency remainder.
        let mut low = self.lt(u, &f.lz)?.add(&self.gt(u, &f.lz)?).add(&full_side);
        for j in 0..3 {
            low = low.add(&self.lt(&du[j], &f.lwt[j])?.scale(2.0));
            low = low.add(&self.gt(&du[j], &f.lwt[j])?.scale(2.0));
        }
        let low = low.low_pass(n);

        let total = sum_fields(g, [&pb, &full_res, &comm, &corr, &low]);
        Ok(self.modes.project(&total))
    }

    /// Evaluates `H e^W Γ u♯` and its flat form.
    pub fn h3_apply(&self, u_sharp: &TorusField) -> Result<H3Evaluation> {
        let u_flat = self.gamma(u_sharp)?;
        self.h3_apply_with(u_sharp, u_flat)
    }

    pub fn h3_apply_with(&self, u_sharp: &TorusField, u_flat: TorusField) -> Result<H3Evaluation> {
        let f = &self.k;
        let mut flat = u_sharp.laplacian().add(&self.res(u_sharp, &f.lz)?).add(&self.g_apply(&u_flat)?);
        for j in 0..3 {
            flat = flat.add(&self.res(&u_sharp.partial(j), &f.lwt[j])?.scale(2.0));
        }
        let flat = self.modes.project(&flat).sub(&u_flat.scale(self.shift));
        let hu = self.exp_w_plus.mul_pointwise(&flat);
        let u = self.exp_w_plus.mul_pointwise(&u_flat);
        Ok(H3Evaluation { u_sharp: u_sharp.clone(), u_flat, u, flat, hu })
    }

    /// `e^W (F(u♭) - shift·u♭)` without the ansatz.
    pub fn h3_apply_preansatz(&self, u_flat: &TorusField) -> Result<TorusField> {
        let flat = self.flat_apply(u_flat)?.sub(&u_flat.scale(self.shift));
        Ok(self.exp_w_plus.mul_pointwise(&flat))
    }

    /// `H♯u♯ = Γ^{-1} e^{-W} H e^W Γ u♯`.
    pub fn h3_sharp_apply(&self, u_sharp: &TorusField) -> Result<TorusField> {
        let ev = self.h3_apply(u_sharp)?;
        let back = self.modes.project(&self.exp_w_minus.mul_pointwise(&ev.hu));
        self.gamma_inverse(&back)
    }

    /// `-Re⟨Hu, v⟩` for `u = e^W u♭`, `v = e^W v♭`.
    pub fn energy_form_flat(&self, u_flat: &TorusField, v_flat: &TorusField) -> Result<f64> {
        let hu = self.h3_apply_preansatz(u_flat)?;
        let v = self.exp_w_plus.mul_pointwise(v_flat);
        Ok(-hu.inner(&v).re)
    }

    pub fn manifest(&self, seed: Option<u64>, classical: Option<(f64, f64)>) -> OperatorManifest {
        let mut constants = BTreeMap::new();
        constants.insert("c1".to_string(), self.noise.c1_eps);
        constants.insert("c2".to_string(), self.noise.c2_eps);
        if let Some((a, b)) = classical {
            constants.insert("c1_classical".to_string(), a);
            constants.insert("c2_classical".to_string(), b);
        }
        OperatorManifest {
            dim: 3,
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
