// SPDX-License-Identifier: Apache-2.0
//! Divergent constants as exact lattice sums.
//!
//! Two normalizations appear. The classical forms use `1 + |k|²` and `|k|²`
//! (frequencies on the `2π`-periodic torus). The Wick forms are the exact
//! Gaussian means of the products built by [`super::enhance_2d`] and
//! [`super::enhance_3d`] under the `e^{2πik·x}` convention, and are the
//! constants actually subtracted there.

use std::f64::consts::PI;

use super::{profile, MollifierKind};
use crate::error::{Error, Result};
use crate::fourier::FOUR_PI2;

/// Largest mode radius admitted by the quadratic-cost 3d double sums.
pub const DEFAULT_C2_CAP: f64 = 16.0;

/// Lattice points of the mollifier support representable on an `m`-grid,
/// with `θ²` attached. `strict` drops the Nyquist layer `|k_a| = m/2`.
fn support(dim: usize, eps: f64, kind: MollifierKind, m: usize, strict: bool) -> Vec<([i64; 3], f64)> {
    let h = (m / 2) as i64;
    let hi = if strict { h - 1 } else { h };
    let lo = -h + 1;
    let r = (1.0 / eps).floor() as i64;
    let (a, b) = (lo.max(-r), hi.min(r));
    let mut out = Vec::new();
    let range = |on: bool| if on { a..=b } else { 0..=0 };
    for k0 in range(true) {
        for k1 in range(dim >= 2) {
            for k2 in range(dim >= 3) {
                let n2 = (k0 * k0 + k1 * k1 + k2 * k2) as f64;
                let th = profile(kind, eps * n2.sqrt());
                if th != 0.0 {
                    out.push(([k0, k1, k2], th * th));
                }
            }
        }
    }
    out
}

/// `c_ε = Σ_k θ²(ε|k|) / (1 + |k|²)` over representable `k ∈ ℤ²`.
pub fn renorm_constant_2d(eps: f64, kind: MollifierKind, m: usize) -> f64 {
    support(2, eps, kind, m, false)
        .iter()
        .map(|(k, t2)| t2 / (1.0 + (k[0] * k[0] + k[1] * k[1]) as f64))
        .sum()
}

/// `Σ_k θ²(ε|k|) / (1 + 4π²|k|²)`, the mean of `ξ_ε ∘ (1-Δ)^{-1} ξ_ε`.
pub fn wick_constant_2d(eps: f64, kind: MollifierKind, m: usize) -> f64 {
    support(2, eps, kind, m, true)
        .iter()
        .map(|(k, t2)| t2 / (1.0 + FOUR_PI2 * (k[0] * k[0] + k[1] * k[1]) as f64))
        .sum()
}

fn check_cap(eps: f64, m: usize, cap: f64) -> Result<()> {
    let reach = (1.0 / eps).min((m / 2) as f64);
    if reach > cap {
        return Err(Error::CostGuard(format!(
            "3d double sum over |k| <= {reach} exceeds the configured cap {cap}; \
             raise the cap explicitly or use a coarser grid / larger eps"
        )));
    }
    Ok(())
}

fn nonzero_support(eps: f64, kind: MollifierKind, m: usize, strict: bool) -> Vec<([f64; 3], f64, f64)> {
    support(3, eps, kind, m, strict)
        .into_iter()
        .filter(|(k, _)| *k != [0, 0, 0])
        .map(|(k, t2)| {
            let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
            (kf, kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2], t2)
        })
        .collect()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `c¹_ε = Σ θ²(ε|k|)/|k|²` alone; no cost guard since it is a single sum.
pub fn renorm_c1_3d(eps: f64, kind: MollifierKind, m: usize) -> f64 {
    nonzero_support(eps, kind, m, false).iter().map(|(_, n2, t2)| t2 / n2).sum()
}

/// `(c¹_ε, c²_ε)` with `c¹ = Σ θ²/|k|²` and
/// `c² = Σ_{k₁≠k₂} θ²θ² |k₁·k₂| / (|k₁-k₂|² |k₁|⁴ |k₂|²)`, both over `k ≠ 0`.
pub fn renorm_constants_3d(eps: f64, kind: MollifierKind, m: usize, cap: f64) -> Result<(f64, f64)> {
    check_cap(eps, m, cap)?;
    let pts = nonzero_support(eps, kind, m, false);
    let c1 = pts.iter().map(|(_, n2, t2)| t2 / n2).sum();
    let mut c2 = 0.0;
    for (k1, n1, t1) in &pts {
        let mut row = 0.0;
        for (k2, n2, t2) in &pts {
            let d = [k1[0] - k2[0], k1[1] - k2[1], k1[2] - k2[2]];
            let dd = dot(&d, &d);
            if dd == 0.0 {
                continue;
            }
            row += t2 * dot(k1, k2).abs() / (dd * n2);
        }
        c2 += t1 * row / (n1 * n1);
    }
    Ok((c1, c2))
}

/// Exact means `(E|∇X|², E|∇X¹|²)` for the trees built by [`super::enhance_3d`]:
/// `c¹ = Σ θ²/(4π²|k|²)` and
/// `c² = Σ_{m≠0} 4π²|m|²/(1+4π²|m|²)² · 2 Σ_{k+l=m} θ_k²θ_l² (k·l)²/(16π⁴|k|⁴|l|⁴)`.
pub fn wick_constants_3d(eps: f64, kind: MollifierKind, m: usize, cap: f64) -> Result<(f64, f64)> {
    check_cap(eps, m, cap)?;
    let pts = nonzero_support(eps, kind, m, true);
    let c1 = pts.iter().map(|(_, n2, t2)| t2 / (FOUR_PI2 * n2)).sum();
    let lim = (m / 2) as f64 - 1.0;
    let pi4 = 16.0 * PI.powi(4);
    let mut c2 = 0.0;
    for (k, nk, tk) in &pts {
        let mut row = 0.0;
        for (l, nl, tl) in &pts {
            let s = [k[0] + l[0], k[1] + l[1], k[2] + l[2]];
            if s.iter().any(|c| c.abs() > lim) {
                continue;
            }
            let ns = dot(&s, &s);
            if ns == 0.0 {
                continue;
            }
            let q = FOUR_PI2 * ns;
            let kl = dot(k, l);
            row += q / ((1.0 + q) * (1.0 + q)) * tl * kl * kl / (nl * nl);
        }
        c2 += 2.0 * tk * row / (pi4 * nk * nk);
    }
    Ok((c1, c2))
}
