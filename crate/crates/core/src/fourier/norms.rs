// SPDX-License-Identifier: Apache-2.0
use serde::{Deserialize, Serialize};

use super::field::FOUR_PI2;
use super::{DyadicDecomposition, TorusField};

/// `L^p` norm by grid quadrature with cell weight `M^-d`; `p = ∞` gives the max.
pub fn lp_norm(f: &TorusField, p: f64) -> f64 {
    lp_of_values(f.values().iter().map(|v| v.norm()), f.grid().cell_weight(), p)
}

pub(crate) fn lp_of_values(abs: impl Iterator<Item = f64>, w: f64, p: f64) -> f64 {
    if p.is_infinite() {
        abs.fold(0.0, f64::max)
    } else {
        (abs.map(|a| a.powf(p)).sum::<f64>() * w).powf(1.0 / p)
    }
}

fn lq_combine(terms: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Per-block `L^p` norms `||Δ_j f||_{L^p}` for `j = -1..=J`.
pub fn block_lp_norms(f: &TorusField, decomp: &DyadicDecomposition, p: f64) -> Vec<f64> {
    decomp
        .blocks(f)
        .expect("decomposition grid matches field")
        .iter()
        .map(|b| if b.is_zero() { 0.0 } else { lp_norm(b, p) })
        .collect()
}

/// `(Σ_j (2^{jα} ||Δ_j f||_{L^p})^q)^{1/q}` with block `-1` at weight 1.
pub fn besov_norm_with(f: &TorusField, decomp: &DyadicDecomposition, alpha: f64, p: f64, q: f64) -> f64 {
    let norms = block_lp_norms(f, decomp, p);
    lq_combine(
        norms.iter().enumerate().map(|(b, &n)| {
            let j = b as i32 - 1;
            if j < 0 {
                n
            } else {
                2f64.powf(j as f64 * alpha) * n
            }
        }),
        q,
    )
}

/// Besov norm with the default sharp blocks.
pub fn besov_norm(f: &TorusField, alpha: f64, p: f64, q: f64) -> f64 {
    besov_norm_with(f, &DyadicDecomposition::sharp(f.grid()), alpha, p, q)
}

/// Hölder-Besov norm `C^α = B^α_{∞,∞}`.
pub fn holder_norm(f: &TorusField, alpha: f64) -> f64 {
    besov_norm(f, alpha, f64::INFINITY, f64::INFINITY)
}

/// `(Σ_k (1 + 4π²|k|²)^s |c_k|²)^{1/2}`.
pub fn sobolev_norm(f: &TorusField, s: f64) -> f64 {
    let t = f.grid().tables();
    f.coeffs()
        .iter()
        .zip(&t.k2)
        .map(|(c, &k2)| (1.0 + FOUR_PI2 * k2).powf(s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Bessel-potential norm `||(1-Δ)^{s/2} f||_{L^p}`.
pub fn wsp_norm(f: &TorusField, s: f64, p: f64) -> f64 {
    if s == 0.0 {
        lp_norm(f, p)
    } else {
        lp_norm(&f.bessel(s), p)
    }
}

/// Named norm values exported as JSON.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct NormReport {
    pub grid: String,
    pub entries: Vec<NormEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NormEntry {
    pub name: String,
    pub kind: String,
    pub value: f64,
}

impl NormReport {
    pub fn new(grid: super::Grid) -> Self {
        Self { grid: grid.to_string(), entries: Vec::new() }
    }

    pub fn push(&mut self, name: &str, kind: String, value: f64) {
        self.entries.push(NormEntry { name: name.to_string(), kind, value });
    }

    /// Adds the standard norms of one field.
    pub fn record(&mut self, name: &str, f: &TorusField) {
        self.push(name, "L2".into(), lp_norm(f, 2.0));
        self.push(name, "Linf".into(), lp_norm(f, f64::INFINITY));
        self.push(name, "H1".into(), sobolev_norm(f, 1.0));
    }

    pub fn get(&self, name: &str, kind: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name && e.kind == kind).map(|e| e.value)
    }
}
