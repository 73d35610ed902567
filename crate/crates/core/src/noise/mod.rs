// SPDX-License-Identifier: Apache-2.0
//! White noise, mollification, renormalization constants and enhanced noise.

mod bundle;
mod enhance;
mod renorm;

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fourier::{Grid, TorusField};

pub use bundle::{load_bundle, save_bundle, NoiseBundle, NoiseManifest, BUNDLE_SCHEMA};
pub use enhance::{
    enhance_2d, enhance_3d, EnhancedNoise2d, EnhancedNoise3d, NoiseScale, HOLDER_TREES_3D, HOLDER_XI2_2D,
    HOLDER_XI_2D,
};
pub use renorm::{
    renorm_c1_3d, renorm_constant_2d, renorm_constants_3d, wick_constant_2d, wick_constants_3d, DEFAULT_C2_CAP,
};

/// A real white-noise realization on the grid.
#[derive(Clone, Debug)]
pub struct WhiteNoiseSample {
    pub field: TorusField,
    pub seed: u64,
    pub zero_mode_removed: bool,
}

/// Deterministic seeded generator used across the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit-variance complex Gaussian: real and imaginary parts of variance 1/2.
pub(crate) fn complex_gaussian(r: &mut ChaCha8Rng) -> Complex64 {
    let a: f64 = r.sample(StandardNormal);
    let b: f64 = r.sample(StandardNormal);
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Samples `ξ̂(k)` i.i.d. on a half lattice and completes by `ξ̂(-k) = conj ξ̂(k)`.
/// Self-conjugate modes get a real unit Gaussian. In 3d the zero mode is removed.
pub fn sample_white_noise(dim: usize, m: usize, seed: u64) -> Result<WhiteNoiseSample> {
    let grid = Grid::new(dim, m)?;
    let t = grid.tables();
    let mut r = rng(seed);
    let mut c = vec![Complex64::default(); grid.len()];
    for i in 0..grid.len() {
        let j = t.neg[i] as usize;
        if j == i {
            let x: f64 = r.sample(StandardNormal);
            c[i] = Complex64::new(x, 0.0);
        } else if j > i {
            let z = complex_gaussian(&mut r);
            c[i] = z;
            c[j] = z.conj();
        }
    }
    let zero_mode_removed = dim == 3;
    if zero_mode_removed {
        c[0] = Complex64::default();
    }
    Ok(WhiteNoiseSample { field: TorusField::from_coeffs(grid, c, true)?, seed, zero_mode_removed })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum MollifierKind {
    /// `θ = 1` on `[0, 1]`, zero beyond.
    #[default]
    SharpCutoff,
    /// `1` on `[0, 1/2]`, `cos²(π(r - 1/2))` on `(1/2, 1)`, zero beyond.
    SmoothBump,
}

/// Radial Fourier mollifier `θ(ε|k|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub kind: MollifierKind,
    pub eps: f64,
}

impl Mollifier {
    pub fn new(kind: MollifierKind, eps: f64) -> Self {
        Self { kind, eps }
    }

    pub fn sharp(eps: f64) -> Self {
        Self::new(MollifierKind::SharpCutoff, eps)
    }

    pub fn profile(&self, r: f64) -> f64 {
        profile(self.kind, r)
    }

    pub fn weight(&self, k_abs: f64) -> f64 {
        self.profile(self.eps * k_abs)
    }

    /// Largest `|k|` with nonzero weight.
    pub fn support_radius(&self) -> f64 {
        1.0 / self.eps
    }
}

pub fn profile(kind: MollifierKind, r: f64) -> f64 {
    match kind {
        MollifierKind::SharpCutoff => {
            if r <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
        MollifierKind::SmoothBump => {
            if r <= 0.5 {
                1.0
            } else if r < 1.0 {
                (PI * (r - 0.5)).cos().powi(2)
            } else {
                0.0
            }
        }
    }
}

/// `ξ_ε = Σ θ(ε|k|) ξ̂(k) e_k`.
pub fn mollify(xi: &TorusField, mollifier: &Mollifier) -> TorusField {
    let m = *mollifier;
    xi.radial(move |k2| m.weight(k2.sqrt()))
}
