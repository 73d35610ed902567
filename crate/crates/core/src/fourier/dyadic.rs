// SPDX-License-Identifier: Apache-2.0
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, LazyLock, Mutex};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid, TorusField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    /// Indicator blocks: `{0}` and `2^{j-1} < |k| <= 2^j`.
    #[default]
    SharpAnnulus,
    /// Raised-cosine taper across one octave around each shell boundary.
    SmoothedAnnulus,
}

/// Littlewood-Paley blocks `j = -1, 0, ..., J` on one grid.
#[derive(Debug)]
pub struct DyadicDecomposition {
    grid: Grid,
    flavor: Flavor,
    j_max: i32,
    /// Per index, up to two `(block, weight)` pairs; unused slots carry weight 0.
    entries: Vec<[(i8, f64); 2]>,
}

/// Sharp block of squared norm `k2`: `-1` for the zero mode, else smallest `j` with `|k| <= 2^j`.
pub fn sharp_block(k2: f64) -> i32 {
    if k2 == 0.0 {
        return -1;
    }
    let mut j = 0;
    let mut cap = 1.0;
    while cap < k2 {
        cap *= 4.0;
        j += 1;
    }
    j
}

fn taper(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        (0.5 * PI * x).cos().powi(2)
    }
}

impl DyadicDecomposition {
    pub fn new(grid: Grid, flavor: Flavor) -> Arc<Self> {
        static CACHE: LazyLock<Mutex<HashMap<(Grid, Flavor), Arc<DyadicDecomposition>>>> =
            LazyLock::new(|| Mutex::new(HashMap::new()));
        let mut cache = CACHE.lock().expect("dyadic cache poisoned");
        cache.entry((grid, flavor)).or_insert_with(|| Arc::new(Self::build(grid, flavor))).clone()
    }

    pub fn sharp(grid: Grid) -> Arc<Self> {
        Self::new(grid, Flavor::SharpAnnulus)
    }

    fn build(grid: Grid, flavor: Flavor) -> Self {
        let j_max = sharp_block(grid.max_k2() as f64);
        let t = grid.tables();
        let entries = t
            .k2
            .iter()
            .map(|&k2| match flavor {
                Flavor::SharpAnnulus => [(sharp_block(k2) as i8, 1.0), (0, 0.0)],
                Flavor::SmoothedAnnulus => {
                    if k2 == 0.0 {
                        return [(-1, 1.0), (0, 0.0)];
                    }
                    // cumulative weight χ_j = taper(log2|k| - j + 1/2), one transition per octave
                    let u = 0.5 * k2.log2();
                    let chi = |j: i32| if j < 0 { 0.0 } else if j >= j_max { 1.0 } else { taper(u - j as f64 + 0.5) };
                    let mut out = [(0i8, 0.0); 2];
                    let mut n = 0;
                    for j in 0..=j_max {
                        let w = chi(j) - chi(j - 1);
                        if w > 0.0 && n < 2 {
                            out[n] = (j as i8, w);
                            n += 1;
                        }
                    }
                    out
                }
            })
            .collect();
        Self { grid, flavor, j_max, entries }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Largest block index `J`.
    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Number of blocks, `J + 2`.
    pub fn block_count(&self) -> usize {
        (self.j_max + 2) as usize
    }

    pub(crate) fn entries(&self, idx: usize) -> &[(i8, f64); 2] {
        &self.entries[idx]
    }

    /// Weight of block `j` at storage index `idx`.
    pub fn weight(&self, idx: usize, j: i32) -> f64 {
        self.entries[idx].iter().filter(|(b, w)| *b as i32 == j && *w > 0.0).map(|e| e.1).sum()
    }

    fn check_block(&self, j: i32) -> Result<()> {
        if j < -1 || j > self.j_max {
            Err(Error::BlockRange { j, max: self.j_max })
        } else {
            Ok(())
        }
    }

    /// `Δ_j f`.
    pub fn block(&self, f: &TorusField, j: i32) -> Result<TorusField> {
        crate::error::ensure_same_grid(self.grid, f.grid())?;
        self.check_block(j)?;
        let c: Vec<Complex64> =
            f.coeffs().iter().enumerate().map(|(i, &c)| c * self.weight(i, j)).collect();
        Ok(TorusField::raw(self.grid, c, f.is_real()))
    }

    /// All blocks `Δ_{-1} f, ..., Δ_J f` in order.
    pub fn blocks(&self, f: &TorusField) -> Result<Vec<TorusField>> {
        crate::error::ensure_same_grid(self.grid, f.grid())?;
        let nb = self.block_count();
        let mut out = vec![vec![Complex64::default(); self.grid.len()]; nb];
        for (i, &c) in f.coeffs().iter().enumerate() {
            for &(b, w) in &self.entries[i] {
                if w > 0.0 {
                    out[(b as i32 + 1) as usize][i] += c * w;
                }
            }
        }
        Ok(out.into_iter().map(|c| TorusField::raw(self.grid, c, f.is_real())).collect())
    }

    /// `S_j f = Σ_{i <= j-1} Δ_i f`.
    pub fn partial_sum(&self, f: &TorusField, j: i32) -> Result<TorusField> {
        crate::error::ensure_same_grid(self.grid, f.grid())?;
        let c: Vec<Complex64> = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let w: f64 = self.entries[i].iter().filter(|(b, _)| (*b as i32) <= j - 1).map(|e| e.1).sum();
                c * w
            })
            .collect();
        Ok(TorusField::raw(self.grid, c, f.is_real()))
    }
}

/// `Δ_j f` with the default sharp decomposition.
pub fn lp_block(f: &TorusField, j: i32) -> Result<TorusField> {
    DyadicDecomposition::sharp(f.grid()).block(f, j)
}

/// `P_{<=N} f`.
pub fn low_pass(f: &TorusField, n: f64) -> TorusField {
    f.low_pass(n)
}

/// `P_{>N} f`.
pub fn high_pass(f: &TorusField, n: f64) -> TorusField {
    f.high_pass(n)
}
