// SPDX-License-Identifier: Apache-2.0
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A cubic lattice of `m` points per axis on the unit torus of dimension `dim`.
///
/// Frequencies along an axis run over `-m/2+1 ..= m/2`; storage is FFT order,
/// so axis index `i` carries frequency `i` for `i <= m/2` and `i - m` above.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    m: usize,
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.m, self.dim)
    }
}

impl Grid {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::Config(format!("grid size must be a power of two >= 2, got {m}")));
        }
        Ok(Self { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn half(&self) -> i64 {
        (self.m / 2) as i64
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one grid cell, `m^-dim`.
    pub fn cell_weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn freq(&self, i: usize) -> i64 {
        if i <= self.m / 2 {
            i as i64
        } else {
            i as i64 - self.m as i64
        }
    }

    fn axis_index(&self, k: i64) -> Option<usize> {
        let h = self.half();
        if k > h || k <= -h {
            None
        } else {
            Some(k.rem_euclid(self.m as i64) as usize)
        }
    }

    /// Storage index of wavevector `k`, or `None` when `k` is not representable.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let mut idx = 0usize;
        for &ka in k {
            idx = idx * self.m + self.axis_index(ka)?;
        }
        Some(idx)
    }

    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let mut out = [0i64; 3];
        let mut rest = idx;
        for a in (0..self.dim).rev() {
            out[a] = self.freq(rest % self.m);
            rest /= self.m;
        }
        out
    }

    /// Largest squared frequency norm on the grid.
    pub fn max_k2(&self) -> i64 {
        self.dim as i64 * self.half() * self.half()
    }

    pub fn tables(&self) -> Arc<GridTables> {
        static CACHE: LazyLock<Mutex<HashMap<Grid, Arc<GridTables>>>> =
            LazyLock::new(|| Mutex::new(HashMap::new()));
        let mut cache = CACHE.lock().expect("grid table cache poisoned");
        cache.entry(*self).or_insert_with(|| Arc::new(GridTables::build(*self))).clone()
    }
}

/// Per-index lookup tables shared by all fields on one grid.
#[derive(Debug)]
pub struct GridTables {
    pub k: Vec<[i32; 3]>,
    pub k2: Vec<f64>,
    pub linf: Vec<u32>,
    /// Index of `-k` modulo the grid; self-conjugate indices map to themselves.
    pub neg: Vec<u32>,
}

impl GridTables {
    fn build(grid: Grid) -> Self {
        let n = grid.len();
        let m = grid.m() as i64;
        let mut k = Vec::with_capacity(n);
        let mut k2 = Vec::with_capacity(n);
        let mut linf = Vec::with_capacity(n);
        let mut neg = Vec::with_capacity(n);
        for idx in 0..n {
            let kv = grid.wavevector(idx);
            k.push([kv[0] as i32, kv[1] as i32, kv[2] as i32]);
            k2.push((kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]) as f64);
            linf.push(kv.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as u32);
            let mut j = 0i64;
            for &c in kv.iter().take(grid.dim()) {
                j = j * m + (-c).rem_euclid(m);
            }
            neg.push(j as u32);
        }
        Self { k, k2, linf, neg }
    }
}
