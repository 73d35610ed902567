// SPDX-License-Identifier: Apache-2.0
use std::sync::{Arc, LazyLock, Mutex};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Point values to coefficients.
    Forward,
    /// Coefficients to point values.
    Inverse,
}

static PLANNER: LazyLock<Mutex<FftPlanner<f64>>> = LazyLock::new(|| Mutex::new(FftPlanner::new()));

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let fdir = match dir {
        Direction::Forward => FftDirection::Forward,
        Direction::Inverse => FftDirection::Inverse,
    };
    PLANNER.lock().expect("fft planner poisoned").plan_fft(n, fdir)
}

/// Unnormalized transform of a cube of side `n` in `dim` dimensions, in place.
pub fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, dir: Direction) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    if n == 1 {
        return;
    }
    let fft = plan(n, dir);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // last axis is contiguous
    fft.process_with_scratch(data, &mut scratch);
    let mut tmp: Vec<Complex64> = Vec::new();
    for axis in (0..dim.saturating_sub(1)).rev() {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = n * stride;
        tmp.resize(block, Complex64::default());
        for chunk in data.chunks_exact_mut(block) {
            for i in 0..n {
                let row = &chunk[i * stride..(i + 1) * stride];
                for (s, v) in row.iter().enumerate() {
                    tmp[s * n + i] = *v;
                }
            }
            fft.process_with_scratch(&mut tmp, &mut scratch);
            for i in 0..n {
                let row = &mut chunk[i * stride..(i + 1) * stride];
                for (s, v) in row.iter_mut().enumerate() {
                    *v = tmp[s * n + i];
                }
            }
        }
    }
}

/// Coefficients `M^-d Σ_x f(x) e^{-2πik·x}` from point values.
pub fn forward(grid: Grid, values: &[Complex64]) -> Vec<Complex64> {
    let mut out = values.to_vec();
    fft_nd(&mut out, grid.dim(), grid.m(), Direction::Forward);
    let w = grid.cell_weight();
    out.iter_mut().for_each(|c| *c *= w);
    out
}

/// Point values `Σ_k c_k e^{2πik·x}` from coefficients.
pub fn inverse(grid: Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut out = coeffs.to_vec();
    fft_nd(&mut out, grid.dim(), grid.m(), Direction::Inverse);
    out
}

/// Smallest integer `>= n` of the form `2^a 3^b 5^c`.
pub fn fast_size(n: usize) -> usize {
    let mut p = n.max(1);
    loop {
        let mut r = p;
        for f in [2, 3, 5] {
            while r % f == 0 {
                r /= f;
            }
        }
        if r == 1 {
            return p;
        }
        p += 1;
    }
}
