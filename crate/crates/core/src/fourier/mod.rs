// SPDX-License-Identifier: Apache-2.0
//! Torus fields, transforms, Littlewood-Paley blocks and norms.
//!
//! Convention: `f(x) = Σ_k c_k e^{2πik·x}` with `c_k = M^{-d} Σ_x f(x) e^{-2πik·x}`,
//! so `||f||_{L²}` under the cell weight `M^{-d}` equals `(Σ|c_k|²)^{1/2}` and the
//! Laplacian has symbol `-4π²|k|²`.

mod dyadic;
pub mod fft;
mod field;
mod grid;
pub mod io;
mod norms;

pub use dyadic::{high_pass, low_pass, lp_block, sharp_block, DyadicDecomposition, Flavor};
pub use fft::Direction;
pub use field::{sum_fields, TorusField};
pub use grid::{Grid, GridTables};
pub use norms::{
    besov_norm, besov_norm_with, block_lp_norms, holder_norm, lp_norm, sobolev_norm, wsp_norm, NormEntry,
    NormReport,
};
pub(crate) use field::FOUR_PI2;

pub use rustfft::num_complex::Complex64;

/// Transform between point values and coefficients of a field's grid.
pub fn transform(grid: Grid, data: &[Complex64], direction: Direction) -> Vec<Complex64> {
    match direction {
        Direction::Forward => fft::forward(grid, data),
        Direction::Inverse => fft::inverse(grid, data),
    }
}
