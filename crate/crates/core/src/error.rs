// SPDX-License-Identifier: Apache-2.0
use crate::fourier::Grid;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(Grid, Grid),

    #[error("block index {j} outside -1..={max}")]
    BlockRange { j: i32, max: i32 },

    #[error(
        "fixed-point map did not contract (ratio {ratio:.3} at iteration {iteration}); increase the cutoff N (currently {cutoff})"
    )]
    NonContraction { ratio: f64, iteration: usize, cutoff: usize },

    #[error("no cutoff up to N = {max} gives a contraction: grid too small for this noise realization")]
    CutoffExhausted { max: usize },

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("field has content outside the mode set (relative weight {excess:.3e}); refusing to truncate silently")]
    Truncation { excess: f64 },

    #[error("iteration diverged: difference ratio {ratio:.3} at iteration {iteration}")]
    Divergence { ratio: f64, iteration: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid field container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_same_grid(a: Grid, b: Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(a, b))
    }
}
