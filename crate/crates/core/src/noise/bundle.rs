// SPDX-License-Identifier: Apache-2.0
//! Noise bundles: a directory of field containers plus `manifest.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::enhance::NoiseScale;
use super::{EnhancedNoise2d, EnhancedNoise3d, MollifierKind};
use crate::error::{Error, Result};
use crate::fourier::io::{load_field, save_field, write_atomic};
use crate::fourier::{Grid, NormReport};

pub const MANIFEST: &str = "manifest.json";
pub const BUNDLE_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseManifest {
    pub schema: u32,
    pub dim: usize,
    pub m: usize,
    pub eps: f64,
    pub mollifier: MollifierKind,
    pub amplitude: f64,
    pub seed: Option<u64>,
    /// 2d: `[c_eps]`; 3d: `[c1, c2]`. These are the subtracted constants.
    pub constants: Vec<f64>,
    /// The classical lattice sums for reference.
    pub classical_constants: Vec<f64>,
    pub norms: NormReport,
    pub files: Vec<String>,
}

#[derive(Clone, Debug)]
pub enum NoiseBundle {
    TwoD(EnhancedNoise2d),
    ThreeD(EnhancedNoise3d),
}

fn names_2d() -> Vec<String> {
    ["xi", "X", "xi2"].iter().map(|s| format!("{s}.fld")).collect()
}

fn names_3d() -> Vec<String> {
    ["xi", "X", "X1", "X2", "X3", "X4", "X5"].iter().map(|s| format!("{s}.fld")).collect()
}

/// Writes the bundle; the manifest goes last so a complete manifest implies complete fields.
pub fn save_bundle(
    dir: &Path,
    bundle: &NoiseBundle,
    seed: Option<u64>,
    classical_constants: Vec<f64>,
) -> Result<NoiseManifest> {
    std::fs::create_dir_all(dir)?;
    let (grid, scale, constants, norms, files, fields) = match bundle {
        NoiseBundle::TwoD(n) => (
            n.grid(),
            n.scale,
            vec![n.c_eps],
            n.norms.clone(),
            names_2d(),
            vec![&n.xi, &n.x, &n.xi2],
        ),
        NoiseBundle::ThreeD(n) => (
            n.grid(),
            n.scale,
            vec![n.c1_eps, n.c2_eps],
            n.norms.clone(),
            names_3d(),
            vec![&n.xi, &n.x, &n.x1, &n.x2, &n.x3, &n.x4, &n.x5],
        ),
    };
    for (name, f) in files.iter().zip(fields) {
        save_field(&dir.join(name), f)?;
    }
    let manifest = NoiseManifest {
        schema: BUNDLE_SCHEMA,
        dim: grid.dim(),
        m: grid.m(),
        eps: scale.mollifier.eps,
        mollifier: scale.mollifier.kind,
        amplitude: scale.amplitude,
        seed,
        constants,
        classical_constants,
        norms,
        files,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_atomic(&dir.join(MANIFEST), &json)?;
    Ok(manifest)
}

pub fn load_bundle(dir: &Path) -> Result<(NoiseManifest, NoiseBundle)> {
    let manifest: NoiseManifest = serde_json::from_slice(&std::fs::read(dir.join(MANIFEST))?)?;
    if manifest.schema != BUNDLE_SCHEMA {
        return Err(Error::Format(format!("unsupported bundle schema {}", manifest.schema)));
    }
    let grid = Grid::new(manifest.dim, manifest.m)?;
    let mut fields = Vec::new();
    for name in &manifest.files {
        let f = load_field(&dir.join(name))?;
        if f.grid() != grid {
            return Err(Error::GridMismatch(grid, f.grid()));
        }
        fields.push(f);
    }
    let scale = NoiseScale {
        mollifier: super::Mollifier::new(manifest.mollifier, manifest.eps),
        amplitude: manifest.amplitude,
    };
    let bundle = match (manifest.dim, fields.len(), manifest.constants.as_slice()) {
        (2, 3, &[c]) => {
            let mut it = fields.into_iter();
            let (xi, x, xi2) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
            NoiseBundle::TwoD(EnhancedNoise2d {
                xi,
                x,
                xi2,
                c_eps: c,
                scale,
                norms: manifest.norms.clone(),
            })
        }
        (3, 7, &[c1, c2]) => {
            let mut it = fields.into_iter();
            let xi = it.next().unwrap();
            let trees: [_; 6] = std::array::from_fn(|_| it.next().unwrap());
            NoiseBundle::ThreeD(EnhancedNoise3d::from_trees(xi, trees, (c1, c2), scale)?)
        }
        _ => return Err(Error::Format("manifest does not describe a 2d or 3d noise bundle".into())),
    };
    Ok((manifest, bundle))
}
