// SPDX-License-Identifier: Apache-2.0
//! Binary field container.
//!
//! Layout: the magic `ANDLFLD1`, a little-endian `u32` header length, a JSON
//! header `{dim, m, real, layout}`, then `m^dim` pairs of little-endian `f64`
//! `(re, im)` in row-major frequency order, each axis from `-m/2+1` to `m/2`.

use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid, TorusField};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ANDLFLD1";
pub const LAYOUT: &str = "row-major frequency, k from -M/2+1 to M/2 per axis";

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub dim: usize,
    pub m: usize,
    pub real: bool,
    pub layout: String,
}

/// Storage indices in container order (row-major, ascending frequency).
fn container_order(grid: Grid) -> Vec<usize> {
    let m = grid.m();
    let h = grid.half();
    let axis: Vec<usize> = (-h + 1..=h).map(|k| k.rem_euclid(m as i64) as usize).collect();
    let mut out = Vec::with_capacity(grid.len());
    let mut idx = vec![0usize; grid.dim()];
    loop {
        out.push(idx.iter().fold(0usize, |acc, &i| acc * m + axis[i]));
        let mut a = grid.dim();
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
        }
    }
}

pub fn write_field<W: Write>(mut w: W, f: &TorusField) -> Result<()> {
    let grid = f.grid();
    let header = FieldHeader { dim: grid.dim(), m: grid.m(), real: f.is_real(), layout: LAYOUT.into() };
    let json = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(grid.len() * 16);
    for i in container_order(grid) {
        let c = f.coeffs()[i];
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<TorusField> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: FieldHeader = serde_json::from_slice(&json)?;
    if header.layout != LAYOUT {
        return Err(Error::Format(format!("unsupported layout {:?}", header.layout)));
    }
    let grid = Grid::new(header.dim, header.m)?;
    let mut data = vec![0u8; grid.len() * 16];
    r.read_exact(&mut data)?;
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for (n, i) in container_order(grid).into_iter().enumerate() {
        let re = f64::from_le_bytes(data[16 * n..16 * n + 8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(data[16 * n + 8..16 * n + 16].try_into().expect("8 bytes"));
        coeffs[i] = Complex64::new(re, im);
    }
    Ok(TorusField::raw(grid, coeffs, header.real))
}

/// Writes through a temporary sibling and renames, so readers never see a partial file.
pub fn save_field(path: &Path, f: &TorusField) -> Result<()> {
    let mut buf = Vec::new();
    write_field(&mut buf, f)?;
    write_atomic(path, &buf)
}

pub fn load_field(path: &Path) -> Result<TorusField> {
    read_field(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
