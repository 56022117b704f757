//! SCIB container: the on-disk format for cubes, masks, measurements and
//! weight payloads.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   4 bytes  "SCIB"
//! version u32      1
//! ndim    u32
//! dims    ndim x u32
//! payload product(dims) x f32, row-major
//! ```
//!
//! Save followed by load is the identity bit-for-bit on the payload.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::cube::VideoCube;
use crate::error::{Result, SciError};

pub const SCIB_MAGIC: [u8; 4] = *b"SCIB";
pub const SCIB_VERSION: u32 = 1;

pub fn save_scib(path: &Path, dims: &[u32], payload: &[f32]) -> Result<()> {
    let expected: usize = dims.iter().map(|d| *d as usize).product();
    if expected != payload.len() {
        return Err(SciError::ShapeMismatch(format!(
            "payload has {} floats, dims {:?} require {}",
            payload.len(),
            dims,
            expected
        )));
    }
    let mut bytes = Vec::with_capacity(12 + dims.len() * 4 + payload.len() * 4);
    bytes.extend_from_slice(&SCIB_MAGIC);
    bytes.extend_from_slice(&SCIB_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in dims {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    for v in payload {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| SciError::io(path, e))
}

pub fn load_scib(path: &Path) -> Result<(Vec<u32>, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| SciError::io(path, e))?;
    let fail = |reason: String| SciError::format(path, reason);

    if bytes.len() < 12 {
        return Err(fail(format!("file too short ({} bytes)", bytes.len())));
    }
    if bytes[0..4] != SCIB_MAGIC {
        return Err(fail("bad magic, not a SCIB file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SCIB_VERSION {
        return Err(fail(format!(
            "unsupported version {} (expected {})",
            version, SCIB_VERSION
        )));
    }
    let ndim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header_len = 12 + ndim * 4;
    if bytes.len() < header_len {
        return Err(fail("truncated dimension list".into()));
    }
    let mut dims = Vec::with_capacity(ndim);
    for i in 0..ndim {
        let off = 12 + i * 4;
        dims.push(u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
    }
    let count: usize = dims.iter().map(|d| *d as usize).product();
    let payload_bytes = &bytes[header_len..];
    if payload_bytes.len() != count * 4 {
        return Err(fail(format!(
            "payload is {} bytes, dims {:?} require {}",
            payload_bytes.len(),
            dims,
            count * 4
        )));
    }
    let mut payload = Vec::with_capacity(count);
    for i in 0..count {
        let off = i * 4;
        payload.push(f32::from_le_bytes(
            payload_bytes[off..off + 4].try_into().unwrap(),
        ));
    }
    Ok((dims, payload))
}

pub fn save_cube(cube: &VideoCube, path: &Path) -> Result<()> {
    let (t, h, w) = cube.data.dim();
    let flat = cube
        .data
        .as_slice()
        .expect("cube storage is contiguous row-major");
    save_scib(path, &[t as u32, h as u32, w as u32], flat)
}

pub fn load_cube(path: &Path) -> Result<VideoCube> {
    let (dims, payload) = load_scib(path)?;
    if dims.len() != 3 {
        return Err(SciError::format(
            path,
            format!("expected 3-D cube, file has {} dims", dims.len()),
        ));
    }
    let shape = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
    let data = Array3::from_shape_vec(shape, payload)
        .map_err(|e| SciError::format(path, e.to_string()))?;
    VideoCube::new(data)
}

pub fn save_matrix(m: &Array2<f32>, path: &Path) -> Result<()> {
    let (h, w) = m.dim();
    let flat = m.as_slice().expect("matrix storage is contiguous row-major");
    save_scib(path, &[h as u32, w as u32], flat)
}

pub fn load_matrix(path: &Path) -> Result<Array2<f32>> {
    let (dims, payload) = load_scib(path)?;
    if dims.len() != 2 {
        return Err(SciError::format(
            path,
            format!("expected 2-D matrix, file has {} dims", dims.len()),
        ));
    }
    Array2::from_shape_vec((dims[0] as usize, dims[1] as usize), payload)
        .map_err(|e| SciError::format(path, e.to_string()))
}
