//! Video and frame containers.
//!
//! A [`VideoCube`] is a dense `(T, H, W)` float volume in nominal range
//! `[0, 1]`, the unit of scene, degradation and reconstruction. A
//! [`FrameImage`] is one `(H, W)` slice of it. Both are row-major and
//! immutable by convention once built.

use ndarray::{Array2, Array3, Axis};

use crate::error::{Result, SciError};

#[derive(Debug, Clone, PartialEq)]
pub struct VideoCube {
    pub data: Array3<f32>,
}

impl VideoCube {
    pub fn new(data: Array3<f32>) -> Result<Self> {
        let (t, h, w) = data.dim();
        if t == 0 || h == 0 || w == 0 {
            return Err(SciError::InvalidDims(format!(
                "cube dims must all be >= 1, got {}x{}x{}",
                t, h, w
            )));
        }
        Ok(Self { data })
    }

    pub fn zeros(t: usize, h: usize, w: usize) -> Result<Self> {
        Self::new(Array3::zeros((t, h, w)))
    }

    pub fn from_elem(t: usize, h: usize, w: usize, v: f32) -> Result<Self> {
        Self::new(Array3::from_elem((t, h, w), v))
    }

    pub fn from_frames(frames: &[FrameImage]) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| SciError::InvalidDims("empty frame list".into()))?;
        let (h, w) = first.data.dim();
        let mut data = Array3::zeros((frames.len(), h, w));
        for (t, f) in frames.iter().enumerate() {
            if f.data.dim() != (h, w) {
                return Err(SciError::ShapeMismatch(format!(
                    "frame {} is {:?}, expected {:?}",
                    t,
                    f.data.dim(),
                    (h, w)
                )));
            }
            data.index_axis_mut(Axis(0), t).assign(&f.data);
        }
        Self::new(data)
    }

    pub fn t_count(&self) -> usize {
        self.data.dim().0
    }

    pub fn height(&self) -> usize {
        self.data.dim().1
    }

    pub fn width(&self) -> usize {
        self.data.dim().2
    }

    /// Owned copy of frame `t`. Conversion both ways is lossless.
    pub fn frame(&self, t: usize) -> FrameImage {
        FrameImage {
            data: self.data.index_axis(Axis(0), t).to_owned(),
        }
    }

    pub fn clamp_unit(&mut self) {
        self.data.mapv_inplace(|v| v.clamp(0.0, 1.0));
    }

    pub fn max_abs_diff(&self, other: &VideoCube) -> Result<f32> {
        if self.data.dim() != other.data.dim() {
            return Err(SciError::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.data.dim(),
                other.data.dim()
            )));
        }
        let mut m = 0.0f32;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            m = m.max((a - b).abs());
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameImage {
    pub data: Array2<f32>,
}

impl FrameImage {
    pub fn new(data: Array2<f32>) -> Result<Self> {
        let (h, w) = data.dim();
        if h == 0 || w == 0 {
            return Err(SciError::InvalidDims(format!(
                "frame dims must be >= 1, got {}x{}",
                h, w
            )));
        }
        Ok(Self { data })
    }

    pub fn from_elem(h: usize, w: usize, v: f32) -> Result<Self> {
        Self::new(Array2::from_elem((h, w), v))
    }

    pub fn height(&self) -> usize {
        self.data.dim().0
    }

    pub fn width(&self) -> usize {
        self.data.dim().1
    }
}

/// Splits a cube into consecutive `chunk_len`-frame groups.
///
/// Returns the chunks plus the number of tail frames dropped
/// (`T mod chunk_len`); benchmark groups are always exactly CR-sized.
pub fn chunk_video(cube: &VideoCube, chunk_len: usize) -> Result<(Vec<VideoCube>, usize)> {
    if chunk_len == 0 {
        return Err(SciError::InvalidParam("chunk_len must be >= 1".into()));
    }
    let t = cube.t_count();
    let n_chunks = t / chunk_len;
    let dropped = t - n_chunks * chunk_len;
    let mut chunks = Vec::with_capacity(n_chunks);
    for c in 0..n_chunks {
        let slab = cube
            .data
            .slice(ndarray::s![c * chunk_len..(c + 1) * chunk_len, .., ..])
            .to_owned();
        chunks.push(VideoCube::new(slab)?);
    }
    Ok((chunks, dropped))
}
