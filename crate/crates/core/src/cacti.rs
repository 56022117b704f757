//! Coded-aperture temporal encoding: binary mask stacks, the masked
//! temporal-sum forward model, its exact adjoint, and the per-pixel
//! mask energy that diagonalizes the normal operator.

use crate::cube::{FrameImage, VideoCube};
use crate::error::{Result, SciError};
use crate::io::{load_scib, save_scib};
use crate::rng::SeededRng;
use ndarray::{Array2, Array3, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::path::Path;

/// A stack of binary coding masks, one per frame of a compression group.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSet {
    /// (cr, H, W) with entries exactly 0.0 or 1.0.
    pub masks: Array3<f32>,
    pub cr: usize,
}

impl MaskSet {
    pub fn new(masks: Array3<f32>) -> Result<Self> {
        let (cr, h, w) = masks.dim();
        if cr == 0 || h == 0 || w == 0 {
            return Err(SciError::InvalidDims(format!(
                "mask stack dims must be positive, got {cr}x{h}x{w}"
            )));
        }
        if masks.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(SciError::InvalidParam(
                "mask entries must be exactly 0 or 1".into(),
            ));
        }
        Ok(MaskSet { masks, cr })
    }

    pub fn height(&self) -> usize {
        self.masks.dim().1
    }

    pub fn width(&self) -> usize {
        self.masks.dim().2
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let (cr, h, w) = self.masks.dim();
        let flat: Vec<f32> = self.masks.iter().copied().collect();
        save_scib(path, &[cr as u32, h as u32, w as u32], &flat)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (dims, payload) = load_scib(path)?;
        if dims.len() != 3 {
            return Err(SciError::format(
                path,
                format!("mask stack needs 3 dims, found {}", dims.len()),
            ));
        }
        let shape = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
        let arr = Array3::from_shape_vec(shape, payload)
            .map_err(|e| SciError::format(path, e.to_string()))?;
        MaskSet::new(arr)
    }
}

/// One encoded sensor image. Values accumulate up to cr, unclamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub image: Array2<f32>,
    pub cr: usize,
    pub noise_sigma_meas: f32,
}

impl Measurement {
    pub fn height(&self) -> usize {
        self.image.dim().0
    }

    pub fn width(&self) -> usize {
        self.image.dim().1
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let (h, w) = self.image.dim();
        let flat: Vec<f32> = self.image.iter().copied().collect();
        save_scib(path, &[h as u32, w as u32], &flat)
    }

    /// Loads the raw image; `cr` comes from the mask set it pairs with.
    pub fn load(path: &Path, cr: usize) -> Result<Self> {
        let (dims, payload) = load_scib(path)?;
        if dims.len() != 2 {
            return Err(SciError::format(
                path,
                format!("measurement needs 2 dims, found {}", dims.len()),
            ));
        }
        let image = Array2::from_shape_vec((dims[0] as usize, dims[1] as usize), payload)
            .map_err(|e| SciError::format(path, e.to_string()))?;
        Ok(Measurement {
            image,
            cr,
            noise_sigma_meas: 0.0,
        })
    }
}

/// Per-pixel temporal mask sum. For binary masks this is both the count
/// of active masks and the diagonal of the normal operator; pixels no
/// mask ever senses are degenerate and excluded from division.
#[derive(Debug, Clone)]
pub struct MaskEnergy {
    pub energy: Array2<f32>,
    pub degenerate_count: usize,
}

impl MaskEnergy {
    pub fn is_degenerate(&self, r: usize, c: usize) -> bool {
        self.energy[[r, c]] == 0.0
    }

    pub fn all_degenerate(&self) -> bool {
        self.degenerate_count == self.energy.len()
    }
}

/// Independent Bernoulli(density) masks, deterministic under the seed.
pub fn generate_masks(
    cr: usize,
    h: usize,
    w: usize,
    density: f64,
    rng: &mut SeededRng,
) -> Result<MaskSet> {
    if cr == 0 || h == 0 || w == 0 {
        return Err(SciError::InvalidDims(format!(
            "mask dims must be positive, got {cr}x{h}x{w}"
        )));
    }
    if !(density > 0.0 && density < 1.0) {
        return Err(SciError::InvalidParam(format!(
            "mask density must lie strictly inside (0,1), got {density}"
        )));
    }
    let mut masks = Array3::<f32>::zeros((cr, h, w));
    for v in masks.iter_mut() {
        *v = if rng.gen_range(0.0f64..1.0) < density {
            1.0
        } else {
            0.0
        };
    }
    Ok(MaskSet { masks, cr })
}

/// Forward model: per-pixel masked temporal sum plus optional sensor
/// noise. Output is intentionally unclamped.
pub fn encode(
    cube: &VideoCube,
    masks: &MaskSet,
    sigma_meas: f32,
    rng: &mut SeededRng,
) -> Result<Measurement> {
    let (t, h, w) = cube.data.dim();
    let (cr, mh, mw) = masks.masks.dim();
    if t != cr || h != mh || w != mw {
        return Err(SciError::ShapeMismatch(format!(
            "cube {t}x{h}x{w} vs masks {cr}x{mh}x{mw}"
        )));
    }
    if sigma_meas < 0.0 || !sigma_meas.is_finite() {
        return Err(SciError::InvalidParam(format!(
            "measurement noise sigma must be finite and >= 0, got {sigma_meas}"
        )));
    }
    let mut image = Array2::<f32>::zeros((h, w));
    for k in 0..cr {
        let frame = cube.data.index_axis(Axis(0), k);
        let mask = masks.masks.index_axis(Axis(0), k);
        ndarray::Zip::from(&mut image)
            .and(&frame)
            .and(&mask)
            .for_each(|y, &x, &m| *y += x * m);
    }
    if sigma_meas > 0.0 {
        let normal = Normal::new(0.0f32, sigma_meas)
            .map_err(|e| SciError::InvalidParam(format!("measurement noise: {e}")))?;
        image.mapv_inplace(|v| v + normal.sample(rng));
    }
    Ok(Measurement {
        image,
        cr,
        noise_sigma_meas: sigma_meas,
    })
}

/// Transpose of the noiseless forward model: frame k is the measurement
/// gated by mask k.
pub fn adjoint(meas: &Measurement, masks: &MaskSet) -> Result<VideoCube> {
    let (h, w) = meas.image.dim();
    let (cr, mh, mw) = masks.masks.dim();
    if h != mh || w != mw || meas.cr != cr {
        return Err(SciError::ShapeMismatch(format!(
            "measurement {h}x{w} cr={} vs masks {cr}x{mh}x{mw}",
            meas.cr
        )));
    }
    let mut cube = Array3::<f32>::zeros((cr, h, w));
    for k in 0..cr {
        let mask = masks.masks.index_axis(Axis(0), k);
        let mut frame = cube.index_axis_mut(Axis(0), k);
        ndarray::Zip::from(&mut frame)
            .and(&meas.image)
            .and(&mask)
            .for_each(|x, &y, &m| *x = m * y);
    }
    VideoCube::new(cube)
}

/// Sum of squared mask entries per pixel; equals the plain mask count
/// for binary masks.
pub fn mask_energy(masks: &MaskSet) -> MaskEnergy {
    let (_, h, w) = masks.masks.dim();
    let mut energy = Array2::<f32>::zeros((h, w));
    for k in 0..masks.cr {
        let mask = masks.masks.index_axis(Axis(0), k);
        ndarray::Zip::from(&mut energy)
            .and(&mask)
            .for_each(|e, &m| *e += m * m);
    }
    let degenerate_count = energy.iter().filter(|&&e| e == 0.0).count();
    MaskEnergy {
        energy,
        degenerate_count,
    }
}

/// Energy map as a frame, for serialization alongside mask stacks.
pub fn mask_energy_frame(masks: &MaskSet) -> FrameImage {
    FrameImage {
        data: mask_energy(masks).energy,
    }
}
