//! Forward-only numerical kernels for the reconstruction block: dilated
//! multi-scale convolutions, half-channel spectral filtering, temporal
//! attention, and the residual aggregation that ties them together.

mod conv3d;
mod fft2;
mod weights;

pub use conv3d::conv3d;
pub use fft2::{half_width, irfft2, rfft2, spectrum_energy, Spectrum};
pub use weights::{index_path, load_weights, save_weights, seed_weights, BlockWeights};

use crate::error::{Result, SciError};
use ndarray::{Array2, Array4, Axis};
use rustfft::num_complex::Complex;

/// A (C, T, H, W) feature volume.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub data: Array4<f32>,
}

impl FeatureTensor {
    pub fn new(data: Array4<f32>) -> Result<Self> {
        let (c, t, h, w) = data.dim();
        if c == 0 || t == 0 || h == 0 || w == 0 {
            return Err(SciError::InvalidDims(format!(
                "feature dims must be positive, got {c}x{t}x{h}x{w}"
            )));
        }
        Ok(FeatureTensor { data })
    }

    pub fn zeros(c: usize, t: usize, h: usize, w: usize) -> Result<Self> {
        Self::new(Array4::zeros((c, t, h, w)))
    }

    pub fn c(&self) -> usize {
        self.data.dim().0
    }

    pub fn t(&self) -> usize {
        self.data.dim().1
    }

    pub fn h(&self) -> usize {
        self.data.dim().2
    }

    pub fn w(&self) -> usize {
        self.data.dim().3
    }
}

/// Smooth activation, with an identity mode so exact identity weight
/// configurations stay exactly identity in tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Gelu,
    Identity,
}

impl Activation {
    pub fn apply(self, v: f32) -> f32 {
        match self {
            Activation::Gelu => gelu32(v),
            Activation::Identity => v,
        }
    }

    fn apply64(self, v: f64) -> f64 {
        match self {
            Activation::Gelu => gelu64(v),
            Activation::Identity => v,
        }
    }
}

fn gelu32(x: f32) -> f32 {
    const SQRT_2_OVER_PI: f32 = 0.797_884_56;
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu64(x: f64) -> f64 {
    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + 0.044715 * x * x * x)).tanh())
}

/// Spectral-branch configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FebConfig {
    /// Hidden width of the per-bin MLP as a multiple of its input width.
    pub hidden_mult: usize,
    /// Standardize each processed (channel, frame) plane after the
    /// inverse transform.
    pub normalize: bool,
    pub norm_eps: f32,
}

impl Default for FebConfig {
    fn default() -> Self {
        FebConfig {
            hidden_mult: 1,
            normalize: true,
            norm_eps: 1e-5,
        }
    }
}

fn check_feature_weights(x: &FeatureTensor, w: &BlockWeights) -> Result<()> {
    if x.c() != w.c {
        return Err(SciError::ShapeMismatch(format!(
            "feature has {} channels, weights expect {}",
            x.c(),
            w.c
        )));
    }
    Ok(())
}

/// Pointwise channel map: out[o, ...] = sum_i m[o, i] * x[i, ...] + b[o].
fn channel_map(x: &Array4<f32>, m: &Array2<f32>, bias: &[f32]) -> Array4<f32> {
    let (c_in, t, h, w) = x.dim();
    let c_out = m.dim().0;
    debug_assert_eq!(m.dim().1, c_in);
    debug_assert_eq!(bias.len(), c_out);
    let mut out = Array4::<f32>::zeros((c_out, t, h, w));
    for co in 0..c_out {
        let mut plane = out.index_axis_mut(Axis(0), co);
        plane.fill(bias[co]);
        for ci in 0..c_in {
            let weight = m[[co, ci]];
            if weight == 0.0 {
                continue;
            }
            let src = x.index_axis(Axis(0), ci);
            ndarray::Zip::from(&mut plane)
                .and(&src)
                .for_each(|o, &v| *o += weight * v);
        }
    }
    out
}

/// Three dilated convolution paths (d = 1, 2, 4), each activated, then
/// concatenated and fused by a channel matrix back to C.
pub fn msdb_forward(x: &FeatureTensor, w: &BlockWeights, act: Activation) -> Result<FeatureTensor> {
    check_feature_weights(x, w)?;
    let (c, t, h, wd) = x.data.dim();
    let mut concat = Array4::<f32>::zeros((3 * c, t, h, wd));
    for (i, dilation) in [1usize, 2, 4].into_iter().enumerate() {
        let mut path = conv3d(&x.data, &w.msdb_kernels[i], &w.msdb_biases[i], dilation)?;
        path.mapv_inplace(|v| act.apply(v));
        concat
            .slice_mut(ndarray::s![i * c..(i + 1) * c, .., .., ..])
            .assign(&path);
    }
    FeatureTensor::new(channel_map(&concat, &w.msdb_fuse, &w.msdb_fuse_bias))
}

/// Two 3x3x3 convolutions with the activation between them.
pub fn scb_forward(x: &FeatureTensor, w: &BlockWeights, act: Activation) -> Result<FeatureTensor> {
    check_feature_weights(x, w)?;
    let mut mid = conv3d(&x.data, &w.scb_kernels[0], &w.scb_biases[0], 1)?;
    mid.mapv_inplace(|v| act.apply(v));
    FeatureTensor::new(conv3d(&mid, &w.scb_kernels[1], &w.scb_biases[1], 1)?)
}

/// Temporal self-attention at each spatial location. Frames are tokens
/// with C-dim embeddings; scores are scaled dot products, so any frame
/// count runs against the same weights.
pub fn tsab_forward(x: &FeatureTensor, w: &BlockWeights) -> Result<FeatureTensor> {
    check_feature_weights(x, w)?;
    let (c, t, h, wd) = x.data.dim();
    let scale = 1.0 / (c as f32).sqrt();
    let mut out = Array4::<f32>::zeros((c, t, h, wd));
    let mut tokens = vec![0.0f32; t * c];
    let mut q = vec![0.0f32; t * c];
    let mut k = vec![0.0f32; t * c];
    let mut v = vec![0.0f32; t * c];
    let mut mixed = vec![0.0f32; t * c];
    let mut scores = vec![0.0f32; t * t];
    for hh in 0..h {
        for ww in 0..wd {
            for tt in 0..t {
                for cc in 0..c {
                    tokens[tt * c + cc] = x.data[[cc, tt, hh, ww]];
                }
            }
            mat_tokens(&w.tsab_wq, &tokens, &mut q, t, c);
            mat_tokens(&w.tsab_wk, &tokens, &mut k, t, c);
            mat_tokens(&w.tsab_wv, &tokens, &mut v, t, c);
            for i in 0..t {
                for j in 0..t {
                    let mut dot = 0.0f32;
                    for cc in 0..c {
                        dot += q[i * c + cc] * k[j * c + cc];
                    }
                    scores[i * t + j] = dot * scale;
                }
            }
            for row in scores.chunks_mut(t) {
                softmax_in_place(row);
            }
            for i in 0..t {
                for cc in 0..c {
                    let mut acc = 0.0f32;
                    for j in 0..t {
                        acc += scores[i * t + j] * v[j * c + cc];
                    }
                    mixed[i * c + cc] = acc;
                }
            }
            mat_tokens(&w.tsab_wout, &mixed, &mut q, t, c);
            for tt in 0..t {
                for cc in 0..c {
                    out[[cc, tt, hh, ww]] = q[tt * c + cc];
                }
            }
        }
    }
    FeatureTensor::new(out)
}

/// dst[t] = m * tokens[t] for each token row.
fn mat_tokens(m: &Array2<f32>, tokens: &[f32], dst: &mut [f32], t: usize, c: usize) {
    for tt in 0..t {
        let src = &tokens[tt * c..(tt + 1) * c];
        let row = &mut dst[tt * c..(tt + 1) * c];
        for (o, out_v) in row.iter_mut().enumerate() {
            let mut acc = 0.0f32;
            for (i, &s) in src.iter().enumerate() {
                acc += m[[o, i]] * s;
            }
            *out_v = acc;
        }
    }
}

fn softmax_in_place(row: &mut [f32]) {
    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0f32;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Spectral filtering of the first half of the channels: forward real
/// FFT per (channel, frame), a shared per-bin MLP over concatenated
/// real/imaginary parts, inverse FFT, optional standardization. The
/// second half passes through untouched.
pub fn feb_forward(
    x: &FeatureTensor,
    w: &BlockWeights,
    cfg: &FebConfig,
    act: Activation,
) -> Result<FeatureTensor> {
    check_feature_weights(x, w)?;
    let processed = feb_processed_half(x, w, cfg, act)?;
    let (c, t, h, wd) = x.data.dim();
    let mut out = Array4::<f32>::zeros((c, t, h, wd));
    out.slice_mut(ndarray::s![..c / 2, .., .., ..])
        .assign(&processed);
    out.slice_mut(ndarray::s![c / 2.., .., .., ..])
        .assign(&x.data.slice(ndarray::s![c / 2.., .., .., ..]));
    FeatureTensor::new(out)
}

/// The processed first-half channels only, (C/2, T, H, W).
fn feb_processed_half(
    x: &FeatureTensor,
    w: &BlockWeights,
    cfg: &FebConfig,
    act: Activation,
) -> Result<Array4<f32>> {
    let (c, t, h, wd) = x.data.dim();
    if c % 2 != 0 {
        return Err(SciError::InvalidDims(format!(
            "spectral split needs an even channel count, got {c}"
        )));
    }
    if cfg.hidden_mult == 0 {
        return Err(SciError::InvalidParam("hidden_mult must be >= 1".into()));
    }
    let half_c = c / 2;
    let hidden = w.feb_w1.dim().0;
    if w.feb_w1.dim() != (hidden, c) || w.feb_w2.dim() != (c, hidden) {
        return Err(SciError::ShapeMismatch(format!(
            "spectral MLP {:?}/{:?} against {c} spectral channels",
            w.feb_w1.dim(),
            w.feb_w2.dim()
        )));
    }
    let hw = half_width(wd);

    // Spectra of every (half-channel, frame) plane.
    let mut spectra = Vec::with_capacity(half_c * t);
    for a in 0..half_c {
        for tt in 0..t {
            let plane = x
                .data
                .slice(ndarray::s![a, tt, .., ..])
                .mapv(|v| v as f64);
            spectra.push(rfft2(&plane));
        }
    }

    // Shared MLP per frequency bin over [re(0..half_c), im(0..half_c)].
    let w1 = w.feb_w1.mapv(|v| v as f64);
    let b1: Vec<f64> = w.feb_b1.iter().map(|&v| v as f64).collect();
    let w2 = w.feb_w2.mapv(|v| v as f64);
    let b2: Vec<f64> = w.feb_b2.iter().map(|&v| v as f64).collect();
    let mut z = vec![0.0f64; c];
    let mut hid = vec![0.0f64; hidden];
    let mut z_out = vec![0.0f64; c];
    for u in 0..h {
        for v in 0..hw {
            for tt in 0..t {
                for a in 0..half_c {
                    let s = spectra[a * t + tt][[u, v]];
                    z[a] = s.re;
                    z[half_c + a] = s.im;
                }
                for (o, hv) in hid.iter_mut().enumerate() {
                    let mut acc = b1[o];
                    for (i, &zi) in z.iter().enumerate() {
                        acc += w1[[o, i]] * zi;
                    }
                    *hv = act.apply64(acc);
                }
                for (o, zo) in z_out.iter_mut().enumerate() {
                    let mut acc = b2[o];
                    for (i, &hv) in hid.iter().enumerate() {
                        acc += w2[[o, i]] * hv;
                    }
                    *zo = acc;
                }
                for a in 0..half_c {
                    let val = Complex::new(z_out[a], z_out[half_c + a]);
                    if !val.re.is_finite() || !val.im.is_finite() {
                        return Err(SciError::NonFinite(format!(
                            "spectrum bin ({u},{v}) of channel {a}"
                        )));
                    }
                    spectra[a * t + tt][[u, v]] = val;
                }
            }
        }
    }

    let mut out = Array4::<f32>::zeros((half_c, t, h, wd));
    for a in 0..half_c {
        for tt in 0..t {
            let mut plane = irfft2(&spectra[a * t + tt], wd)?;
            if cfg.normalize {
                let n = plane.len() as f64;
                let mean: f64 = plane.iter().sum::<f64>() / n;
                let var: f64 = plane.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / n;
                let denom = (var + cfg.norm_eps as f64).sqrt();
                plane.mapv_inplace(|v| (v - mean) / denom);
            }
            ndarray::Zip::from(&mut out.slice_mut(ndarray::s![a, tt, .., ..]))
                .and(&plane)
                .for_each(|o, &v| *o = v as f32);
        }
    }
    Ok(out)
}

/// Spatial-then-temporal composition used as the attention branch.
pub fn scb_tsab_forward(
    x: &FeatureTensor,
    w: &BlockWeights,
    act: Activation,
) -> Result<FeatureTensor> {
    tsab_forward(&scb_forward(x, w, act)?, w)
}

/// Pointwise two-layer channel MLP, C -> 4C -> C.
fn ffn_forward(x: &Array4<f32>, w: &BlockWeights, act: Activation) -> Array4<f32> {
    let mut mid = channel_map(x, &w.ffn_w1, &w.ffn_b1);
    mid.mapv_inplace(|v| act.apply(v));
    channel_map(&mid, &w.ffn_w2, &w.ffn_b2)
}

/// Residual aggregation of all branches, then an FFN with its own
/// residual. The spectral branch contributes only its processed half;
/// its pass-through half would otherwise leak the input past zeroed
/// weights and break the identity property.
pub fn robust_cformer_forward(
    x: &FeatureTensor,
    w: &BlockWeights,
    cfg: &FebConfig,
    act: Activation,
) -> Result<FeatureTensor> {
    check_feature_weights(x, w)?;
    let c = x.c();
    if c % 2 != 0 {
        return Err(SciError::InvalidDims(format!(
            "block aggregation needs an even channel count, got {c}"
        )));
    }
    let st = scb_tsab_forward(x, w, act)?;
    let ms = msdb_forward(x, w, act)?;
    let feb_half = feb_processed_half(x, w, cfg, act)?;

    let mut fused = x.data.clone();
    fused += &st.data;
    fused += &ms.data;
    fused
        .slice_mut(ndarray::s![..c / 2, .., .., ..])
        .zip_mut_with(&feb_half, |o, &v| *o += v);

    let refined = ffn_forward(&fused, w, act);
    FeatureTensor::new(fused + refined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use ndarray::Array5;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_feature(rng: &mut SeededRng, c: usize, t: usize, h: usize, w: usize) -> FeatureTensor {
        FeatureTensor::new(Array4::from_shape_fn((c, t, h, w), |_| {
            rng.gen_range(-1.0f32..1.0)
        }))
        .unwrap()
    }

    fn dirac_identity_weights(c: usize) -> BlockWeights {
        let mut w = BlockWeights::zeros(c).unwrap();
        for path in 0..3 {
            for ch in 0..c {
                w.msdb_kernels[path][[ch, ch, 1, 1, 1]] = 1.0;
            }
        }
        for ch in 0..c {
            for path in 0..3 {
                w.msdb_fuse[[ch, path * c + ch]] = 1.0 / 3.0;
            }
        }
        w
    }

    #[test]
    fn msdb_dirac_averaging_is_identity() {
        let mut rng = SeededRng::new(1);
        let x = random_feature(&mut rng, 4, 3, 6, 6);
        let w = dirac_identity_weights(4);
        let y = msdb_forward(&x, &w, Activation::Identity).unwrap();
        let mut worst = 0.0f32;
        for (a, b) in x.data.iter().zip(y.data.iter()) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-6, "max err {worst}");
    }

    #[test]
    fn msdb_zero_weights_give_zero() {
        let mut rng = SeededRng::new(2);
        let x = random_feature(&mut rng, 4, 2, 5, 5);
        let w = BlockWeights::zeros(4).unwrap();
        let y = msdb_forward(&x, &w, Activation::Gelu).unwrap();
        assert!(y.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn msdb_matches_brute_force_paths() {
        let mut rng = SeededRng::new(3);
        let x = random_feature(&mut rng, 4, 4, 8, 8);
        let w = seed_weights(17, 4, 1).unwrap();
        let mine = msdb_forward(&x, &w, Activation::Identity).unwrap();

        let x64 = x.data.mapv(|v| v as f64);
        let mut paths = Vec::new();
        for (i, d) in [1usize, 2, 4].into_iter().enumerate() {
            let bias: Vec<f64> = w.msdb_biases[i].iter().map(|&b| b as f64).collect();
            paths.push(sci_forge_testkit::conv3d_oracle(
                &x64,
                &w.msdb_kernels[i].mapv(|v| v as f64),
                &bias,
                d,
            ));
        }
        let (c, t, h, wd) = x.data.dim();
        let mut worst = 0.0f64;
        for co in 0..c {
            for tt in 0..t {
                for hh in 0..h {
                    for ww in 0..wd {
                        let mut acc = w.msdb_fuse_bias[co] as f64;
                        for (p, path) in paths.iter().enumerate() {
                            for ci in 0..c {
                                acc += w.msdb_fuse[[co, p * c + ci]] as f64
                                    * path[[ci, tt, hh, ww]];
                            }
                        }
                        worst = worst
                            .max((mine.data[[co, tt, hh, ww]] as f64 - acc).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-4, "max err {worst}");
    }

    #[test]
    fn scb_dirac_is_identity_and_zero_is_zero() {
        let mut rng = SeededRng::new(4);
        let x = random_feature(&mut rng, 2, 3, 6, 6);
        let mut w = BlockWeights::zeros(2).unwrap();
        for ch in 0..2 {
            w.scb_kernels[0][[ch, ch, 1, 1, 1]] = 1.0;
            w.scb_kernels[1][[ch, ch, 1, 1, 1]] = 1.0;
        }
        let y = scb_forward(&x, &w, Activation::Identity).unwrap();
        let mut worst = 0.0f32;
        for (a, b) in x.data.iter().zip(y.data.iter()) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-6);

        let wz = BlockWeights::zeros(2).unwrap();
        let z = scb_forward(&x, &wz, Activation::Gelu).unwrap();
        assert!(z.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scb_matches_conv_oracle() {
        let mut rng = SeededRng::new(5);
        let x = random_feature(&mut rng, 4, 4, 8, 8);
        let w = seed_weights(23, 4, 1).unwrap();
        let mine = scb_forward(&x, &w, Activation::Identity).unwrap();
        let b0: Vec<f64> = w.scb_biases[0].iter().map(|&b| b as f64).collect();
        let b1: Vec<f64> = w.scb_biases[1].iter().map(|&b| b as f64).collect();
        let mid = sci_forge_testkit::conv3d_oracle(
            &x.data.mapv(|v| v as f64),
            &w.scb_kernels[0].mapv(|v| v as f64),
            &b0,
            1,
        );
        let oracle = sci_forge_testkit::conv3d_oracle(
            &mid,
            &w.scb_kernels[1].mapv(|v| v as f64),
            &b1,
            1,
        );
        let mut worst = 0.0f64;
        for (a, b) in mine.data.iter().zip(oracle.iter()) {
            worst = worst.max((*a as f64 - b).abs());
        }
        assert!(worst < 1e-4, "max err {worst}");
    }

    #[test]
    fn tsab_single_frame_reduces_to_projection() {
        let mut rng = SeededRng::new(6);
        let x = random_feature(&mut rng, 4, 1, 5, 5);
        let w = seed_weights(31, 4, 1).unwrap();
        let y = tsab_forward(&x, &w).unwrap();
        // With one token, attention is [[1.0]] and the output is
        // Wout * Wv * token at every location.
        let mut worst = 0.0f32;
        for hh in 0..5 {
            for ww in 0..5 {
                let token: Vec<f32> = (0..4).map(|cc| x.data[[cc, 0, hh, ww]]).collect();
                let mut v = [0.0f32; 4];
                for o in 0..4 {
                    for i in 0..4 {
                        v[o] += w.tsab_wv[[o, i]] * token[i];
                    }
                }
                for o in 0..4 {
                    let mut acc = 0.0f32;
                    for i in 0..4 {
                        acc += w.tsab_wout[[o, i]] * v[i];
                    }
                    worst = worst.max((y.data[[o, 0, hh, ww]] - acc).abs());
                }
            }
        }
        assert!(worst < 1e-6, "max err {worst}");
    }

    #[test]
    fn tsab_constant_frames_give_identical_outputs() {
        let mut rng = SeededRng::new(7);
        let one = random_feature(&mut rng, 4, 1, 4, 4);
        let t = 6;
        let mut data = Array4::zeros((4, t, 4, 4));
        for tt in 0..t {
            data.slice_mut(ndarray::s![.., tt, .., ..])
                .assign(&one.data.slice(ndarray::s![.., 0, .., ..]));
        }
        let x = FeatureTensor::new(data).unwrap();
        let w = seed_weights(37, 4, 1).unwrap();
        let y = tsab_forward(&x, &w).unwrap();
        for tt in 1..t {
            let first = y.data.slice(ndarray::s![.., 0, .., ..]);
            let later = y.data.slice(ndarray::s![.., tt, .., ..]);
            for (a, b) in first.iter().zip(later.iter()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn tsab_is_equivariant_under_frame_permutation() {
        let mut rng = SeededRng::new(8);
        let x = random_feature(&mut rng, 4, 5, 3, 3);
        let w = seed_weights(41, 4, 1).unwrap();
        let y = tsab_forward(&x, &w).unwrap();
        let perm = [3usize, 0, 4, 1, 2];
        let mut xp = Array4::zeros(x.data.raw_dim());
        for (dst, &src) in perm.iter().enumerate() {
            xp.slice_mut(ndarray::s![.., dst, .., ..])
                .assign(&x.data.slice(ndarray::s![.., src, .., ..]));
        }
        let yp = tsab_forward(&FeatureTensor::new(xp).unwrap(), &w).unwrap();
        for (dst, &src) in perm.iter().enumerate() {
            let a = yp.data.slice(ndarray::s![.., dst, .., ..]);
            let b = y.data.slice(ndarray::s![.., src, .., ..]);
            for (x1, x2) in a.iter().zip(b.iter()) {
                assert!((x1 - x2).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn tsab_shapes_survive_all_frame_counts() {
        let w = seed_weights(43, 4, 1).unwrap();
        for t in [1usize, 8, 16, 24] {
            let mut rng = SeededRng::new(t as u64);
            let x = random_feature(&mut rng, 4, t, 4, 4);
            let y = tsab_forward(&x, &w).unwrap();
            assert_eq!(y.data.dim(), (4, t, 4, 4));
        }
    }

    #[test]
    fn feb_identity_mlp_round_trips() {
        let mut rng = SeededRng::new(9);
        let x = random_feature(&mut rng, 4, 2, 6, 7);
        let mut w = BlockWeights::zeros(4).unwrap();
        for i in 0..4 {
            w.feb_w1[[i, i]] = 1.0;
            w.feb_w2[[i, i]] = 1.0;
        }
        let cfg = FebConfig {
            normalize: false,
            ..FebConfig::default()
        };
        let y = feb_forward(&x, &w, &cfg, Activation::Identity).unwrap();
        let mut worst = 0.0f32;
        for (a, b) in x.data.iter().zip(y.data.iter()) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-5, "max err {worst}");
    }

    #[test]
    fn feb_zero_input_gives_zero_output() {
        let x = FeatureTensor::zeros(4, 2, 5, 5).unwrap();
        let w = seed_weights(47, 4, 1).unwrap();
        let cfg = FebConfig {
            normalize: false,
            ..FebConfig::default()
        };
        let mut wz = w.clone();
        wz.feb_b1.iter_mut().for_each(|b| *b = 0.0);
        wz.feb_b2.iter_mut().for_each(|b| *b = 0.0);
        let y = feb_forward(&x, &wz, &cfg, Activation::Identity).unwrap();
        assert!(y.data.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn feb_doubling_mlp_doubles_the_half() {
        let mut rng = SeededRng::new(10);
        let x = random_feature(&mut rng, 4, 2, 5, 8);
        let mut w = BlockWeights::zeros(4).unwrap();
        for i in 0..4 {
            w.feb_w1[[i, i]] = 1.0;
            w.feb_w2[[i, i]] = 2.0;
        }
        let cfg = FebConfig {
            normalize: false,
            ..FebConfig::default()
        };
        let y = feb_forward(&x, &w, &cfg, Activation::Identity).unwrap();
        let mut worst = 0.0f32;
        for a in 0..2 {
            for tt in 0..2 {
                for hh in 0..5 {
                    for ww in 0..8 {
                        let want = 2.0 * x.data[[a, tt, hh, ww]];
                        worst = worst.max((y.data[[a, tt, hh, ww]] - want).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-5, "max err {worst}");
        let passthrough = y.data.slice(ndarray::s![2.., .., .., ..]);
        let original = x.data.slice(ndarray::s![2.., .., .., ..]);
        assert_eq!(passthrough, original);
    }

    #[test]
    fn feb_rejects_odd_channels() {
        let mut rng = SeededRng::new(11);
        let x = random_feature(&mut rng, 3, 2, 5, 5);
        let mut w = BlockWeights::zeros(4).unwrap();
        w.c = 3;
        assert!(feb_forward(&x, &w, &FebConfig::default(), Activation::Identity).is_err());
    }

    #[test]
    fn feb_normalization_standardizes_planes() {
        let mut rng = SeededRng::new(12);
        let x = random_feature(&mut rng, 4, 2, 8, 8);
        let w = seed_weights(53, 4, 1).unwrap();
        let cfg = FebConfig::default();
        let y = feb_forward(&x, &w, &cfg, Activation::Gelu).unwrap();
        for a in 0..2 {
            for tt in 0..2 {
                let plane = y.data.slice(ndarray::s![a, tt, .., ..]);
                let n = plane.len() as f64;
                let mean: f64 = plane.iter().map(|&v| v as f64).sum::<f64>() / n;
                let var: f64 =
                    plane.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
                assert!(mean.abs() < 1e-5, "mean {mean}");
                assert!((var - 1.0).abs() < 0.05, "var {var}");
            }
        }
    }

    #[test]
    fn block_zero_weights_are_exact_identity() {
        let mut rng = SeededRng::new(13);
        let x = random_feature(&mut rng, 4, 3, 6, 6);
        let w = BlockWeights::zeros(4).unwrap();
        let y = robust_cformer_forward(&x, &w, &FebConfig::default(), Activation::Gelu).unwrap();
        assert_eq!(x.data, y.data);
    }

    #[test]
    fn block_preserves_shape() {
        let w2 = seed_weights(61, 2, 1).unwrap();
        let w4 = seed_weights(61, 4, 1).unwrap();
        for (c, t, h, wd) in [(2usize, 1usize, 4usize, 4usize), (4, 3, 5, 7), (2, 8, 6, 5)] {
            let mut rng = SeededRng::new((c * 100 + t) as u64);
            let x = random_feature(&mut rng, c, t, h, wd);
            let w = if c == 2 { &w2 } else { &w4 };
            let y =
                robust_cformer_forward(&x, w, &FebConfig::default(), Activation::Gelu).unwrap();
            assert_eq!(y.data.dim(), (c, t, h, wd));
        }
    }

    #[test]
    fn block_stays_finite_on_adversarial_inputs() {
        let mut rng = SeededRng::new(14);
        let x = FeatureTensor::new(Array4::from_shape_fn((4, 2, 6, 6), |_| {
            rng.gen_range(-1e3f32..1e3)
        }))
        .unwrap();
        let w = seed_weights(67, 4, 1).unwrap();
        let y = robust_cformer_forward(&x, &w, &FebConfig::default(), Activation::Gelu).unwrap();
        assert!(y.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn forwards_are_bit_deterministic() {
        let mut rng = SeededRng::new(15);
        let x = random_feature(&mut rng, 4, 3, 6, 6);
        let w = seed_weights(71, 4, 1).unwrap();
        let cfg = FebConfig::default();
        let a = robust_cformer_forward(&x, &w, &cfg, Activation::Gelu).unwrap();
        let b = robust_cformer_forward(&x, &w, &cfg, Activation::Gelu).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn gelu_fixes_zero_and_matches_tanh_form() {
        assert_eq!(Activation::Gelu.apply(0.0), 0.0);
        let x = 1.5f32;
        let want = 0.5 * x * (1.0 + (0.7978845608 * (x + 0.044715 * x * x * x)).tanh());
        assert!((Activation::Gelu.apply(x) - want).abs() < 1e-6);
        assert_eq!(Activation::Identity.apply(x), x);
    }

    #[test]
    fn feature_tensor_rejects_empty_dims() {
        assert!(FeatureTensor::new(Array4::zeros((0, 1, 1, 1))).is_err());
        assert!(FeatureTensor::zeros(1, 1, 0, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn block_shape_contract_sweep(c in 1usize..3, t in 1usize..5, h in 4usize..8, wd in 4usize..9) {
            let c = c * 2;
            let mut rng = SeededRng::new((c + t * 10 + h * 100 + wd * 1000) as u64);
            let x = random_feature(&mut rng, c, t, h, wd);
            let w = seed_weights(2024, c, 1).unwrap();
            let y = robust_cformer_forward(&x, &w, &FebConfig::default(), Activation::Gelu).unwrap();
            prop_assert_eq!(y.data.dim(), (c, t, h, wd));
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        // Exercised through the public forward by checking that a value
        // tensor of all ones mixes to exactly ones before Wout.
        let mut rng = SeededRng::new(16);
        let c = 4;
        let x = random_feature(&mut rng, c, 8, 3, 3);
        let mut w = BlockWeights::zeros(c).unwrap();
        let q = seed_weights(73, c, 1).unwrap();
        w.tsab_wq = q.tsab_wq.clone();
        w.tsab_wk = q.tsab_wk.clone();
        // Wv row 0 sums the constant channel; input channel 0 is forced
        // to 1 so V token entry 0 is always 1.
        w.tsab_wv[[0, 0]] = 1.0;
        for o in 0..c {
            w.tsab_wout[[o, 0]] = 1.0;
        }
        let mut data = x.data.clone();
        data.slice_mut(ndarray::s![0, .., .., ..]).fill(1.0);
        let y = tsab_forward(&FeatureTensor::new(data).unwrap(), &w).unwrap();
        for &v in y.data.iter() {
            assert!((v - 1.0).abs() < 1e-6, "row sum drifted: {v}");
        }
    }

    #[test]
    fn conv_kernel_array_is_dense() {
        let k = Array5::<f32>::zeros((2, 2, 3, 3, 3));
        assert_eq!(k.len(), 2 * 2 * 27);
    }
}
