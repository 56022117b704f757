//! PSNR and SSIM over frames and cubes. All accumulation runs in f64;
//! infinite PSNR (identical frames) serializes as the string "inf".

use crate::cube::{FrameImage, VideoCube};
use crate::error::{Result, SciError};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// JSON codec for dB values: finite as number, +inf as "inf".
mod db_serde {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Raw::Text(t) => Err(D::Error::custom(format!("bad dB value {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    #[serde(with = "db_serde")]
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    /// Mean over frames with finite PSNR; +inf when every frame is exact.
    #[serde(with = "db_serde")]
    pub psnr_db: f64,
    /// Mean SSIM over all frames.
    pub ssim: f64,
    pub per_frame: Vec<FrameScore>,
    /// Frames excluded from the PSNR mean because they match exactly.
    pub psnr_inf_count: usize,
}

/// Peak signal-to-noise ratio in dB against a unit dynamic range.
pub fn psnr(reference: &FrameImage, test: &FrameImage) -> Result<f64> {
    if reference.data.dim() != test.data.dim() {
        return Err(SciError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            reference.data.dim(),
            test.data.dim()
        )));
    }
    let mut sq = 0.0f64;
    for (&a, &b) in reference.data.iter().zip(test.data.iter()) {
        let d = a as f64 - b as f64;
        sq += d * d;
    }
    let mse = sq / reference.data.len() as f64;
    if mse == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / mse).log10())
    }
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let mut total = 0.0;
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - half;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        total += *t;
    }
    for t in taps.iter_mut() {
        *t /= total;
    }
    taps
}

/// Separable valid-region Gaussian filter: horizontal then vertical.
fn gaussian_valid(x: &Array2<f64>) -> Array2<f64> {
    let taps = gaussian_taps();
    let (h, w) = x.dim();
    let wv = w - SSIM_WINDOW + 1;
    let hv = h - SSIM_WINDOW + 1;
    let mut horiz = Array2::<f64>::zeros((h, wv));
    for r in 0..h {
        for c in 0..wv {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * x[[r, c + k]];
            }
            horiz[[r, c]] = acc;
        }
    }
    let mut out = Array2::<f64>::zeros((hv, wv));
    for r in 0..hv {
        for c in 0..wv {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * horiz[[r + k, c]];
            }
            out[[r, c]] = acc;
        }
    }
    out
}

/// Mean structural similarity over all valid 11x11 windows.
pub fn ssim(reference: &FrameImage, test: &FrameImage) -> Result<f64> {
    if reference.data.dim() != test.data.dim() {
        return Err(SciError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            reference.data.dim(),
            test.data.dim()
        )));
    }
    let (h, w) = reference.data.dim();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(SciError::InvalidDims(format!(
            "frames must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )));
    }
    let x = reference.data.mapv(|v| v as f64);
    let y = test.data.mapv(|v| v as f64);
    let xx = &x * &x;
    let yy = &y * &y;
    let xy = &x * &y;

    let mu_x = gaussian_valid(&x);
    let mu_y = gaussian_valid(&y);
    let m_xx = gaussian_valid(&xx);
    let m_yy = gaussian_valid(&yy);
    let m_xy = gaussian_valid(&xy);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut acc = 0.0f64;
    for ((((&mx, &my), &sxx), &syy), &sxy) in mu_x
        .iter()
        .zip(mu_y.iter())
        .zip(m_xx.iter())
        .zip(m_yy.iter())
        .zip(m_xy.iter())
    {
        let var_x = sxx - mx * mx;
        let var_y = syy - my * my;
        let cov = sxy - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        acc += num / den;
    }
    Ok(acc / mu_x.len() as f64)
}

/// Frame-wise metrics and their means. Frames with infinite PSNR are
/// excluded from the PSNR mean and counted separately.
pub fn score_cube(reference: &VideoCube, test: &VideoCube) -> Result<MetricReport> {
    if reference.data.dim() != test.data.dim() {
        return Err(SciError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            reference.data.dim(),
            test.data.dim()
        )));
    }
    let mut per_frame = Vec::with_capacity(reference.t_count());
    let mut psnr_sum = 0.0f64;
    let mut psnr_finite = 0usize;
    let mut ssim_sum = 0.0f64;
    for k in 0..reference.t_count() {
        let r = reference.frame(k);
        let t = test.frame(k);
        let p = psnr(&r, &t)?;
        let s = ssim(&r, &t)?;
        if p.is_finite() {
            psnr_sum += p;
            psnr_finite += 1;
        }
        ssim_sum += s;
        per_frame.push(FrameScore { psnr: p, ssim: s });
    }
    let psnr_db = if psnr_finite == 0 {
        f64::INFINITY
    } else {
        psnr_sum / psnr_finite as f64
    };
    Ok(MetricReport {
        psnr_db,
        ssim: ssim_sum / reference.t_count() as f64,
        per_frame,
        psnr_inf_count: reference.t_count() - psnr_finite,
    })
}
