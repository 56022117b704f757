//! Real 2-D FFT over the spatial plane, half-spectrum layout, and its
//! inverse. Transforms run in f64 so Parseval holds to tight relative
//! tolerance on every supported frame size.

use crate::error::{Result, SciError};
use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub type Spectrum = Array2<Complex<f64>>;

/// Number of stored frequency bins along the width axis.
pub fn half_width(w: usize) -> usize {
    w / 2 + 1
}

/// Forward real FFT: rows first, then columns of the retained half
/// spectrum. Unnormalized, matching the 1/(H*W) convention on inverse.
pub fn rfft2(frame: &Array2<f64>) -> Spectrum {
    let (h, w) = frame.dim();
    let hw = half_width(w);
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_forward(w);
    let col_fft = planner.plan_fft_forward(h);

    let mut half = Array2::from_elem((h, hw), Complex::new(0.0, 0.0));
    let mut row_buf = vec![Complex::new(0.0, 0.0); w];
    for r in 0..h {
        for c in 0..w {
            row_buf[c] = Complex::new(frame[[r, c]], 0.0);
        }
        row_fft.process(&mut row_buf);
        for v in 0..hw {
            half[[r, v]] = row_buf[v];
        }
    }
    let mut col_buf = vec![Complex::new(0.0, 0.0); h];
    for v in 0..hw {
        for r in 0..h {
            col_buf[r] = half[[r, v]];
        }
        col_fft.process(&mut col_buf);
        for r in 0..h {
            half[[r, v]] = col_buf[r];
        }
    }
    half
}

/// Inverse of `rfft2` for a real target of width `w`. The missing half
/// of each row spectrum is rebuilt from Hermitian symmetry.
pub fn irfft2(spec: &Spectrum, w: usize) -> Result<Array2<f64>> {
    let (h, hw) = spec.dim();
    if hw != half_width(w) {
        return Err(SciError::InvalidDims(format!(
            "half spectrum has {hw} bins, width {w} needs {}",
            half_width(w)
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let col_fft = planner.plan_fft_inverse(h);
    let row_fft = planner.plan_fft_inverse(w);

    let mut half = spec.clone();
    let mut col_buf = vec![Complex::new(0.0, 0.0); h];
    for v in 0..hw {
        for r in 0..h {
            col_buf[r] = half[[r, v]];
        }
        col_fft.process(&mut col_buf);
        for r in 0..h {
            half[[r, v]] = col_buf[r];
        }
    }
    let mut out = Array2::<f64>::zeros((h, w));
    let mut row_buf = vec![Complex::new(0.0, 0.0); w];
    let scale = 1.0 / (h * w) as f64;
    for r in 0..h {
        for v in 0..w {
            row_buf[v] = if v < hw {
                half[[r, v]]
            } else {
                half[[r, w - v]].conj()
            };
        }
        row_fft.process(&mut row_buf);
        for c in 0..w {
            out[[r, c]] = row_buf[c].re * scale;
        }
    }
    Ok(out)
}

/// Spectral energy with half-spectrum duplication weights: the DC
/// column counts once, the Nyquist column (even widths) once, interior
/// columns twice.
pub fn spectrum_energy(spec: &Spectrum, w: usize) -> f64 {
    let (_, hw) = spec.dim();
    let mut acc = 0.0f64;
    for (idx, v) in spec.indexed_iter() {
        let col = idx.1;
        let weight = if col == 0 || (w % 2 == 0 && col == hw - 1) {
            1.0
        } else {
            2.0
        };
        acc += weight * v.norm_sqr();
    }
    acc
}
