//! Dense 3-D convolution with isotropic dilation, zero padding, and
//! stride 1, shape-preserving over (T, H, W).

use crate::error::{Result, SciError};
use ndarray::{Array4, Array5};

/// kernel is (Cout, Cin, 3, 3, 3); padding equals the dilation so the
/// output keeps the input extent.
pub fn conv3d(
    x: &Array4<f32>,
    kernel: &Array5<f32>,
    bias: &[f32],
    dilation: usize,
) -> Result<Array4<f32>> {
    let (c_in, t, h, w) = x.dim();
    let (c_out, kc_in, kt, kh, kw) = kernel.dim();
    if kc_in != c_in || (kt, kh, kw) != (3, 3, 3) {
        return Err(SciError::ShapeMismatch(format!(
            "kernel {c_out}x{kc_in}x{kt}x{kh}x{kw} against {c_in} input channels"
        )));
    }
    if bias.len() != c_out {
        return Err(SciError::ShapeMismatch(format!(
            "bias length {} against {c_out} output channels",
            bias.len()
        )));
    }
    if dilation == 0 {
        return Err(SciError::InvalidParam("dilation must be >= 1".into()));
    }
    let d = dilation as isize;
    let mut out = Array4::<f32>::zeros((c_out, t, h, w));
    for co in 0..c_out {
        out.index_axis_mut(ndarray::Axis(0), co).fill(bias[co]);
        for ci in 0..c_in {
            for tap_t in 0..3 {
                let dt = d * (tap_t as isize - 1);
                let (t_lo, t_hi) = tap_range(t, dt);
                for tap_h in 0..3 {
                    let dh = d * (tap_h as isize - 1);
                    let (h_lo, h_hi) = tap_range(h, dh);
                    for tap_w in 0..3 {
                        let dw = d * (tap_w as isize - 1);
                        let (w_lo, w_hi) = tap_range(w, dw);
                        let weight = kernel[[co, ci, tap_t, tap_h, tap_w]];
                        if weight == 0.0 {
                            continue;
                        }
                        for ot in t_lo..t_hi {
                            let it = (ot as isize + dt) as usize;
                            for oh in h_lo..h_hi {
                                let ih = (oh as isize + dh) as usize;
                                for ow in w_lo..w_hi {
                                    let iw = (ow as isize + dw) as usize;
                                    out[[co, ot, oh, ow]] += weight * x[[ci, it, ih, iw]];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Output index range [lo, hi) for which index + offset stays in
/// [0, extent); empty when the offset exceeds the extent.
fn tap_range(extent: usize, offset: isize) -> (usize, usize) {
    let lo = if offset < 0 { (-offset) as usize } else { 0 };
    let hi = if offset > 0 {
        extent.saturating_sub(offset as usize)
    } else {
        extent
    };
    (lo.min(hi), hi)
}
