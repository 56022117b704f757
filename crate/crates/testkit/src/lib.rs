//! Reference oracles for the test suites.
//!
//! Everything here is deliberately written the slow, obvious way — direct
//! DFT sums, per-window SSIM, nested-loop convolution, a double-precision
//! GAP-TV scripted before the production solver — and shares no code with
//! the implementations it checks. Keep it that way: these functions are
//! the independent side of every dual-route test.

use ndarray::{Array2, Array3, Array4};

/// Complex value as a plain pair; avoids sharing a complex type with the
/// implementation under test.
pub type C64 = (f64, f64);

fn c_add(a: C64, b: C64) -> C64 {
    (a.0 + b.0, a.1 + b.1)
}

fn c_mul(a: C64, b: C64) -> C64 {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// Direct 2-D DFT of a real input, full H x W spectrum.
pub fn dft2(x: &Array2<f64>) -> Array2<C64> {
    let (h, w) = x.dim();
    let mut out = Array2::from_elem((h, w), (0.0, 0.0));
    for u in 0..h {
        for v in 0..w {
            let mut acc = (0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let phase = -2.0 * std::f64::consts::PI
                        * ((u * r) as f64 / h as f64 + (v * c) as f64 / w as f64);
                    acc = c_add(acc, c_mul((x[[r, c]], 0.0), (phase.cos(), phase.sin())));
                }
            }
            out[[u, v]] = acc;
        }
    }
    out
}

/// Direct inverse 2-D DFT of a full spectrum, real part, 1/(H*W) scaling.
pub fn idft2_real(spec: &Array2<C64>) -> Array2<f64> {
    let (h, w) = spec.dim();
    let mut out = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let mut acc = (0.0, 0.0);
            for u in 0..h {
                for v in 0..w {
                    let phase = 2.0 * std::f64::consts::PI
                        * ((u * r) as f64 / h as f64 + (v * c) as f64 / w as f64);
                    acc = c_add(acc, c_mul(spec[[u, v]], (phase.cos(), phase.sin())));
                }
            }
            out[[r, c]] = acc.0 / (h * w) as f64;
        }
    }
    out
}

/// Half-spectrum of the direct DFT: bins `0..=W/2` along the column axis,
/// matching a real-input FFT layout.
pub fn rdft2_half(x: &Array2<f64>) -> Array2<C64> {
    let full = dft2(x);
    let (h, w) = full.dim();
    let half_w = w / 2 + 1;
    let mut out = Array2::from_elem((h, half_w), (0.0, 0.0));
    for u in 0..h {
        for v in 0..half_w {
            out[[u, v]] = full[[u, v]];
        }
    }
    out
}

/// PSNR in dB with MAX = 1.0. Returns +inf for identical inputs.
pub fn psnr_oracle(reference: &Array2<f64>, test: &Array2<f64>) -> f64 {
    assert_eq!(reference.dim(), test.dim());
    let mut sq = 0.0f64;
    for (a, b) in reference.iter().zip(test.iter()) {
        sq += (a - b) * (a - b);
    }
    let mse = sq / reference.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// SSIM by explicit per-window evaluation: 11x11 Gaussian window with
/// sigma 1.5, K1 = 0.01, K2 = 0.03, L = 1, valid region only.
pub fn ssim_oracle(reference: &Array2<f64>, test: &Array2<f64>) -> f64 {
    assert_eq!(reference.dim(), test.dim());
    let (h, w) = reference.dim();
    assert!(h >= 11 && w >= 11, "frames below the 11x11 window");

    let mut kernel = [[0.0f64; 11]; 11];
    let sigma = 1.5f64;
    let mut total = 0.0;
    for (i, row) in kernel.iter_mut().enumerate() {
        for (j, k) in row.iter_mut().enumerate() {
            let dy = i as f64 - 5.0;
            let dx = j as f64 - 5.0;
            *k = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            total += *k;
        }
    }
    for row in kernel.iter_mut() {
        for k in row.iter_mut() {
            *k /= total;
        }
    }

    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let mut acc = 0.0f64;
    let mut windows = 0usize;
    for top in 0..=(h - 11) {
        for left in 0..=(w - 11) {
            let mut mu_x = 0.0;
            let mut mu_y = 0.0;
            for i in 0..11 {
                for j in 0..11 {
                    mu_x += kernel[i][j] * reference[[top + i, left + j]];
                    mu_y += kernel[i][j] * test[[top + i, left + j]];
                }
            }
            let mut var_x = 0.0;
            let mut var_y = 0.0;
            let mut cov = 0.0;
            for i in 0..11 {
                for j in 0..11 {
                    let dx = reference[[top + i, left + j]] - mu_x;
                    let dy = test[[top + i, left + j]] - mu_y;
                    var_x += kernel[i][j] * dx * dx;
                    var_y += kernel[i][j] * dy * dy;
                    cov += kernel[i][j] * dx * dy;
                }
            }
            let num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
            let den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
            acc += num / den;
            windows += 1;
        }
    }
    acc / windows as f64
}

/// Dense 3-D convolution by the direct sum: kernel (Cout, Cin, 3, 3, 3),
/// dilation `d` on all axes, zero padding `d`, stride 1.
pub fn conv3d_oracle(
    x: &Array4<f64>,
    kernel: &ndarray::Array5<f64>,
    bias: &[f64],
    dilation: usize,
) -> Array4<f64> {
    let (c_in, t, h, w) = x.dim();
    let (c_out, kc_in, kt, kh, kw) = kernel.dim();
    assert_eq!(c_in, kc_in);
    assert_eq!((kt, kh, kw), (3, 3, 3));
    assert_eq!(bias.len(), c_out);
    let d = dilation as isize;
    let mut out = Array4::zeros((c_out, t, h, w));
    for co in 0..c_out {
        for ot in 0..t {
            for oh in 0..h {
                for ow in 0..w {
                    let mut acc = bias[co];
                    for ci in 0..c_in {
                        for tap_t in 0..3isize {
                            for tap_h in 0..3isize {
                                for tap_w in 0..3isize {
                                    let it = ot as isize + d * (tap_t - 1);
                                    let ih = oh as isize + d * (tap_h - 1);
                                    let iw = ow as isize + d * (tap_w - 1);
                                    if it < 0
                                        || ih < 0
                                        || iw < 0
                                        || it >= t as isize
                                        || ih >= h as isize
                                        || iw >= w as isize
                                    {
                                        continue;
                                    }
                                    acc += x[[ci, it as usize, ih as usize, iw as usize]]
                                        * kernel[[
                                            co,
                                            ci,
                                            tap_t as usize,
                                            tap_h as usize,
                                            tap_w as usize,
                                        ]];
                                }
                            }
                        }
                    }
                    out[[co, ot, oh, ow]] = acc;
                }
            }
        }
    }
    out
}

/// Anisotropic TV objective: 0.5 * ||u - f||^2 + lambda * TV(u), forward
/// differences with replicate boundary.
pub fn tv_objective(u: &Array2<f64>, f: &Array2<f64>, lambda: f64) -> f64 {
    let (h, w) = u.dim();
    let mut fidelity = 0.0;
    for (a, b) in u.iter().zip(f.iter()) {
        fidelity += (a - b) * (a - b);
    }
    let mut tv = 0.0;
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                tv += (u[[r, c + 1]] - u[[r, c]]).abs();
            }
            if r + 1 < h {
                tv += (u[[r + 1, c]] - u[[r, c]]).abs();
            }
        }
    }
    0.5 * fidelity + lambda * tv
}

/// Double-precision GAP-TV reference, scripted ahead of the production
/// solver. Flat-vector layout, no early stopping, no acceleration.
pub fn gap_tv_reference(
    measurement: &Array2<f64>,
    masks: &Array3<f64>,
    lambda: f64,
    outer_iters: usize,
    tv_inner_iters: usize,
) -> Array3<f64> {
    let (cr, h, w) = masks.dim();
    assert_eq!(measurement.dim(), (h, w));
    let n = h * w;
    let y: Vec<f64> = measurement.iter().copied().collect();
    let m: Vec<f64> = masks.iter().copied().collect();

    // E(p) = sum_k M_k(p)^2; binary masks make this the plain mask sum.
    let mut energy = vec![0.0f64; n];
    for k in 0..cr {
        for p in 0..n {
            energy[p] += m[k * n + p] * m[k * n + p];
        }
    }

    // Warm start: adjoint divided by max(E, 1).
    let mut x = vec![0.0f64; cr * n];
    for k in 0..cr {
        for p in 0..n {
            x[k * n + p] = m[k * n + p] * y[p] / energy[p].max(1.0);
        }
    }

    let mut forward = vec![0.0f64; n];
    for _ in 0..outer_iters {
        // Projection: v = x + M .* (y - Mx) / E.
        for p in 0..n {
            forward[p] = 0.0;
        }
        for k in 0..cr {
            for p in 0..n {
                forward[p] += m[k * n + p] * x[k * n + p];
            }
        }
        for k in 0..cr {
            for p in 0..n {
                if energy[p] > 0.0 {
                    x[k * n + p] += m[k * n + p] * (y[p] - forward[p]) / energy[p];
                }
            }
        }
        // Per-frame anisotropic TV denoising on the projected iterate.
        for k in 0..cr {
            let frame = x[k * n..(k + 1) * n].to_vec();
            let denoised = tv_dual_clip_2d(&frame, h, w, lambda, tv_inner_iters);
            x[k * n..(k + 1) * n].copy_from_slice(&denoised);
        }
    }

    let mut out = Array3::zeros((cr, h, w));
    for k in 0..cr {
        for r in 0..h {
            for c in 0..w {
                out[[k, r, c]] = x[k * n + r * w + c].clamp(0.0, 1.0);
            }
        }
    }
    out
}

/// Dual projected-ascent TV denoiser on a flat frame, duals kept in
/// [-1, 1] and clipped every step.
fn tv_dual_clip_2d(f: &[f64], h: usize, w: usize, lambda: f64, iters: usize) -> Vec<f64> {
    let n = h * w;
    let mut p_h = vec![0.0f64; n];
    let mut p_v = vec![0.0f64; n];
    let mut u = f.to_vec();
    let tau = 0.25;
    for _ in 0..iters {
        // u = f + lambda * div(p)
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                let mut div = 0.0;
                if c + 1 < w {
                    div += p_h[i];
                }
                if c > 0 {
                    div -= p_h[i - 1];
                }
                if r + 1 < h {
                    div += p_v[i];
                }
                if r > 0 {
                    div -= p_v[i - w];
                }
                u[i] = f[i] + lambda * div;
            }
        }
        // p += (tau / lambda) * grad(u), clipped componentwise.
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if c + 1 < w {
                    p_h[i] = (p_h[i] + tau / lambda * (u[i + 1] - u[i])).clamp(-1.0, 1.0);
                }
                if r + 1 < h {
                    p_v[i] = (p_v[i] + tau / lambda * (u[i + w] - u[i])).clamp(-1.0, 1.0);
                }
            }
        }
    }
    // Final primal from the last dual state.
    let mut out = f.to_vec();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let mut div = 0.0;
            if c + 1 < w {
                div += p_h[i];
            }
            if c > 0 {
                div -= p_h[i - 1];
            }
            if r + 1 < h {
                div += p_v[i];
            }
            if r > 0 {
                div -= p_v[i - w];
            }
            out[i] = f[i] + lambda * div;
        }
    }
    out
}

/// Mean PSNR of a reconstruction against ground truth, frame by frame.
pub fn cube_psnr(reference: &Array3<f64>, test: &Array3<f64>) -> f64 {
    let (t, _, _) = reference.dim();
    assert_eq!(reference.dim(), test.dim());
    let mut acc = 0.0;
    let mut count = 0usize;
    for k in 0..t {
        let r = reference.index_axis(ndarray::Axis(0), k).to_owned();
        let s = test.index_axis(ndarray::Axis(0), k).to_owned();
        let p = psnr_oracle(&r, &s);
        if p.is_finite() {
            acc += p;
            count += 1;
        }
    }
    if count == 0 {
        f64::INFINITY
    } else {
        acc / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_of_constant_concentrates_at_dc() {
        let x = Array2::from_elem((4, 4), 1.0);
        let spec = dft2(&x);
        assert!((spec[[0, 0]].0 - 16.0).abs() < 1e-9);
        assert!(spec[[0, 0]].1.abs() < 1e-9);
        assert!(spec[[1, 2]].0.abs() < 1e-9);
    }

    #[test]
    fn dft_roundtrip() {
        let x = Array2::from_shape_fn((5, 7), |(r, c)| ((r * 7 + c) as f64 * 0.37).sin());
        let back = idft2_real(&dft2(&x));
        for (a, b) in x.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn psnr_oracle_known_value() {
        let a = Array2::from_elem((8, 8), 0.0);
        let b = Array2::from_elem((8, 8), 0.1);
        assert!((psnr_oracle(&a, &b) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn ssim_oracle_self_is_one() {
        let x = Array2::from_shape_fn((16, 16), |(r, c)| ((r + 2 * c) as f64 * 0.11).cos());
        assert!((ssim_oracle(&x, &x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tv_objective_of_constant_is_zero_tv() {
        let u = Array2::from_elem((4, 4), 0.3);
        assert!((tv_objective(&u, &u, 0.5)).abs() < 1e-12);
    }
}
