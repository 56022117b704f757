//! Bundled synthetic corpus: three procedural clips of moving shapes,
//! 64x64 at 64 frames, fully determined by the frame index. Ships in
//! code so benchmarks never download anything.

use ndarray::Array3;
use sci_forge_core::VideoCube;

pub const CORPUS_FRAMES: usize = 64;
pub const CORPUS_SIZE: usize = 64;

/// Smooth step from 0 at `edge0` to 1 at `edge1`.
fn smoothstep(edge0: f32, edge1: f32, x: f32) -> f32 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Soft-edged disk coverage at (r, c) for a disk centered (cy, cx).
fn disk(r: f32, c: f32, cy: f32, cx: f32, radius: f32) -> f32 {
    let d = ((r - cy).powi(2) + (c - cx).powi(2)).sqrt();
    1.0 - smoothstep(radius - 0.75, radius + 0.75, d)
}

/// Soft-edged axis-aligned rectangle coverage.
fn rect(r: f32, c: f32, cy: f32, cx: f32, half_h: f32, half_w: f32) -> f32 {
    let dy = (r - cy).abs() - half_h;
    let dx = (c - cx).abs() - half_w;
    let d = dy.max(dx);
    1.0 - smoothstep(-0.75, 0.75, d)
}

fn blend(base: f32, cover: f32, value: f32) -> f32 {
    base * (1.0 - cover) + value * cover
}

/// Static textured background shared by all clips, varied per clip by a
/// phase offset so the clips are not pixel-identical.
fn background(r: f32, c: f32, phase: f32) -> f32 {
    let n = CORPUS_SIZE as f32;
    let grad = 0.25 + 0.25 * (r / n) + 0.15 * (c / n);
    let texture = 0.04 * ((0.55 * r + phase).sin() * (0.38 * c + 1.3 * phase).cos());
    grad + texture
}

fn render_clip<F>(shape_at: F, phase: f32) -> VideoCube
where
    F: Fn(usize, f32, f32, f32) -> f32,
{
    let (t, n) = (CORPUS_FRAMES, CORPUS_SIZE);
    let data = Array3::from_shape_fn((t, n, n), |(k, r, c)| {
        let (rf, cf) = (r as f32, c as f32);
        let v = shape_at(k, rf, cf, background(rf, cf, phase));
        v.clamp(0.02, 0.98)
    });
    VideoCube::new(data).expect("corpus dims are fixed and positive")
}

/// A bright square and a dark disk drifting in opposite directions.
fn clip_drift() -> VideoCube {
    render_clip(
        |k, r, c, bg| {
            let kf = k as f32;
            let mut v = bg;
            let sq = rect(r, c, 14.0 + 0.45 * kf, 10.0 + 0.65 * kf, 6.0, 6.0);
            v = blend(v, sq, 0.88);
            let dk = disk(r, c, 48.0 - 0.3 * kf, 52.0 - 0.6 * kf, 7.0);
            v = blend(v, dk, 0.08);
            v
        },
        0.0,
    )
}

/// Two disks orbiting the frame center at different rates.
fn clip_orbit() -> VideoCube {
    render_clip(
        |k, r, c, bg| {
            let kf = k as f32;
            let mid = CORPUS_SIZE as f32 / 2.0;
            let a1 = 0.09 * kf;
            let a2 = -0.055 * kf + 1.9;
            let mut v = bg;
            let d1 = disk(r, c, mid + 18.0 * a1.sin(), mid + 18.0 * a1.cos(), 6.5);
            v = blend(v, d1, 0.85);
            let d2 = disk(r, c, mid + 10.0 * a2.sin(), mid + 10.0 * a2.cos(), 4.5);
            v = blend(v, d2, 0.12);
            let bar = rect(r, c, 56.0, mid + 20.0 * (0.07 * kf).sin(), 3.0, 9.0);
            v = blend(v, bar, 0.7);
            v
        },
        2.1,
    )
}

/// A ball bouncing off the walls plus a sweeping vertical bar.
fn clip_bounce() -> VideoCube {
    let n = CORPUS_SIZE as f32;
    render_clip(
        move |k, r, c, bg| {
            let kf = k as f32;
            // Triangle-wave position keeps the ball inside [8, n-8].
            let span = n - 16.0;
            let tri = |x: f32| {
                let m = x.rem_euclid(2.0 * span);
                if m < span {
                    m
                } else {
                    2.0 * span - m
                }
            };
            let by = 8.0 + tri(1.1 * kf + 9.0);
            let bx = 8.0 + tri(0.7 * kf + 30.0);
            let mut v = bg;
            let ball = disk(r, c, by, bx, 5.5);
            v = blend(v, ball, 0.9);
            let bar = rect(r, c, n / 2.0, 6.0 + (0.8 * kf) % (n - 12.0), 26.0, 2.0);
            v = blend(v, bar, 0.15);
            v
        },
        4.7,
    )
}

/// The bundled clips in their fixed benchmark order.
pub fn bundled_corpus() -> Vec<(String, VideoCube)> {
    vec![
        ("drift".to_string(), clip_drift()),
        ("orbit".to_string(), clip_orbit()),
        ("bounce".to_string(), clip_bounce()),
    ]
}
