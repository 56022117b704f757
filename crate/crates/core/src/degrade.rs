//! Degradation simulation: motion blur by frame averaging, low-light
//! darkening with sensor noise, the fixed scenario grid, and randomized
//! training schedules with smooth chunk-to-chunk transitions.

use crate::cube::{FrameImage, VideoCube};
use crate::error::{Result, SciError};
use crate::rng::SeededRng;
use ndarray::Array3;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Half-width of the widest supported blur window (N = 17). Ground-truth
/// centers keep this margin on both sides for every scenario so the same
/// source yields identical center frames regardless of severity.
pub const GT_MARGIN: usize = 8;

/// Spacing between schedule anchor chunks. With the default parameter
/// ranges this bounds per-chunk steps to |dN| <= 2, |d_alpha| <= 0.1125,
/// |d_sigma| <= 5.
pub const ANCHOR_SPACING: usize = 8;

/// One resolved degradation setting. `noise_sigma` is in 8-bit intensity
/// units and is scaled by 1/255 when applied.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DegradationParams {
    /// Blur window length, odd, 1 disables blur.
    pub blur_n: usize,
    /// Darkening strength in [0, 1], 0 disables darkening.
    pub darken_alpha: f32,
    /// Gaussian noise std in 8-bit units, 0 disables noise.
    pub noise_sigma: f32,
    pub seed: u64,
}

impl DegradationParams {
    pub fn validate(&self) -> Result<()> {
        if self.blur_n == 0 || self.blur_n % 2 == 0 {
            return Err(SciError::InvalidParam(format!(
                "blur window must be odd and positive, got {}",
                self.blur_n
            )));
        }
        if !(0.0..=1.0).contains(&self.darken_alpha) {
            return Err(SciError::InvalidParam(format!(
                "darken alpha must lie in [0,1], got {}",
                self.darken_alpha
            )));
        }
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(SciError::InvalidParam(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// The ten benchmark scenarios: three severity levels per degradation
/// family plus the undegraded control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    Clean,
    MotionBlurL1,
    MotionBlurL2,
    MotionBlurL3,
    LowLightL1,
    LowLightL2,
    LowLightL3,
    MixedL1,
    MixedL2,
    MixedL3,
}

/// Degradation family, used to group severity levels in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioFamily {
    Clean,
    MotionBlur,
    LowLight,
    Mixed,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 10] = [
        ScenarioId::Clean,
        ScenarioId::MotionBlurL1,
        ScenarioId::MotionBlurL2,
        ScenarioId::MotionBlurL3,
        ScenarioId::LowLightL1,
        ScenarioId::LowLightL2,
        ScenarioId::LowLightL3,
        ScenarioId::MixedL1,
        ScenarioId::MixedL2,
        ScenarioId::MixedL3,
    ];

    /// Resolved (N, alpha, sigma) for the scenario. Total over all ids;
    /// absent knobs resolve to their neutral values (N=1, 0, 0).
    pub fn params(self, seed: u64) -> DegradationParams {
        let (blur_n, darken_alpha, noise_sigma) = match self {
            ScenarioId::Clean => (1, 0.0, 0.0),
            ScenarioId::MotionBlurL1 => (7, 0.0, 0.0),
            ScenarioId::MotionBlurL2 => (11, 0.0, 0.0),
            ScenarioId::MotionBlurL3 => (15, 0.0, 0.0),
            ScenarioId::LowLightL1 => (1, 0.6, 10.0),
            ScenarioId::LowLightL2 => (1, 0.8, 25.0),
            ScenarioId::LowLightL3 => (1, 0.9, 40.0),
            ScenarioId::MixedL1 => (7, 0.6, 10.0),
            ScenarioId::MixedL2 => (11, 0.8, 25.0),
            ScenarioId::MixedL3 => (15, 0.9, 40.0),
        };
        DegradationParams {
            blur_n,
            darken_alpha,
            noise_sigma,
            seed,
        }
    }

    pub fn family(self) -> ScenarioFamily {
        match self {
            ScenarioId::Clean => ScenarioFamily::Clean,
            ScenarioId::MotionBlurL1 | ScenarioId::MotionBlurL2 | ScenarioId::MotionBlurL3 => {
                ScenarioFamily::MotionBlur
            }
            ScenarioId::LowLightL1 | ScenarioId::LowLightL2 | ScenarioId::LowLightL3 => {
                ScenarioFamily::LowLight
            }
            ScenarioId::MixedL1 | ScenarioId::MixedL2 | ScenarioId::MixedL3 => {
                ScenarioFamily::Mixed
            }
        }
    }

    /// Severity level 1..=3; 0 for Clean.
    pub fn level(self) -> u8 {
        match self {
            ScenarioId::Clean => 0,
            ScenarioId::MotionBlurL1 | ScenarioId::LowLightL1 | ScenarioId::MixedL1 => 1,
            ScenarioId::MotionBlurL2 | ScenarioId::LowLightL2 | ScenarioId::MixedL2 => 2,
            ScenarioId::MotionBlurL3 | ScenarioId::LowLightL3 | ScenarioId::MixedL3 => 3,
        }
    }

    /// Stable CLI and report name, e.g. "MotionBlur-L2".
    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Clean => "Clean",
            ScenarioId::MotionBlurL1 => "MotionBlur-L1",
            ScenarioId::MotionBlurL2 => "MotionBlur-L2",
            ScenarioId::MotionBlurL3 => "MotionBlur-L3",
            ScenarioId::LowLightL1 => "LowLight-L1",
            ScenarioId::LowLightL2 => "LowLight-L2",
            ScenarioId::LowLightL3 => "LowLight-L3",
            ScenarioId::MixedL1 => "Mixed-L1",
            ScenarioId::MixedL2 => "Mixed-L2",
            ScenarioId::MixedL3 => "Mixed-L3",
        }
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = SciError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .iter()
            .copied()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SciError::UnknownScenario(s.to_string()))
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl serde::Serialize for ScenarioId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for ScenarioId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = <String as serde::Deserialize>::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// Parameter ranges for randomized training schedules.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ScheduleSpec {
    /// Inclusive odd endpoints for the blur window draw.
    pub n_range: (usize, usize),
    pub alpha_range: (f32, f32),
    pub sigma_range: (f32, f32),
    /// Frames per chunk fed to one encoded measurement group.
    pub chunk_len: usize,
    pub seed: u64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            n_range: (3, 17),
            alpha_range: (0.0, 0.9),
            sigma_range: (0.0, 40.0),
            chunk_len: 8,
            seed: 0,
        }
    }
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        let (n_lo, n_hi) = self.n_range;
        if n_lo == 0 || n_lo % 2 == 0 || n_hi % 2 == 0 || n_lo > n_hi {
            return Err(SciError::InvalidParam(format!(
                "blur range must be odd positive lo <= hi, got [{n_lo},{n_hi}]"
            )));
        }
        let (a_lo, a_hi) = self.alpha_range;
        if !(0.0..=1.0).contains(&a_lo) || !(0.0..=1.0).contains(&a_hi) || a_lo > a_hi {
            return Err(SciError::InvalidParam(format!(
                "alpha range must satisfy 0 <= lo <= hi <= 1, got [{a_lo},{a_hi}]"
            )));
        }
        let (s_lo, s_hi) = self.sigma_range;
        if s_lo < 0.0 || s_lo > s_hi || !s_hi.is_finite() {
            return Err(SciError::InvalidParam(format!(
                "sigma range must satisfy 0 <= lo <= hi, got [{s_lo},{s_hi}]"
            )));
        }
        if self.chunk_len == 0 {
            return Err(SciError::InvalidParam("chunk_len must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mean of the N consecutive frames centered on `center_index`. The
/// window must lie fully inside the cube; N must be odd.
pub fn motion_blur(high_speed: &VideoCube, center_index: usize, blur_n: usize) -> Result<FrameImage> {
    if blur_n == 0 || blur_n % 2 == 0 {
        return Err(SciError::InvalidParam(format!(
            "blur window must be odd and positive, got {blur_n}"
        )));
    }
    let half = blur_n / 2;
    let t = high_speed.t_count();
    if center_index < half || center_index + half >= t {
        return Err(SciError::InvalidParam(format!(
            "blur window [{}..={}] exceeds frame range 0..{t}",
            center_index as isize - half as isize,
            center_index + half
        )));
    }
    let (h, w) = (high_speed.height(), high_speed.width());
    let mut acc = ndarray::Array2::<f32>::zeros((h, w));
    for k in (center_index - half)..=(center_index + half) {
        acc += &high_speed.data.index_axis(ndarray::Axis(0), k);
    }
    acc /= blur_n as f32;
    Ok(FrameImage { data: acc })
}

/// Quadratic darkening followed by additive Gaussian sensor noise. The
/// curve d = I - alpha*I*(1-I) dims mid-tones most and fixes 0 and 1;
/// clamping happens once, after the noise.
pub fn low_light(
    frame: &FrameImage,
    alpha: f32,
    sigma: f32,
    rng: &mut SeededRng,
) -> Result<FrameImage> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SciError::InvalidParam(format!(
            "darken alpha must lie in [0,1], got {alpha}"
        )));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(SciError::InvalidParam(format!(
            "noise sigma must be finite and >= 0, got {sigma}"
        )));
    }
    let mut out = frame.data.clone();
    out.mapv_inplace(|v| v - alpha * v * (1.0 - v));
    if sigma > 0.0 {
        let normal = Normal::new(0.0f32, sigma / 255.0)
            .map_err(|e| SciError::InvalidParam(format!("noise distribution: {e}")))?;
        out.mapv_inplace(|v| v + normal.sample(rng));
    }
    out.mapv_inplace(|v| v.clamp(0.0, 1.0));
    Ok(FrameImage { data: out })
}

/// Per-pixel darkening without noise, applied to a whole cube. Used by
/// the randomized schedule path where blur and darkening share a chunk.
fn low_light_cube(cube: &VideoCube, alpha: f32, sigma: f32, rng: &mut SeededRng) -> Result<VideoCube> {
    let mut frames = Vec::with_capacity(cube.t_count());
    for k in 0..cube.t_count() {
        frames.push(low_light(&cube.frame(k), alpha, sigma, rng)?);
    }
    VideoCube::from_frames(&frames)
}

/// Extract (degraded, ground_truth) frame pairs from a high-speed cube.
/// Centers start at GT_MARGIN and advance by `gt_stride`, so every
/// scenario sees the same ground-truth frames. Degradation runs blur,
/// then darkening, then noise; Clean copies the centers to both sides.
pub fn apply_scenario(
    cube_hs: &VideoCube,
    scenario: ScenarioId,
    gt_stride: usize,
    rng: &SeededRng,
) -> Result<(VideoCube, VideoCube)> {
    if gt_stride == 0 {
        return Err(SciError::InvalidParam("gt_stride must be >= 1".into()));
    }
    let t = cube_hs.t_count();
    if t < 2 * GT_MARGIN + 1 {
        return Err(SciError::InvalidDims(format!(
            "need at least {} frames for the widest blur window, got {t}",
            2 * GT_MARGIN + 1
        )));
    }
    let params = scenario.params(rng.seed());
    params.validate()?;
    let centers: Vec<usize> = (GT_MARGIN..=(t - 1 - GT_MARGIN))
        .step_by(gt_stride)
        .collect();

    let (h, w) = (cube_hs.height(), cube_hs.width());
    let mut degraded = Array3::<f32>::zeros((centers.len(), h, w));
    let mut ground_truth = Array3::<f32>::zeros((centers.len(), h, w));
    for (i, &c) in centers.iter().enumerate() {
        let gt = cube_hs.data.index_axis(ndarray::Axis(0), c);
        ground_truth
            .index_axis_mut(ndarray::Axis(0), i)
            .assign(&gt);
        if scenario == ScenarioId::Clean {
            degraded.index_axis_mut(ndarray::Axis(0), i).assign(&gt);
            continue;
        }
        let blurred = motion_blur(cube_hs, c, params.blur_n)?;
        let mut center_rng = rng.child(i as u64);
        let dark = low_light(&blurred, params.darken_alpha, params.noise_sigma, &mut center_rng)?;
        degraded
            .index_axis_mut(ndarray::Axis(0), i)
            .assign(&dark.data);
    }
    Ok((VideoCube::new(degraded)?, VideoCube::new(ground_truth)?))
}

/// Degrade every frame of one schedule chunk with fixed parameters:
/// blur each frame against the chunk's source window, then darken and
/// add noise. Frames too close to the cube edge reuse the nearest valid
/// center so chunk boundaries stay aligned.
pub fn degrade_chunk(
    cube_hs: &VideoCube,
    frame_indices: &[usize],
    params: &DegradationParams,
) -> Result<VideoCube> {
    params.validate()?;
    let half = params.blur_n / 2;
    let t = cube_hs.t_count();
    let mut frames = Vec::with_capacity(frame_indices.len());
    for &idx in frame_indices {
        let center = idx.clamp(half, t.saturating_sub(half + 1));
        frames.push(motion_blur(cube_hs, center, params.blur_n)?);
    }
    let blurred = VideoCube::from_frames(&frames)?;
    let mut rng = SeededRng::new(params.seed);
    low_light_cube(&blurred, params.darken_alpha, params.noise_sigma, &mut rng)
}

fn round_to_odd(x: f32) -> usize {
    let k = ((x - 1.0) / 2.0).round().max(0.0) as usize;
    2 * k + 1
}

fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}

/// Draw a per-chunk parameter sequence: uniform triples at anchor chunks
/// every ANCHOR_SPACING, linear interpolation between, blur length
/// rounded to the nearest odd value. Each chunk gets its own derived
/// noise seed.
pub fn sample_schedule(spec: &ScheduleSpec, chunk_count: usize) -> Result<Vec<DegradationParams>> {
    spec.validate()?;
    if chunk_count == 0 {
        return Err(SciError::InvalidParam("chunk_count must be >= 1".into()));
    }
    let root = SeededRng::new(spec.seed);
    let mut anchor_rng = root.child_named("schedule-anchors");
    let (n_lo, n_hi) = spec.n_range;
    let n_choices = (n_hi - n_lo) / 2 + 1;
    let segment_count = if chunk_count == 1 {
        0
    } else {
        (chunk_count - 1).div_ceil(ANCHOR_SPACING)
    };
    let anchors: Vec<(f32, f32, f32)> = (0..=segment_count)
        .map(|_| {
            let n = n_lo + 2 * anchor_rng.gen_range(0..n_choices);
            let a = anchor_rng.gen_range(spec.alpha_range.0..=spec.alpha_range.1);
            let s = anchor_rng.gen_range(spec.sigma_range.0..=spec.sigma_range.1);
            (n as f32, a, s)
        })
        .collect();

    let mut out = Vec::with_capacity(chunk_count);
    for i in 0..chunk_count {
        let (n_cont, alpha, sigma) = if segment_count == 0 {
            anchors[0]
        } else {
            let j = (i / ANCHOR_SPACING).min(segment_count - 1);
            let t = (i - j * ANCHOR_SPACING) as f32 / ANCHOR_SPACING as f32;
            let a = anchors[j];
            let b = anchors[j + 1];
            (lerp(a.0, b.0, t), lerp(a.1, b.1, t), lerp(a.2, b.2, t))
        };
        let blur_n = round_to_odd(n_cont).clamp(n_lo, n_hi);
        out.push(DegradationParams {
            blur_n,
            darken_alpha: alpha.clamp(spec.alpha_range.0, spec.alpha_range.1),
            noise_sigma: sigma.clamp(spec.sigma_range.0, spec.sigma_range.1),
            seed: root.child(i as u64).seed(),
        });
    }
    Ok(out)
}
