//! Benchmark orchestration: degrade, encode, reconstruct and score every
//! requested (video, scenario) pair, then emit the CSV, markdown and
//! manifest artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sci_forge_core::cacti::{encode, generate_masks, MaskSet};
use sci_forge_core::chunk_video;
use sci_forge_core::degrade::{apply_scenario, ScenarioId};
use sci_forge_core::error::{Result, SciError};
use sci_forge_core::gap_tv::{reconstruct, GapTvConfig};
use sci_forge_core::io::{load_frame_dir, Manifest};
use sci_forge_core::metrics::score_cube;
use sci_forge_core::{SeededRng, VideoCube};

use crate::corpus::bundled_corpus;

pub const MASK_DENSITY: f64 = 0.5;
pub const TRAINING_CRS: [usize; 3] = [8, 16, 24];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Frame directories to benchmark; empty means the bundled corpus.
    pub input_dirs: Vec<PathBuf>,
    pub scenarios: Vec<ScenarioId>,
    pub cr: usize,
    pub mask_seed: u64,
    pub data_seed: u64,
    pub solver: GapTvConfig,
    pub out_dir: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            input_dirs: Vec::new(),
            scenarios: ScenarioId::ALL.to_vec(),
            cr: 8,
            mask_seed: 0,
            data_seed: 0,
            solver: GapTvConfig::default(),
            out_dir: PathBuf::from("bench-out"),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(SciError::InvalidParam("no scenarios requested".into()));
        }
        if self.cr == 0 {
            return Err(SciError::InvalidParam("cr must be >= 1".into()));
        }
        if !TRAINING_CRS.contains(&self.cr) {
            eprintln!(
                "warning: cr={} is outside the usual set {:?}",
                self.cr, TRAINING_CRS
            );
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: ScenarioId,
    pub video: String,
    pub psnr: f64,
    pub ssim: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchFailure {
    pub scenario: ScenarioId,
    pub video: String,
    pub error: String,
}

#[derive(Debug)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    pub failures: Vec<BenchFailure>,
    pub csv_path: PathBuf,
    pub md_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Thread cap from SCI_FORGE_THREADS; unset, empty or 0 means rayon's
/// default.
pub fn thread_cap() -> Option<usize> {
    let raw = std::env::var("SCI_FORGE_THREADS").ok()?;
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return None;
    }
    match trimmed.parse::<usize>() {
        Ok(0) => None,
        Ok(n) => Some(n),
        Err(_) => {
            eprintln!("warning: ignoring unparsable SCI_FORGE_THREADS={raw:?}");
            None
        }
    }
}

pub fn run_with_thread_cap<T: Send>(job: impl FnOnce() -> T + Send) -> Result<T> {
    match thread_cap() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SciError::InvalidParam(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// The videos a config addresses: bundled corpus when no directories are
/// given, otherwise one video per directory named by its basename.
pub fn load_videos(cfg: &BenchConfig) -> Result<Vec<(String, VideoCube)>> {
    if cfg.input_dirs.is_empty() {
        return Ok(bundled_corpus());
    }
    let mut videos = Vec::with_capacity(cfg.input_dirs.len());
    for dir in &cfg.input_dirs {
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        let cube = load_frame_dir(dir, "*.pgm")?;
        videos.push((name, cube));
    }
    Ok(videos)
}

/// One pair of the benchmark grid, pure given the config.
fn run_pair(
    cfg: &BenchConfig,
    video: &str,
    cube: &VideoCube,
    scenario: ScenarioId,
    masks: &MaskSet,
) -> Result<BenchRow> {
    let start = Instant::now();
    let rng = SeededRng::new(cfg.data_seed)
        .child_named(video)
        .child_named(scenario.name());
    let (degraded, ground_truth) = apply_scenario(cube, scenario, 1, &rng)?;
    let (deg_chunks, _) = chunk_video(&degraded, cfg.cr)?;
    let (gt_chunks, _) = chunk_video(&ground_truth, cfg.cr)?;
    if deg_chunks.is_empty() {
        return Err(SciError::InvalidDims(format!(
            "{video}: {} usable frames cannot fill a chunk of {}",
            degraded.t_count(),
            cfg.cr
        )));
    }

    let mut psnr_sum = 0.0f64;
    let mut psnr_count = 0usize;
    let mut ssim_sum = 0.0f64;
    let mut ssim_count = 0usize;
    let noise_rng = rng.child_named("measurement-noise");
    for (i, (deg, gt)) in deg_chunks.iter().zip(gt_chunks.iter()).enumerate() {
        let meas = encode(deg, masks, 0.0, &mut noise_rng.child(i as u64))?;
        let (recon, _) = reconstruct(&meas, masks, &cfg.solver)?;
        let report = score_cube(gt, &recon)?;
        for frame in &report.per_frame {
            if frame.psnr.is_finite() {
                psnr_sum += frame.psnr;
                psnr_count += 1;
            }
            ssim_sum += frame.ssim;
            ssim_count += 1;
        }
    }
    let psnr = if psnr_count > 0 {
        psnr_sum / psnr_count as f64
    } else {
        f64::INFINITY
    };
    let ssim = ssim_sum / ssim_count.max(1) as f64;
    Ok(BenchRow {
        scenario,
        video: video.to_string(),
        psnr,
        ssim,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchSummary> {
    cfg.validate()?;
    let videos = load_videos(cfg)?;
    if videos.is_empty() {
        return Err(SciError::NoInput("no videos to benchmark".into()));
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| SciError::io(&cfg.out_dir, e))?;

    // One mask set per resolution, derived only from the mask seed so
    // every scenario of a video is encoded identically.
    let mut mask_cache: Vec<((usize, usize), MaskSet)> = Vec::new();
    for (_, cube) in &videos {
        let key = (cube.height(), cube.width());
        if !mask_cache.iter().any(|(k, _)| *k == key) {
            let mut rng = SeededRng::new(cfg.mask_seed);
            let masks = generate_masks(cfg.cr, key.0, key.1, MASK_DENSITY, &mut rng)?;
            mask_cache.push((key, masks));
        }
    }
    let masks_for = |cube: &VideoCube| -> &MaskSet {
        let key = (cube.height(), cube.width());
        &mask_cache.iter().find(|(k, _)| *k == key).expect("cached").1
    };

    let jobs: Vec<(usize, ScenarioId)> = videos
        .iter()
        .enumerate()
        .flat_map(|(vi, _)| cfg.scenarios.iter().map(move |&s| (vi, s)))
        .collect();

    let outcomes: Vec<std::result::Result<BenchRow, BenchFailure>> = run_with_thread_cap(|| {
        jobs.par_iter()
            .map(|&(vi, scenario)| {
                let (name, cube) = &videos[vi];
                run_pair(cfg, name, cube, scenario, masks_for(cube)).map_err(|e| BenchFailure {
                    scenario,
                    video: name.clone(),
                    error: e.to_string(),
                })
            })
            .collect()
    })?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(failure) => {
                eprintln!(
                    "bench pair failed: {} / {}: {}",
                    failure.video, failure.scenario, failure.error
                );
                failures.push(failure);
            }
        }
    }

    let csv_path = cfg.out_dir.join("results.csv");
    let md_path = cfg.out_dir.join("results.md");
    let failures_path = cfg.out_dir.join("failures.json");
    std::fs::write(&csv_path, render_csv(&rows)).map_err(|e| SciError::io(&csv_path, e))?;
    let video_names: Vec<&str> = videos.iter().map(|(n, _)| n.as_str()).collect();
    std::fs::write(
        &md_path,
        render_markdown(&cfg.scenarios, &video_names, &rows, &failures),
    )
    .map_err(|e| SciError::io(&md_path, e))?;
    let failures_json = serde_json::to_string_pretty(&failures)? + "\n";
    std::fs::write(&failures_path, failures_json).map_err(|e| SciError::io(&failures_path, e))?;

    let mut manifest = Manifest::new(
        cfg.data_seed,
        serde_json::json!({
            "command": "bench",
            "config": cfg,
            "rows": rows,
            "failed_pairs": failures.len(),
        }),
    );
    manifest.record_output(&cfg.out_dir, "results.csv")?;
    manifest.record_output(&cfg.out_dir, "results.md")?;
    manifest.record_output(&cfg.out_dir, "failures.json")?;
    let manifest_path = cfg.out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;

    Ok(BenchSummary {
        rows,
        failures,
        csv_path,
        md_path,
        manifest_path,
    })
}

/// Canonical machine-readable output. Runtime stays out so reruns of the
/// same config are byte-identical.
pub fn render_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("scenario,video,psnr,ssim\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.4}\n",
            row.scenario.name(),
            row.video,
            row.psnr,
            row.ssim
        ));
    }
    out
}

/// Table-style markdown view: one row per video, one column per
/// scenario, cells "psnr / ssim".
pub fn render_markdown(
    scenarios: &[ScenarioId],
    videos: &[&str],
    rows: &[BenchRow],
    failures: &[BenchFailure],
) -> String {
    let mut out = String::from("| video |");
    for s in scenarios {
        out.push_str(&format!(" {} |", s.name()));
    }
    out.push('\n');
    out.push_str("| --- |");
    for _ in scenarios {
        out.push_str(" --- |");
    }
    out.push('\n');
    for video in videos {
        out.push_str(&format!("| {video} |"));
        for s in scenarios {
            let cell = rows
                .iter()
                .find(|r| r.video == *video && r.scenario == *s)
                .map(|r| format!("{:.2} / {:.3}", r.psnr, r.ssim))
                .unwrap_or_else(|| {
                    if failures.iter().any(|f| f.video == *video && f.scenario == *s) {
                        "failed".to_string()
                    } else {
                        "-".to_string()
                    }
                });
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out
}

/// CSV rows as (scenario, video, psnr, ssim), validating the header.
pub fn parse_csv(text: &str, origin: &Path) -> Result<Vec<(String, String, f64, f64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("scenario,video,psnr,ssim") => {}
        other => {
            return Err(SciError::format(
                origin,
                format!("bad CSV header {other:?}"),
            ));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(SciError::format(
                origin,
                format!("line {}: expected 4 fields, got {}", i + 2, fields.len()),
            ));
        }
        let parse = |s: &str| -> Result<f64> {
            if s == "inf" {
                return Ok(f64::INFINITY);
            }
            s.parse::<f64>()
                .map_err(|_| SciError::format(origin, format!("line {}: bad number {s:?}", i + 2)))
        };
        rows.push((
            fields[0].to_string(),
            fields[1].to_string(),
            parse(fields[2])?,
            parse(fields[3])?,
        ));
    }
    Ok(rows)
}
