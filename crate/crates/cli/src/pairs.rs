//! Training-pair generation: chunks of degraded measurements next to
//! their clean ground-truth cubes, parameters drawn from a continuous
//! schedule.

use std::path::{Path, PathBuf};

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use sci_forge_core::cacti::{encode, generate_masks};
use sci_forge_core::degrade::{degrade_chunk, sample_schedule, ScheduleSpec, GT_MARGIN};
use sci_forge_core::error::{Result, SciError};
use sci_forge_core::io::{load_frame_dir, Manifest};
use sci_forge_core::{SeededRng, VideoCube};

use crate::bench::MASK_DENSITY;
use crate::corpus::bundled_corpus;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PairsConfig {
    /// Frame directories; empty means the bundled corpus.
    pub input_dirs: Vec<PathBuf>,
    pub schedule: ScheduleSpec,
    pub mask_seed: u64,
    pub mask_density: f64,
    pub out_dir: PathBuf,
}

impl Default for PairsConfig {
    fn default() -> Self {
        PairsConfig {
            input_dirs: Vec::new(),
            schedule: ScheduleSpec::default(),
            mask_seed: 0,
            mask_density: MASK_DENSITY,
            out_dir: PathBuf::from("pairs-out"),
        }
    }
}

#[derive(Debug)]
pub struct PairsSummary {
    pub chunks_written: usize,
    pub index_path: PathBuf,
}

/// File stem for one chunk: `{video}-c{index:04}`. The measurement gets
/// `_meas.scib`, the ground truth `_gt.scib`, the manifest `.json`.
fn chunk_stem(video: &str, local_idx: usize) -> String {
    format!("{video}-c{local_idx:04}")
}

pub fn gen_training_pairs(cfg: &PairsConfig) -> Result<PairsSummary> {
    cfg.schedule.validate()?;
    let videos: Vec<(String, VideoCube)> = if cfg.input_dirs.is_empty() {
        bundled_corpus()
    } else {
        let mut v = Vec::new();
        for dir in &cfg.input_dirs {
            let name = dir
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string());
            v.push((name, load_frame_dir(dir, "*.pgm")?));
        }
        v
    };
    if videos.is_empty() {
        return Err(SciError::NoInput("no videos to pair".into()));
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| SciError::io(&cfg.out_dir, e))?;

    // Chunk layout first, so the schedule covers the whole run in one
    // continuous sequence across videos.
    let chunk_len = cfg.schedule.chunk_len;
    let mut layout: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for (vi, (name, cube)) in videos.iter().enumerate() {
        let t = cube.t_count();
        if t < 2 * GT_MARGIN + chunk_len {
            return Err(SciError::InvalidDims(format!(
                "{name}: {t} frames cannot fill a chunk of {chunk_len} after the blur margin"
            )));
        }
        let centers: Vec<usize> = (GT_MARGIN..=(t - 1 - GT_MARGIN)).collect();
        for (local, group) in centers.chunks_exact(chunk_len).enumerate() {
            layout.push((vi, local, group.to_vec()));
        }
    }
    let params = sample_schedule(&cfg.schedule, layout.len())?;

    // Output location stays out of the index so two trees generated from
    // the same seeds hash identically wherever they land.
    let mut index = Manifest::new(
        cfg.schedule.seed,
        serde_json::json!({
            "command": "gen-pairs",
            "videos": videos.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
            "schedule": cfg.schedule,
            "mask_seed": cfg.mask_seed,
            "mask_density": cfg.mask_density,
            "chunks": layout.len(),
        }),
    );

    for ((vi, local, indices), p) in layout.iter().zip(params.iter()) {
        let (name, cube) = &videos[*vi];
        let degraded = degrade_chunk(cube, indices, p)?;
        let mut gt = Array3::<f32>::zeros((indices.len(), cube.height(), cube.width()));
        for (i, &idx) in indices.iter().enumerate() {
            gt.index_axis_mut(ndarray::Axis(0), i)
                .assign(&cube.data.index_axis(ndarray::Axis(0), idx));
        }
        let gt = VideoCube::new(gt)?;

        let mut mask_rng = SeededRng::new(cfg.mask_seed);
        let masks = generate_masks(
            chunk_len,
            cube.height(),
            cube.width(),
            cfg.mask_density,
            &mut mask_rng,
        )?;
        let meas = encode(
            &degraded,
            &masks,
            0.0,
            &mut SeededRng::new(p.seed).child_named("measurement-noise"),
        )?;

        let stem = chunk_stem(name, *local);
        let meas_name = format!("{stem}_meas.scib");
        let gt_name = format!("{stem}_gt.scib");
        meas.save(&cfg.out_dir.join(&meas_name))?;
        sci_forge_core::io::save_cube(&gt, &cfg.out_dir.join(&gt_name))?;

        let mut chunk_manifest = Manifest::new(
            p.seed,
            serde_json::json!({
                "video": name,
                "frame_indices": indices,
                "blur_n": p.blur_n,
                "darken_alpha": p.darken_alpha,
                "noise_sigma": p.noise_sigma,
                "cr": chunk_len,
                "mask_seed": cfg.mask_seed,
                "mask_density": cfg.mask_density,
            }),
        );
        chunk_manifest.record_output(&cfg.out_dir, &meas_name)?;
        chunk_manifest.record_output(&cfg.out_dir, &gt_name)?;
        let manifest_name = format!("{stem}.json");
        chunk_manifest.save(&cfg.out_dir.join(&manifest_name))?;

        index.record_output(&cfg.out_dir, &meas_name)?;
        index.record_output(&cfg.out_dir, &gt_name)?;
        index.record_output(&cfg.out_dir, &manifest_name)?;
    }

    let index_path = cfg.out_dir.join("index.json");
    index.save(&index_path)?;
    Ok(PairsSummary {
        chunks_written: layout.len(),
        index_path,
    })
}

/// Stable content hash of every regular file in a directory, for
/// comparing two generated trees.
pub fn hash_tree(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    let read = std::fs::read_dir(dir).map_err(|e| SciError::io(dir, e))?;
    for entry in read {
        let entry = entry.map_err(|e| SciError::io(dir, e))?;
        let path = entry.path();
        if path.is_file() {
            let name = entry.file_name().to_string_lossy().into_owned();
            entries.push((name, sci_forge_core::io::sha256_file(&path)?));
        }
    }
    entries.sort();
    Ok(entries)
}
