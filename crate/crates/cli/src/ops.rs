//! One-shot pipeline commands: degrade, encode, reconstruct, metrics.
//! Every generated data artifact gets a manifest written next to it.

use std::path::{Path, PathBuf};

use sci_forge_core::cacti::{encode, generate_masks, MaskSet, Measurement};
use sci_forge_core::chunk_video;
use sci_forge_core::degrade::{apply_scenario, ScenarioId};
use sci_forge_core::error::{Result, SciError};
use sci_forge_core::gap_tv::{reconstruct, GapTvConfig};
use sci_forge_core::io::{load_cube, load_frame_dir, save_cube, Manifest};
use sci_forge_core::metrics::score_cube;
use sci_forge_core::{SeededRng, VideoCube};

/// A frame directory or a single cube container, by path kind.
pub fn load_input(path: &Path, pattern: &str) -> Result<VideoCube> {
    if path.is_dir() {
        load_frame_dir(path, pattern)
    } else {
        load_cube(path)
    }
}

fn manifest_rel(base: &Path, target: &Path) -> String {
    target
        .strip_prefix(base)
        .unwrap_or(target)
        .to_string_lossy()
        .into_owned()
}

fn manifest_dir(primary_out: &Path) -> PathBuf {
    primary_out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn manifest_path_for(primary_out: &Path) -> PathBuf {
    let name = primary_out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".to_string());
    manifest_dir(primary_out).join(format!("{name}.manifest.json"))
}

fn write_manifest(
    primary_out: &Path,
    seed: u64,
    params: serde_json::Value,
    outputs: &[&Path],
) -> Result<PathBuf> {
    let base = manifest_dir(primary_out);
    let mut manifest = Manifest::new(seed, params);
    for out in outputs {
        manifest.record_output(&base, &manifest_rel(&base, out))?;
    }
    let path = manifest_path_for(primary_out);
    manifest.save(&path)?;
    Ok(path)
}

pub struct DegradeOpts {
    pub input: PathBuf,
    pub pattern: String,
    pub scenario: ScenarioId,
    pub gt_stride: usize,
    pub seed: u64,
    pub out_degraded: PathBuf,
    pub out_gt: PathBuf,
}

pub fn run_degrade(o: &DegradeOpts) -> Result<()> {
    let cube = load_input(&o.input, &o.pattern)?;
    let rng = SeededRng::new(o.seed);
    let (degraded, ground_truth) = apply_scenario(&cube, o.scenario, o.gt_stride, &rng)?;
    save_cube(&degraded, &o.out_degraded)?;
    save_cube(&ground_truth, &o.out_gt)?;
    let params = o.scenario.params(o.seed);
    write_manifest(
        &o.out_degraded,
        o.seed,
        serde_json::json!({
            "command": "degrade",
            "input": o.input.display().to_string(),
            "scenario": o.scenario,
            "gt_stride": o.gt_stride,
            "blur_n": params.blur_n,
            "darken_alpha": params.darken_alpha,
            "noise_sigma": params.noise_sigma,
        }),
        &[&o.out_degraded, &o.out_gt],
    )?;
    println!(
        "degraded {} frames under {} -> {}",
        degraded.t_count(),
        o.scenario,
        o.out_degraded.display()
    );
    Ok(())
}

pub struct EncodeOpts {
    pub input: PathBuf,
    pub pattern: String,
    pub cr: usize,
    pub chunk: usize,
    pub mask_seed: u64,
    pub mask_density: f64,
    pub meas_noise: f32,
    pub noise_seed: u64,
    pub out_meas: PathBuf,
    pub out_masks: Option<PathBuf>,
}

pub fn run_encode(o: &EncodeOpts) -> Result<()> {
    if !crate::bench::TRAINING_CRS.contains(&o.cr) {
        eprintln!(
            "warning: cr {} is outside the usual set {:?}",
            o.cr,
            crate::bench::TRAINING_CRS
        );
    }
    let cube = load_input(&o.input, &o.pattern)?;
    let (chunks, dropped) = chunk_video(&cube, o.cr)?;
    if chunks.is_empty() {
        return Err(SciError::InvalidDims(format!(
            "{} frames cannot fill a chunk of {}",
            cube.t_count(),
            o.cr
        )));
    }
    let chunk = chunks.get(o.chunk).ok_or_else(|| {
        SciError::InvalidParam(format!(
            "chunk {} out of range, input has {} full chunks ({} frames dropped)",
            o.chunk,
            chunks.len(),
            dropped
        ))
    })?;
    let mut mask_rng = SeededRng::new(o.mask_seed);
    let masks = generate_masks(
        o.cr,
        cube.height(),
        cube.width(),
        o.mask_density,
        &mut mask_rng,
    )?;
    let mut noise_rng = SeededRng::new(o.noise_seed);
    let meas = encode(chunk, &masks, o.meas_noise, &mut noise_rng)?;
    meas.save(&o.out_meas)?;
    let mut outputs: Vec<&Path> = vec![&o.out_meas];
    if let Some(mask_path) = &o.out_masks {
        masks.save(mask_path)?;
        outputs.push(mask_path);
    }
    write_manifest(
        &o.out_meas,
        o.mask_seed,
        serde_json::json!({
            "command": "encode",
            "input": o.input.display().to_string(),
            "cr": o.cr,
            "chunk": o.chunk,
            "mask_seed": o.mask_seed,
            "mask_density": o.mask_density,
            "meas_noise": o.meas_noise,
            "noise_seed": o.noise_seed,
        }),
        &outputs,
    )?;
    println!(
        "encoded chunk {} of {} -> {}",
        o.chunk,
        chunks.len(),
        o.out_meas.display()
    );
    Ok(())
}

pub struct ReconstructOpts {
    pub meas: PathBuf,
    pub masks: PathBuf,
    pub solver: GapTvConfig,
    pub out: PathBuf,
    pub report: Option<PathBuf>,
}

pub fn run_reconstruct(o: &ReconstructOpts) -> Result<()> {
    let masks = MaskSet::load(&o.masks)?;
    let meas = Measurement::load(&o.meas, masks.cr)?;
    let (cube, report) = reconstruct(&meas, &masks, &o.solver)?;
    save_cube(&cube, &o.out)?;
    let report_path = o.report.clone().unwrap_or_else(|| {
        let name = o
            .out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "recon".to_string());
        manifest_dir(&o.out).join(format!("{name}.report.json"))
    });
    let report_json = serde_json::to_string_pretty(&report)? + "\n";
    std::fs::write(&report_path, report_json).map_err(|e| SciError::io(&report_path, e))?;
    write_manifest(
        &o.out,
        0,
        serde_json::json!({
            "command": "reconstruct",
            "meas": o.meas.display().to_string(),
            "masks": o.masks.display().to_string(),
            "solver": o.solver,
        }),
        &[&o.out, &report_path],
    )?;
    println!(
        "reconstructed {} frames in {} iterations -> {}",
        cube.t_count(),
        report.iterations_run,
        o.out.display()
    );
    Ok(())
}

pub struct MetricsOpts {
    pub reference: PathBuf,
    pub test: PathBuf,
    pub out: PathBuf,
}

pub fn run_metrics(o: &MetricsOpts) -> Result<()> {
    let reference = load_cube(&o.reference)?;
    let test = load_cube(&o.test)?;
    let report = score_cube(&reference, &test)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    std::fs::write(&o.out, json).map_err(|e| SciError::io(&o.out, e))?;
    let psnr = if report.psnr_db.is_finite() {
        format!("{:.2} dB", report.psnr_db)
    } else {
        "inf".to_string()
    };
    println!("psnr {} ssim {:.4} -> {}", psnr, report.ssim, o.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use sci_forge_core::io::verify_manifest;

    // Smooth and slow-moving, so a short solver run still tracks it.
    fn drifting_cube(t: usize, h: usize, w: usize) -> VideoCube {
        VideoCube::new(Array3::from_shape_fn((t, h, w), |(k, r, c)| {
            let phase = 0.2 * k as f32;
            0.5 + 0.35 * (r as f32 * 0.5 + phase).sin() * (c as f32 * 0.4 - phase).cos()
        }))
        .unwrap()
    }

    #[test]
    fn degrade_encode_reconstruct_metrics_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let input = dir.join("input.scib");
        save_cube(&drifting_cube(24, 16, 16), &input).unwrap();

        run_degrade(&DegradeOpts {
            input: input.clone(),
            pattern: "*.pgm".into(),
            scenario: ScenarioId::Clean,
            gt_stride: 1,
            seed: 3,
            out_degraded: dir.join("deg.scib"),
            out_gt: dir.join("gt.scib"),
        })
        .unwrap();
        verify_manifest(&dir.join("deg.scib.manifest.json")).unwrap();

        run_encode(&EncodeOpts {
            input: dir.join("deg.scib"),
            pattern: "*.pgm".into(),
            cr: 8,
            chunk: 0,
            mask_seed: 5,
            mask_density: 0.5,
            meas_noise: 0.0,
            noise_seed: 0,
            out_meas: dir.join("meas.scib"),
            out_masks: Some(dir.join("masks.scib")),
        })
        .unwrap();
        verify_manifest(&dir.join("meas.scib.manifest.json")).unwrap();

        run_reconstruct(&ReconstructOpts {
            meas: dir.join("meas.scib"),
            masks: dir.join("masks.scib"),
            solver: GapTvConfig {
                outer_iters: 30,
                ..GapTvConfig::default()
            },
            out: dir.join("recon.scib"),
            report: None,
        })
        .unwrap();
        verify_manifest(&dir.join("recon.scib.manifest.json")).unwrap();
        assert!(dir.join("recon.scib.report.json").exists());

        // Ground truth chunk 0 against the reconstruction.
        let gt = load_cube(&dir.join("gt.scib")).unwrap();
        let (gt_chunks, _) = chunk_video(&gt, 8).unwrap();
        save_cube(&gt_chunks[0], &dir.join("gt0.scib")).unwrap();
        run_metrics(&MetricsOpts {
            reference: dir.join("gt0.scib"),
            test: dir.join("recon.scib"),
            out: dir.join("report.json"),
        })
        .unwrap();
        let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
        let report: sci_forge_core::metrics::MetricReport = serde_json::from_str(&text).unwrap();
        assert!(report.psnr_db > 10.0, "pipeline psnr {}", report.psnr_db);
    }

    #[test]
    fn encode_rejects_out_of_range_chunk() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("input.scib");
        save_cube(&drifting_cube(8, 8, 8), &input).unwrap();
        let err = run_encode(&EncodeOpts {
            input,
            pattern: "*.pgm".into(),
            cr: 8,
            chunk: 1,
            mask_seed: 0,
            mask_density: 0.5,
            meas_noise: 0.0,
            noise_seed: 0,
            out_meas: tmp.path().join("meas.scib"),
            out_masks: None,
        })
        .unwrap_err();
        assert!(matches!(err, SciError::InvalidParam(_)));
    }
}
