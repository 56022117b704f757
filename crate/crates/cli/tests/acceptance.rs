//! Acceptance gate: one test per criterion, run serially so the timed
//! checks see honest wall clocks. Each test prints its own pass line.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use ndarray::{Array2, Array3, Array4};
use rand::Rng;

use sci_forge::bench::{run_bench, BenchConfig};
use sci_forge::corpus::bundled_corpus;
use sci_forge_core::blocks::{
    conv3d, feb_forward, irfft2, msdb_forward, rfft2, robust_cformer_forward, seed_weights,
    spectrum_energy, tsab_forward, Activation, BlockWeights, FeatureTensor, FebConfig,
};
use sci_forge_core::cacti::{adjoint, encode, generate_masks, MaskSet, Measurement};
use sci_forge_core::degrade::{apply_scenario, low_light, ScenarioId};
use sci_forge_core::gap_tv::{gap_projection, reconstruct, GapTvConfig};
use sci_forge_core::metrics::{psnr, score_cube, ssim};
use sci_forge_core::{chunk_video, FrameImage, SeededRng, VideoCube};
use sci_forge_testkit as testkit;

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn random_frame(rng: &mut SeededRng, h: usize, w: usize) -> Array2<f32> {
    Array2::from_shape_fn((h, w), |_| rng.gen_range(0.0f32..1.0))
}

fn random_cube(rng: &mut SeededRng, t: usize, h: usize, w: usize) -> VideoCube {
    VideoCube::new(Array3::from_shape_fn((t, h, w), |_| {
        rng.gen_range(0.0f32..1.0)
    }))
    .unwrap()
}

fn random_feature(rng: &mut SeededRng, c: usize, t: usize, h: usize, w: usize) -> FeatureTensor {
    FeatureTensor::new(Array4::from_shape_fn((c, t, h, w), |_| {
        rng.gen_range(-1.0f32..1.0)
    }))
    .unwrap()
}

#[test]
fn criterion_01_low_light_formula_and_identity() {
    let _g = gate();
    let start = Instant::now();
    let mut rng = SeededRng::new(101);

    let half = FrameImage::new(Array2::from_elem((16, 16), 0.5)).unwrap();
    let darkened = low_light(&half, 0.8, 0.0, &mut rng).unwrap();
    for &v in darkened.data.iter() {
        assert!((v - 0.30).abs() < 1e-7, "0.5 under alpha 0.8 gave {v}");
    }

    for _ in 0..1000 {
        let frame = FrameImage::new(random_frame(&mut rng, 24, 24)).unwrap();
        let out = low_light(&frame, 0.0, 0.0, &mut rng).unwrap();
        let max_diff = frame
            .data
            .iter()
            .zip(out.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert_eq!(max_diff, 0.0, "alpha=0 sigma=0 must be the identity");
    }

    assert!(start.elapsed() < Duration::from_secs(1), "ran {:?}", start.elapsed());
    println!("PASS criterion 1: low-light formula exact, neutral params are the identity");
}

#[test]
fn criterion_02_scenario_table_lookups() {
    let expected = [
        (ScenarioId::MotionBlurL1, 7, 0.0f32, 0.0f32),
        (ScenarioId::MotionBlurL2, 11, 0.0, 0.0),
        (ScenarioId::MotionBlurL3, 15, 0.0, 0.0),
        (ScenarioId::LowLightL1, 1, 0.6, 10.0),
        (ScenarioId::LowLightL2, 1, 0.8, 25.0),
        (ScenarioId::LowLightL3, 1, 0.9, 40.0),
        (ScenarioId::MixedL1, 7, 0.6, 10.0),
        (ScenarioId::MixedL2, 11, 0.8, 25.0),
        (ScenarioId::MixedL3, 15, 0.9, 40.0),
    ];
    for (scenario, n, alpha, sigma) in expected {
        let p = scenario.params(0);
        assert_eq!(p.blur_n, n, "{scenario} blur window");
        assert_eq!(p.darken_alpha, alpha, "{scenario} alpha");
        assert_eq!(p.noise_sigma, sigma, "{scenario} sigma");
    }
    println!("PASS criterion 2: all nine scenario lookups resolve verbatim");
}

#[test]
fn criterion_03_forward_sum_and_adjoint() {
    let mut rng = SeededRng::new(303);

    // All-ones masks collapse the encoder to a plain temporal sum; the
    // accumulation order is frame-major so the comparison is bit exact.
    for _ in 0..20 {
        let (t, h, w) = (8, 12, 13);
        let cube = random_cube(&mut rng, t, h, w);
        let masks = MaskSet::new(Array3::from_elem((t, h, w), 1.0)).unwrap();
        let meas = encode(&cube, &masks, 0.0, &mut rng.child(1)).unwrap();
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0.0f32;
                for k in 0..t {
                    acc += cube.data[[k, r, c]];
                }
                assert_eq!(
                    meas.image[[r, c]].to_bits(),
                    acc.to_bits(),
                    "temporal sum differs at ({r},{c})"
                );
            }
        }
    }

    // <Phi x, y> == <x, Phi^T y> across random shapes and masks.
    for i in 0..100u64 {
        let mut inst = SeededRng::new(4000 + i);
        let cr = inst.gen_range(2usize..10);
        let h = inst.gen_range(6usize..20);
        let w = inst.gen_range(6usize..20);
        let masks = generate_masks(cr, h, w, 0.5, &mut inst.child(0)).unwrap();
        let x = random_cube(&mut inst, cr, h, w);
        let y = Measurement {
            image: random_frame(&mut inst, h, w),
            cr,
            noise_sigma_meas: 0.0,
        };
        let fx = encode(&x, &masks, 0.0, &mut inst.child(1)).unwrap();
        let aty = adjoint(&y, &masks).unwrap();
        let lhs: f64 = fx
            .image
            .iter()
            .zip(y.image.iter())
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        let rhs: f64 = x
            .data
            .iter()
            .zip(aty.data.iter())
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12);
        assert!(rel < 1e-5, "adjoint identity broke on instance {i}: rel {rel}");
    }
    println!("PASS criterion 3: all-ones encode is the exact frame sum, adjoint identity holds");
}

#[test]
fn criterion_04_projection_consistency() {
    let _g = gate();
    let start = Instant::now();
    for i in 0..50u64 {
        let mut rng = SeededRng::new(7000 + i);
        let masks = generate_masks(8, 32, 32, 0.5, &mut rng.child(0)).unwrap();
        let truth = random_cube(&mut rng, 8, 32, 32);
        let y = encode(&truth, &masks, 0.0, &mut rng.child(1)).unwrap();
        let x0 = random_cube(&mut rng, 8, 32, 32);
        let v = gap_projection(&x0, &y, &masks).unwrap();
        let fv = encode(&v, &masks, 0.0, &mut rng.child(2)).unwrap();
        let worst = fv
            .image
            .iter()
            .zip(y.image.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(worst <= 1e-5, "projection residual {worst} on instance {i}");
    }
    assert!(start.elapsed() < Duration::from_secs(10), "ran {:?}", start.elapsed());
    println!("PASS criterion 4: projected iterates satisfy the measurement within 1e-5");
}

/// Piecewise-smooth drifting blobs over a gradient, values inside [0,1].
fn synthetic_scene(seed: u64, t: usize, h: usize, w: usize) -> VideoCube {
    let mut rng = SeededRng::new(seed);
    let base: f32 = rng.gen_range(0.25..0.45);
    let gx: f32 = rng.gen_range(-0.25..0.25);
    let gy: f32 = rng.gen_range(-0.25..0.25);
    let blobs: Vec<(f32, f32, f32, f32, f32, f32)> = (0..2)
        .map(|_| {
            (
                rng.gen_range(0.2..0.8) * w as f32,
                rng.gen_range(0.2..0.8) * h as f32,
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(2.5..5.0),
                rng.gen_range(0.25..0.5),
            )
        })
        .collect();
    VideoCube::new(Array3::from_shape_fn((t, h, w), |(k, r, c)| {
        let mut v = base + gx * (c as f32 / w as f32) + gy * (r as f32 / h as f32);
        for &(x0, y0, vx, vy, radius, amp) in &blobs {
            let dx = c as f32 - (x0 + vx * k as f32);
            let dy = r as f32 - (y0 + vy * k as f32);
            v += amp * (-(dx * dx + dy * dy) / (2.0 * radius * radius)).exp();
        }
        v.clamp(0.02, 0.98)
    }))
    .unwrap()
}

#[test]
fn criterion_05_solver_matches_reference() {
    let _g = gate();
    let start = Instant::now();
    let cfg = GapTvConfig {
        outer_iters: 40,
        tv_weight: 0.07,
        tv_inner_iters: 5,
        accelerate: false,
        stop_eps: 0.0,
    };
    for i in 0..10u64 {
        let truth = synthetic_scene(9000 + i, 8, 32, 32);
        let mut rng = SeededRng::new(9100 + i);
        let masks = generate_masks(8, 32, 32, 0.5, &mut rng).unwrap();
        let y = encode(&truth, &masks, 0.0, &mut rng.child(0)).unwrap();

        let (mine, _) = reconstruct(&y, &masks, &cfg).unwrap();

        let y64 = y.image.mapv(|v| v as f64);
        let m64 = masks.masks.mapv(|v| v as f64);
        let reference = testkit::gap_tv_reference(
            &y64,
            &m64,
            cfg.tv_weight as f64,
            cfg.outer_iters,
            cfg.tv_inner_iters,
        );

        let truth64 = truth.data.mapv(|v| v as f64);
        let psnr_mine = testkit::cube_psnr(&truth64, &mine.data.mapv(|v| v as f64));
        let psnr_ref = testkit::cube_psnr(&truth64, &reference);
        let gap = (psnr_mine - psnr_ref).abs();
        assert!(
            gap <= 0.5,
            "instance {i}: solver {psnr_mine:.3} dB vs reference {psnr_ref:.3} dB"
        );
    }
    assert!(start.elapsed() < Duration::from_secs(120), "ran {:?}", start.elapsed());
    println!("PASS criterion 5: solver tracks the scripted reference within 0.5 dB");
}

#[test]
fn criterion_06_severity_ordering() {
    let _g = gate();
    let clips = bundled_corpus();
    let solver = GapTvConfig {
        outer_iters: 30,
        ..GapTvConfig::default()
    };
    let mut mask_rng = SeededRng::new(21);
    let masks = generate_masks(8, 64, 64, 0.5, &mut mask_rng).unwrap();

    let mean_psnr = |scenario: ScenarioId| -> f64 {
        let mut scores = Vec::new();
        for (name, cube) in &clips {
            let rng = SeededRng::new(22).child_named(name).child_named(scenario.name());
            let (degraded, gt) = apply_scenario(cube, scenario, 1, &rng).unwrap();
            let (deg_chunks, _) = chunk_video(&degraded, 8).unwrap();
            let (gt_chunks, _) = chunk_video(&gt, 8).unwrap();
            for (deg, gt) in deg_chunks.iter().zip(gt_chunks.iter()).take(2) {
                let y = encode(deg, &masks, 0.0, &mut SeededRng::new(0)).unwrap();
                let (recon, _) = reconstruct(&y, &masks, &solver).unwrap();
                let report = score_cube(gt, &recon).unwrap();
                scores.push(report.psnr_db);
            }
        }
        scores.iter().sum::<f64>() / scores.len() as f64
    };

    let clean = mean_psnr(ScenarioId::Clean);
    let families = [
        ("MotionBlur", [ScenarioId::MotionBlurL1, ScenarioId::MotionBlurL2, ScenarioId::MotionBlurL3]),
        ("LowLight", [ScenarioId::LowLightL1, ScenarioId::LowLightL2, ScenarioId::LowLightL3]),
        ("Mixed", [ScenarioId::MixedL1, ScenarioId::MixedL2, ScenarioId::MixedL3]),
    ];
    for (family, levels) in families {
        let p: Vec<f64> = levels.iter().map(|&s| mean_psnr(s)).collect();
        println!(
            "  {family}: clean {clean:.2} > L1 {:.2} > L2 {:.2} > L3 {:.2}",
            p[0], p[1], p[2]
        );
        assert!(clean > p[0], "{family}: clean {clean:.2} vs L1 {:.2}", p[0]);
        assert!(p[0] > p[1], "{family}: L1 {:.2} vs L2 {:.2}", p[0], p[1]);
        assert!(p[1] > p[2], "{family}: L2 {:.2} vs L3 {:.2}", p[1], p[2]);
    }
    println!("PASS criterion 6: severity strictly orders mean PSNR in every family");
}

#[test]
fn criterion_07_fft_parseval_and_round_trip() {
    let _g = gate();
    let start = Instant::now();
    let mut rng = SeededRng::new(707);
    for h in 4..=32usize {
        for w in 4..=32usize {
            let frame = Array2::from_shape_fn((h, w), |_| rng.gen_range(-1.0f64..1.0));
            let spec = rfft2(&frame);
            let spatial: f64 = frame.iter().map(|v| v * v).sum();
            let spectral = spectrum_energy(&spec, w) / (h * w) as f64;
            let rel = (spatial - spectral).abs() / spatial.max(1e-12);
            assert!(rel < 1e-6, "parseval broke at {h}x{w}: rel {rel}");
            let back = irfft2(&spec, w).unwrap();
            let worst = frame
                .iter()
                .zip(back.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-5, "round trip broke at {h}x{w}: {worst}");
        }
    }
    assert!(start.elapsed() < Duration::from_secs(30), "ran {:?}", start.elapsed());
    println!("PASS criterion 7: Parseval and round-trip identities hold on the full size grid");
}

#[test]
fn criterion_08_block_identity_configs() {
    let mut rng = SeededRng::new(808);

    // Dirac kernels on every dilation path, fusion averaging the three.
    let c = 4;
    let x = random_feature(&mut rng, c, 3, 6, 6);
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
    let y = msdb_forward(&x, &w, Activation::Identity).unwrap();
    let worst = x
        .data
        .iter()
        .zip(y.data.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    assert!(worst < 1e-5, "msdb identity config drifted {worst}");

    // Identity spectral MLP passes the filtered half through unchanged.
    let mut w = BlockWeights::zeros(c).unwrap();
    for i in 0..c {
        w.feb_w1[[i, i]] = 1.0;
        w.feb_w2[[i, i]] = 1.0;
    }
    let cfg = FebConfig {
        normalize: false,
        ..FebConfig::default()
    };
    let y = feb_forward(&x, &w, &cfg, Activation::Identity).unwrap();
    let worst = x
        .data
        .iter()
        .zip(y.data.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    assert!(worst < 1e-5, "feb identity config drifted {worst}");

    // The full block on all-zero weights must reproduce its input.
    let w = BlockWeights::zeros(c).unwrap();
    let y = robust_cformer_forward(&x, &w, &FebConfig::default(), Activation::Gelu).unwrap();
    let worst = x
        .data
        .iter()
        .zip(y.data.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    assert!(worst < 1e-5, "zero-weight block drifted {worst}");

    // Production convolution against the nested-loop oracle.
    let x = random_feature(&mut rng, 4, 4, 8, 8);
    let w = seed_weights(812, 4, 1).unwrap();
    for (kernel, bias) in w.msdb_kernels.iter().zip(w.msdb_biases.iter()) {
        for d in [1usize, 2, 4] {
            let mine = conv3d(&x.data, kernel, bias, d).unwrap();
            let oracle = testkit::conv3d_oracle(
                &x.data.mapv(|v| v as f64),
                &kernel.mapv(|v| v as f64),
                &bias.iter().map(|&b| b as f64).collect::<Vec<_>>(),
                d,
            );
            let worst = mine
                .iter()
                .zip(oracle.iter())
                .map(|(&a, &b)| (a as f64 - b).abs())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-4, "conv3d dilation {d} drifted {worst}");
        }
    }
    println!("PASS criterion 8: identity configurations and convolution oracle agree");
}

#[test]
fn criterion_09_tsab_contracts() {
    // Rows of the attention matrix mix an all-ones value tensor into
    // all ones, so any drift in the softmax normalization shows up.
    let c = 4;
    let mut rng = SeededRng::new(909);
    let x = random_feature(&mut rng, c, 8, 3, 3);
    let mut w = BlockWeights::zeros(c).unwrap();
    let seeded = seed_weights(911, c, 1).unwrap();
    w.tsab_wq = seeded.tsab_wq.clone();
    w.tsab_wk = seeded.tsab_wk.clone();
    w.tsab_wv[[0, 0]] = 1.0;
    for o in 0..c {
        w.tsab_wout[[o, 0]] = 1.0;
    }
    let mut data = x.data.clone();
    data.slice_mut(ndarray::s![0, .., .., ..]).fill(1.0);
    let y = tsab_forward(&FeatureTensor::new(data).unwrap(), &w).unwrap();
    for &v in y.data.iter() {
        assert!((v - 1.0).abs() < 1e-6, "softmax row sum drifted: {v}");
    }

    // T=1: one score, softmax exactly 1, so the output is exactly the
    // value/output projection applied per location.
    let w = seed_weights(912, c, 1).unwrap();
    let x = random_feature(&mut rng, c, 1, 5, 4);
    let y = tsab_forward(&x, &w).unwrap();
    for hh in 0..5 {
        for ww in 0..4 {
            let token: Vec<f32> = (0..c).map(|cc| x.data[[cc, 0, hh, ww]]).collect();
            let mut v = vec![0.0f32; c];
            for (o, slot) in v.iter_mut().enumerate() {
                let mut acc = 0.0f32;
                for (i, &s) in token.iter().enumerate() {
                    acc += w.tsab_wv[[o, i]] * s;
                }
                *slot = acc;
            }
            for o in 0..c {
                let mut acc = 0.0f32;
                for (i, &s) in v.iter().enumerate() {
                    acc += w.tsab_wout[[o, i]] * s;
                }
                assert_eq!(
                    y.data[[o, 0, hh, ww]].to_bits(),
                    acc.to_bits(),
                    "single-frame case must be exact at ({hh},{ww})"
                );
            }
        }
    }

    for t in [1usize, 8, 16, 24] {
        let x = random_feature(&mut rng, c, t, 4, 4);
        let y = tsab_forward(&x, &w).unwrap();
        assert_eq!(y.data.dim(), (c, t, 4, 4), "shape broke for {t} frames");
    }
    println!("PASS criterion 9: attention rows normalize, T=1 exact, shapes survive all T");
}

#[test]
fn criterion_10_metric_oracles() {
    let reference = FrameImage::new(Array2::from_elem((32, 32), 0.4)).unwrap();
    let shifted = FrameImage::new(Array2::from_elem((32, 32), 0.5)).unwrap();
    let p = psnr(&reference, &shifted).unwrap();
    assert!((p - 20.0).abs() < 1e-6, "0.1 offset gave {p} dB");

    let mut rng = SeededRng::new(1010);
    let frame = FrameImage::new(random_frame(&mut rng, 24, 24)).unwrap();
    let s = ssim(&frame, &frame).unwrap();
    assert!((s - 1.0).abs() < 1e-9, "self-SSIM {s}");

    for i in 0..20 {
        let a = random_frame(&mut rng, 24, 24);
        let noise = random_frame(&mut rng, 24, 24);
        let b = Array2::from_shape_fn((24, 24), |(r, c)| {
            (a[[r, c]] * 0.8 + noise[[r, c]] * 0.2).clamp(0.0, 1.0)
        });
        let mine = ssim(
            &FrameImage::new(a.clone()).unwrap(),
            &FrameImage::new(b.clone()).unwrap(),
        )
        .unwrap();
        let oracle = testkit::ssim_oracle(&a.mapv(|v| v as f64), &b.mapv(|v| v as f64));
        assert!(
            (mine - oracle).abs() < 1e-6,
            "pair {i}: ssim {mine} vs oracle {oracle}"
        );
    }
    println!("PASS criterion 10: PSNR offset, self-SSIM, and the SSIM oracle all agree");
}

#[test]
fn criterion_11_bench_determinism() {
    let _g = gate();
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let cfg = BenchConfig {
            mask_seed: 3,
            data_seed: 4,
            solver: GapTvConfig {
                outer_iters: 3,
                tv_inner_iters: 3,
                ..GapTvConfig::default()
            },
            out_dir: tmp.path().join(name),
            ..BenchConfig::default()
        };
        let summary = run_bench(&cfg).unwrap();
        assert!(summary.failures.is_empty(), "bench run {name} had failures");
        assert_eq!(summary.rows.len(), 30, "full grid is 10 scenarios x 3 clips");
        runs.push(std::fs::read(&summary.csv_path).unwrap());
    }
    assert_eq!(runs[0], runs[1], "repeat runs must be byte-identical");
    println!("PASS criterion 11: two full bench runs emit byte-identical CSVs");
}
