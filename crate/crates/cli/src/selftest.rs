//! `blocks selftest`: runs the numerical invariants of the restoration
//! block against independent oracles and prints a pass/fail table.

use std::time::Instant;

use ndarray::{Array2, Array4};
use sci_forge_core::blocks::{
    conv3d, feb_forward, half_width, irfft2, msdb_forward, rfft2, robust_cformer_forward,
    seed_weights, spectrum_energy, tsab_forward, Activation, BlockWeights, FeatureTensor,
    FebConfig,
};
use sci_forge_core::SeededRng;
use rand::Rng;

struct CheckResult {
    name: &'static str,
    outcome: Result<(), String>,
    millis: f64,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(), String>) -> CheckResult {
    let start = Instant::now();
    let outcome = f();
    CheckResult {
        name,
        outcome,
        millis: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn random_feature(seed: u64, c: usize, t: usize, h: usize, w: usize) -> FeatureTensor {
    let mut rng = SeededRng::new(seed);
    FeatureTensor::new(Array4::from_shape_fn((c, t, h, w), |_| {
        rng.gen_range(-1.0f32..1.0)
    }))
    .expect("positive dims")
}

fn max_err(a: &Array4<f32>, b: &Array4<f32>) -> f32 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f32::max)
}

fn bound(err: f64, limit: f64) -> Result<(), String> {
    if err <= limit {
        Ok(())
    } else {
        Err(format!("error {err:.3e} exceeds {limit:.0e}"))
    }
}

fn conv_dirac_identity() -> Result<(), String> {
    let x = random_feature(1, 2, 3, 8, 8);
    for dilation in [1usize, 2, 4] {
        let mut kernel = ndarray::Array5::<f32>::zeros((2, 2, 3, 3, 3));
        for ch in 0..2 {
            kernel[[ch, ch, 1, 1, 1]] = 1.0;
        }
        let y = conv3d(&x.data, &kernel, &[0.0, 0.0], dilation).map_err(|e| e.to_string())?;
        bound(max_err(&x.data, &y) as f64, 1e-6)?;
    }
    Ok(())
}

fn conv_matches_oracle() -> Result<(), String> {
    let x = random_feature(2, 4, 4, 8, 8);
    let w = seed_weights(11, 4, 1).map_err(|e| e.to_string())?;
    let mine = conv3d(&x.data, &w.scb_kernels[0], &w.scb_biases[0], 2)
        .map_err(|e| e.to_string())?;
    let bias: Vec<f64> = w.scb_biases[0].iter().map(|&b| b as f64).collect();
    let oracle = sci_forge_testkit::conv3d_oracle(
        &x.data.mapv(|v| v as f64),
        &w.scb_kernels[0].mapv(|v| v as f64),
        &bias,
        2,
    );
    let err = mine
        .iter()
        .zip(oracle.iter())
        .map(|(a, &b)| (*a as f64 - b).abs())
        .fold(0.0, f64::max);
    bound(err, 1e-4)
}

fn fft_round_trip() -> Result<(), String> {
    let mut rng = SeededRng::new(3);
    let plane = Array2::from_shape_fn((16, 17), |_| rng.gen_range(-1.0f64..1.0));
    let spec = rfft2(&plane);
    let back = irfft2(&spec, 17).map_err(|e| e.to_string())?;
    let err = plane
        .iter()
        .zip(back.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    bound(err, 1e-10)
}

fn fft_parseval() -> Result<(), String> {
    let mut rng = SeededRng::new(4);
    let plane = Array2::from_shape_fn((12, 13), |_| rng.gen_range(-1.0f64..1.0));
    let spatial: f64 = plane.iter().map(|v| v * v).sum();
    let spec = rfft2(&plane);
    assert_eq!(spec.dim().1, half_width(13));
    let spectral = spectrum_energy(&spec, 13) / (12.0 * 13.0);
    bound((spatial - spectral).abs() / spatial, 1e-6)
}

fn msdb_dirac_identity() -> Result<(), String> {
    let c = 4;
    let x = random_feature(5, c, 3, 6, 6);
    let mut w = BlockWeights::zeros(c).map_err(|e| e.to_string())?;
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
    let y = msdb_forward(&x, &w, Activation::Identity).map_err(|e| e.to_string())?;
    bound(max_err(&x.data, &y.data) as f64, 1e-5)
}

fn feb_identity_mlp() -> Result<(), String> {
    let c = 4;
    let x = random_feature(6, c, 2, 6, 7);
    let mut w = BlockWeights::zeros(c).map_err(|e| e.to_string())?;
    for i in 0..c {
        w.feb_w1[[i, i]] = 1.0;
        w.feb_w2[[i, i]] = 1.0;
    }
    let cfg = FebConfig {
        normalize: false,
        ..FebConfig::default()
    };
    let y = feb_forward(&x, &w, &cfg, Activation::Identity).map_err(|e| e.to_string())?;
    bound(max_err(&x.data, &y.data) as f64, 1e-5)
}

fn tsab_single_frame_exact() -> Result<(), String> {
    let c = 4;
    let x = random_feature(7, c, 1, 5, 5);
    let w = seed_weights(13, c, 1).map_err(|e| e.to_string())?;
    let y = tsab_forward(&x, &w).map_err(|e| e.to_string())?;
    let mut worst = 0.0f32;
    for hh in 0..5 {
        for ww in 0..5 {
            for o in 0..c {
                let mut v = 0.0f32;
                for m in 0..c {
                    let mut vm = 0.0f32;
                    for i in 0..c {
                        vm += w.tsab_wv[[m, i]] * x.data[[i, 0, hh, ww]];
                    }
                    v += w.tsab_wout[[o, m]] * vm;
                }
                worst = worst.max((y.data[[o, 0, hh, ww]] - v).abs());
            }
        }
    }
    bound(worst as f64, 1e-6)
}

fn tsab_shapes_hold() -> Result<(), String> {
    let w = seed_weights(17, 4, 1).map_err(|e| e.to_string())?;
    for t in [1usize, 8, 16, 24] {
        let x = random_feature(t as u64 + 20, 4, t, 4, 4);
        let y = tsab_forward(&x, &w).map_err(|e| e.to_string())?;
        if y.data.dim() != (4, t, 4, 4) {
            return Err(format!("shape broke at T={t}: {:?}", y.data.dim()));
        }
    }
    Ok(())
}

fn block_zero_weight_identity() -> Result<(), String> {
    let x = random_feature(8, 4, 3, 6, 6);
    let w = BlockWeights::zeros(4).map_err(|e| e.to_string())?;
    let y = robust_cformer_forward(&x, &w, &FebConfig::default(), Activation::Gelu)
        .map_err(|e| e.to_string())?;
    bound(max_err(&x.data, &y.data) as f64, 1e-5)
}

fn weights_deterministic() -> Result<(), String> {
    let a = seed_weights(19, 4, 1).map_err(|e| e.to_string())?;
    let b = seed_weights(19, 4, 1).map_err(|e| e.to_string())?;
    if a.tsab_wq == b.tsab_wq && a.msdb_kernels[0] == b.msdb_kernels[0] && a.ffn_w1 == b.ffn_w1 {
        Ok(())
    } else {
        Err("same seed produced different weights".to_string())
    }
}

/// Run every check, print the table, return true when all passed.
pub fn run_selftest() -> bool {
    let results = vec![
        check("conv3d dirac identity (d=1,2,4)", conv_dirac_identity),
        check("conv3d matches nested-loop oracle", conv_matches_oracle),
        check("fft2 round trip", fft_round_trip),
        check("fft2 parseval energy", fft_parseval),
        check("msdb dirac/averaging identity", msdb_dirac_identity),
        check("feb identity-mlp round trip", feb_identity_mlp),
        check("tsab single-frame projection", tsab_single_frame_exact),
        check("tsab shapes for T in {1,8,16,24}", tsab_shapes_hold),
        check("block zero-weight identity", block_zero_weight_identity),
        check("seeded weights deterministic", weights_deterministic),
    ];

    println!("blocks selftest");
    let mut all_ok = true;
    for r in &results {
        let dots = ".".repeat(42usize.saturating_sub(r.name.len()));
        match &r.outcome {
            Ok(()) => println!("  {} {} pass ({:.1} ms)", r.name, dots, r.millis),
            Err(why) => {
                all_ok = false;
                println!("  {} {} FAIL: {}", r.name, dots, why);
            }
        }
    }
    println!(
        "{} of {} checks passed",
        results.iter().filter(|r| r.outcome.is_ok()).count(),
        results.len()
    );
    all_ok
}
