use std::f64::consts::PI;

use tissuemix::analysis::{density_grid, kde_fit_1d, kde_mode, summarize, GridSpec};
use tissuemix::linalg::{Mat, Vector};
use tissuemix::model::ModelParams;
use tissuemix::samplers::RngStream;

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    (0..n).map(|_| rng.normal()).collect()
}

#[test]
fn kde_of_standard_normal_draws_tracks_the_density() {
    let x = normals(11, 100_000);
    let m = kde_fit_1d(&x, None).unwrap();
    let worst = (0..=800)
        .map(|j| -4.0 + 8.0 * j as f64 / 800.0)
        .map(|t| (m.density(&[t]) - (-0.5 * t * t).exp() / (2.0 * PI).sqrt()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.01, "{worst}");
}

#[test]
fn kde_integrates_to_one_over_a_padded_grid() {
    for (seed, n) in [(12, 500), (13, 5000)] {
        let x: Vec<f64> = normals(seed, n).iter().map(|v| v.powi(3)).collect();
        let m = kde_fit_1d(&x, None).unwrap();
        let g = density_grid(&m, GridSpec { points: 4096, pad: 5.0 }).unwrap();
        assert!(g.density.iter().all(|&d| d >= 0.0));
        assert!((g.integral() - 1.0).abs() < 0.02, "{}", g.integral());
    }
}

#[test]
fn gaussian_mode_within_two_cells_of_the_mean() {
    // mirrored about 2 so the KDE is exactly symmetric around the sample mean
    let x: Vec<f64> = normals(14, 10_000)
        .iter()
        .flat_map(|v| [2.0 + 0.3 * v, 2.0 - 0.3 * v])
        .collect();
    let m = kde_fit_1d(&x, None).unwrap();
    let spec = GridSpec::default();
    let g = density_grid(&m, spec).unwrap();
    let cell = g.x[1] - g.x[0];
    let mode = kde_mode(&m, spec).unwrap();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    assert!((mode.location[0] - mean).abs() < 2.0 * cell, "{} vs {mean}", mode.location[0]);
}

#[test]
fn constant_k_draws_give_the_exact_full_weights() {
    let p = ModelParams {
        K: Vector::new(vec![0.1, 0.3]).unwrap(),
        Lambda: Mat::identity(2),
        rho: 100.0,
    };
    let mut rng = RngStream::new(15, 0);
    let draws: Vec<ModelParams> = (0..200)
        .map(|_| ModelParams {
            rho: 100.0 + rng.normal(),
            ..p.clone()
        })
        .collect();
    let s = summarize(&draws, GridSpec::default()).unwrap();
    let want = [0.1, 0.3, 0.6];
    for (a, b) in s.full_weights_mode.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{:?}", s.full_weights_mode);
    }
}
