//! Fixtures shared by the benchmarks.

use tissuemix::linalg::{Mat, MatBatch};
use tissuemix::model::{default_hyperparams, random_profiles, synth_generate, ProfileKind};
use tissuemix::samplers::RngStream;
use tissuemix::{Dataset, HyperParams, ModelParams};

/// Gene counts swept by the engine benchmarks.
pub const SIZES: [usize; 3] = [1000, 4000, 8000];

/// Synthetic three-network data in the reference regime.
pub fn synthetic(genes: usize, seed: u64) -> (Dataset, HyperParams) {
    let profiles = random_profiles(seed, genes, 3, ProfileKind::Uniform).expect("profiles");
    let ds = synth_generate(seed, &ModelParams::reference_truth(), &profiles).expect("synthetic data");
    (ds, default_hyperparams(3).expect("defaults"))
}

/// `batch` well-conditioned SPD `n×n` items.
pub fn spd_batch(batch: usize, n: usize, seed: u64) -> MatBatch {
    let mut rng = RngStream::new(seed, 0);
    let items: Vec<Mat> = (0..batch)
        .map(|_| {
            let mut m = Mat::identity(n).scale(n as f64);
            for r in 0..n {
                for c in 0..n {
                    let v = rng.uniform() - 0.5;
                    m[(r, c)] += v;
                    m[(c, r)] += v;
                }
            }
            m
        })
        .collect();
    MatBatch::from_mats(&items).expect("equal shapes")
}
