#![allow(dead_code)]

use tissuemix::linalg::{Mat, Vector};
use tissuemix::model::{transform, ExpressionProfile, HyperParams, RawRecord};
use tissuemix::Dataset;

pub fn dataset(rows: &[(f64, [f64; 2])]) -> Dataset {
    let records: Vec<RawRecord> = rows
        .iter()
        .map(|&(r, d)| RawRecord {
            r,
            profile: ExpressionProfile::new(d.to_vec()).unwrap(),
        })
        .collect();
    transform(&records).unwrap()
}

/// Three genes, two networks.
pub fn tiny3() -> Dataset {
    dataset(&[
        (0.8581, [0.8472, 0.9822]),
        (0.3443, [0.8137, 0.2748]),
        (0.2978, [0.1707, 0.2227]),
    ])
}

/// Five genes, two networks.
pub fn tiny5() -> Dataset {
    dataset(&[
        (0.3065, [0.3820, 0.8119]),
        (0.5753, [0.2502, 0.5857]),
        (0.1067, [0.1792, 0.0465]),
        (0.9293, [0.7920, 0.7843]),
        (0.2566, [0.4647, 0.3284]),
    ])
}

pub fn single() -> Dataset {
    dataset(&[(0.0125, [0.8953, 0.0154])])
}

/// Moderately informative priors for two networks: `E[Λ] = 30`,
/// `E[ρ] = 100`, `K | Λ ~ N(1/2, 1/Λ)`.
pub fn informative_hp() -> HyperParams {
    HyperParams {
        a0: 2.0,
        b0: 0.02,
        q0: 1.0,
        n0: 3,
        K0: Vector::new(vec![0.5]).unwrap(),
        Lambda0: Mat::from_rows(&[vec![10.0]]).unwrap(),
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}
