//! Observed data, hyperparameters and parameters of the hierarchical model
//!
//! ```text
//! r_i | β_i, ρ  ~ N(D_iᵀβ_i + μ_i, ρ⁻¹)
//! β_i | K, Λ    ~ N(K, Λ⁻¹)
//! K | Λ         ~ N(K0, (q0 Λ)⁻¹)
//! Λ             ~ Wishart(n0, scale Λ0)        (inverse scale Λ0⁻¹)
//! ρ             ~ Gamma(a0, rate b0)
//! ```
//!
//! with `μ_i = d_{i,N}` and `D_i = (d_{i,1} − d_{i,N}, …, d_{i,N−1} − d_{i,N})`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Exec, Mat, VecBatch, Vector};
use crate::samplers::{purpose, MvnForm, RngStream};

/// Activity of one gene-linked output across the `N` networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressionProfile {
    d: Vector,
}

impl ExpressionProfile {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.len() < 2 {
            return Err(Error::Shape(format!("profile needs at least 2 networks, got {}", d.len())));
        }
        Ok(ExpressionProfile { d: Vector::new(d)? })
    }

    /// Like [`ExpressionProfile::new`] but allows a single network, which
    /// Boolean ensembles can produce but the model cannot fit.
    pub fn from_values(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::EmptyInput("profile"));
        }
        Ok(ExpressionProfile { d: Vector::new(d)? })
    }

    pub fn networks(&self) -> usize {
        self.d.len()
    }

    pub fn values(&self) -> &[f64] {
        self.d.as_slice()
    }
}

/// One measured gene: its normalized expression ratio and profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub r: f64,
    pub profile: ExpressionProfile,
}

/// The observed layer after the `(μ_i, D_i)` transform.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    networks: usize,
    r: Vector,
    mu: Vector,
    d: VecBatch,
    /// Raw profiles, `V × N`, kept so the dataset can be written back exactly.
    raw: Vec<f64>,
}

/// Build a [`Dataset`] from raw records.
pub fn transform(records: &[RawRecord]) -> Result<Dataset> {
    let first = records.first().ok_or(Error::EmptyInput("no gene records"))?;
    let n = first.profile.networks();
    let p = n - 1;
    let mut r = Vec::with_capacity(records.len());
    let mut mu = Vec::with_capacity(records.len());
    let mut d = Vec::with_capacity(records.len() * p);
    let mut raw = Vec::with_capacity(records.len() * n);
    for (i, rec) in records.iter().enumerate() {
        let prof = rec.profile.values();
        if prof.len() != n {
            return Err(Error::Shape(format!(
                "record {i} has {} networks, expected {n}",
                prof.len()
            )));
        }
        if !rec.r.is_finite() {
            return Err(Error::NonFinite("expression ratio"));
        }
        let last = prof[p];
        r.push(rec.r);
        mu.push(last);
        d.extend(prof[..p].iter().map(|x| x - last));
        raw.extend_from_slice(prof);
    }
    let genes = records.len();
    Ok(Dataset {
        networks: n,
        r: Vector::from_raw(r),
        mu: Vector::from_raw(mu),
        d: VecBatch::from_raw(genes, p, d),
        raw,
    })
}

impl Dataset {
    /// Number of genes `V`.
    pub fn genes(&self) -> usize {
        self.r.len()
    }

    /// Number of subpopulations `N`.
    pub fn networks(&self) -> usize {
        self.networks
    }

    /// Dimension of `K`, `β_i` and `Λ`: `N − 1`.
    pub fn dim(&self) -> usize {
        self.networks - 1
    }

    pub fn r(&self) -> &Vector {
        &self.r
    }

    pub fn mu(&self) -> &Vector {
        &self.mu
    }

    pub fn d(&self) -> &VecBatch {
        &self.d
    }

    /// `r_i − μ_i`.
    pub fn centered(&self, i: usize) -> f64 {
        self.r[i] - self.mu[i]
    }

    pub fn profile(&self, i: usize) -> &[f64] {
        &self.raw[i * self.networks..(i + 1) * self.networks]
    }

    pub fn records(&self) -> Vec<RawRecord> {
        (0..self.genes())
            .map(|i| RawRecord {
                r: self.r[i],
                profile: ExpressionProfile {
                    d: Vector::from_raw(self.profile(i).to_vec()),
                },
            })
            .collect()
    }

    /// Same data with genes reordered: gene `k` of the result is gene
    /// `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Dataset {
        let n = self.networks;
        let raw = order.iter().flat_map(|&i| self.profile(i).iter().copied()).collect();
        Dataset {
            networks: n,
            r: Vector::from_raw(order.iter().map(|&i| self.r[i]).collect()),
            mu: Vector::from_raw(order.iter().map(|&i| self.mu[i]).collect()),
            d: self.d.permuted(order),
            raw,
        }
    }

    /// Replace the observed ratios, keeping profiles.
    pub fn with_ratios(&self, r: Vec<f64>) -> Result<Dataset> {
        if r.len() != self.genes() {
            return Err(Error::Shape(format!("{} ratios for {} genes", r.len(), self.genes())));
        }
        Ok(Dataset {
            r: Vector::new(r)?,
            ..self.clone()
        })
    }
}

/// Fixed prior constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct HyperParams {
    pub a0: f64,
    pub b0: f64,
    pub q0: f64,
    pub n0: u32,
    pub K0: Vector,
    pub Lambda0: Mat,
}

impl HyperParams {
    pub fn validate(&self, dim: usize) -> Result<()> {
        for (name, v) in [("a0", self.a0), ("b0", self.b0), ("q0", self.q0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n0 == 0 {
            return Err(Error::Parameter("n0 must be a positive integer".into()));
        }
        if self.K0.len() != dim || self.Lambda0.rows() != dim || self.Lambda0.cols() != dim {
            return Err(Error::Shape(format!(
                "hyperparameters sized for K0 {} / Lambda0 {}x{}, model dimension {dim}",
                self.K0.len(),
                self.Lambda0.rows(),
                self.Lambda0.cols()
            )));
        }
        if !self.Lambda0.is_positive_definite() {
            return Err(Error::Parameter("Lambda0 must be symmetric positive definite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.K0.len()
    }

    /// `Λ0⁻¹`, the prior inverse scale of the Wishart.
    pub fn lambda0_inv(&self) -> Result<Mat> {
        self.Lambda0.spd_inverse()
    }
}

/// Reference covariance used for the three-network defaults and the
/// synthetic experiment; its inverse is the prior/true precision.
pub fn reference_covariance() -> Mat {
    Mat::from_raw(2, 2, vec![0.01, 0.005, 0.005, 0.008])
}

pub fn default_hyperparams(networks: usize) -> Result<HyperParams> {
    if networks < 2 {
        return Err(Error::Parameter(format!("need at least 2 networks, got {networks}")));
    }
    let dim = networks - 1;
    let cov = if networks == 3 {
        reference_covariance()
    } else {
        Mat::diag(&vec![0.01; dim])
    };
    Ok(HyperParams {
        a0: 0.5,
        b0: 0.5,
        q0: 0.001,
        n0: 1,
        K0: Vector::filled(dim, 1.0 / 3.0),
        Lambda0: cov.inverse()?,
    })
}

/// The unknowns `(K, Λ, ρ)`. Also the record type for posterior draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ModelParams {
    pub K: Vector,
    pub Lambda: Mat,
    pub rho: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Parameter(format!("rho must be positive, got {}", self.rho)));
        }
        if self.Lambda.rows() != self.K.len() || !self.Lambda.is_square() {
            return Err(Error::Shape("Lambda does not match K".into()));
        }
        if !self.Lambda.is_positive_definite() {
            return Err(Error::NotPositiveDefinite { pivot: 0 });
        }
        Ok(())
    }

    /// The synthetic regime: `K = (0.1, 0.3)`, `ρ = 100`, `Λ` the inverse of
    /// the reference covariance.
    pub fn reference_truth() -> ModelParams {
        ModelParams {
            K: Vector::from_raw(vec![0.1, 0.3]),
            Lambda: reference_covariance().inverse().expect("reference covariance is invertible"),
            rho: 100.0,
        }
    }
}

/// Weights on the full `N`-network scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsFull(pub Vector);

impl WeightsFull {
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Append `1 − ΣK` as the weight of the last network.
pub fn full_weights(k: &Vector) -> WeightsFull {
    let mut w = k.as_slice().to_vec();
    w.push(1.0 - k.sum());
    WeightsFull(Vector::from_raw(w))
}

/// How random synthetic profiles are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// Independent uniform activities on `[0, 1]`.
    Uniform,
    /// Uniform over `{0,1}^N` minus the two constant vectors.
    Binary,
}

pub fn random_profiles(seed: u64, genes: usize, networks: usize, kind: ProfileKind) -> Result<Vec<ExpressionProfile>> {
    if networks < 2 {
        return Err(Error::Parameter(format!("need at least 2 networks, got {networks}")));
    }
    if kind == ProfileKind::Binary && networks > 62 {
        return Err(Error::Parameter("binary profiles support at most 62 networks".into()));
    }
    let mut rng = RngStream::derive(seed, purpose::SYNTH_PROFILES, 0);
    (0..genes)
        .map(|_| {
            let d = match kind {
                ProfileKind::Uniform => (0..networks).map(|_| rng.uniform()).collect(),
                ProfileKind::Binary => {
                    // codes 1 ..= 2^N − 2 are the non-constant bit patterns
                    let code = 1 + rng.below((1usize << networks) - 2);
                    (0..networks).map(|q| ((code >> q) & 1) as f64).collect()
                }
            };
            ExpressionProfile::new(d)
        })
        .collect()
}

/// Noise hooks for [`synth_generate_with`]; both `true` for ordinary draws.
#[derive(Clone, Copy, Debug)]
pub struct SynthNoise {
    pub latent: bool,
    pub observation: bool,
}

impl Default for SynthNoise {
    fn default() -> Self {
        SynthNoise {
            latent: true,
            observation: true,
        }
    }
}

/// Simulate ratios for the given profiles under `truth`.
pub fn synth_generate(seed: u64, truth: &ModelParams, profiles: &[ExpressionProfile]) -> Result<Dataset> {
    synth_generate_with(seed, truth, profiles, SynthNoise::default())
}

pub fn synth_generate_with(
    seed: u64,
    truth: &ModelParams,
    profiles: &[ExpressionProfile],
    noise: SynthNoise,
) -> Result<Dataset> {
    let first = profiles.first().ok_or(Error::EmptyInput("no profiles"))?;
    if first.networks() - 1 != truth.K.len() {
        return Err(Error::Shape(format!(
            "profiles have {} networks but K has {} components",
            first.networks(),
            truth.K.len()
        )));
    }
    if !(truth.rho > 0.0) {
        return Err(Error::Parameter("rho must be positive".into()));
    }
    let dim = truth.K.len();
    let cov = truth.Lambda.spd_inverse()?;
    let factor = cov.cholesky()?;
    let sd = truth.rho.powf(-0.5);
    let draws: Vec<(f64, Vec<f64>)> = Exec::SERIAL.map_indices(profiles.len(), |i| {
        let mut rng = RngStream::derive(seed, purpose::SYNTH_GENES, i as u64);
        let mut u = vec![0.0; dim];
        rng.fill_normal(&mut u);
        let beta: Vec<f64> = (0..dim)
            .map(|a| {
                let z = if noise.latent {
                    (0..=a).map(|b| factor[(a, b)] * u[b]).sum::<f64>()
                } else {
                    0.0
                };
                truth.K[a] + z
            })
            .collect();
        let e = rng.normal();
        (if noise.observation { sd * e } else { 0.0 }, beta)
    });
    let records = profiles
        .iter()
        .zip(draws)
        .map(|(prof, (eps, beta))| {
            let d = prof.values();
            if d.len() != dim + 1 {
                return Err(Error::Shape("profiles disagree on the network count".into()));
            }
            let last = d[dim];
            let mean = last + (0..dim).map(|q| (d[q] - last) * beta[q]).sum::<f64>();
            Ok(RawRecord {
                r: mean + eps,
                profile: prof.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    transform(&records)
}

/// `ln p(r | K, Λ, ρ)` with every `β_i` integrated out:
/// `Σ_i ln N(r_i | D_iᵀK + μ_i, ρ⁻¹ + D_iᵀΛ⁻¹D_i)`.
pub fn marginal_loglik(ds: &Dataset, p: &ModelParams) -> Result<f64> {
    marginal_loglik_with(Exec::SERIAL, ds, p)
}

pub fn marginal_loglik_with(exec: Exec, ds: &Dataset, p: &ModelParams) -> Result<f64> {
    if !(p.rho > 0.0) {
        return Err(Error::Parameter("rho must be positive".into()));
    }
    if p.K.len() != ds.dim() {
        return Err(Error::Shape(format!("K has {} components, data {}", p.K.len(), ds.dim())));
    }
    let cov = p.Lambda.spd_inverse()?;
    let terms = exec.map_indices(ds.genes(), |i| {
        let d = ds.d().item(i);
        let var = 1.0 / p.rho + crate::linalg::small::quad_form(cov.as_slice(), d);
        let resid = ds.centered(i) - crate::linalg::small::dot(d, p.K.as_slice());
        -0.5 * ((2.0 * PI * var).ln() + resid * resid / var)
    });
    crate::linalg::reduce_scalars(exec, &terms)
}

/// Draw `n` parameter sets from the prior (requires `n0 ≥ dim`).
pub fn sample_prior(rng: &mut RngStream, hp: &HyperParams) -> Result<ModelParams> {
    use crate::samplers::{sample_gamma, sample_mvn, sample_wishart, GammaParams, WishartParams};
    let wish = WishartParams::new(f64::from(hp.n0), hp.Lambda0.clone())?;
    let lambda = sample_wishart(rng, &wish);
    let k = sample_mvn(rng, &hp.K0, &lambda.scale(hp.q0), MvnForm::Precision)?;
    let rho = sample_gamma(rng, GammaParams::new(hp.a0, hp.b0)?);
    Ok(ModelParams {
        K: k,
        Lambda: lambda,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(r: f64, d: &[f64]) -> RawRecord {
        RawRecord {
            r,
            profile: ExpressionProfile::new(d.to_vec()).unwrap(),
        }
    }

    #[test]
    fn transform_examples() {
        let ds = transform(&[rec(0.5, &[1.0, 0.0, 0.0]), rec(0.1, &[0.0, 1.0, 1.0])]).unwrap();
        assert_eq!(ds.mu().as_slice(), &[0.0, 1.0]);
        assert_eq!(ds.d().item(0), &[1.0, 0.0]);
        assert_eq!(ds.d().item(1), &[-1.0, 0.0]);
        let ds = transform(&[rec(0.2, &[1.0, 1.0])]).unwrap();
        assert_eq!(ds.mu().as_slice(), &[1.0]);
        assert_eq!(ds.d().item(0), &[0.0]);
    }

    #[test]
    fn transform_errors() {
        assert!(matches!(transform(&[]), Err(Error::EmptyInput(_))));
        let mixed = [rec(0.0, &[1.0, 0.0]), rec(0.0, &[1.0, 0.0, 1.0])];
        assert!(matches!(transform(&mixed), Err(Error::Shape(_))));
        assert!(ExpressionProfile::new(vec![1.0]).is_err());
    }

    #[test]
    fn default_hyperparams_three_networks() {
        let hp = default_hyperparams(3).unwrap();
        let l = &hp.Lambda0;
        // inverse of [[0.01, 0.005], [0.005, 0.008]], det = 5.5e-5
        assert!((l[(0, 0)] - 0.008 / 5.5e-5).abs() < 1e-9);
        assert!((l[(0, 1)] + 0.005 / 5.5e-5).abs() < 1e-9);
        assert!((l[(1, 1)] - 0.01 / 5.5e-5).abs() < 1e-9);
        assert!((l[(0, 0)] - 145.454_545_454_545).abs() < 1e-9);
        assert_eq!(hp.K0.as_slice(), &[1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!((hp.a0, hp.b0, hp.q0, hp.n0), (0.5, 0.5, 0.001, 1));
        hp.validate(2).unwrap();
    }

    #[test]
    fn default_hyperparams_other_sizes() {
        let hp = default_hyperparams(2).unwrap();
        assert_eq!(hp.K0.as_slice(), &[1.0 / 3.0]);
        assert_eq!((hp.a0, hp.b0), (0.5, 0.5));
        assert!((hp.Lambda0[(0, 0)] - 100.0).abs() < 1e-12);
        let hp = default_hyperparams(5).unwrap();
        assert_eq!(hp.K0.len(), 4);
        assert!(default_hyperparams(1).is_err());
    }

    #[test]
    fn full_weights_examples() {
        let w = full_weights(&Vector::new(vec![0.1, 0.3]).unwrap());
        assert!((w.as_slice()[2] - 0.6).abs() < 1e-15);
        let w = full_weights(&Vector::new(vec![0.6676, 0.2782]).unwrap());
        assert!((w.as_slice()[2] - 0.0542).abs() < 1e-12);
        let third = 1.0 / 3.0;
        let w = full_weights(&Vector::new(vec![third, third]).unwrap());
        assert!((w.as_slice()[2] - third).abs() < 1e-15);
    }

    #[test]
    fn noiseless_synth_is_exact() {
        let truth = ModelParams::reference_truth();
        let profiles = random_profiles(4, 50, 3, ProfileKind::Uniform).unwrap();
        let ds = synth_generate_with(
            1,
            &truth,
            &profiles,
            SynthNoise {
                latent: false,
                observation: false,
            },
        )
        .unwrap();
        for i in 0..ds.genes() {
            let expect = crate::linalg::small::dot(ds.d().item(i), truth.K.as_slice()) + ds.mu()[i];
            assert!((ds.r()[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn synth_is_reproducible() {
        let truth = ModelParams::reference_truth();
        let profiles = random_profiles(4, 200, 3, ProfileKind::Binary).unwrap();
        let a = synth_generate(9, &truth, &profiles).unwrap();
        let b = synth_generate(9, &truth, &profiles).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(10, &truth, &profiles).unwrap();
        assert_ne!(a.r(), c.r());
    }

    #[test]
    fn binary_profiles_are_never_constant() {
        let profiles = random_profiles(1, 2000, 3, ProfileKind::Binary).unwrap();
        for p in profiles {
            let v = p.values();
            assert!(v.iter().any(|&x| x != v[0]));
            assert!(v.iter().all(|&x| x == 0.0 || x == 1.0));
        }
    }

    #[test]
    fn observation_noise_variance_is_inverse_rho() {
        let truth = ModelParams {
            K: Vector::new(vec![0.2, 0.5]).unwrap(),
            Lambda: Mat::identity(2),
            rho: 25.0,
        };
        let flat = ExpressionProfile::new(vec![0.4, 0.4, 0.4]).unwrap();
        let profiles = vec![flat; 100_000];
        let ds = synth_generate(3, &truth, &profiles).unwrap();
        let n = ds.genes() as f64;
        let resid: Vec<f64> = (0..ds.genes()).map(|i| ds.centered(i)).collect();
        let m = resid.iter().sum::<f64>() / n;
        let v = resid.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((v * truth.rho - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn flat_profiles_reduce_loglik_to_noise_only() {
        let ds = transform(&[rec(0.3, &[0.7, 0.7, 0.7]), rec(-0.1, &[0.2, 0.2, 0.2])]).unwrap();
        let p = ModelParams::reference_truth();
        let ll = marginal_loglik(&ds, &p).unwrap();
        let expect: f64 = [(0.3 - 0.7), (-0.1 - 0.2)]
            .iter()
            .map(|e: &f64| -0.5 * ((2.0 * PI / p.rho).ln() + p.rho * e * e))
            .sum();
        assert!((ll - expect).abs() < 1e-12);
    }
}
