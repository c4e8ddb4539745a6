//! Random streams and the Gamma, Wishart and multivariate normal samplers.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{small, Exec, Mat, MatBatch, VecBatch, Vector};

/// Stream namespaces so that different consumers of one seed never overlap.
pub mod purpose {
    pub const SYNTH_PROFILES: u16 = 1;
    pub const SYNTH_GENES: u16 = 2;
    pub const GIBBS_GLOBAL: u16 = 3;
    pub const GIBBS_GENES: u16 = 4;
    pub const VB_POSTERIOR: u16 = 5;
    pub const ORACLE: u16 = 6;
    pub const SWEEP: u16 = 7;
}

/// An independent random stream keyed by `(seed, stream_id)`.
///
/// Backed by a ChaCha counter-based generator whose 64-bit stream id is the
/// stream id, so sequences depend only on the key and never on scheduling.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    /// Stream `index` within the namespace `purpose`.
    pub fn derive(seed: u64, purpose: u16, index: u64) -> Self {
        debug_assert!(index < 1 << 48);
        RngStream::new(seed, (u64::from(purpose) << 48) | index)
    }

    /// One stream per item, `index = 0..n`.
    pub fn family(seed: u64, purpose: u16, n: usize) -> Vec<RngStream> {
        (0..n as u64).map(|i| RngStream::derive(seed, purpose, i)).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        Open01.sample(&mut self.rng)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = self.normal());
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Gamma distribution with shape `a` and rate (inverse scale) `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "gamma needs shape > 0 and rate > 0 (got {shape}, {rate})"
            )));
        }
        Ok(GammaParams { shape, rate })
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }
}

/// Marsaglia–Tsang draw from Gamma(shape, 1) for `shape ≥ 1/3`, returning the
/// number of proposals used alongside the value.
pub fn marsaglia_tsang(rng: &mut RngStream, shape: f64) -> (f64, u32) {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    let mut tries = 0;
    loop {
        tries += 1;
        let u = rng.uniform();
        let x = rng.normal();
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
            return (d * v, tries);
        }
    }
}

/// Draw from Gamma(a, rate b). Shapes below one use the boost
/// `Gamma(a+1)·U^{1/a}`.
pub fn sample_gamma(rng: &mut RngStream, p: GammaParams) -> f64 {
    if p.shape >= 1.0 {
        marsaglia_tsang(rng, p.shape).0 / p.rate
    } else {
        let g = marsaglia_tsang(rng, p.shape + 1.0).0;
        let u = rng.uniform();
        g * u.powf(1.0 / p.shape) / p.rate
    }
}

/// Wishart distribution with integer degrees of freedom and SPD scale
/// (mean `dof · scale`).
#[derive(Clone, Debug, PartialEq)]
pub struct WishartParams {
    dof: u64,
    scale: Mat,
    factor: Mat,
}

impl WishartParams {
    pub fn new(dof: f64, scale: Mat) -> Result<Self> {
        if dof.fract() != 0.0 || dof <= 0.0 || !dof.is_finite() {
            return Err(Error::Parameter(format!("wishart dof must be a positive integer, got {dof}")));
        }
        let dof = dof as u64;
        if (dof as usize) < scale.rows() {
            return Err(Error::Parameter(format!(
                "wishart dof {dof} below dimension {}",
                scale.rows()
            )));
        }
        if !scale.is_symmetric(1e-9 * (1.0 + scale.frobenius_norm())) {
            return Err(Error::Parameter("wishart scale is not symmetric".into()));
        }
        let factor = scale.cholesky()?;
        Ok(WishartParams { dof, scale, factor })
    }

    pub fn dof(&self) -> u64 {
        self.dof
    }

    pub fn scale(&self) -> &Mat {
        &self.scale
    }
}

/// `Λ = Σ_{i=1..n} S_i S_iᵀ` with `S_i = R u_i`, `R` the Cholesky factor of
/// the scale and `u_i` standard normal. The outer products of the `u_i` are
/// accumulated first and sandwiched by `R` once, which is the same sum.
pub fn sample_wishart(rng: &mut RngStream, p: &WishartParams) -> Mat {
    let dim = p.scale.rows();
    let mut u = vec![0.0; dim];
    let mut acc = vec![0.0; dim * dim];
    for _ in 0..p.dof {
        rng.fill_normal(&mut u);
        for i in 0..dim {
            for j in 0..=i {
                acc[i * dim + j] += u[i] * u[j];
            }
        }
    }
    small::symmetrize_from_lower(&mut acc, dim);
    let r = p.factor.as_slice();
    let mut tmp = vec![0.0; dim * dim];
    small::gemm(r, (dim, dim), false, &acc, (dim, dim), false, 1.0, 0.0, &mut tmp);
    let mut out = vec![0.0; dim * dim];
    small::gemm(&tmp, (dim, dim), false, r, (dim, dim), true, 1.0, 0.0, &mut out);
    small::symmetrize_from_lower(&mut out, dim);
    Mat::from_raw(dim, dim, out)
}

/// Whether the matrix argument of [`sample_mvn`] is a covariance or a
/// precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MvnForm {
    Covariance,
    Precision,
}

/// Cholesky factor of the covariance implied by `matrix` (precisions are
/// inverted first).
fn covariance_factor(matrix: &[f64], n: usize, form: MvnForm, out: &mut [f64]) -> Result<()> {
    match form {
        MvnForm::Covariance => small::cholesky(matrix, n, out),
        MvnForm::Precision => {
            let mut cov = vec![0.0; n * n];
            small::invert(matrix, n, &mut cov)?;
            small::symmetrize(&mut cov, n);
            small::cholesky(&cov, n, out)
        }
    }
}

/// `mean + L u` for a caller-supplied standard normal vector `u`.
pub fn mvn_from_standard(mean: &Vector, matrix: &Mat, form: MvnForm, u: &[f64]) -> Result<Vector> {
    let n = mean.len();
    if matrix.rows() != n || matrix.cols() != n || u.len() != n {
        return Err(Error::Shape(format!(
            "mvn mean {n}, matrix {}x{}, noise {}",
            matrix.rows(),
            matrix.cols(),
            u.len()
        )));
    }
    let mut l = vec![0.0; n * n];
    covariance_factor(matrix.as_slice(), n, form, &mut l)?;
    let mut out = mean.as_slice().to_vec();
    for i in 0..n {
        out[i] += (0..=i).map(|j| l[i * n + j] * u[j]).sum::<f64>();
    }
    Ok(Vector::from_raw(out))
}

pub fn sample_mvn(rng: &mut RngStream, mean: &Vector, matrix: &Mat, form: MvnForm) -> Result<Vector> {
    let mut u = vec![0.0; mean.len()];
    rng.fill_normal(&mut u);
    mvn_from_standard(mean, matrix, form, &u)
}

/// Item `i` is drawn from `N(means_i, precisions_i⁻¹)` using `streams[i]`.
pub fn sample_mvn_batched(
    exec: Exec,
    streams: &mut [RngStream],
    means: &VecBatch,
    precisions: &MatBatch,
) -> Result<VecBatch> {
    let n = means.len();
    if precisions.batch() != means.batch() || precisions.rows() != n || precisions.cols() != n {
        return Err(Error::Shape(format!(
            "{} means of length {n} vs {} precisions {}x{}",
            means.batch(),
            precisions.batch(),
            precisions.rows(),
            precisions.cols()
        )));
    }
    let mut out = means.clone();
    exec.for_each_item_with(out.as_mut_slice(), n, streams, |i, item, rng| {
        draw_precision_item(rng, precisions.item(i), n, item)
    })?;
    Ok(out)
}

/// In-place `item ← item + L u` where `L` factors `precision⁻¹`.
pub(crate) fn draw_precision_item(rng: &mut RngStream, precision: &[f64], n: usize, item: &mut [f64]) -> Result<()> {
    let mut l = [0.0; 16];
    let mut heap;
    let l: &mut [f64] = if n * n <= 16 {
        &mut l[..n * n]
    } else {
        heap = vec![0.0; n * n];
        &mut heap
    };
    covariance_factor(precision, n, MvnForm::Precision, l)?;
    let mut u = [0.0; 4];
    let mut uheap;
    let u: &mut [f64] = if n <= 4 {
        &mut u[..n]
    } else {
        uheap = vec![0.0; n];
        &mut uheap
    };
    rng.fill_normal(u);
    for i in 0..n {
        item[i] += (0..=i).map(|j| l[i * n + j] * u[j]).sum::<f64>();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn same_key_same_sequence_distinct_streams_differ() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut c = RngStream::new(7, 4);
        let xa: Vec<f64> = (0..5).map(|_| a.normal()).collect();
        let xb: Vec<f64> = (0..5).map(|_| b.normal()).collect();
        let xc: Vec<f64> = (0..5).map(|_| c.normal()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn gamma_rejects_bad_parameters() {
        assert!(GammaParams::new(0.0, 1.0).is_err());
        assert!(GammaParams::new(1.0, -1.0).is_err());
        assert!(GammaParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn gamma_rate_only_rescales() {
        let mut r1 = RngStream::new(11, 0);
        let mut r2 = RngStream::new(11, 0);
        for _ in 0..100 {
            let x1 = sample_gamma(&mut r1, GammaParams::new(3.2, 1.0).unwrap());
            let x2 = sample_gamma(&mut r2, GammaParams::new(3.2, 2.0).unwrap());
            assert_eq!(x2, x1 / 2.0);
        }
    }

    #[test]
    fn gamma_acceptance_ratio_above_95_percent() {
        let mut rng = RngStream::new(5, 0);
        for shape in [1.0, 2.0, 10.0, 2000.5] {
            let n = 20_000;
            let tries: u32 = (0..n).map(|_| marsaglia_tsang(&mut rng, shape).1).sum();
            let ratio = n as f64 / tries as f64;
            assert!(ratio > 0.95, "shape {shape}: acceptance {ratio}");
        }
    }

    #[test]
    fn gamma_unit_shape_variance() {
        let mut rng = RngStream::new(99, 1);
        let p = GammaParams::new(1.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..200_000).map(|_| sample_gamma(&mut rng, p)).collect();
        let (m, v) = mean_var(&xs);
        // var of the sample variance for Exp(1): (μ4 − σ⁴)/n = 8/n
        assert!((v - 1.0).abs() < 3.0 * (8.0 / xs.len() as f64).sqrt(), "var {v}");
        assert!((m - 1.0).abs() < 3.0 / (xs.len() as f64).sqrt());
        assert!(xs.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn small_shape_stays_positive() {
        let mut rng = RngStream::new(3, 2);
        let p = GammaParams::new(0.05, 0.5).unwrap();
        assert!((0..10_000).all(|_| sample_gamma(&mut rng, p) > 0.0));
    }

    #[test]
    fn wishart_parameter_validation() {
        let s = Mat::identity(2);
        assert!(WishartParams::new(2.5, s.clone()).is_err());
        assert!(WishartParams::new(1.0, s.clone()).is_err());
        assert!(WishartParams::new(3.0, Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap()).is_err());
        assert!(WishartParams::new(3.0, s).is_ok());
    }

    #[test]
    fn wishart_draws_are_symmetric_and_pd() {
        let scale = Mat::from_rows(&[vec![2.0, 0.3], vec![0.3, 0.5]]).unwrap();
        let p = WishartParams::new(4.0, scale).unwrap();
        let mut rng = RngStream::new(1, 1);
        for _ in 0..1000 {
            let w = sample_wishart(&mut rng, &p);
            assert!(w.is_symmetric(0.0));
            assert!(w.cholesky().is_ok());
        }
    }

    #[test]
    fn zero_noise_returns_the_mean() {
        let mean = Vector::new(vec![0.3, -2.0]).unwrap();
        let cov = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        for form in [MvnForm::Covariance, MvnForm::Precision] {
            assert_eq!(mvn_from_standard(&mean, &cov, form, &[0.0, 0.0]).unwrap(), mean);
        }
    }

    #[test]
    fn non_pd_matrix_is_a_decomposition_error() {
        let mut rng = RngStream::new(0, 0);
        let bad = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let r = sample_mvn(&mut rng, &Vector::zeros(2), &bad, MvnForm::Covariance);
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn batched_single_item_equals_unbatched() {
        let mean = Vector::new(vec![1.0, 2.0]).unwrap();
        let prec = Mat::from_rows(&[vec![3.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let mut streams = vec![RngStream::new(42, 9)];
        let batched = sample_mvn_batched(
            Exec::SERIAL,
            &mut streams,
            &VecBatch::replicate(&mean, 1),
            &MatBatch::replicate(&prec, 1),
        )
        .unwrap();
        let mut rng = RngStream::new(42, 9);
        let single = sample_mvn(&mut rng, &mean, &prec, MvnForm::Precision).unwrap();
        assert_eq!(batched.get(0), single);
    }

    #[test]
    fn batched_streams_give_distinct_draws() {
        let mean = Vector::zeros(2);
        let prec = Mat::identity(2);
        let mut streams = RngStream::family(8, purpose::GIBBS_GENES, 50);
        let out = sample_mvn_batched(
            Exec::PARALLEL,
            &mut streams,
            &VecBatch::replicate(&mean, 50),
            &MatBatch::replicate(&prec, 50),
        )
        .unwrap();
        for i in 0..50 {
            for j in 0..i {
                assert_ne!(out.item(i), out.item(j));
            }
        }
    }
}
