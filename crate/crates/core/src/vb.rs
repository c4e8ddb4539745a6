//! Mean-field variational Bayes.
//!
//! The factorization is `Q(ρ) Q(K, Λ) Π_i Q(β_i)` with
//!
//! ```text
//! Q(ρ)     = Gamma(a_ρ, b_ρ)
//! Q(β_i)   = N(μ_βi, Λ_βi⁻¹)
//! Q(K | Λ) = N(K_0K, ((q0 + V) Λ)⁻¹)
//! Q(Λ)     = Wishart(n0 + V, scale Λ_0Λ)
//! ```
//!
//! The state stores `Λ_0Λ⁻¹`, which is what the sweep accumulates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    gemm_batched, reduce_mats, reduce_scalars, reduce_vecs, small, spd_inverse_batched, Exec, Mat, MatBatch, Operand,
    VecBatch, Vector,
};
use crate::model::{Dataset, HyperParams, ModelParams};
use crate::samplers::{
    purpose, sample_gamma, sample_mvn, sample_wishart, GammaParams, MvnForm, RngStream, WishartParams,
};
use crate::special::{digamma, ln_gamma, ln_mv_gamma, mv_digamma};

#[derive(Clone, Debug, PartialEq)]
pub struct VbState {
    pub a_rho: f64,
    pub b_rho: f64,
    pub mu_beta: VecBatch,
    pub lambda_beta: MatBatch,
    pub k0k: Vector,
    pub lambda0l_inv: Mat,
    genes: usize,
    nu: f64,
    // expectations under the current factors
    beta_cov: MatBatch,
    e_bbt: MatBatch,
    lambda0l: Mat,
    e_lambda: Mat,
    e_lambda_k: Vector,
    e_rho: f64,
}

impl VbState {
    pub fn genes(&self) -> usize {
        self.genes
    }

    pub fn dim(&self) -> usize {
        self.k0k.len()
    }

    /// Wishart degrees of freedom `n0 + V`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `E[β_i]`.
    pub fn e_beta(&self) -> &VecBatch {
        &self.mu_beta
    }

    /// `E[β_i β_iᵀ]`.
    pub fn e_beta_outer(&self) -> &MatBatch {
        &self.e_bbt
    }

    /// `Λ_βi⁻¹`.
    pub fn beta_cov(&self) -> &MatBatch {
        &self.beta_cov
    }

    /// `Λ_0Λ`, the Wishart scale.
    pub fn lambda0l(&self) -> &Mat {
        &self.lambda0l
    }

    pub fn e_lambda(&self) -> &Mat {
        &self.e_lambda
    }

    pub fn e_k(&self) -> &Vector {
        &self.k0k
    }

    pub fn e_lambda_k(&self) -> &Vector {
        &self.e_lambda_k
    }

    pub fn e_rho(&self) -> f64 {
        self.e_rho
    }

    /// Point summary `(E[K], E[Λ], E[ρ])`.
    pub fn mean_params(&self) -> ModelParams {
        ModelParams {
            K: self.k0k.clone(),
            Lambda: self.e_lambda.clone(),
            rho: self.e_rho,
        }
    }

    /// Refresh `Λ_0Λ`, `E[Λ]`, `E[ΛK]` and `E[ρ]` from the stored factors.
    fn refresh_global(&mut self) -> Result<()> {
        self.lambda0l = self.lambda0l_inv.spd_inverse()?;
        self.e_lambda = self.lambda0l.scale(self.nu);
        self.e_lambda_k = self.e_lambda.mul_vec(&self.k0k)?;
        self.e_rho = self.a_rho / self.b_rho;
        Ok(())
    }

    /// Refresh `Λ_βi⁻¹` and `E[β_i β_iᵀ]` from `Λ_βi` and `μ_βi`.
    fn refresh_beta(&mut self, exec: Exec) -> Result<()> {
        self.beta_cov = spd_inverse_batched(exec, &self.lambda_beta)?;
        self.e_bbt = outer_plus(exec, &self.mu_beta, self.beta_cov.clone())?;
        Ok(())
    }
}

/// `x_i x_iᵀ + c_i` for every item.
fn outer_plus(exec: Exec, x: &VecBatch, c: MatBatch) -> Result<MatBatch> {
    let cols = MatBatch::from_columns(x);
    gemm_batched(exec, Operand::Batch(&cols), false, Operand::Batch(&cols), true, 1.0, 1.0, c)
}

fn check_shapes(ds: &Dataset, hp: &HyperParams) -> Result<()> {
    hp.validate(ds.dim())
}

pub fn vb_init(ds: &Dataset, hp: &HyperParams) -> Result<VbState> {
    vb_init_with(Exec::default(), ds, hp)
}

pub fn vb_init_with(exec: Exec, ds: &Dataset, hp: &HyperParams) -> Result<VbState> {
    check_shapes(ds, hp)?;
    let v = ds.genes();
    let p = ds.dim();
    let mut state = VbState {
        a_rho: hp.a0,
        b_rho: hp.b0,
        mu_beta: VecBatch::replicate(&hp.K0, v),
        lambda_beta: MatBatch::replicate(&hp.Lambda0, v),
        k0k: hp.K0.clone(),
        lambda0l_inv: hp.lambda0_inv()?,
        genes: v,
        nu: f64::from(hp.n0) + v as f64,
        beta_cov: MatBatch::zeros(v, p, p),
        e_bbt: MatBatch::zeros(v, p, p),
        lambda0l: hp.Lambda0.clone(),
        e_lambda: Mat::zeros(p, p),
        e_lambda_k: Vector::zeros(p),
        e_rho: 0.0,
    };
    state.refresh_beta(exec)?;
    state.refresh_global()?;
    Ok(state)
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let diff: f64 = new.iter().zip(old).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = old.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(f64::MIN_POSITIVE)
}

/// Relative parameter changes produced by one sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VbDeltas {
    pub k0k: f64,
    pub rho: f64,
    pub lambda0l_inv: f64,
}

impl VbDeltas {
    pub fn max(&self) -> f64 {
        self.k0k.max(self.rho).max(self.lambda0l_inv)
    }
}

/// One coordinate-ascent sweep.
pub fn vb_step(exec: Exec, state: &VbState, ds: &Dataset, hp: &HyperParams) -> Result<VbState> {
    vb_step_deltas(exec, state, ds, hp).map(|(s, _)| s)
}

fn vb_step_deltas(exec: Exec, state: &VbState, ds: &Dataset, hp: &HyperParams) -> Result<(VbState, VbDeltas)> {
    if ds.genes() != state.genes || ds.dim() != state.dim() {
        return Err(Error::Shape("state does not match the dataset".into()));
    }
    let v = ds.genes();
    let vf = v as f64;
    let mut s = state.clone();
    let d_cols = MatBatch::from_columns(ds.d());

    // (1) E[β_i β_iᵀ]
    s.refresh_beta(exec)?;
    // (2)-(3) E[Λ], E[ΛK]
    s.refresh_global()?;

    // (4) Q(ρ)
    let e_bbt = &s.e_bbt;
    let mu = &s.mu_beta;
    let sq = exec.map_indices(v, |i| {
        let d = ds.d().item(i);
        let y = ds.centered(i);
        y * y - 2.0 * y * small::dot(d, mu.item(i)) + small::quad_form(e_bbt.item(i), d)
    });
    s.a_rho = hp.a0 + 0.5 * vf;
    s.b_rho = hp.b0 + 0.5 * reduce_scalars(exec, &sq)?;
    s.e_rho = s.a_rho / s.b_rho;

    // (5) Q(β_i)
    let e_rho = s.e_rho;
    s.lambda_beta = gemm_batched(
        exec,
        Operand::Batch(&d_cols),
        false,
        Operand::Batch(&d_cols),
        true,
        e_rho,
        1.0,
        MatBatch::replicate(&s.e_lambda, v),
    )?;
    s.beta_cov = spd_inverse_batched(exec, &s.lambda_beta)?;
    let p = ds.dim();
    let e_lk = s.e_lambda_k.as_slice();
    let cov = &s.beta_cov;
    exec.for_each_item(s.mu_beta.as_mut_slice(), p, |i, out| {
        let d = ds.d().item(i);
        let w = e_rho * ds.centered(i);
        let rhs: Vec<f64> = e_lk.iter().zip(d).map(|(a, b)| a + w * b).collect();
        small::mat_vec(cov.item(i), &rhs, out);
        Ok(())
    })?;

    // (6) Q(K, Λ)
    s.e_bbt = outer_plus(exec, &s.mu_beta, s.beta_cov.clone())?;
    let q_n = hp.q0 + vf;
    let sum_mu = reduce_vecs(exec, &s.mu_beta)?;
    let sum_bbt = reduce_mats(exec, &s.e_bbt)?;
    s.k0k = sum_mu.add(&hp.K0.scale(hp.q0))?.scale(1.0 / q_n);
    s.lambda0l_inv = hp
        .lambda0_inv()?
        .add(&sum_bbt)?
        .add(&Mat::outer(&hp.K0, &hp.K0).scale(hp.q0))?
        .sub(&Mat::outer(&s.k0k, &s.k0k).scale(q_n))?
        .symmetrized();

    // (7) refresh expectations for the next sweep
    s.refresh_global()?;

    let deltas = VbDeltas {
        k0k: relative_change(s.k0k.as_slice(), state.k0k.as_slice()),
        rho: relative_change(&[s.e_rho], &[state.a_rho / state.b_rho]),
        lambda0l_inv: relative_change(s.lambda0l_inv.as_slice(), state.lambda0l_inv.as_slice()),
    };
    Ok((s, deltas))
}

/// `E[ln |Λ|]` under `Wishart(ν, W)`, given `ln |W|`.
fn expected_ln_det(p: usize, nu: f64, ln_det_w: f64) -> f64 {
    mv_digamma(p, nu) + p as f64 * 2f64.ln() + ln_det_w
}

/// Log normalizer `ln B(W, ν)` of a Wishart density; `None` when the
/// distribution is improper (`ν ≤ p − 1`).
fn wishart_ln_b(p: usize, nu: f64, ln_det_w: f64) -> Option<f64> {
    let pf = p as f64;
    ln_mv_gamma(p, 0.5 * nu).map(|g| -0.5 * nu * ln_det_w - 0.5 * nu * pf * 2f64.ln() - g)
}

/// The evidence lower bound `E_Q[ln P(r, β, K, Λ, ρ)] − E_Q[ln Q]`.
///
/// When `n0 ≤ p − 1` the Wishart prior has no normalizing constant and its
/// (constant) log normalizer is dropped; the bound is then defined up to
/// that constant, which does not affect monotonicity or differences.
pub fn vb_elbo(state: &VbState, ds: &Dataset, hp: &HyperParams) -> Result<f64> {
    vb_elbo_with(Exec::default(), state, ds, hp)
}

pub fn vb_elbo_with(exec: Exec, state: &VbState, ds: &Dataset, hp: &HyperParams) -> Result<f64> {
    let v = ds.genes();
    let vf = v as f64;
    let p = ds.dim();
    let pf = p as f64;
    let ln_2pi = (2.0 * PI).ln();
    let nu = state.nu;
    let q_n = hp.q0 + vf;
    let (a, b) = (state.a_rho, state.b_rho);
    let e_rho = a / b;
    let e_ln_rho = digamma(a) - b.ln();

    let w = &state.lambda0l;
    let ln_det_w = w.ln_det_spd()?;
    let e_ln_det = expected_ln_det(p, nu, ln_det_w);
    let e_lambda = w.scale(nu);
    let m_k = &state.k0k;

    let mu = &state.mu_beta;
    let e_bbt = &state.e_bbt;
    let terms = exec.map_indices(v, |i| -> Result<[f64; 3]> {
        let d = ds.d().item(i);
        let y = ds.centered(i);
        let m = mu.item(i);
        let sq = y * y - 2.0 * y * small::dot(d, m) + small::quad_form(e_bbt.item(i), d);
        // E[(β−K)(β−K)ᵀ] up to the K-covariance term: E[ββᵀ] − m m_Kᵀ − m_K mᵀ + m_K m_Kᵀ
        let mut dev = e_bbt.item(i).to_vec();
        for r in 0..p {
            for c in 0..p {
                dev[r * p + c] += -m[r] * m_k[c] - m_k[r] * m[c] + m_k[r] * m_k[c];
            }
        }
        let tr: f64 = (0..p)
            .map(|r| (0..p).map(|c| e_lambda[(r, c)] * dev[c * p + r]).sum::<f64>())
            .sum();
        let ln_det_prec = small::ln_det_spd(state.lambda_beta.item(i), p)?;
        Ok([sq, tr, ln_det_prec])
    });
    let terms = terms.into_iter().collect::<Result<Vec<_>>>()?;
    let flat: Vec<f64> = terms.iter().flatten().copied().collect();
    let sums = crate::linalg::reduce_items(exec, &flat, 3)?;
    let (sum_sq, sum_tr, sum_ln_det_prec) = (sums[0], sums[1], sums[2]);

    let lik = 0.5 * vf * e_ln_rho - 0.5 * vf * ln_2pi - 0.5 * e_rho * sum_sq;
    let beta_prior = 0.5 * vf * e_ln_det - 0.5 * vf * pf * ln_2pi - 0.5 * (sum_tr + vf * pf / q_n);
    let dk = m_k.sub(&hp.K0)?;
    let k_prior = 0.5 * pf * hp.q0.ln() + 0.5 * e_ln_det
        - 0.5 * pf * ln_2pi
        - 0.5 * hp.q0 * (small::quad_form(e_lambda.as_slice(), dk.as_slice()) + pf / q_n);
    let n0 = f64::from(hp.n0);
    let prior_ln_b = wishart_ln_b(p, n0, hp.Lambda0.ln_det_spd()?).unwrap_or(0.0);
    let lambda_prior = prior_ln_b + 0.5 * (n0 - pf - 1.0) * e_ln_det
        - 0.5 * hp.lambda0_inv()?.matmul(&e_lambda)?.trace();
    let rho_prior = hp.a0 * hp.b0.ln() - ln_gamma(hp.a0) + (hp.a0 - 1.0) * e_ln_rho - hp.b0 * e_rho;

    let h_rho = a - b.ln() + ln_gamma(a) + (1.0 - a) * digamma(a);
    let h_beta = -0.5 * sum_ln_det_prec + 0.5 * vf * pf * (1.0 + ln_2pi);
    let q_ln_b = wishart_ln_b(p, nu, ln_det_w).ok_or_else(|| Error::Parameter("posterior Wishart is improper".into()))?;
    let h_lambda = -q_ln_b - 0.5 * (nu - pf - 1.0) * e_ln_det + 0.5 * nu * pf;
    let h_k = -0.5 * pf * q_n.ln() - 0.5 * e_ln_det + 0.5 * pf * (1.0 + ln_2pi);

    let elbo = lik + beta_prior + k_prior + lambda_prior + rho_prior + h_rho + h_beta + h_lambda + h_k;
    if elbo.is_finite() {
        Ok(elbo)
    } else {
        Err(Error::NonFinite("lower bound"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VbConfig {
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Evaluate the bound every sweep. Without it the stopping rule falls
    /// back to the largest relative parameter change being below `1e-10`.
    pub track_elbo: bool,
}

impl Default for VbConfig {
    fn default() -> Self {
        VbConfig {
            max_iter: 10_000,
            rel_tol: 1e-8,
            track_elbo: true,
        }
    }
}

/// Per-sweep record. `elbo` holds NaN when tracking is disabled.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VbTrace {
    pub elbo: Vec<f64>,
    pub deltas: Vec<VbDeltas>,
    pub converged: bool,
}

impl VbTrace {
    pub fn iterations(&self) -> usize {
        self.elbo.len()
    }

    /// Largest decrease of the bound between consecutive sweeps, relative to
    /// its magnitude (zero or negative when the trace is monotone).
    pub fn worst_decrease(&self) -> f64 {
        self.elbo
            .windows(2)
            .map(|w| (w[0] - w[1]) / w[0].abs().max(1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

const PARAM_TOL: f64 = 1e-10;

pub fn vb_fit(exec: Exec, ds: &Dataset, hp: &HyperParams, config: VbConfig) -> Result<(VbState, VbTrace)> {
    let init = vb_init_with(exec, ds, hp)?;
    vb_fit_from(exec, init, ds, hp, config)
}

/// Continue coordinate ascent from an existing state.
pub fn vb_fit_from(
    exec: Exec,
    mut state: VbState,
    ds: &Dataset,
    hp: &HyperParams,
    config: VbConfig,
) -> Result<(VbState, VbTrace)> {
    if config.max_iter == 0 {
        return Err(Error::Parameter("max_iter must be at least 1".into()));
    }
    let mut trace = VbTrace::default();
    let mut prev = if config.track_elbo {
        Some(vb_elbo_with(exec, &state, ds, hp)?)
    } else {
        None
    };
    for it in 0..config.max_iter {
        let (next, deltas) = vb_step_deltas(exec, &state, ds, hp).map_err(|e| e.at_iteration(it))?;
        state = next;
        let done = if config.track_elbo {
            let elbo = vb_elbo_with(exec, &state, ds, hp).map_err(|e| e.at_iteration(it))?;
            trace.elbo.push(elbo);
            let before = prev.replace(elbo).unwrap_or(elbo);
            (elbo - before).abs() < config.rel_tol * elbo.abs()
        } else {
            trace.elbo.push(f64::NAN);
            deltas.max() < PARAM_TOL
        };
        trace.deltas.push(deltas);
        if done {
            trace.converged = true;
            break;
        }
    }
    Ok((state, trace))
}

/// Draw `(K, Λ, ρ)` jointly from the fitted factors: `Λ` from its Wishart,
/// `K` given that `Λ`, and an independent `ρ`. Draw `s` uses its own stream.
pub fn vb_posterior_sample(
    exec: Exec,
    seed: u64,
    state: &VbState,
    hp: &HyperParams,
    n_samples: usize,
) -> Result<Vec<ModelParams>> {
    let wish = WishartParams::new(state.nu, state.lambda0l.clone())?;
    let gamma = GammaParams::new(state.a_rho, state.b_rho)?;
    let q_n = hp.q0 + state.genes as f64;
    let draws = exec.map_indices(n_samples, |s| -> Result<ModelParams> {
        let mut rng = RngStream::derive(seed, purpose::VB_POSTERIOR, s as u64);
        let lambda = sample_wishart(&mut rng, &wish);
        let k = sample_mvn(&mut rng, &state.k0k, &lambda.scale(q_n), MvnForm::Precision)?;
        let rho = sample_gamma(&mut rng, gamma);
        Ok(ModelParams { K: k, Lambda: lambda, rho })
    });
    draws
        .into_iter()
        .enumerate()
        .map(|(s, d)| d.map_err(|e| e.at_item(s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_hyperparams, random_profiles, synth_generate, ExpressionProfile, ProfileKind, RawRecord};

    fn small_data(seed: u64, genes: usize) -> Dataset {
        let profiles = random_profiles(seed, genes, 3, ProfileKind::Uniform).unwrap();
        synth_generate(seed, &ModelParams::reference_truth(), &profiles).unwrap()
    }

    #[test]
    fn init_follows_defaults() {
        let ds = small_data(1, 20);
        let hp = default_hyperparams(3).unwrap();
        let s = vb_init(&ds, &hp).unwrap();
        assert_eq!(s.a_rho, 0.5);
        for i in 0..20 {
            assert_eq!(s.mu_beta.item(i), &[1.0 / 3.0, 1.0 / 3.0]);
        }
        assert!(s.lambda0l.max_abs_diff(&hp.Lambda0) < 1e-9);
    }

    #[test]
    fn a_rho_is_data_size_only() {
        let ds = small_data(2, 40);
        let hp = default_hyperparams(3).unwrap();
        let (_, _) = vb_fit(Exec::SERIAL, &ds, &hp, VbConfig { max_iter: 3, ..Default::default() }).unwrap();
        let mut s = vb_init(&ds, &hp).unwrap();
        for _ in 0..3 {
            s = vb_step(Exec::SERIAL, &s, &ds, &hp).unwrap();
            assert_eq!(s.a_rho, 20.5);
        }
    }

    #[test]
    fn precision_update_example() {
        let mut hp = default_hyperparams(3).unwrap();
        hp.Lambda0 = Mat::identity(2);
        let rec = RawRecord {
            r: 0.0,
            profile: ExpressionProfile::new(vec![1.0, 0.0, 0.0]).unwrap(),
        };
        let ds = crate::model::transform(&[rec]).unwrap();
        let mut s = vb_init(&ds, &hp).unwrap();
        // force E[Λ] = I and E[ρ] = 1 before the β block
        s.lambda0l_inv = Mat::identity(2).scale(s.nu);
        s.a_rho = 1.0;
        s.b_rho = 1.0;
        s.refresh_global().unwrap();
        let prec = gemm_batched(
            Exec::SERIAL,
            Operand::Batch(&MatBatch::from_columns(ds.d())),
            false,
            Operand::Batch(&MatBatch::from_columns(ds.d())),
            true,
            s.e_rho,
            1.0,
            MatBatch::replicate(&s.e_lambda, 1),
        )
        .unwrap();
        let e = prec.item(0);
        assert!((e[0] - 2.0).abs() < 1e-12 && e[1].abs() < 1e-12 && (e[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn elbo_is_monotone_and_converges() {
        let ds = small_data(3, 300);
        let hp = default_hyperparams(3).unwrap();
        let (_, trace) = vb_fit(Exec::SERIAL, &ds, &hp, VbConfig::default()).unwrap();
        assert!(trace.converged);
        assert!(trace.worst_decrease() <= 1e-9, "{}", trace.worst_decrease());
    }

    #[test]
    fn one_iteration_cap() {
        let ds = small_data(4, 30);
        let hp = default_hyperparams(3).unwrap();
        let (_, trace) = vb_fit(Exec::SERIAL, &ds, &hp, VbConfig { max_iter: 1, ..Default::default() }).unwrap();
        assert_eq!(trace.iterations(), 1);
        assert!(vb_fit(Exec::SERIAL, &ds, &hp, VbConfig { max_iter: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn parameter_fallback_stops() {
        let ds = small_data(5, 100);
        let hp = default_hyperparams(3).unwrap();
        let cfg = VbConfig {
            track_elbo: false,
            max_iter: 20_000,
            ..Default::default()
        };
        let (_, trace) = vb_fit(Exec::SERIAL, &ds, &hp, cfg).unwrap();
        assert!(trace.converged);
        assert!(trace.elbo.iter().all(|e| e.is_nan()));
    }

    #[test]
    fn beta_second_moment_minus_outer_is_spd() {
        let ds = small_data(6, 50);
        let hp = default_hyperparams(3).unwrap();
        let (s, _) = vb_fit(Exec::SERIAL, &ds, &hp, VbConfig { max_iter: 20, ..Default::default() }).unwrap();
        for i in 0..ds.genes() {
            let m = s.mu_beta.get(i);
            let c = s.e_bbt.get(i).sub(&Mat::outer(&m, &m)).unwrap();
            assert!(c.symmetrized().is_positive_definite());
        }
    }

    #[test]
    fn posterior_sample_moments() {
        let ds = small_data(7, 200);
        let hp = default_hyperparams(3).unwrap();
        let (s, _) = vb_fit(Exec::SERIAL, &ds, &hp, VbConfig::default()).unwrap();
        let n = 20_000;
        let draws = vb_posterior_sample(Exec::default(), 11, &s, &hp, n).unwrap();
        let rho: Vec<f64> = draws.iter().map(|d| d.rho).collect();
        let m = rho.iter().sum::<f64>() / n as f64;
        let sd = (s.a_rho).sqrt() / s.b_rho;
        assert!((m - s.e_rho).abs() < 4.0 * sd / (n as f64).sqrt());
        let mut lam = Mat::zeros(2, 2);
        for d in &draws {
            lam = lam.add(&d.Lambda).unwrap();
        }
        let lam = lam.scale(1.0 / n as f64);
        assert!(lam.sub(&s.e_lambda).unwrap().frobenius_norm() < 0.05 * s.e_lambda.frobenius_norm());
    }
}
