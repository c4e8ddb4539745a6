//! Gibbs sampler over the full conditionals of `(Λ, K, β, ρ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    gemm_batched, reduce_mats, reduce_scalars, reduce_vecs, small, spd_inverse_batched, Exec, Mat, MatBatch, Operand,
    VecBatch, Vector,
};
use crate::model::{Dataset, HyperParams, ModelParams};
use crate::samplers::{
    purpose, sample_gamma, sample_mvn, sample_mvn_batched, sample_wishart, GammaParams, MvnForm, RngStream,
    WishartParams,
};

/// Current draw of every unknown.
#[derive(Clone, Debug, PartialEq)]
#[allow(non_snake_case)]
pub struct ChainState {
    pub K: Vector,
    pub Lambda: Mat,
    pub rho: f64,
    pub beta: VecBatch,
}

impl ChainState {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            K: self.K.clone(),
            Lambda: self.Lambda.clone(),
            rho: self.rho,
        }
    }
}

/// Starting point of a chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GibbsInit {
    /// `K ← K0`, `Λ ← Λ0`, `ρ ← a0/b0`, `β_i ← K0`.
    #[default]
    Prior,
    /// Random start around the prior point, for multi-chain diagnostics.
    Overdispersed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    #[serde(default)]
    pub init: GibbsInit,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            iterations: 10_000,
            burn_in: 2_000,
            thin: 1,
            seed: 0,
            init: GibbsInit::Prior,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Parameter("thin must be at least 1".into()));
        }
        if self.iterations <= self.burn_in {
            return Err(Error::Parameter(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        Ok(())
    }

    /// Whether iteration `t` (1-based) is retained.
    pub fn keeps(&self, t: usize) -> bool {
        t > self.burn_in && (t - self.burn_in) % self.thin == 0
    }

    pub fn kept_count(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub config: GibbsConfig,
    /// Every iteration's `(K, Λ, ρ)`, index `t − 1` for iteration `t`.
    pub trace: Vec<ModelParams>,
    /// Retained draws after burn-in and thinning.
    pub samples: Vec<ModelParams>,
    /// Iteration number of each retained draw.
    pub kept_iterations: Vec<usize>,
}

/// Random streams consumed by the sampler: one for the global blocks and
/// one per gene for the `β_i` draws.
pub struct GibbsStreams {
    pub global: RngStream,
    pub genes: Vec<RngStream>,
}

impl GibbsStreams {
    pub fn new(seed: u64, genes: usize) -> Self {
        GibbsStreams {
            global: RngStream::derive(seed, purpose::GIBBS_GLOBAL, 0),
            genes: RngStream::family(seed, purpose::GIBBS_GENES, genes),
        }
    }

    /// Gene `i` uses stream index `ids[i]`.
    pub fn with_gene_ids(seed: u64, ids: &[u64]) -> Self {
        GibbsStreams {
            global: RngStream::derive(seed, purpose::GIBBS_GLOBAL, 0),
            genes: ids.iter().map(|&k| RngStream::derive(seed, purpose::GIBBS_GENES, k)).collect(),
        }
    }
}

pub fn initial_state(ds: &Dataset, hp: &HyperParams, init: GibbsInit, seed: u64) -> Result<ChainState> {
    let v = ds.genes();
    match init {
        GibbsInit::Prior => Ok(ChainState {
            K: hp.K0.clone(),
            Lambda: hp.Lambda0.clone(),
            rho: hp.a0 / hp.b0,
            beta: VecBatch::replicate(&hp.K0, v),
        }),
        GibbsInit::Overdispersed => {
            let mut rng = RngStream::derive(seed, purpose::GIBBS_GLOBAL, 1);
            let spread = hp.Lambda0.scale(0.25);
            let k = sample_mvn(&mut rng, &hp.K0, &spread, MvnForm::Precision)?;
            let lambda = hp.Lambda0.scale((rng.normal()).exp());
            let rho = hp.a0 / hp.b0 * (2.0 * rng.normal()).exp();
            Ok(ChainState {
                beta: VecBatch::replicate(&k, v),
                K: k,
                Lambda: lambda,
                rho,
            })
        }
    }
}

/// One sweep: `Λ`, then `K`, then every `β_i`, then `ρ`.
pub fn gibbs_step(
    exec: Exec,
    streams: &mut GibbsStreams,
    state: &ChainState,
    ds: &Dataset,
    hp: &HyperParams,
) -> Result<ChainState> {
    let v = ds.genes();
    let p = ds.dim();
    let vf = v as f64;
    if streams.genes.len() != v || state.beta.batch() != v {
        return Err(Error::Shape("streams or state do not match the dataset".into()));
    }
    let q_n = hp.q0 + vf;

    // Λ | K, β
    let mut scatter = hp.lambda0_inv()?;
    let dk = state.K.sub(&hp.K0)?;
    scatter = scatter.add(&Mat::outer(&dk, &dk).scale(hp.q0))?;
    if v > 0 {
        let mut dev = state.beta.clone();
        let k = state.K.as_slice();
        exec.for_each_item(dev.as_mut_slice(), p, |_, item| {
            item.iter_mut().zip(k).for_each(|(b, k)| *b -= k);
            Ok(())
        })?;
        let cols = MatBatch::from_columns(&dev);
        let outer = gemm_batched(
            exec,
            Operand::Batch(&cols),
            false,
            Operand::Batch(&cols),
            true,
            1.0,
            0.0,
            MatBatch::zeros(v, p, p),
        )?;
        scatter = scatter.add(&reduce_mats(exec, &outer)?)?;
    }
    let wish = WishartParams::new(f64::from(hp.n0) + vf + 1.0, scatter.symmetrized().spd_inverse()?)?;
    let lambda = sample_wishart(&mut streams.global, &wish);

    // K | Λ, β
    let sum_beta = if v > 0 { reduce_vecs(exec, &state.beta)? } else { Vector::zeros(p) };
    let k_mean = sum_beta.add(&hp.K0.scale(hp.q0))?.scale(1.0 / q_n);
    let k = sample_mvn(&mut streams.global, &k_mean, &lambda.scale(q_n), MvnForm::Precision)?;

    // β_i | K, Λ, ρ
    let rho = state.rho;
    let beta = if v > 0 {
        let d_cols = MatBatch::from_columns(ds.d());
        let prec = gemm_batched(
            exec,
            Operand::Batch(&d_cols),
            false,
            Operand::Batch(&d_cols),
            true,
            rho,
            1.0,
            MatBatch::replicate(&lambda, v),
        )?;
        let cov = spd_inverse_batched(exec, &prec)?;
        let lk = lambda.mul_vec(&k)?;
        let mut means = VecBatch::zeros(v, p);
        exec.for_each_item(means.as_mut_slice(), p, |i, out| {
            let d = ds.d().item(i);
            let w = rho * ds.centered(i);
            let rhs: Vec<f64> = lk.iter().zip(d).map(|(a, b)| a + w * b).collect();
            small::mat_vec(cov.item(i), &rhs, out);
            Ok(())
        })?;
        sample_mvn_batched(exec, &mut streams.genes, &means, &prec)?
    } else {
        VecBatch::zeros(0, p)
    };

    // ρ | β
    let sse = if v > 0 {
        let resid = exec.map_indices(v, |i| {
            let e = ds.centered(i) - small::dot(ds.d().item(i), beta.item(i));
            e * e
        });
        reduce_scalars(exec, &resid)?
    } else {
        0.0
    };
    let rho = sample_gamma(&mut streams.global, GammaParams::new(hp.a0 + 0.5 * vf, hp.b0 + 0.5 * sse)?);

    Ok(ChainState {
        K: k,
        Lambda: lambda,
        rho,
        beta,
    })
}

pub fn gibbs_run(exec: Exec, ds: &Dataset, hp: &HyperParams, config: GibbsConfig) -> Result<Chain> {
    let streams = GibbsStreams::new(config.seed, ds.genes());
    gibbs_run_with(exec, ds, hp, config, streams)
}

/// Run with caller-supplied streams (e.g. a gene-to-stream remapping).
pub fn gibbs_run_with(
    exec: Exec,
    ds: &Dataset,
    hp: &HyperParams,
    config: GibbsConfig,
    mut streams: GibbsStreams,
) -> Result<Chain> {
    config.validate()?;
    hp.validate(ds.dim())?;
    let mut state = initial_state(ds, hp, config.init, config.seed)?;
    let mut chain = Chain {
        config,
        trace: Vec::with_capacity(config.iterations),
        samples: Vec::with_capacity(config.kept_count()),
        kept_iterations: Vec::with_capacity(config.kept_count()),
    };
    for t in 1..=config.iterations {
        state = gibbs_step(exec, &mut streams, &state, ds, hp).map_err(|e| e.at_iteration(t))?;
        let draw = state.params();
        if config.keeps(t) {
            chain.samples.push(draw.clone());
            chain.kept_iterations.push(t);
        }
        chain.trace.push(draw);
    }
    Ok(chain)
}

/// Named scalar series extracted from draws: `K_q`, `rho`, then the upper
/// triangle `Lambda_rc` (1-based indices).
pub fn scalar_series(draws: &[ModelParams]) -> Vec<(String, Vec<f64>)> {
    let Some(first) = draws.first() else {
        return Vec::new();
    };
    let p = first.K.len();
    let mut out: Vec<(String, Vec<f64>)> = (0..p)
        .map(|q| (format!("K_{}", q + 1), draws.iter().map(|d| d.K[q]).collect()))
        .collect();
    out.push(("rho".into(), draws.iter().map(|d| d.rho).collect()));
    for r in 0..p {
        for c in r..p {
            out.push((
                format!("Lambda_{}{}", r + 1, c + 1),
                draws.iter().map(|d| d.Lambda[(r, c)]).collect(),
            ));
        }
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn autocovariance(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    (0..n - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum::<f64>() / n as f64
}

/// Effective sample size by Geyer's initial monotone sequence; `None` for a
/// constant series.
pub fn effective_sample_size(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 4 || is_constant(x) {
        return None;
    }
    let m = mean(x);
    let c0 = autocovariance(x, m, 0);
    if c0 <= 0.0 || !c0.is_finite() {
        return None;
    }
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocovariance(x, m, lag) + autocovariance(x, m, lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    Some(n as f64 / tau.max(1.0 / n as f64))
}

/// Split-R̂ from the two halves of one chain; `None` when the within-half
/// variance vanishes.
pub fn split_rhat(x: &[f64]) -> Option<f64> {
    let half = x.len() / 2;
    if half < 2 || is_constant(x) {
        return None;
    }
    let (a, b) = (&x[..half], &x[x.len() - half..]);
    let w = 0.5 * (variance(a) + variance(b));
    if !(w > 0.0) {
        return None;
    }
    let n = half as f64;
    let (ma, mb) = (mean(a), mean(b));
    let grand = 0.5 * (ma + mb);
    let between = n * ((ma - grand).powi(2) + (mb - grand).powi(2));
    let var_plus = (n - 1.0) / n * w + between / n;
    Some((var_plus / w).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostic {
    pub name: String,
    pub ess: Option<f64>,
    pub split_rhat: Option<f64>,
}

pub const MIN_DIAGNOSTIC_SAMPLES: usize = 100;

pub fn gibbs_diagnostics(chain: &Chain) -> Result<Vec<ParamDiagnostic>> {
    series_diagnostics(&chain.samples)
}

pub fn series_diagnostics(draws: &[ModelParams]) -> Result<Vec<ParamDiagnostic>> {
    if draws.len() < MIN_DIAGNOSTIC_SAMPLES {
        return Err(Error::Diagnostic(format!(
            "{} kept samples, need at least {MIN_DIAGNOSTIC_SAMPLES}",
            draws.len()
        )));
    }
    Ok(scalar_series(draws)
        .into_iter()
        .map(|(name, x)| ParamDiagnostic {
            ess: effective_sample_size(&x),
            split_rhat: split_rhat(&x),
            name,
        })
        .collect())
}
