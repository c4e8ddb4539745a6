//! Expectation maximization for `(K, Λ, ρ)` with the `β_i` as missing data.
//!
//! The updates maximize the β-marginalized likelihood; the priors do not
//! enter (apart from supplying the default starting point).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    gemm_batched, reduce_items, reduce_mats, reduce_vecs, small, spd_inverse_batched, Exec, Mat, MatBatch, Operand,
    VecBatch,
};
use crate::model::{marginal_loglik_with, Dataset, HyperParams, ModelParams};

/// Parameters plus the E-step quantities computed from them.
#[derive(Clone, Debug, PartialEq)]
pub struct EmState {
    pub params: ModelParams,
    /// `Σ_i = [Λ + ρ D_i D_iᵀ]⁻¹`.
    pub sigma: MatBatch,
    /// `M_i = Σ_i [ΛK + ρ D_i (r_i − μ_i)]`.
    pub m: VecBatch,
    /// `S_i = E[(r_i − μ_i − D_iᵀβ_i)²]`.
    pub s: Vec<f64>,
}

/// E-step at `params`. `ρ = 0` is accepted (the data term then vanishes).
pub fn em_estep(exec: Exec, params: &ModelParams, ds: &Dataset) -> Result<EmState> {
    let v = ds.genes();
    let p = ds.dim();
    if params.K.len() != p {
        return Err(Error::Shape(format!("K has {} components, data {p}", params.K.len())));
    }
    if !(params.rho >= 0.0) {
        return Err(Error::Parameter("rho must be non-negative".into()));
    }
    let rho = params.rho;
    let d_cols = MatBatch::from_columns(ds.d());
    let prec = gemm_batched(
        exec,
        Operand::Batch(&d_cols),
        false,
        Operand::Batch(&d_cols),
        true,
        rho,
        1.0,
        MatBatch::replicate(&params.Lambda, v),
    )?;
    let sigma = spd_inverse_batched(exec, &prec)?;
    let lk = params.Lambda.mul_vec(&params.K)?;
    let mut m = VecBatch::zeros(v, p);
    exec.for_each_item(m.as_mut_slice(), p, |i, out| {
        let d = ds.d().item(i);
        let w = rho * ds.centered(i);
        let rhs: Vec<f64> = lk.iter().zip(d).map(|(a, b)| a + w * b).collect();
        small::mat_vec(sigma.item(i), &rhs, out);
        Ok(())
    })?;
    let s = exec.map_indices(v, |i| {
        let d = ds.d().item(i);
        let y = ds.centered(i);
        let mi = m.item(i);
        let dm = small::dot(d, mi);
        y * y - 2.0 * y * dm + dm * dm + small::quad_form(sigma.item(i), d)
    });
    Ok(EmState {
        params: params.clone(),
        sigma,
        m,
        s,
    })
}

/// M-step from the E-step quantities in `state`.
pub fn em_mstep(exec: Exec, state: &EmState) -> Result<ModelParams> {
    let v = state.m.batch();
    if v == 0 {
        return Err(Error::EmptyInput("no genes"));
    }
    let vf = v as f64;
    let sum_s = reduce_items(exec, &state.s, 1)?[0];
    if !(sum_s > 0.0) || !sum_s.is_finite() {
        return Err(Error::Singular(format!("sum of squared residual moments is {sum_s}")));
    }
    let rho = vf / sum_s;
    let k = reduce_vecs(exec, &state.m)?.scale(1.0 / vf);
    let second = gemm_batched(
        exec,
        Operand::Batch(&MatBatch::from_columns(&state.m)),
        false,
        Operand::Batch(&MatBatch::from_columns(&state.m)),
        true,
        1.0,
        1.0,
        state.sigma.clone(),
    )?;
    let cov = reduce_mats(exec, &second)?
        .scale(1.0 / vf)
        .sub(&Mat::outer(&k, &k))?
        .symmetrized();
    let lambda = cov.spd_inverse()?.symmetrized();
    Ok(ModelParams {
        K: k,
        Lambda: lambda,
        rho,
    })
}

/// One E-step at `state.params` followed by the M-step. The returned state
/// holds the new parameters and the E-step quantities that produced them.
pub fn em_step(exec: Exec, state: &EmState, ds: &Dataset) -> Result<EmState> {
    let estep = em_estep(exec, &state.params, ds)?;
    let params = em_mstep(exec, &estep)?;
    Ok(EmState { params, ..estep })
}

/// Default starting point: `K0`, `Λ0`, `ρ = a0/b0`.
pub fn em_default_init(hp: &HyperParams) -> ModelParams {
    ModelParams {
        K: hp.K0.clone(),
        Lambda: hp.Lambda0.clone(),
        rho: hp.a0 / hp.b0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: 1000,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmFit {
    pub params: ModelParams,
    /// Marginal log-likelihood at the start and after every step.
    pub loglik: Vec<f64>,
    /// Parameters after every step.
    pub history: Vec<ModelParams>,
    pub converged: bool,
}

impl EmFit {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    /// Largest relative decrease of the log-likelihood between steps.
    pub fn worst_decrease(&self) -> f64 {
        self.loglik
            .windows(2)
            .map(|w| (w[0] - w[1]) / w[0].abs().max(1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn em_fit(exec: Exec, ds: &Dataset, init: &ModelParams, config: EmConfig) -> Result<EmFit> {
    if config.max_iter == 0 {
        return Err(Error::Parameter("max_iter must be at least 1".into()));
    }
    init.validate()?;
    let mut params = init.clone();
    let mut fit = EmFit {
        params: params.clone(),
        loglik: vec![marginal_loglik_with(exec, ds, &params)?],
        history: Vec::new(),
        converged: false,
    };
    for it in 0..config.max_iter {
        let step = || -> Result<(ModelParams, f64)> {
            let estep = em_estep(exec, &params, ds)?;
            let next = em_mstep(exec, &estep)?;
            let ll = marginal_loglik_with(exec, ds, &next)?;
            Ok((next, ll))
        };
        let (next, ll) = step().map_err(|e| e.at_iteration(it))?;
        let prev = *fit.loglik.last().expect("loglik starts non-empty");
        fit.loglik.push(ll);
        fit.history.push(next.clone());
        params = next;
        if (ll - prev).abs() < config.rel_tol * ll.abs() {
            fit.converged = true;
            break;
        }
    }
    fit.params = params;
    Ok(fit)
}
