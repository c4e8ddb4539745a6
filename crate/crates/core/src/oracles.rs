//! Brute-force reference computations used to check the engines.
//!
//! These avoid the engines' code paths on purpose: the quadrature works on
//! scalar formulas, the Monte Carlo bound draws through `rand_distr` with a
//! Bartlett Wishart, and the network evaluator recurses on node definitions.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::boolnet::{BooleanNetwork, FaultMap, NodeKind, Stimulus};
use crate::error::{Error, Result};
use crate::linalg::{Exec, Mat, Vector};
use crate::model::{Dataset, HyperParams};
use crate::samplers::{purpose, RngStream};
use crate::special::ln_gamma;
use crate::vb::VbState;

// ---------------------------------------------------------------- sums

/// Neumaier-compensated serial sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

// ---------------------------------------------------------------- KS

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at α = 0.001.
pub fn ks_critical_001(n: usize) -> f64 {
    1.9495 / (n as f64).sqrt()
}

// ---------------------------------------------------------------- scalar densities

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean).powi(2) / var)
}

fn ln_gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Marginal log-likelihood for one-dimensional `K`, `Λ`, `β`.
fn scalar_marginal_loglik(ds: &Dataset, k: f64, lambda: f64, rho: f64) -> f64 {
    (0..ds.genes())
        .map(|i| {
            let d = ds.d().item(i)[0];
            ln_normal(ds.centered(i), d * k, 1.0 / rho + d * d / lambda)
        })
        .sum()
}

/// `∫ N(r | dβ + μ, 1/ρ) N(β | K, 1/Λ) dβ` by Simpson's rule over ±12
/// prior standard deviations, returned as a log.
pub fn single_gene_evidence(r: f64, d: f64, mu: f64, k: f64, lambda: f64, rho: f64) -> f64 {
    let sd = lambda.powf(-0.5);
    let (lo, hi) = (k - 12.0 * sd, k + 12.0 * sd);
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let f = |b: f64| (ln_normal(r, d * b + mu, 1.0 / rho) + ln_normal(b, k, 1.0 / lambda)).exp();
    let mut s = f(lo) + f(hi);
    for j in 1..n {
        s += f(lo + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    (s * h / 3.0).ln()
}

// ---------------------------------------------------------------- quadrature

/// Tensor-grid integration for two-network data. The grid axes are
/// `z = (K − K0)·√(q0 Λ)`, `ln Λ` and `ln ρ`; standardizing `K` by its
/// conditional prior scale removes the funnel at small `Λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub resolution: usize,
    /// Half-width of the box in posterior standard deviations.
    pub width_sds: f64,
    pub max_rounds: usize,
    /// Tolerance on `E[K]` between `resolution` and `2·resolution`.
    pub convergence_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            resolution: 200,
            width_sds: 8.0,
            max_rounds: 40,
            convergence_tol: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub e_k: f64,
    pub e_rho: f64,
    pub e_lambda: f64,
    pub sd_k: f64,
    pub sd_rho: f64,
    /// `ln p(r)` with all priors normalized.
    pub log_evidence: f64,
    /// Integration box per axis: z, ln Λ, ln ρ.
    pub ranges: [(f64, f64); 3],
    /// `|E[K]|` difference between the final resolution and its double.
    pub grid_change: f64,
}

const BOUNDARY_TOL: f64 = 1e-10;

struct Moments {
    log_mass: f64,
    /// Mean and sd of each grid coordinate.
    mean: [f64; 3],
    sd: [f64; 3],
    e_k: f64,
    sd_k: f64,
    e_rho: f64,
    sd_rho: f64,
    e_lambda: f64,
    /// Largest density on the two faces of each axis, relative to the peak.
    boundary: [f64; 3],
}

fn k_of(hp: &HyperParams, z: f64, l: f64) -> f64 {
    hp.K0[0] + z / (hp.q0 * l.exp()).sqrt()
}

/// Log posterior kernel in `(z, ln Λ, ln ρ)`, Jacobians included.
fn log_joint(ds: &Dataset, hp: &HyperParams, z: f64, l: f64, t: f64) -> f64 {
    let lambda = l.exp();
    let rho = t.exp();
    let n0 = f64::from(hp.n0);
    let s0 = hp.Lambda0[(0, 0)];
    // 1-D Wishart(n0, scale s0) is Gamma(n0/2, rate 1/(2 s0))
    let ln_wish = ln_gamma_pdf(lambda, 0.5 * n0, 0.5 / s0);
    scalar_marginal_loglik(ds, k_of(hp, z, l), lambda, rho)
        + ln_normal(z, 0.0, 1.0)
        + ln_wish
        + ln_gamma_pdf(rho, hp.a0, hp.b0)
        + l
        + t
}

fn trapezoid_weight(j: usize, n: usize, h: f64) -> f64 {
    if j == 0 || j + 1 == n {
        0.5 * h
    } else {
        h
    }
}

fn grid_moments(ds: &Dataset, hp: &HyperParams, ranges: &[(f64, f64); 3], n: usize) -> Moments {
    let axis = |a: usize| -> Vec<f64> {
        let (lo, hi) = ranges[a];
        (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
    };
    let (zs, ls, ts) = (axis(0), axis(1), axis(2));
    let h: Vec<f64> = ranges.iter().map(|(lo, hi)| (hi - lo) / (n - 1) as f64).collect();
    let slabs = Exec::PARALLEL.map_indices(n, |a| {
        let mut vals = Vec::with_capacity(n * n);
        for l in &ls {
            for t in &ts {
                vals.push(log_joint(ds, hp, zs[a], *l, *t));
            }
        }
        vals
    });
    let peak = slabs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut boundary = [0.0f64; 3];
    // mass, coordinate sums (3), coordinate squares (3), K, K², ρ, ρ², Λ
    let mut acc = [0.0f64; 12];
    for (a, slab) in slabs.iter().enumerate() {
        for b in 0..n {
            for c in 0..n {
                let f = (slab[b * n + c] - peak).exp();
                for (j, idx) in [a, b, c].into_iter().enumerate() {
                    if idx == 0 || idx + 1 == n {
                        boundary[j] = boundary[j].max(f);
                    }
                }
                let w = trapezoid_weight(a, n, h[0]) * trapezoid_weight(b, n, h[1]) * trapezoid_weight(c, n, h[2]) * f;
                let x = [zs[a], ls[b], ts[c]];
                acc[0] += w;
                for j in 0..3 {
                    acc[1 + j] += w * x[j];
                    acc[4 + j] += w * x[j] * x[j];
                }
                let k = k_of(hp, zs[a], ls[b]);
                let rho = ts[c].exp();
                acc[7] += w * k;
                acc[8] += w * k * k;
                acc[9] += w * rho;
                acc[10] += w * rho * rho;
                acc[11] += w * ls[b].exp();
            }
        }
    }
    let mass = acc[0];
    let mean = [acc[1] / mass, acc[2] / mass, acc[3] / mass];
    let sd = [0, 1, 2].map(|j| (acc[4 + j] / mass - mean[j] * mean[j]).max(0.0).sqrt());
    let e_k = acc[7] / mass;
    let e_rho = acc[9] / mass;
    Moments {
        log_mass: peak + mass.ln(),
        mean,
        sd,
        e_k,
        sd_k: (acc[8] / mass - e_k * e_k).max(0.0).sqrt(),
        e_rho,
        sd_rho: (acc[10] / mass - e_rho * e_rho).max(0.0).sqrt(),
        e_lambda: acc[11] / mass,
        boundary,
    }
}

/// Posterior means of `K`, `ρ` (and `Λ`) and the log evidence for a
/// two-network dataset, by iteratively re-centred tensor-grid quadrature.
pub fn oracle_posterior_mean(ds: &Dataset, hp: &HyperParams, spec: QuadratureSpec) -> Result<QuadratureResult> {
    if ds.networks() != 2 {
        return Err(Error::Shape("quadrature oracle needs two networks".into()));
    }
    hp.validate(1)?;
    if spec.resolution < 200 {
        return Err(Error::Parameter("quadrature resolution must be at least 200".into()));
    }
    let lam_guess = f64::from(hp.n0) * hp.Lambda0[(0, 0)];
    let mut ranges = [
        (-8.0, 8.0),
        (lam_guess.ln() - 8.0, lam_guess.ln() + 8.0),
        ((hp.a0 / hp.b0).ln() - 8.0, (hp.a0 / hp.b0).ln() + 8.0),
    ];
    let coarse = spec.resolution.min(120);
    let mut settled = false;
    let mut widths = [spec.width_sds; 3];
    for _ in 0..spec.max_rounds {
        let m = grid_moments(ds, hp, &ranges, coarse);
        if !m.log_mass.is_finite() {
            return Err(Error::Range("posterior mass vanished on the grid".into()));
        }
        for j in 0..3 {
            if m.boundary[j] > BOUNDARY_TOL {
                widths[j] *= 1.5;
            }
        }
        let next: [(f64, f64); 3] = [0, 1, 2].map(|j| {
            let half = widths[j] * m.sd[j].max(1e-12);
            (m.mean[j] - half, m.mean[j] + half)
        });
        let stable = (0..3).all(|j| {
            let width = ranges[j].1 - ranges[j].0;
            (next[j].0 - ranges[j].0).abs() < 0.05 * width && (next[j].1 - ranges[j].1).abs() < 0.05 * width
        });
        ranges = next;
        if stable && m.boundary.iter().all(|&b| b <= BOUNDARY_TOL) {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::Range("integration box did not settle".into()));
    }
    let fine = grid_moments(ds, hp, &ranges, spec.resolution);
    let finer = grid_moments(ds, hp, &ranges, 2 * spec.resolution);
    if fine.boundary.iter().any(|&b| b > 100.0 * BOUNDARY_TOL) {
        return Err(Error::Range("posterior mass reaches the box boundary".into()));
    }
    if !finer.log_mass.is_finite() {
        return Err(Error::Range("normalization mass underflowed".into()));
    }
    let grid_change = (fine.e_k - finer.e_k).abs();
    if grid_change >= spec.convergence_tol {
        return Err(Error::Range(format!("E[K] moved {grid_change:.2e} when doubling the grid")));
    }
    Ok(QuadratureResult {
        e_k: finer.e_k,
        e_rho: finer.e_rho,
        e_lambda: finer.e_lambda,
        sd_k: finer.sd_k,
        sd_rho: finer.sd_rho,
        log_evidence: finer.log_mass,
        ranges,
        grid_change,
    })
}

// ---------------------------------------------------------------- brute-force ML

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Maximizer `(K, Λ, ρ)` of the marginal likelihood for two-network data:
/// a coarse grid over `(K, ln Λ, ln ρ)` followed by cyclic golden-section
/// polishing.
pub fn oracle_max_marginal(ds: &Dataset) -> Result<(f64, f64, f64)> {
    if ds.networks() != 2 {
        return Err(Error::Shape("maximization oracle needs two networks".into()));
    }
    let f = |k: f64, l: f64, t: f64| scalar_marginal_loglik(ds, k, l.exp(), t.exp());
    let n = 41;
    let ax = |lo: f64, hi: f64| -> Vec<f64> { (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect() };
    let (ks, ls, ts) = (ax(-3.0, 3.0), ax(-6.0, 16.0), ax(-6.0, 16.0));
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
    for &k in &ks {
        for &l in &ls {
            for &t in &ts {
                let v = f(k, l, t);
                if v > best.0 {
                    best = (v, k, l, t);
                }
            }
        }
    }
    let (_, mut k, mut l, mut t) = best;
    let mut step = [ks[1] - ks[0], ls[1] - ls[0], ts[1] - ts[0]];
    for _ in 0..2000 {
        let before = f(k, l, t);
        k = golden_max(|x| f(x, l, t), k - step[0], k + step[0], 60);
        l = golden_max(|x| f(k, x, t), l - step[1], l + step[1], 60);
        t = golden_max(|x| f(k, l, x), t - step[2], t + step[2], 60);
        step = step.map(|s| (s * 0.9).max(1e-3));
        if (f(k, l, t) - before).abs() < 1e-14 * before.abs().max(1.0) {
            break;
        }
    }
    Ok((k, l.exp(), t.exp()))
}

// ---------------------------------------------------------------- Monte Carlo bound

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub draws: usize,
    pub excluded: usize,
}

/// Mean and standard error of `f(0..n)`, skipping non-finite values.
pub fn mc_average(n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> McEstimate {
    let values = Exec::PARALLEL.map_indices(n, f);
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let m = finite.len() as f64;
    let estimate = compensated_sum(&finite) / m;
    let var = finite.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    McEstimate {
        estimate,
        std_error: (var / m).sqrt(),
        draws: finite.len(),
        excluded: n - finite.len(),
    }
}

/// One joint draw of the unknowns.
#[derive(Clone, Debug, PartialEq)]
#[allow(non_snake_case)]
pub struct LatentDraw {
    pub rho: f64,
    pub Lambda: Mat,
    pub K: Vector,
    pub beta: Vec<Vector>,
}

fn ln_mvn_prec(x: &[f64], mean: &[f64], prec: &Mat) -> Result<f64> {
    let p = x.len() as f64;
    let dev: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let q = crate::linalg::small::quad_form(prec.as_slice(), &dev);
    Ok(0.5 * prec.ln_det_spd()? - 0.5 * p * (2.0 * PI).ln() - 0.5 * q)
}

fn ln_mv_gamma_local(p: usize, x: f64) -> f64 {
    let pf = p as f64;
    pf * (pf - 1.0) / 4.0 * PI.ln() + (0..p).map(|j| ln_gamma(x - j as f64 / 2.0)).sum::<f64>()
}

/// Wishart log density with dof `n` and scale `s`. With `n ≤ p − 1` the
/// normalizer does not exist and only the kernel is returned.
fn ln_wishart(x: &Mat, n: f64, s: &Mat) -> Result<f64> {
    let p = x.rows();
    let pf = p as f64;
    let s_inv = s.inverse()?;
    let kernel = 0.5 * (n - pf - 1.0) * x.ln_det_spd()? - 0.5 * s_inv.matmul(x)?.trace();
    if n > pf - 1.0 {
        Ok(kernel - 0.5 * n * pf * 2f64.ln() - 0.5 * n * s.ln_det_spd()? - ln_mv_gamma_local(p, 0.5 * n))
    } else {
        Ok(kernel)
    }
}

fn bartlett(rng: &mut RngStream, nu: f64, scale: &Mat) -> Result<Mat> {
    let p = scale.rows();
    let l = scale.cholesky()?;
    let mut a = Mat::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(nu - i as f64).map_err(|e| Error::Parameter(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let la = l.matmul(&a)?;
    Ok(la.matmul(&la.transpose())?.symmetrized())
}

fn draw_mvn_prec(rng: &mut RngStream, mean: &Vector, prec: &Mat) -> Result<Vector> {
    let cov = prec.inverse()?.symmetrized();
    let l = cov.cholesky()?;
    let z: Vec<f64> = (0..mean.len()).map(|_| StandardNormal.sample(rng)).collect();
    mean.add(&l.mul_vec(&Vector::new(z)?)?)
}

/// Draw from the variational factors of `state`.
pub fn draw_from_q(rng: &mut RngStream, state: &VbState, hp: &HyperParams) -> Result<LatentDraw> {
    let rho = Gamma::new(state.a_rho, 1.0 / state.b_rho)
        .map_err(|e| Error::Parameter(e.to_string()))?
        .sample(rng);
    let lambda = bartlett(rng, state.nu(), state.lambda0l())?;
    let q_n = hp.q0 + state.genes() as f64;
    let k = draw_mvn_prec(rng, &state.k0k, &lambda.scale(q_n))?;
    let beta = (0..state.genes())
        .map(|i| draw_mvn_prec(rng, &state.mu_beta.get(i), &state.lambda_beta.get(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LatentDraw {
        rho,
        Lambda: lambda,
        K: k,
        beta,
    })
}

/// `ln P(Z, D) − ln Q(Z)` at one draw.
pub fn elbo_integrand(z: &LatentDraw, state: &VbState, ds: &Dataset, hp: &HyperParams) -> Result<f64> {
    let q_n = hp.q0 + state.genes() as f64;
    let mut ln_p = ln_gamma_pdf(z.rho, hp.a0, hp.b0)
        + ln_wishart(&z.Lambda, f64::from(hp.n0), &hp.Lambda0)?
        + ln_mvn_prec(z.K.as_slice(), hp.K0.as_slice(), &z.Lambda.scale(hp.q0))?;
    let mut ln_q = ln_gamma_pdf(z.rho, state.a_rho, state.b_rho)
        + ln_wishart(&z.Lambda, state.nu(), state.lambda0l())?
        + ln_mvn_prec(z.K.as_slice(), state.k0k.as_slice(), &z.Lambda.scale(q_n))?;
    for (i, b) in z.beta.iter().enumerate() {
        let d = ds.d().item(i);
        let fit: f64 = d.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
        ln_p += ln_normal(ds.r()[i], ds.mu()[i] + fit, 1.0 / z.rho);
        ln_p += ln_mvn_prec(b.as_slice(), z.K.as_slice(), &z.Lambda)?;
        ln_q += ln_mvn_prec(b.as_slice(), state.mu_beta.item(i), &state.lambda_beta.get(i))?;
    }
    Ok(ln_p - ln_q)
}

/// Monte Carlo estimate of the lower bound from `draws` samples of `Q`.
pub fn oracle_mc_elbo(seed: u64, state: &VbState, ds: &Dataset, hp: &HyperParams, draws: usize) -> McEstimate {
    mc_average(draws, |s| {
        let mut rng = RngStream::derive(seed, purpose::ORACLE, s as u64);
        draw_from_q(&mut rng, state, hp)
            .and_then(|z| elbo_integrand(&z, state, ds, hp))
            .unwrap_or(f64::NAN)
    })
}

// ---------------------------------------------------------------- Boolean networks

fn naive_value(
    net: &BooleanNetwork,
    id: usize,
    fault: &BTreeMap<usize, bool>,
    drugs: &[usize],
    stim: &Stimulus,
) -> Result<bool> {
    if let Some(&v) = fault.get(&id) {
        return Ok(v);
    }
    if drugs.contains(&id) {
        return Ok(false);
    }
    let node = &net.nodes()[id];
    match &node.kind {
        NodeKind::Input => stim
            .assignment
            .get(&node.name)
            .copied()
            .ok_or_else(|| Error::Reference(format!("input `{}` is not set", node.name))),
        NodeKind::Gate { op, fanin } => {
            let vals = fanin
                .iter()
                .map(|&f| naive_value(net, f, fault, drugs, stim))
                .collect::<Result<Vec<_>>>()?;
            Ok(match op {
                crate::boolnet::GateOp::And => vals.iter().all(|&b| b),
                crate::boolnet::GateOp::Or => vals.iter().any(|&b| b),
                crate::boolnet::GateOp::Not => !vals[0],
                crate::boolnet::GateOp::Buf => vals[0],
            })
        }
    }
}

/// Output values by direct recursion from each output (exponential in
/// depth; fine for toy networks).
pub fn naive_evaluate(net: &BooleanNetwork, fault: &FaultMap, stim: &Stimulus) -> Result<BTreeMap<String, bool>> {
    let fault = fault
        .overrides
        .iter()
        .map(|(n, &v)| Ok((net.node_id(n)?, v)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let drugs = stim.drugs.iter().map(|n| net.node_id(n)).collect::<Result<Vec<_>>>()?;
    net.outputs()
        .map(|o| Ok((o.to_string(), naive_value(net, net.node_id(o)?, &fault, &drugs, stim)?)))
        .collect()
}

/// Every assignment of the network's inputs, in binary counting order.
pub fn all_assignments(net: &BooleanNetwork) -> Vec<Stimulus> {
    let inputs: Vec<&str> = net.inputs().collect();
    (0..1u64 << inputs.len())
        .map(|code| {
            let mut s = Stimulus::default();
            for (j, name) in inputs.iter().enumerate() {
                s = s.set(name, (code >> j) & 1 == 1);
            }
            s
        })
        .collect()
}

/// Profiles (stimulus-major, then outputs in declaration order) computed
/// with [`naive_evaluate`].
pub fn truth_table_profiles(net: &BooleanNetwork, faults: &[FaultMap], stimuli: &[Stimulus]) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for stim in stimuli {
        let per_net = faults
            .iter()
            .map(|f| naive_evaluate(net, f, stim))
            .collect::<Result<Vec<_>>>()?;
        for o in net.outputs() {
            rows.push(per_net.iter().map(|m| f64::from(u8::from(m[o]))).collect());
        }
    }
    Ok(rows)
}

/// Text of a random acyclic netlist: gate `g_j` draws fan-ins from inputs
/// and earlier gates only. The last `outputs` gates are outputs.
pub fn random_netlist(rng: &mut RngStream, inputs: usize, gates: usize, outputs: usize) -> String {
    let mut names: Vec<String> = (0..inputs).map(|i| format!("x{i}")).collect();
    let mut text: String = names.iter().map(|n| format!("input {n}\n")).collect();
    for g in 0..gates {
        let op = ["AND", "OR", "NOT", "BUF"][rng.below(4)];
        let arity = if matches!(op, "NOT" | "BUF") { 1 } else { 2 + rng.below(2) };
        let fanin: Vec<&str> = (0..arity).map(|_| names[rng.below(names.len())].as_str()).collect();
        text.push_str(&format!("gate g{g} = {op}({})\n", fanin.join(", ")));
        names.push(format!("g{g}"));
    }
    for g in gates.saturating_sub(outputs)..gates {
        text.push_str(&format!("output g{g}\n"));
    }
    text
}

/// A random fault map over the gates of `net` (each gate stuck with
/// probability `p_fault`).
pub fn random_faults(rng: &mut RngStream, net: &BooleanNetwork, p_fault: f64) -> FaultMap {
    let mut f = FaultMap::none();
    for node in net.nodes() {
        if matches!(node.kind, NodeKind::Gate { .. }) && rng.uniform() < p_fault {
            f = f.stuck(&node.name, rng.uniform() < 0.5);
        }
    }
    f
}
