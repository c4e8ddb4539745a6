//! Posterior summaries: Gaussian kernel density estimates, their modes, and
//! per-parameter reports with the last network's weight `1 − ΣK` included.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::scalar_series;
use crate::linalg::Exec;
use crate::model::ModelParams;

/// Product-Gaussian KDE over `dim`-dimensional points with a diagonal
/// bandwidth matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    dim: usize,
    samples: Vec<f64>,
    bandwidth: Vec<f64>,
}

/// Scott's rule `n^(−1/(d+4)) σ̂` per coordinate.
pub fn scott_bandwidth(samples: &[f64], dim: usize) -> Result<Vec<f64>> {
    let n = samples.len() / dim;
    if n < 2 {
        return Err(Error::Parameter("KDE needs at least two samples".into()));
    }
    let factor = (n as f64).powf(-1.0 / (dim as f64 + 4.0));
    (0..dim)
        .map(|j| {
            let col = samples.iter().skip(j).step_by(dim);
            let m = col.clone().sum::<f64>() / n as f64;
            let var = col.map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let h = factor * var.sqrt();
            if h > 0.0 && h.is_finite() {
                Ok(h)
            } else {
                Err(Error::Parameter(format!("zero-variance samples in coordinate {j}: no bandwidth")))
            }
        })
        .collect()
}

/// Fit a KDE to `samples` (row-major, `dim` values per point). `bandwidth`
/// overrides Scott's rule when given.
pub fn kde_fit(samples: &[f64], dim: usize, bandwidth: Option<Vec<f64>>) -> Result<KdeModel> {
    if dim == 0 || samples.len() % dim != 0 {
        return Err(Error::Shape(format!("{} values are not points of dimension {dim}", samples.len())));
    }
    if samples.len() / dim < 2 {
        return Err(Error::Parameter("KDE needs at least two samples".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("KDE sample"));
    }
    let bandwidth = match bandwidth {
        Some(h) => {
            if h.len() != dim || h.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Parameter("bandwidth must be positive, one per dimension".into()));
            }
            h
        }
        None => scott_bandwidth(samples, dim)?,
    };
    Ok(KdeModel {
        dim,
        samples: samples.to_vec(),
        bandwidth,
    })
}

pub fn kde_fit_1d(samples: &[f64], bandwidth: Option<f64>) -> Result<KdeModel> {
    kde_fit(samples, 1, bandwidth.map(|h| vec![h]))
}

impl KdeModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let norm: f64 = self.bandwidth.iter().map(|h| h * (2.0 * PI).sqrt()).product();
        let sum: f64 = self
            .samples
            .chunks(self.dim)
            .map(|s| {
                let q: f64 = s
                    .iter()
                    .zip(x)
                    .zip(&self.bandwidth)
                    .map(|((s, x), h)| ((x - s) / h).powi(2))
                    .sum();
                (-0.5 * q).exp()
            })
            .sum();
        sum / (norm * self.len() as f64)
    }

    /// Per-coordinate `(min, max)` of the samples.
    fn extent(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|j| {
                self.samples
                    .iter()
                    .skip(j)
                    .step_by(self.dim)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
            })
            .collect()
    }
}

/// Evaluation grid: `points` per dimension spanning the sample range padded
/// by `pad` bandwidths on each side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub pad: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: 512, pad: 4.0 }
    }
}

pub const MIN_GRID_POINTS: usize = 256;
const TIE_TOL: f64 = 1e-12;
const GOLDEN_ITERS: usize = 3;

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn axes(model: &KdeModel, spec: GridSpec) -> Result<Vec<Vec<f64>>> {
    if spec.points < MIN_GRID_POINTS {
        return Err(Error::Parameter(format!(
            "grid needs at least {MIN_GRID_POINTS} points per dimension, got {}",
            spec.points
        )));
    }
    Ok(model
        .extent()
        .into_iter()
        .zip(&model.bandwidth)
        .map(|((lo, hi), h)| axis(lo - spec.pad * h, hi + spec.pad * h, spec.points))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub location: Vec<f64>,
    pub density: f64,
    /// Another, non-adjacent grid point tied with the maximum.
    pub multimodal: bool,
}

/// Grid argmax refined by golden-section search along each coordinate.
pub fn kde_mode(model: &KdeModel, spec: GridSpec) -> Result<Mode> {
    kde_mode_with(Exec::default(), model, spec)
}

pub fn kde_mode_with(exec: Exec, model: &KdeModel, spec: GridSpec) -> Result<Mode> {
    let axes = axes(model, spec)?;
    let d = model.dim;
    let total: usize = axes.iter().map(Vec::len).product();
    let point = |mut flat: usize| -> Vec<usize> {
        let mut idx = vec![0; d];
        for j in (0..d).rev() {
            idx[j] = flat % axes[j].len();
            flat /= axes[j].len();
        }
        idx
    };
    let dens = exec.map_indices(total, |flat| {
        let x: Vec<f64> = point(flat).iter().enumerate().map(|(j, &k)| axes[j][k]).collect();
        model.density(&x)
    });
    let best = dens.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..total).filter(|&k| dens[k] >= best - TIE_TOL).collect();
    let first = ties[0];
    let start = point(first);
    let multimodal = ties.iter().any(|&k| {
        point(k)
            .iter()
            .zip(&start)
            .any(|(a, b)| a.abs_diff(*b) > 1)
    });

    let mut x: Vec<f64> = start.iter().enumerate().map(|(j, &k)| axes[j][k]).collect();
    if !multimodal {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        for j in 0..d {
            let step = axes[j][1] - axes[j][0];
            let (mut a, mut b) = (x[j] - step, x[j] + step);
            let at = |t: f64, x: &mut Vec<f64>| {
                x[j] = t;
                model.density(x)
            };
            for _ in 0..GOLDEN_ITERS {
                let c = b - inv_phi * (b - a);
                let e = a + inv_phi * (b - a);
                if at(c, &mut x) >= at(e, &mut x) {
                    b = e;
                } else {
                    a = c;
                }
            }
            let mid = 0.5 * (a + b);
            let grid_value = axes[j][start[j]];
            x[j] = if at(mid, &mut x) >= at(grid_value, &mut x) { mid } else { grid_value };
        }
        // a constant coordinate factors out of every kernel and peaks at itself
        for (j, xj) in x.iter_mut().enumerate() {
            let first = model.samples[j];
            if model.samples.iter().skip(j).step_by(d).all(|&v| v == first) {
                *xj = first;
            }
        }
    }
    let density = model.density(&x);
    Ok(Mode {
        location: x,
        density,
        multimodal,
    })
}

/// One-dimensional density on a grid, for export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub mode: f64,
}

impl DensityGrid {
    /// Trapezoid rule over the grid.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

pub fn density_grid(model: &KdeModel, spec: GridSpec) -> Result<DensityGrid> {
    if model.dim != 1 {
        return Err(Error::Shape("density grids are one-dimensional".into()));
    }
    let xs = axes(model, spec)?.remove(0);
    let density = Exec::default().map_indices(xs.len(), |k| model.density(&[xs[k]]));
    let mode = kde_mode(model, spec)?.location[0];
    Ok(DensityGrid { x: xs, density, mode })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mode: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub multimodal: bool,
    /// Zero sample variance: the mode is the common value, no KDE was fit.
    pub degenerate: bool,
}

/// Summary of one scalar series with a Scott-bandwidth KDE mode and the
/// central 95% interval.
pub fn summarize_series(name: &str, x: &[f64], spec: GridSpec) -> Result<ParamSummary> {
    if x.len() < 2 {
        return Err(Error::Parameter(format!("{name}: need at least two samples")));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lower, upper) = (quantile(&sorted, 0.025), quantile(&sorted, 0.975));
    if sorted[0] == sorted[sorted.len() - 1] {
        return Ok(ParamSummary {
            name: name.to_string(),
            mode: sorted[0],
            mean,
            lower,
            upper,
            multimodal: false,
            degenerate: true,
        });
    }
    let mode = kde_mode(&kde_fit_1d(x, None)?, spec)?;
    Ok(ParamSummary {
        name: name.to_string(),
        mode: mode.location[0],
        mean,
        lower,
        upper,
        multimodal: mode.multimodal,
        degenerate: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub samples: usize,
    pub parameters: Vec<ParamSummary>,
    /// Per-component KDE modes of `(K_1, …, K_{N−1}, 1 − ΣK)`.
    pub full_weights_mode: Vec<f64>,
    pub full_weights_mean: Vec<f64>,
}

impl Summary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

pub const MIN_SUMMARY_SAMPLES: usize = 100;

/// Named marginal series: `K_1..K_N` (the last formed per draw as `1 − ΣK`),
/// `rho`, and the upper triangle of `Λ`.
pub fn marginal_series(draws: &[ModelParams]) -> Vec<(String, Vec<f64>)> {
    let Some(first) = draws.first() else {
        return Vec::new();
    };
    let p = first.K.len();
    let mut series = scalar_series(draws);
    let last: Vec<f64> = draws.iter().map(|d| 1.0 - d.K.sum()).collect();
    series.insert(p, (format!("K_{}", p + 1), last));
    series
}

pub fn summarize(draws: &[ModelParams], spec: GridSpec) -> Result<Summary> {
    if draws.len() < MIN_SUMMARY_SAMPLES {
        return Err(Error::Parameter(format!(
            "{} samples, need at least {MIN_SUMMARY_SAMPLES}",
            draws.len()
        )));
    }
    let n_weights = draws[0].K.len() + 1;
    let parameters = marginal_series(draws)
        .iter()
        .map(|(name, x)| summarize_series(name, x, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(Summary {
        samples: draws.len(),
        full_weights_mode: parameters[..n_weights].iter().map(|p| p.mode).collect(),
        full_weights_mean: parameters[..n_weights].iter().map(|p| p.mean).collect(),
        parameters,
    })
}
