use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tissuemix::analysis::Summary;
use tissuemix::em::EmConfig;
use tissuemix::gibbs::{GibbsInit, ParamDiagnostic};
use tissuemix::linalg::{Exec, Mat, Vector};
use tissuemix::vb::VbConfig;

use crate::error::{CliError, CliResult};

/// Environment variable giving the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "TISSUEMIX_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Vb,
    Gibbs,
    Em,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Vb => "vb",
            Method::Gibbs => "gibbs",
            Method::Em => "em",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Serial,
    Parallel,
}

/// Where the observations come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// A dataset CSV `[gene,]r,d_1..d_N`.
    Csv(PathBuf),
    /// A profiles CSV joined on gene name with a `gene,r` ratios CSV.
    Joined { profiles: PathBuf, ratios: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VbRun {
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Draws from the fitted posterior used for modes and intervals.
    pub posterior_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsRun {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub init: GibbsInit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmRun {
    pub max_iter: usize,
    pub rel_tol: f64,
    /// JSON file with `K`, `Lambda`, `rho`; default start when absent.
    pub init: Option<PathBuf>,
}

/// Everything needed to re-run a fit. Echoed into the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub seed: u64,
    pub data: DataSource,
    pub hyperparams: Option<PathBuf>,
    pub parallel: Parallelism,
    /// Requested worker count; `None` uses the rayon default.
    pub workers: Option<usize>,
    pub deterministic: bool,
    /// KDE grid points per marginal.
    pub grid_points: usize,
    pub vb: VbRun,
    pub gibbs: GibbsRun,
    pub em: EmRun,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.workers == Some(0) {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        if self.grid_points < tissuemix::analysis::MIN_GRID_POINTS {
            return Err(CliError::Usage(format!(
                "--grid-points must be at least {}",
                tissuemix::analysis::MIN_GRID_POINTS
            )));
        }
        match self.method {
            Method::Vb => {
                if self.vb.max_iter == 0 {
                    return Err(CliError::Usage("--max-iter must be at least 1".into()));
                }
                if !(self.vb.rel_tol >= 0.0) {
                    return Err(CliError::Usage("--tol must be non-negative".into()));
                }
                if self.vb.posterior_samples < tissuemix::analysis::MIN_SUMMARY_SAMPLES {
                    return Err(CliError::Usage(format!(
                        "--posterior-samples must be at least {}",
                        tissuemix::analysis::MIN_SUMMARY_SAMPLES
                    )));
                }
            }
            Method::Gibbs => self.gibbs_config().validate()?,
            Method::Em => {
                if self.em.max_iter == 0 {
                    return Err(CliError::Usage("--max-iter must be at least 1".into()));
                }
                if !(self.em.rel_tol >= 0.0) {
                    return Err(CliError::Usage("--tol must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    pub fn exec(&self) -> Exec {
        Exec {
            parallel: self.parallel == Parallelism::Parallel,
            deterministic: self.deterministic,
        }
    }

    pub fn vb_config(&self) -> VbConfig {
        VbConfig {
            max_iter: self.vb.max_iter,
            rel_tol: self.vb.rel_tol,
            track_elbo: true,
        }
    }

    pub fn gibbs_config(&self) -> tissuemix::gibbs::GibbsConfig {
        tissuemix::gibbs::GibbsConfig {
            iterations: self.gibbs.iterations,
            burn_in: self.gibbs.burn_in,
            thin: self.gibbs.thin,
            seed: self.seed,
            init: self.gibbs.init,
        }
    }

    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            max_iter: self.em.max_iter,
            rel_tol: self.em.rel_tol,
        }
    }
}

/// Resolve the worker count: explicit flag, then the environment.
pub fn resolve_workers(flag: Option<usize>) -> CliResult<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("{WORKERS_ENV}=`{v}` is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Run `f` on a pool of `workers` threads (or the global pool).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Estimates {
    pub K: Vector,
    /// `(K_1, …, K_{N−1}, 1 − ΣK)`.
    pub full_weights: Vec<f64>,
    pub rho: f64,
    pub Lambda: Mat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: Method,
    /// How `estimates` were formed from the fit.
    pub estimator: String,
    pub genes: usize,
    pub networks: usize,
    pub estimates: Estimates,
    pub posterior: Option<Summary>,
    pub diagnostics: Option<Vec<ParamDiagnostic>>,
    pub iterations: usize,
    pub converged: Option<bool>,
    /// Final ELBO (vb) or marginal log-likelihood (em).
    pub objective: Option<f64>,
    pub trace: String,
    pub samples: Option<String>,
    pub seed: u64,
    /// Excluded from replay comparisons.
    pub wall_clock_seconds: f64,
    pub config: RunConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(method: Method) -> RunConfig {
        RunConfig {
            method,
            seed: 0,
            data: DataSource::Csv("d.csv".into()),
            hyperparams: None,
            parallel: Parallelism::Parallel,
            workers: None,
            deterministic: true,
            grid_points: 512,
            vb: VbRun {
                max_iter: 10,
                rel_tol: 1e-8,
                posterior_samples: 1000,
            },
            gibbs: GibbsRun {
                iterations: 10,
                burn_in: 2,
                thin: 1,
                init: GibbsInit::Prior,
            },
            em: EmRun {
                max_iter: 10,
                rel_tol: 1e-10,
                init: None,
            },
        }
    }

    #[test]
    fn method_specific_fields_are_checked() {
        for m in [Method::Vb, Method::Gibbs, Method::Em] {
            config(m).validate().unwrap();
        }
        let mut c = config(Method::Gibbs);
        c.gibbs.burn_in = 10;
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
        // the gibbs fields are not looked at for another method
        c.method = Method::Em;
        c.validate().unwrap();
        c.em.rel_tol = f64::NAN;
        assert!(c.validate().is_err());
        let mut c = config(Method::Vb);
        c.vb.posterior_samples = 5;
        assert!(c.validate().is_err());
        let mut c = config(Method::Em);
        c.workers = Some(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = config(Method::Vb);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }

    #[test]
    fn worker_pool_size_is_applied() {
        assert_eq!(with_workers(Some(3), rayon::current_num_threads).unwrap(), 3);
    }
}
