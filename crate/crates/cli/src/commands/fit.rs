use std::path::Path;
use std::time::Instant;

use tissuemix::analysis::{summarize, GridSpec, Summary, MIN_SUMMARY_SAMPLES};
use tissuemix::em::{em_default_init, em_fit};
use tissuemix::gibbs::{gibbs_diagnostics, gibbs_run, scalar_series, ParamDiagnostic, MIN_DIAGNOSTIC_SAMPLES};
use tissuemix::linalg::{Mat, Vector};
use tissuemix::model::{default_hyperparams, full_weights, transform, ExpressionProfile, RawRecord};
use tissuemix::vb::{vb_fit, vb_posterior_sample};
use tissuemix::{Dataset, HyperParams, ModelParams};

use crate::cli::FitArgs;
use crate::config::{
    resolve_workers, with_workers, DataSource, EmRun, Estimates, FitReport, GibbsRun, Method, Parallelism, RunConfig,
    VbRun,
};
use crate::error::{CliError, CliResult};
use crate::formats;

pub const REPORT: &str = "report.json";
pub const TRACE: &str = "trace.csv";
pub const SAMPLES: &str = "samples.csv";

const PAD: f64 = 4.0;

pub fn config_from_args(args: &FitArgs, workers: Option<usize>) -> CliResult<RunConfig> {
    if let Some(path) = &args.replay {
        let report: serde_json::Value = formats::read_json(path)?;
        let echo = report
            .get("config")
            .cloned()
            .ok_or_else(|| CliError::io(path, "no `config` object"))?;
        let mut config: RunConfig = serde_json::from_value(echo).map_err(|e| CliError::io(path, e))?;
        if workers.is_some() {
            config.workers = workers;
        }
        return Ok(config);
    }
    let method = args
        .method
        .ok_or_else(|| CliError::Usage("--method is required (vb, gibbs or em)".into()))?;
    let data = match (&args.data, &args.profiles, &args.ratios) {
        (Some(d), None, None) => DataSource::Csv(d.clone()),
        (None, Some(p), Some(r)) => DataSource::Joined {
            profiles: p.clone(),
            ratios: r.clone(),
        },
        _ => return Err(CliError::Usage("give either --data or --profiles with --ratios".into())),
    };
    Ok(RunConfig {
        method,
        seed: args.seed,
        data,
        hyperparams: args.hyperparams.clone(),
        parallel: args.parallel,
        workers,
        deterministic: !args.nondeterministic,
        grid_points: args.grid_points,
        vb: VbRun {
            max_iter: args.max_iter.unwrap_or(10_000),
            rel_tol: args.tol.unwrap_or(1e-8),
            posterior_samples: args.posterior_samples,
        },
        gibbs: GibbsRun {
            iterations: args.iterations,
            burn_in: args.burn_in.unwrap_or(args.iterations / 5),
            thin: args.thin,
            init: args.init.into(),
        },
        em: EmRun {
            max_iter: args.max_iter.unwrap_or(10_000),
            rel_tol: args.tol.unwrap_or(1e-10),
            init: args.em_init.clone(),
        },
    })
}

pub fn load_dataset(source: &DataSource) -> CliResult<Dataset> {
    let records = match source {
        DataSource::Csv(path) => formats::read_dataset(path)?.records,
        DataSource::Joined { profiles, ratios } => {
            let rows = formats::read_profiles(profiles)?;
            let r = formats::read_ratios(ratios)?;
            rows.into_iter()
                .enumerate()
                .map(|(i, row)| {
                    let ratio = *r
                        .get(&row.gene)
                        .ok_or_else(|| CliError::io(ratios, format!("no ratio for gene `{}`", row.gene)))?;
                    let profile = ExpressionProfile::new(row.values)
                        .map_err(|e| CliError::io(profiles, format!("row {}: {e}", i + 1)))?;
                    Ok(RawRecord { r: ratio, profile })
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    Ok(transform(&records)?)
}

fn load_hyperparams(config: &RunConfig, networks: usize) -> CliResult<HyperParams> {
    let hp = match &config.hyperparams {
        Some(p) => formats::read_hyperparams(p)?,
        None => default_hyperparams(networks)?,
    };
    hp.validate(networks - 1)
        .map_err(|e| CliError::Usage(format!("hyperparameters: {e}")))?;
    Ok(hp)
}

/// Componentwise average of draws.
pub fn mean_params(draws: &[ModelParams]) -> ModelParams {
    let n = draws.len() as f64;
    let p = draws[0].K.len();
    let mut k = vec![0.0; p];
    let mut lambda = Mat::zeros(p, p);
    let mut rho = 0.0;
    for d in draws {
        for (a, v) in k.iter_mut().zip(d.K.as_slice()) {
            *a += v / n;
        }
        lambda = lambda.add(&d.Lambda.scale(1.0 / n)).expect("draws share a shape");
        rho += d.rho / n;
    }
    ModelParams {
        K: Vector::new(k).expect("finite means"),
        Lambda: lambda,
        rho,
    }
}

struct Outcome {
    estimator: &'static str,
    estimates: Estimates,
    posterior: Option<Summary>,
    diagnostics: Option<Vec<ParamDiagnostic>>,
    iterations: usize,
    converged: Option<bool>,
    objective: Option<f64>,
    trace_header: Vec<String>,
    trace_rows: Vec<Vec<f64>>,
    samples: Option<Vec<ModelParams>>,
}

fn point_estimates(p: &ModelParams) -> Estimates {
    Estimates {
        K: p.K.clone(),
        full_weights: full_weights(&p.K).as_slice().to_vec(),
        rho: p.rho,
        Lambda: p.Lambda.clone(),
    }
}

fn param_header(first: &str, p: &[ModelParams]) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain(scalar_series(&p[..1]).into_iter().map(|(n, _)| n))
        .collect()
}

fn param_rows(draws: &[ModelParams], index: impl Fn(usize) -> f64) -> Vec<Vec<f64>> {
    let series = scalar_series(draws);
    (0..draws.len())
        .map(|t| std::iter::once(index(t)).chain(series.iter().map(|(_, x)| x[t])).collect())
        .collect()
}

fn run_vb(config: &RunConfig, ds: &Dataset, hp: &HyperParams) -> CliResult<Outcome> {
    let exec = config.exec();
    let (state, trace) = vb_fit(exec, ds, hp, config.vb_config())?;
    let draws = vb_posterior_sample(exec, config.seed, &state, hp, config.vb.posterior_samples)?;
    let spec = GridSpec {
        points: config.grid_points,
        pad: PAD,
    };
    let summary = summarize(&draws, spec)?;
    let p = ds.dim();
    let rho = summary.get("rho").expect("rho is summarized").mode;
    let estimates = Estimates {
        K: Vector::new(summary.full_weights_mode[..p].to_vec())?,
        full_weights: summary.full_weights_mode.clone(),
        rho,
        Lambda: state.mean_params().Lambda,
    };
    let trace_rows = trace
        .elbo
        .iter()
        .zip(&trace.deltas)
        .enumerate()
        .map(|(t, (&e, d))| vec![(t + 1) as f64, e, d.k0k, d.rho, d.lambda0l_inv])
        .collect();
    Ok(Outcome {
        estimator: "marginal posterior modes of K, K_N and rho over draws from the fitted factors; variational mean of Lambda",
        estimates,
        posterior: Some(summary),
        diagnostics: None,
        iterations: trace.iterations(),
        converged: Some(trace.converged),
        objective: trace.elbo.last().copied(),
        trace_header: ["iteration", "elbo", "delta_K", "delta_rho", "delta_Lambda"]
            .map(String::from)
            .to_vec(),
        trace_rows,
        samples: Some(draws),
    })
}

fn run_gibbs(config: &RunConfig, ds: &Dataset, hp: &HyperParams) -> CliResult<Outcome> {
    let chain = gibbs_run(config.exec(), ds, hp, config.gibbs_config())?;
    let spec = GridSpec {
        points: config.grid_points,
        pad: PAD,
    };
    let posterior = if chain.samples.len() >= MIN_SUMMARY_SAMPLES {
        Some(summarize(&chain.samples, spec)?)
    } else {
        None
    };
    let diagnostics = if chain.samples.len() >= MIN_DIAGNOSTIC_SAMPLES {
        Some(gibbs_diagnostics(&chain)?)
    } else {
        None
    };
    Ok(Outcome {
        estimator: "posterior mean of the retained draws",
        estimates: point_estimates(&mean_params(&chain.samples)),
        posterior,
        diagnostics,
        iterations: chain.trace.len(),
        converged: None,
        objective: None,
        trace_header: param_header("iteration", &chain.trace),
        trace_rows: param_rows(&chain.trace, |t| (t + 1) as f64),
        samples: Some(chain.samples),
    })
}

fn run_em(config: &RunConfig, ds: &Dataset, hp: &HyperParams) -> CliResult<Outcome> {
    let init = match &config.em.init {
        Some(p) => formats::read_json::<ModelParams>(p)?,
        None => em_default_init(hp),
    };
    if init.K.len() != ds.dim() {
        return Err(CliError::Usage(format!("EM start has {} weights, data need {}", init.K.len(), ds.dim())));
    }
    let fit = em_fit(config.exec(), ds, &init, config.em_config())?;
    let mut path = vec![init];
    path.extend(fit.history.iter().cloned());
    let mut header = param_header("iteration", &path);
    header.insert(1, "loglik".into());
    let rows = param_rows(&path, |t| t as f64)
        .into_iter()
        .zip(&fit.loglik)
        .map(|(mut row, &ll)| {
            row.insert(1, ll);
            row
        })
        .collect();
    Ok(Outcome {
        estimator: "maximum marginal likelihood point estimate",
        estimates: point_estimates(&fit.params),
        posterior: None,
        diagnostics: None,
        iterations: fit.iterations(),
        converged: Some(fit.converged),
        objective: fit.loglik.last().copied(),
        trace_header: header,
        trace_rows: rows,
        samples: None,
    })
}

/// Run a validated configuration and write its artifacts under `out`.
pub fn execute(config: &RunConfig, out: &Path) -> CliResult<FitReport> {
    config.validate()?;
    let ds = load_dataset(&config.data)?;
    let hp = load_hyperparams(config, ds.networks())?;
    let start = Instant::now();
    let outcome = with_workers(config.workers, || match config.method {
        Method::Vb => run_vb(config, &ds, &hp),
        Method::Gibbs => run_gibbs(config, &ds, &hp),
        Method::Em => run_em(config, &ds, &hp),
    })??;
    let wall_clock_seconds = start.elapsed().as_secs_f64();

    formats::ensure_dir(out)?;
    formats::write_table(&out.join(TRACE), &outcome.trace_header, outcome.trace_rows)?;
    if let Some(draws) = &outcome.samples {
        formats::write_samples(&out.join(SAMPLES), draws)?;
    }
    let report = FitReport {
        method: config.method,
        estimator: outcome.estimator.into(),
        genes: ds.genes(),
        networks: ds.networks(),
        estimates: outcome.estimates,
        posterior: outcome.posterior,
        diagnostics: outcome.diagnostics,
        iterations: outcome.iterations,
        converged: outcome.converged,
        objective: outcome.objective,
        trace: TRACE.into(),
        samples: outcome.samples.is_some().then(|| SAMPLES.into()),
        seed: config.seed,
        wall_clock_seconds,
        config: config.clone(),
    };
    formats::write_json(&out.join(REPORT), &report)?;
    Ok(report)
}

pub fn run(args: &FitArgs, workers: Option<usize>) -> CliResult<FitReport> {
    let workers = resolve_workers(workers)?;
    let config = config_from_args(args, workers)?;
    if config.parallel == Parallelism::Serial && args.replay.is_none() && workers.is_some() {
        // harmless, but worth knowing the flag has no effect
        eprintln!("note: --workers has no effect with --parallel serial");
    }
    execute(&config, &args.out)
}
