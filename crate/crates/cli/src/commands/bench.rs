use std::time::Instant;

use tissuemix::em::{em_default_init, em_fit, EmConfig};
use tissuemix::gibbs::{gibbs_run, GibbsConfig, GibbsInit};
use tissuemix::linalg::Exec;
use tissuemix::model::{default_hyperparams, random_profiles, synth_generate, ProfileKind};
use tissuemix::vb::{vb_fit, VbConfig};
use tissuemix::{Dataset, HyperParams, ModelParams};

use crate::cli::BenchArgs;
use crate::commands::fit::mean_params;
use crate::config::{resolve_workers, with_workers, Method, Parallelism};
use crate::error::{CliError, CliResult};

/// Relative agreement demanded of serial and parallel estimates.
pub const AGREEMENT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub genes: usize,
    pub mode: Parallelism,
    pub workers: usize,
    pub iterations: usize,
    pub reps: usize,
    pub median_seconds: f64,
    /// Serial median over this row's median; `None` without a serial row.
    pub speedup: Option<f64>,
}

impl BenchRow {
    pub fn seconds_per_iteration(&self) -> f64 {
        self.median_seconds / self.iterations as f64
    }
}

fn flatten(p: &ModelParams) -> Vec<f64> {
    let mut v = p.K.as_slice().to_vec();
    v.push(p.rho);
    let n = p.Lambda.rows();
    for r in 0..n {
        for c in r..n {
            v.push(p.Lambda[(r, c)]);
        }
    }
    v
}

/// One fixed-length engine run; returns the flattened estimates.
pub fn engine_run(method: Method, exec: Exec, ds: &Dataset, hp: &HyperParams, iterations: usize, seed: u64) -> CliResult<Vec<f64>> {
    let est = match method {
        Method::Vb => {
            // zero tolerance: every run performs exactly `iterations` sweeps
            let config = VbConfig {
                max_iter: iterations,
                rel_tol: 0.0,
                track_elbo: true,
            };
            vb_fit(exec, ds, hp, config)?.0.mean_params()
        }
        Method::Gibbs => {
            let config = GibbsConfig {
                iterations,
                burn_in: 0,
                thin: 1,
                seed,
                init: GibbsInit::Prior,
            };
            mean_params(&gibbs_run(exec, ds, hp, config)?.samples)
        }
        Method::Em => {
            let config = EmConfig {
                max_iter: iterations,
                rel_tol: 0.0,
            };
            em_fit(exec, ds, &em_default_init(hp), config)?.params
        }
    };
    Ok(flatten(&est))
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

/// Largest relative difference between two estimate vectors.
pub fn max_relative_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn bench_dataset(genes: usize, seed: u64) -> CliResult<Dataset> {
    let profiles = random_profiles(seed, genes, 3, ProfileKind::Uniform)?;
    Ok(synth_generate(seed, &ModelParams::reference_truth(), &profiles)?)
}

pub fn measure(args: &BenchArgs, workers: Option<usize>) -> CliResult<Vec<BenchRow>> {
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(CliError::Usage("--sizes needs positive gene counts".into()));
    }
    if args.modes.is_empty() {
        return Err(CliError::Usage("--modes needs serial and/or parallel".into()));
    }
    if args.iterations == 0 || args.reps == 0 {
        return Err(CliError::Usage("--iterations and --reps must be at least 1".into()));
    }
    let hp = default_hyperparams(3)?;
    let mut rows = Vec::new();
    for &genes in &args.sizes {
        let ds = bench_dataset(genes, args.seed)?;
        let mut reference: Option<(Parallelism, Vec<f64>)> = None;
        let mut size_rows = Vec::new();
        for &mode in &args.modes {
            let exec = Exec {
                parallel: mode == Parallelism::Parallel,
                deterministic: !args.nondeterministic,
            };
            let pool_workers = if mode == Parallelism::Serial { Some(1) } else { workers };
            let (est, times, used) = with_workers(pool_workers, || -> CliResult<_> {
                let est = engine_run(args.method, exec, &ds, &hp, args.iterations, args.seed)?;
                let mut times = Vec::with_capacity(args.reps);
                for _ in 0..args.reps {
                    let t = Instant::now();
                    engine_run(args.method, exec, &ds, &hp, args.iterations, args.seed)?;
                    times.push(t.elapsed().as_secs_f64());
                }
                Ok((est, times, rayon::current_num_threads()))
            })??;
            match &reference {
                None => reference = Some((mode, est)),
                Some((m, r)) => {
                    let diff = max_relative_difference(r, &est);
                    if !(diff <= AGREEMENT) {
                        return Err(CliError::BenchMismatch(format!(
                            "V={genes}: {} vs {} relative difference {diff:e} exceeds {AGREEMENT:e}",
                            mode_name(*m),
                            mode_name(mode)
                        )));
                    }
                }
            }
            size_rows.push(BenchRow {
                method: args.method,
                genes,
                mode,
                workers: if mode == Parallelism::Serial { 1 } else { used },
                iterations: args.iterations,
                reps: args.reps,
                median_seconds: median(times),
                speedup: None,
            });
        }
        let serial = size_rows
            .iter()
            .find(|r| r.mode == Parallelism::Serial)
            .map(|r| r.median_seconds);
        for r in &mut size_rows {
            r.speedup = serial.map(|s| s / r.median_seconds);
        }
        rows.extend(size_rows);
    }
    Ok(rows)
}

pub fn mode_name(m: Parallelism) -> &'static str {
    match m {
        Parallelism::Serial => "serial",
        Parallelism::Parallel => "parallel",
    }
}

pub fn write_report(path: &std::path::Path, rows: &[BenchRow]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    w.write_record([
        "method",
        "genes",
        "mode",
        "workers",
        "iterations",
        "reps",
        "median_seconds",
        "seconds_per_iteration",
        "speedup",
    ])
    .map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.genes.to_string(),
            mode_name(r.mode).to_string(),
            r.workers.to_string(),
            r.iterations.to_string(),
            r.reps.to_string(),
            format!("{}", r.median_seconds),
            format!("{}", r.seconds_per_iteration()),
            r.speedup.map(|s| format!("{s}")).unwrap_or_default(),
        ])
        .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn run(args: &BenchArgs, workers: Option<usize>) -> CliResult<()> {
    let workers = resolve_workers(workers)?;
    if workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let rows = measure(args, workers)?;
    write_report(&args.out, &rows)
}
