use std::path::{Path, PathBuf};

use tissuemix::linalg::{Mat, Vector};
use tissuemix::model::{random_profiles, reference_covariance, synth_generate, ExpressionProfile, ProfileKind};
use tissuemix::ModelParams;

use crate::cli::SynthArgs;
use crate::error::{CliError, CliResult};
use crate::formats::{self, DatasetFile, Truth};

/// Default sidecar: `data.csv` → `data.truth.json`.
pub fn truth_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.json"))
}

fn lambda(spec: &str, networks: usize) -> CliResult<Mat> {
    if spec == "reference" {
        if networks != 3 {
            return Err(CliError::Usage("--lambda reference needs --networks 3".into()));
        }
        return Ok(reference_covariance().inverse()?);
    }
    formats::read_json(Path::new(spec))
}

/// Profiles plus optional gene names, `genes` long.
fn profiles(spec: &str, seed: u64, genes: usize, networks: usize) -> CliResult<(Vec<ExpressionProfile>, Option<Vec<String>>)> {
    let kind = match spec {
        "binary" => Some(ProfileKind::Binary),
        "uniform" => Some(ProfileKind::Uniform),
        _ => None,
    };
    if let Some(kind) = kind {
        return Ok((random_profiles(seed, genes, networks, kind)?, None));
    }
    let path = Path::new(spec);
    let rows = formats::read_profiles(path)?;
    if rows[0].values.len() != networks {
        return Err(CliError::Usage(format!(
            "{spec} has {} networks but --networks is {networks}",
            rows[0].values.len()
        )));
    }
    let mut out = Vec::with_capacity(genes);
    let mut names = Vec::with_capacity(genes);
    for i in 0..genes {
        let row = &rows[i % rows.len()];
        let pass = i / rows.len();
        out.push(ExpressionProfile::new(row.values.clone()).map_err(|e| CliError::io(path, e))?);
        names.push(if pass == 0 {
            row.gene.clone()
        } else {
            format!("{}.{pass}", row.gene)
        });
    }
    Ok((out, Some(names)))
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    if args.genes == 0 {
        return Err(CliError::Usage("--genes must be at least 1".into()));
    }
    if args.networks < 2 {
        return Err(CliError::Usage("--networks must be at least 2".into()));
    }
    let p = args.networks - 1;
    let k = match &args.true_k {
        Some(k) => k.clone(),
        None if args.networks == 3 => vec![0.1, 0.3],
        None => return Err(CliError::Usage("--true-k is required unless --networks is 3".into())),
    };
    if k.len() != p {
        return Err(CliError::Usage(format!("--true-k needs {p} values, got {}", k.len())));
    }
    if !(args.rho > 0.0 && args.rho.is_finite()) {
        return Err(CliError::Usage("--rho must be positive".into()));
    }
    let truth = ModelParams {
        K: Vector::new(k).map_err(|e| CliError::Usage(format!("--true-k: {e}")))?,
        Lambda: lambda(&args.lambda, args.networks)?,
        rho: args.rho,
    };
    truth
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid truth: {e}")))?;

    let (profs, genes) = profiles(&args.profiles, args.seed, args.genes, args.networks)?;
    let ds = synth_generate(args.seed, &truth, &profs)?;
    formats::write_dataset(
        &args.out,
        &DatasetFile {
            genes,
            records: ds.records(),
        },
    )?;
    let sidecar = Truth {
        seed: args.seed,
        genes: args.genes,
        networks: args.networks,
        profiles: args.profiles.clone(),
        K: truth.K,
        rho: truth.rho,
        Lambda: truth.Lambda,
    };
    let path = args.truth.clone().unwrap_or_else(|| truth_path(&args.out));
    formats::write_json(&path, &sidecar)
}
