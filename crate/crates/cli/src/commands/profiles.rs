use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use tissuemix::boolnet::{parse_faults, parse_netlist, parse_stimulus, profiles_for_ensemble};

use crate::cli::ProfilesArgs;
use crate::error::{CliError, CliResult};
use crate::formats::{self, ProfileEntry};

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Prefix parser errors with the offending file.
fn in_file<T>(path: &Path, r: tissuemix::Result<T>) -> CliResult<T> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::io(path, m),
        other => other,
    })
}

pub fn run(args: &ProfilesArgs) -> CliResult<()> {
    if args.faults.is_empty() {
        return Err(CliError::Usage("--faults needs at least one fault file".into()));
    }
    if args.stimulus.is_empty() {
        return Err(CliError::Usage("--stimulus needs at least one stimulus file".into()));
    }
    let net = in_file(&args.netlist, parse_netlist(&read(&args.netlist)?))?;
    let faults = args
        .faults
        .iter()
        .map(|p| in_file(p, parse_faults(&read(p)?, &net)))
        .collect::<CliResult<Vec<_>>>()?;
    let stimuli = args
        .stimulus
        .iter()
        .map(|p| in_file(p, parse_stimulus(&read(p)?, &net)))
        .collect::<CliResult<Vec<_>>>()?;
    let gene_map = match &args.gene_map {
        Some(p) => formats::read_gene_map(p)?,
        None => net.outputs().map(|o| (o.to_string(), o.to_string())).collect::<BTreeMap<_, _>>(),
    };
    let rows = profiles_for_ensemble(&net, &faults, &stimuli, &gene_map)?;
    if rows.is_empty() {
        return Err(CliError::Usage("the gene map selects no outputs".into()));
    }
    let entries: Vec<ProfileEntry> = rows
        .into_iter()
        .map(|r| ProfileEntry {
            gene: r.gene,
            stimulus: r.stimulus,
            values: r.profile.values().to_vec(),
        })
        .collect();
    formats::write_profiles(&args.out, &entries)
}
