use tissuemix::analysis::{density_grid, kde_fit_1d, marginal_series, summarize, GridSpec};

use crate::cli::DensityArgs;
use crate::error::{CliError, CliResult};
use crate::formats;

pub const MODES: &str = "modes.json";

/// Writes `density_<name>.csv` (`x,density`) per marginal and `modes.json`.
/// Constant marginals get no grid; their summary is flagged degenerate.
pub fn run(args: &DensityArgs) -> CliResult<()> {
    if !(args.pad >= 0.0 && args.pad.is_finite()) {
        return Err(CliError::Usage("--pad must be a non-negative number".into()));
    }
    let spec = GridSpec {
        points: args.grid_points,
        pad: args.pad,
    };
    let draws = formats::read_samples(&args.samples)?;
    let summary = summarize(&draws, spec)?;
    formats::ensure_dir(&args.out)?;
    let header = ["x".to_string(), "density".to_string()];
    for ((name, x), s) in marginal_series(&draws).iter().zip(&summary.parameters) {
        if s.degenerate {
            continue;
        }
        let grid = density_grid(&kde_fit_1d(x, None)?, spec)?;
        let rows = grid.x.iter().zip(&grid.density).map(|(&x, &d)| vec![x, d]);
        formats::write_table(&args.out.join(format!("density_{name}.csv")), &header, rows)?;
    }
    formats::write_json(&args.out.join(MODES), &summary)
}
