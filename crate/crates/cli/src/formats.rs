//! On-disk formats: dataset/profile/sample CSVs and JSON sidecars.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! write followed by a read reproduces every value exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use tissuemix::gibbs::scalar_series;
use tissuemix::linalg::{Mat, Vector};
use tissuemix::model::{ExpressionProfile, RawRecord};
use tissuemix::{HyperParams, ModelParams};

use crate::error::{CliError, CliResult};

fn reader(path: &Path) -> CliResult<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))
}

fn writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::io(path, e))
}

fn parse_f64(path: &Path, row: usize, field: &str) -> CliResult<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::io(path, format!("row {row}: `{field}` is not a finite number")))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Columns `d_1..d_N` starting at `first`; returns `N`.
fn profile_columns(path: &Path, header: &csv::StringRecord, first: usize) -> CliResult<usize> {
    let n = header.len().saturating_sub(first);
    for (q, name) in header.iter().skip(first).enumerate() {
        if name != format!("d_{}", q + 1) {
            return Err(CliError::io(path, format!("expected column d_{} but found `{name}`", q + 1)));
        }
    }
    if n == 0 {
        return Err(CliError::io(path, "no profile columns"));
    }
    Ok(n)
}

/// A dataset file: optional gene names plus `(r, profile)` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFile {
    pub genes: Option<Vec<String>>,
    pub records: Vec<RawRecord>,
}

/// Read `[gene,]r,d_1,...,d_N`.
pub fn read_dataset(path: &Path) -> CliResult<DatasetFile> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    let named = header.get(0) == Some("gene");
    let r_col = usize::from(named);
    if header.get(r_col) != Some("r") {
        return Err(CliError::io(path, "header must be `r,d_1,...,d_N` (optionally led by `gene`)"));
    }
    let n = profile_columns(path, &header, r_col + 1)?;
    let mut genes = Vec::new();
    let mut records = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        if rec.len() != n + r_col + 1 {
            return Err(CliError::io(path, format!("row {}: expected {} fields", row + 1, n + r_col + 1)));
        }
        if named {
            genes.push(rec[0].to_string());
        }
        let r = parse_f64(path, row + 1, &rec[r_col])?;
        let d = (0..n)
            .map(|q| parse_f64(path, row + 1, &rec[r_col + 1 + q]))
            .collect::<CliResult<Vec<_>>>()?;
        let profile = ExpressionProfile::new(d).map_err(|e| CliError::io(path, format!("row {}: {e}", row + 1)))?;
        records.push(RawRecord { r, profile });
    }
    if records.is_empty() {
        return Err(CliError::io(path, "no data rows"));
    }
    Ok(DatasetFile {
        genes: named.then_some(genes),
        records,
    })
}

pub fn write_dataset(path: &Path, data: &DatasetFile) -> CliResult<()> {
    let n = data.records.first().map_or(0, |r| r.profile.networks());
    let mut w = writer(path)?;
    let mut header: Vec<String> = Vec::new();
    if data.genes.is_some() {
        header.push("gene".into());
    }
    header.push("r".into());
    header.extend((1..=n).map(|q| format!("d_{q}")));
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    for (i, rec) in data.records.iter().enumerate() {
        let mut row: Vec<String> = Vec::with_capacity(n + 2);
        if let Some(g) = &data.genes {
            row.push(g[i].clone());
        }
        row.push(fmt(rec.r));
        row.extend(rec.profile.values().iter().map(|&v| fmt(v)));
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row of a profiles file.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileEntry {
    pub gene: String,
    pub stimulus: usize,
    pub values: Vec<f64>,
}

/// Read `gene,stimulus,d_1,...,d_N`.
pub fn read_profiles(path: &Path) -> CliResult<Vec<ProfileEntry>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    if header.get(0) != Some("gene") || header.get(1) != Some("stimulus") {
        return Err(CliError::io(path, "header must be `gene,stimulus,d_1,...,d_N`"));
    }
    let n = profile_columns(path, &header, 2)?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        if rec.len() != n + 2 {
            return Err(CliError::io(path, format!("row {}: expected {} fields", row + 1, n + 2)));
        }
        let stimulus = rec[1]
            .parse()
            .map_err(|_| CliError::io(path, format!("row {}: bad stimulus index `{}`", row + 1, &rec[1])))?;
        let values = (0..n)
            .map(|q| parse_f64(path, row + 1, &rec[2 + q]))
            .collect::<CliResult<Vec<_>>>()?;
        out.push(ProfileEntry {
            gene: rec[0].to_string(),
            stimulus,
            values,
        });
    }
    if out.is_empty() {
        return Err(CliError::io(path, "no profile rows"));
    }
    Ok(out)
}

pub fn write_profiles(path: &Path, rows: &[ProfileEntry]) -> CliResult<()> {
    let n = rows.first().map_or(0, |r| r.values.len());
    let mut w = writer(path)?;
    let mut header = vec!["gene".to_string(), "stimulus".to_string()];
    header.extend((1..=n).map(|q| format!("d_{q}")));
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        let mut row = vec![r.gene.clone(), r.stimulus.to_string()];
        row.extend(r.values.iter().map(|&v| fmt(v)));
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Read `output,gene`.
pub fn read_gene_map(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["output", "gene"] {
        return Err(CliError::io(path, "header must be `output,gene`"));
    }
    let mut map = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        map.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(map)
}

/// Read `gene,r`.
pub fn read_ratios(path: &Path) -> CliResult<BTreeMap<String, f64>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["gene", "r"] {
        return Err(CliError::io(path, "header must be `gene,r`"));
    }
    let mut map = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        map.insert(rec[0].to_string(), parse_f64(path, row + 1, &rec[1])?);
    }
    Ok(map)
}

/// Draws as CSV: `K_1..K_p, rho, Lambda_rc` (upper triangle).
pub fn write_samples(path: &Path, draws: &[ModelParams]) -> CliResult<()> {
    let series = scalar_series(draws);
    let mut w = writer(path)?;
    let header: Vec<&str> = series.iter().map(|(n, _)| n.as_str()).collect();
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    for t in 0..draws.len() {
        w.write_record(series.iter().map(|(_, x)| fmt(x[t])))
            .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_samples(path: &Path) -> CliResult<Vec<ModelParams>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    let p = header.iter().take_while(|h| h.starts_with("K_")).count();
    let expect = p + 1 + p * (p + 1) / 2;
    if p == 0 || header.len() != expect || header.get(p) != Some("rho") {
        return Err(CliError::io(path, "header must be `K_1..K_p,rho,Lambda_11,...`"));
    }
    let mut draws = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let v = rec
            .iter()
            .map(|f| parse_f64(path, row + 1, f))
            .collect::<CliResult<Vec<_>>>()?;
        if v.len() != expect {
            return Err(CliError::io(path, format!("row {}: expected {expect} fields", row + 1)));
        }
        let mut lambda = Mat::zeros(p, p);
        let mut idx = p + 1;
        for r in 0..p {
            for c in r..p {
                lambda[(r, c)] = v[idx];
                lambda[(c, r)] = v[idx];
                idx += 1;
            }
        }
        draws.push(ModelParams {
            K: Vector::new(v[..p].to_vec())?,
            Lambda: lambda,
            rho: v[p],
        });
    }
    Ok(draws)
}

/// Ground truth written next to a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Truth {
    pub seed: u64,
    pub genes: usize,
    pub networks: usize,
    pub profiles: String,
    pub K: Vector,
    pub rho: f64,
    pub Lambda: Mat,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_hyperparams(path: &Path) -> CliResult<HyperParams> {
    read_json(path)
}

/// Write generic numeric rows under `header`.
pub fn write_table(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|&v| fmt(v))).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = DatasetFile {
            genes: Some(vec!["a".into(), "b".into()]),
            records: vec![
                RawRecord {
                    r: 0.1 + 0.2,
                    profile: ExpressionProfile::new(vec![1.0 / 3.0, 0.0, 1e-300]).unwrap(),
                },
                RawRecord {
                    r: -7.25,
                    profile: ExpressionProfile::new(vec![1.0, 0.5, 0.25]).unwrap(),
                },
            ],
        };
        write_dataset(&path, &data).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), data);
    }

    #[test]
    fn samples_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let draw = ModelParams {
            K: Vector::new(vec![0.1, 0.30000000000000004]).unwrap(),
            Lambda: Mat::from_rows(&[vec![2.0, -0.1], vec![-0.1, 3.0]]).unwrap(),
            rho: 99.5,
        };
        write_samples(&path, &[draw.clone(), draw.clone()]).unwrap();
        assert_eq!(read_samples(&path).unwrap(), vec![draw.clone(), draw]);
    }

    #[test]
    fn malformed_rows_name_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "r,d_1,d_2\n1,0,1\n2,0,inf\n").unwrap();
        let err = read_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        fs::write(&path, "r,d_1,d_3\n1,0,1\n").unwrap();
        assert!(read_dataset(&path).is_err());
    }
}
