//! CSV persistence and run manifests.
//!
//! `moments.csv` columns: `lambda, T, r, eta, t_micro, replicas, mean,
//! mean_se, variance, variance_se, m2, m2_se, …, mr, mr_se, boltzmann,
//! boltzmann_se, deviation, deviation_se, samples_file`.
//!
//! `samples_<i>.csv` holds the raw `s_m` of grid point `i`: `replica, s`.
//!
//! Floats are written in shortest round-trip form, so equal runs give equal
//! bytes.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::moments::{MomentReport, TrendSummary};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Writes rows of already formatted cells to `path`.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Lines of `manifest.txt`: config hash, version, seed and caller-supplied
/// extras (`key = value`).
pub fn write_manifest(dir: &Path, config_text: &str, seed: u64, extra: &[(&str, String)]) -> Result<PathBuf> {
    let mut text = format!(
        "boltzgraph {VERSION}\nconfig_sha256 = {}\nseed = {seed}\n",
        sha256_hex(config_text)
    );
    for (k, v) in extra {
        text.push_str(&format!("{k} = {v}\n"));
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, text)?;
    Ok(path)
}

/// Writes `moments.csv`, one samples file per grid point and the manifest.
pub fn write_moment_reports(dir: &Path, config: &ExperimentConfig, reports: &[MomentReport]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let r = reports.first().map_or(config.r, |x| x.r);
    let mut header: Vec<String> = ["lambda", "T", "r", "eta", "t_micro", "replicas", "mean", "mean_se", "variance", "variance_se"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for k in 2..=r {
        header.push(format!("m{k}"));
        header.push(format!("m{k}_se"));
    }
    header.extend(["boltzmann", "boltzmann_se", "deviation", "deviation_se", "samples_file"].map(String::from));
    let mut rows = Vec::new();
    for (i, rep) in reports.iter().enumerate() {
        let samples_file = format!("samples_{i}.csv");
        let sample_rows: Vec<Vec<String>> =
            rep.samples.iter().enumerate().map(|(m, s)| vec![m.to_string(), s.to_string()]).collect();
        write_csv(&dir.join(&samples_file), &["replica", "s"], &sample_rows)?;
        let (m, v, b) = (rep.mean(), rep.variance(), rep.boltzmann_reference);
        let mut row = vec![
            rep.lambda.to_string(),
            rep.t_macro.to_string(),
            rep.r.to_string(),
            rep.eta.to_string(),
            rep.t_micro.to_string(),
            rep.replicas.to_string(),
            m.value.to_string(),
            m.se.to_string(),
            v.value.to_string(),
            v.se.to_string(),
        ];
        for (_, e) in &rep.summary.central {
            row.push(e.value.to_string());
            row.push(e.se.to_string());
        }
        row.extend([
            b.value.to_string(),
            b.se.to_string(),
            (m.value - b.value).abs().to_string(),
            m.se.hypot(b.se).to_string(),
            samples_file,
        ]);
        rows.push(row);
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let path = dir.join("moments.csv");
    write_csv(&path, &header_refs, &rows)?;
    let lambdas = config.lambdas.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
    write_manifest(
        dir,
        &config.source,
        config.seed,
        &[
            ("lambdas", lambdas),
            ("T", config.t_macro.to_string()),
            ("L", config.lattice.half_width().to_string()),
            ("replicas", config.replicas.to_string()),
            ("disorder_streams", format!("(seed {}, DISORDER, replica 0..{})", config.seed, config.replicas)),
            ("note", "finite-L, finite-lambda trends only; the lambda -> 0 limits are not taken".into()),
        ],
    )?;
    Ok(path)
}

/// Writes `trend.csv` (one row per coupling) and the verdicts to `trend.txt`.
pub fn write_trend(dir: &Path, trend: &TrendSummary) -> Result<PathBuf> {
    let rows: Vec<Vec<String>> = trend
        .rows
        .iter()
        .map(|r| {
            vec![
                r.lambda.to_string(),
                r.deviation.value.to_string(),
                r.deviation.se.to_string(),
                r.variance.value.to_string(),
                r.variance.se.to_string(),
            ]
        })
        .collect();
    let path = dir.join("trend.csv");
    write_csv(&path, &["lambda", "deviation", "deviation_se", "variance", "variance_se"], &rows)?;
    let mut text = format!(
        "deviation_non_increasing = {}\nvariance_strictly_decreasing = {}\n",
        trend.deviation_non_increasing, trend.variance_strictly_decreasing
    );
    if let Some(z) = trend.zero_coupling_variance_vanishes {
        text.push_str(&format!("zero_coupling_variance_vanishes = {z}\n"));
    }
    fs::write(dir.join("trend.txt"), text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn csv_round_trips_floats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let x: f64 = 0.1 + 0.2;
        write_csv(&path, &["a", "b"], &[vec!["1".into(), x.to_string()]]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let back: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
    }
}
