//! Result tables, JSON-lines metrics, plot data and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::oco::RegretPoint;
use crate::sim::{metrics_jsonl, results_csv, trajectory_csv, RolloutResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Jsonl,
    Plotdata,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            "plotdata" => Ok(Self::Plotdata),
            _ => Err(Error::Config(format!("unknown report format `{s}` (csv, jsonl or plotdata)"))),
        }
    }
}

/// Hydrogen content of every result over time, one column per method.
pub fn soc_plotdata(results: &[RolloutResult]) -> String {
    let mut s = String::from("# t");
    for r in results {
        let _ = write!(s, " {}_e_h_kg", r.method.as_str());
    }
    s.push('\n');
    let n = results.iter().map(|r| r.trajectory.len()).min().unwrap_or(0);
    for t in 0..n {
        let _ = write!(s, "{t}");
        for r in results {
            let _ = write!(s, " {:.6}", r.trajectory[t].e_h);
        }
        s.push('\n');
    }
    s
}

/// Practical cost split per method, for bar charts.
pub fn cost_plotdata(results: &[RolloutResult]) -> String {
    let mut s = String::from("# index method c_l c_d c_b c_h total\n");
    for (i, r) in results.iter().enumerate() {
        let c = &r.practical.cost;
        let _ = writeln!(s, "{i} {} {:.4} {:.4} {:.4} {:.4} {:.4}", r.method.as_str(), c.c_l, c.c_d, c.c_b, c.c_h, c.total);
    }
    s
}

/// One row per benchmarked horizon.
pub fn regret_plotdata(points: &[RegretPoint]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::Data("no regret points to write".into()));
    }
    let mut s = String::from("# T regret path_length violation\n");
    for p in points {
        let _ = writeln!(s, "{} {:.9e} {:.9e} {:.9e}", p.horizon, p.regret, p.path_length, p.violation);
    }
    Ok(s)
}

/// Writes `results` under `dir` with file names starting with `stem`.
/// Returns the written paths; nothing is written for empty results.
pub fn emit_report(results: &[RolloutResult], format: ReportFormat, dir: &Path, stem: &str, timing: bool) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::Data("no results to report".into()));
    }
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    match format {
        ReportFormat::Csv => {
            files.push((dir.join(format!("{stem}.csv")), results_csv(results, timing)));
            for r in results {
                files.push((dir.join(format!("{stem}_{}_trajectory.csv", r.method.as_str())), trajectory_csv(&r.trajectory)));
            }
        }
        ReportFormat::Jsonl => files.push((dir.join(format!("{stem}.jsonl")), metrics_jsonl(results, timing)?)),
        ReportFormat::Plotdata => {
            files.push((dir.join(format!("{stem}_soc.dat")), soc_plotdata(results)));
            files.push((dir.join(format!("{stem}_cost.dat")), cost_plotdata(results)));
        }
    }
    let mut out = Vec::with_capacity(files.len());
    for (p, text) in files {
        write_atomic(&p, text.as_bytes())?;
        out.push(p);
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Deterministic record of a run: command, version, seeds and content
/// hashes of the configuration, inputs and outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub name: String,
    pub version: String,
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// Headline numbers of the run.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(command: &str, name: &str, config_text: &str) -> Self {
        Self {
            command: command.into(),
            name: name.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            ..Default::default()
        }
    }

    pub fn seed(&mut self, stream: &str, seed: u64) {
        self.seeds.insert(stream.into(), seed);
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Outputs are keyed by file name so that manifests of runs written
    /// to different directories compare equal.
    pub fn output(&mut self, path: &Path) -> Result<()> {
        let key = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string());
        self.outputs.insert(key, sha256_file(path)?);
        Ok(())
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_results_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&[], ReportFormat::Csv, dir.path(), "x", false).is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn regret_rows_match_points() {
        let pts: Vec<RegretPoint> =
            [256, 512, 1024].iter().map(|&h| RegretPoint { horizon: h, regret: 1.0, path_length: 2.0, violation: 0.0 }).collect();
        let s = regret_plotdata(&pts).unwrap();
        assert_eq!(s.lines().filter(|l| !l.starts_with('#')).count(), 3);
        assert!(regret_plotdata(&[]).is_err());
    }

    #[test]
    fn hashes_are_hex() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
