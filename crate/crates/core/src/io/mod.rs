//! File formats, configuration and atomic output.

use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to `path` through a temporary sibling file and a rename so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", file_name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Seed of a named random stream derived from a run seed: the first eight
/// bytes (little endian) of SHA-256 over the decimal seed, a colon and the
/// stream name.
pub fn sub_seed(seed: u64, stream: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let h = Sha256::digest(format!("{seed}:{stream}").as_bytes());
    u64::from_le_bytes(h[..8].try_into().unwrap())
}

mod config;
mod report;
mod timeseries;

pub use config::{
    BatteryOverrides, CapacityOverrides, DieselOverrides, HydrogenOverrides, LibrarySettings, MethodSettings, MpcSettings,
    Paths, PriceOverrides, RunConfig,
};
pub use report::{
    cost_plotdata, emit_report, regret_plotdata, sha256_file, sha256_hex, soc_plotdata, Manifest, ReportFormat,
};
pub use timeseries::{
    check_resolution, normalize_to_capacities, parse_timeseries_csv, parse_timeseries_str, scenario_csv, write_scenario_csv,
};
