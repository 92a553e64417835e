//! Scenario CSV files: `timestamp,load_kw,solar_kw,wind_kw` with an optional
//! `grid_kw` column.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDateTime};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::grid::{Capacities, ScenarioSeries};

const TS_FORMATS: [&str; 4] = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"];
const WRITE_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TS_FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Checks that a resolution in minutes either divides an hour or is a whole
/// number of hours.
pub fn check_resolution(minutes: u32) -> Result<()> {
    if minutes == 0 || (60 % minutes != 0 && !minutes.is_multiple_of(60)) {
        return Err(Error::Config(format!("resolution of {minutes} min neither divides nor is a multiple of 60")));
    }
    Ok(())
}

/// Reads a scenario CSV and resamples it to `resolution_minutes`: block
/// means when coarsening, repeated values when refining. A trailing partial
/// block is dropped.
pub fn parse_timeseries_csv(path: &Path, resolution_minutes: u32) -> Result<ScenarioSeries> {
    check_resolution(resolution_minutes)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
    parse_timeseries_str(&text, &label, resolution_minutes)
}

/// [`parse_timeseries_csv`] on CSV text.
pub fn parse_timeseries_str(text: &str, label: &str, resolution_minutes: u32) -> Result<ScenarioSeries> {
    check_resolution(resolution_minutes)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Data(format!("unreadable header: {e}")))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| Error::Data(format!("missing column `{name}`")));
    let (ci, cl, cs, cw) = (need("timestamp")?, need("load_kw")?, need("solar_kw")?, need("wind_kw")?);
    let cg = col("grid_kw");

    let mut ts = Vec::new();
    let mut ch: [Vec<f64>; 4] = Default::default();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        let t = parse_timestamp(rec.get(ci).unwrap_or(""))
            .ok_or_else(|| Error::Data(format!("row {row}: bad timestamp `{}`", rec.get(ci).unwrap_or(""))))?;
        if let Some(&prev) = ts.last() {
            if t <= prev {
                return Err(Error::Data(format!("row {row}: timestamp {t} is not after {prev}")));
            }
        }
        ts.push(t);
        let cols = [Some(cl), Some(cs), Some(cw), cg];
        for (v, c) in ch.iter_mut().zip(cols) {
            let Some(c) = c else { continue };
            let name = &headers[c];
            let raw = rec.get(c).unwrap_or("");
            let x: f64 = raw.parse().map_err(|_| Error::Data(format!("row {row}: `{name}` value `{raw}` is not a number")))?;
            if !x.is_finite() {
                return Err(Error::Data(format!("row {row}: `{name}` is not finite")));
            }
            if x < 0.0 {
                return Err(Error::Data(format!("row {row}: `{name}` is negative")));
            }
            v.push(x);
        }
    }
    if ts.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    let step = if ts.len() >= 2 { ts[1] - ts[0] } else { Duration::minutes(resolution_minutes as i64) };
    for (k, w) in ts.windows(2).enumerate() {
        if w[1] - w[0] != step {
            return Err(Error::Data(format!("row {}: step {} differs from the first step {}", k + 2, w[1] - w[0], step)));
        }
    }
    let in_min = step.num_minutes();
    let out_min = resolution_minutes as i64;
    if in_min <= 0 || step != Duration::minutes(in_min) {
        return Err(Error::Data(format!("time step {step} is not a whole number of minutes")));
    }
    let [load, solar, wind, grid] = ch;
    let grid = cg.map(|_| grid);
    let (ts, load, solar, wind, grid) = if out_min == in_min {
        (ts, load, solar, wind, grid)
    } else if out_min > in_min {
        if out_min % in_min != 0 {
            return Err(Error::Data(format!("cannot aggregate {in_min} min data to {out_min} min")));
        }
        let k = (out_min / in_min) as usize;
        let n = ts.len() / k;
        if n == 0 {
            return Err(Error::Data(format!("fewer rows than one {out_min} min block")));
        }
        let mean = |v: &[f64]| (0..n).map(|b| v[b * k..(b + 1) * k].iter().sum::<f64>() / k as f64).collect::<Vec<_>>();
        let ts = (0..n).map(|b| ts[b * k]).collect();
        (ts, mean(&load), mean(&solar), mean(&wind), grid.as_deref().map(mean))
    } else {
        if in_min % out_min != 0 {
            return Err(Error::Data(format!("cannot split {in_min} min data into {out_min} min steps")));
        }
        let k = (in_min / out_min) as usize;
        let rep = |v: &[f64]| v.iter().flat_map(|x| std::iter::repeat_n(*x, k)).collect::<Vec<_>>();
        let ts = ts.iter().flat_map(|t| (0..k).map(move |j| *t + Duration::minutes(out_min * j as i64))).collect();
        (ts, rep(&load), rep(&solar), rep(&wind), grid.as_deref().map(rep))
    };
    let mut s = ScenarioSeries::new(label, ts, load, solar, wind)?;
    s.dt = out_min as f64 / 60.0;
    s.grid = grid;
    s.validate()?;
    Ok(s)
}

/// CSV text of a scenario. Values use the shortest representation that
/// parses back to the same number.
pub fn scenario_csv(s: &ScenarioSeries) -> String {
    let mut out = String::from("timestamp,load_kw,solar_kw,wind_kw");
    if s.grid.is_some() {
        out.push_str(",grid_kw");
    }
    out.push('\n');
    for t in 0..s.len() {
        let _ = write!(out, "{},{},{},{}", s.timestamps[t].format(WRITE_FORMAT), s.load[t], s.solar[t], s.wind[t]);
        if let Some(g) = &s.grid {
            let _ = write!(out, ",{}", g[t]);
        }
        out.push('\n');
    }
    out
}

pub fn write_scenario_csv(path: &Path, s: &ScenarioSeries) -> Result<()> {
    write_atomic(path, scenario_csv(s).as_bytes())
}

/// Scales every channel so that its peak equals the matching capacity.
/// All-zero channels stay zero.
pub fn normalize_to_capacities(s: &ScenarioSeries, caps: Capacities) -> ScenarioSeries {
    let scale = |v: &[f64], cap: f64| {
        let peak = v.iter().copied().fold(0.0f64, f64::max);
        let k = if peak > 0.0 { cap / peak } else { 0.0 };
        v.iter().map(|x| x * k).collect::<Vec<_>>()
    };
    ScenarioSeries {
        load: scale(&s.load, caps.load),
        solar: scale(&s.solar, caps.solar),
        wind: scale(&s.wind, caps.wind),
        ..s.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_hours_to_hourly_mean() {
        let csv = "timestamp,load_kw,solar_kw,wind_kw\n\
                   2023-01-01 00:00:00,2,0,1\n2023-01-01 00:15:00,4,0,1\n\
                   2023-01-01 00:30:00,6,0,1\n2023-01-01 00:45:00,8,0,1\n";
        let s = parse_timeseries_str(csv, "q", 60).unwrap();
        assert_eq!(s.load, vec![5.0]);
        assert_eq!(s.dt, 1.0);
    }

    #[test]
    fn hourly_to_half_hours_repeats() {
        let csv = "timestamp,load_kw,solar_kw,wind_kw\n2023-01-01 00:00,1,2,3\n2023-01-01 01:00,4,5,6\n";
        let s = parse_timeseries_str(csv, "h", 30).unwrap();
        assert_eq!(s.load, vec![1.0, 1.0, 4.0, 4.0]);
        assert_eq!(s.dt, 0.5);
        assert_eq!(s.timestamps[1].format("%H:%M").to_string(), "00:30");
    }

    #[test]
    fn errors_name_column_and_row() {
        let e = parse_timeseries_str("timestamp,load_kw,solar_kw\n2023-01-01 00:00,1,2\n", "x", 60).unwrap_err();
        assert!(e.to_string().contains("wind_kw"), "{e}");
        let csv = "timestamp,load_kw,solar_kw,wind_kw\n2023-01-01 01:00,1,1,1\n2023-01-01 00:00,1,1,1\n";
        let e = parse_timeseries_str(csv, "x", 60).unwrap_err();
        assert!(e.to_string().contains("row 2"), "{e}");
        let csv = "timestamp,load_kw,solar_kw,wind_kw\n2023-01-01 00:00,1,NaN,1\n";
        let e = parse_timeseries_str(csv, "x", 60).unwrap_err();
        assert!(e.to_string().contains("row 1") && e.to_string().contains("solar_kw"), "{e}");
    }

    #[test]
    fn bad_resolution() {
        assert!(check_resolution(45).is_err());
        assert!(check_resolution(0).is_err());
        for m in [1, 15, 60, 120] {
            check_resolution(m).unwrap();
        }
    }
}
