//! Seeded synthetic seasonal year.
//!
//! Load follows an annual cosine with its peak in mid-January plus a daily
//! profile with morning and evening peaks. Solar peaks in summer, with a
//! random daily clearness index. Wind is slightly stronger in winter and
//! carries AR(1) noise on a daily and an hourly time scale. The defaults put
//! the winter net load above what the diesel unit alone can serve, so winter
//! operation depends on hydrogen stored during summer.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScenarioSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub year: i32,
    /// Number of days generated (365 for a full year).
    pub days: usize,
    /// Mean load in mid-winter and mid-summer (kW).
    pub load_winter: f64,
    pub load_summer: f64,
    /// Relative depth of the daily load swing.
    pub load_daily: f64,
    /// Clear-sky solar peak in mid-summer and mid-winter (kW).
    pub solar_summer: f64,
    pub solar_winter: f64,
    /// Mean wind output in winter and summer (kW).
    pub wind_winter: f64,
    pub wind_summer: f64,
    /// Relative standard deviation of load noise.
    pub load_noise: f64,
    pub wind_noise: f64,
    pub capacity: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 2023,
            year: 2023,
            days: 365,
            load_winter: 79.0,
            load_summer: 42.0,
            load_daily: 0.6,
            solar_summer: 95.0,
            solar_winter: 25.0,
            wind_winter: 14.0,
            wind_summer: 11.0,
            load_noise: 0.05,
            wind_noise: 0.6,
            capacity: 100.0,
        }
    }
}

/// Seasonal weight: 1 in mid-January, 0 in mid-July.
fn winter_weight(day_of_year: f64) -> f64 {
    0.5 * (1.0 + (2.0 * PI * (day_of_year - 15.0) / 365.0).cos())
}

fn daily_load_shape(hour: f64) -> f64 {
    let bump = |c: f64, w: f64| (-(hour - c).powi(2) / (2.0 * w * w)).exp();
    // zero-mean-ish profile: night trough, morning and evening peaks
    -0.6 + 0.7 * bump(8.0, 1.8) + 1.0 * bump(19.0, 2.2) + 0.35 * bump(13.0, 3.0)
}

pub fn synthetic_year(cfg: &SynthConfig) -> Result<ScenarioSeries> {
    if cfg.days == 0 || !(cfg.capacity > 0.0) {
        return Err(Error::Config("synthetic year needs days > 0 and a positive capacity".into()));
    }
    let start = NaiveDate::from_ymd_opt(cfg.year, 1, 1)
        .ok_or_else(|| Error::Config(format!("invalid year {}", cfg.year)))?
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let clear = Beta::new(4.0, 1.6).unwrap();
    let n = cfg.days * 24;
    let mut load = Vec::with_capacity(n);
    let mut solar = Vec::with_capacity(n);
    let mut wind = Vec::with_capacity(n);
    let mut ts = Vec::with_capacity(n);
    let mut load_ar = 0.0;
    let mut wind_day = 0.0;
    let mut wind_hour = 0.0;
    let mut clearness = 1.0;
    for k in 0..n {
        let t = start + chrono::Duration::hours(k as i64);
        let doy = t.ordinal0() as f64 + t.hour() as f64 / 24.0;
        let hour = t.hour() as f64 + 0.5;
        let w = winter_weight(doy);
        if t.hour() == 0 {
            clearness = clear.sample(&mut rng);
            wind_day = 0.8 * wind_day + 0.6 * std.sample(&mut rng);
        }
        load_ar = 0.9 * load_ar + (1.0f64 - 0.81).sqrt() * std.sample(&mut rng);
        wind_hour = 0.85 * wind_hour + (1.0f64 - 0.7225).sqrt() * std.sample(&mut rng);

        let base = cfg.load_summer + (cfg.load_winter - cfg.load_summer) * w;
        let l = base * (1.0 + cfg.load_daily * daily_load_shape(hour)) * (1.0 + cfg.load_noise * load_ar);
        load.push(l.clamp(0.0, cfg.capacity));

        // day length 8 h in winter, 16 h in summer, centred on noon
        let half = 4.0 + 4.0 * (1.0 - w);
        let x = (hour - 12.0) / half;
        let sun = if x.abs() < 1.0 { (0.5 * PI * x).cos().powi(2) } else { 0.0 };
        let peak = cfg.solar_winter + (cfg.solar_summer - cfg.solar_winter) * (1.0 - w);
        solar.push((peak * sun * clearness).clamp(0.0, cfg.capacity));

        let mean = cfg.wind_summer + (cfg.wind_winter - cfg.wind_summer) * w;
        let z = 0.75 * wind_day + 0.45 * wind_hour;
        let v = mean * (cfg.wind_noise * z - 0.5 * cfg.wind_noise * cfg.wind_noise * 0.76).exp();
        wind.push(v.clamp(0.0, cfg.capacity));
        ts.push(t);
    }
    let mut s = ScenarioSeries::new(format!("synthetic-{}", cfg.seed), ts, load, solar, wind)?;
    s.dt = 1.0;
    Ok(s)
}
