use chrono::{Datelike, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a scenario came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Historical,
    Perturbed,
}

/// Timestamped load and renewable availability series (kW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSeries {
    pub label: String,
    pub provenance: Provenance,
    pub timestamps: Vec<NaiveDateTime>,
    pub load: Vec<f64>,
    pub solar: Vec<f64>,
    pub wind: Vec<f64>,
    /// Optional grid availability channel (kW).
    pub grid: Option<Vec<f64>>,
    /// Step length (h).
    pub dt: f64,
}

impl ScenarioSeries {
    pub fn new(
        label: impl Into<String>,
        timestamps: Vec<NaiveDateTime>,
        load: Vec<f64>,
        solar: Vec<f64>,
        wind: Vec<f64>,
    ) -> Result<Self> {
        let dt = if timestamps.len() >= 2 {
            (timestamps[1] - timestamps[0]).num_seconds() as f64 / 3600.0
        } else {
            1.0
        };
        let s = Self {
            label: label.into(),
            provenance: Provenance::Historical,
            timestamps,
            load,
            solar,
            wind,
            grid: None,
            dt,
        };
        s.validate()?;
        Ok(s)
    }

    /// Scenario with hourly timestamps starting at `start`.
    pub fn hourly(label: impl Into<String>, start: NaiveDateTime, load: Vec<f64>, solar: Vec<f64>, wind: Vec<f64>) -> Result<Self> {
        let ts = (0..load.len()).map(|k| start + chrono::Duration::hours(k as i64)).collect();
        let mut s = Self::new(label, ts, load, solar, wind)?;
        s.dt = 1.0;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    pub fn renewable(&self, t: usize) -> f64 {
        self.solar[t] + self.wind[t]
    }

    pub fn grid_at(&self, t: usize) -> Option<f64> {
        self.grid.as_ref().map(|g| g[t])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.load.len();
        if self.solar.len() != n || self.wind.len() != n || self.timestamps.len() != n {
            return Err(Error::Dimension(format!("scenario `{}` channels have different lengths", self.label)));
        }
        if let Some(g) = &self.grid {
            if g.len() != n {
                return Err(Error::Dimension(format!("scenario `{}` grid channel length", self.label)));
            }
        }
        let chans = [&self.load, &self.solar, &self.wind];
        for (k, ch) in chans.iter().enumerate() {
            if let Some(t) = ch.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
                let name = ["load", "solar", "wind"][k];
                return Err(Error::Data(format!("scenario `{}`: {name} at step {t} is negative or not finite", self.label)));
            }
        }
        if !(self.dt > 0.0) {
            return Err(Error::Data(format!("scenario `{}` has non-positive dt", self.label)));
        }
        let step = chrono::Duration::milliseconds((self.dt * 3.6e6).round() as i64);
        for t in 1..n {
            if self.timestamps[t] - self.timestamps[t - 1] != step {
                return Err(Error::Data(format!(
                    "scenario `{}`: timestamps not strictly increasing with uniform spacing at step {t}",
                    self.label
                )));
            }
        }
        Ok(())
    }

    /// Steps `start..start+len` as a new scenario.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let end = (start + len).min(self.len());
        Self {
            label: self.label.clone(),
            provenance: self.provenance,
            timestamps: self.timestamps[start..end].to_vec(),
            load: self.load[start..end].to_vec(),
            solar: self.solar[start..end].to_vec(),
            wind: self.wind[start..end].to_vec(),
            grid: self.grid.as_ref().map(|g| g[start..end].to_vec()),
            dt: self.dt,
        }
    }

    /// Copy with solar and wind scaled by `k`.
    pub fn scale_renewables(&self, k: f64) -> Self {
        let mut s = self.clone();
        s.solar.iter_mut().for_each(|v| *v *= k);
        s.wind.iter_mut().for_each(|v| *v *= k);
        s
    }

    /// Calendar quarter key (year·4 + quarter) of every step.
    pub fn quarter_keys(&self) -> Vec<i32> {
        self.timestamps
            .iter()
            .map(|t| t.year() * 4 + (t.month0() / 3) as i32)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2023, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    #[test]
    fn validates_lengths_and_signs() {
        assert!(ScenarioSeries::hourly("a", start(), vec![1.0; 3], vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(ScenarioSeries::hourly("a", start(), vec![1.0, -1.0], vec![0.0; 2], vec![0.0; 2]).is_err());
        let s = ScenarioSeries::hourly("a", start(), vec![1.0; 5], vec![2.0; 5], vec![3.0; 5]).unwrap();
        assert_eq!(s.renewable(2), 5.0);
        assert_eq!(s.slice(1, 3).len(), 3);
    }

    #[test]
    fn quarters_follow_calendar() {
        let s = ScenarioSeries::hourly("a", start(), vec![1.0; 24 * 100], vec![0.0; 2400], vec![0.0; 2400]).unwrap();
        let q = s.quarter_keys();
        assert_eq!(q[0], 2023 * 4);
        assert_eq!(q[24 * 95], 2023 * 4 + 1);
    }
}
