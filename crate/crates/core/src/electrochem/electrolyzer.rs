use serde::{Deserialize, Serialize};

use super::{bisect_increasing, conversion_efficiency, hydrogen_mass_rate, Direction, LHV_KWH_PER_KG};
use crate::error::{Error, Result};

/// Alkaline electrolyzer stack parameters.
///
/// Defaults follow the Ulleberg / Sanchez coefficient set at 90 °C and 10 bar
/// with an overvoltage coefficient and cell count chosen for a 50 kW stack
/// whose charging efficiency peaks near 20% of rated power. The logarithm in
/// the overvoltage term is base 10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElectrolyzerParams {
    pub u_rev: f64,
    pub r1: f64,
    pub r2: f64,
    pub d1: f64,
    pub d2: f64,
    pub s: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    /// Electrode area (m²).
    pub area: f64,
    pub n_cells: u32,
    /// Operating temperature (°C).
    pub theta: f64,
    /// Operating pressure (bar).
    pub pressure: f64,
    pub p_min_frac: f64,
    /// Rated stack power (kW).
    pub p_rated: f64,
}

impl Default for ElectrolyzerParams {
    fn default() -> Self {
        Self {
            u_rev: 1.18,
            r1: 4.45153e-5,
            r2: 6.88874e-9,
            d1: -3.12996e-6,
            d2: 4.47137e-7,
            s: 0.42,
            t1: -0.01539,
            t2: 2.00181,
            t3: 15.24178,
            f1: 478645.74,
            f2: -2953.15,
            f3: 1.0396,
            f4: -0.00104,
            area: 0.25,
            n_cells: 14,
            theta: 90.0,
            pressure: 10.0,
            p_min_frac: 0.15,
            p_rated: 50.0,
        }
    }
}

impl ElectrolyzerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(format!("electrolyzer: {m}")));
        if !(self.area > 0.0) {
            return bad("electrode area must be positive");
        }
        if self.n_cells < 1 {
            return bad("at least one cell is required");
        }
        if !(0.0..1.0).contains(&self.p_min_frac) {
            return bad("p_min_frac must lie in [0, 1)");
        }
        if !(self.p_rated > 0.0) {
            return bad("rated power must be positive");
        }
        if !(self.theta > 0.0) {
            return bad("temperature must be positive");
        }
        Ok(())
    }

    pub fn p_min(&self) -> f64 {
        self.p_min_frac * self.p_rated
    }

    /// Stack power (kW) drawn at current `i`.
    pub fn stack_power(&self, i: f64) -> Result<f64> {
        Ok(electrolyzer_cell_voltage(i, self)? * i * self.n_cells as f64 / 1000.0)
    }

    /// Stack current that draws `p` kW.
    pub fn current_at_power(&self, p: f64) -> Result<f64> {
        if !(p >= 0.0) {
            return Err(Error::Domain(format!("negative electrolyzer power {p} kW")));
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while self.stack_power(hi)? < p {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Domain(format!("power {p} kW is unreachable")));
            }
        }
        Ok(bisect_increasing(0.0, hi, p, |i| self.stack_power(i).unwrap_or(f64::INFINITY)))
    }

    /// Hydrogen production rate (kg/h) at stack power `p` (kW).
    pub fn production_rate(&self, p: f64) -> Result<f64> {
        let i = self.current_at_power(p)?;
        let eta_f = faraday_efficiency(i / self.area, self.theta, self)?;
        hydrogen_mass_rate(i, self.n_cells, eta_f, Direction::Charging)
    }

    /// Charging efficiency (LHV basis) at stack power `p` (kW).
    pub fn efficiency_at_power(&self, p: f64) -> Result<f64> {
        let i = self.current_at_power(p)?;
        let eta_f = faraday_efficiency(i / self.area, self.theta, self)?;
        let u = electrolyzer_cell_voltage(i, self)?;
        let eta = conversion_efficiency(u, eta_f, Direction::Charging)?;
        debug_assert!((eta - self.production_rate(p)? * LHV_KWH_PER_KG / p).abs() < 1e-6);
        Ok(eta)
    }
}

/// Cell voltage (V) at stack current `i` (A).
pub fn electrolyzer_cell_voltage(i: f64, params: &ElectrolyzerParams) -> Result<f64> {
    if !(i >= 0.0) {
        return Err(Error::Domain(format!("negative current {i} A")));
    }
    let p = params;
    let j = i / p.area;
    let th = p.theta;
    let ohmic = ((p.r1 + p.d1) + p.r2 * th + p.d2 * p.pressure) * j;
    let t = p.t1 + p.t2 / th + p.t3 / (th * th);
    let arg = t * j + 1.0;
    if !(arg > 0.0) {
        return Err(Error::Domain(format!("overvoltage log argument {arg} is not positive")));
    }
    Ok(p.u_rev + ohmic + p.s * arg.log10())
}

/// Faraday efficiency at current density `j` (A/m²) and temperature `theta` (°C).
pub fn faraday_efficiency(j: f64, theta: f64, params: &ElectrolyzerParams) -> Result<f64> {
    if !(j >= 0.0) {
        return Err(Error::Domain(format!("negative current density {j} A/m²")));
    }
    let p = params;
    let denom = p.f1 + p.f2 * theta + j * j;
    if !(denom > 0.0) {
        return Err(Error::Parameter(format!("Faraday denominator {denom} is not positive")));
    }
    let raw = j * j / denom * (p.f3 + p.f4 * theta);
    if raw > 1.0 {
        log::warn!("Faraday efficiency {raw} exceeds 1; clamped");
    }
    Ok(raw.clamp(0.0, 1.0))
}
