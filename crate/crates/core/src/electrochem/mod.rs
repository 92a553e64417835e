//! Semi-empirical electrolyzer and PEM fuel cell models and their
//! piecewise-linear hydrogen rate approximations.
//!
//! Hydrogen is tracked as mass (kg); rates are kg/h and powers kW. The
//! charging efficiency uses the lower heating value and the discharging
//! efficiency the higher heating value, mirroring the original model.

mod electrolyzer;
mod fuel_cell;
mod piecewise;

pub use electrolyzer::{electrolyzer_cell_voltage, faraday_efficiency, ElectrolyzerParams};
pub use fuel_cell::{fuelcell_cell_voltage, FuelCellParams};
pub use piecewise::{eval_piecewise, fit_piecewise, read_curve_csv, read_samples_csv, write_curve_csv, write_samples_csv, FitReport, PiecewiseCurve, Segment};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Faraday constant (C/mol).
pub const FARADAY: f64 = 96485.0;
/// Molar mass of hydrogen (kg/mol).
pub const M_H2: f64 = 0.002016;
/// Lower heating value of hydrogen (kWh/kg).
pub const LHV_KWH_PER_KG: f64 = 33.33;
/// Higher heating value of hydrogen (kWh/kg).
pub const HHV_KWH_PER_KG: f64 = 39.4;
/// Universal gas constant (J/(K·mol)).
pub const GAS_CONSTANT: f64 = 8.314;

const J_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Charging,
    Discharging,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Charging => "charging",
            Direction::Discharging => "discharging",
        }
    }
}

/// Hydrogen production (charging) or consumption (discharging) rate in kg/h
/// for stack current `i` (A) over `n_cells` cells. `eta_f` is ignored when
/// discharging.
pub fn hydrogen_mass_rate(i: f64, n_cells: u32, eta_f: f64, direction: Direction) -> Result<f64> {
    if !(i >= 0.0) {
        return Err(Error::Domain(format!("negative current {i} A")));
    }
    let base = 3600.0 * M_H2 * i * n_cells as f64 / (2.0 * FARADAY);
    Ok(match direction {
        Direction::Charging => eta_f * base,
        Direction::Discharging => base,
    })
}

/// Electrical-to-hydrogen (charging, LHV basis) or hydrogen-to-electrical
/// (discharging, HHV basis) conversion efficiency at cell voltage `u_cell`.
pub fn conversion_efficiency(u_cell: f64, eta_f: f64, direction: Direction) -> Result<f64> {
    if !(u_cell > 0.0) {
        return Err(Error::Domain(format!("cell voltage {u_cell} V must be positive")));
    }
    Ok(match direction {
        Direction::Charging => eta_f * M_H2 * LHV_KWH_PER_KG * J_PER_KWH / (2.0 * FARADAY * u_cell),
        Direction::Discharging => 2.0 * FARADAY * u_cell / (M_H2 * HHV_KWH_PER_KG * J_PER_KWH),
    })
}

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]` by bisection.
pub(crate) fn bisect_increasing(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Dense `(power kW, rate kg/h)` samples of a device over its operating range.
pub fn sample_electrolyzer(params: &ElectrolyzerParams, n: usize) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    let p_min = params.p_min_frac * params.p_rated;
    let n = n.max(2);
    (0..n)
        .map(|k| {
            let p = p_min + (params.p_rated - p_min) * k as f64 / (n - 1) as f64;
            Ok((p, params.production_rate(p)?))
        })
        .collect()
}

pub fn sample_fuel_cell(params: &FuelCellParams, n: usize) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    let n = n.max(2);
    (0..n)
        .map(|k| {
            let p = params.p_rated * k as f64 / (n - 1) as f64;
            Ok((p, params.consumption_rate(p)?))
        })
        .collect()
}
