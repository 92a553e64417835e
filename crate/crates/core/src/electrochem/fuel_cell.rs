use serde::{Deserialize, Serialize};

use super::{bisect_increasing, conversion_efficiency, hydrogen_mass_rate, Direction, FARADAY, GAS_CONSTANT};
use crate::error::{Error, Result};

/// PEM fuel cell stack parameters (Amphlett-type equivalent circuit).
///
/// `d_s` is the entropy change magnitude; the Nernst voltage falls with
/// temperature above `theta_ref`. The oxygen concentration is in mol/m³ and
/// the activation coefficients are scaled for those units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuelCellParams {
    pub d_g: f64,
    pub d_s: f64,
    /// Operating temperature (K).
    pub theta: f64,
    pub theta_ref: f64,
    pub p_h2: f64,
    pub p_o2: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub r_m: f64,
    pub l: f64,
    pub r_c: f64,
    pub b_con: f64,
    pub j_max: f64,
    pub c_o2: f64,
    pub area: f64,
    pub n_cells: u32,
    pub p_rated: f64,
    /// Smallest admissible current as a multiple of the area (A per m²).
    pub i_min_per_area: f64,
}

impl Default for FuelCellParams {
    fn default() -> Self {
        Self {
            d_g: 237180.0,
            d_s: 164.0,
            theta: 333.15,
            theta_ref: 298.15,
            p_h2: 10.0,
            p_o2: 10.0,
            a1: 0.948,
            a2: -0.002544,
            a3: -7.6e-5,
            a4: 1.93e-4,
            r_m: 0.0614,
            l: 178e-6,
            r_c: 3e-4,
            b_con: 0.016,
            j_max: 15000.0,
            c_o2: 8.78,
            area: 0.05,
            n_cells: 248,
            p_rated: 50.0,
            i_min_per_area: 1e-3,
        }
    }
}

/// Voltage loss breakdown of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelCellVoltages {
    pub nernst: f64,
    pub activation: f64,
    pub ohmic: f64,
    pub concentration: f64,
}

impl FuelCellVoltages {
    pub fn cell(&self) -> f64 {
        self.nernst - self.activation - self.ohmic - self.concentration
    }
}

impl FuelCellParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(format!("fuel cell: {m}")));
        if !(self.j_max > 0.0) {
            return bad("J_max must be positive");
        }
        if !(self.area > 0.0) {
            return bad("area must be positive");
        }
        if self.n_cells < 1 {
            return bad("at least one cell is required");
        }
        if !(self.theta > 0.0) {
            return bad("temperature must be positive");
        }
        if !(self.p_rated > 0.0) {
            return bad("rated power must be positive");
        }
        if !(self.p_h2 > 0.0 && self.p_o2 > 0.0 && self.c_o2 > 0.0) {
            return bad("pressures and oxygen concentration must be positive");
        }
        Ok(())
    }

    pub fn i_min(&self) -> f64 {
        self.i_min_per_area * self.area
    }

    pub fn voltages(&self, i: f64) -> Result<FuelCellVoltages> {
        if !(i >= self.i_min()) {
            return Err(Error::Domain(format!("current {i} A is below i_min {}", self.i_min())));
        }
        let j = i / self.area;
        if j >= self.j_max {
            return Err(Error::Domain(format!("current density {j} A/m² reaches J_max")));
        }
        let th = self.theta;
        let nernst = (self.d_g - self.d_s * (th - self.theta_ref)
            + GAS_CONSTANT * th * (self.p_h2.ln() + 0.5 * self.p_o2.ln()))
            / (2.0 * FARADAY);
        let activation = self.a1 + self.a2 * th + self.a3 * th * self.c_o2.ln() + self.a4 * th * i.ln();
        let ohmic = i * (self.r_m * self.l / self.area + self.r_c);
        let concentration = -self.b_con * (1.0 - j / self.j_max).ln();
        Ok(FuelCellVoltages { nernst, activation, ohmic, concentration })
    }

    /// Stack output (kW) at current `i`, zero below `i_min`.
    pub fn stack_power(&self, i: f64) -> Result<f64> {
        if i < self.i_min() {
            return Ok(0.0);
        }
        Ok(fuelcell_cell_voltage(i, self)? * i * self.n_cells as f64 / 1000.0)
    }

    /// Current of the maximum power point, below which power increases with current.
    fn max_power_current(&self) -> f64 {
        let i_hi = self.j_max * self.area * (1.0 - 1e-9);
        let (mut a, mut b) = (self.i_min(), i_hi);
        let f = |i: f64| self.stack_power(i).unwrap_or(f64::NEG_INFINITY);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if f(m1) < f(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        0.5 * (a + b)
    }

    /// Stack current delivering `p` kW on the rising branch of the power curve.
    pub fn current_at_power(&self, p: f64) -> Result<f64> {
        if !(p >= 0.0) {
            return Err(Error::Domain(format!("negative fuel cell power {p} kW")));
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        let i_mp = self.max_power_current();
        if self.stack_power(i_mp)? < p {
            return Err(Error::Domain(format!("power {p} kW exceeds the stack maximum")));
        }
        Ok(bisect_increasing(self.i_min(), i_mp, p, |i| self.stack_power(i).unwrap_or(0.0)))
    }

    /// Hydrogen consumption (kg/h) at output power `p` (kW).
    pub fn consumption_rate(&self, p: f64) -> Result<f64> {
        let i = self.current_at_power(p)?;
        hydrogen_mass_rate(i, self.n_cells, 1.0, Direction::Discharging)
    }

    /// Discharging efficiency (HHV basis) at output power `p` (kW).
    pub fn efficiency_at_power(&self, p: f64) -> Result<f64> {
        let i = self.current_at_power(p)?;
        conversion_efficiency(fuelcell_cell_voltage(i, self)?, 1.0, Direction::Discharging)
    }
}

/// Cell voltage (V) at stack current `i` (A).
pub fn fuelcell_cell_voltage(i: f64, params: &FuelCellParams) -> Result<f64> {
    Ok(params.voltages(i)?.cell())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_concentration_coefficient() {
        let p = FuelCellParams { b_con: 0.0, ..Default::default() };
        for i in [1.0, 100.0, 700.0] {
            assert_eq!(p.voltages(i).unwrap().concentration, 0.0);
        }
    }

    #[test]
    fn contact_resistance_is_linear() {
        let p = FuelCellParams::default();
        let q = FuelCellParams { r_c: 2.0 * p.r_c, ..Default::default() };
        let i = 120.0;
        let extra = q.voltages(i).unwrap().ohmic - p.voltages(i).unwrap().ohmic;
        assert!((extra - i * p.r_c).abs() < 1e-12);
    }

    #[test]
    fn toy_hand_evaluation() {
        let p = FuelCellParams {
            d_g: 237000.0,
            d_s: 0.0,
            theta: 298.15,
            p_h2: 1.0,
            p_o2: 1.0,
            a1: 0.9,
            a2: 0.0,
            a3: 0.0,
            a4: 1e-4,
            r_m: 0.0,
            r_c: 1e-3,
            b_con: 0.02,
            j_max: 1000.0,
            area: 0.1,
            ..Default::default()
        };
        let i = 50.0;
        let e = 237000.0 / (2.0 * 96485.0);
        let act = 0.9 + 1e-4 * 298.15 * 50f64.ln();
        let ohm = 50.0 * 1e-3;
        let con = -0.02 * (1.0 - 500.0 / 1000.0f64).ln();
        let u = fuelcell_cell_voltage(i, &p).unwrap();
        assert!((u - (e - act - ohm - con)).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let p = FuelCellParams::default();
        assert!(fuelcell_cell_voltage(p.j_max * p.area, &p).is_err());
        assert!(fuelcell_cell_voltage(0.0, &p).is_err());
    }

    #[test]
    fn rated_power_is_reachable() {
        let p = FuelCellParams::default();
        let i = p.current_at_power(p.p_rated).unwrap();
        assert!((p.stack_power(i).unwrap() - p.p_rated).abs() < 1e-9);
        let eta = p.efficiency_at_power(p.p_rated).unwrap();
        assert!((0.4..0.5).contains(&eta), "{eta}");
    }
}
