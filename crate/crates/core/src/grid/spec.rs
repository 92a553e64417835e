use serde::{Deserialize, Serialize};

use crate::electrochem::{
    fit_piecewise, sample_electrolyzer, sample_fuel_cell, Direction, ElectrolyzerParams, FuelCellParams, PiecewiseCurve,
    LHV_KWH_PER_KG,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub eta_c: f64,
    pub eta_d: f64,
    /// Self-discharge rate per hour.
    pub eps: f64,
    pub p_max: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub e0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydrogenSpec {
    pub charge_curve: PiecewiseCurve,
    pub discharge_curve: PiecewiseCurve,
    /// Storage bounds and initial content (kg).
    pub e_min: f64,
    pub e_max: f64,
    pub e0: f64,
    /// Power cap of both conversion directions (kW).
    pub p_max: f64,
    /// Hydrogen withdrawn for external use per step (kg), indexed by absolute
    /// scenario step; missing entries are zero.
    pub hydrogen_load: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DieselSpec {
    pub p_min: f64,
    pub p_max: f64,
    /// Ramp limits (kW per step).
    pub rd: f64,
    pub ru: f64,
    /// Output before the first step, used by the first ramp constraint.
    pub initial: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prices {
    pub c_l: f64,
    pub c_d: f64,
    pub c_b: f64,
    pub c_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capacities {
    pub wind: f64,
    pub solar: f64,
    pub load: f64,
}

/// Physical and economic parameters of the islanded microgrid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrogridSpec {
    pub battery: BatterySpec,
    pub hydrogen: HydrogenSpec,
    pub diesel: DieselSpec,
    /// Grid import cap per absolute step (kW); missing entries are zero (island).
    pub grid_import_cap: Vec<f64>,
    pub prices: Prices,
    pub capacities: Capacities,
    /// Step length (h).
    pub dt: f64,
    /// Accept c_B ≥ c_H (outside the storage-priority regime).
    pub allow_price_inversion: bool,
}

/// Hydrogen efficiency model used for planning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EfficiencyModel {
    /// Piecewise fit of the semi-empirical curves.
    E1,
    /// Constant 63% charging and discharging.
    E2,
    /// Constant 53% charging and 45% discharging.
    E3,
}

impl EfficiencyModel {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(Self::E1),
            "E2" => Ok(Self::E2),
            "E3" => Ok(Self::E3),
            _ => Err(Error::Config(format!("unknown efficiency model `{s}`"))),
        }
    }
}

/// Inputs for building the hydrogen curves of a spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveSettings {
    pub electrolyzer: ElectrolyzerParams,
    pub fuel_cell: FuelCellParams,
    pub segments_charge: usize,
    pub segments_discharge: usize,
    pub samples: usize,
}

impl Default for CurveSettings {
    fn default() -> Self {
        Self {
            electrolyzer: ElectrolyzerParams::default(),
            fuel_cell: FuelCellParams::default(),
            segments_charge: 3,
            segments_discharge: 3,
            samples: 200,
        }
    }
}

impl CurveSettings {
    /// Charging and discharging curves for the given efficiency model.
    pub fn curves(&self, model: EfficiencyModel) -> Result<(PiecewiseCurve, PiecewiseCurve)> {
        let el = &self.electrolyzer;
        let fc = &self.fuel_cell;
        match model {
            EfficiencyModel::E1 => {
                let c = fit_piecewise(&sample_electrolyzer(el, self.samples)?, self.segments_charge, el.p_min(), Direction::Charging)?;
                let d = fit_piecewise(&sample_fuel_cell(fc, self.samples)?, self.segments_discharge, 0.0, Direction::Discharging)?;
                Ok((c.curve, d.curve))
            }
            EfficiencyModel::E2 => Ok((
                PiecewiseCurve::constant_efficiency(0.63, el.p_rated, Direction::Charging)?,
                PiecewiseCurve::constant_efficiency(0.63, fc.p_rated, Direction::Discharging)?,
            )),
            EfficiencyModel::E3 => Ok((
                PiecewiseCurve::constant_efficiency(0.53, el.p_rated, Direction::Charging)?,
                PiecewiseCurve::constant_efficiency(0.45, fc.p_rated, Direction::Discharging)?,
            )),
        }
    }
}

impl MicrogridSpec {
    /// The reference test system: 50 kW / 100 kWh battery, 50 kW hydrogen
    /// conversion with 20 MWh (LHV) of storage, a 50 kW diesel unit and
    /// 100 kW of wind, solar and peak load.
    pub fn test_system() -> Result<Self> {
        Self::from_curves(CurveSettings::default().curves(EfficiencyModel::E1)?)
    }

    pub fn from_curves((charge_curve, discharge_curve): (PiecewiseCurve, PiecewiseCurve)) -> Result<Self> {
        let e_max_h = 20_000.0 / LHV_KWH_PER_KG;
        let spec = Self {
            battery: BatterySpec {
                eta_c: 0.9,
                eta_d: 0.9,
                eps: 0.01 / 720.0,
                p_max: 50.0,
                e_min: 0.0,
                e_max: 100.0,
                e0: 50.0,
            },
            hydrogen: HydrogenSpec {
                charge_curve,
                discharge_curve,
                e_min: 0.0,
                e_max: e_max_h,
                e0: 0.5 * e_max_h,
                p_max: 50.0,
                hydrogen_load: Vec::new(),
            },
            diesel: DieselSpec { p_min: 0.0, p_max: 50.0, rd: 50.0, ru: 50.0, initial: None },
            grid_import_cap: Vec::new(),
            prices: Prices { c_l: 5.0, c_d: 0.3, c_b: 0.02, c_h: 0.03 },
            capacities: Capacities { wind: 100.0, solar: 100.0, load: 100.0 },
            dt: 1.0,
            allow_price_inversion: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Copy with the hydrogen curves replaced.
    pub fn with_curves(&self, curves: (PiecewiseCurve, PiecewiseCurve)) -> Self {
        let mut s = self.clone();
        s.hydrogen.charge_curve = curves.0;
        s.hydrogen.discharge_curve = curves.1;
        s
    }

    pub fn hydrogen_load_at(&self, step: usize) -> f64 {
        self.hydrogen.hydrogen_load.get(step).copied().unwrap_or(0.0)
    }

    pub fn grid_cap_at(&self, step: usize) -> f64 {
        self.grid_import_cap.get(step).copied().unwrap_or(0.0)
    }

    /// Largest diesel change per step that actually restricts operation.
    pub fn ramp_binding(&self) -> bool {
        let span = self.diesel.p_max - self.diesel.p_min;
        self.diesel.ru < span || self.diesel.rd < span
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        let b = &self.battery;
        let h = &self.hydrogen;
        let d = &self.diesel;
        if !(self.dt > 0.0) {
            return bad("dt must be positive".into());
        }
        if !(b.e_min <= b.e0 && b.e0 <= b.e_max) {
            return bad(format!("battery e0 {} outside [{}, {}]", b.e0, b.e_min, b.e_max));
        }
        if !(h.e_min <= h.e0 && h.e0 <= h.e_max) {
            return bad(format!("hydrogen e0 {} outside [{}, {}]", h.e0, h.e_min, h.e_max));
        }
        if !(b.eta_c > 0.0 && b.eta_c <= 1.0 && b.eta_d > 0.0 && b.eta_d <= 1.0) {
            return bad("battery efficiencies must lie in (0, 1]".into());
        }
        if !(b.eps >= 0.0 && b.eps * self.dt < 1.0) {
            return bad("battery self-discharge must lie in [0, 1/dt)".into());
        }
        if !(b.p_max >= 0.0 && h.p_max >= 0.0) {
            return bad("storage power limits must be non-negative".into());
        }
        if !(0.0 <= d.p_min && d.p_min <= d.p_max && d.rd >= 0.0 && d.ru >= 0.0) {
            return bad("diesel limits are inconsistent".into());
        }
        let p = &self.prices;
        if [p.c_l, p.c_d, p.c_b, p.c_h].iter().any(|v| !(*v >= 0.0)) {
            return bad("prices must be non-negative".into());
        }
        if p.c_b >= p.c_h && !self.allow_price_inversion {
            return bad(format!("battery price {} must be below hydrogen price {}", p.c_b, p.c_h));
        }
        if h.hydrogen_load.iter().chain(&self.grid_import_cap).any(|v| !(*v >= 0.0)) {
            return bad("hydrogen load and grid cap series must be non-negative".into());
        }
        h.charge_curve.validate()?;
        h.discharge_curve.validate()?;
        if h.charge_curve.direction != Direction::Charging || h.discharge_curve.direction != Direction::Discharging {
            return bad("hydrogen curve directions are swapped".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_system_is_valid() {
        let s = MicrogridSpec::test_system().unwrap();
        assert_eq!(s.hydrogen.charge_curve.n_segments(), 3);
        assert!((s.hydrogen.e_max - 600.06).abs() < 0.01);
        assert!(!s.ramp_binding());
    }

    #[test]
    fn rejects_bad_specs() {
        let s = MicrogridSpec::test_system().unwrap();
        let mut a = s.clone();
        a.hydrogen.e0 = a.hydrogen.e_max + 1.0;
        assert!(a.validate().is_err());
        let mut b = s.clone();
        b.prices.c_b = 0.05;
        assert!(b.validate().is_err());
        b.allow_price_inversion = true;
        assert!(b.validate().is_ok());
        let mut c = s;
        c.dt = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn constant_models_bracket_e1() {
        let cs = CurveSettings::default();
        let (c1, _) = cs.curves(EfficiencyModel::E1).unwrap();
        let (c2, _) = cs.curves(EfficiencyModel::E2).unwrap();
        let (c3, _) = cs.curves(EfficiencyModel::E3).unwrap();
        for p in [10.0, 25.0, 50.0] {
            let (a, b, c) = (c1.eval(p).unwrap(), c2.eval(p).unwrap(), c3.eval(p).unwrap());
            assert!(b >= a && a >= c - 1e-3, "{p}: {a} {b} {c}");
        }
    }
}
