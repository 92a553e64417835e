use serde::{Deserialize, Serialize};

use super::MicrogridSpec;

/// Dispatch of one step. Powers in kW, rates in kg/h, energies in kWh (battery)
/// and kg (hydrogen) at the end of the step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DispatchDecision {
    pub p_b_c: f64,
    pub p_b_d: f64,
    pub p_h_c: f64,
    pub p_h_d: f64,
    /// Active electrolyzer / fuel cell segment (`None` when idle).
    pub seg_c: Option<usize>,
    pub seg_d: Option<usize>,
    pub p_d: f64,
    pub p_l: f64,
    pub p_r: f64,
    pub p_g: f64,
    pub h_c: f64,
    pub h_d: f64,
    pub e_b: f64,
    pub e_h: f64,
}

impl DispatchDecision {
    /// Supply minus load; zero for a balanced step.
    pub fn balance_residual(&self, load: f64) -> f64 {
        self.p_g + self.p_r + self.p_d + (self.p_b_d - self.p_b_c) + (self.p_h_d - self.p_h_c) + self.p_l - load
    }
}

/// Per-step cost split ($).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub c_l: f64,
    pub c_d: f64,
    pub c_b: f64,
    pub c_h: f64,
    pub total: f64,
}

impl std::ops::AddAssign for CostBreakdown {
    fn add_assign(&mut self, o: Self) {
        self.c_l += o.c_l;
        self.c_d += o.c_d;
        self.c_b += o.c_b;
        self.c_h += o.c_h;
        self.total += o.total;
    }
}

/// Battery energy after one step with self-discharge.
pub fn battery_soc_step(e: f64, p_c: f64, p_d: f64, spec: &MicrogridSpec, dt: f64) -> f64 {
    let b = &spec.battery;
    (1.0 - b.eps * dt) * e + dt * (b.eta_c * p_c - p_d / b.eta_d)
}

/// Hydrogen mass after one step.
pub fn hydrogen_soc_step(e: f64, h_c: f64, h_d: f64, h_load: f64, dt: f64) -> f64 {
    e + dt * (h_c - h_d) - h_load
}

pub fn stage_cost(x: &DispatchDecision, spec: &MicrogridSpec, dt: f64) -> CostBreakdown {
    let p = &spec.prices;
    let c_l = p.c_l * x.p_l * dt;
    let c_d = p.c_d * x.p_d * dt;
    let c_b = p.c_b * x.p_b_d * dt;
    let c_h = p.c_h * x.p_h_d * dt;
    CostBreakdown { c_l, c_d, c_b, c_h, total: c_l + c_d + c_b + c_h }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> MicrogridSpec {
        let mut s = MicrogridSpec::test_system().unwrap();
        s.battery.eps = 0.0;
        s
    }

    #[test]
    fn battery_cases() {
        let s = spec();
        assert_eq!(battery_soc_step(42.0, 0.0, 0.0, &s, 1.0), 42.0);
        assert!((battery_soc_step(50.0, 10.0, 0.0, &s, 1.0) - 59.0).abs() < 1e-12);
    }

    #[test]
    fn monthly_self_discharge() {
        let s = MicrogridSpec::test_system().unwrap();
        let mut e = 100.0;
        for _ in 0..720 {
            e = battery_soc_step(e, 0.0, 0.0, &s, 1.0);
        }
        let product = 100.0 * (1.0 - s.battery.eps).powi(720);
        assert!((e - product).abs() <= 1e-4 * product);
        assert!((100.0 - e - 1.0).abs() < 0.01);
    }

    #[test]
    fn hydrogen_cases() {
        assert_eq!(hydrogen_soc_step(7.0, 0.0, 0.0, 0.0, 1.0), 7.0);
        assert!((hydrogen_soc_step(100.0, 3.761, 0.0, 0.0, 1.0) - 103.761).abs() < 1e-12);
        assert!(hydrogen_soc_step(1.0, 0.0, 0.0, 2.0, 1.0) < 0.0);
    }

    #[test]
    fn cost_cases() {
        let s = spec();
        assert_eq!(stage_cost(&DispatchDecision::default(), &s, 1.0).total, 0.0);
        let x = DispatchDecision { p_l: 2.0, ..Default::default() };
        assert!((stage_cost(&x, &s, 0.25).c_l - 2.5).abs() < 1e-12);
        let y = DispatchDecision { p_b_d: 10.0, p_h_d: 10.0, ..Default::default() };
        let c = stage_cost(&y, &s, 1.0);
        assert!((c.c_b + c.c_h - 0.5).abs() < 1e-12);
    }
}
