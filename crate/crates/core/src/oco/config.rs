use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ensemble parameters. `alpha_{i,t} = alpha0 · 2^(i-1) / t^c`,
/// `beta_{i,t} = beta0 / sqrt(alpha_{i,t})` and `gamma = gamma0 / T^c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OcoConfig {
    pub horizon: usize,
    pub kappa: f64,
    pub c: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub gamma0: f64,
    /// Bound on subgradient norms; limits `gamma0` when known.
    pub g_bound: Option<f64>,
}

impl Default for OcoConfig {
    fn default() -> Self {
        Self { horizon: 8760, kappa: 0.5, c: 0.5, alpha0: 1.0, beta0: 1.0, gamma0: 0.1, g_bound: None }
    }
}

/// `⌊κ log₂(1 + T)⌋ + 1`.
pub fn num_experts(horizon: usize, kappa: f64) -> usize {
    (kappa * (1.0 + horizon as f64).log2()).floor() as usize + 1
}

/// `ρ_i = (M + 1) / (i (i + 1) M)` for `i = 1..M`. The last weight takes the
/// remainder so that a left-to-right sum is exactly one; the partial sum is
/// at least ½, so the subtraction is exact.
pub fn initial_weights(m: usize) -> Vec<f64> {
    let mf = m as f64;
    let mut w: Vec<f64> = (1..m).map(|i| (mf + 1.0) / ((i * (i + 1)) as f64 * mf)).collect();
    let head: f64 = w.iter().sum();
    w.push(1.0 - head);
    w
}

impl OcoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.horizon == 0 {
            return bad("OCO horizon must be at least 1".into());
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return bad(format!("c = {} outside (0, 1)", self.c));
        }
        if !(self.kappa >= 0.0 && self.kappa <= self.c) {
            return bad(format!("kappa = {} outside [0, c]", self.kappa));
        }
        if !(self.alpha0 > 0.0) || !(self.beta0 > 0.0) || !(self.gamma0 > 0.0) {
            return bad("alpha0, beta0 and gamma0 must be positive".into());
        }
        if let Some(g) = self.g_bound {
            if !(g > 0.0) {
                return bad(format!("gradient bound {g} must be positive"));
            }
            if self.gamma0 >= self.gamma0_limit().unwrap() {
                return bad(format!("gamma0 = {} must stay below 1/(√2·G) = {}", self.gamma0, self.gamma0_limit().unwrap()));
            }
        }
        Ok(())
    }

    pub fn gamma0_limit(&self) -> Option<f64> {
        self.g_bound.map(|g| 1.0 / (std::f64::consts::SQRT_2 * g))
    }

    /// Records an estimated gradient bound, halving the admissible `gamma0`
    /// when the configured value would exceed it.
    pub fn calibrate(&mut self, g: f64) {
        self.g_bound = Some(g.max(f64::MIN_POSITIVE));
        let lim = self.gamma0_limit().unwrap();
        if self.gamma0 >= lim {
            self.gamma0 = 0.5 * lim;
        }
    }

    pub fn num_experts(&self) -> usize {
        num_experts(self.horizon, self.kappa)
    }

    /// Step size of expert `i` (1-based) at step `t` (1-based).
    pub fn alpha(&self, i: usize, t: usize) -> f64 {
        self.alpha0 * 2f64.powi(i as i32 - 1) / (t.max(1) as f64).powf(self.c)
    }

    pub fn beta(&self, i: usize, t: usize) -> f64 {
        self.beta0 / self.alpha(i, t).sqrt()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma0 / (self.horizon as f64).powf(self.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expert_count() {
        assert_eq!(num_experts(8760, 0.5), 7);
        assert_eq!(num_experts(1, 0.0), 1);
    }

    #[test]
    fn three_expert_weights() {
        let w = initial_weights(3);
        let want = [2.0 / 3.0, 2.0 / 9.0, 1.0 / 9.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn step_sizes_double() {
        let c = OcoConfig::default();
        for t in [1, 5, 100] {
            assert!((c.alpha(3, t) / c.alpha(2, t) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ranges_checked() {
        assert!(OcoConfig::default().validate().is_ok());
        assert!(OcoConfig { kappa: 0.6, ..Default::default() }.validate().is_err());
        assert!(OcoConfig { c: 1.0, kappa: 0.0, ..Default::default() }.validate().is_err());
        assert!(OcoConfig { g_bound: Some(10.0), gamma0: 0.1, ..Default::default() }.validate().is_err());
        let mut c = OcoConfig::default();
        c.calibrate(10.0);
        assert!(c.validate().is_ok());
    }
}
