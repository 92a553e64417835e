use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretReport {
    /// `Σ_t f_t(x_t) − f_t(y_t)`.
    pub reg: f64,
    /// `Σ_t ‖y_{t+1} − y_t‖₂` of the benchmark decisions.
    pub path_length: f64,
}

pub fn compute_regret(realized: &[f64], benchmark: &[f64], benchmark_decisions: &[Vec<f64>]) -> Result<RegretReport> {
    if realized.len() != benchmark.len() {
        return Err(Error::Dimension(format!("{} realized costs for {} benchmark costs", realized.len(), benchmark.len())));
    }
    let reg = realized.iter().zip(benchmark).map(|(a, b)| a - b).sum();
    let path_length = benchmark_decisions
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .sum();
    Ok(RegretReport { reg, path_length })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Dimension("slope needs at least two paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log slope needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}
