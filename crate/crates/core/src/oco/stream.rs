//! Synthetic convex stream for the regret benchmark.
//!
//! `f_t(x) = ½‖x − θ_t‖²` on the unit box with a target drifting through one
//! sinusoidal period over the horizon, so its path length does not grow with
//! `T`, and a time-varying budget `mean(x) ≤ b_t`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{compute_regret, Affine, Ensemble, FeasibleSet, OcoConfig, StepFeedback};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct ConvexStream {
    pub dim: usize,
    pub horizon: usize,
    phases: Vec<f64>,
}

impl ConvexStream {
    pub fn new(dim: usize, horizon: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases = (0..dim).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        Self { dim, horizon, phases }
    }

    fn phase(&self, t: usize) -> f64 {
        2.0 * PI * t as f64 / self.horizon as f64
    }

    pub fn target(&self, t: usize) -> Vec<f64> {
        let w = self.phase(t);
        self.phases.iter().map(|p| 0.5 + 0.3 * (w + p).sin()).collect()
    }

    pub fn budget(&self, t: usize) -> f64 {
        0.5 + 0.05 * self.phase(t).cos()
    }

    pub fn cost(&self, t: usize, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(self.target(t)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    pub fn constraint(&self, t: usize) -> Affine {
        let a = 1.0 / self.dim as f64;
        Affine { coefs: (0..self.dim).map(|j| (j, a)).collect(), constant: -self.budget(t) }
    }

    /// Constrained minimizer: the target clipped to the box and shifted down
    /// by the multiplier of the budget row, found by bisection.
    pub fn optimum(&self, t: usize) -> Vec<f64> {
        let th = self.target(t);
        let b = self.budget(t);
        let at = |lam: f64| -> Vec<f64> { th.iter().map(|v| (v - lam).clamp(0.0, 1.0)).collect() };
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        if mean(&at(0.0)) <= b {
            return at(0.0);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mean(&at(mid)) > b {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(hi)
    }

    /// Largest subgradient norm on the unit box.
    pub fn gradient_bound(&self) -> f64 {
        (self.dim as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretPoint {
    pub horizon: usize,
    pub regret: f64,
    pub path_length: f64,
    /// Cumulative clipped constraint violation.
    pub violation: f64,
}

/// Runs the ensemble over one stream per horizon.
pub fn bench_regret(horizons: &[usize], dim: usize, seed: u64, base: &OcoConfig) -> Result<Vec<RegretPoint>> {
    horizons
        .iter()
        .map(|&horizon| {
            let stream = ConvexStream::new(dim, horizon, seed);
            let mut cfg = OcoConfig { horizon, ..base.clone() };
            cfg.calibrate(stream.gradient_bound());
            let set = FeasibleSet::boxed(vec![0.0; dim], vec![1.0; dim]);
            let mut ens = Ensemble::new(cfg, vec![0.0; dim], 1)?;
            let mut realized = Vec::with_capacity(horizon);
            let mut bench = Vec::with_capacity(horizon);
            let mut ys = Vec::with_capacity(horizon);
            let mut violation = 0.0;
            for t in 0..horizon {
                let x = ens.decision().to_vec();
                let y = stream.optimum(t);
                realized.push(stream.cost(t, &x));
                bench.push(stream.cost(t, &y));
                let g = stream.constraint(t);
                violation += g.eval(&x).max(0.0);
                ys.push(y);
                if t + 1 < horizon {
                    let th = stream.target(t);
                    let grad = x.iter().zip(&th).map(|(a, b)| a - b).collect();
                    ens.step(&StepFeedback { grad_f: grad, g: vec![g] }, &set)?;
                }
            }
            let r = compute_regret(&realized, &bench, &ys)?;
            Ok(RegretPoint { horizon, regret: r.reg, path_length: r.path_length, violation })
        })
        .collect()
}
