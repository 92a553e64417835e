use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::method::ForecastKind;
use crate::grid::ScenarioSeries;

/// Produces forecast windows for a rollout.
#[derive(Debug, Clone)]
pub struct Forecaster {
    kind: ForecastKind,
    rng: Option<ChaCha8Rng>,
}

impl Forecaster {
    pub fn new(kind: ForecastKind) -> Self {
        let rng = match kind {
            ForecastKind::OracleNoise { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
            ForecastKind::Persistence => None,
        };
        Self { kind, rng }
    }

    /// Forecast of steps `t..t+len` made before step `t` is observed.
    /// Persistence repeats the latest observed value at the same time of day;
    /// before a full day has been seen the first value of the scenario stands
    /// in for the missing history.
    pub fn window(&mut self, truth: &ScenarioSeries, t: usize, len: usize) -> ScenarioSeries {
        let end = (t + len).min(truth.len());
        let mut w = truth.slice(t, end - t);
        match self.kind {
            ForecastKind::Persistence => {
                let day = ((24.0 / truth.dt).round() as usize).max(1);
                for k in 0..w.len() {
                    let lag = day * ((k / day) + 1);
                    let src = (t + k).saturating_sub(lag);
                    w.load[k] = truth.load[src];
                    w.solar[k] = truth.solar[src];
                    w.wind[k] = truth.wind[src];
                }
            }
            ForecastKind::OracleNoise { sigma, .. } => {
                let rng = self.rng.as_mut().unwrap();
                let n = Normal::new(0.0, sigma.max(0.0)).unwrap();
                for k in 0..w.len() {
                    for ch in [&mut w.load, &mut w.solar, &mut w.wind] {
                        let e = if sigma > 0.0 { n.sample(rng) } else { 0.0 };
                        ch[k] = (ch[k] * (1.0 + e)).max(0.0);
                    }
                }
            }
        }
        w
    }
}
