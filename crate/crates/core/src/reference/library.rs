use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Provenance, ScenarioSeries};
use crate::io::sub_seed;

/// Scenarios sharing step length and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLibrary {
    scenarios: Vec<ScenarioSeries>,
}

impl ScenarioLibrary {
    pub fn new(scenarios: Vec<ScenarioSeries>) -> Result<Self> {
        if let Some(first) = scenarios.first() {
            for s in &scenarios {
                s.validate()?;
                if s.len() != first.len() || (s.dt - first.dt).abs() > 1e-12 {
                    return Err(Error::Dimension(format!(
                        "scenario `{}` has {} steps of {} h, expected {} of {} h",
                        s.label,
                        s.len(),
                        s.dt,
                        first.len(),
                        first.dt
                    )));
                }
            }
        }
        Ok(Self { scenarios })
    }

    pub fn scenarios(&self) -> &[ScenarioSeries] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Steps per scenario.
    pub fn horizon(&self) -> usize {
        self.scenarios.first().map_or(0, |s| s.len())
    }

    /// Library with the scenarios of `other` appended.
    pub fn merged(&self, other: &ScenarioLibrary) -> Result<Self> {
        let mut all = self.scenarios.clone();
        all.extend(other.scenarios.iter().cloned());
        Self::new(all)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbMode {
    /// Less solar, more wind.
    R3,
    /// Less solar and wind.
    R4,
    /// More solar and wind.
    R5,
    /// Union of the three above.
    R6,
}

impl PerturbMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R3" => Ok(Self::R3),
            "R4" => Ok(Self::R4),
            "R5" => Ok(Self::R5),
            "R6" => Ok(Self::R6),
            _ => Err(Error::Config(format!("unknown perturbation `{s}` (expected R3, R4, R5 or R6)"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::R3 => "R3",
            Self::R4 => "R4",
            Self::R5 => "R5",
            Self::R6 => "R6",
        }
    }

    /// Signs applied to the solar and wind factors.
    fn signs(self) -> (f64, f64) {
        match self {
            Self::R3 => (-1.0, 1.0),
            Self::R4 => (-1.0, -1.0),
            _ => (1.0, 1.0),
        }
    }
}

fn perturb_one(s: &ScenarioSeries, mode: PerturbMode, range: (f64, f64), rng: &mut ChaCha8Rng) -> ScenarioSeries {
    let (sign_s, sign_w) = mode.signs();
    let keys = s.quarter_keys();
    // one draw per quarter and channel, in quarter order
    let mut factors = BTreeMap::new();
    for &k in &keys {
        factors.entry(k).or_insert((0.0, 0.0));
    }
    for f in factors.values_mut() {
        let a = if range.1 > range.0 { rng.gen_range(range.0..=range.1) } else { range.0 };
        let b = if range.1 > range.0 { rng.gen_range(range.0..=range.1) } else { range.0 };
        *f = (1.0 + sign_s * a, 1.0 + sign_w * b);
    }
    let mut out = s.clone();
    for (t, k) in keys.iter().enumerate() {
        let (fs, fw) = factors[k];
        out.solar[t] *= fs;
        out.wind[t] *= fw;
    }
    out.label = format!("{}-{}", s.label, mode.as_str());
    out.provenance = Provenance::Perturbed;
    out
}

/// One perturbed copy of every scenario (three for R6), with one random
/// factor per calendar quarter and channel drawn uniformly from `range`.
pub fn perturb_scenarios(library: &ScenarioLibrary, mode: PerturbMode, range: (f64, f64), seed: u64) -> Result<ScenarioLibrary> {
    let (lo, hi) = range;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::Parameter(format!("perturbation range [{lo}, {hi}] must lie in [0, 1]")));
    }
    let modes: &[PerturbMode] = match mode {
        PerturbMode::R6 => &[PerturbMode::R3, PerturbMode::R4, PerturbMode::R5],
        _ => std::slice::from_ref(&mode),
    };
    let mut out = Vec::new();
    for &m in modes {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, m.as_str()));
        for s in library.scenarios() {
            out.push(perturb_one(s, m, range, &mut rng));
        }
    }
    ScenarioLibrary::new(out)
}
