//! Inputs shared by the commands: evaluation scenario, scenario library and
//! offline references, all derived from a [`RunConfig`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::{BuildOptions, MicrogridSpec, PlanOptions, ScenarioSeries};
use crate::io::{parse_timeseries_csv, parse_timeseries_str, scenario_csv, sub_seed, RunConfig};
use crate::reference::{generate_offline_references, perturb_scenarios, read_reference_csv, ReferenceSet, ScenarioLibrary};
use crate::sim::{synthetic_year, ForecastKind, SynthConfig};

/// Brings an hourly series to the configured resolution.
fn resample(s: ScenarioSeries, minutes: u32) -> Result<ScenarioSeries> {
    if minutes == 60 {
        return Ok(s);
    }
    parse_timeseries_str(&scenario_csv(&s), &s.label, minutes)
}

/// Synthetic year for `seed` covering at least `len` steps, cut to `len`.
fn synthetic(cfg: &RunConfig, seed: u64, len: Option<usize>) -> Result<ScenarioSeries> {
    let dt = cfg.resolution_minutes as f64 / 60.0;
    let days = match len {
        Some(n) => ((n as f64 * dt) / 24.0).ceil() as usize,
        None => cfg.synth.days,
    };
    let mut s = synthetic_year(&SynthConfig { seed, days: days.max(1), ..cfg.synth.clone() })?;
    s.label = format!("synthetic-{seed}");
    let s = resample(s, cfg.resolution_minutes)?;
    Ok(match len {
        Some(n) if n < s.len() => s.slice(0, n),
        _ => s,
    })
}

pub struct Experiment {
    pub cfg: RunConfig,
    pub truth: MicrogridSpec,
    pub scenario: ScenarioSeries,
    pub library: Option<ScenarioLibrary>,
    pub references: Option<ReferenceSet>,
    /// Random streams used, by name.
    pub seeds: BTreeMap<String, u64>,
    /// Files read.
    pub inputs: Vec<PathBuf>,
}

impl Experiment {
    /// Loads the evaluation scenario; the library and references follow
    /// only when `with_references` is set.
    pub fn prepare(cfg: RunConfig, with_references: bool) -> Result<Self> {
        cfg.validate()?;
        let mut seeds = BTreeMap::new();
        let mut inputs = Vec::new();
        let scenario = match &cfg.paths.scenario {
            Some(p) => {
                inputs.push(p.clone());
                parse_timeseries_csv(p, cfg.resolution_minutes)?
            }
            None => {
                seeds.insert("synth".into(), cfg.synth.seed);
                synthetic(&cfg, cfg.synth.seed, None)?
            }
        };
        let mut exp = Self::with_scenario(cfg, scenario, false)?;
        exp.seeds.extend(seeds);
        exp.inputs = inputs;
        if with_references {
            exp.load_references()?;
        }
        Ok(exp)
    }

    /// Like [`Experiment::prepare`] with an evaluation scenario already in
    /// memory.
    pub fn with_scenario(cfg: RunConfig, scenario: ScenarioSeries, with_references: bool) -> Result<Self> {
        cfg.validate()?;
        scenario.validate()?;
        if (scenario.dt - cfg.resolution_minutes as f64 / 60.0).abs() > 1e-9 {
            return Err(Error::Data(format!("scenario step of {} h does not match resolution_minutes = {}", scenario.dt, cfg.resolution_minutes)));
        }
        let truth = cfg.spec()?;
        let mut seeds = BTreeMap::new();
        if let ForecastKind::OracleNoise { seed, .. } = cfg.forecast()? {
            seeds.insert("forecast".into(), seed);
        }
        let mut exp = Self { cfg, truth, scenario, library: None, references: None, seeds, inputs: Vec::new() };
        if with_references {
            exp.load_references()?;
        }
        Ok(exp)
    }

    /// Library of the configuration at the evaluation horizon.
    pub fn build_library(&mut self) -> Result<ScenarioLibrary> {
        let n = self.scenario.len();
        let mut scenarios = Vec::new();
        for p in &self.cfg.paths.library {
            let s = parse_timeseries_csv(p, self.cfg.resolution_minutes)?;
            if s.len() < n {
                return Err(Error::Data(format!("library scenario `{}` has {} steps, fewer than the {n} evaluated", p.display(), s.len())));
            }
            self.inputs.push(p.clone());
            scenarios.push(s.slice(0, n));
        }
        for &seed in &self.cfg.library.synthetic_seeds {
            self.seeds.insert(format!("library-{seed}"), seed);
            scenarios.push(synthetic(&self.cfg, seed, Some(n))?);
        }
        if scenarios.is_empty() {
            return Err(Error::Config("the scenario library is empty: set paths.library or library.synthetic_seeds".into()));
        }
        let base = ScenarioLibrary::new(scenarios)?;
        match self.cfg.library.perturb {
            Some(mode) => {
                let seed = sub_seed(self.cfg.seed, "perturb");
                self.seeds.insert("perturb".into(), seed);
                let extra = perturb_scenarios(&base, mode, self.cfg.library.perturb_range, seed)?;
                base.merged(&extra)
            }
            None => Ok(base),
        }
    }

    /// Reads stored references or plans the library offline.
    pub fn load_references(&mut self) -> Result<()> {
        let library = self.build_library()?;
        let refs = match self.cfg.paths.references.clone() {
            Some(p) => {
                let r = read_reference_csv(&p)?;
                self.inputs.push(p.clone());
                if r.len() != library.len() || r.horizon() < self.scenario.len() {
                    return Err(Error::Data(format!(
                        "`{}` holds {} references of {} steps; the library has {} scenarios of {} steps",
                        p.display(),
                        r.len(),
                        r.horizon(),
                        library.len(),
                        self.scenario.len()
                    )));
                }
                r
            }
            None => generate_offline_references(&library, &self.truth, &BuildOptions::default(), &PlanOptions::default())?,
        };
        self.library = Some(library);
        self.references = Some(refs);
        Ok(())
    }
}
