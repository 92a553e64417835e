//! Run configuration read from TOML. Sections follow the parameter names of
//! the microgrid model; every field is optional and falls back to the test
//! system and the method defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::timeseries::check_resolution;
use crate::error::{Error, Result};
use crate::grid::{CurveSettings, EfficiencyModel, MicrogridSpec};
use crate::oco::OcoConfig;
use crate::reference::PerturbMode;
use crate::sim::{ForecastKind, MethodConfig, MethodKind, MpcConfig, ReferenceSource, SynthConfig, DEFAULT_PHI, DEFAULT_SIGMA};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Evaluation scenario; the synthetic year when absent.
    pub scenario: Option<PathBuf>,
    /// Extra library scenarios.
    pub library: Vec<PathBuf>,
    /// Stored offline references; generated when absent.
    pub references: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryOverrides {
    pub eta_c: Option<f64>,
    pub eta_d: Option<f64>,
    pub eps: Option<f64>,
    pub p_max: Option<f64>,
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub e0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydrogenOverrides {
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub e0: Option<f64>,
    pub p_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DieselOverrides {
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub rd: Option<f64>,
    pub ru: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceOverrides {
    pub c_l: Option<f64>,
    pub c_d: Option<f64>,
    pub c_b: Option<f64>,
    pub c_h: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityOverrides {
    pub wind: Option<f64>,
    pub solar: Option<f64>,
    pub load: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodSettings {
    pub list: Vec<MethodKind>,
    pub phi: f64,
    pub sigma: f64,
    /// Use the equal-weight reference instead of the tracked one.
    pub fixed_reference: bool,
    pub efficiency_model: EfficiencyModel,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self {
            list: MethodKind::ALL.to_vec(),
            phi: DEFAULT_PHI,
            sigma: DEFAULT_SIGMA,
            fixed_reference: false,
            efficiency_model: EfficiencyModel::E1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcSettings {
    pub horizon: usize,
    /// `persistence` or `oracle_noise`.
    pub forecast: String,
    pub forecast_sigma: f64,
}

impl Default for MpcSettings {
    fn default() -> Self {
        Self { horizon: 24, forecast: "persistence".into(), forecast_sigma: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LibrarySettings {
    /// Seeds of the synthetic years forming the historical library.
    pub synthetic_seeds: Vec<u64>,
    /// Perturbation family added to the library.
    pub perturb: Option<PerturbMode>,
    pub perturb_range: (f64, f64),
}

impl Default for LibrarySettings {
    fn default() -> Self {
        Self { synthetic_seeds: vec![2010, 2011, 2012, 2013], perturb: None, perturb_range: (0.0, 0.2) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Run seed; every random stream derives from it.
    pub seed: u64,
    pub resolution_minutes: u32,
    pub paths: Paths,
    pub synth: SynthConfig,
    /// Electrochemical parameters and fit settings of the hydrogen curves.
    pub curves: CurveSettings,
    pub battery: BatteryOverrides,
    pub hydrogen: HydrogenOverrides,
    pub diesel: DieselOverrides,
    pub prices: PriceOverrides,
    pub capacities: CapacityOverrides,
    pub methods: MethodSettings,
    pub oco: OcoConfig,
    pub mpc: MpcSettings,
    pub library: LibrarySettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "h2grid".into(),
            seed: 2023,
            resolution_minutes: 60,
            paths: Paths::default(),
            synth: SynthConfig::default(),
            curves: CurveSettings::default(),
            battery: Default::default(),
            hydrogen: Default::default(),
            diesel: Default::default(),
            prices: Default::default(),
            capacities: Default::default(),
            methods: MethodSettings::default(),
            oco: OcoConfig::default(),
            mpc: MpcSettings::default(),
            library: LibrarySettings::default(),
        }
    }
}

fn set(dst: &mut f64, v: Option<f64>) {
    if let Some(v) = v {
        *dst = v;
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a configuration file. Relative paths inside it
    /// are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            cfg.paths.rebase(dir);
        }
        cfg.check_paths()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check_resolution(self.resolution_minutes)?;
        self.oco.validate()?;
        if self.mpc.horizon == 0 {
            return Err(Error::Config("mpc.horizon must be at least 1".into()));
        }
        self.forecast()?;
        if !(self.methods.phi >= 0.0 && self.methods.sigma > 0.0) {
            return Err(Error::Config("methods.phi must be non-negative and methods.sigma positive".into()));
        }
        if self.methods.list.is_empty() {
            return Err(Error::Config("methods.list is empty".into()));
        }
        Ok(())
    }

    /// Input files named by the configuration must exist.
    pub fn check_paths(&self) -> Result<()> {
        let p = &self.paths;
        for f in p.scenario.iter().chain(&p.library).chain(&p.references) {
            if !f.exists() {
                return Err(Error::Config(format!("`{}` does not exist", f.display())));
            }
        }
        Ok(())
    }

    pub fn forecast(&self) -> Result<ForecastKind> {
        match self.mpc.forecast.as_str() {
            "persistence" => Ok(ForecastKind::Persistence),
            "oracle_noise" => {
                if !(self.mpc.forecast_sigma >= 0.0) {
                    return Err(Error::Config("mpc.forecast_sigma must be non-negative".into()));
                }
                Ok(ForecastKind::OracleNoise { sigma: self.mpc.forecast_sigma, seed: super::sub_seed(self.seed, "forecast") })
            }
            other => Err(Error::Config(format!("unknown forecast `{other}` (persistence or oracle_noise)"))),
        }
    }

    /// The test system with the configured curves and overrides: the true
    /// physics of a run.
    pub fn spec(&self) -> Result<MicrogridSpec> {
        let mut s = MicrogridSpec::from_curves(self.curves.curves(EfficiencyModel::E1)?)?;
        let b = &self.battery;
        set(&mut s.battery.eta_c, b.eta_c);
        set(&mut s.battery.eta_d, b.eta_d);
        set(&mut s.battery.eps, b.eps);
        set(&mut s.battery.p_max, b.p_max);
        set(&mut s.battery.e_min, b.e_min);
        set(&mut s.battery.e_max, b.e_max);
        set(&mut s.battery.e0, b.e0);
        let h = &self.hydrogen;
        set(&mut s.hydrogen.e_min, h.e_min);
        set(&mut s.hydrogen.e_max, h.e_max);
        set(&mut s.hydrogen.e0, h.e0);
        set(&mut s.hydrogen.p_max, h.p_max);
        let d = &self.diesel;
        set(&mut s.diesel.p_min, d.p_min);
        set(&mut s.diesel.p_max, d.p_max);
        set(&mut s.diesel.rd, d.rd);
        set(&mut s.diesel.ru, d.ru);
        let p = &self.prices;
        set(&mut s.prices.c_l, p.c_l);
        set(&mut s.prices.c_d, p.c_d);
        set(&mut s.prices.c_b, p.c_b);
        set(&mut s.prices.c_h, p.c_h);
        let c = &self.capacities;
        set(&mut s.capacities.wind, c.wind);
        set(&mut s.capacities.solar, c.solar);
        set(&mut s.capacities.load, c.load);
        s.dt = self.resolution_minutes as f64 / 60.0;
        s.validate()?;
        Ok(s)
    }

    /// Method configuration of `kind` under these settings.
    pub fn method(&self, kind: MethodKind) -> Result<MethodConfig> {
        let mut m = MethodConfig::standard(kind);
        m.efficiency_model = self.methods.efficiency_model;
        if kind.uses_reference() {
            m.phi = self.methods.phi;
            m.reference = if self.methods.fixed_reference {
                ReferenceSource::Fixed
            } else {
                ReferenceSource::Tracked { sigma: self.methods.sigma }
            };
        }
        if kind.uses_oco() {
            m.oco = Some(self.oco.clone());
        }
        if kind.uses_mpc() {
            m.mpc = Some(MpcConfig { horizon: self.mpc.horizon, forecast: self.forecast()? });
        }
        m.validate()?;
        Ok(m)
    }
}

impl Paths {
    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        self.scenario.iter_mut().for_each(fix);
        self.library.iter_mut().for_each(fix);
        self.references.iter_mut().for_each(fix);
        self.output.iter_mut().for_each(fix);
    }
}
