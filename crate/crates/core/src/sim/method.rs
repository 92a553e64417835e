use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::EfficiencyModel;
use crate::oco::OcoConfig;

/// Dispatch method of a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodKind {
    /// Perfect-foresight optimum over the whole horizon.
    M0,
    /// Online convex optimization tracking the kernel-blended reference.
    M1,
    /// Receding-horizon control tracking the kernel-blended reference.
    M2,
    /// Online convex optimization without a reference.
    M3,
    /// Receding-horizon control without a reference.
    M4,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [Self::M0, Self::M1, Self::M2, Self::M3, Self::M4];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M0" => Ok(Self::M0),
            "M1" => Ok(Self::M1),
            "M2" => Ok(Self::M2),
            "M3" => Ok(Self::M3),
            "M4" => Ok(Self::M4),
            _ => Err(Error::Config(format!("unknown method `{s}` (expected M0 to M4)"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::M0 => "M0",
            Self::M1 => "M1",
            Self::M2 => "M2",
            Self::M3 => "M3",
            Self::M4 => "M4",
        }
    }

    pub fn uses_oco(self) -> bool {
        matches!(self, Self::M1 | Self::M3)
    }

    pub fn uses_mpc(self) -> bool {
        matches!(self, Self::M2 | Self::M4)
    }

    pub fn uses_reference(self) -> bool {
        matches!(self, Self::M1 | Self::M2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForecastKind {
    /// Each value repeats the last observed value at the same time of day.
    Persistence,
    /// Truth times `1 + N(0, sigma)`, clipped at zero.
    OracleNoise { sigma: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    /// Window length in steps.
    pub horizon: usize,
    pub forecast: ForecastKind,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self { horizon: 24, forecast: ForecastKind::Persistence }
    }
}

/// Where the hydrogen reference comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSource {
    None,
    /// Equal-weight average of the library references.
    Fixed,
    /// Kernel-weighted blend with bandwidth `sigma`.
    Tracked { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: MethodKind,
    /// SoC penalty coefficient ($/kg²).
    pub phi: f64,
    pub reference: ReferenceSource,
    pub mpc: Option<MpcConfig>,
    pub oco: Option<OcoConfig>,
    pub efficiency_model: EfficiencyModel,
}

/// Default penalty coefficient ($/kg²).
pub const DEFAULT_PHI: f64 = 5.0;
/// Default kernel bandwidth on capacity-normalized channels.
pub const DEFAULT_SIGMA: f64 = 0.1;

impl MethodConfig {
    /// The configuration each method uses by default.
    pub fn standard(method: MethodKind) -> Self {
        let reference = if method.uses_reference() { ReferenceSource::Tracked { sigma: DEFAULT_SIGMA } } else { ReferenceSource::None };
        Self {
            method,
            phi: if method.uses_reference() { DEFAULT_PHI } else { 0.0 },
            reference,
            mpc: method.uses_mpc().then(MpcConfig::default),
            oco: method.uses_oco().then(OcoConfig::default),
            efficiency_model: EfficiencyModel::E1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.method.as_str();
        if !(self.phi >= 0.0) {
            return Err(Error::Config(format!("{m}: phi must be non-negative")));
        }
        match self.method {
            MethodKind::M0 => {
                if self.mpc.is_some() || self.oco.is_some() {
                    return Err(Error::Config("M0 takes neither MPC nor OCO settings".into()));
                }
            }
            k if k.uses_oco() => {
                let oco = self.oco.as_ref().ok_or_else(|| Error::Config(format!("{m} needs OCO settings")))?;
                oco.validate()?;
            }
            _ => {
                let mpc = self.mpc.as_ref().ok_or_else(|| Error::Config(format!("{m} needs MPC settings")))?;
                if mpc.horizon == 0 {
                    return Err(Error::Config(format!("{m}: MPC horizon must be at least 1")));
                }
                if let ForecastKind::OracleNoise { sigma, .. } = mpc.forecast {
                    if !(sigma >= 0.0) {
                        return Err(Error::Config(format!("{m}: forecast noise must be non-negative")));
                    }
                }
            }
        }
        if let ReferenceSource::Tracked { sigma } = self.reference {
            if !(sigma > 0.0) {
                return Err(Error::Config(format!("{m}: bandwidth must be positive")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_configs_validate() {
        for m in MethodKind::ALL {
            MethodConfig::standard(m).validate().unwrap();
        }
        let mut c = MethodConfig::standard(MethodKind::M1);
        c.oco = None;
        assert!(c.validate().is_err());
        let mut c = MethodConfig::standard(MethodKind::M2);
        c.mpc = None;
        assert!(c.validate().is_err());
        let mut c = MethodConfig::standard(MethodKind::M0);
        c.mpc = Some(MpcConfig::default());
        assert!(c.validate().is_err());
    }
}
