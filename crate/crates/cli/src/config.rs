//! JSON run configuration. User-facing quantities are in GHz/MHz/ns and are
//! converted to rad/ns on load.

use serde::{Deserialize, Serialize};
use std::path::Path;
use sweetspot::cavity::{CavityConfig, NoiseCorrelation, NoiseCoupling};
use sweetspot::filter::IntegrationOptions;
use sweetspot::hamiltonian::{find_tss, DeviceParams};
use sweetspot::noise::{PsdConvention, SpectralModel};
use sweetspot::presets::{self, OperatingPoint};
use sweetspot::units::{ghz, mhz};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub device: DeviceSection,
    pub noise: NoiseSection,
    pub spectrum: SpectrumSection,
    pub filter: FilterSection,
    pub leakage: LeakageSection,
    pub noise_gen: NoiseGenSection,
    pub cavity: CavitySection,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            device: DeviceSection::strong_field(),
            noise: NoiseSection::default(),
            spectrum: SpectrumSection::default(),
            filter: FilterSection::default(),
            leakage: LeakageSection::default(),
            noise_gen: NoiseGenSection::default(),
            cavity: CavitySection::default(),
            seed: 2024,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    #[serde(default)]
    pub label: String,
    pub delta_b_ghz: f64,
    pub tau_ghz: f64,
    /// Bias point; the sweet spot when absent.
    #[serde(default)]
    pub epsilon_ghz: Option<f64>,
    #[serde(default = "default_eps_ac")]
    pub eps_ac_ghz: f64,
}

fn default_eps_ac() -> f64 {
    presets::EPS_AC_GHZ
}

impl DeviceSection {
    pub fn strong_field() -> Self {
        Self {
            label: "db_gt_tau".into(),
            delta_b_ghz: presets::STRONG_FIELD_GHZ.0,
            tau_ghz: presets::STRONG_FIELD_GHZ.1,
            epsilon_ghz: None,
            eps_ac_ghz: presets::EPS_AC_GHZ,
        }
    }

    pub fn weak_field() -> Self {
        Self {
            label: "db_lt_tau".into(),
            delta_b_ghz: presets::WEAK_FIELD_GHZ.0,
            tau_ghz: presets::WEAK_FIELD_GHZ.1,
            epsilon_ghz: None,
            eps_ac_ghz: presets::EPS_AC_GHZ,
        }
    }

    pub fn operating_point(&self) -> Result<OperatingPoint, CliError> {
        let (db, tau) = (ghz(self.delta_b_ghz), ghz(self.tau_ghz));
        let epsilon = match self.epsilon_ghz {
            Some(e) => ghz(e),
            None => find_tss(db, tau, None, None)?,
        };
        let params = DeviceParams::new(db, tau, epsilon)?;
        if !(self.eps_ac_ghz > 0.0) {
            return Err(CliError::Config(format!(
                "eps_ac_ghz must be positive, got {}",
                self.eps_ac_ghz
            )));
        }
        Ok(OperatingPoint {
            params,
            eigen: sweetspot::hamiltonian::eigensystem(&params),
            eps_ac: ghz(self.eps_ac_ghz),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// Dimensionless `A·t0` with `t0 = 1/Ω0`.
    pub a_t0: f64,
    pub alpha: f64,
    pub omega_ir_ghz: f64,
    pub omega_uv_ghz: f64,
    /// Which quantity the spectrum describes.
    pub convention: PsdConvention,
    pub points_per_decade: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            a_t0: presets::A_T0,
            alpha: 1.0,
            omega_ir_ghz: presets::OMEGA_IR_GHZ,
            omega_uv_ghz: presets::OMEGA_UV_GHZ,
            convention: PsdConvention::SigmaZCoefficient,
            points_per_decade: IntegrationOptions::default().points_per_decade,
        }
    }
}

impl NoiseSection {
    pub fn model(&self, omega0: f64) -> Result<SpectralModel, CliError> {
        if !(self.a_t0 >= 0.0) {
            return Err(CliError::Config(format!(
                "a_t0 must be non-negative, got {}",
                self.a_t0
            )));
        }
        let t0 = 1.0 / omega0;
        Ok(SpectralModel::new(
            self.a_t0 / t0,
            self.alpha,
            t0,
            ghz(self.omega_ir_ghz),
            ghz(self.omega_uv_ghz),
        )?)
    }

    pub fn integration(&self) -> Result<IntegrationOptions, CliError> {
        if self.points_per_decade < 2 {
            return Err(CliError::Config("points_per_decade must be at least 2".into()));
        }
        Ok(IntegrationOptions {
            points_per_decade: self.points_per_decade,
            ..IntegrationOptions::default()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub eps_min_ghz: f64,
    pub eps_max_ghz: f64,
    pub points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            eps_min_ghz: -10.0,
            eps_max_ghz: 10.0,
            points: 2001,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    /// Grid in units of `Ω0`.
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            omega_min: 1e-2,
            omega_max: 1e2,
            points: 801,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeakageSection {
    pub dt_ns: f64,
    /// Rotation angle of the single x pulse, in units of π.
    pub angle_over_pi: f64,
}

impl Default for LeakageSection {
    fn default() -> Self {
        Self {
            dt_ns: 0.004,
            angle_over_pi: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseGenSection {
    pub dt_ns: f64,
    pub samples: usize,
}

impl Default for NoiseGenSection {
    fn default() -> Self {
        Self {
            dt_ns: 0.02,
            samples: 1 << 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub devices: Vec<DeviceSection>,
    pub g_mhz: [f64; 2],
    pub gamma_a_mhz: f64,
    pub gamma_1_mhz: f64,
    pub gamma_2_mhz: f64,
    pub n_max: usize,
    pub qubit_levels: usize,
    pub noise_coupling: NoiseCoupling,
    pub correlation: NoiseCorrelation,
    pub resonator_noise: bool,
    pub sigma_over_g: Vec<f64>,
    pub realizations: usize,
    pub population_points: usize,
}

impl Default for CavitySection {
    fn default() -> Self {
        Self {
            devices: vec![DeviceSection::weak_field(), DeviceSection::strong_field()],
            g_mhz: [presets::G_PRIME_MHZ; 2],
            gamma_a_mhz: presets::GAMMA_A_MHZ,
            gamma_1_mhz: 0.0,
            gamma_2_mhz: 0.0,
            n_max: 2,
            qubit_levels: 2,
            noise_coupling: NoiseCoupling::default(),
            correlation: NoiseCorrelation::default(),
            resonator_noise: false,
            sigma_over_g: (0..=10).map(|k| 0.02 * k as f64).collect(),
            realizations: 1000,
            population_points: 200,
        }
    }
}

impl CavitySection {
    /// Resonator tuned to the device's qubit frequency.
    pub fn config(&self, op: &OperatingPoint) -> Result<CavityConfig, CliError> {
        let cfg = CavityConfig {
            omega_r: op.eigen.qubit_frequency(),
            g: [mhz(self.g_mhz[0]), mhz(self.g_mhz[1])],
            gamma_a: mhz(self.gamma_a_mhz),
            gamma_1: mhz(self.gamma_1_mhz),
            gamma_2: mhz(self.gamma_2_mhz),
            n_max: self.n_max,
            qubit_levels: self.qubit_levels,
            noise_coupling: self.noise_coupling,
            correlation: self.correlation,
            resonator_noise: self.resonator_noise,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}
