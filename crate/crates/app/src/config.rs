//! Service configuration, read from a TOML file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use holo_core::diffraction::{PropagatorRegistry, BLDSF};
use holo_core::field::OpticalParams;
use holo_core::ingest::SourceConfig;
use holo_core::pipeline::{OutputKind, ReconstructionParams, DEFAULT_FOCUS_DISTANCE};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_WAVELENGTH: f64 = 650e-9;

fn default_port() -> u16 {
    DEFAULT_PORT
}

fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH
}

/// Starting parameters, in the displayed convention (positive focus distance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamDefaults {
    pub z_m: f64,
    pub magnification: f64,
    pub method: String,
    pub output: OutputKind,
}

impl Default for ParamDefaults {
    fn default() -> Self {
        Self {
            z_m: DEFAULT_FOCUS_DISTANCE,
            magnification: 1.0,
            method: BLDSF.into(),
            output: OutputKind::Amplitude,
        }
    }
}

impl ParamDefaults {
    pub fn to_params(&self) -> ReconstructionParams {
        ReconstructionParams::from_focus_distance(
            self.z_m,
            self.magnification,
            &self.method,
            self.output,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default = "default_port")]
    pub port: u16,
    /// Illumination wavelength in meters.
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
    /// Upper bound on the reconstruction rate.
    #[serde(default)]
    pub max_fps: Option<f64>,
    /// Directory with the viewer's static files.
    #[serde(default)]
    pub viewer_dir: Option<PathBuf>,
    pub source: SourceConfig,
    #[serde(default)]
    pub params: ParamDefaults,
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: AppConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn optics(&self) -> Result<OpticalParams> {
        Ok(OpticalParams::new(self.wavelength)?)
    }

    pub fn frame_interval(&self) -> Option<Duration> {
        self.max_fps.map(|f| Duration::from_secs_f64(1.0 / f))
    }

    pub fn validate(&self) -> Result<()> {
        self.optics()?;
        self.source.validate()?;
        if let Some(fps) = self.max_fps {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(AppError::Config(format!(
                    "max_fps must be positive, got {fps}"
                )));
            }
        }
        if !PropagatorRegistry::builtin().contains(&self.params.method) {
            return Err(AppError::Config(format!(
                "unknown method `{}`",
                self.params.method
            )));
        }
        self.params.to_params().clamped()?;
        Ok(())
    }
}
