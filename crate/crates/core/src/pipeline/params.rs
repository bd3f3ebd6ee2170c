use serde::{Deserialize, Serialize};

use crate::diffraction::BLDSF;
use crate::error::{Error, Result};
use crate::field::DisplayMode;

pub const MIN_MAGNIFICATION: f64 = 0.25;
pub const MAX_MAGNIFICATION: f64 = 4.0;
/// Largest accepted `|z|` in meters.
pub const MAX_DISTANCE: f64 = 0.1;
/// Focus distance the instrument is built around, in meters.
pub const DEFAULT_FOCUS_DISTANCE: f64 = 0.011;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    #[default]
    Amplitude,
    Phase,
    Both,
}

impl OutputKind {
    pub fn modes(self) -> &'static [DisplayMode] {
        match self {
            OutputKind::Amplitude => &[DisplayMode::Amplitude],
            OutputKind::Phase => &[DisplayMode::Phase],
            OutputKind::Both => &[DisplayMode::Amplitude, DisplayMode::Phase],
        }
    }
}

/// The live, user-edited reconstruction state.
///
/// `z` is the signed propagation distance applied to the hologram. Users
/// think in focus distances (object in front of the sensor, positive), which
/// reconstruct by propagating backwards: `z = -focus_distance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionParams {
    pub z: f64,
    pub magnification: f64,
    pub method: String,
    pub output: OutputKind,
}

impl Default for ReconstructionParams {
    fn default() -> Self {
        Self {
            z: -DEFAULT_FOCUS_DISTANCE,
            magnification: 1.0,
            method: BLDSF.to_string(),
            output: OutputKind::Amplitude,
        }
    }
}

/// Parameters after clamping, with one note per adjusted value.
#[derive(Debug, Clone, PartialEq)]
pub struct Clamped {
    pub params: ReconstructionParams,
    pub adjustments: Vec<String>,
}

impl ReconstructionParams {
    pub fn from_focus_distance(
        distance: f64,
        magnification: f64,
        method: &str,
        output: OutputKind,
    ) -> Self {
        Self {
            z: -distance,
            magnification,
            method: method.to_string(),
            output,
        }
    }

    pub fn focus_distance(&self) -> f64 {
        -self.z
    }

    /// Brings `z` into `[-0.1, 0.1]` m and the magnification into
    /// `[0.25, 4]`. Non-finite values are rejected rather than clamped.
    pub fn clamped(&self) -> Result<Clamped> {
        if !self.z.is_finite() || !self.magnification.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "distance and magnification must be finite, got z = {}, M = {}",
                self.z, self.magnification
            )));
        }
        let mut params = self.clone();
        let mut adjustments = Vec::new();
        let z = self.z.clamp(-MAX_DISTANCE, MAX_DISTANCE);
        if z != self.z {
            adjustments.push(format!("distance {} m clamped to {} m", -self.z, -z));
            params.z = z;
        }
        let m = self
            .magnification
            .clamp(MIN_MAGNIFICATION, MAX_MAGNIFICATION);
        if m != self.magnification {
            adjustments.push(format!(
                "magnification {} clamped to {}",
                self.magnification, m
            ));
            params.magnification = m;
        }
        Ok(Clamped {
            params,
            adjustments,
        })
    }
}
