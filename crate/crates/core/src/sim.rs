//! Synthetic Gabor in-line holograms.
//!
//! A thin object with transmittance `t = (1 - a) exp(i phi)` is lit by a unit
//! plane wave and propagated to the sensor, which records intensity. The
//! unscattered plane wave is unbounded, so it is propagated analytically and
//! only the scattered part `t - 1` goes through the zero-padded angular
//! spectrum propagator.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::diffraction::{asm_propagate, PropagationSpec};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, OpticalParams, RealImage};

fn full_absorption() -> f64 {
    1.0
}

/// Thin sample description. Positions are meters from the grid center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectSpec {
    Empty,
    OpaqueDisk {
        #[serde(default)]
        center_x: f64,
        #[serde(default)]
        center_y: f64,
        radius: f64,
        #[serde(default = "full_absorption")]
        absorption: f64,
    },
    PhaseDisk {
        #[serde(default)]
        center_x: f64,
        #[serde(default)]
        center_y: f64,
        radius: f64,
        phase_shift: f64,
        #[serde(default)]
        absorption: f64,
    },
    /// Vertical absorbing bars with 50% duty cycle; period and extent are in
    /// pixels of the simulation grid.
    BarTarget {
        period_px: usize,
        bars: usize,
        length_px: usize,
        #[serde(default)]
        center_x: f64,
        #[serde(default)]
        center_y: f64,
        #[serde(default = "full_absorption")]
        absorption: f64,
    },
    Composite {
        parts: Vec<ObjectSpec>,
    },
}

impl ObjectSpec {
    pub fn opaque_disk(radius: f64) -> Self {
        ObjectSpec::OpaqueDisk {
            center_x: 0.0,
            center_y: 0.0,
            radius,
            absorption: 1.0,
        }
    }

    pub fn phase_disk(radius: f64, phase_shift: f64) -> Self {
        ObjectSpec::PhaseDisk {
            center_x: 0.0,
            center_y: 0.0,
            radius,
            phase_shift,
            absorption: 0.0,
        }
    }

    pub fn bar_target(period_px: usize, bars: usize, length_px: usize) -> Self {
        ObjectSpec::BarTarget {
            period_px,
            bars,
            length_px,
            center_x: 0.0,
            center_y: 0.0,
            absorption: 1.0,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let check_absorption = |a: f64| {
            if (0.0..=1.0).contains(&a) {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!(
                    "absorption must lie in [0, 1], got {a}"
                )))
            }
        };
        let check_finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be finite")))
            }
        };
        match *self {
            ObjectSpec::Empty => Ok(()),
            ObjectSpec::OpaqueDisk {
                center_x,
                center_y,
                radius,
                absorption,
            } => {
                check_finite("center", center_x + center_y)?;
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
                check_absorption(absorption)
            }
            ObjectSpec::PhaseDisk {
                center_x,
                center_y,
                radius,
                phase_shift,
                absorption,
            } => {
                check_finite("center", center_x + center_y)?;
                check_finite("phase_shift", phase_shift)?;
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
                check_absorption(absorption)
            }
            ObjectSpec::BarTarget {
                period_px,
                bars,
                length_px,
                center_x,
                center_y,
                absorption,
            } => {
                check_finite("center", center_x + center_y)?;
                if period_px < 2 || bars == 0 || length_px == 0 {
                    return Err(Error::InvalidSpec(
                        "bar target needs period_px >= 2, bars >= 1 and length_px >= 1".into(),
                    ));
                }
                check_absorption(absorption)
            }
            ObjectSpec::Composite { ref parts } => parts.iter().try_for_each(ObjectSpec::validate),
        }
    }

    /// Transmittance factor of this object at pixel `(m, n)`.
    fn factor(&self, grid: &Grid, m: usize, n: usize) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match *self {
            ObjectSpec::Empty => one,
            ObjectSpec::OpaqueDisk {
                center_x,
                center_y,
                radius,
                absorption,
            } => {
                if inside_disk(grid, m, n, center_x, center_y, radius) {
                    Complex64::new(1.0 - absorption, 0.0)
                } else {
                    one
                }
            }
            ObjectSpec::PhaseDisk {
                center_x,
                center_y,
                radius,
                phase_shift,
                absorption,
            } => {
                if inside_disk(grid, m, n, center_x, center_y, radius) {
                    Complex64::from_polar(1.0 - absorption, phase_shift)
                } else {
                    one
                }
            }
            ObjectSpec::BarTarget {
                period_px,
                bars,
                length_px,
                center_x,
                center_y,
                absorption,
            } => {
                let cx = (grid.width / 2) as i64 + (center_x / grid.pitch_x).round() as i64;
                let cy = (grid.height / 2) as i64 + (center_y / grid.pitch_y).round() as i64;
                let x0 = cx - (bars * period_px / 2) as i64;
                let y0 = cy - (length_px / 2) as i64;
                let (dx, dy) = (m as i64 - x0, n as i64 - y0);
                let in_bar = dx >= 0
                    && dx < (bars * period_px) as i64
                    && (dx as usize % period_px) < period_px / 2
                    && dy >= 0
                    && dy < length_px as i64;
                if in_bar {
                    Complex64::new(1.0 - absorption, 0.0)
                } else {
                    one
                }
            }
            ObjectSpec::Composite { ref parts } => {
                parts.iter().map(|p| p.factor(grid, m, n)).product()
            }
        }
    }
}

fn inside_disk(grid: &Grid, m: usize, n: usize, cx: f64, cy: f64, radius: f64) -> bool {
    let (dx, dy) = (grid.x(m) - cx, grid.y(n) - cy);
    dx * dx + dy * dy <= radius * radius
}

/// Complex transmittance of `spec` on `grid`; unit background.
pub fn transmittance(spec: &ObjectSpec, grid: Grid) -> Result<ComplexField> {
    grid.validate()?;
    spec.validate()?;
    ComplexField::from_fn(grid, |m, n| spec.factor(&grid, m, n))
}

/// A recorded in-line hologram.
#[derive(Debug, Clone, PartialEq)]
pub struct HologramFrame {
    pub image: RealImage,
    /// Ground-truth object-to-sensor distance, when known.
    pub object_distance: Option<f64>,
    pub optics: OpticalParams,
}

impl HologramFrame {
    pub fn new(
        image: RealImage,
        object_distance: Option<f64>,
        optics: OpticalParams,
    ) -> Result<Self> {
        if image.values().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter(
                "hologram intensity must be non-negative".into(),
            ));
        }
        if let Some(z) = object_distance {
            if !(z.is_finite() && z > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "object distance must be positive, got {z}"
                )));
            }
        }
        Ok(Self {
            image,
            object_distance,
            optics,
        })
    }

    pub fn grid(&self) -> Grid {
        self.image.grid()
    }
}

/// Records the in-line hologram of `spec` placed `z` meters before the sensor.
pub fn generate_hologram(
    spec: &ObjectSpec,
    z: f64,
    grid: Grid,
    optics: OpticalParams,
) -> Result<HologramFrame> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "object distance must be positive, got {z}"
        )));
    }
    let t = transmittance(spec, grid)?;
    let one = Complex64::new(1.0, 0.0);
    let scattered = ComplexField::new(grid, t.samples().iter().map(|&s| s - one).collect())?;
    let scattered = asm_propagate(&scattered, PropagationSpec { z, optics })?;
    // The unbounded unit plane wave only picks up the on-axis phase.
    let background = Complex64::from_polar(1.0, 2.0 * PI * z / optics.wavelength);
    let intensity = scattered
        .samples()
        .iter()
        .map(|&s| (background + s).norm_sqr())
        .collect();
    HologramFrame::new(RealImage::new(grid, intensity)?, Some(z), optics)
}

/// A few randomly placed absorbing and phase disks near the center.
pub fn random_scene(seed: u64, grid: Grid) -> ObjectSpec {
    let mut rng = StdRng::seed_from_u64(seed);
    let extent = (grid.width as f64 * grid.pitch_x).min(grid.height as f64 * grid.pitch_y);
    let parts = (0..rng.random_range(2..5))
        .map(|_| {
            let center_x = rng.random_range(-0.15..0.15) * extent;
            let center_y = rng.random_range(-0.15..0.15) * extent;
            let radius = rng.random_range(0.02..0.06) * extent;
            if rng.random_bool(0.5) {
                ObjectSpec::OpaqueDisk {
                    center_x,
                    center_y,
                    radius,
                    absorption: rng.random_range(0.3..1.0),
                }
            } else {
                ObjectSpec::PhaseDisk {
                    center_x,
                    center_y,
                    radius,
                    phase_shift: rng.random_range(0.3..2.0),
                    absorption: rng.random_range(0.0..0.3),
                }
            }
        })
        .collect();
    ObjectSpec::Composite { parts }
}

/// Adds zero-mean Gaussian sensor noise, clamping at zero.
pub fn add_sensor_noise(frame: &HologramFrame, sigma: f64, seed: u64) -> Result<HologramFrame> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = StdRng::seed_from_u64(seed);
    let values = frame
        .image
        .values()
        .iter()
        .map(|&v| (v + normal.sample(&mut rng)).max(0.0))
        .collect();
    HologramFrame::new(
        RealImage::new(frame.grid(), values)?,
        frame.object_distance,
        frame.optics,
    )
}

/// Reconstruction input: intensities as real parts, zero imaginary parts.
pub fn hologram_to_field(frame: &HologramFrame) -> ComplexField {
    let samples = frame
        .image
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    ComplexField::from_parts_unchecked(frame.grid(), samples)
}
