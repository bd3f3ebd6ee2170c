//! Real-time inline (Gabor) digital holographic reconstruction.
//!
//! - [`field`]: complex fields, real images, amplitude/phase and display mapping
//! - [`diffraction`]: angular spectrum and band-limited double-step Fresnel
//!   propagators behind the [`diffraction::Propagator`] trait, plus plan caching
//! - [`sim`]: synthetic in-line holograms with known ground truth
//! - [`ingest`]: frame sources and sensor downsampling
//! - [`pipeline`]: the live reconstruction loop
//! - [`focus`]: sharpness metric and focus sweeps

pub mod diffraction;
pub mod dump;
pub mod error;
mod fft;
pub mod field;
pub mod focus;
pub mod ingest;
pub mod pipeline;
pub mod sim;
pub mod slot;

#[cfg(any(test, feature = "test-support"))]
pub mod test_support;

pub use error::{Error, Result};
pub use fft::Direction;
pub use field::{ComplexField, DisplayMode, Grid, OpticalParams, RealImage};
