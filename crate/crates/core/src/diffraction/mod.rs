//! Scalar diffraction propagators.
//!
//! Every method implements [`Propagator`], which turns a [`PlanRequest`]
//! into an immutable [`PropagationPlan`] holding the precomputed transfer
//! function or chirps. Methods are looked up by name in a
//! [`PropagatorRegistry`] so the pipeline, CLI and service pick them at
//! runtime.

mod asm;
mod cache;
mod dsf;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, OpticalParams};

pub use asm::{asm_propagate, AngularSpectrum, AsmPlan};
pub use cache::{CacheStats, PlanCache, PlanKey, DEFAULT_PLAN_CACHE_CAPACITY};
pub use dsf::{
    bl_dsf_propagate, dsf_propagate_unlimited, fresnel_ft_step, plan_band_limit, solve_dsf_split,
    BandLimit, BandLimitedDsf, BlDsfPlan, DsfSplit,
};

pub const ASM: &str = "asm";
pub const BLDSF: &str = "bldsf";

/// Signed propagation distance plus illumination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSpec {
    /// Meters; negative values back-propagate.
    pub z: f64,
    pub optics: OpticalParams,
}

/// Everything a propagator needs to precompute a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanRequest {
    pub grid: Grid,
    pub z: f64,
    /// Displayed scale factor `input pitch / output pitch`.
    pub magnification: f64,
    pub optics: OpticalParams,
}

impl PlanRequest {
    pub fn new(grid: Grid, z: f64, magnification: f64, optics: OpticalParams) -> Self {
        Self {
            grid,
            z,
            magnification,
            optics,
        }
    }
}

/// A diffraction method.
pub trait Propagator: Send + Sync {
    /// Registry key, e.g. `"asm"`.
    fn name(&self) -> &'static str;

    /// Whether the output pitch follows the requested magnification. Methods
    /// that return `false` always produce output at the input pitch.
    fn supports_magnification(&self) -> bool;

    fn plan(&self, request: &PlanRequest) -> Result<Arc<dyn PropagationPlan>>;
}

/// Precomputed, immutable propagation for one grid and parameter set.
pub trait PropagationPlan: Send + Sync + fmt::Debug {
    fn method(&self) -> &'static str;

    fn input_grid(&self) -> Grid;

    fn output_grid(&self) -> Grid;

    fn apply(&self, field: &ComplexField) -> Result<ComplexField>;

    /// Bytes held by the plan's precomputed arrays.
    fn plan_bytes(&self) -> usize;

    /// Peak bytes of buffers allocated by one `apply` call, excluding the
    /// caller's input field.
    fn apply_bytes(&self) -> usize;

    /// Plan arrays plus per-frame buffers.
    fn working_set_bytes(&self) -> usize {
        self.plan_bytes() + self.apply_bytes()
    }
}

pub(crate) fn check_plan_input(plan: &dyn PropagationPlan, field: &ComplexField) -> Result<()> {
    let expected = plan.input_grid();
    if field.width() != expected.width || field.height() != expected.height {
        return Err(Error::DimensionMismatch {
            expected_width: expected.width,
            expected_height: expected.height,
            actual_width: field.width(),
            actual_height: field.height(),
        });
    }
    Ok(())
}

/// Name-indexed set of available propagators.
#[derive(Clone, Default)]
pub struct PropagatorRegistry {
    methods: BTreeMap<&'static str, Arc<dyn Propagator>>,
}

impl fmt::Debug for PropagatorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PropagatorRegistry")
            .field("methods", &self.names())
            .finish()
    }
}

impl PropagatorRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The angular spectrum method and band-limited double-step Fresnel.
    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        registry.register(AngularSpectrum);
        registry.register(BandLimitedDsf);
        registry
    }

    /// Adds `propagator`, returning any previous entry with the same name.
    pub fn register(
        &mut self,
        propagator: impl Propagator + 'static,
    ) -> Option<Arc<dyn Propagator>> {
        self.methods.insert(propagator.name(), Arc::new(propagator))
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Propagator>> {
        self.methods
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.methods.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.keys().copied().collect()
    }
}

/// Builds a plan for `method` from the builtin registry.
pub fn make_plan(
    method: &str,
    grid: Grid,
    z: f64,
    magnification: f64,
    optics: OpticalParams,
) -> Result<Arc<dyn PropagationPlan>> {
    PropagatorRegistry::builtin()
        .get(method)?
        .plan(&PlanRequest::new(grid, z, magnification, optics))
}

pub fn apply_plan(plan: &dyn PropagationPlan, field: &ComplexField) -> Result<ComplexField> {
    plan.apply(field)
}

pub(crate) fn check_distance(z: f64) -> Result<()> {
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "propagation distance must be finite, got {z}"
        )));
    }
    Ok(())
}

const COMPLEX_BYTES: usize = std::mem::size_of::<num_complex::Complex64>();

pub(crate) fn complex_bytes(count: usize) -> usize {
    count * COMPLEX_BYTES
}
