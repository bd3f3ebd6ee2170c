use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{
    check_distance, check_plan_input, complex_bytes, PlanRequest, PropagationPlan, PropagationSpec,
    Propagator, ASM,
};
use crate::error::Result;
use crate::fft::{transpose, Direction, Fft2};
use crate::field::{ComplexField, Grid, OpticalParams};

/// Angular spectrum method: convolution with the free-space transfer
/// function `exp(2 pi i z sqrt(1/lambda^2 - fx^2 - fy^2))` on a grid
/// zero-padded to twice the size per axis, so the circular FFT convolution
/// acts as a linear one. Output pitch equals input pitch. The sign matches
/// the Fresnel chirps of the double-step propagator, so both describe the
/// same physical direction.
#[derive(Debug, Clone, Copy, Default)]
pub struct AngularSpectrum;

impl Propagator for AngularSpectrum {
    fn name(&self) -> &'static str {
        ASM
    }

    fn supports_magnification(&self) -> bool {
        false
    }

    fn plan(&self, request: &PlanRequest) -> Result<Arc<dyn PropagationPlan>> {
        Ok(Arc::new(AsmPlan::new(
            request.grid,
            request.z,
            request.optics,
        )?))
    }
}

pub struct AsmPlan {
    grid: Grid,
    padded_width: usize,
    padded_height: usize,
    z: f64,
    /// Transfer function in transposed (column-major) layout with the
    /// `1 / (padded_width * padded_height)` normalization folded in.
    transfer_t: Vec<Complex64>,
    fft: Fft2,
}

impl std::fmt::Debug for AsmPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AsmPlan")
            .field("grid", &self.grid)
            .field("padded_width", &self.padded_width)
            .field("padded_height", &self.padded_height)
            .field("z", &self.z)
            .finish_non_exhaustive()
    }
}

/// Signed frequency index of DFT bin `k` on an `n`-point grid.
fn signed_bin(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

impl AsmPlan {
    pub fn new(grid: Grid, z: f64, optics: OpticalParams) -> Result<Self> {
        grid.validate()?;
        check_distance(z)?;
        let (pw, ph) = (2 * grid.width, 2 * grid.height);
        let scale = 1.0 / (pw * ph) as f64;
        let inv_lambda_sq = 1.0 / (optics.wavelength * optics.wavelength);

        let fy_sq: Vec<f64> = (0..ph)
            .map(|v| {
                let f = signed_bin(v, ph) / (ph as f64 * grid.pitch_y);
                f * f
            })
            .collect();

        let mut transfer_t = Vec::with_capacity(pw * ph);
        for u in 0..pw {
            let fx = signed_bin(u, pw) / (pw as f64 * grid.pitch_x);
            let fx_sq = fx * fx;
            for &fy2 in &fy_sq {
                let arg = inv_lambda_sq - fx_sq - fy2;
                let h = if z == 0.0 {
                    Complex64::new(scale, 0.0)
                } else if arg < 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(scale, 2.0 * PI * z * arg.sqrt())
                };
                transfer_t.push(h);
            }
        }

        Ok(Self {
            grid,
            padded_width: pw,
            padded_height: ph,
            z,
            transfer_t,
            fft: Fft2::new(pw, ph),
        })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        (self.padded_width, self.padded_height)
    }
}

impl PropagationPlan for AsmPlan {
    fn method(&self) -> &'static str {
        ASM
    }

    fn input_grid(&self) -> Grid {
        self.grid
    }

    fn output_grid(&self) -> Grid {
        self.grid
    }

    fn apply(&self, field: &ComplexField) -> Result<ComplexField> {
        check_plan_input(self, field)?;
        let (pw, ph) = (self.padded_width, self.padded_height);
        let mut padded = field.embed(pw, ph)?.into_samples();

        let mut transposed = vec![Complex64::new(0.0, 0.0); pw * ph];
        let mut scratch = self.fft.scratch();

        self.fft.rows(&mut padded, Direction::Forward, &mut scratch);
        transpose(&padded, &mut transposed, pw, ph);
        self.fft
            .cols_transposed(&mut transposed, Direction::Forward, &mut scratch);
        for (s, h) in transposed.iter_mut().zip(&self.transfer_t) {
            *s *= h;
        }
        self.fft
            .cols_transposed(&mut transposed, Direction::Inverse, &mut scratch);
        transpose(&transposed, &mut padded, ph, pw);
        drop(transposed);
        self.fft.rows(&mut padded, Direction::Inverse, &mut scratch);

        let padded_grid = Grid {
            width: pw,
            height: ph,
            ..self.grid
        };
        ComplexField::from_parts_unchecked(padded_grid, padded)
            .crop(self.grid.width, self.grid.height)
    }

    fn plan_bytes(&self) -> usize {
        complex_bytes(self.transfer_t.len())
    }

    fn apply_bytes(&self) -> usize {
        let padded = self.padded_width * self.padded_height;
        // padded grid, its transposed copy and FFT scratch; the cropped
        // output is allocated after the transposed copy is released
        complex_bytes(2 * padded + self.fft.scratch_len())
    }
}

/// One-shot angular spectrum propagation by `spec.z`.
pub fn asm_propagate(u1: &ComplexField, spec: PropagationSpec) -> Result<ComplexField> {
    AsmPlan::new(u1.grid(), spec.z, spec.optics)?.apply(u1)
}
