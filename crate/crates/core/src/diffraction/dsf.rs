//! Fourier-transform-type Fresnel propagation and the band-limited
//! double-step variant whose output pitch is set by how the distance is
//! split around an intermediate virtual plane.
//!
//! A single step from a plane of pitch `p` over distance `z` computes
//!
//! ```text
//! u2(x2) = C(x2) * FFT^{sgn z}[ u1(x1) * exp(i pi x1^2 / (lambda z)) ]
//! ```
//!
//! with output pitch `lambda |z| / (N p)` and `C(x2) = exp(i pi x2^2 / (lambda z))`.
//! Two steps through a virtual plane at `z1` (then `z2`) merge the inner
//! chirps into `exp(i pi (z1 + z2) xv^2 / (lambda z1 z2))`, which is masked
//! to its alias-free extent before the second transform. The output pitch is
//! `|z2 / z1|` times the input pitch.
//!
//! Coordinates are centered (`x = (k - N/2) p`). The centered DFT is
//! `(-1)^(N/2) (-1)^k DFT[(-1)^m u]` for even `N`, so the `(-1)^k` factors
//! live in the chirp vectors and no FFT shifts are needed. Grid dimensions
//! must therefore be even.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{check_plan_input, complex_bytes, PlanRequest, PropagationPlan, Propagator, BLDSF};
use crate::error::{Error, Result};
use crate::fft::{alternating, transpose, Direction, Fft2};
use crate::field::{ComplexField, Grid, OpticalParams};

/// Distances from the source to the virtual plane (`z1`) and from the
/// virtual plane to the destination (`z2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsfSplit {
    pub z1: f64,
    pub z2: f64,
}

impl DsfSplit {
    pub fn new(z1: f64, z2: f64) -> Result<Self> {
        if !(z1.is_finite() && z2.is_finite()) || z1 == 0.0 || z2 == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "split distances must be finite and non-zero, got z1={z1}, z2={z2}"
            )));
        }
        if z1 + z2 == 0.0 {
            return Err(Error::InvalidParameter("split distances cancel out".into()));
        }
        Ok(Self { z1, z2 })
    }

    pub fn total(&self) -> f64 {
        self.z1 + self.z2
    }

    /// Displayed magnification `|z1 / z2|`.
    pub fn magnification(&self) -> f64 {
        (self.z1 / self.z2).abs()
    }
}

/// Splits `z` so the destination pitch is the source pitch divided by
/// `magnification`: `z1 = z M / (M + 1)`, `z2 = z / (M + 1)`.
pub fn solve_dsf_split(z: f64, magnification: f64) -> Result<DsfSplit> {
    if !z.is_finite() || z == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "double-step propagation needs a finite non-zero distance, got {z}"
        )));
    }
    check_magnification(magnification)?;
    let denom = magnification + 1.0;
    DsfSplit::new(z * magnification / denom, z / denom)
}

fn check_magnification(magnification: f64) -> Result<()> {
    if !(magnification.is_finite() && magnification > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "magnification must be positive, got {magnification}"
        )));
    }
    Ok(())
}

/// Half-widths of the pass band applied on the virtual plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLimit {
    pub xv_max: f64,
    pub yv_max: f64,
}

fn virtual_pitch(split: DsfSplit, n: usize, source_pitch: f64, optics: OpticalParams) -> f64 {
    optics.wavelength * split.z1.abs() / (n as f64 * source_pitch)
}

/// Virtual-plane pass band.
///
/// The second step evaluates the sampled kernel correctly only for rays that
/// land inside the output window; anything else wraps around. A ray from the
/// source window (half-width `X1`) into the output window (half-width
/// `X2 = lambda |z2| / (2 p_v)`) crosses the virtual plane within
/// `(|z2| X1 + |z1| X2) / |z|`, and the dominant straight rays must also stay
/// within `X2`. The smaller of the two is the geometric edge of the useful
/// field; one Fresnel zone `sqrt(lambda |z1|)` is added so the edge's own
/// diffraction fringes pass unclipped.
pub fn plan_band_limit(split: DsfSplit, grid: Grid, optics: OpticalParams) -> Result<BandLimit> {
    let split = DsfSplit::new(split.z1, split.z2)?;
    grid.validate()?;
    let (z1, z2, z) = (split.z1.abs(), split.z2.abs(), split.total().abs());
    let fresnel_zone = (optics.wavelength * z1).sqrt();
    let limit = |n: usize, pitch: f64| {
        let pv = virtual_pitch(split, n, pitch, optics);
        let source_half = n as f64 * pitch / 2.0;
        let output_half = optics.wavelength * z2 / (2.0 * pv);
        let through = (z2 * source_half + z1 * output_half) / z;
        through.min(output_half) + fresnel_zone
    };
    Ok(BandLimit {
        xv_max: limit(grid.width, grid.pitch_x),
        yv_max: limit(grid.height, grid.pitch_y),
    })
}

fn check_even(grid: Grid) -> Result<()> {
    if !grid.width.is_multiple_of(2) || !grid.height.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "Fresnel transforms need even dimensions, got {}x{}",
            grid.width, grid.height
        )));
    }
    Ok(())
}

/// `exp(i pi x^2 / (lambda z))` over centered coordinates, optionally times `(-1)^k`.
fn chirp(n: usize, pitch: f64, wavelength: f64, z: f64, centering: bool) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let x = (k as f64 - (n / 2) as f64) * pitch;
            let c = Complex64::from_polar(1.0, PI * x * x / (wavelength * z));
            if centering {
                c * alternating(k)
            } else {
                c
            }
        })
        .collect()
}

/// `(-1)^(N/2)` for both axes.
fn centering_sign(grid: Grid) -> f64 {
    alternating(grid.width / 2 + grid.height / 2)
}

fn multiply_separable(data: &mut [Complex64], cx: &[Complex64], cy: &[Complex64]) {
    let width = cx.len();
    for (row, &y) in data.chunks_exact_mut(width).zip(cy) {
        for (s, &x) in row.iter_mut().zip(cx) {
            *s *= x * y;
        }
    }
}

/// Single Fourier-transform-type Fresnel step over distance `z`. The FFT runs
/// forward for positive `z` and inverse for negative `z`; output pitch is
/// `lambda |z| / (N * input pitch)` per axis.
pub fn fresnel_ft_step(u1: &ComplexField, z: f64, optics: OpticalParams) -> Result<ComplexField> {
    if !z.is_finite() || z == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Fresnel step needs a finite non-zero distance, got {z}"
        )));
    }
    let grid = u1.grid();
    check_even(grid)?;
    let (w, h) = (grid.width, grid.height);
    let lambda = optics.wavelength;
    let out_grid = grid.with_pitch(
        lambda * z.abs() / (w as f64 * grid.pitch_x),
        lambda * z.abs() / (h as f64 * grid.pitch_y),
    );

    let in_x = chirp(w, grid.pitch_x, lambda, z, true);
    let in_y = chirp(h, grid.pitch_y, lambda, z, true);
    let scale = centering_sign(grid) / ((w * h) as f64).sqrt();
    let mut out_x = chirp(w, out_grid.pitch_x, lambda, z, true);
    for c in &mut out_x {
        *c *= scale;
    }
    let out_y = chirp(h, out_grid.pitch_y, lambda, z, true);

    let fft = Fft2::new(w, h);
    let mut data = u1.samples().to_vec();
    let mut transposed = vec![Complex64::new(0.0, 0.0); w * h];
    let mut scratch = fft.scratch();
    multiply_separable(&mut data, &in_x, &in_y);
    fft.process(
        &mut data,
        &mut transposed,
        Direction::from_sign(z),
        &mut scratch,
    );
    multiply_separable(&mut data, &out_x, &out_y);
    Ok(ComplexField::from_parts_unchecked(out_grid, data))
}

/// Band-limited double-step Fresnel diffraction.
#[derive(Debug, Clone, Copy, Default)]
pub struct BandLimitedDsf;

impl Propagator for BandLimitedDsf {
    fn name(&self) -> &'static str {
        BLDSF
    }

    fn supports_magnification(&self) -> bool {
        true
    }

    fn plan(&self, request: &PlanRequest) -> Result<Arc<dyn PropagationPlan>> {
        Ok(Arc::new(BlDsfPlan::new(
            request.grid,
            request.z,
            request.magnification,
            request.optics,
        )?))
    }
}

pub struct BlDsfPlan {
    input: Grid,
    output: Grid,
    virtual_pitch: (f64, f64),
    split: DsfSplit,
    band: Option<BandLimit>,
    // Separable factors. The unitary normalization of both transforms is
    // folded into `virtual_x`.
    input_x: Vec<Complex64>,
    input_y: Vec<Complex64>,
    virtual_x: Vec<Complex64>,
    virtual_y: Vec<Complex64>,
    output_x: Vec<Complex64>,
    output_y: Vec<Complex64>,
    fft: Fft2,
}

impl std::fmt::Debug for BlDsfPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlDsfPlan")
            .field("input", &self.input)
            .field("output", &self.output)
            .field("split", &self.split)
            .field("band", &self.band)
            .finish_non_exhaustive()
    }
}

impl BlDsfPlan {
    pub fn new(grid: Grid, z: f64, magnification: f64, optics: OpticalParams) -> Result<Self> {
        let split = solve_dsf_split(z, magnification)?;
        let band = plan_band_limit(split, grid, optics)?;
        Self::build(grid, z, magnification, optics, Some(band))
    }

    /// Plain double-step Fresnel, without the virtual-plane mask.
    pub fn without_band_limit(
        grid: Grid,
        z: f64,
        magnification: f64,
        optics: OpticalParams,
    ) -> Result<Self> {
        Self::build(grid, z, magnification, optics, None)
    }

    /// Double-step Fresnel with an explicit virtual-plane pass band.
    pub fn with_band_limit(
        grid: Grid,
        z: f64,
        magnification: f64,
        optics: OpticalParams,
        band: BandLimit,
    ) -> Result<Self> {
        Self::build(grid, z, magnification, optics, Some(band))
    }

    fn build(
        grid: Grid,
        z: f64,
        magnification: f64,
        optics: OpticalParams,
        band: Option<BandLimit>,
    ) -> Result<Self> {
        grid.validate()?;
        check_even(grid)?;
        let split = solve_dsf_split(z, magnification)?;
        let (w, h) = (grid.width, grid.height);
        let lambda = optics.wavelength;
        let pv = (
            virtual_pitch(split, w, grid.pitch_x, optics),
            virtual_pitch(split, h, grid.pitch_y, optics),
        );
        let output = grid.with_pitch(grid.pitch_x / magnification, grid.pitch_y / magnification);

        let input_x = chirp(w, grid.pitch_x, lambda, split.z1, true);
        let input_y = chirp(h, grid.pitch_y, lambda, split.z1, true);

        // Step-one output and step-two input centering factors cancel here.
        let merged = split.z1 * split.z2 / split.total();
        let masked = |n: usize, pitch: f64, half_width: Option<f64>| -> Vec<Complex64> {
            chirp(n, pitch, lambda, merged, false)
                .into_iter()
                .enumerate()
                .map(|(k, c)| {
                    let x = (k as f64 - (n / 2) as f64) * pitch;
                    match half_width {
                        Some(limit) if x.abs() > limit => Complex64::new(0.0, 0.0),
                        _ => c,
                    }
                })
                .collect()
        };
        let scale = 1.0 / (w * h) as f64;
        let mut virtual_x = masked(w, pv.0, band.map(|b| b.xv_max));
        for c in &mut virtual_x {
            *c *= scale;
        }
        let virtual_y = masked(h, pv.1, band.map(|b| b.yv_max));

        // Constant Fresnel prefactors: on-axis phase exp(2πiz/λ), a factor -i·sgn
        // per step, and the amplitude gain M from the pitch change. With them
        // the result matches the angular spectrum field, not just up to phase.
        let prefactor = -magnification * Complex64::from_polar(1.0, 2.0 * PI * z / lambda);
        let mut output_x = chirp(w, output.pitch_x, lambda, split.z2, true);
        for c in &mut output_x {
            *c *= prefactor;
        }
        let output_y = chirp(h, output.pitch_y, lambda, split.z2, true);

        Ok(Self {
            input: grid,
            output,
            virtual_pitch: pv,
            split,
            band,
            input_x,
            input_y,
            virtual_x,
            virtual_y,
            output_x,
            output_y,
            fft: Fft2::new(w, h),
        })
    }

    pub fn split(&self) -> DsfSplit {
        self.split
    }

    pub fn band_limit(&self) -> Option<BandLimit> {
        self.band
    }

    /// Virtual-plane pitch per axis.
    pub fn virtual_pitch(&self) -> (f64, f64) {
        self.virtual_pitch
    }
}

impl PropagationPlan for BlDsfPlan {
    fn method(&self) -> &'static str {
        BLDSF
    }

    fn input_grid(&self) -> Grid {
        self.input
    }

    fn output_grid(&self) -> Grid {
        self.output
    }

    fn apply(&self, field: &ComplexField) -> Result<ComplexField> {
        check_plan_input(self, field)?;
        let (w, h) = (self.input.width, self.input.height);
        let first = Direction::from_sign(self.split.z1);
        let second = Direction::from_sign(self.split.z2);

        let mut data = field.samples().to_vec();
        let mut transposed = vec![Complex64::new(0.0, 0.0); w * h];
        let mut scratch = self.fft.scratch();

        multiply_separable(&mut data, &self.input_x, &self.input_y);
        self.fft.rows(&mut data, first, &mut scratch);
        transpose(&data, &mut transposed, w, h);
        self.fft
            .cols_transposed(&mut transposed, first, &mut scratch);
        // transposed layout: rows are x, columns are y
        multiply_separable(&mut transposed, &self.virtual_y, &self.virtual_x);
        self.fft
            .cols_transposed(&mut transposed, second, &mut scratch);
        transpose(&transposed, &mut data, h, w);
        self.fft.rows(&mut data, second, &mut scratch);
        multiply_separable(&mut data, &self.output_x, &self.output_y);

        Ok(ComplexField::from_parts_unchecked(self.output, data))
    }

    fn plan_bytes(&self) -> usize {
        let (w, h) = (self.input.width, self.input.height);
        complex_bytes(3 * (w + h))
    }

    fn apply_bytes(&self) -> usize {
        // working copy (becomes the output), transposed copy, FFT scratch
        complex_bytes(2 * self.input.len() + self.fft.scratch_len())
    }
}

/// One-shot band-limited double-step Fresnel propagation by `z` with the
/// destination pitch set to `input pitch / magnification`.
pub fn bl_dsf_propagate(
    u1: &ComplexField,
    z: f64,
    magnification: f64,
    optics: OpticalParams,
) -> Result<ComplexField> {
    BlDsfPlan::new(u1.grid(), z, magnification, optics)?.apply(u1)
}

/// Double-step Fresnel propagation without the virtual-plane band limit.
pub fn dsf_propagate_unlimited(
    u1: &ComplexField,
    z: f64,
    magnification: f64,
    optics: OpticalParams,
) -> Result<ComplexField> {
    BlDsfPlan::without_band_limit(u1.grid(), z, magnification, optics)?.apply(u1)
}
