//! Sampled complex fields and real images.
//!
//! Samples are row-major with the origin at the top-left pixel, x to the
//! right and y downward. Physical coordinates used by the propagators are
//! DC-centered: `x = (column - width / 2) * pitch_x`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shape and sampling pitch of a rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    /// Meters per pixel along x.
    pub pitch_x: f64,
    /// Meters per pixel along y.
    pub pitch_y: f64,
}

impl Grid {
    pub fn new(width: usize, height: usize, pitch_x: f64, pitch_y: f64) -> Result<Self> {
        let grid = Self {
            width,
            height,
            pitch_x,
            pitch_y,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn square(n: usize, pitch: f64) -> Result<Self> {
        Self::new(n, n, pitch, pitch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be at least 1x1, got {}x{}",
                self.width, self.height
            )));
        }
        for (name, pitch) in [("pitch_x", self.pitch_x), ("pitch_y", self.pitch_y)] {
            if !(pitch.is_finite() && pitch > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "{name} must be positive, got {pitch}"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_pitch(&self, pitch_x: f64, pitch_y: f64) -> Self {
        Self {
            pitch_x,
            pitch_y,
            ..*self
        }
    }

    /// Centered physical coordinate of column `m`.
    pub fn x(&self, m: usize) -> f64 {
        (m as f64 - (self.width / 2) as f64) * self.pitch_x
    }

    /// Centered physical coordinate of row `n`.
    pub fn y(&self, n: usize) -> f64 {
        (n as f64 - (self.height / 2) as f64) * self.pitch_y
    }
}

/// Wavelength and other illumination constants shared by every propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalParams {
    /// Meters.
    pub wavelength: f64,
}

impl OpticalParams {
    pub fn new(wavelength: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        Ok(Self { wavelength })
    }
}

impl Default for OpticalParams {
    /// 650 nm red laser diode.
    fn default() -> Self {
        Self { wavelength: 650e-9 }
    }
}

/// A grid of complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples for {}x{}, got {}",
                grid.len(),
                grid.width,
                grid.height,
                samples.len()
            )));
        }
        if samples
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Result<Self> {
        Self::filled(grid, Complex64::new(0.0, 0.0))
    }

    pub fn filled(grid: Grid, value: Complex64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut samples = Vec::with_capacity(grid.len());
        for n in 0..grid.height {
            for m in 0..grid.width {
                samples.push(f(m, n));
            }
        }
        Self::new(grid, samples)
    }

    /// Skips the finiteness scan; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(grid: Grid, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self { grid, samples }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn pitch_x(&self) -> f64 {
        self.grid.pitch_x
    }

    pub fn pitch_y(&self) -> f64 {
        self.grid.pitch_y
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.samples[n * self.grid.width + m]
    }

    /// Total energy, the sum of |u|^2.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Zero-pads to a larger grid, keeping the content centered.
    pub fn embed(&self, new_width: usize, new_height: usize) -> Result<Self> {
        let (w, h) = (self.grid.width, self.grid.height);
        if new_width < w || new_height < h {
            return Err(Error::InvalidGrid(format!(
                "cannot embed {w}x{h} into smaller {new_width}x{new_height}"
            )));
        }
        let grid = Grid {
            width: new_width,
            height: new_height,
            ..self.grid
        };
        let mut samples = vec![Complex64::new(0.0, 0.0); grid.len()];
        let (ox, oy) = ((new_width - w) / 2, (new_height - h) / 2);
        for (n, row) in self.samples.chunks_exact(w).enumerate() {
            let start = (n + oy) * new_width + ox;
            samples[start..start + w].copy_from_slice(row);
        }
        Ok(Self { grid, samples })
    }

    /// Extracts the centered `new_width` x `new_height` window.
    pub fn crop(&self, new_width: usize, new_height: usize) -> Result<Self> {
        let (w, h) = (self.grid.width, self.grid.height);
        if new_width == 0 || new_height == 0 || new_width > w || new_height > h {
            return Err(Error::InvalidGrid(format!(
                "cannot crop {w}x{h} to {new_width}x{new_height}"
            )));
        }
        let grid = Grid {
            width: new_width,
            height: new_height,
            ..self.grid
        };
        let (ox, oy) = ((w - new_width) / 2, (h - new_height) / 2);
        let mut samples = Vec::with_capacity(grid.len());
        for n in 0..new_height {
            let start = (n + oy) * w + ox;
            samples.extend_from_slice(&self.samples[start..start + new_width]);
        }
        Ok(Self { grid, samples })
    }
}

/// A grid of real values: hologram intensities or display levels.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    grid: Grid,
    values: Vec<f64>,
}

impl RealImage {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values for {}x{}, got {}",
                grid.len(),
                grid.width,
                grid.height,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn filled(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn pitch_x(&self) -> f64 {
        self.grid.pitch_x
    }

    pub fn pitch_y(&self) -> f64 {
        self.grid.pitch_y
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[n * self.grid.width + m]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Values clamped and rounded to 8 bits.
    pub fn to_u8(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Per-pixel modulus.
pub fn amplitude(field: &ComplexField) -> RealImage {
    RealImage {
        grid: field.grid,
        values: field.samples.iter().map(|c| c.norm()).collect(),
    }
}

/// Principal argument in `[-pi, pi)`. Zero-magnitude samples map to 0.
pub fn phase(field: &ComplexField) -> RealImage {
    RealImage {
        grid: field.grid,
        values: field.samples.iter().map(|&c| principal_arg(c)).collect(),
    }
}

fn principal_arg(c: Complex64) -> f64 {
    if c.re == 0.0 && c.im == 0.0 {
        return 0.0;
    }
    let arg = c.im.atan2(c.re);
    if arg >= PI {
        -PI
    } else {
        arg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DisplayMode {
    Amplitude,
    Phase,
}

pub const DISPLAY_LOW_PERCENTILE: f64 = 0.1;
pub const DISPLAY_HIGH_PERCENTILE: f64 = 99.9;

/// Maps an amplitude or phase image onto the 0..=255 gray range.
///
/// Amplitude images are stretched between their 0.1 and 99.9 percentiles so
/// isolated twin-image hot spots do not flatten the rest of the picture; a
/// degenerate range renders as mid-gray. Phase is mapped linearly from
/// `[-pi, pi)`.
pub fn to_display(img: &RealImage, mode: DisplayMode) -> RealImage {
    let values = match mode {
        DisplayMode::Phase => img
            .values
            .iter()
            .map(|&p| ((p + PI) / (2.0 * PI) * 255.0).round().clamp(0.0, 255.0))
            .collect(),
        DisplayMode::Amplitude => {
            let (lo, hi) =
                percentile_pair(&img.values, DISPLAY_LOW_PERCENTILE, DISPLAY_HIGH_PERCENTILE);
            let span = hi - lo;
            if span.is_nan() || span <= f64::EPSILON * hi.abs().max(1.0) {
                vec![128.0; img.values.len()]
            } else {
                img.values
                    .iter()
                    .map(|&v| ((v - lo) / span * 255.0).round().clamp(0.0, 255.0))
                    .collect()
            }
        }
    };
    RealImage {
        grid: img.grid,
        values,
    }
}

/// Linearly interpolated percentiles (`q` in percent), computed by selection
/// rather than a full sort.
pub fn percentile_pair(values: &[f64], q_lo: f64, q_hi: f64) -> (f64, f64) {
    let mut scratch = values.to_vec();
    let lo = percentile_in_place(&mut scratch, q_lo);
    let hi = percentile_in_place(&mut scratch, q_hi);
    (lo, hi)
}

fn percentile_in_place(values: &mut [f64], q: f64) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let rank = (q / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let below = rank.floor() as usize;
    let frac = rank - below as f64;
    let (_, &mut v0, upper) = values.select_nth_unstable_by(below, f64::total_cmp);
    if frac == 0.0 || upper.is_empty() {
        return v0;
    }
    let v1 = upper.iter().copied().fold(f64::INFINITY, f64::min);
    v0 + frac * (v1 - v0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(w: usize, h: usize) -> Grid {
        Grid::new(w, h, 2.5e-6, 2.5e-6).unwrap()
    }

    #[test]
    fn amplitude_of_zeros_and_units() {
        let zero = ComplexField::zeros(grid(4, 3)).unwrap();
        assert!(amplitude(&zero).values().iter().all(|&v| v == 0.0));

        let one = ComplexField::filled(grid(4, 3), Complex64::new(1.0, 0.0)).unwrap();
        assert!(amplitude(&one).values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn amplitude_pythagorean() {
        let f = ComplexField::from_fn(grid(3, 3), |m, n| {
            if (m, n) == (1, 2) {
                Complex64::new(3.0, 4.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        assert_eq!(amplitude(&f).get(1, 2), 5.0);
    }

    #[test]
    fn phase_branch_conventions() {
        let cases = [
            (Complex64::new(1.0, 0.0), 0.0),
            (Complex64::new(0.0, 1.0), PI / 2.0),
            (Complex64::new(-1.0, 0.0), -PI),
            (Complex64::new(-1.0, -0.0), -PI),
            (Complex64::new(0.0, 0.0), 0.0),
        ];
        for (c, expected) in cases {
            let f = ComplexField::filled(grid(2, 2), c).unwrap();
            for &p in phase(&f).values() {
                assert_eq!(p, expected, "arg of {c}");
            }
        }
    }

    #[test]
    fn phase_display_endpoints() {
        let img = RealImage::new(grid(3, 1), vec![0.0, -PI, PI - 1e-12]).unwrap();
        let d = to_display(&img, DisplayMode::Phase);
        assert_eq!(d.values(), &[128.0, 0.0, 255.0]);
    }

    #[test]
    fn amplitude_display_ramp_percentiles() {
        let img = RealImage::new(grid(101, 1), (0..=100).map(f64::from).collect()).unwrap();
        let d = to_display(&img, DisplayMode::Amplitude);
        // 0.1th percentile of 0..=100 is 0.1, 99.9th is 99.9.
        for (v, &out) in (0..=100).zip(d.values()) {
            // Exact halves (value 50) may round either way.
            let expected = ((f64::from(v) - 0.1) / 99.8 * 255.0).clamp(0.0, 255.0);
            assert!(
                (out - expected).abs() <= 0.5 + 1e-9,
                "value {v}: {out} vs {expected}"
            );
        }
        assert_eq!(d.values()[0], 0.0);
        assert_eq!(d.values()[100], 255.0);
    }

    #[test]
    fn constant_amplitude_is_mid_gray() {
        let img = RealImage::filled(grid(5, 5), 0.7).unwrap();
        let d = to_display(&img, DisplayMode::Amplitude);
        assert!(d.values().iter().all(|&v| v == 128.0));
    }

    #[test]
    fn embed_adds_zero_border() {
        let n = 8;
        let f = ComplexField::from_fn(grid(n, n), |m, k| Complex64::new(m as f64 + 1.0, k as f64))
            .unwrap();
        let e = f.embed(2 * n, 2 * n).unwrap();
        let zeros = e.samples().iter().filter(|c| c.norm() == 0.0).count();
        assert_eq!(zeros, 3 * n * n);
        assert_eq!(e.energy(), f.energy());
        assert_eq!(e.crop(n, n).unwrap(), f);
    }

    #[test]
    fn embed_and_crop_reject_bad_dims() {
        let f = ComplexField::zeros(grid(4, 4)).unwrap();
        assert!(f.embed(3, 4).is_err());
        assert!(f.crop(5, 4).is_err());
        assert!(f.crop(0, 4).is_err());
    }

    #[test]
    fn constructors_enforce_invariants() {
        assert!(Grid::new(0, 4, 1e-6, 1e-6).is_err());
        assert!(Grid::new(4, 4, 0.0, 1e-6).is_err());
        assert!(ComplexField::new(grid(2, 2), vec![Complex64::new(0.0, 0.0); 3]).is_err());
        assert!(matches!(
            ComplexField::new(grid(1, 1), vec![Complex64::new(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        ));
        assert!(OpticalParams::new(0.0).is_err());
    }

    fn arb_field() -> impl Strategy<Value = ComplexField> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), w * h).prop_map(move |v| {
                ComplexField::new(
                    grid(w, h),
                    v.into_iter()
                        .map(|(re, im)| Complex64::new(re, im))
                        .collect(),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn crop_inverts_embed(f in arb_field(), dw in 0usize..9, dh in 0usize..9) {
            let e = f.embed(f.width() + dw, f.height() + dh).unwrap();
            prop_assert_eq!(e.crop(f.width(), f.height()).unwrap(), f.clone());
            let energy = f.energy();
            prop_assert!((e.energy() - energy).abs() <= 1e-12 * energy.max(1.0));
        }

        #[test]
        fn amplitude_squared_is_energy(f in arb_field()) {
            let sum: f64 = amplitude(&f).values().iter().map(|a| a * a).sum();
            prop_assert!((sum - f.energy()).abs() <= 1e-9 * f.energy().max(1.0));
        }

        #[test]
        fn phase_is_half_open(f in arb_field()) {
            for &p in phase(&f).values() {
                prop_assert!((-PI..PI).contains(&p));
            }
        }

        #[test]
        fn phase_display_monotone(a in -PI..PI, b in -PI..PI) {
            let img = RealImage::new(grid(2, 1), vec![a, b]).unwrap();
            let d = to_display(&img, DisplayMode::Phase);
            let (da, db) = (d.values()[0], d.values()[1]);
            prop_assert!((0.0..=255.0).contains(&da));
            if a < b { prop_assert!(da <= db); }
        }
    }
}
