//! Oracles and fixtures shared by unit, integration and acceptance tests.
//!
//! Nothing here is used by the reconstruction path; the measurements are
//! deliberately brute force so they stay independent of the FFT code.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::field::{ComplexField, Grid, OpticalParams, RealImage};
use crate::sim::{generate_hologram, random_scene, HologramFrame};

pub const LAMBDA: f64 = 650e-9;
pub const PITCH: f64 = 2.5e-6;
pub const Z0: f64 = 0.011;

pub fn optics() -> OpticalParams {
    OpticalParams::new(LAMBDA).unwrap()
}

/// `||a - b|| / ||b||` over all samples.
pub fn relative_l2(a: &ComplexField, b: &ComplexField) -> f64 {
    assert_eq!(a.samples().len(), b.samples().len());
    let num: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    let den: f64 = b.samples().iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `||a - b|| / ||b||` for real images after scaling each to unit energy.
pub fn normalized_relative_l2(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    a.iter()
        .zip(b)
        .map(|(x, y)| (x / na - y / nb).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Centered window covering `fraction` of each dimension.
pub fn central_crop(img: &RealImage, fraction: f64) -> Vec<f64> {
    let w = ((img.width() as f64 * fraction).round() as usize).max(1);
    let h = ((img.height() as f64 * fraction).round() as usize).max(1);
    let (ox, oy) = ((img.width() - w) / 2, (img.height() - h) / 2);
    (oy..oy + h)
        .flat_map(|n| (ox..ox + w).map(move |m| (m, n)))
        .map(|(m, n)| img.get(m, n))
        .collect()
}

/// Smooth random field under a Gaussian envelope of standard deviation
/// `sigma_fraction` times the smaller physical extent. Its spectrum is
/// confined to a few envelope bandwidths, so propagation keeps it well inside
/// the window for moderate distances.
pub fn gaussian_random_field(grid: Grid, seed: u64, sigma_fraction: f64) -> ComplexField {
    let mut rng = StdRng::seed_from_u64(seed);
    let extent = (grid.width as f64 * grid.pitch_x).min(grid.height as f64 * grid.pitch_y);
    let sigma = sigma_fraction * extent;
    let f_max = 1.0 / (2.0 * PI * sigma);
    let waves: Vec<(f64, f64, Complex64)> = (0..8)
        .map(|_| {
            let fx = rng.random_range(-f_max..f_max);
            let fy = rng.random_range(-f_max..f_max);
            let c = Complex64::from_polar(rng.random_range(0.2..1.0), rng.random_range(-PI..PI));
            (fx, fy, c)
        })
        .collect();
    ComplexField::from_fn(grid, |m, n| {
        let (x, y) = (grid.x(m), grid.y(n));
        let envelope = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
        let sum: Complex64 = waves
            .iter()
            .map(|&(fx, fy, c)| c * Complex64::from_polar(1.0, 2.0 * PI * (fx * x + fy * y)))
            .sum();
        sum * envelope
    })
    .unwrap()
}

pub fn random_hologram(seed: u64, grid: Grid, z: f64) -> HologramFrame {
    generate_hologram(&random_scene(seed, grid), z, grid, optics()).unwrap()
}

/// Column profile averaged over the middle `rows` rows.
pub fn column_profile(img: &RealImage, rows: usize) -> Vec<f64> {
    let h = img.height();
    let start = (h - rows.min(h)) / 2;
    (0..img.width())
        .map(|m| {
            (start..start + rows.min(h))
                .map(|n| img.get(m, n))
                .sum::<f64>()
                / rows as f64
        })
        .collect()
}

/// Dominant spatial period (pixels) of a 1-D profile, found by scanning the
/// DFT magnitude of the mean-removed, Hann-windowed profile over a fine
/// frequency grid between `min_period` and `max_period`.
pub fn dominant_period(profile: &[f64], min_period: f64, max_period: f64) -> f64 {
    let n = profile.len();
    let mean = profile.iter().sum::<f64>() / n as f64;
    let windowed: Vec<f64> = profile
        .iter()
        .enumerate()
        .map(|(k, &v)| (v - mean) * (0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos()))
        .collect();
    let power = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &v) in windowed.iter().enumerate() {
            let ph = 2.0 * PI * f * k as f64;
            re += v * ph.cos();
            im -= v * ph.sin();
        }
        re * re + im * im
    };
    let (f_lo, f_hi) = (1.0 / max_period, 1.0 / min_period);
    let steps = 4000;
    let mut best = (f_lo, f64::MIN);
    for s in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * s as f64 / steps as f64;
        let p = power(f);
        if p > best.1 {
            best = (f, p);
        }
    }
    1.0 / best.0
}

/// Radius (pixels) of the dark blob around `(cx, cy)`: pixels darker than
/// the midpoint between the blob minimum and the background median are
/// flood-filled from the darkest pixel near the center, and the area is
/// converted to an equivalent disk radius.
pub fn dark_disk_radius(img: &RealImage, cx: usize, cy: usize, search: usize) -> f64 {
    let (w, h) = (img.width(), img.height());
    let mut border: Vec<f64> = Vec::new();
    for n in 0..h {
        for m in 0..w {
            let (dx, dy) = (m as f64 - cx as f64, n as f64 - cy as f64);
            let r = (dx * dx + dy * dy).sqrt();
            if r > 2.0 * search as f64 && r < 3.0 * search as f64 {
                border.push(img.get(m, n));
            }
        }
    }
    border.sort_by(f64::total_cmp);
    let background = border[border.len() / 2];

    let window = search / 2;
    let mut seed = (cx, cy);
    for n in cy.saturating_sub(window)..(cy + window).min(h) {
        for m in cx.saturating_sub(window)..(cx + window).min(w) {
            if img.get(m, n) < img.get(seed.0, seed.1) {
                seed = (m, n);
            }
        }
    }
    let threshold = 0.5 * (background + img.get(seed.0, seed.1));

    let mut visited = vec![false; w * h];
    let mut stack = vec![seed];
    let mut area = 0usize;
    while let Some((m, n)) = stack.pop() {
        let idx = n * w + m;
        if visited[idx] || img.get(m, n) >= threshold {
            continue;
        }
        let (dx, dy) = (m as f64 - cx as f64, n as f64 - cy as f64);
        if (dx * dx + dy * dy).sqrt() > 2.0 * search as f64 {
            continue;
        }
        visited[idx] = true;
        area += 1;
        if m > 0 {
            stack.push((m - 1, n));
        }
        if m + 1 < w {
            stack.push((m + 1, n));
        }
        if n > 0 {
            stack.push((m, n - 1));
        }
        if n + 1 < h {
            stack.push((m, n + 1));
        }
    }
    (area as f64 / PI).sqrt()
}

/// Mean over pixels within `radius` of `(cx, cy)` and over the ring between
/// `1.5 radius` and `2.5 radius`.
pub fn disk_and_ring_means(img: &RealImage, cx: f64, cy: f64, radius: f64) -> (f64, f64) {
    let (mut inside, mut ni, mut ring, mut nr) = (0.0, 0usize, 0.0, 0usize);
    for n in 0..img.height() {
        for m in 0..img.width() {
            let r = ((m as f64 - cx).powi(2) + (n as f64 - cy).powi(2)).sqrt();
            if r <= radius {
                inside += img.get(m, n);
                ni += 1;
            } else if r >= 1.5 * radius && r <= 2.5 * radius {
                ring += img.get(m, n);
                nr += 1;
            }
        }
    }
    (inside / ni as f64, ring / nr as f64)
}

/// Angular-spectrum propagation of `field` over `z` evaluated at arbitrary
/// rectilinear output coordinates, by direct separable DFTs over the
/// 2x zero-padded spectrum. Returns samples row-major over `ys` x `xs`.
pub fn asm_reference(
    field: &ComplexField,
    z: f64,
    wavelength: f64,
    xs: &[f64],
    ys: &[f64],
) -> Vec<Complex64> {
    let grid = field.grid();
    let (w, h) = (grid.width, grid.height);
    let (pw, ph) = (2 * w, 2 * h);
    let freqs = |n: usize, pitch: f64| -> Vec<f64> {
        (0..n)
            .map(|k| (k as f64 - (n / 2) as f64) / (n as f64 * pitch))
            .collect()
    };
    let fx = freqs(pw, grid.pitch_x);
    let fy = freqs(ph, grid.pitch_y);

    // Spectrum: rows first (x), then columns (y).
    let mut row_spec = vec![Complex64::new(0.0, 0.0); h * pw];
    for n in 0..h {
        for (u, &f) in fx.iter().enumerate() {
            row_spec[n * pw + u] = (0..w)
                .map(|m| field.get(m, n) * Complex64::from_polar(1.0, -2.0 * PI * f * grid.x(m)))
                .sum();
        }
    }
    let mut spec = vec![Complex64::new(0.0, 0.0); ph * pw];
    for (v, &g) in fy.iter().enumerate() {
        let kernel: Vec<Complex64> = (0..h)
            .map(|n| Complex64::from_polar(1.0, -2.0 * PI * g * grid.y(n)))
            .collect();
        for u in 0..pw {
            let arg = 1.0 / (wavelength * wavelength) - fx[u] * fx[u] - g * g;
            let transfer = if arg < 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0, 2.0 * PI * z * arg.sqrt())
            };
            let s: Complex64 = (0..h).map(|n| row_spec[n * pw + u] * kernel[n]).sum();
            spec[v * pw + u] = s * transfer;
        }
    }

    // Synthesis at the requested points: over fy first, then fx.
    let norm = 1.0 / (pw * ph) as f64;
    let mut partial = vec![Complex64::new(0.0, 0.0); ys.len() * pw];
    for (j, &y) in ys.iter().enumerate() {
        let kernel: Vec<Complex64> = fy
            .iter()
            .map(|&g| Complex64::from_polar(1.0, 2.0 * PI * g * y))
            .collect();
        for u in 0..pw {
            partial[j * pw + u] = (0..ph).map(|v| spec[v * pw + u] * kernel[v]).sum();
        }
    }
    let mut out = Vec::with_capacity(ys.len() * xs.len());
    for j in 0..ys.len() {
        for &x in xs {
            let s: Complex64 = fx
                .iter()
                .enumerate()
                .map(|(u, &f)| partial[j * pw + u] * Complex64::from_polar(1.0, 2.0 * PI * f * x))
                .sum();
            out.push(s * norm);
        }
    }
    out
}
