//! Focus (sharpness) metric and focus sweeps.
//!
//! Scores are computed on the reconstruction of the hologram with its mean
//! removed, over the central half of each axis. The uniform background of a
//! raw hologram is a bright rectangle whose edge diffraction grows with the
//! reconstruction distance and otherwise dominates the variance.

use num_complex::Complex64;

use crate::diffraction::{PlanCache, PlanRequest};
use crate::error::{Error, Result};
use crate::field::{amplitude, ComplexField, RealImage};
use crate::sim::HologramFrame;

/// Normalized variance `var(a) / mean(a)^2` of an amplitude image. In-focus
/// reconstructions of absorbing objects maximize it.
pub fn normalized_variance(img: &RealImage) -> f64 {
    normalized_variance_of(img.values())
}

pub fn normalized_variance_of(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var / (mean * mean)
}

/// Index of the largest score; the first one wins ties.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    scores
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (k, &s)| match best {
            Some((_, b)) if b >= s => best,
            _ => Some((k, s)),
        })
        .map(|(k, _)| k)
}

/// Hologram intensities minus their mean, as a real field.
pub fn scoring_field(frame: &HologramFrame) -> ComplexField {
    let mean = frame.image.mean();
    let samples = frame
        .image
        .values()
        .iter()
        .map(|&v| Complex64::new(v - mean, 0.0))
        .collect();
    ComplexField::from_parts_unchecked(frame.grid(), samples)
}

/// Normalized amplitude variance over the central half of each axis.
pub fn focus_score(reconstruction: &ComplexField) -> f64 {
    let amp = amplitude(reconstruction);
    let (w, h) = (amp.width(), amp.height());
    let (cw, ch) = ((w / 2).max(1), (h / 2).max(1));
    let (ox, oy) = ((w - cw) / 2, (h - ch) / 2);
    let values: Vec<f64> = (oy..oy + ch)
        .flat_map(|n| (ox..ox + cw).map(move |m| (m, n)))
        .map(|(m, n)| amp.get(m, n))
        .collect();
    normalized_variance_of(&values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Focus distance as displayed (positive = object in front of the sensor).
    pub distance: f64,
    pub score: f64,
}

/// `steps` focus distances evenly spaced from `start` to `end` inclusive.
pub fn sweep_distances(start: f64, end: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "a sweep needs at least 2 steps, got {steps}"
        )));
    }
    if !(start.is_finite() && end.is_finite()) || start == end {
        return Err(Error::InvalidParameter(format!(
            "sweep range {start}..{end} is empty"
        )));
    }
    Ok((0..steps)
        .map(|k| start + (end - start) * k as f64 / (steps - 1) as f64)
        .collect())
}

/// Scores each focus distance by back-propagating the mean-removed hologram.
pub fn focus_sweep(
    frame: &HologramFrame,
    distances: &[f64],
    method: &str,
    magnification: f64,
    cache: &PlanCache,
) -> Result<Vec<SweepPoint>> {
    let field = scoring_field(frame);
    distances
        .iter()
        .map(|&distance| {
            let request = PlanRequest::new(frame.grid(), -distance, magnification, frame.optics);
            let plan = cache.get_or_create(method, &request)?;
            Ok(SweepPoint {
                distance,
                score: focus_score(&plan.apply(&field)?),
            })
        })
        .collect()
}

/// The point with the highest score.
pub fn best_focus(points: &[SweepPoint]) -> Option<SweepPoint> {
    let scores: Vec<f64> = points.iter().map(|p| p.score).collect();
    argmax(&scores).map(|k| points[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    #[test]
    fn constant_image_has_zero_score() {
        let img = RealImage::filled(Grid::square(4, 1e-6).unwrap(), 2.0).unwrap();
        assert_eq!(normalized_variance(&img), 0.0);
    }

    #[test]
    fn scale_invariant() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b: Vec<f64> = a.iter().map(|v| v * 7.5).collect();
        assert!((normalized_variance_of(&a) - normalized_variance_of(&b)).abs() < 1e-12);
        // mean 2.5, variance 1.25
        assert!((normalized_variance_of(&a) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn argmax_first_wins() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn sweep_distances_inclusive() {
        assert_eq!(sweep_distances(0.01, 0.02, 2).unwrap(), vec![0.01, 0.02]);
        let d = sweep_distances(0.0055, 0.022, 4).unwrap();
        assert!((d[1] - 0.011).abs() < 1e-15);
        assert!(sweep_distances(0.01, 0.01, 5).is_err());
        assert!(sweep_distances(0.01, 0.02, 1).is_err());
    }

    #[test]
    fn score_uses_central_half() {
        let grid = Grid::square(8, 1e-6).unwrap();
        // Bright border, uniform center: only the border varies.
        let field = ComplexField::from_fn(grid, |m, n| {
            let edge = !(2..6).contains(&m) || !(2..6).contains(&n);
            Complex64::new(if edge { (m + n) as f64 } else { 1.0 }, 0.0)
        })
        .unwrap();
        assert_eq!(focus_score(&field), 0.0);
    }
}
