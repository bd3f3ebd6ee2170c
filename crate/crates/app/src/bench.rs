//! End-to-end throughput of the propagation methods on a synthetic hologram.

use std::time::Instant;

use holo_core::diffraction::{PlanRequest, ASM, BLDSF};
use holo_core::field::{Grid, OpticalParams};
use holo_core::pipeline::{OutputKind, ReconstructionParams, Reconstructor};
use holo_core::sim::{generate_hologram, random_scene, HologramFrame};
use serde::Serialize;

use crate::error::{AppError, Result};

pub const BENCH_PITCH: f64 = 2.5e-6;
pub const BENCH_DISTANCE: f64 = 0.011;
pub const MIN_BENCH_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub methods: Vec<String>,
    pub seed: u64,
    pub magnification: f64,
    pub wavelength: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            width: 1920,
            height: 1440,
            frames: 5,
            methods: vec![ASM.into(), BLDSF.into()],
            seed: 0,
            magnification: 1.0,
            wavelength: 650e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: String,
    pub frames: usize,
    pub mean_fps: f64,
    pub p50_ms: f64,
    /// Plan arrays plus the buffers of one reconstruction.
    pub peak_bytes_estimate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub methods: Vec<MethodReport>,
    /// Present when both methods ran.
    pub speedup_bldsf_over_asm: Option<f64>,
}

impl BenchReport {
    /// One JSON object per line.
    pub fn to_json_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .methods
            .iter()
            .map(|m| serde_json::to_string(m).expect("reports serialize"))
            .collect();
        if let Some(speedup) = self.speedup_bldsf_over_asm {
            lines.push(serde_json::json!({ "speedup_bldsf_over_asm": speedup }).to_string());
        }
        lines
    }
}

/// The benchmark input: a random scene at the instrument's focus distance.
pub fn bench_hologram(
    width: usize,
    height: usize,
    seed: u64,
    optics: OpticalParams,
) -> Result<HologramFrame> {
    let grid = Grid::new(width, height, BENCH_PITCH, BENCH_PITCH)?;
    Ok(generate_hologram(
        &random_scene(seed, grid),
        BENCH_DISTANCE,
        grid,
        optics,
    )?)
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.width < MIN_BENCH_DIM || config.height < MIN_BENCH_DIM {
        return Err(AppError::Config(format!(
            "bench dimensions must be at least {MIN_BENCH_DIM}, got {}x{}",
            config.width, config.height
        )));
    }
    if config.frames == 0 {
        return Err(AppError::Config("bench needs at least one frame".into()));
    }
    if config.methods.is_empty() {
        return Err(AppError::Config("no methods to bench".into()));
    }
    let optics = OpticalParams::new(config.wavelength)?;
    let frame = bench_hologram(config.width, config.height, config.seed, optics)?;
    let reconstructor = Reconstructor::default();
    let mut methods = Vec::new();
    for method in &config.methods {
        let params = ReconstructionParams::from_focus_distance(
            BENCH_DISTANCE,
            config.magnification,
            method,
            OutputKind::Amplitude,
        );
        // Plans are built once per session, so the first run is not timed.
        let warm = reconstructor.reconstruct(&frame, &params)?;
        let request = PlanRequest::new(
            frame.grid(),
            warm.params.z,
            warm.params.magnification,
            optics,
        );
        let plan = reconstructor.cache().get_or_create(method, &request)?;
        drop(warm);

        let mut times = Vec::with_capacity(config.frames);
        let start = Instant::now();
        for _ in 0..config.frames {
            let t = Instant::now();
            reconstructor.reconstruct(&frame, &params)?;
            times.push(t.elapsed().as_secs_f64());
        }
        let total = start.elapsed().as_secs_f64();
        methods.push(MethodReport {
            method: method.clone(),
            frames: config.frames,
            mean_fps: config.frames as f64 / total,
            p50_ms: 1e3 * median(times),
            peak_bytes_estimate: plan.working_set_bytes(),
        });
    }
    let fps = |name: &str| {
        methods
            .iter()
            .find(|m| m.method == name)
            .map(|m| m.mean_fps)
    };
    let speedup_bldsf_over_asm = match (fps(BLDSF), fps(ASM)) {
        (Some(b), Some(a)) => Some(b / a),
        _ => None,
    };
    Ok(BenchReport {
        methods,
        speedup_bldsf_over_asm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: &[&str]) -> BenchConfig {
        BenchConfig {
            width: 64,
            height: 64,
            frames: 2,
            methods: methods.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn report_shape() {
        let report = run_bench(&small(&[ASM, BLDSF])).unwrap();
        let lines = report.to_json_lines();
        assert_eq!(lines.len(), 3);
        let first: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
        for key in [
            "method",
            "frames",
            "mean_fps",
            "p50_ms",
            "peak_bytes_estimate",
        ] {
            assert!(first.get(key).is_some(), "{key}");
        }
        assert!(lines[2].starts_with(r#"{"speedup_bldsf_over_asm":"#));
    }

    #[test]
    fn single_method_has_no_ratio() {
        let report = run_bench(&small(&[BLDSF])).unwrap();
        assert_eq!(report.speedup_bldsf_over_asm, None);
        assert_eq!(report.to_json_lines().len(), 1);
    }

    #[test]
    fn validation() {
        let mut config = small(&[ASM]);
        config.width = 32;
        assert!(run_bench(&config).is_err());
        assert!(run_bench(&small(&["nope"])).is_err());
        assert!(run_bench(&small(&[])).is_err());
    }

    #[test]
    fn same_seed_same_frame() {
        let optics = OpticalParams::default();
        let a = bench_hologram(64, 64, 5, optics).unwrap();
        let b = bench_hologram(64, 64, 5, optics).unwrap();
        let c = bench_hologram(64, 64, 6, optics).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
