//! Row/column 2-D FFT over row-major buffers.
//!
//! Columns are transformed in a transposed copy so every 1-D transform runs
//! over contiguous memory. Transforms here are unnormalized; callers fold the
//! unitary `1/sqrt(width * height)` factor into their multipliers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Transform direction. `Forward` uses the `exp(-2 pi i mk / N)` kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    /// Forward for positive distances, inverse for negative ones.
    pub fn from_sign(z: f64) -> Self {
        if z.is_sign_negative() {
            Direction::Inverse
        } else {
            Direction::Forward
        }
    }
}

pub(crate) struct Fft2 {
    width: usize,
    height: usize,
    rows: [Arc<dyn Fft<f64>>; 2],
    cols: [Arc<dyn Fft<f64>>; 2],
    scratch_len: usize,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

fn slot(direction: Direction) -> usize {
    match direction {
        Direction::Forward => 0,
        Direction::Inverse => 1,
    }
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        let rows = [
            planner.plan_fft_forward(width),
            planner.plan_fft_inverse(width),
        ];
        let cols = [
            planner.plan_fft_forward(height),
            planner.plan_fft_inverse(height),
        ];
        let scratch_len = rows
            .iter()
            .chain(cols.iter())
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            width,
            height,
            rows,
            cols,
            scratch_len,
        }
    }

    pub fn scratch_len(&self) -> usize {
        self.scratch_len
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.scratch_len]
    }

    /// Transforms every row of a `height x width` buffer.
    pub fn rows(&self, data: &mut [Complex64], direction: Direction, scratch: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.width * self.height);
        self.rows[slot(direction)].process_with_scratch(data, scratch);
    }

    /// Transforms every column, given the buffer in transposed
    /// (`width x height`) layout.
    pub fn cols_transposed(
        &self,
        data_t: &mut [Complex64],
        direction: Direction,
        scratch: &mut [Complex64],
    ) {
        debug_assert_eq!(data_t.len(), self.width * self.height);
        self.cols[slot(direction)].process_with_scratch(data_t, scratch);
    }

    /// Full 2-D transform of `data` in place, using `transposed` as workspace.
    pub fn process(
        &self,
        data: &mut [Complex64],
        transposed: &mut [Complex64],
        direction: Direction,
        scratch: &mut [Complex64],
    ) {
        self.rows(data, direction, scratch);
        transpose(data, transposed, self.width, self.height);
        self.cols_transposed(transposed, direction, scratch);
        transpose(transposed, data, self.height, self.width);
    }
}

const BLOCK: usize = 32;

/// Writes the transpose of the `height x width` row-major `src` into `dst`.
pub(crate) fn transpose(src: &[Complex64], dst: &mut [Complex64], width: usize, height: usize) {
    debug_assert_eq!(src.len(), width * height);
    debug_assert_eq!(dst.len(), width * height);
    for by in (0..height).step_by(BLOCK) {
        let y_end = (by + BLOCK).min(height);
        for bx in (0..width).step_by(BLOCK) {
            let x_end = (bx + BLOCK).min(width);
            for y in by..y_end {
                let row = &src[y * width..];
                for x in bx..x_end {
                    dst[x * height + y] = row[x];
                }
            }
        }
    }
}

/// `(-1)^k`, the modulation that moves the DFT origin to the grid center.
pub(crate) fn alternating(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}
