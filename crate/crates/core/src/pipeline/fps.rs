use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::error::{Error, Result};

/// Monotonic time in seconds.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
}

#[derive(Debug, Clone)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// A clock that only moves when told to. Clones share the same time.
#[derive(Debug, Clone, Default)]
pub struct ManualClock {
    now: Arc<Mutex<f64>>,
}

impl ManualClock {
    pub fn set(&self, t: f64) {
        *self.now.lock().unwrap_or_else(|e| e.into_inner()) = t;
    }

    pub fn advance(&self, dt: f64) {
        *self.now.lock().unwrap_or_else(|e| e.into_inner()) += dt;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> f64 {
        *self.now.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Frame rate over the most recent `window` publish times:
/// `(window - 1) / (t_last - t_first)`, or 0 with fewer than two frames.
#[derive(Debug, Clone)]
pub struct FpsMeter {
    window: usize,
    stamps: VecDeque<f64>,
}

pub const DEFAULT_FPS_WINDOW: usize = 10;

impl Default for FpsMeter {
    fn default() -> Self {
        Self::new(DEFAULT_FPS_WINDOW).expect("default window is valid")
    }
}

impl FpsMeter {
    pub fn new(window: usize) -> Result<Self> {
        if window < 2 {
            return Err(Error::InvalidParameter(format!(
                "fps window must be at least 2, got {window}"
            )));
        }
        Ok(Self {
            window,
            stamps: VecDeque::with_capacity(window),
        })
    }

    /// Records a publish time and returns the updated rate.
    pub fn record(&mut self, t: f64) -> f64 {
        if self.stamps.len() == self.window {
            self.stamps.pop_front();
        }
        self.stamps.push_back(t);
        self.rate()
    }

    pub fn rate(&self) -> f64 {
        match (self.stamps.front(), self.stamps.back()) {
            (Some(first), Some(last)) if self.stamps.len() >= 2 && last > first => {
                (self.stamps.len() - 1) as f64 / (last - first)
            }
            _ => 0.0,
        }
    }

    pub fn reset(&mut self) {
        self.stamps.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_stamps_half_second_apart() {
        let mut meter = FpsMeter::new(3).unwrap();
        meter.record(0.0);
        meter.record(0.5);
        assert_eq!(meter.record(1.0), 2.0);
    }

    #[test]
    fn single_frame_reads_zero() {
        let mut meter = FpsMeter::new(5).unwrap();
        assert_eq!(meter.record(3.0), 0.0);
        assert!(FpsMeter::new(1).is_err());
    }

    #[test]
    fn steady_cadence() {
        let clock = ManualClock::default();
        let mut meter = FpsMeter::new(10).unwrap();
        let mut fps = 0.0;
        for _ in 0..25 {
            fps = meter.record(clock.now());
            clock.advance(1.0 / 1.92);
        }
        assert!((fps - 1.92).abs() < 0.01);
    }

    #[test]
    fn window_forgets_old_frames() {
        let mut meter = FpsMeter::new(3).unwrap();
        for t in [0.0, 10.0, 10.5] {
            meter.record(t);
        }
        assert_eq!(meter.record(11.0), 2.0);
    }
}
