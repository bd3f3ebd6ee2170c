//! The live reconstruction loop: take the newest hologram, propagate it with
//! the current parameters, map amplitude and phase for display, publish.

mod fps;
mod params;

use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

pub use fps::{Clock, FpsMeter, ManualClock, SystemClock, DEFAULT_FPS_WINDOW};
pub use params::{
    Clamped, OutputKind, ReconstructionParams, DEFAULT_FOCUS_DISTANCE, MAX_DISTANCE,
    MAX_MAGNIFICATION, MIN_MAGNIFICATION,
};

use crate::diffraction::{PlanCache, PlanRequest, PropagatorRegistry};
use crate::error::Result;
use crate::field::{amplitude, phase, to_display, ComplexField, DisplayMode, Grid};
use crate::ingest::FrameSource;
use crate::sim::{hologram_to_field, HologramFrame};
use crate::slot::LatestSlot;

/// One display-mapped 8-bit image.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplayImage {
    pub mode: DisplayMode,
    pub grid: Grid,
    pub pixels: Vec<u8>,
}

/// A reconstructed field with the parameters actually used.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub field: ComplexField,
    pub params: ReconstructionParams,
    pub images: Vec<DisplayImage>,
}

/// Applies cached propagation plans to hologram frames.
#[derive(Debug)]
pub struct Reconstructor {
    cache: PlanCache,
}

impl Default for Reconstructor {
    fn default() -> Self {
        Self::new(Arc::new(PropagatorRegistry::builtin()))
    }
}

impl Reconstructor {
    pub fn new(registry: Arc<PropagatorRegistry>) -> Self {
        Self {
            cache: PlanCache::new(registry),
        }
    }

    pub fn with_cache(cache: PlanCache) -> Self {
        Self { cache }
    }

    pub fn cache(&self) -> &PlanCache {
        &self.cache
    }

    /// Propagates `frame` with clamped `params`. Methods without
    /// magnification support run at M = 1 and report it.
    pub fn reconstruct(
        &self,
        frame: &HologramFrame,
        params: &ReconstructionParams,
    ) -> Result<Reconstruction> {
        let mut params = params.clamped()?.params;
        if !self
            .cache
            .registry()
            .get(&params.method)?
            .supports_magnification()
        {
            params.magnification = 1.0;
        }
        let request = PlanRequest::new(frame.grid(), params.z, params.magnification, frame.optics);
        let plan = self.cache.get_or_create(&params.method, &request)?;
        let field = plan.apply(&hologram_to_field(frame))?;
        let images = params
            .output
            .modes()
            .iter()
            .map(|&mode| {
                let values = match mode {
                    DisplayMode::Amplitude => amplitude(&field),
                    DisplayMode::Phase => phase(&field),
                };
                DisplayImage {
                    mode,
                    grid: field.grid(),
                    pixels: to_display(&values, mode).to_u8(),
                }
            })
            .collect();
        Ok(Reconstruction {
            field,
            params,
            images,
        })
    }
}

/// A published reconstruction. Times are seconds on the pipeline clock.
#[derive(Debug, Clone)]
pub struct TimedFrame {
    pub images: Vec<DisplayImage>,
    pub params: ReconstructionParams,
    /// Output grid; its pitch is the input pitch over the magnification.
    pub grid: Grid,
    pub source_grid: Grid,
    pub sequence: u64,
    pub captured_at: f64,
    pub published_at: f64,
    pub fps: f64,
}

impl TimedFrame {
    pub fn image(&self, mode: DisplayMode) -> Option<&DisplayImage> {
        self.images.iter().find(|i| i.mode == mode)
    }
}

/// Reconstructor plus sequencing and frame-rate bookkeeping.
pub struct Pipeline {
    reconstructor: Reconstructor,
    clock: Box<dyn Clock>,
    meter: FpsMeter,
    next_sequence: u64,
}

impl Pipeline {
    pub fn new(reconstructor: Reconstructor, clock: Box<dyn Clock>, meter: FpsMeter) -> Self {
        Self {
            reconstructor,
            clock,
            meter,
            next_sequence: 1,
        }
    }

    pub fn reconstructor(&self) -> &Reconstructor {
        &self.reconstructor
    }

    pub fn process(
        &mut self,
        frame: &HologramFrame,
        params: &ReconstructionParams,
    ) -> Result<TimedFrame> {
        let captured_at = self.clock.now();
        let rec = self.reconstructor.reconstruct(frame, params)?;
        let published_at = self.clock.now();
        let fps = self.meter.record(published_at);
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        Ok(TimedFrame {
            grid: rec.field.grid(),
            source_grid: frame.grid(),
            images: rec.images,
            params: rec.params,
            sequence,
            captured_at,
            published_at,
            fps,
        })
    }
}

impl Default for Pipeline {
    fn default() -> Self {
        Self::new(
            Reconstructor::default(),
            Box::new(SystemClock::default()),
            FpsMeter::default(),
        )
    }
}

/// Receives published frames. Must not block the loop.
pub trait FrameSink: Send + Sync {
    fn publish(&self, frame: TimedFrame);
}

impl FrameSink for LatestSlot<TimedFrame> {
    fn publish(&self, frame: TimedFrame) {
        LatestSlot::publish(self, frame);
    }
}

impl<F: Fn(TimedFrame) + Send + Sync> FrameSink for F {
    fn publish(&self, frame: TimedFrame) {
        self(frame)
    }
}

#[derive(Debug, Default)]
struct ControlState {
    stopped: bool,
    paused: bool,
}

/// Stop and pause switches shared with a running loop.
#[derive(Debug, Default)]
pub struct LoopControl {
    state: Mutex<ControlState>,
    changed: Condvar,
    /// Minimum time between frames; `None` runs as fast as frames arrive.
    pub frame_interval: Option<Duration>,
    /// Keep the last frame after the source ends and re-render it whenever
    /// new parameters arrive, until stopped or the mailbox is closed.
    pub hold_last: bool,
}

impl LoopControl {
    pub fn new(frame_interval: Option<Duration>, hold_last: bool) -> Self {
        Self {
            frame_interval,
            hold_last,
            ..Self::default()
        }
    }

    fn lock(&self) -> MutexGuard<'_, ControlState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn update(&self, f: impl FnOnce(&mut ControlState)) {
        f(&mut self.lock());
        self.changed.notify_all();
    }

    pub fn stop(&self) {
        self.update(|s| s.stopped = true);
    }

    pub fn pause(&self) {
        self.update(|s| s.paused = true);
    }

    pub fn resume(&self) {
        self.update(|s| s.paused = false);
    }

    pub fn is_stopped(&self) -> bool {
        self.lock().stopped
    }

    pub fn is_paused(&self) -> bool {
        self.lock().paused
    }

    /// Sleeps up to `timeout`, returning early on stop or resume.
    fn wait(&self, timeout: Duration, while_paused: bool) {
        let state = self.lock();
        let _ = self.changed.wait_timeout_while(state, timeout, |s| {
            !s.stopped && (!while_paused || s.paused)
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoopEvent {
    Published { sequence: u64 },
    Error(String),
    SourceEnded,
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopExit {
    Stopped,
    SourceEnded,
}

const PAUSE_POLL: Duration = Duration::from_millis(100);
const SOURCE_ERROR_BACKOFF: Duration = Duration::from_millis(20);

/// Runs until stopped or the source ends.
///
/// After each frame arrives the mailbox is drained, so only the most recent
/// parameters take effect. Exactly one reconstruction is in flight; the
/// sink receives every result and decides what to drop. A stop request
/// lets the current frame finish.
pub fn run_loop(
    source: &mut dyn FrameSource,
    mailbox: &LatestSlot<ReconstructionParams>,
    sink: &dyn FrameSink,
    control: &LoopControl,
    pipeline: &mut Pipeline,
    mut params: ReconstructionParams,
    mut on_event: impl FnMut(LoopEvent),
) -> LoopExit {
    let mut last = None;
    loop {
        if control.is_stopped() {
            on_event(LoopEvent::Stopped);
            return LoopExit::Stopped;
        }
        if control.is_paused() {
            control.wait(PAUSE_POLL, true);
            continue;
        }
        let started = Instant::now();
        match source.next_frame() {
            Ok(Some(frame)) => {
                if let Some(latest) = mailbox.try_take() {
                    params = latest;
                }
                publish(pipeline, &frame, &params, sink, &mut on_event);
                last = Some(frame);
            }
            Ok(None) => {
                on_event(LoopEvent::SourceEnded);
                return match last.filter(|_| control.hold_last) {
                    Some(frame) => hold(&frame, mailbox, sink, control, pipeline, on_event),
                    None => LoopExit::SourceEnded,
                };
            }
            Err(e) => {
                on_event(LoopEvent::Error(e.to_string()));
                thread::sleep(SOURCE_ERROR_BACKOFF);
            }
        }
        if let Some(interval) = control.frame_interval {
            if let Some(rest) = interval.checked_sub(started.elapsed()) {
                control.wait(rest, false);
            }
        }
    }
}

fn publish(
    pipeline: &mut Pipeline,
    frame: &HologramFrame,
    params: &ReconstructionParams,
    sink: &dyn FrameSink,
    on_event: &mut impl FnMut(LoopEvent),
) {
    match pipeline.process(frame, params) {
        Ok(timed) => {
            let sequence = timed.sequence;
            sink.publish(timed);
            on_event(LoopEvent::Published { sequence });
        }
        Err(e) => on_event(LoopEvent::Error(e.to_string())),
    }
}

fn hold(
    frame: &HologramFrame,
    mailbox: &LatestSlot<ReconstructionParams>,
    sink: &dyn FrameSink,
    control: &LoopControl,
    pipeline: &mut Pipeline,
    mut on_event: impl FnMut(LoopEvent),
) -> LoopExit {
    loop {
        if control.is_stopped() || mailbox.is_closed() {
            on_event(LoopEvent::Stopped);
            return LoopExit::Stopped;
        }
        if let Some(params) = mailbox.take_timeout(PAUSE_POLL) {
            publish(pipeline, frame, &params, sink, &mut on_event);
        }
    }
}
