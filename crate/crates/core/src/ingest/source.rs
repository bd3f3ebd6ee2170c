use std::fs::{self, File};
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use serde::{Deserialize, Serialize};

use super::{downsample, read_grayscale};
use crate::dump::{self, Record};
use crate::error::{Error, Result};
use crate::field::{Grid, OpticalParams, RealImage};
use crate::sim::{add_sensor_noise, generate_hologram, HologramFrame, ObjectSpec};
use crate::slot::LatestSlot;

/// A stream of hologram frames. `Ok(None)` marks the end of the stream.
pub trait FrameSource: Send {
    fn next_frame(&mut self) -> Result<Option<HologramFrame>>;

    /// Grid of the frames this source produces, when known without reading.
    fn grid(&self) -> Option<Grid> {
        None
    }
}

impl FrameSource for Box<dyn FrameSource> {
    fn next_frame(&mut self) -> Result<Option<HologramFrame>> {
        (**self).next_frame()
    }

    fn grid(&self) -> Option<Grid> {
        (**self).grid()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceKind {
    SingleFile {
        path: PathBuf,
    },
    DirectorySequence {
        path: PathBuf,
    },
    Synthetic {
        object: ObjectSpec,
        /// Object-to-sensor distance in meters.
        distance: f64,
        width: usize,
        height: usize,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Consecutive `RIMG` records; `-` reads standard input.
    RawStream {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    #[serde(flatten)]
    pub kind: SourceKind,
    /// Native sensor pitch in meters. Dumps carry their own pitch.
    pub pitch: f64,
    /// Downsample every frame to `[width, height]`.
    #[serde(default)]
    pub downsample: Option<[usize; 2]>,
    #[serde(default, rename = "loop")]
    pub looping: bool,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pitch.is_finite() && self.pitch > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "source pitch must be positive, got {}",
                self.pitch
            )));
        }
        if let Some([w, h]) = self.downsample {
            if w == 0 || h == 0 {
                return Err(Error::InvalidParameter(
                    "downsample target must be non-empty".into(),
                ));
            }
            if let SourceKind::Synthetic { width, height, .. } = self.kind {
                if w > width || h > height {
                    return Err(Error::InvalidParameter(format!(
                        "downsample target {w}x{h} exceeds {width}x{height}"
                    )));
                }
            }
        }
        if let SourceKind::Synthetic {
            distance, noise, ..
        } = self.kind
        {
            if !(distance.is_finite() && distance > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "synthetic distance must be positive, got {distance}"
                )));
            }
            if !(noise.is_finite() && noise >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "noise must be non-negative, got {noise}"
                )));
            }
        }
        Ok(())
    }
}

fn resample(image: RealImage, target: Option<[usize; 2]>) -> Result<RealImage> {
    match target {
        Some([w, h]) => downsample(&image, w, h),
        None => Ok(image),
    }
}

/// Builds the source described by `config`.
pub fn open_source(config: &SourceConfig, optics: OpticalParams) -> Result<Box<dyn FrameSource>> {
    config.validate()?;
    let target = config.downsample;
    Ok(match &config.kind {
        SourceKind::SingleFile { path } => Box::new(FileSource::new(
            path,
            config.pitch,
            optics,
            config.looping,
            target,
        )),
        SourceKind::DirectorySequence { path } => Box::new(DirectorySource::new(
            path,
            config.pitch,
            optics,
            config.looping,
            target,
        )?),
        SourceKind::Synthetic {
            object,
            distance,
            width,
            height,
            noise,
            seed,
        } => {
            let grid = Grid::new(*width, *height, config.pitch, config.pitch)?;
            let mut source =
                SyntheticSource::new(object.clone(), *distance, grid, optics, config.looping)?;
            source.noise = *noise;
            source.seed = *seed;
            source.target = target;
            Box::new(source)
        }
        SourceKind::RawStream { path } => {
            let reader: Box<dyn Read + Send> = if path.as_os_str() == "-" {
                Box::new(io::stdin())
            } else {
                Box::new(File::open(path)?)
            };
            Box::new(RawStreamSource::new(reader, optics, target))
        }
    })
}

/// One image file, read once or repeated.
#[derive(Debug)]
pub struct FileSource {
    path: PathBuf,
    pitch: f64,
    optics: OpticalParams,
    looping: bool,
    target: Option<[usize; 2]>,
    cached: Option<HologramFrame>,
    done: bool,
}

impl FileSource {
    pub fn new(
        path: impl Into<PathBuf>,
        pitch: f64,
        optics: OpticalParams,
        looping: bool,
        target: Option<[usize; 2]>,
    ) -> Self {
        Self {
            path: path.into(),
            pitch,
            optics,
            looping,
            target,
            cached: None,
            done: false,
        }
    }
}

impl FrameSource for FileSource {
    fn next_frame(&mut self) -> Result<Option<HologramFrame>> {
        if self.done {
            return Ok(None);
        }
        if let Some(frame) = &self.cached {
            return Ok(Some(frame.clone()));
        }
        let image = resample(read_grayscale(&self.path, self.pitch)?, self.target)?;
        let frame = HologramFrame::new(image, None, self.optics)?;
        if self.looping {
            self.cached = Some(frame.clone());
        } else {
            self.done = true;
        }
        Ok(Some(frame))
    }
}

const FRAME_EXTENSIONS: [&str; 5] = ["png", "pgm", "pnm", "rimg", "cfld"];

/// Frame files of a directory in file-name order.
#[derive(Debug)]
pub struct DirectorySource {
    files: Vec<PathBuf>,
    next: usize,
    pitch: f64,
    optics: OpticalParams,
    looping: bool,
    target: Option<[usize; 2]>,
}

impl DirectorySource {
    pub fn new(
        dir: impl AsRef<Path>,
        pitch: f64,
        optics: OpticalParams,
        looping: bool,
        target: Option<[usize; 2]>,
    ) -> Result<Self> {
        let mut files = Vec::new();
        for entry in fs::read_dir(dir.as_ref())? {
            let path = entry?.path();
            let known = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
            if known && path.is_file() {
                files.push(path);
            }
        }
        files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        Ok(Self {
            files,
            next: 0,
            pitch,
            optics,
            looping,
            target,
        })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}

impl FrameSource for DirectorySource {
    fn next_frame(&mut self) -> Result<Option<HologramFrame>> {
        if self.next == self.files.len() {
            if !self.looping || self.files.is_empty() {
                return Ok(None);
            }
            self.next = 0;
        }
        let path = &self.files[self.next];
        self.next += 1;
        let image = resample(read_grayscale(path, self.pitch)?, self.target)?;
        Ok(Some(HologramFrame::new(image, None, self.optics)?))
    }
}

/// Holograms of a fixed synthetic scene, carrying the true object distance.
#[derive(Debug)]
pub struct SyntheticSource {
    object: ObjectSpec,
    distance: f64,
    grid: Grid,
    optics: OpticalParams,
    looping: bool,
    /// Standard deviation of additive sensor noise; a fresh seed per frame.
    pub noise: f64,
    pub seed: u64,
    pub target: Option<[usize; 2]>,
    clean: Option<HologramFrame>,
    emitted: u64,
}

impl SyntheticSource {
    pub fn new(
        object: ObjectSpec,
        distance: f64,
        grid: Grid,
        optics: OpticalParams,
        looping: bool,
    ) -> Result<Self> {
        object.validate()?;
        grid.validate()?;
        Ok(Self {
            object,
            distance,
            grid,
            optics,
            looping,
            noise: 0.0,
            seed: 0,
            target: None,
            clean: None,
            emitted: 0,
        })
    }
}

impl FrameSource for SyntheticSource {
    fn next_frame(&mut self) -> Result<Option<HologramFrame>> {
        if self.emitted > 0 && !self.looping {
            return Ok(None);
        }
        if self.clean.is_none() {
            let frame = generate_hologram(&self.object, self.distance, self.grid, self.optics)?;
            let image = resample(frame.image, self.target)?;
            self.clean = Some(HologramFrame::new(
                image,
                frame.object_distance,
                frame.optics,
            )?);
        }
        let clean = self.clean.as_ref().expect("generated above");
        let frame = if self.noise > 0.0 {
            add_sensor_noise(clean, self.noise, self.seed.wrapping_add(self.emitted))?
        } else {
            clean.clone()
        };
        self.emitted += 1;
        Ok(Some(frame))
    }

    fn grid(&self) -> Option<Grid> {
        match self.target {
            Some([w, h]) => Grid::new(
                w,
                h,
                self.grid.pitch_x * self.grid.width as f64 / w as f64,
                self.grid.pitch_y * self.grid.height as f64 / h as f64,
            )
            .ok(),
            None => Some(self.grid),
        }
    }
}

/// Consecutive dump records from a byte stream, e.g. a capture process pipe.
pub struct RawStreamSource<R> {
    reader: BufReader<R>,
    optics: OpticalParams,
    target: Option<[usize; 2]>,
    finished: bool,
}

impl<R: Read> RawStreamSource<R> {
    pub fn new(reader: R, optics: OpticalParams, target: Option<[usize; 2]>) -> Self {
        Self {
            reader: BufReader::new(reader),
            optics,
            target,
            finished: false,
        }
    }
}

impl<R: Read + Send> FrameSource for RawStreamSource<R> {
    fn next_frame(&mut self) -> Result<Option<HologramFrame>> {
        if self.finished {
            return Ok(None);
        }
        let record = match dump::read_record(&mut self.reader) {
            Ok(Some(record)) => record,
            Ok(None) => {
                self.finished = true;
                return Ok(None);
            }
            Err(e) => {
                // Framing is lost after a bad record.
                self.finished = true;
                return Err(e);
            }
        };
        let image = match record {
            Record::Image(image) => image,
            Record::Field(field) => RealImage::new(
                field.grid(),
                field.samples().iter().map(|c| c.norm_sqr()).collect(),
            )?,
        };
        Ok(Some(HologramFrame::new(
            resample(image, self.target)?,
            None,
            self.optics,
        )?))
    }
}

/// Drains a live source on its own thread and hands out only the newest
/// frame, dropping any the consumer was too slow to take.
pub struct NewestFrame {
    slot: Arc<LatestSlot<Result<HologramFrame>>>,
    stop: Arc<AtomicBool>,
    worker: Option<JoinHandle<()>>,
    grid: Option<Grid>,
}

impl NewestFrame {
    pub fn spawn(mut inner: Box<dyn FrameSource>) -> Self {
        let slot = Arc::new(LatestSlot::new());
        let stop = Arc::new(AtomicBool::new(false));
        let grid = inner.grid();
        let worker = {
            let slot = Arc::clone(&slot);
            let stop = Arc::clone(&stop);
            thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match inner.next_frame() {
                        Ok(Some(frame)) => {
                            slot.publish(Ok(frame));
                        }
                        Ok(None) => break,
                        Err(e) => {
                            slot.publish(Err(e));
                        }
                    }
                }
                slot.close();
            })
        };
        Self {
            slot,
            stop,
            worker: Some(worker),
            grid,
        }
    }

    /// Frames overwritten before they were taken.
    pub fn dropped(&self) -> u64 {
        self.slot.dropped()
    }
}

impl FrameSource for NewestFrame {
    fn next_frame(&mut self) -> Result<Option<HologramFrame>> {
        self.slot.take().transpose()
    }

    fn grid(&self) -> Option<Grid> {
        self.grid
    }
}

impl Drop for NewestFrame {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        // A worker blocked on a pipe read cannot be interrupted; detach it.
        if let Some(worker) = self.worker.take() {
            if worker.is_finished() {
                let _ = worker.join();
            }
        }
    }
}
