//! HTTP and WebSocket service sharing one reconstruction pipeline.
//!
//! A single worker thread runs the loop. Each finished frame is encoded once
//! and placed in a watch channel; every client task forwards the newest
//! encoded frame when it is ready, so a slow client only skips frames and
//! never holds up the worker or the other clients.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::{Json, Router};
use holo_core::diffraction::PropagatorRegistry;
use holo_core::field::{Grid, OpticalParams};
use holo_core::ingest::{open_source, FrameSource, NewestFrame, SourceKind};
use holo_core::pipeline::{
    run_loop, LoopControl, LoopEvent, LoopExit, Pipeline, ReconstructionParams, TimedFrame,
    MAX_DISTANCE, MAX_MAGNIFICATION, MIN_MAGNIFICATION,
};
use holo_core::slot::LatestSlot;
use tokio::net::TcpListener;
use tokio::sync::watch;
use tower_http::services::ServeDir;

use crate::config::AppConfig;
use crate::error::Result;
use crate::protocol::{ControlMessage, FrameMessage, Info, ServerMessage};

type EncodedFrames = Option<Arc<Vec<Bytes>>>;

struct Shared {
    mailbox: Arc<LatestSlot<ReconstructionParams>>,
    control: Arc<LoopControl>,
    frames: watch::Receiver<EncodedFrames>,
    params: Mutex<ReconstructionParams>,
    source_grid: Arc<Mutex<Option<Grid>>>,
    registry: PropagatorRegistry,
    optics: OpticalParams,
}

/// The running pipeline worker plus the state handlers need.
pub struct Service {
    shared: Arc<Shared>,
    worker: Option<JoinHandle<LoopExit>>,
    viewer_dir: Option<std::path::PathBuf>,
}

/// What a control message produced.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlOutcome {
    Reply(Option<ServerMessage>),
    /// The client broke the protocol; reply, then disconnect it.
    Violation(ServerMessage),
}

impl Service {
    pub fn start(config: &AppConfig) -> Result<Self> {
        config.validate()?;
        let optics = config.optics()?;
        let source = open_source(&config.source, optics)?;
        let mut source: Box<dyn FrameSource> = match config.source.kind {
            // A live stream must be drained even when reconstruction lags.
            SourceKind::RawStream { .. } => Box::new(NewestFrame::spawn(source)),
            _ => source,
        };
        let initial = config.params.to_params().clamped()?.params;
        let source_grid = Arc::new(Mutex::new(source.grid()));
        let (tx, rx) = watch::channel(None);
        let shared = Arc::new(Shared {
            mailbox: Arc::new(LatestSlot::new()),
            control: Arc::new(LoopControl::new(config.frame_interval(), true)),
            frames: rx,
            params: Mutex::new(initial.clone()),
            source_grid: Arc::clone(&source_grid),
            registry: PropagatorRegistry::builtin(),
            optics,
        });
        let worker = {
            let mailbox = Arc::clone(&shared.mailbox);
            let control = Arc::clone(&shared.control);
            thread::Builder::new()
                .name("reconstruction".into())
                .spawn(move || {
                    let sink = move |frame: TimedFrame| {
                        *source_grid.lock().unwrap_or_else(|e| e.into_inner()) =
                            Some(frame.source_grid);
                        let encoded = FrameMessage::from_timed(&frame)
                            .iter()
                            .map(|m| Bytes::from(m.encode()))
                            .collect();
                        tx.send_replace(Some(Arc::new(encoded)));
                    };
                    let mut pipeline = Pipeline::default();
                    run_loop(
                        &mut source,
                        &mailbox,
                        &sink,
                        &control,
                        &mut pipeline,
                        initial,
                        |event| match event {
                            LoopEvent::Error(e) => log::warn!("frame failed: {e}"),
                            LoopEvent::SourceEnded => {
                                log::info!("source ended; holding the last frame")
                            }
                            _ => {}
                        },
                    )
                })?
        };
        Ok(Self {
            shared,
            worker: Some(worker),
            viewer_dir: config.viewer_dir.clone(),
        })
    }

    pub fn info(&self) -> Info {
        self.shared.info()
    }

    pub fn control(&self, text: &str) -> ControlOutcome {
        self.shared.control(text)
    }

    pub fn router(&self) -> Router {
        let router = Router::new()
            .route("/info", get(info))
            .route("/stream", get(stream))
            .with_state(Arc::clone(&self.shared));
        match &self.viewer_dir {
            Some(dir) => router.fallback_service(ServeDir::new(dir)),
            None => router.route("/", get(placeholder)),
        }
    }

    /// Stops the worker after its current frame.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.control.stop();
        self.shared.mailbox.close();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.stop();
    }
}

impl Shared {
    fn info(&self) -> Info {
        let grid = *self.source_grid.lock().unwrap_or_else(|e| e.into_inner());
        let params = self
            .params
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clone();
        Info {
            width: grid.map(|g| g.width),
            height: grid.map(|g| g.height),
            pitch_m: grid.map(|g| g.pitch_x),
            wavelength_m: self.optics.wavelength,
            methods: self
                .registry
                .names()
                .into_iter()
                .map(String::from)
                .collect(),
            z_range_m: [-MAX_DISTANCE, MAX_DISTANCE],
            magnification_range: [MIN_MAGNIFICATION, MAX_MAGNIFICATION],
            params: ControlMessage::set_params(&params),
        }
    }

    fn control(&self, text: &str) -> ControlOutcome {
        let message = match ControlMessage::from_json(text) {
            Ok(m) => m,
            Err(e) => {
                return ControlOutcome::Violation(ServerMessage::Error {
                    message: e.to_string(),
                })
            }
        };
        let reply = match message {
            ControlMessage::GetInfo => Some(ServerMessage::Info(self.info())),
            ControlMessage::Pause => {
                self.control.pause();
                None
            }
            ControlMessage::Resume => {
                self.control.resume();
                None
            }
            ControlMessage::SetParams {
                z_m,
                magnification,
                method,
                output,
            } => self.set_params(ReconstructionParams::from_focus_distance(
                z_m,
                magnification,
                &method,
                output,
            )),
        };
        ControlOutcome::Reply(reply)
    }

    /// Clamps like the CLI does; later writers win.
    fn set_params(&self, requested: ReconstructionParams) -> Option<ServerMessage> {
        let propagator = match self.registry.get(&requested.method) {
            Ok(p) => p,
            Err(e) => {
                return Some(ServerMessage::Error {
                    message: e.to_string(),
                })
            }
        };
        let clamped = match requested.clamped() {
            Ok(c) => c,
            Err(e) => {
                return Some(ServerMessage::Error {
                    message: e.to_string(),
                })
            }
        };
        let (mut params, mut notes) = (clamped.params, clamped.adjustments);
        if !propagator.supports_magnification() && params.magnification != 1.0 {
            notes.push(format!("{} renders at magnification 1", params.method));
            params.magnification = 1.0;
        }
        *self.params.lock().unwrap_or_else(|e| e.into_inner()) = params.clone();
        self.mailbox.publish(params.clone());
        (!notes.is_empty()).then(|| ServerMessage::Advisory {
            message: notes.join("; "),
            applied: ControlMessage::set_params(&params),
        })
    }
}

async fn info(State(shared): State<Arc<Shared>>) -> Json<Info> {
    Json(shared.info())
}

async fn placeholder() -> Html<&'static str> {
    Html("<!doctype html><title>holoscope</title><p>No viewer installed. Frames are served on <code>/stream</code>.</p>")
}

async fn stream(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, shared))
}

async fn send_frames(socket: &mut WebSocket, frames: &EncodedFrames) -> bool {
    for bytes in frames.iter().flat_map(|f| f.iter()) {
        if socket.send(Message::Binary(bytes.clone())).await.is_err() {
            return false;
        }
    }
    true
}

async fn client(mut socket: WebSocket, shared: Arc<Shared>) {
    let mut frames = shared.frames.clone();
    let current = frames.borrow_and_update().clone();
    if !send_frames(&mut socket, &current).await {
        return;
    }
    loop {
        tokio::select! {
            changed = frames.changed() => {
                if changed.is_err() {
                    break;
                }
                let latest = frames.borrow_and_update().clone();
                if !send_frames(&mut socket, &latest).await {
                    break;
                }
            }
            incoming = socket.recv() => {
                let outcome = match incoming {
                    Some(Ok(Message::Text(text))) => shared.control(text.as_str()),
                    Some(Ok(Message::Binary(_))) => ControlOutcome::Violation(ServerMessage::Error {
                        message: "control messages must be text".into(),
                    }),
                    Some(Ok(Message::Ping(_) | Message::Pong(_))) => continue,
                    Some(Ok(Message::Close(_)) | Err(_)) | None => break,
                };
                match outcome {
                    ControlOutcome::Reply(None) => {}
                    ControlOutcome::Reply(Some(reply)) => {
                        if socket.send(Message::Text(reply.to_json().into())).await.is_err() {
                            break;
                        }
                    }
                    ControlOutcome::Violation(reply) => {
                        let _ = socket.send(Message::Text(reply.to_json().into())).await;
                        let _ = socket.send(Message::Close(None)).await;
                        break;
                    }
                }
            }
        }
    }
}

/// Serves `service` on `listener` until `shutdown` resolves.
pub async fn serve_on(
    listener: TcpListener,
    service: &Service,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<()> {
    axum::serve(listener, service.router())
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

/// Binds the configured port; fails if it is taken.
pub async fn bind(config: &AppConfig) -> Result<TcpListener> {
    Ok(TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], config.port))).await?)
}
