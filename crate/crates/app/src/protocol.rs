//! Messages exchanged with viewers over `/stream`.
//!
//! Control goes client to server as JSON text. Frames go server to client as
//! binary messages with a fixed little-endian header followed by 8-bit gray
//! pixels.

use holo_core::field::DisplayMode;
use holo_core::pipeline::{OutputKind, ReconstructionParams, TimedFrame};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlMessage {
    SetParams {
        /// Focus distance, positive for an object in front of the sensor.
        z_m: f64,
        magnification: f64,
        method: String,
        #[serde(default)]
        output: OutputKind,
    },
    GetInfo,
    Pause,
    Resume,
}

impl ControlMessage {
    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("control messages always serialize")
    }

    pub fn set_params(params: &ReconstructionParams) -> Self {
        ControlMessage::SetParams {
            z_m: params.focus_distance(),
            magnification: params.magnification,
            method: params.method.clone(),
            output: params.output,
        }
    }
}

/// What a viewer needs to lay out controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Info {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub pitch_m: Option<f64>,
    pub wavelength_m: f64,
    pub methods: Vec<String>,
    pub z_range_m: [f64; 2],
    pub magnification_range: [f64; 2],
    pub params: ControlMessage,
}

/// Text replies from the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Info(Info),
    /// The request was applied with changes, e.g. clamped values.
    Advisory {
        message: String,
        applied: ControlMessage,
    },
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

pub const FRAME_MAGIC: &[u8; 4] = b"HOLO";
pub const FRAME_HEADER_LEN: usize = 4 + 1 + 4 + 4 + 4 * 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameKind {
    Amplitude = 0,
    Phase = 1,
}

impl From<DisplayMode> for FrameKind {
    fn from(mode: DisplayMode) -> Self {
        match mode {
            DisplayMode::Amplitude => FrameKind::Amplitude,
            DisplayMode::Phase => FrameKind::Phase,
        }
    }
}

impl TryFrom<u8> for FrameKind {
    type Error = ProtocolError;

    fn try_from(v: u8) -> Result<Self, ProtocolError> {
        match v {
            0 => Ok(FrameKind::Amplitude),
            1 => Ok(FrameKind::Phase),
            other => Err(ProtocolError::UnknownKind(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMessage {
    pub kind: FrameKind,
    pub width: u32,
    pub height: u32,
    /// Output pixel pitch in meters.
    pub pitch_m: f32,
    /// Focus distance in the displayed convention.
    pub z_m: f32,
    pub magnification: f32,
    pub fps: f32,
    pub sequence: u64,
    pub payload: Vec<u8>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("malformed control message: {0}")]
    Malformed(String),
    #[error("bad frame magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("frame is {0} bytes, shorter than its header")]
    Truncated(usize),
    #[error("unknown frame kind {0}")]
    UnknownKind(u8),
    #[error("payload is {actual} bytes, expected {expected}")]
    PayloadLength { expected: usize, actual: usize },
}

impl FrameMessage {
    /// One message per image in `frame`.
    pub fn from_timed(frame: &TimedFrame) -> Vec<FrameMessage> {
        frame
            .images
            .iter()
            .map(|image| FrameMessage {
                kind: image.mode.into(),
                width: image.grid.width as u32,
                height: image.grid.height as u32,
                pitch_m: image.grid.pitch_x as f32,
                z_m: frame.params.focus_distance() as f32,
                magnification: frame.params.magnification as f32,
                fps: frame.fps as f32,
                sequence: frame.sequence,
                payload: image.pixels.clone(),
            })
            .collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + self.payload.len());
        out.extend_from_slice(FRAME_MAGIC);
        out.push(self.kind as u8);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for v in [self.pitch_m, self.z_m, self.magnification, self.fps] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.sequence.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        if bytes.len() < FRAME_HEADER_LEN {
            return Err(ProtocolError::Truncated(bytes.len()));
        }
        let (header, payload) = bytes.split_at(FRAME_HEADER_LEN);
        let magic: [u8; 4] = header[0..4].try_into().expect("4 bytes");
        if &magic != FRAME_MAGIC {
            return Err(ProtocolError::BadMagic(magic));
        }
        let kind = FrameKind::try_from(header[4])?;
        let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
        let f32_at = |i: usize| f32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
        let (width, height) = (u32_at(5), u32_at(9));
        let expected = width as usize * height as usize;
        if payload.len() != expected {
            return Err(ProtocolError::PayloadLength {
                expected,
                actual: payload.len(),
            });
        }
        Ok(FrameMessage {
            kind,
            width,
            height,
            pitch_m: f32_at(13),
            z_m: f32_at(17),
            magnification: f32_at(21),
            fps: f32_at(25),
            sequence: u64::from_le_bytes(header[29..37].try_into().expect("8 bytes")),
            payload: payload.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> FrameMessage {
        FrameMessage {
            kind: FrameKind::Phase,
            width: 3,
            height: 2,
            pitch_m: 2.5e-6,
            z_m: 0.011,
            magnification: 1.2,
            fps: 1.92,
            sequence: 42,
            payload: vec![0, 1, 2, 253, 254, 255],
        }
    }

    #[test]
    fn header_layout() {
        let bytes = frame().encode();
        assert_eq!(bytes.len(), 37 + 6);
        assert_eq!(&bytes[..4], b"HOLO");
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[5..9], &[3, 0, 0, 0]);
        assert_eq!(&bytes[29..37], &42u64.to_le_bytes());
        assert_eq!(FrameMessage::decode(&bytes).unwrap(), frame());
    }

    #[test]
    fn rejects_bad_frames() {
        let bytes = frame().encode();
        assert_eq!(
            FrameMessage::decode(&bytes[..20]),
            Err(ProtocolError::Truncated(20))
        );
        assert!(matches!(
            FrameMessage::decode(&bytes[..bytes.len() - 1]),
            Err(ProtocolError::PayloadLength {
                expected: 6,
                actual: 5
            })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            FrameMessage::decode(&bad),
            Err(ProtocolError::BadMagic(_))
        ));
        let mut bad = bytes;
        bad[4] = 7;
        assert_eq!(
            FrameMessage::decode(&bad),
            Err(ProtocolError::UnknownKind(7))
        );
    }

    #[test]
    fn control_json_shape() {
        let msg = ControlMessage::from_json(
            r#"{"type":"set_params","z_m":0.011,"magnification":1.2,"method":"bldsf"}"#,
        )
        .unwrap();
        assert_eq!(
            msg,
            ControlMessage::SetParams {
                z_m: 0.011,
                magnification: 1.2,
                method: "bldsf".into(),
                output: OutputKind::Amplitude
            }
        );
        assert_eq!(ControlMessage::GetInfo.to_json(), r#"{"type":"get_info"}"#);
        assert_eq!(
            ControlMessage::from_json(r#"{"type":"pause"}"#).unwrap(),
            ControlMessage::Pause
        );
        assert!(ControlMessage::from_json("{nope").is_err());
        assert!(ControlMessage::from_json(r#"{"type":"zoom"}"#).is_err());
        assert!(ControlMessage::from_json(r#"{"type":"set_params","z_m":0.01}"#).is_err());
    }

    #[test]
    fn params_round_trip_through_control() {
        let params = ReconstructionParams::from_focus_distance(0.011, 1.2, "asm", OutputKind::Both);
        let json = ControlMessage::set_params(&params).to_json();
        assert!(json.contains(r#""z_m":0.011"#));
        assert!(json.contains(r#""output":"both""#));
    }

    #[test]
    fn frame_header_carries_meter_reading() {
        use holo_core::field::Grid;
        use holo_core::pipeline::{FpsMeter, ManualClock, Pipeline, Reconstructor};
        use holo_core::sim::{generate_hologram, ObjectSpec};

        let grid = Grid::square(64, 2.5e-6).unwrap();
        let frame = generate_hologram(&ObjectSpec::opaque_disk(2e-5), 0.011, grid, Default::default()).unwrap();
        let clock = ManualClock::default();
        let meter = FpsMeter::new(3).unwrap();
        let mut pipeline = Pipeline::new(Reconstructor::default(), Box::new(clock.clone()), meter);
        let params = ReconstructionParams::from_focus_distance(0.011, 1.25, "bldsf", OutputKind::Both);
        let mut last = None;
        for t in [0.0, 0.5, 1.0] {
            clock.set(t);
            last = Some(pipeline.process(&frame, &params).unwrap());
        }
        let timed = last.unwrap();
        let messages = FrameMessage::from_timed(&timed);
        assert_eq!(messages.len(), 2);
        for (msg, kind) in messages.iter().zip([FrameKind::Amplitude, FrameKind::Phase]) {
            assert_eq!(msg.kind, kind);
            assert_eq!(msg.fps, 2.0);
            assert_eq!(msg.fps as f64, timed.fps);
            assert_eq!(msg.sequence, 3);
            assert_eq!(msg.z_m, 0.011);
            assert_eq!(msg.magnification, 1.25);
            assert_eq!(msg.pitch_m, 2e-6);
            assert_eq!(msg.payload.len(), 64 * 64);
        }
    }
}
