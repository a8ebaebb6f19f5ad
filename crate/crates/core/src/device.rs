//! Wire format for driving a physical 12-motor band over serial, plus
//! calibration-sweep ingestion.
//!
//! Frame layout (17 bytes):
//!
//! ```text
//! A5 | 01 | seq | d0 .. d11 | xor | 5A
//! ```
//!
//! `xor` folds bytes 1..=14 (version, seq and the twelve duties). Duties are
//! 8-bit PWM values of the 5 V supply, motors in A..L order. There is no
//! acknowledgement; the host fires frames at most once per 10 ms tick.

use std::io::{self, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Deserialize;
use thiserror::Error;

use crate::actuator::{duty_to_voltage, voltage_to_duty, ActuatorError, CalibrationRow, CalibrationTable, MOTOR_COUNT};
use crate::config::TICK_S;
use crate::cue::{ActuatorFrame, ActuatorTimeline};

pub const FRAME_LEN: usize = 17;
pub const SOF: u8 = 0xA5;
pub const EOF: u8 = 0x5A;
pub const PROTOCOL_VERSION: u8 = 0x01;
pub const DEFAULT_BAUD: u32 = 115_200;
/// One frame per tick is the fastest the timeline can change.
pub const MIN_STREAM_RATE_HZ: f64 = 1.0 / TICK_S;
pub const CALIBRATION_CSV_HEADER: &str = "voltage_v,amplitude_ms2,frequency_hz";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("expected {FRAME_LEN} bytes, got {0}")]
    BadLength(usize),
    #[error("bad start byte {0:#04x}")]
    BadSof(u8),
    #[error("bad end byte {0:#04x}")]
    BadEof(u8),
    #[error("unsupported protocol version {0:#04x}")]
    BadVersion(u8),
    #[error("checksum mismatch: frame says {got:#04x}, computed {expected:#04x}")]
    BadChecksum { expected: u8, got: u8 },
}

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("calibration csv: {0}")]
    Parse(String),
    #[error(transparent)]
    Calibration(#[from] ActuatorError),
    #[error("stream rate {0} Hz is below one frame per tick")]
    RateTooLow(f64),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("serial port: {0}")]
    Serial(#[from] serialport::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DriveFrame {
    pub seq: u8,
    pub duties: [u8; MOTOR_COUNT],
}

fn checksum(body: &[u8]) -> u8 {
    body.iter().fold(0, |acc, b| acc ^ b)
}

pub fn encode_frame(frame: &DriveFrame) -> [u8; FRAME_LEN] {
    let mut out = [0u8; FRAME_LEN];
    out[0] = SOF;
    out[1] = PROTOCOL_VERSION;
    out[2] = frame.seq;
    out[3..15].copy_from_slice(&frame.duties);
    out[15] = checksum(&out[1..15]);
    out[16] = EOF;
    out
}

/// Validate in order: length, start byte, end byte, version, checksum.
pub fn decode_frame(bytes: &[u8]) -> Result<DriveFrame, FrameError> {
    if bytes.len() != FRAME_LEN {
        return Err(FrameError::BadLength(bytes.len()));
    }
    if bytes[0] != SOF {
        return Err(FrameError::BadSof(bytes[0]));
    }
    if bytes[16] != EOF {
        return Err(FrameError::BadEof(bytes[16]));
    }
    if bytes[1] != PROTOCOL_VERSION {
        return Err(FrameError::BadVersion(bytes[1]));
    }
    let expected = checksum(&bytes[1..15]);
    if bytes[15] != expected {
        return Err(FrameError::BadChecksum {
            expected,
            got: bytes[15],
        });
    }
    let mut duties = [0u8; MOTOR_COUNT];
    duties.copy_from_slice(&bytes[3..15]);
    Ok(DriveFrame {
        seq: bytes[2],
        duties,
    })
}

/// Split a byte stream into frames. A trailing partial frame is an error.
pub fn decode_stream(bytes: &[u8]) -> Result<Vec<DriveFrame>, FrameError> {
    let chunks = bytes.chunks(FRAME_LEN);
    chunks.map(decode_frame).collect()
}

#[derive(Debug, Deserialize)]
struct CalibrationCsvRow {
    voltage_v: f64,
    amplitude_ms2: f64,
    frequency_hz: f64,
}

/// Parse an accelerometer voltage sweep. Rows must already be in strictly
/// increasing voltage order.
pub fn ingest_calibration(csv_text: &str) -> Result<CalibrationTable, DeviceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let header = rdr.headers().map_err(|e| DeviceError::Parse(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CALIBRATION_CSV_HEADER {
        return Err(DeviceError::Parse(format!("expected header `{CALIBRATION_CSV_HEADER}`")));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<CalibrationCsvRow>() {
        let r = rec.map_err(|e| DeviceError::Parse(e.to_string()))?;
        if ![r.voltage_v, r.amplitude_ms2, r.frequency_hz].iter().all(|v| v.is_finite()) {
            return Err(DeviceError::Parse("non-finite value".into()));
        }
        rows.push(CalibrationRow {
            voltage: r.voltage_v,
            amplitude: r.amplitude_ms2,
            frequency: r.frequency_hz,
        });
    }
    Ok(CalibrationTable::new(rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedFrame {
    pub tick: u32,
    pub frame: DriveFrame,
}

pub fn duties_of(drives: &[f64; MOTOR_COUNT]) -> [u8; MOTOR_COUNT] {
    // drive voltages are never negative, so the conversion cannot fail
    drives.map(|v| voltage_to_duty(v.max(0.0)).unwrap_or(0))
}

/// One frame per timeline change, seq counting from `first_seq`.
/// `rate_hz` is the host's frame budget and must allow one frame per tick.
pub fn stream_timeline(
    tl: &ActuatorTimeline,
    rate_hz: f64,
    first_seq: u8,
) -> Result<Vec<TimedFrame>, DeviceError> {
    if !(rate_hz >= MIN_STREAM_RATE_HZ - 1e-9) {
        return Err(DeviceError::RateTooLow(rate_hz));
    }
    Ok(tl
        .frames()
        .iter()
        .enumerate()
        .map(|(i, f)| TimedFrame {
            tick: f.tick,
            frame: DriveFrame {
                seq: first_seq.wrapping_add(i as u8),
                duties: duties_of(&f.drives),
            },
        })
        .collect())
}

/// Rebuild a timeline from streamed frames, duties mapped back to volts.
pub fn frames_to_timeline(frames: &[TimedFrame], duration_ticks: u32) -> ActuatorTimeline {
    ActuatorTimeline::new(
        frames
            .iter()
            .map(|f| ActuatorFrame {
                tick: f.tick,
                drives: f.frame.duties.map(|d| if d == 0 { 0.0 } else { duty_to_voltage(d) }),
            })
            .collect(),
        duration_ticks,
    )
}

/// Anything that accepts encoded frames: a serial port, a file, a buffer.
pub trait FrameSink {
    fn send(&mut self, frame: &DriveFrame) -> io::Result<()>;
}

/// Writes raw frame bytes to any writer; used as a mock port.
pub struct WriterSink<W: Write>(pub W);

impl<W: Write> FrameSink for WriterSink<W> {
    fn send(&mut self, frame: &DriveFrame) -> io::Result<()> {
        self.0.write_all(&encode_frame(frame))
    }
}

impl<W: Write> WriterSink<W> {
    pub fn into_inner(self) -> W {
        self.0
    }
}

pub struct SerialSink {
    port: Box<dyn serialport::SerialPort>,
}

impl SerialSink {
    /// Open `path` at `baud`, 8N1, no flow control.
    pub fn open(path: &str, baud: u32) -> Result<Self, DeviceError> {
        let port = serialport::new(path, baud)
            .data_bits(serialport::DataBits::Eight)
            .parity(serialport::Parity::None)
            .stop_bits(serialport::StopBits::One)
            .flow_control(serialport::FlowControl::None)
            .timeout(Duration::from_millis(100))
            .open()?;
        Ok(Self { port })
    }
}

impl FrameSink for SerialSink {
    fn send(&mut self, frame: &DriveFrame) -> io::Result<()> {
        self.port.write_all(&encode_frame(frame))?;
        self.port.flush()
    }
}

/// Send frames to `sink`. With `realtime`, each frame waits for its tick
/// relative to the call; otherwise frames go out back to back.
pub fn play(frames: &[TimedFrame], sink: &mut dyn FrameSink, realtime: bool) -> io::Result<usize> {
    let start = Instant::now();
    for f in frames {
        if realtime {
            let due = Duration::from_secs_f64(f.tick as f64 * TICK_S);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                std::thread::sleep(wait);
            }
        }
        sink.send(&f.frame)?;
    }
    Ok(frames.len())
}

/// Replay a timeline into a file of raw frames. Returns the frame count.
pub fn replay_to_file(tl: &ActuatorTimeline, path: &Path) -> Result<usize, DeviceError> {
    let frames = stream_timeline(tl, MIN_STREAM_RATE_HZ, 0)?;
    let mut sink = WriterSink(Vec::with_capacity(frames.len() * FRAME_LEN));
    play(&frames, &mut sink, false)?;
    crate::output::write_atomic(path, &sink.into_inner())?;
    Ok(frames.len())
}
