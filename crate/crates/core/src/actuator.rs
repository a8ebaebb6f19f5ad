//! The 12-motor wrist ring, voltage calibration and phantom-sensation
//! interpolation.
//!
//! Motors sit every 30° around the wrist, `A` on the dorsal side at 0° and
//! `L` at 330°. A target ring angle close to a motor drives that motor alone
//! at `v_max`. Any other angle drives the two flanking motors with linearly
//! interpolated voltages so the pair is felt as one vibration in between.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::wrap_degrees;

pub const MOTOR_COUNT: usize = 12;
pub const MOTOR_SPACING_DEG: f64 = 30.0;
/// Full-scale drive voltage of the PWM output.
pub const SUPPLY_VOLTAGE: f64 = 5.0;
/// ERM drive frequency, carried as display metadata only.
pub const DRIVE_FREQUENCY_HZ: f64 = 150.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActuatorError {
    #[error("invalid interpolation config: {0}")]
    InvalidConfig(String),
    #[error("voltage {0} V is outside the calibrated span [{1}, {2}] V")]
    OutOfCalibrationRange(f64, f64, f64),
    #[error("negative drive voltage {0} V")]
    NegativeVoltage(f64),
    #[error("calibration voltages must be strictly increasing (row {row})")]
    NonMonotoneVoltage { row: usize },
    #[error("calibration amplitudes must be non-decreasing (row {row})")]
    NonMonotoneAmplitude { row: usize },
    #[error("calibration table needs at least two rows")]
    TooFewRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MotorLabel {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
    K,
    L,
}

impl MotorLabel {
    pub const ALL: [MotorLabel; MOTOR_COUNT] = [
        MotorLabel::A,
        MotorLabel::B,
        MotorLabel::C,
        MotorLabel::D,
        MotorLabel::E,
        MotorLabel::F,
        MotorLabel::G,
        MotorLabel::H,
        MotorLabel::I,
        MotorLabel::J,
        MotorLabel::K,
        MotorLabel::L,
    ];

    /// Position on the ring, `A` = 0.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> MotorLabel {
        MotorLabel::ALL[i % MOTOR_COUNT]
    }

    pub fn angle(self) -> f64 {
        self.index() as f64 * MOTOR_SPACING_DEG
    }

    pub fn as_char(self) -> char {
        (b'A' + self.index() as u8) as char
    }

    pub fn parse(c: char) -> Option<MotorLabel> {
        let u = c.to_ascii_uppercase();
        ('A'..='L')
            .contains(&u)
            .then(|| MotorLabel::from_index((u as u8 - b'A') as usize))
    }
}

impl fmt::Display for MotorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Dorsal arc used for the move-up cue.
pub const TOP_ARC: [MotorLabel; 5] = [
    MotorLabel::K,
    MotorLabel::L,
    MotorLabel::A,
    MotorLabel::B,
    MotorLabel::C,
];

/// Ventral arc used for the move-down cue.
pub const BOTTOM_ARC: [MotorLabel; 5] = [
    MotorLabel::I,
    MotorLabel::H,
    MotorLabel::G,
    MotorLabel::F,
    MotorLabel::E,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Motor {
    pub label: MotorLabel,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorRing {
    motors: [Motor; MOTOR_COUNT],
}

impl Default for ActuatorRing {
    fn default() -> Self {
        Self {
            motors: MotorLabel::ALL.map(|label| Motor {
                label,
                angle: label.angle(),
            }),
        }
    }
}

impl ActuatorRing {
    pub fn motors(&self) -> &[Motor] {
        &self.motors
    }

    pub fn spacing(&self) -> f64 {
        MOTOR_SPACING_DEG
    }

    /// Nearest motor to `angle`; a tie goes to the counter-clockwise one.
    pub fn nearest(&self, angle: f64) -> MotorLabel {
        let a = wrap_degrees(angle);
        let sector = (a / MOTOR_SPACING_DEG).floor() as usize % MOTOR_COUNT;
        let local = a - sector as f64 * MOTOR_SPACING_DEG;
        if local <= MOTOR_SPACING_DEG / 2.0 {
            MotorLabel::from_index(sector)
        } else {
            MotorLabel::from_index(sector + 1)
        }
    }
}

/// Voltage bounds and the constants of the two-motor interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationConfig {
    pub v_min: f64,
    pub v_max: f64,
    /// The angular constant subtracted in the interpolation weights.
    pub grid_constant: f64,
    /// Angles at most this far from a motor drive that motor alone.
    pub snap_threshold: f64,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        Self {
            v_min: 1.3,
            v_max: 3.0,
            grid_constant: 10.0,
            snap_threshold: 10.0,
        }
    }
}

impl InterpolationConfig {
    pub fn validate(&self) -> Result<(), ActuatorError> {
        let bad = |m: &str| Err(ActuatorError::InvalidConfig(m.to_string()));
        if !(self.v_min > 0.0 && self.v_min < self.v_max && self.v_max <= SUPPLY_VOLTAGE) {
            return bad("require 0 < v_min < v_max <= 5.0");
        }
        if !(self.grid_constant > 0.0 && self.grid_constant < 15.0) {
            return bad("require 0 < grid_constant < 15");
        }
        if !(self.snap_threshold > 0.0 && self.snap_threshold < 15.0) {
            return bad("require 0 < snap_threshold < 15");
        }
        Ok(())
    }
}

/// Drive levels realizing one target ring angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomCommand {
    /// One entry (snapped) or two adjacent motors, counter-clockwise first.
    pub drives: Vec<(MotorLabel, f64)>,
    pub target_angle: f64,
    /// `(φ_L, φ_R)` of the flanking motors when interpolated.
    pub neighbors: Option<(f64, f64)>,
}

impl PhantomCommand {
    pub fn motor_set(&self) -> BTreeSet<MotorLabel> {
        self.drives.iter().map(|(m, _)| *m).collect()
    }

    pub fn is_interpolated(&self) -> bool {
        self.drives.len() == 2
    }

    /// Per-motor voltages indexed by ring position, zero when idle.
    pub fn to_drive_array(&self) -> [f64; MOTOR_COUNT] {
        let mut out = [0.0; MOTOR_COUNT];
        for &(m, v) in &self.drives {
            out[m.index()] = v;
        }
        out
    }
}

/// Map a ring angle to one or two motor voltages.
///
/// Inside an interpolation band the weights are
/// `V_α = (φ_R − φ − c)/(φ_R − φ_L − c)·(v_max − v_min) + v_min` for the
/// counter-clockwise motor and
/// `V_β = (φ − φ_L − c)/(φ_R − φ_L − c)·(v_max − v_min) + v_min` for the
/// clockwise one, with `c` the grid constant. Results are clamped to
/// `[v_min, v_max]`, which only matters for configs with
/// `snap_threshold < grid_constant`.
pub fn phantom_interpolate(
    ring_angle: f64,
    cfg: &InterpolationConfig,
    ring: &ActuatorRing,
) -> PhantomCommand {
    let phi_abs = wrap_degrees(ring_angle);
    let spacing = ring.spacing();
    let sector = ((phi_abs / spacing).floor() as usize) % MOTOR_COUNT;
    let phi_l = sector as f64 * spacing;
    let phi_r = phi_l + spacing;
    let phi = phi_abs;

    let nearest_gap = (phi - phi_l).min(phi_r - phi);
    if nearest_gap <= cfg.snap_threshold {
        return PhantomCommand {
            drives: vec![(ring.nearest(phi), cfg.v_max)],
            target_angle: phi_abs,
            neighbors: None,
        };
    }

    let c = cfg.grid_constant;
    let span = cfg.v_max - cfg.v_min;
    let denom = phi_r - phi_l - c;
    let clamp = |v: f64| v.clamp(cfg.v_min, cfg.v_max);
    let v_alpha = clamp((phi_r - phi - c) / denom * span + cfg.v_min);
    let v_beta = clamp((phi - phi_l - c) / denom * span + cfg.v_min);
    PhantomCommand {
        drives: vec![
            (MotorLabel::from_index(sector), v_alpha),
            (MotorLabel::from_index(sector + 1), v_beta),
        ],
        target_angle: phi_abs,
        neighbors: Some((phi_l, phi_r)),
    }
}

/// Count the distinct motor sets produced by a 1° sweep of the ring.
pub fn effective_directions(cfg: &InterpolationConfig, ring: &ActuatorRing) -> usize {
    (0..360)
        .map(|deg| phantom_interpolate(deg as f64, cfg, ring).motor_set())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Voltage-weighted circular mean of the active motors' angles.
///
/// Returns `None` when nothing is driven or the weights cancel.
pub fn weighted_ring_angle(drives: &[f64; MOTOR_COUNT]) -> Option<f64> {
    let (mut s, mut c) = (0.0, 0.0);
    for (i, &v) in drives.iter().enumerate() {
        if v > 0.0 {
            let a = MotorLabel::from_index(i).angle().to_radians();
            s += v * a.sin();
            c += v * a.cos();
        }
    }
    (s.hypot(c) > 1e-12).then(|| wrap_degrees(s.atan2(c).to_degrees()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub voltage: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

/// Measured voltage → vibration amplitude/frequency response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    rows: Vec<CalibrationRow>,
}

impl Default for CalibrationTable {
    fn default() -> Self {
        Self {
            rows: vec![
                CalibrationRow {
                    voltage: 1.3,
                    amplitude: 0.3,
                    frequency: DRIVE_FREQUENCY_HZ,
                },
                CalibrationRow {
                    voltage: 3.0,
                    amplitude: 1.3,
                    frequency: DRIVE_FREQUENCY_HZ,
                },
            ],
        }
    }
}

impl CalibrationTable {
    pub fn new(rows: Vec<CalibrationRow>) -> Result<Self, ActuatorError> {
        if rows.len() < 2 {
            return Err(ActuatorError::TooFewRows);
        }
        for (i, w) in rows.windows(2).enumerate() {
            if !(w[1].voltage > w[0].voltage) {
                return Err(ActuatorError::NonMonotoneVoltage { row: i + 1 });
            }
            if w[1].amplitude < w[0].amplitude {
                return Err(ActuatorError::NonMonotoneAmplitude { row: i + 1 });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[CalibrationRow] {
        &self.rows
    }

    pub fn segments(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn voltage_span(&self) -> (f64, f64) {
        (self.rows[0].voltage, self.rows[self.rows.len() - 1].voltage)
    }

    pub fn covers(&self, v_min: f64, v_max: f64) -> bool {
        let (lo, hi) = self.voltage_span();
        lo <= v_min && v_max <= hi
    }

    fn interpolate(&self, v: f64, pick: impl Fn(&CalibrationRow) -> f64) -> Result<f64, ActuatorError> {
        let (lo, hi) = self.voltage_span();
        if !(v >= lo && v <= hi) {
            return Err(ActuatorError::OutOfCalibrationRange(v, lo, hi));
        }
        let seg = self
            .rows
            .windows(2)
            .find(|w| v <= w[1].voltage)
            .expect("v lies inside the span");
        let (a, b) = (&seg[0], &seg[1]);
        let t = (v - a.voltage) / (b.voltage - a.voltage);
        Ok(pick(a) + t * (pick(b) - pick(a)))
    }

    pub fn amplitude_at(&self, v: f64) -> Result<f64, ActuatorError> {
        self.interpolate(v, |r| r.amplitude)
    }

    pub fn frequency_at(&self, v: f64) -> Result<f64, ActuatorError> {
        self.interpolate(v, |r| r.frequency)
    }
}

pub fn voltage_to_amplitude(v: f64, table: &CalibrationTable) -> Result<f64, ActuatorError> {
    table.amplitude_at(v)
}

/// 8-bit PWM duty for a drive voltage on the 5 V supply.
pub fn voltage_to_duty(v: f64) -> Result<u8, ActuatorError> {
    if v < 0.0 {
        return Err(ActuatorError::NegativeVoltage(v));
    }
    Ok((v / SUPPLY_VOLTAGE * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// Centre voltage of a duty bin.
pub fn duty_to_voltage(duty: u8) -> f64 {
    duty as f64 / 255.0 * SUPPLY_VOLTAGE
}
