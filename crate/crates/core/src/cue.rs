//! The five guidance cues rendered as tick-quantized actuator timelines, and
//! a rule-based decoder that recovers the cue from a timeline.
//!
//! | cue       | motors            | pattern                                      |
//! |-----------|-------------------|----------------------------------------------|
//! | MoveTo    | phantom pair      | `pulse_on` pulse every tier interval         |
//! | MoveUp    | K L A B C         | 0.1 s on, 0.5 s period                       |
//! | MoveDown  | I H G F E         | 0.1 s on, 0.5 s period                       |
//! | Pause     | all 12            | on 0.1, off 0.1, on 0.1, silent to 1.0 s     |
//! | Arrived   | all 12            | continuous for `arrived_duration` (3.0 s)    |

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuator::{
    phantom_interpolate, weighted_ring_angle, ActuatorRing, MotorLabel, BOTTOM_ARC, MOTOR_COUNT,
    TOP_ARC,
};
use crate::config::{
    nearest_tick, seconds_to_ticks, ticks_to_seconds, GuidanceConfig, BURST_S,
    CORRECTION_PERIOD_S, PAUSE_GROUP_S, TICK_S,
};
use crate::geometry::{wrap_degrees, DistanceTier};

pub const TIMELINE_CSV_HEADER: &str = "t_s,A,B,C,D,E,F,G,H,I,J,K,L";

/// Continuous all-motor activity needed to read a timeline as an arrival.
const ARRIVED_MIN_TICKS: u32 = 250;
/// Longest burst still read as part of a pause.
const PAUSE_BURST_MAX_TICKS: u32 = 20;
/// Largest accepted mismatch between a measured pulse interval and a tier.
const TIER_TOLERANCE_TICKS: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CueError {
    #[error("cue duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("move-to angle must be finite, got {0}")]
    InvalidAngle(f64),
    #[error("timeline is empty")]
    EmptyTimeline,
    #[error("timeline does not match any cue pattern: {0}")]
    Unclassifiable(String),
    #[error("timeline CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CueCategory {
    /// Planar movement toward `angle` (a ring angle in degrees).
    MoveTo { angle: f64, tier: DistanceTier },
    MoveUp,
    MoveDown,
    Pause,
    Arrived,
}

impl CueCategory {
    pub fn move_to(angle: f64, tier: DistanceTier) -> Self {
        CueCategory::MoveTo {
            angle: wrap_degrees(angle),
            tier,
        }
    }

    pub fn kind(&self) -> CueKind {
        match self {
            CueCategory::MoveTo { .. } => CueKind::MoveTo,
            CueCategory::MoveUp => CueKind::MoveUp,
            CueCategory::MoveDown => CueKind::MoveDown,
            CueCategory::Pause => CueKind::Pause,
            CueCategory::Arrived => CueKind::Arrived,
        }
    }
}

impl fmt::Display for CueCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CueCategory::MoveTo { angle, tier } => write!(f, "move_to({angle:.1},{tier})"),
            other => f.write_str(other.kind().as_str()),
        }
    }
}

/// Category without parameters; indexes confusion matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CueKind {
    MoveTo,
    MoveUp,
    MoveDown,
    Pause,
    Arrived,
}

impl CueKind {
    pub const ALL: [CueKind; 5] = [
        CueKind::MoveTo,
        CueKind::MoveUp,
        CueKind::MoveDown,
        CueKind::Pause,
        CueKind::Arrived,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CueKind::MoveTo => "move_to",
            CueKind::MoveUp => "move_up",
            CueKind::MoveDown => "move_down",
            CueKind::Pause => "pause",
            CueKind::Arrived => "arrived",
        }
    }
}

/// Drive levels from `tick` until the next frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorFrame {
    pub tick: u32,
    /// Volts per motor, indexed A..L; zero is off.
    pub drives: [f64; MOTOR_COUNT],
}

impl ActuatorFrame {
    pub fn t(&self) -> f64 {
        ticks_to_seconds(self.tick)
    }

    pub fn active_set(&self) -> BTreeSet<usize> {
        active_set(&self.drives)
    }
}

fn active_set(drives: &[f64; MOTOR_COUNT]) -> BTreeSet<usize> {
    drives
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, _)| i)
        .collect()
}

const OFF: [f64; MOTOR_COUNT] = [0.0; MOTOR_COUNT];

/// A change list of actuator frames. Each frame holds until the next; after
/// the last frame (and before the first) everything is off.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuatorTimeline {
    frames: Vec<ActuatorFrame>,
    duration_ticks: u32,
}

impl ActuatorTimeline {
    /// Build from frames in time order; redundant frames are dropped.
    pub fn new(frames: Vec<ActuatorFrame>, duration_ticks: u32) -> Self {
        let mut tl = Self {
            frames,
            duration_ticks,
        };
        tl.normalize();
        tl
    }

    fn normalize(&mut self) {
        // last write wins within a tick
        let mut collapsed: Vec<ActuatorFrame> = Vec::with_capacity(self.frames.len());
        for f in self.frames.drain(..) {
            match collapsed.last_mut() {
                Some(last) if last.tick == f.tick => *last = f,
                _ => collapsed.push(f),
            }
        }
        let mut prev = OFF;
        self.frames = collapsed
            .into_iter()
            .filter(|f| {
                let changed = f.drives != prev;
                prev = f.drives;
                changed
            })
            .collect();
        if let Some(last) = self.frames.last() {
            self.duration_ticks = self.duration_ticks.max(last.tick);
        }
    }

    pub fn frames(&self) -> &[ActuatorFrame] {
        &self.frames
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration_ticks(&self) -> u32 {
        self.duration_ticks
    }

    pub fn duration(&self) -> f64 {
        ticks_to_seconds(self.duration_ticks)
    }

    /// Drive state in effect during `tick`.
    pub fn drives_at(&self, tick: u32) -> [f64; MOTOR_COUNT] {
        match self.frames.partition_point(|f| f.tick <= tick) {
            0 => OFF,
            i => self.frames[i - 1].drives,
        }
    }

    /// Serialize as timeline CSV: one row per change, voltages to 3 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.frames.len() + 1));
        out.push_str(TIMELINE_CSV_HEADER);
        out.push('\n');
        for f in &self.frames {
            let _ = write!(out, "{:.2}", f.t());
            for v in f.drives {
                let _ = write!(out, ",{v:.3}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, CueError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end_matches('\r') == TIMELINE_CSV_HEADER => {}
            _ => {
                return Err(CueError::Csv {
                    line: 1,
                    reason: format!("expected header `{TIMELINE_CSV_HEADER}`"),
                })
            }
        }
        let mut frames = Vec::new();
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| CueError::Csv { line: n, reason };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != MOTOR_COUNT + 1 {
                return Err(err(format!("expected 13 columns, found {}", cols.len())));
            }
            let t: f64 = cols[0].parse().map_err(|_| err("bad time".into()))?;
            let tick = seconds_to_ticks(t).ok_or_else(|| err(format!("t = {t} not on the tick grid")))?;
            let mut drives = OFF;
            for (d, c) in drives.iter_mut().zip(&cols[1..]) {
                *d = c.parse().map_err(|_| err(format!("bad voltage `{c}`")))?;
                if !(*d >= 0.0) {
                    return Err(err(format!("negative voltage `{c}`")));
                }
            }
            if let Some(prev) = frames.last().map(|f: &ActuatorFrame| f.tick) {
                if tick <= prev {
                    return Err(err("times must strictly increase".into()));
                }
            }
            frames.push(ActuatorFrame { tick, drives });
        }
        let end = frames.last().map_or(0, |f| f.tick);
        Ok(Self::new(frames, end))
    }
}

/// An encoded cue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueTimeline {
    pub category: CueCategory,
    pub timeline: ActuatorTimeline,
}

impl CueTimeline {
    pub fn frames(&self) -> &[ActuatorFrame] {
        self.timeline.frames()
    }

    pub fn duration(&self) -> f64 {
        self.timeline.duration()
    }
}

/// Overlays cue timelines: each splice cuts whatever was playing at its
/// start tick.
#[derive(Debug, Clone, Default)]
pub struct TimelineBuilder {
    frames: Vec<ActuatorFrame>,
    end: u32,
}

impl TimelineBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn splice(&mut self, start_tick: u32, tl: &ActuatorTimeline) {
        let keep = self.frames.partition_point(|f| f.tick < start_tick);
        self.frames.truncate(keep);
        // silence anything still running at the splice point
        self.frames.push(ActuatorFrame {
            tick: start_tick,
            drives: OFF,
        });
        self.frames.extend(tl.frames().iter().map(|f| ActuatorFrame {
            tick: start_tick + f.tick,
            drives: f.drives,
        }));
        self.end = start_tick + tl.duration_ticks();
    }

    /// Extend the recorded span without adding drive changes.
    pub fn extend_to(&mut self, tick: u32) {
        self.end = self.end.max(tick);
    }

    pub fn build(self) -> ActuatorTimeline {
        ActuatorTimeline::new(self.frames, self.end)
    }
}

struct Pulse {
    start: u32,
    end: u32,
    drives: [f64; MOTOR_COUNT],
}

fn timeline_from_pulses(mut pulses: Vec<Pulse>, duration_ticks: u32) -> ActuatorTimeline {
    pulses.sort_by_key(|p| p.start);
    let mut frames = Vec::with_capacity(pulses.len() * 2);
    for p in pulses {
        frames.push(ActuatorFrame {
            tick: p.start,
            drives: p.drives,
        });
        frames.push(ActuatorFrame {
            tick: p.end,
            drives: OFF,
        });
    }
    ActuatorTimeline::new(frames, duration_ticks)
}

fn arc_drives(arc: &[MotorLabel], v: f64) -> [f64; MOTOR_COUNT] {
    let mut d = OFF;
    for m in arc {
        d[m.index()] = v;
    }
    d
}

fn ticks(s: f64) -> u32 {
    seconds_to_ticks(s).unwrap_or_else(|| nearest_tick(s))
}

fn periodic(on: u32, period: u32, duration: u32, drives: [f64; MOTOR_COUNT]) -> Vec<Pulse> {
    (0..duration)
        .step_by(period.max(1) as usize)
        .map(|start| Pulse {
            start,
            end: (start + on).min(duration),
            drives,
        })
        .collect()
}

/// Render a cue as an actuator timeline.
///
/// `duration` bounds the periodic cues (MoveTo, MoveUp, MoveDown). Pause
/// lasts `pause_repeats` one-second groups and Arrived lasts
/// `arrived_duration` whatever `duration` says.
pub fn encode(cue: CueCategory, duration: f64, cfg: &GuidanceConfig) -> Result<CueTimeline, CueError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(CueError::InvalidDuration(duration));
    }
    let dur = nearest_tick(duration).max(1);
    let v_max = cfg.interpolation.v_max;
    let all = [v_max; MOTOR_COUNT];
    let timeline = match cue {
        CueCategory::MoveTo { angle, tier } => {
            if !angle.is_finite() {
                return Err(CueError::InvalidAngle(angle));
            }
            let cmd = phantom_interpolate(angle, &cfg.interpolation, &ActuatorRing::default());
            let pulses = periodic(
                ticks(cfg.pulse_on),
                ticks(cfg.tier_interval(tier)),
                dur,
                cmd.to_drive_array(),
            );
            timeline_from_pulses(pulses, dur)
        }
        CueCategory::MoveUp | CueCategory::MoveDown => {
            let arc: &[MotorLabel] = if cue == CueCategory::MoveUp {
                &TOP_ARC
            } else {
                &BOTTOM_ARC
            };
            let pulses = periodic(
                ticks(BURST_S),
                ticks(CORRECTION_PERIOD_S),
                dur,
                arc_drives(arc, v_max),
            );
            timeline_from_pulses(pulses, dur)
        }
        CueCategory::Pause => {
            let group = ticks(PAUSE_GROUP_S);
            let burst = ticks(BURST_S);
            let pulses = (0..cfg.pause_repeats)
                .flat_map(|g| {
                    let base = g * group;
                    [base, base + 2 * burst].map(|start| Pulse {
                        start,
                        end: start + burst,
                        drives: all,
                    })
                })
                .collect();
            timeline_from_pulses(pulses, cfg.pause_repeats * group)
        }
        CueCategory::Arrived => {
            let len = ticks(cfg.arrived_duration);
            timeline_from_pulses(
                vec![Pulse {
                    start: 0,
                    end: len,
                    drives: all,
                }],
                len,
            )
        }
    };
    let category = match cue {
        CueCategory::MoveTo { angle, tier } => CueCategory::move_to(angle, tier),
        c => c,
    };
    Ok(CueTimeline { category, timeline })
}

/// Natural length of a cue when the controller issues it: one tier interval
/// for MoveTo, one period for corrections, the full pattern otherwise.
pub fn cue_segment_duration(cue: &CueCategory, cfg: &GuidanceConfig) -> f64 {
    match cue {
        CueCategory::MoveTo { tier, .. } => cfg.tier_interval(*tier),
        CueCategory::MoveUp | CueCategory::MoveDown => CORRECTION_PERIOD_S,
        CueCategory::Pause => cfg.pause_duration(),
        CueCategory::Arrived => cfg.arrived_duration,
    }
}

#[derive(Debug, Clone)]
struct Burst {
    start: u32,
    end: u32,
    union: BTreeSet<usize>,
    /// Per-motor voltage × ticks.
    energy: [f64; MOTOR_COUNT],
    all_frames_full: bool,
}

fn bursts(tl: &ActuatorTimeline) -> Vec<Burst> {
    let mut out: Vec<Burst> = Vec::new();
    let mut current: Option<Burst> = None;
    let frames = tl.frames();
    for (i, f) in frames.iter().enumerate() {
        let next_tick = frames
            .get(i + 1)
            .map_or(tl.duration_ticks().max(f.tick), |n| n.tick);
        let set = f.active_set();
        if set.is_empty() {
            if let Some(b) = current.take() {
                out.push(b);
            }
            continue;
        }
        let b = current.get_or_insert_with(|| Burst {
            start: f.tick,
            end: f.tick,
            union: BTreeSet::new(),
            energy: OFF,
            all_frames_full: true,
        });
        b.end = next_tick;
        b.all_frames_full &= set.len() == MOTOR_COUNT;
        let span = (next_tick - f.tick) as f64;
        for &m in &set {
            b.union.insert(m);
            b.energy[m] += f.drives[m] * span;
        }
    }
    if let Some(b) = current {
        out.push(b);
    }
    out
}

fn longest_full_run(tl: &ActuatorTimeline) -> u32 {
    let frames = tl.frames();
    let mut best = 0;
    let mut run_start: Option<u32> = None;
    for (i, f) in frames.iter().enumerate() {
        let next_tick = frames.get(i + 1).map_or(tl.duration_ticks(), |n| n.tick);
        if f.active_set().len() == MOTOR_COUNT {
            let s = *run_start.get_or_insert(f.tick);
            best = best.max(next_tick.saturating_sub(s));
        } else {
            run_start = None;
        }
    }
    best
}

fn is_adjacent_pair(set: &BTreeSet<usize>) -> bool {
    let v: Vec<usize> = set.iter().copied().collect();
    match v.as_slice() {
        [_] => true,
        [a, b] => (b - a) == 1 || (*a == 0 && *b == MOTOR_COUNT - 1),
        _ => false,
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn nearest_tier(interval_ticks: f64, cfg: &GuidanceConfig) -> Option<DistanceTier> {
    DistanceTier::ALL
        .into_iter()
        .map(|t| (t, (cfg.tier_interval(t) / TICK_S - interval_ticks).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|(_, err)| *err <= TIER_TOLERANCE_TICKS)
        .map(|(t, _)| t)
}

fn confidence(tl: &ActuatorTimeline, signature: &BTreeSet<usize>) -> f64 {
    let frames = tl.frames();
    let ok = frames
        .iter()
        .filter(|f| {
            let s = f.active_set();
            s.is_empty() || s == *signature
        })
        .count();
    ok as f64 / frames.len() as f64
}

/// Recover the cue category from a timeline.
///
/// Rules, first match wins: all motors continuously on for ≥ 2.5 s is
/// Arrived; two or more short all-motor bursts are Pause; bursts on exactly
/// the top or bottom arc are MoveUp / MoveDown; bursts on one motor or an
/// adjacent pair are MoveTo, with the angle taken as the voltage-weighted
/// circular mean and the tier from the median pulse interval (or from the
/// timeline length when there is a single pulse). Anything else is
/// [`CueError::Unclassifiable`].
pub fn decode(tl: &ActuatorTimeline, cfg: &GuidanceConfig) -> Result<(CueCategory, f64), CueError> {
    if tl.is_empty() {
        return Err(CueError::EmptyTimeline);
    }
    let all: BTreeSet<usize> = (0..MOTOR_COUNT).collect();
    if longest_full_run(tl) >= ARRIVED_MIN_TICKS {
        return Ok((CueCategory::Arrived, confidence(tl, &all)));
    }
    let bs = bursts(tl);
    if bs.len() >= 2
        && bs
            .iter()
            .all(|b| b.all_frames_full && b.end - b.start <= PAUSE_BURST_MAX_TICKS)
    {
        return Ok((CueCategory::Pause, confidence(tl, &all)));
    }
    let top: BTreeSet<usize> = TOP_ARC.iter().map(|m| m.index()).collect();
    let bottom: BTreeSet<usize> = BOTTOM_ARC.iter().map(|m| m.index()).collect();
    if bs.iter().all(|b| b.union == top) {
        return Ok((CueCategory::MoveUp, confidence(tl, &top)));
    }
    if bs.iter().all(|b| b.union == bottom) {
        return Ok((CueCategory::MoveDown, confidence(tl, &bottom)));
    }
    let first = &bs[0].union;
    if is_adjacent_pair(first) && bs.iter().all(|b| b.union == *first) {
        let mut energy = OFF;
        for b in &bs {
            for (e, x) in energy.iter_mut().zip(b.energy) {
                *e += x;
            }
        }
        let angle = weighted_ring_angle(&energy)
            .ok_or_else(|| CueError::Unclassifiable("zero drive energy".into()))?;
        let tier = if bs.len() >= 2 {
            let gaps = bs.windows(2).map(|w| (w[1].start - w[0].start) as f64).collect();
            let m = median(gaps);
            nearest_tier(m, cfg).ok_or_else(|| {
                CueError::Unclassifiable(format!("pulse interval {:.2} s matches no tier", m * TICK_S))
            })?
        } else {
            DistanceTier::ALL
                .into_iter()
                .find(|t| seconds_to_ticks(cfg.tier_interval(*t)) == Some(tl.duration_ticks()))
                .ok_or_else(|| {
                    CueError::Unclassifiable("single pulse and no tier-length window".into())
                })?
        };
        return Ok((CueCategory::move_to(angle, tier), confidence(tl, first)));
    }
    Err(CueError::Unclassifiable(format!(
        "{} bursts, first on motors {:?}",
        bs.len(),
        first
            .iter()
            .map(|i| MotorLabel::from_index(*i).as_char())
            .collect::<String>()
    )))
}
