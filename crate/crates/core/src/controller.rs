//! Closed-loop guidance: a state machine fed with tracked tool samples that
//! decides which cue to play next, plus a session wrapper that splices the
//! issued cues into one continuous actuator timeline.
//!
//! Transition priority on every sample:
//!
//! 1. within `arrival_radius` (3D) of the target: `Arrived`, then `Done` once
//!    the arrival cue has played out;
//! 2. beyond `±plane_margin` out of plane: `CorrectDown` above the plane,
//!    `CorrectUp` below it;
//! 3. leaving a correction requires `|deviation| ≤ plane_margin −
//!    margin_hysteresis` and goes through `Pausing`;
//! 4. otherwise `PlanarGuiding`, pulsing `MoveTo` once per tier interval.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuator::MOTOR_COUNT;
use crate::config::{nearest_tick, ConfigError, GuidanceConfig, CORRECTION_PERIOD_S};
use crate::cue::{cue_segment_duration, encode, ActuatorTimeline, CueCategory, CueError, TimelineBuilder};
use crate::geometry::{
    distance_tier, map_to_ring_angle, DistanceTier, OperatingPlane, ReferenceFrameMode, ToolState,
    Vec3,
};

/// Slack used when comparing sample times against scheduled cue times.
const TIME_EPS: f64 = 1e-9;

pub const EVENT_LOG_HEADER: &str = "t_s,from,to,cue,tip_x_mm,tip_y_mm,tip_z_mm";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("stale timestamp: {got} s after {previous} s")]
    StaleTimestamp { previous: f64, got: f64 },
    #[error("timestamp {0} is negative or not finite")]
    InvalidTimestamp(f64),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cue(#[from] CueError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GuidanceState {
    Idle,
    PlanarGuiding(DistanceTier),
    CorrectUp,
    CorrectDown,
    Pausing { remaining: f64 },
    Arrived,
    Done,
}

impl GuidanceState {
    pub fn name(&self) -> &'static str {
        match self {
            GuidanceState::Idle => "idle",
            GuidanceState::PlanarGuiding(_) => "planar_guiding",
            GuidanceState::CorrectUp => "correct_up",
            GuidanceState::CorrectDown => "correct_down",
            GuidanceState::Pausing { .. } => "pausing",
            GuidanceState::Arrived => "arrived",
            GuidanceState::Done => "done",
        }
    }

    /// Same state ignoring the countdown carried by `Pausing`.
    pub fn same_mode(&self, other: &GuidanceState) -> bool {
        match (self, other) {
            (GuidanceState::Pausing { .. }, GuidanceState::Pausing { .. }) => true,
            (a, b) => a == b,
        }
    }

    pub fn is_correcting(&self) -> bool {
        matches!(self, GuidanceState::CorrectUp | GuidanceState::CorrectDown)
    }

    pub fn tier(&self) -> Option<DistanceTier> {
        match self {
            GuidanceState::PlanarGuiding(t) => Some(*t),
            _ => None,
        }
    }
}

impl fmt::Display for GuidanceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuidanceState::PlanarGuiding(t) => write!(f, "planar_guiding:{t}"),
            s => f.write_str(s.name()),
        }
    }
}

/// Compact cue label used in logs, e.g. `move_to:18.000:medium`.
pub fn cue_label(cue: &CueCategory) -> String {
    match cue {
        CueCategory::MoveTo { angle, tier } => format!("move_to:{angle:.3}:{tier}"),
        other => other.kind().as_str().to_string(),
    }
}

/// One audit-log entry: a state change, a cue, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceEvent {
    pub t: f64,
    pub from: GuidanceState,
    pub to: GuidanceState,
    pub cue_issued: Option<CueCategory>,
    pub tool: ToolState,
}

pub fn events_to_csv(events: &[GuidanceEvent]) -> String {
    let mut out = String::from(EVENT_LOG_HEADER);
    out.push('\n');
    for e in events {
        let _ = writeln!(
            out,
            "{:.6},{},{},{},{:.3},{:.3},{:.3}",
            e.t,
            e.from,
            e.to,
            e.cue_issued.as_ref().map(cue_label).unwrap_or_default(),
            e.tool.tip.x,
            e.tool.tip.y,
            e.tool.tip.z
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub state: GuidanceState,
    pub cue: Option<CueCategory>,
}

/// Final position as confirmed by the participant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialEndpoint {
    pub final_distance: f64,
    pub deviation: f64,
}

/// Distance beyond the target radius; zero inside it.
pub fn end_point_deviation(final_distance: f64, arrival_radius: f64) -> f64 {
    (final_distance - arrival_radius).max(0.0)
}

pub fn confirm(tool: &ToolState, target: Vec3, cfg: &GuidanceConfig) -> TrialEndpoint {
    let final_distance = tool.tip.distance(target);
    TrialEndpoint {
        final_distance,
        deviation: end_point_deviation(final_distance, cfg.arrival_radius),
    }
}

/// The per-session guidance state machine.
#[derive(Debug, Clone)]
pub struct GuidanceController {
    cfg: GuidanceConfig,
    plane: OperatingPlane,
    target: Vec3,
    frame: ReferenceFrameMode,
    state: GuidanceState,
    last_t: Option<f64>,
    next_pulse_at: Option<f64>,
    next_correction_at: f64,
    pause_end: f64,
    arrived_at: f64,
    start_tier: Option<DistanceTier>,
}

impl GuidanceController {
    pub fn new(
        target: Vec3,
        plane: OperatingPlane,
        cfg: GuidanceConfig,
        frame: ReferenceFrameMode,
    ) -> Result<Self, ControllerError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            plane,
            target,
            frame,
            state: GuidanceState::Idle,
            last_t: None,
            next_pulse_at: None,
            next_correction_at: 0.0,
            pause_end: 0.0,
            arrived_at: 0.0,
            start_tier: None,
        })
    }

    pub fn state(&self) -> GuidanceState {
        self.state
    }

    pub fn config(&self) -> &GuidanceConfig {
        &self.cfg
    }

    pub fn target(&self) -> Vec3 {
        self.target
    }

    pub fn plane(&self) -> &OperatingPlane {
        &self.plane
    }

    /// Tier the next planar pulse would use at `distance`.
    pub fn tier_for(&self, distance: f64) -> DistanceTier {
        match (self.cfg.static_tier, self.start_tier) {
            (true, Some(t)) => t,
            _ => distance_tier(distance, &self.cfg),
        }
    }

    pub fn step(&mut self, tool: ToolState) -> Result<StepOutput, ControllerError> {
        let t = tool.timestamp;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(ControllerError::InvalidTimestamp(t));
        }
        if let Some(prev) = self.last_t {
            if t < prev {
                return Err(ControllerError::StaleTimestamp { previous: prev, got: t });
            }
        }
        self.last_t = Some(t);

        let distance = tool.tip.distance(self.target);
        if self.start_tier.is_none() {
            self.start_tier = Some(distance_tier(distance, &self.cfg));
        }
        let (state, cue) = self.transition(t, tool.tip, distance);
        self.state = state;
        Ok(StepOutput { state, cue })
    }

    fn transition(&mut self, t: f64, tip: Vec3, distance: f64) -> (GuidanceState, Option<CueCategory>) {
        use GuidanceState::*;
        let cfg = self.cfg;
        match self.state {
            Done => return (Done, None),
            Arrived => {
                if t + TIME_EPS >= self.arrived_at + cfg.arrived_duration {
                    return (Done, None);
                }
                return (Arrived, None);
            }
            _ => {}
        }

        if distance <= cfg.arrival_radius {
            self.arrived_at = t;
            return (Arrived, Some(CueCategory::Arrived));
        }

        let deviation = self.plane.out_of_plane_deviation(tip);
        let wanted = if deviation > cfg.plane_margin {
            Some(CorrectDown)
        } else if deviation < -cfg.plane_margin {
            Some(CorrectUp)
        } else {
            None
        };
        if let Some(target_state) = wanted {
            let reissue = t + TIME_EPS >= self.next_correction_at;
            if self.state != target_state || reissue {
                self.next_correction_at = t + CORRECTION_PERIOD_S;
                self.next_pulse_at = None;
                let cue = if target_state == CorrectDown {
                    CueCategory::MoveDown
                } else {
                    CueCategory::MoveUp
                };
                return (target_state, Some(cue));
            }
            return (target_state, None);
        }

        if self.state.is_correcting() {
            if deviation.abs() <= cfg.plane_margin - cfg.margin_hysteresis {
                self.pause_end = t + cfg.pause_duration();
                return (
                    Pausing {
                        remaining: cfg.pause_duration(),
                    },
                    Some(CueCategory::Pause),
                );
            }
            // inside the hysteresis band: keep correcting
            let current = self.state;
            if t + TIME_EPS >= self.next_correction_at {
                self.next_correction_at = t + CORRECTION_PERIOD_S;
                let cue = if current == CorrectDown {
                    CueCategory::MoveDown
                } else {
                    CueCategory::MoveUp
                };
                return (current, Some(cue));
            }
            return (current, None);
        }

        if let Pausing { .. } = self.state {
            if t + TIME_EPS < self.pause_end {
                return (
                    Pausing {
                        remaining: self.pause_end - t,
                    },
                    None,
                );
            }
            self.next_pulse_at = None;
        }

        let tier = self.tier_for(distance);
        let due = self.next_pulse_at.is_none_or(|at| t + TIME_EPS >= at);
        if !due {
            return (PlanarGuiding(tier), None);
        }
        let Ok(planar) = self.plane.planar_direction(tip, self.target) else {
            // tip projects onto the target: hold until the direction is defined
            return (PlanarGuiding(tier), None);
        };
        let interval = cfg.tier_interval(tier);
        let scheduled = self.next_pulse_at.unwrap_or(t);
        let next = scheduled + interval;
        self.next_pulse_at = Some(if next + TIME_EPS >= t { next } else { t + interval });
        let ring_angle = map_to_ring_angle(planar, self.frame);
        (PlanarGuiding(tier), Some(CueCategory::move_to(ring_angle, tier)))
    }
}

/// Functional form: advance `controller` by one sample.
pub fn step(controller: &mut GuidanceController, tool: ToolState) -> Result<StepOutput, ControllerError> {
    controller.step(tool)
}

/// What a live client sees after one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionUpdate {
    pub t: f64,
    pub state: GuidanceState,
    pub cue: Option<CueCategory>,
    /// Volts per motor at this sample's tick.
    pub drives: [f64; MOTOR_COUNT],
    pub distance: f64,
    pub deviation: f64,
    pub event: Option<GuidanceEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub events: Vec<GuidanceEvent>,
    pub timeline: ActuatorTimeline,
}

/// Controller plus cue playback.
#[derive(Debug, Clone)]
pub struct GuidanceSession {
    controller: GuidanceController,
    builder: TimelineBuilder,
    playing: Option<(u32, ActuatorTimeline)>,
    events: Vec<GuidanceEvent>,
    last_tick: u32,
}

impl GuidanceSession {
    pub fn new(controller: GuidanceController) -> Self {
        Self {
            controller,
            builder: TimelineBuilder::new(),
            playing: None,
            events: Vec::new(),
            last_tick: 0,
        }
    }

    pub fn controller(&self) -> &GuidanceController {
        &self.controller
    }

    pub fn events(&self) -> &[GuidanceEvent] {
        &self.events
    }

    pub fn update(&mut self, tool: ToolState) -> Result<SessionUpdate, ControllerError> {
        let from = self.controller.state();
        let out = self.controller.step(tool)?;
        let tick = nearest_tick(tool.timestamp);
        self.last_tick = tick;
        if let Some(cue) = out.cue {
            let cfg = self.controller.config();
            let tl = encode(cue, cue_segment_duration(&cue, cfg), cfg)?.timeline;
            self.builder.splice(tick, &tl);
            self.playing = Some((tick, tl));
        }
        let event = (!from.same_mode(&out.state) || out.cue.is_some()).then_some(GuidanceEvent {
            t: tool.timestamp,
            from,
            to: out.state,
            cue_issued: out.cue,
            tool,
        });
        if let Some(e) = &event {
            self.events.push(e.clone());
        }
        let drives = match &self.playing {
            Some((start, tl)) if tick >= *start => tl.drives_at(tick - start),
            _ => [0.0; MOTOR_COUNT],
        };
        let c = &self.controller;
        Ok(SessionUpdate {
            t: tool.timestamp,
            state: out.state,
            cue: out.cue,
            drives,
            distance: tool.tip.distance(c.target()),
            deviation: c.plane().out_of_plane_deviation(tool.tip),
            event,
        })
    }

    pub fn finish(mut self) -> SessionLog {
        self.builder.extend_to(self.last_tick);
        SessionLog {
            events: self.events,
            timeline: self.builder.build(),
        }
    }
}

/// Replay a recorded stream through a fresh controller.
pub fn run_session<I>(
    tool_stream: I,
    target: Vec3,
    plane: OperatingPlane,
    cfg: GuidanceConfig,
    frame: ReferenceFrameMode,
) -> Result<SessionLog, ControllerError>
where
    I: IntoIterator<Item = ToolState>,
{
    let mut session = GuidanceSession::new(GuidanceController::new(target, plane, cfg, frame)?);
    for tool in tool_stream {
        session.update(tool)?;
    }
    Ok(session.finish())
}
