//! Simulated participants.
//!
//! These agents are synthetic stand-ins that close the loop around the
//! controller; their parameters are free knobs, not measured human traits.
//!
//! * `CueFollower` only feels the wristband. Each cue is machine-decoded,
//!   acted on after `reaction_latency`, and planar cues set a heading that
//!   is snapped to the ring's 15° resolution.
//! * `DirectVisual` sees the target (with Gaussian error) and walks straight
//!   to it, confirming on perceived contact.
//! * `Combined` walks visually until a Close-tier cue arrives, then follows
//!   cues.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::GuidanceConfig;
use crate::controller::{
    end_point_deviation, ControllerError, GuidanceController, GuidanceEvent, GuidanceSession,
};
use crate::cue::{cue_segment_duration, decode, encode, CueCategory};
use crate::geometry::{DistanceTier, OperatingPlane, ReferenceFrameMode, ToolState, Vec3, Zone};
use crate::harness::field::{Condition, Target};
use crate::seeding;

/// Heading resolution of a cue-following agent (degrees).
pub const HEADING_RESOLUTION_DEG: f64 = 15.0;
/// Vertical corrections are made at this fraction of the planar speed.
pub const VERTICAL_SPEED_FRACTION: f64 = 0.25;
pub const DEFAULT_TIMEOUT_S: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    CueFollower,
    DirectVisual,
    Combined,
}

impl AgentKind {
    pub fn for_condition(c: Condition) -> Self {
        match c {
            Condition::HapticsOnly => AgentKind::CueFollower,
            Condition::AROnly => AgentKind::DirectVisual,
            Condition::ARPlusHaptics => AgentKind::Combined,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::CueFollower => "cue_follower",
            AgentKind::DirectVisual => "direct_visual",
            AgentKind::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [AgentKind::CueFollower, AgentKind::DirectVisual, AgentKind::Combined]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub kind: AgentKind,
    /// mm/s
    pub speed: f64,
    /// s
    pub reaction_latency: f64,
    /// Heading noise, degrees.
    pub angular_noise_sd: f64,
    /// Per-axis in-plane error of the perceived target, mm.
    pub visual_error_sd: f64,
    /// s between deciding to stop and pressing the pedal.
    pub confirm_delay: f64,
    pub seed: u64,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            speed: 30.0,
            reaction_latency: 0.3,
            angular_noise_sd: 0.0,
            visual_error_sd: 4.0,
            confirm_delay: 0.5,
            seed: 0,
        }
    }

    /// Deterministic agent: no heading or visual error.
    pub fn noise_free(kind: AgentKind) -> Self {
        Self {
            visual_error_sd: 0.0,
            ..Self::new(kind)
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err("agent speed must be positive".into());
        }
        for (name, v) in [
            ("reaction_latency", self.reaction_latency),
            ("angular_noise_sd", self.angular_noise_sd),
            ("visual_error_sd", self.visual_error_sd),
            ("confirm_delay", self.confirm_delay),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("agent {name} must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Gaussian jitter plus linear drift applied to what the tracker reports.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackingNoise {
    /// Per-axis SD, mm.
    pub jitter_sd: f64,
    /// Drift speed along the plane normal, mm/s.
    pub drift_mm_per_s: f64,
}

impl TrackingNoise {
    pub fn is_off(&self) -> bool {
        self.jitter_sd == 0.0 && self.drift_mm_per_s == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub tracking_noise: TrackingNoise,
    pub timeout_s: f64,
    pub frame: ReferenceFrameMode,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            tracking_noise: TrackingNoise::default(),
            timeout_s: DEFAULT_TIMEOUT_S,
            frame: ReferenceFrameMode::WristUp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialStatus {
    Confirmed,
    Timeout,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Confirmed => "confirmed",
            TrialStatus::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub participant_id: u32,
    pub condition: Condition,
    pub direction_deg: f64,
    pub zone: Zone,
    /// True tip positions, one per tracking sample.
    pub trajectory: Vec<ToolState>,
    pub final_distance: f64,
    pub end_point_deviation: f64,
    pub time_to_target: f64,
    pub status: TrialStatus,
    pub event_log: Vec<GuidanceEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Motion {
    Still,
    Heading(Vec3),
    Visual,
}

struct Agent<'a> {
    spec: &'a AgentSpec,
    plane: &'a OperatingPlane,
    frame: ReferenceFrameMode,
    rng: ChaCha8Rng,
    motion: Motion,
    following_cues: bool,
    visual_target: Vec3,
    confirm_at: Option<f64>,
}

impl Agent<'_> {
    fn perceive(&mut self, cue: CueCategory, at: f64) {
        match cue {
            CueCategory::Arrived => {
                self.motion = Motion::Still;
                self.following_cues = true;
                self.confirm_at.get_or_insert(at + self.spec.confirm_delay);
            }
            _ if self.confirm_at.is_some() => {}
            CueCategory::MoveTo { angle, tier } => {
                if !self.following_cues {
                    if tier != DistanceTier::Close {
                        return;
                    }
                    self.following_cues = true;
                }
                let mut planar = self.frame.ring_to_planar(angle);
                if self.spec.angular_noise_sd > 0.0 {
                    let n = Normal::new(0.0, self.spec.angular_noise_sd).expect("sd validated");
                    planar += n.sample(&mut self.rng);
                }
                let q = (planar / HEADING_RESOLUTION_DEG).round() * HEADING_RESOLUTION_DEG;
                self.motion = Motion::Heading(self.plane.direction_vector(q));
            }
            CueCategory::MoveUp | CueCategory::MoveDown if self.following_cues => {
                let sign = if cue == CueCategory::MoveUp { 1.0 } else { -1.0 };
                self.motion = Motion::Heading(self.plane.normal() * (sign * VERTICAL_SPEED_FRACTION));
            }
            CueCategory::Pause if self.following_cues => self.motion = Motion::Still,
            _ => {}
        }
    }
}

pub fn simulate_trial(
    agent: &AgentSpec,
    condition: Condition,
    target: &Target,
    plane: &OperatingPlane,
    cfg: &GuidanceConfig,
) -> Result<TrialRecord, ControllerError> {
    simulate_trial_with(agent, condition, target, plane, cfg, &SimulationOptions::default(), 0)
}

/// Run one closed-loop trial from the plane origin until the agent confirms
/// or `timeout_s` elapses.
pub fn simulate_trial_with(
    spec: &AgentSpec,
    condition: Condition,
    target: &Target,
    plane: &OperatingPlane,
    cfg: &GuidanceConfig,
    opts: &SimulationOptions,
    participant_id: u32,
) -> Result<TrialRecord, ControllerError> {
    spec.validate().map_err(|e| {
        ControllerError::Config(crate::config::ConfigError::Invalid(e))
    })?;
    let controller = GuidanceController::new(target.position, *plane, *cfg, opts.frame)?;
    let mut session = GuidanceSession::new(controller);

    let mut rng = seeding::stream(spec.seed, &[]);
    let mut noise_rng = seeding::stream(spec.seed, &[1]);
    let visual_target = if spec.visual_error_sd > 0.0 {
        let n = Normal::new(0.0, spec.visual_error_sd).expect("sd validated");
        target.position
            + plane.forward() * n.sample(&mut rng)
            + plane.lateral() * n.sample(&mut rng)
    } else {
        target.position
    };
    let mut agent = Agent {
        spec,
        plane,
        frame: opts.frame,
        rng,
        motion: match spec.kind {
            AgentKind::CueFollower => Motion::Still,
            _ => Motion::Visual,
        },
        following_cues: spec.kind == AgentKind::CueFollower,
        visual_target,
        confirm_at: None,
    };

    let dt = 1.0 / cfg.update_rate;
    let step_len = spec.speed * dt;
    let mut tip = plane.origin();
    let mut pending: VecDeque<(f64, CueCategory)> = VecDeque::new();
    let mut trajectory = Vec::new();
    let jitter = (opts.tracking_noise.jitter_sd > 0.0)
        .then(|| Normal::new(0.0, opts.tracking_noise.jitter_sd).expect("jitter sd"));

    let mut k: u64 = 0;
    let (end_t, status) = loop {
        let t = k as f64 * dt;
        if let Some(at) = agent.confirm_at {
            if t >= at {
                break (at, TrialStatus::Confirmed);
            }
        }
        if t > opts.timeout_s {
            break (opts.timeout_s, TrialStatus::Timeout);
        }
        trajectory.push(ToolState::new(tip, t));

        let mut tracked = tip + plane.normal() * (opts.tracking_noise.drift_mm_per_s * t);
        if let Some(j) = &jitter {
            tracked = tracked
                + Vec3::new(
                    j.sample(&mut noise_rng),
                    j.sample(&mut noise_rng),
                    j.sample(&mut noise_rng),
                );
        }
        let update = session.update(ToolState::new(tracked, t))?;
        if let (true, Some(cue)) = (condition.has_haptics() && spec.kind != AgentKind::DirectVisual, update.cue) {
            let tl = encode(cue, cue_segment_duration(&cue, cfg), cfg)?.timeline;
            if let Ok((decoded, _)) = decode(&tl, cfg) {
                pending.push_back((t + spec.reaction_latency, decoded));
            }
        }
        while pending.front().is_some_and(|(at, _)| *at <= t + 1e-9) {
            let (at, cue) = pending.pop_front().expect("front exists");
            agent.perceive(cue, at);
        }

        match agent.motion {
            Motion::Still => {}
            Motion::Heading(dir) => tip = tip + dir * step_len,
            Motion::Visual => {
                let to_go = agent.visual_target - tip;
                let remaining = to_go.norm();
                if remaining <= step_len + 1e-9 {
                    tip = agent.visual_target;
                    if spec.kind == AgentKind::DirectVisual {
                        agent.motion = Motion::Still;
                        agent.confirm_at = Some((k + 1) as f64 * dt + spec.confirm_delay);
                    } else {
                        agent.motion = Motion::Still;
                        agent.following_cues = true;
                    }
                } else {
                    tip = tip + to_go * (step_len / remaining);
                }
            }
        }
        k += 1;
    };

    let final_distance = tip.distance(target.position);
    Ok(TrialRecord {
        participant_id,
        condition,
        direction_deg: target.direction_deg,
        zone: target.zone,
        trajectory,
        final_distance,
        end_point_deviation: end_point_deviation(final_distance, cfg.arrival_radius),
        time_to_target: end_t,
        status,
        event_log: session.finish().events,
    })
}
