//! Live guidance over a local TCP socket, one session per connection.
//!
//! Messages are newline-delimited JSON objects tagged by `type`. The field
//! reference is in `docs/session_protocol.md`. A session is:
//!
//! ```text
//! client: hello ─────────────▶
//!         ◀──────────── hello, start_trial
//! client: tool_update ───────▶
//!         ◀──────────────────── cue_state      (one per tool_update)
//! client: confirm ───────────▶
//!         ◀──────────── trial_result, start_trial (next) ...
//! ```
//!
//! Any protocol violation gets an `error` message and the connection closes.

use std::fs::OpenOptions;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;

use serde::{Deserialize, Serialize};

use crate::actuator::MOTOR_COUNT;
use crate::config::GuidanceConfig;
use crate::controller::{cue_label, end_point_deviation, GuidanceController, GuidanceSession};
use crate::geometry::{OperatingPlane, ReferenceFrameMode, ToolState, Vec3, ZoneSet};
use crate::harness::agent::{TrialRecord, TrialStatus};
use crate::harness::experiment::{record_csv_row, RESULTS_CSV_HEADER, TRIALS_PER_CONDITION};
use crate::harness::field::{generate_field, sample_trial_plan, Condition, Target, TargetField};

/// Tool updates faster than this are allowed but pointless.
pub const MAX_UPDATE_RATE_HZ: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello {
        participant_id: u32,
        condition: String,
        /// Switches the ring to tool-oriented mapping with this offset.
        #[serde(default)]
        calibration_offset_deg: Option<f64>,
    },
    ToolUpdate {
        t_s: f64,
        x_mm: f64,
        y_mm: f64,
        z_mm: f64,
    },
    Confirm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x_mm: f64,
    pub y_mm: f64,
    pub z_mm: f64,
}

impl From<Vec3> for Point {
    fn from(v: Vec3) -> Self {
        Point {
            x_mm: v.x,
            y_mm: v.y,
            z_mm: v.z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        server: String,
        version: String,
        condition: String,
        trials: usize,
    },
    StartTrial {
        trial: usize,
        condition: String,
        /// Omitted for haptics-only sessions.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction_deg: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zone: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<Point>,
        origin: Point,
    },
    CueState {
        t_s: f64,
        state: String,
        /// Cue issued on this update, if any.
        cue: Option<String>,
        /// Drive per motor A..L as a fraction of `v_max`.
        motors: [f64; MOTOR_COUNT],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance_mm: Option<f64>,
        tier: Option<String>,
        out_of_plane_mm: f64,
    },
    TrialResult {
        trial: usize,
        deviation_mm: f64,
        time_s: f64,
        remaining: usize,
    },
    Error {
        message: String,
    },
}

/// Append-only results file shared by every connection.
#[derive(Debug)]
pub struct ResultsLog {
    path: PathBuf,
    lock: Mutex<()>,
}

impl ResultsLog {
    pub fn new(path: PathBuf) -> Self {
        Self {
            path,
            lock: Mutex::new(()),
        }
    }

    pub fn append(&self, record: &TrialRecord) -> io::Result<()> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        if f.metadata()?.len() == 0 {
            writeln!(f, "{RESULTS_CSV_HEADER}")?;
        }
        writeln!(f, "{}", record_csv_row(record))
    }
}

#[derive(Debug)]
pub struct ServerConfig {
    pub cfg: GuidanceConfig,
    pub field: TargetField,
    pub seed: u64,
    pub per_condition: usize,
    pub results: Option<ResultsLog>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            cfg: GuidanceConfig::default(),
            field: generate_field(OperatingPlane::horizontal(), ZoneSet::default()),
            seed: 1,
            per_condition: TRIALS_PER_CONDITION,
            results: None,
        }
    }
}

struct Trial {
    index: usize,
    target: Target,
    session: GuidanceSession,
    trajectory: Vec<ToolState>,
}

struct Protocol<'a> {
    server: &'a ServerConfig,
    participant: u32,
    condition: Condition,
    frame: ReferenceFrameMode,
    targets: Vec<Target>,
    trial: Option<Trial>,
}

fn violation(message: impl Into<String>) -> String {
    message.into()
}

impl<'a> Protocol<'a> {
    fn hello(server: &'a ServerConfig, msg: ClientMessage) -> Result<(Self, Vec<ServerMessage>), String> {
        let ClientMessage::Hello {
            participant_id,
            condition,
            calibration_offset_deg,
        } = msg
        else {
            return Err(violation("first message must be hello"));
        };
        let condition =
            Condition::parse(&condition).ok_or_else(|| violation(format!("unknown condition `{condition}`")))?;
        let frame = match calibration_offset_deg {
            None => ReferenceFrameMode::WristUp,
            Some(o) => ReferenceFrameMode::tool_oriented(o).map_err(|e| violation(e.to_string()))?,
        };
        let targets = sample_trial_plan(&server.field, Condition::ALL, server.per_condition, server.seed, participant_id)
            .into_iter()
            .filter(|p| p.condition == condition)
            .map(|p| server.field.targets[p.target_index])
            .collect();
        let mut p = Self {
            server,
            participant: participant_id,
            condition,
            frame,
            targets,
            trial: None,
        };
        let mut out = vec![ServerMessage::Hello {
            server: "wristguide".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            condition: condition.as_str().into(),
            trials: p.targets.len(),
        }];
        out.extend(p.start(0)?);
        Ok((p, out))
    }

    fn start(&mut self, index: usize) -> Result<Option<ServerMessage>, String> {
        let Some(&target) = self.targets.get(index) else {
            self.trial = None;
            return Ok(None);
        };
        let plane = self.server.field.plane;
        let controller = GuidanceController::new(target.position, plane, self.server.cfg, self.frame)
            .map_err(|e| violation(e.to_string()))?;
        self.trial = Some(Trial {
            index,
            target,
            session: GuidanceSession::new(controller),
            trajectory: Vec::new(),
        });
        let visual = self.condition.has_visual_target();
        Ok(Some(ServerMessage::StartTrial {
            trial: index,
            condition: self.condition.as_str().into(),
            direction_deg: visual.then_some(target.direction_deg),
            zone: visual.then(|| target.zone.to_string()),
            target: visual.then(|| target.position.into()),
            origin: plane.origin().into(),
        }))
    }

    /// Handle one message after hello. `Ok(None)` ends the session cleanly.
    fn handle(&mut self, msg: ClientMessage) -> Result<Vec<ServerMessage>, String> {
        let cfg = self.server.cfg;
        let condition = self.condition;
        let trial = self.trial.as_mut().ok_or_else(|| violation("no trial in progress"))?;
        match msg {
            ClientMessage::Hello { .. } => Err(violation("duplicate hello")),
            ClientMessage::ToolUpdate { t_s, x_mm, y_mm, z_mm } => {
                let tool = ToolState::new(Vec3::new(x_mm, y_mm, z_mm), t_s);
                let u = trial.session.update(tool).map_err(|e| violation(e.to_string()))?;
                trial.trajectory.push(tool);
                let motors = if condition.has_haptics() {
                    u.drives.map(|v| v / cfg.interpolation.v_max)
                } else {
                    [0.0; MOTOR_COUNT]
                };
                let tier = trial.session.controller().tier_for(u.distance);
                Ok(vec![ServerMessage::CueState {
                    t_s,
                    state: u.state.to_string(),
                    cue: u.cue.as_ref().map(cue_label),
                    motors,
                    distance_mm: condition.has_visual_target().then_some(u.distance),
                    tier: Some(tier.to_string()),
                    out_of_plane_mm: u.deviation,
                }])
            }
            ClientMessage::Confirm => {
                let (Some(first), Some(last)) = (trial.trajectory.first(), trial.trajectory.last()) else {
                    return Err(violation("confirm before any tool_update"));
                };
                let final_distance = last.tip.distance(trial.target.position);
                let record = TrialRecord {
                    participant_id: self.participant,
                    condition,
                    direction_deg: trial.target.direction_deg,
                    zone: trial.target.zone,
                    final_distance,
                    end_point_deviation: end_point_deviation(final_distance, cfg.arrival_radius),
                    time_to_target: last.timestamp - first.timestamp,
                    status: TrialStatus::Confirmed,
                    event_log: trial.session.events().to_vec(),
                    trajectory: std::mem::take(&mut trial.trajectory),
                };
                if let Some(log) = &self.server.results {
                    log.append(&record).map_err(|e| violation(format!("cannot persist result: {e}")))?;
                }
                let next = trial.index + 1;
                let mut out = vec![ServerMessage::TrialResult {
                    trial: trial.index,
                    deviation_mm: record.end_point_deviation,
                    time_s: record.time_to_target,
                    remaining: self.targets.len().saturating_sub(next),
                }];
                out.extend(self.start(next)?);
                Ok(out)
            }
        }
    }

    fn finished(&self) -> bool {
        self.trial.is_none()
    }
}

fn send<W: Write>(w: &mut W, msg: &ServerMessage) -> io::Result<()> {
    let mut line = serde_json::to_vec(msg).map_err(io::Error::other)?;
    line.push(b'\n');
    w.write_all(&line)?;
    w.flush()
}

/// Run one session over any line-oriented transport. Returns when the client
/// disconnects, all trials are done, or the protocol is violated.
pub fn handle_session<R: BufRead, W: Write>(reader: R, mut writer: W, server: &ServerConfig) -> io::Result<()> {
    let mut proto: Option<Protocol> = None;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg = match serde_json::from_str::<ClientMessage>(&line) {
            Ok(m) => m,
            Err(e) => return send(&mut writer, &ServerMessage::Error { message: format!("bad message: {e}") }),
        };
        let result = match proto.as_mut() {
            None => Protocol::hello(server, msg).map(|(p, out)| {
                proto = Some(p);
                out
            }),
            Some(p) => p.handle(msg),
        };
        match result {
            Ok(out) => {
                for m in &out {
                    send(&mut writer, m)?;
                }
            }
            Err(message) => return send(&mut writer, &ServerMessage::Error { message }),
        }
        if proto.as_ref().is_some_and(Protocol::finished) {
            return Ok(());
        }
    }
    Ok(())
}

pub struct Server {
    listener: TcpListener,
    config: Arc<ServerConfig>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, config: ServerConfig) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            config: Arc::new(config),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accept forever, one thread per connection.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let config = Arc::clone(&self.config);
            thread::spawn(move || {
                let _ = serve_connection(stream, &config);
            });
        }
        Ok(())
    }
}

fn serve_connection(stream: TcpStream, config: &ServerConfig) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let reader = BufReader::new(stream.try_clone()?);
    handle_session(reader, stream, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::run_session;

    fn run(lines: &[String], server: &ServerConfig) -> Vec<ServerMessage> {
        let input = lines.join("\n");
        let mut out = Vec::new();
        handle_session(input.as_bytes(), &mut out, server).unwrap();
        String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    fn hello(condition: &str) -> String {
        format!(r#"{{"type":"hello","participant_id":2,"condition":"{condition}"}}"#)
    }

    fn update(t: f64, p: Vec3) -> String {
        format!(
            r#"{{"type":"tool_update","t_s":{t},"x_mm":{},"y_mm":{},"z_mm":{}}}"#,
            p.x, p.y, p.z
        )
    }

    fn first_target(server: &ServerConfig, condition: Condition) -> Target {
        let plan = sample_trial_plan(&server.field, Condition::ALL, server.per_condition, server.seed, 2);
        let p = plan.iter().find(|p| p.condition == condition).unwrap();
        server.field.targets[p.target_index]
    }

    #[test]
    fn unknown_condition_is_rejected() {
        let msgs = run(&[hello("vr_only"), update(0.0, Vec3::ZERO)], &ServerConfig::default());
        assert_eq!(msgs.len(), 1);
        assert!(matches!(&msgs[0], ServerMessage::Error { message } if message.contains("vr_only")));
    }

    #[test]
    fn confirm_near_target_scores_zero() {
        let server = ServerConfig::default();
        let target = first_target(&server, Condition::AROnly);
        let near = target.position + Vec3::new(0.0, 0.0, 9.0);
        let msgs = run(
            &[hello("ar_only"), update(0.0, Vec3::ZERO), update(2.5, near), r#"{"type":"confirm"}"#.into()],
            &server,
        );
        let ServerMessage::StartTrial { target: Some(p), .. } = &msgs[1] else {
            panic!("{:?}", msgs[1])
        };
        assert_eq!(Vec3::new(p.x_mm, p.y_mm, p.z_mm), target.position);
        // AR-only: the band stays dark
        assert!(msgs.iter().all(|m| !matches!(m, ServerMessage::CueState { motors, .. } if motors.iter().any(|v| *v > 0.0))));
        let result = msgs.iter().find(|m| matches!(m, ServerMessage::TrialResult { .. })).unwrap();
        assert_eq!(
            result,
            &ServerMessage::TrialResult {
                trial: 0,
                deviation_mm: 0.0,
                time_s: 2.5,
                remaining: 11
            }
        );
        assert!(matches!(msgs.last().unwrap(), ServerMessage::StartTrial { trial: 1, .. }));
    }

    #[test]
    fn above_margin_lights_bottom_arc() {
        let msgs = run(&[hello("haptics_only"), update(0.0, Vec3::new(0.0, 0.0, 6.0))], &ServerConfig::default());
        let ServerMessage::CueState { state, motors, .. } = &msgs[2] else {
            panic!()
        };
        assert_eq!(state, "correct_down");
        let lit: Vec<usize> = (0..12).filter(|&i| motors[i] > 0.0).collect();
        // E F G H I
        assert_eq!(lit, vec![4, 5, 6, 7, 8]);
    }

    #[test]
    fn haptics_only_never_leaks_target() {
        let server = ServerConfig::default();
        let msgs = run(
            &[hello("haptics_only"), update(0.0, Vec3::ZERO), update(0.1, Vec3::new(1.0, 1.0, 0.0)), r#"{"type":"confirm"}"#.into()],
            &server,
        );
        for m in &msgs {
            let json = serde_json::to_string(m).unwrap();
            for key in ["\"target\"", "direction_deg", "\"zone\"", "distance_mm"] {
                assert!(!json.contains(key), "{json}");
            }
        }
    }

    #[test]
    fn cue_states_match_offline_replay() {
        let server = ServerConfig::default();
        let target = first_target(&server, Condition::HapticsOnly);
        let stream: Vec<ToolState> = (0..400)
            .map(|k| {
                let t = k as f64 / 60.0;
                let s = (t / 6.0).min(1.0);
                ToolState::new(target.position * s + Vec3::new(0.0, 0.0, 7.0 * (t * 2.0).sin()), t)
            })
            .collect();
        let mut lines = vec![hello("haptics_only")];
        lines.extend(stream.iter().map(|s| update(s.timestamp, s.tip)));
        let msgs = run(&lines, &server);

        let controller = GuidanceController::new(target.position, server.field.plane, server.cfg, ReferenceFrameMode::WristUp).unwrap();
        let mut offline = GuidanceSession::new(controller);
        let cue_states: Vec<_> = msgs.iter().filter(|m| matches!(m, ServerMessage::CueState { .. })).collect();
        assert_eq!(cue_states.len(), stream.len());
        for (m, s) in cue_states.into_iter().zip(&stream) {
            let u = offline.update(*s).unwrap();
            let ServerMessage::CueState { t_s, state, motors, .. } = m else { unreachable!() };
            assert_eq!(*t_s, s.timestamp);
            assert_eq!(state, &u.state.to_string());
            assert_eq!(motors, &u.drives.map(|v| v / server.cfg.interpolation.v_max));
        }
        let log = run_session(stream, target.position, server.field.plane, server.cfg, ReferenceFrameMode::WristUp).unwrap();
        assert_eq!(log.events, offline.finish().events);
    }

    #[test]
    fn stale_timestamp_and_early_confirm_are_errors() {
        let s = ServerConfig::default();
        let msgs = run(&[hello("ar_haptics"), update(1.0, Vec3::ZERO), update(0.5, Vec3::ZERO)], &s);
        assert!(matches!(msgs.last().unwrap(), ServerMessage::Error { .. }));
        let msgs = run(&[hello("ar_haptics"), r#"{"type":"confirm"}"#.into()], &s);
        assert!(matches!(msgs.last().unwrap(), ServerMessage::Error { .. }));
        let msgs = run(&["not json".into()], &s);
        assert!(matches!(msgs[0], ServerMessage::Error { .. }));
    }

    #[test]
    fn results_are_appended_with_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let server = ServerConfig {
            results: Some(ResultsLog::new(path.clone())),
            ..Default::default()
        };
        let session = [hello("ar_only"), update(0.0, Vec3::ZERO), r#"{"type":"confirm"}"#.into()];
        run(&session, &server);
        run(&session, &server);
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], RESULTS_CSV_HEADER);
        assert_eq!(lines[1], lines[2]);
    }

    #[test]
    fn tcp_round_trip() {
        let server = Server::bind("127.0.0.1:0", ServerConfig::default()).unwrap();
        let addr = server.local_addr().unwrap();
        thread::spawn(move || server.run());
        let mut stream = TcpStream::connect(addr).unwrap();
        writeln!(stream, "{}", hello("ar_haptics")).unwrap();
        writeln!(stream, "{}", update(0.0, Vec3::ZERO)).unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut kinds = Vec::new();
        for _ in 0..3 {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let m: serde_json::Value = serde_json::from_str(&line).unwrap();
            kinds.push(m["type"].as_str().unwrap().to_string());
        }
        assert_eq!(kinds, ["hello", "start_trial", "cue_state"]);
    }
}
