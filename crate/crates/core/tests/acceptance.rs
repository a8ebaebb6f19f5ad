// One PASS/FAIL line per acceptance criterion, at the stated tolerances.
// Runs as a plain binary (harness = false) so every line is always printed;
// the process exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wristguide::actuator::{
    effective_directions, phantom_interpolate, ActuatorRing, InterpolationConfig, MotorLabel,
    BOTTOM_ARC, MOTOR_COUNT, TOP_ARC,
};
use wristguide::config::GuidanceConfig;
use wristguide::controller::{end_point_deviation, run_session, GuidanceController, GuidanceState};
use wristguide::cue::{decode, encode, ActuatorFrame, ActuatorTimeline, CueCategory, CueKind};
use wristguide::device::{decode_frame, encode_frame, DriveFrame, FrameError, FRAME_LEN};
use wristguide::geometry::{circular_distance, DistanceTier, OperatingPlane, ReferenceFrameMode, ToolState, Vec3, ZoneSet};
use wristguide::harness::experiment::{run_experiment, ExperimentSpec};
use wristguide::harness::field::{generate_field, Condition};
use wristguide::harness::{simulate_trial, AgentKind, AgentSpec, TrialStatus};
use wristguide::recognition::{confusion_matrix, experiment1_schedule, NoiseSpec, PRESENTATION_S};

const VOLT_TOL: f64 = 1e-9;

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: true,
        detail: detail.into(),
    }
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

/// Collect sub-check failures; the first few are reported.
#[derive(Default)]
struct Failures(Vec<String>);

impl Failures {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.0.push(what());
        }
    }

    fn into_outcome(self, ok_detail: String) -> Outcome {
        if self.0.is_empty() {
            pass(ok_detail)
        } else {
            let shown: Vec<&str> = self.0.iter().take(3).map(String::as_str).collect();
            check(false, format!("{} problem(s): {}", self.0.len(), shown.join("; ")))
        }
    }
}

fn within_budget(f: &mut Failures, elapsed: Duration, budget: Duration) {
    f.require(elapsed <= budget, || format!("took {elapsed:.2?}, budget {budget:?}"));
}

// direct substitution into the two interpolation equations
fn substitute(phi: f64, phi_l: f64, c: f64, v_min: f64, v_max: f64) -> (f64, f64) {
    let phi_r = phi_l + 30.0;
    let span = v_max - v_min;
    (
        (phi_r - phi - c) / (phi_r - phi_l - c) * span + v_min,
        (phi - phi_l - c) / (phi_r - phi_l - c) * span + v_min,
    )
}

fn interpolation_exactness() -> Outcome {
    let start = Instant::now();
    let cfg = InterpolationConfig::default();
    let ring = ActuatorRing::default();
    let mut f = Failures::default();

    for (phi, expected) in [(12.0, (1.98, 1.47)), (15.0, (1.725, 1.725))] {
        let cmd = phantom_interpolate(phi, &cfg, &ring);
        let got: Vec<(MotorLabel, f64)> = cmd.drives.clone();
        let oracle = substitute(phi, 0.0, 10.0, 1.3, 3.0);
        let ok = got.len() == 2
            && got[0].0 == MotorLabel::A
            && got[1].0 == MotorLabel::B
            && (got[0].1 - oracle.0).abs() <= VOLT_TOL
            && (got[1].1 - oracle.1).abs() <= VOLT_TOL
            && (oracle.0 - expected.0).abs() <= VOLT_TOL
            && (oracle.1 - expected.1).abs() <= VOLT_TOL;
        f.require(ok, || format!("{phi}° gave {got:?}, expected {expected:?}"));
    }

    // 0.1° sweep: bounds everywhere, V_α + V_β constant within each sector
    let mut sector_sum: [Option<f64>; MOTOR_COUNT] = [None; MOTOR_COUNT];
    for k in 0..3600 {
        let phi = k as f64 * 0.1;
        let cmd = phantom_interpolate(phi, &cfg, &ring);
        for &(_, v) in &cmd.drives {
            f.require((1.3 - VOLT_TOL..=3.0 + VOLT_TOL).contains(&v), || format!("{phi:.1}°: {v} V out of range"));
        }
        if cmd.drives.len() == 2 {
            let sector = (phi / 30.0).floor() as usize % MOTOR_COUNT;
            let sum = cmd.drives[0].1 + cmd.drives[1].1;
            let reference = *sector_sum[sector].get_or_insert(sum);
            f.require((sum - reference).abs() <= VOLT_TOL, || {
                format!("{phi:.1}°: sum {sum} differs from sector sum {reference}")
            });
        }
    }
    let elapsed = start.elapsed();
    within_budget(&mut f, elapsed, Duration::from_secs(1));
    f.into_outcome(format!("12°→(1.98, 1.47) V, 15°→(1.725, 1.725) V, 3600-point sweep in {elapsed:.2?}"))
}

fn resolution_fixed_point() -> Outcome {
    let n = effective_directions(&InterpolationConfig::default(), &ActuatorRing::default());
    check(n == 24, format!("{n} effective directions"))
}

fn frame(tick: u32, drives: [f64; MOTOR_COUNT]) -> ActuatorFrame {
    ActuatorFrame { tick, drives }
}

/// Expected timeline for pulses of `on` ticks every `period` ticks.
fn pulses(on: u32, period: u32, duration: u32, drives: [f64; MOTOR_COUNT]) -> ActuatorTimeline {
    let mut frames = Vec::new();
    let mut t = 0;
    while t < duration {
        frames.push(frame(t, drives));
        frames.push(frame((t + on).min(duration), [0.0; MOTOR_COUNT]));
        t += period;
    }
    ActuatorTimeline::new(frames, duration)
}

fn arc(labels: &[MotorLabel], v: f64) -> [f64; MOTOR_COUNT] {
    let mut d = [0.0; MOTOR_COUNT];
    for m in labels {
        d[m.index()] = v;
    }
    d
}

fn pattern_timing() -> Outcome {
    let cfg = GuidanceConfig::default();
    let mut f = Failures::default();
    let all = [3.0; MOTOR_COUNT];
    let at_20 = phantom_interpolate(20.0, &cfg.interpolation, &ActuatorRing::default()).to_drive_array();

    let golden: Vec<(CueCategory, f64, ActuatorTimeline)> = vec![
        // 0.2 s on, one pulse per tier interval
        (CueCategory::move_to(20.0, DistanceTier::Far), 3.0, pulses(20, 100, 300, at_20)),
        (CueCategory::move_to(20.0, DistanceTier::Medium), 2.1, pulses(20, 70, 210, at_20)),
        (CueCategory::move_to(20.0, DistanceTier::Close), 1.2, pulses(20, 40, 120, at_20)),
        (CueCategory::MoveUp, 1.0, pulses(10, 50, 100, arc(&TOP_ARC, 3.0))),
        (CueCategory::MoveDown, 1.0, pulses(10, 50, 100, arc(&BOTTOM_ARC, 3.0))),
        (
            CueCategory::Pause,
            1.0,
            ActuatorTimeline::new(
                vec![frame(0, all), frame(10, [0.0; 12]), frame(20, all), frame(30, [0.0; 12])],
                100,
            ),
        ),
        (
            CueCategory::Arrived,
            3.0,
            ActuatorTimeline::new(vec![frame(0, all), frame(300, [0.0; 12])], 300),
        ),
    ];
    for (cue, duration, expected) in &golden {
        let a = encode(*cue, *duration, &cfg).map(|c| c.timeline);
        let b = encode(*cue, *duration, &cfg).map(|c| c.timeline);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                f.require(&a == expected, || format!("{cue:?} timeline differs from golden"));
                f.require(a.to_csv() == b.to_csv() && a.to_csv() == expected.to_csv(), || {
                    format!("{cue:?} CSV not byte-identical")
                });
            }
            (Err(e), _) | (_, Err(e)) => f.0.push(format!("{cue:?}: {e}")),
        }
    }
    // frozen bytes for one correction cue
    let move_up = encode(CueCategory::MoveUp, 1.0, &cfg).map(|c| c.timeline.to_csv()).unwrap_or_default();
    let frozen = "t_s,A,B,C,D,E,F,G,H,I,J,K,L\n\
0.00,3.000,3.000,3.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,3.000,3.000\n\
0.10,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000\n\
0.50,3.000,3.000,3.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,3.000,3.000\n\
0.60,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000,0.000\n";
    f.require(move_up == frozen, || format!("MoveUp CSV bytes changed:\n{move_up}"));
    f.into_outcome(format!("{} golden timelines identical at 10 ms ticks", golden.len()))
}

fn decoder_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = GuidanceConfig::default();
    let categories = [CueKind::MoveTo, CueKind::MoveUp, CueKind::MoveDown, CueKind::Pause, CueKind::Arrived];
    let mut cases = 0usize;
    let mut category_misses = Vec::new();
    let mut angle_misses: Vec<(f64, f64)> = Vec::new();
    let mut worst_angle: f64 = 0.0;
    for kind in categories {
        for deg in 0..360 {
            for tier in DistanceTier::ALL {
                cases += 1;
                let cue = match kind {
                    CueKind::MoveTo => CueCategory::move_to(deg as f64, tier),
                    CueKind::MoveUp => CueCategory::MoveUp,
                    CueKind::MoveDown => CueCategory::MoveDown,
                    CueKind::Pause => CueCategory::Pause,
                    CueKind::Arrived => CueCategory::Arrived,
                };
                let decoded = encode(cue, PRESENTATION_S, &cfg).and_then(|c| decode(&c.timeline, &cfg));
                match (cue, decoded) {
                    (CueCategory::MoveTo { angle, tier }, Ok((CueCategory::MoveTo { angle: got, tier: got_tier }, _))) => {
                        if got_tier != tier {
                            category_misses.push(format!("{cue:?} tier → {got_tier}"));
                        }
                        let err = circular_distance(angle, got);
                        worst_angle = worst_angle.max(err);
                        if err > 7.5 {
                            angle_misses.push((angle, got));
                        }
                    }
                    (_, Ok((got, _))) if got.kind() == cue.kind() => {}
                    (_, other) => category_misses.push(format!("{cue:?} → {other:?}")),
                }
            }
        }
    }
    let identity = confusion_matrix(&experiment1_schedule(1), 1, &NoiseSpec::none(), &cfg, 1)
        .map(|m| m.is_identity())
        .unwrap_or(false);
    let elapsed = start.elapsed();

    let mut f = Failures::default();
    f.require(category_misses.is_empty(), || {
        format!("{} category/tier misses, e.g. {}", category_misses.len(), category_misses[0])
    });
    f.require(angle_misses.is_empty(), || {
        let distinct: BTreeSet<i64> = angle_misses.iter().map(|(a, _)| *a as i64).collect();
        format!(
            "angle outside ±7.5° for {} of 1080 move-to cases ({} angles, e.g. {}°→{}°, worst {worst_angle:.1}°): \
             directions snapped to a single motor decode to that motor's angle",
            angle_misses.len(),
            distinct.len(),
            angle_misses[0].0,
            angle_misses[0].1
        )
    });
    f.require(identity, || "zero-noise confusion matrix is not the identity".into());
    within_budget(&mut f, elapsed, Duration::from_secs(30));
    f.into_outcome(format!(
        "{cases} cases, categories and tiers 100%, worst angle error {worst_angle:.2}°, identity matrix, {elapsed:.2?}"
    ))
}

fn controller(target: Vec3) -> GuidanceController {
    GuidanceController::new(target, OperatingPlane::horizontal(), GuidanceConfig::default(), ReferenceFrameMode::WristUp)
        .expect("valid controller")
}

fn state_machine() -> Outcome {
    let mut f = Failures::default();
    let dt = 1.0 / 60.0;
    let target = Vec3::new(0.0, 80.0, 0.0);

    // scenario 1: +7 mm above the plane
    {
        let mut c = controller(target);
        let out = c.step(ToolState::new(Vec3::new(0.0, 0.0, 7.0), 0.0));
        let ok = matches!(&out, Ok(o) if o.state == GuidanceState::CorrectDown && o.cue == Some(CueCategory::MoveDown));
        f.require(ok, || format!("+7 mm gave {out:?}"));
        let lit = encode(CueCategory::MoveDown, 0.5, c.config())
            .map(|tl| tl.frames()[0].active_set())
            .unwrap_or_default();
        let expected: BTreeSet<usize> = BOTTOM_ARC.iter().map(|m| m.index()).collect();
        f.require(lit == expected, || format!("MoveDown lit {lit:?}"));
    }
    // scenario 2: back from below the plane → Pausing, then planar guiding
    {
        let mut c = controller(target);
        let mut seen = Vec::new();
        let mut t = 0.0;
        for z in [-7.0, -6.0, 0.0] {
            if let Ok(o) = c.step(ToolState::new(Vec3::new(0.0, 0.0, z), t)) {
                seen.push((o.state, o.cue));
            }
            t += dt;
        }
        let mut resumed = None;
        while t < 3.0 {
            if let Ok(o) = c.step(ToolState::new(Vec3::ZERO, t)) {
                if let GuidanceState::PlanarGuiding(_) = o.state {
                    resumed = Some((t, o.cue));
                    break;
                }
            }
            t += dt;
        }
        let ok = seen.len() == 3
            && seen[0] == (GuidanceState::CorrectUp, Some(CueCategory::MoveUp))
            && matches!(seen[2], (GuidanceState::Pausing { .. }, Some(CueCategory::Pause)))
            && matches!(resumed, Some((_, Some(CueCategory::MoveTo { .. }))));
        f.require(ok, || format!("return-to-plane sequence {seen:?}, resumed {resumed:?}"));
    }
    // scenario 3: 8 mm from the target in plane → Arrived for 3 s, then Done
    {
        let mut c = controller(target);
        let near = target - Vec3::new(0.0, 8.0, 0.0);
        let first = c.step(ToolState::new(near, 0.0));
        let ok = matches!(&first, Ok(o) if o.state == GuidanceState::Arrived && o.cue == Some(CueCategory::Arrived));
        f.require(ok, || format!("8 mm gave {first:?}"));
        let mut done_at = None;
        let mut k = 1;
        while done_at.is_none() && k < 400 {
            let t = k as f64 * dt;
            if let Ok(o) = c.step(ToolState::new(near, t)) {
                if o.state == GuidanceState::Done {
                    done_at = Some(t);
                }
            }
            k += 1;
        }
        f.require(done_at.is_some_and(|t| (3.0..3.0 + dt + 1e-9).contains(&t)), || {
            format!("Done at {done_at:?}, expected 3 s after arrival")
        });
    }
    // straight approach to a Medium target
    {
        let target = OperatingPlane::horizontal().point_at(30.0, 40.0);
        let stream: Vec<ToolState> = (0..=600).map(|k| {
            let t = k as f64 * dt;
            ToolState::new(target * (t / 4.0).min(1.0), t)
        }).collect();
        let modes: Vec<String> = run_session(stream, target, OperatingPlane::horizontal(), GuidanceConfig::default(), ReferenceFrameMode::WristUp)
            .map(|log| {
                let mut m: Vec<String> = log.events.iter().map(|e| e.to.to_string()).collect();
                m.dedup();
                m
            })
            .unwrap_or_default();
        f.require(modes == ["planar_guiding:medium", "planar_guiding:close", "arrived", "done"], || {
            format!("straight approach modes {modes:?}")
        });
    }

    // ±5.5 mm oscillation, 4 s period: one entry per excursion past 5 mm and
    // one exit per return inside 4 mm, nothing else
    {
        let mut c = controller(Vec3::new(0.0, 200.0, 0.0));
        let mut prev_state = c.state();
        let mut prev_z: f64 = 0.0;
        let mut outside = false;
        let (mut entries, mut exits, mut excursions, mut returns) = (0, 0, 0, 0);
        for k in 0..(60 * 40) {
            let t = k as f64 * dt;
            let z = 5.5 * (2.0 * std::f64::consts::PI * t / 4.0).sin();
            let Ok(out) = c.step(ToolState::new(Vec3::new(0.0, 0.0, z), t)) else {
                f.0.push("oscillation step failed".into());
                break;
            };
            if z.abs() > 5.0 && prev_z.abs() <= 5.0 {
                excursions += 1;
                outside = true;
            }
            if outside && z.abs() <= 4.0 {
                returns += 1;
                outside = false;
            }
            let was = prev_state.is_correcting();
            let is = out.state.is_correcting();
            if is && !was {
                entries += 1;
                f.require(z.abs() > 5.0 && prev_z.abs() <= 5.0, || format!("entered correction at z={z:.3}"));
            }
            if was && !is {
                exits += 1;
                f.require(z.abs() <= 4.0, || format!("left correction at z={z:.3}"));
            }
            prev_state = out.state;
            prev_z = z;
        }
        f.require(entries == excursions && exits == returns && entries == 20, || {
            format!("oscillation: {entries} entries/{excursions} excursions, {exits} exits/{returns} returns")
        });
    }
    // hovering at 5 ± 0.4 mm: exactly one transition with hysteresis
    {
        let mut c = controller(Vec3::new(0.0, 200.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut changes = 0;
        let mut prev = c.state();
        for k in 0..3000 {
            let z = 5.0 + rng.random_range(-0.4..0.4);
            if let Ok(o) = c.step(ToolState::new(Vec3::new(0.0, 0.0, z), k as f64 * dt)) {
                if o.state.is_correcting() != prev.is_correcting() {
                    changes += 1;
                }
                prev = o.state;
            }
        }
        f.require(changes == 1, || format!("hovering at the margin caused {changes} correction toggles"));
    }

    // fuzz: arrival priority and Pause only after a correction
    {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut c = controller(Vec3::new(0.0, 40.0, 0.0));
        let mut t = 0.0;
        let mut prev = c.state();
        let mut arrivals = 0;
        for _ in 0..10_000 {
            t += rng.random_range(0.005..0.05);
            let tip = Vec3::new(
                rng.random_range(-15.0..15.0),
                rng.random_range(25.0..55.0),
                rng.random_range(-9.0..9.0),
            );
            let Ok(out) = c.step(ToolState::new(tip, t)) else {
                f.0.push("fuzz step failed".into());
                break;
            };
            let d = tip.distance(c.target());
            if d <= 10.0 {
                f.require(matches!(out.state, GuidanceState::Arrived | GuidanceState::Done), || {
                    format!("within {d:.2} mm but state {}", out.state)
                });
            }
            if out.state == GuidanceState::Arrived && prev != GuidanceState::Arrived {
                arrivals += 1;
            }
            if out.cue == Some(CueCategory::Pause) {
                f.require(prev.is_correcting(), || format!("Pause issued from {prev}"));
            }
            if out.state == GuidanceState::Done {
                c = controller(Vec3::new(0.0, 40.0, 0.0));
                t = 0.0;
                prev = c.state();
                continue;
            }
            prev = out.state;
        }
        f.require(arrivals > 0, || "fuzz never reached the target".into());
    }
    f.into_outcome("3 step scenarios, straight approach, 20/20 clean oscillation crossings, 10,000 fuzz steps".into())
}

fn closed_loop() -> Outcome {
    let start = Instant::now();
    let plane = OperatingPlane::horizontal();
    let cfg = GuidanceConfig::default();
    let field = generate_field(plane, ZoneSet::default());
    let mut f = Failures::default();

    for (kind, condition) in [(AgentKind::CueFollower, Condition::HapticsOnly), (AgentKind::Combined, Condition::ARPlusHaptics)] {
        let agent = AgentSpec::noise_free(kind);
        for t in &field.targets {
            match simulate_trial(&agent, condition, t, &plane, &cfg) {
                Ok(r) => f.require(r.status == TrialStatus::Confirmed && r.end_point_deviation == 0.0, || {
                    format!("{kind:?} {}°/{}: {:?}, deviation {}", t.direction_deg, t.zone, r.status, r.end_point_deviation)
                }),
                Err(e) => f.0.push(e.to_string()),
            }
        }
    }

    let visual = AgentSpec::noise_free(AgentKind::DirectVisual);
    let mut worst: f64 = 0.0;
    for t in &field.targets {
        if let Ok(r) = simulate_trial(&visual, Condition::AROnly, t, &plane, &cfg) {
            let expected = field.zones.radius(t.zone) / visual.speed + visual.confirm_delay;
            worst = worst.max((r.time_to_target - expected).abs());
            f.require(r.end_point_deviation == 0.0, || format!("direct visual deviation {}", r.end_point_deviation));
        }
    }
    f.require(worst <= 0.01 + 1e-9, || format!("direct visual timing off by {worst:.4} s"));

    // median time per zone over 30 seeds with heading noise
    let mut times: [Vec<f64>; 3] = Default::default();
    for seed in 0..30u64 {
        let agent = AgentSpec {
            angular_noise_sd: 5.0,
            seed,
            ..AgentSpec::new(AgentKind::CueFollower)
        };
        for t in &field.targets {
            if let Ok(r) = simulate_trial(&agent, Condition::HapticsOnly, t, &plane, &cfg) {
                times[t.zone as usize].push(r.time_to_target);
            }
        }
    }
    let medians: Vec<f64> = times
        .iter_mut()
        .map(|v| {
            v.sort_by(f64::total_cmp);
            v.get(v.len() / 2).copied().unwrap_or(f64::NAN)
        })
        .collect();
    f.require(medians[0] <= medians[1] && medians[1] <= medians[2], || {
        format!("median times T3/T2/T1 = {medians:?}")
    });
    let elapsed = start.elapsed();
    within_budget(&mut f, elapsed, Duration::from_secs(120));
    f.into_outcome(format!(
        "216/216 noise-free guided trials at deviation 0, direct-visual timing within {worst:.4} s, \
         medians T3 {:.2} ≤ T2 {:.2} ≤ T1 {:.2} s, {elapsed:.2?}",
        medians[0], medians[1], medians[2]
    ))
}

fn metrics_fixed_points() -> Outcome {
    let mut f = Failures::default();
    for (d, expected) in [(9.0, 0.0), (10.0, 0.0), (15.0, 5.0)] {
        let got = end_point_deviation(d, 10.0);
        f.require(got == expected, || format!("end_point_deviation({d}) = {got}"));
    }
    let spec = ExperimentSpec {
        participants: 27,
        seed: 1,
        ..Default::default()
    };
    match run_experiment(&spec) {
        Ok(results) => {
            f.require(results.records.len() == 972, || format!("{} records", results.records.len()));
            for p in 0..27 {
                for c in Condition::ALL {
                    let n = results.records.iter().filter(|r| r.participant_id == p && r.condition == c).count();
                    f.require(n == 12, || format!("participant {p} {c}: {n} trials"));
                }
            }
            let replay = ExperimentSpec::from_manifest_text(&spec.to_manifest_text())
                .map_err(|e| e.to_string())
                .and_then(|s| run_experiment(&s).map_err(|e| e.to_string()));
            match replay {
                Ok(again) => f.require(again.results_csv() == results.results_csv(), || {
                    "manifest replay produced different CSV bytes".into()
                }),
                Err(e) => f.0.push(e),
            }
        }
        Err(e) => f.0.push(e.to_string()),
    }
    f.into_outcome("9→0, 10→0, 15→5; 972 records, 12 per condition per participant, manifest replay byte-identical".into())
}

fn wire_codec() -> Outcome {
    let mut f = Failures::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10_000 {
        let frame = DriveFrame {
            seq: rng.random(),
            duties: rng.random(),
        };
        let bytes = encode_frame(&frame);
        f.require(decode_frame(&bytes) == Ok(frame), || format!("round trip failed for {frame:?}"));
    }
    let base = encode_frame(&DriveFrame {
        seq: 42,
        duties: [0, 17, 34, 51, 68, 85, 102, 119, 136, 153, 200, 255],
    });
    let mut detected = 0;
    for pos in 0..FRAME_LEN {
        for delta in 1..=255u8 {
            let mut b = base;
            b[pos] ^= delta;
            match decode_frame(&b) {
                Err(FrameError::BadSof(_) | FrameError::BadEof(_) | FrameError::BadVersion(_) | FrameError::BadChecksum { .. }) => {
                    detected += 1
                }
                other => f.0.push(format!("byte {pos} ^ {delta:#04x} → {other:?}")),
            }
        }
    }
    f.into_outcome(format!("10,000 round trips, {detected}/{} single-byte corruptions detected", FRAME_LEN * 255))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("interpolation exactness", interpolation_exactness),
        ("resolution fixed point", resolution_fixed_point),
        ("pattern timing", pattern_timing),
        ("decoder oracle", decoder_oracle),
        ("state machine", state_machine),
        ("closed-loop soundness", closed_loop),
        ("metrics fixed points", metrics_fixed_points),
        ("wire codec", wire_codec),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = run();
        let tag = if outcome.ok { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {}", outcome.detail);
        failed += usize::from(!outcome.ok);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
