// Drive the controller with a scripted tool path: drift above the plane,
// come back, then walk to the target. Prints the event log and the
// actuator timeline the wristband would have played.
//
// cargo run --example guidance_session

use std::error::Error;

use wristguide::config::GuidanceConfig;
use wristguide::controller::{events_to_csv, run_session, GuidanceState};
use wristguide::geometry::{OperatingPlane, ReferenceFrameMode, ToolState, Vec3};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let plane = OperatingPlane::horizontal();
    let target = plane.point_at(40.0, 60.0);
    let rate = 60.0;

    let mut stream = Vec::new();
    let mut t = 0.0;
    let mut push = |tip: Vec3, stream: &mut Vec<ToolState>| {
        stream.push(ToolState::new(tip, t));
        t += 1.0 / rate;
    };
    // lift 8 mm over one second, hold, settle back
    for k in 0..60 {
        push(Vec3::new(0.0, 0.0, 8.0 * k as f64 / 59.0), &mut stream);
    }
    for _ in 0..30 {
        push(Vec3::new(0.0, 0.0, 8.0), &mut stream);
    }
    for k in 0..60 {
        push(Vec3::new(0.0, 0.0, 8.0 * (1.0 - k as f64 / 59.0)), &mut stream);
    }
    // straight to the target at 30 mm/s, then wait for the arrival cue
    for k in 0..=120 {
        push(target * (k as f64 / 120.0), &mut stream);
    }
    for _ in 0..240 {
        push(target, &mut stream);
    }

    let log = run_session(stream, target, plane, GuidanceConfig::default(), ReferenceFrameMode::WristUp)?;
    print!("{}", events_to_csv(&log.events));
    println!("timeline: {} change frames, {:.2} s", log.timeline.frames().len(), log.timeline.duration());

    let last = log.events.last().ok_or("no events")?;
    if last.to != GuidanceState::Done {
        return Err(format!("session ended in {}", last.to).into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
