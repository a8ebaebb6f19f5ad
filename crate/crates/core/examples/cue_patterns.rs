// Encode each cue category as a 10 ms actuator timeline, print it, and
// check the decoder recovers it.
//
// cargo run --example cue_patterns

use std::error::Error;

use wristguide::config::GuidanceConfig;
use wristguide::cue::{cue_segment_duration, decode, encode, CueCategory};
use wristguide::geometry::DistanceTier;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cfg = GuidanceConfig::default();
    let cues = [
        CueCategory::move_to(20.0, DistanceTier::Medium),
        CueCategory::MoveUp,
        CueCategory::MoveDown,
        CueCategory::Pause,
        CueCategory::Arrived,
    ];
    for cue in cues {
        let duration = match cue {
            CueCategory::MoveTo { .. } => 2.1,
            _ => cue_segment_duration(&cue, &cfg) * 2.0,
        };
        let tl = encode(cue, duration, &cfg)?;
        let (decoded, confidence) = decode(&tl.timeline, &cfg)?;
        println!("== {cue:?}: {} change frames over {:.2} s", tl.frames().len(), tl.timeline.duration());
        for line in tl.timeline.to_csv().lines().take(6) {
            println!("   {line}");
        }
        println!("   decoded as {decoded:?} (confidence {confidence:.2})");
        if decoded.kind() != cue.kind() {
            return Err(format!("{cue:?} decoded as {decoded:?}").into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
