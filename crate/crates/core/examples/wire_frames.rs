// The serial wire format: encode a frame, show the bytes, corrupt it, and
// stream a whole cue as frames.
//
// cargo run --example wire_frames

use std::error::Error;

use wristguide::config::GuidanceConfig;
use wristguide::cue::{encode, CueCategory};
use wristguide::device::{decode_frame, encode_frame, stream_timeline, DriveFrame};
use wristguide::geometry::DistanceTier;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02X}")).collect::<Vec<_>>().join(" ")
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let frame = DriveFrame { seq: 7, duties: [153; 12] };
    let bytes = encode_frame(&frame);
    println!("frame: {}", hex(&bytes));
    assert_eq!(decode_frame(&bytes)?, frame);

    let mut bad = bytes;
    bad[9] ^= 0x04;
    println!("one flipped bit: {}", decode_frame(&bad).unwrap_err());

    let cfg = GuidanceConfig::default();
    let tl = encode(CueCategory::move_to(75.0, DistanceTier::Close), 1.2, &cfg)?.timeline;
    for f in stream_timeline(&tl, 100.0, 0)? {
        println!("t={:.2}s seq={:3} {}", f.tick as f64 * 0.01, f.frame.seq, hex(&f.frame.duties));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
