// Cue identification with the machine decoder as the observer: the
// 64-trial schedule, clean and under frame loss, jitter and attenuation.
//
// cargo run --release --example recognition

use std::error::Error;

use wristguide::config::GuidanceConfig;
use wristguide::recognition::{confusion_matrix, experiment1_schedule, NoiseSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cfg = GuidanceConfig::default();
    let schedule = experiment1_schedule(7);

    let clean = confusion_matrix(&schedule, 1, &NoiseSpec::none(), &cfg, 7)?;
    println!("clean:\n{}", clean.to_csv());
    if !clean.is_identity() {
        return Err("clean confusion matrix should be the identity".into());
    }

    let noise = NoiseSpec {
        drop_probability: 0.1,
        jitter_ticks: 2,
        attenuation: 0.3,
    };
    let noisy = confusion_matrix(&schedule, 20, &noise, &cfg, 7)?;
    println!("drop 10%, jitter ±2 ticks, 30% attenuation:\n{}", noisy.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
