// A small simulated targeting experiment: six participants, all three
// feedback conditions, results and summary tables written to a temp dir.
//
// cargo run --release --example targeting_experiment

use std::error::Error;

use wristguide::harness::experiment::{run_experiment, ExperimentSpec};
use wristguide::harness::{aggregate, GroupBy, Metric};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut spec = ExperimentSpec {
        participants: 6,
        seed: 11,
        ..Default::default()
    };
    // a slightly sloppy cue follower
    spec.agents[0].angular_noise_sd = 6.0;

    let results = run_experiment(&spec)?;
    println!("{} trials", results.records.len());
    for (by, metric) in [(GroupBy::Condition, Metric::DeviationMm), (GroupBy::ConditionZone, Metric::TimeS)] {
        println!("{} by {}", metric.as_str(), by.as_str());
        for g in aggregate(&results.records, by, metric)? {
            println!("  {:<22} mean {:7.3}  sd {:6.3}  n {}", g.group, g.mean, g.sd, g.n);
        }
    }

    let dir = std::env::temp_dir().join(format!("wristguide-example-{}", std::process::id()));
    let files = results.write_to_dir(&dir)?;
    println!("wrote {} files to {}", files.len(), dir.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
