// Sweep a commanded direction around the ring and show which motors carry
// it and at what voltage.
//
// cargo run --example phantom_sweep

use std::error::Error;

use wristguide::actuator::{
    effective_directions, phantom_interpolate, voltage_to_amplitude, voltage_to_duty, ActuatorRing,
    CalibrationTable, InterpolationConfig,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let ring = ActuatorRing::default();
    let cfg = InterpolationConfig::default();
    let table = CalibrationTable::default();

    println!("angle  motors       volts          amplitude m/s^2  duty");
    for angle in [0.0, 8.0, 12.0, 15.0, 20.0, 45.0, 100.0, 359.0] {
        let cmd = phantom_interpolate(angle, &cfg, &ring);
        let motors: String = cmd.drives.iter().map(|(m, _)| m.as_char()).collect();
        let volts: Vec<String> = cmd.drives.iter().map(|(_, v)| format!("{v:.3}")).collect();
        let amps: Vec<String> = cmd
            .drives
            .iter()
            .map(|(_, v)| voltage_to_amplitude(*v, &table).map(|a| format!("{a:.3}")))
            .collect::<Result<_, _>>()?;
        let duties: Vec<u8> = cmd.drives.iter().map(|(_, v)| voltage_to_duty(*v)).collect::<Result<_, _>>()?;
        println!(
            "{angle:5.1}  {motors:<11}  {:<13}  {:<15}  {duties:?}",
            volts.join("/"),
            amps.join("/")
        );
    }

    let n = effective_directions(&cfg, &ring);
    println!("distinct motor sets over a 1 degree sweep: {n}");
    if n != 24 {
        return Err(format!("expected 24 effective directions, got {n}").into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
