// Start the session server on a free port and play one trial against it
// as a scripted client walking straight to the announced target.
//
// cargo run --example live_session

use std::error::Error;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;

use serde_json::{json, Value};
use wristguide::session::{Server, ServerConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let server = Server::bind("127.0.0.1:0", ServerConfig::default())?;
    let addr = server.local_addr()?;
    std::thread::spawn(move || server.run());

    let mut stream = TcpStream::connect(addr)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut recv = || -> Result<Value, Box<dyn Error>> {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        Ok(serde_json::from_str(&line)?)
    };

    writeln!(stream, "{}", json!({"type": "hello", "participant_id": 4, "condition": "ar_haptics"}))?;
    println!("<- {}", recv()?);
    let start = recv()?;
    println!("<- {start}");
    let target = &start["target"];
    let (tx, ty) = (target["x_mm"].as_f64().ok_or("no target")?, target["y_mm"].as_f64().ok_or("no target")?);

    let mut last_state = String::new();
    for k in 0..=300 {
        let s = (k as f64 / 150.0).min(1.0);
        let update = json!({"type": "tool_update", "t_s": k as f64 / 60.0, "x_mm": tx * s, "y_mm": ty * s, "z_mm": 0.0});
        writeln!(stream, "{update}")?;
        let cue = recv()?;
        let state = cue["state"].as_str().unwrap_or_default().to_string();
        if state != last_state {
            println!("t={:.2}s {state} motors={}", k as f64 / 60.0, cue["motors"]);
            last_state = state;
        }
    }
    writeln!(stream, "{}", json!({"type": "confirm"}))?;
    let result = recv()?;
    println!("<- {result}");
    if result["deviation_mm"].as_f64() != Some(0.0) {
        return Err("expected zero deviation".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
