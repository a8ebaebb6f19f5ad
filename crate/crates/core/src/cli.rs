//! Command-line front end. The binary only forwards `std::env::args` here.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, KeyValues};
use crate::cue::{cue_segment_duration, decode, encode, ActuatorTimeline, CueCategory};
use crate::device::{self, DEFAULT_BAUD};
use crate::geometry::{DistanceTier, OperatingPlane};
use crate::harness::experiment::{run_experiment, ExperimentSpec};
use crate::harness::field::generate_field;
use crate::output::write_atomic;
use crate::session::{ResultsLog, Server, ServerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wristguide", version, about = "Vibrotactile wristband guidance engine")]
struct Cli {
    /// Print every configurable key with its default value and exit.
    #[arg(long)]
    print_config: bool,
    /// Key-value config file; any manifest key is accepted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the actuator timeline for one cue as CSV.
    Encode(EncodeArgs),
    /// Classify a timeline CSV.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run the simulated targeting experiment.
    Experiment(ExperimentArgs),
    /// Serve live guidance sessions over TCP (newline-delimited JSON).
    Serve {
        #[arg(long, default_value_t = 8787)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Append completed trials to this CSV.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Send a timeline to the wristband, or to a file of raw frames.
    Device(DeviceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CueArg {
    MoveTo,
    MoveUp,
    MoveDown,
    Pause,
    Arrived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TierArg {
    Far,
    Medium,
    Close,
}

impl From<TierArg> for DistanceTier {
    fn from(t: TierArg) -> Self {
        match t {
            TierArg::Far => DistanceTier::Far,
            TierArg::Medium => DistanceTier::Medium,
            TierArg::Close => DistanceTier::Close,
        }
    }
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long, value_enum)]
    cue: CueArg,
    /// Ring angle in degrees (move-to only).
    #[arg(long, allow_negative_numbers = true)]
    angle: Option<f64>,
    /// Distance tier (move-to only).
    #[arg(long, value_enum)]
    tier: Option<TierArg>,
    /// Seconds; defaults to one cue period. Pause and arrived have fixed lengths.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    participants: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reproduce a previous run from its manifest.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    #[arg(long, default_value = "experiment_out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct DeviceArgs {
    /// Timeline CSV to play.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Serial device, e.g. /dev/ttyACM0 (115200 8N1 by default).
    #[arg(long, conflicts_with = "mock")]
    serial_port: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BAUD)]
    baud: u32,
    /// Write raw frames to this file instead of a port.
    #[arg(long)]
    mock: Option<PathBuf>,
    /// Cue to play when no --replay file is given.
    #[arg(long, value_enum)]
    cue: Option<CueArg>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn load_spec(path: Option<&Path>) -> Result<ExperimentSpec, Failure> {
    let Some(path) = path else {
        return Ok(ExperimentSpec::default());
    };
    let parse = |text: &str| -> Result<ExperimentSpec, ConfigError> {
        let mut kv = KeyValues::parse(text)?;
        let mut spec = ExperimentSpec::default();
        spec.apply(&mut kv)?;
        kv.finish()?;
        spec.validate()?;
        Ok(spec)
    };
    parse(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cue_of(cue: CueArg, angle: Option<f64>, tier: Option<TierArg>) -> Result<CueCategory, Failure> {
    if cue != CueArg::MoveTo && (angle.is_some() || tier.is_some()) {
        return Err(Failure::Usage("--angle and --tier apply only to --cue move-to".into()));
    }
    Ok(match cue {
        CueArg::MoveTo => {
            let (Some(a), Some(t)) = (angle, tier) else {
                return Err(Failure::Usage("--cue move-to needs --angle and --tier".into()));
            };
            if !a.is_finite() {
                return Err(Failure::Usage("--angle must be finite".into()));
            }
            CueCategory::move_to(a, t.into())
        }
        CueArg::MoveUp => CueCategory::MoveUp,
        CueArg::MoveDown => CueCategory::MoveDown,
        CueArg::Pause => CueCategory::Pause,
        CueArg::Arrived => CueCategory::Arrived,
    })
}

fn describe(cue: &CueCategory) -> String {
    match cue {
        CueCategory::MoveTo { angle, tier } => format!("move_to angle={angle:.3} tier={tier}"),
        other => other.kind().as_str().to_string(),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let spec = load_spec(cli.config.as_deref())?;
    if cli.print_config {
        let text = spec.to_manifest_text();
        return out.write_all(text.as_bytes()).map_err(runtime);
    }
    let Some(command) = cli.command else {
        return Err(Failure::Usage("no subcommand given; see --help".into()));
    };
    let cfg = spec.cfg;
    match command {
        Command::Encode(a) => {
            let cue = cue_of(a.cue, a.angle, a.tier)?;
            if let Some(d) = a.duration {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Failure::Usage("--duration must be positive".into()));
                }
            }
            let duration = a.duration.unwrap_or_else(|| cue_segment_duration(&cue, &cfg));
            let tl = encode(cue, duration, &cfg).map_err(runtime)?;
            write_atomic(&a.out, tl.timeline.to_csv().as_bytes()).map_err(runtime)?;
            writeln!(out, "{} frames, {:.2} s -> {}", tl.frames().len(), tl.timeline.duration(), a.out.display())
                .map_err(runtime)
        }
        Command::Decode { input } => {
            let tl = ActuatorTimeline::from_csv(&read(&input)?).map_err(runtime)?;
            let (cue, confidence) = decode(&tl, &cfg).map_err(runtime)?;
            writeln!(out, "{} confidence={confidence:.3}", describe(&cue)).map_err(runtime)
        }
        Command::Experiment(a) => {
            let mut spec = match &a.manifest {
                Some(m) => ExperimentSpec::from_manifest_text(&read(m)?)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", m.display())))?,
                None => spec,
            };
            if let Some(p) = a.participants {
                spec.participants = p;
            }
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let results = run_experiment(&spec).map_err(runtime)?;
            let files = results.write_to_dir(&a.out_dir).map_err(runtime)?;
            writeln!(
                out,
                "{} trials, {} files -> {}",
                results.records.len(),
                files.len(),
                a.out_dir.display()
            )
            .map_err(runtime)
        }
        Command::Serve { port, host, results } => {
            let server = Server::bind(
                (host.as_str(), port),
                ServerConfig {
                    cfg,
                    field: generate_field(OperatingPlane::horizontal(), spec.zones),
                    seed: spec.seed,
                    per_condition: spec.per_condition,
                    results: results.map(ResultsLog::new),
                },
            )
            .map_err(runtime)?;
            let port = server.local_addr().map_err(runtime)?.port();
            writeln!(out, "READY {port}").map_err(runtime)?;
            out.flush().map_err(runtime)?;
            server.run().map_err(runtime)
        }
        Command::Device(a) => {
            if a.serial_port.is_none() && a.mock.is_none() {
                return Err(Failure::Usage("device needs --serial-port or --mock".into()));
            }
            let tl = match (&a.replay, a.cue) {
                (Some(p), None) => ActuatorTimeline::from_csv(&read(p)?).map_err(runtime)?,
                (None, Some(c)) => {
                    let cue = cue_of(c, None, None)
                        .map_err(|_| Failure::Usage("--cue move-to cannot be played directly; encode it first".into()))?;
                    encode(cue, cue_segment_duration(&cue, &cfg), &cfg).map_err(runtime)?.timeline
                }
                _ => return Err(Failure::Usage("device needs exactly one of --replay or --cue".into())),
            };
            let n = match (&a.mock, &a.serial_port) {
                (Some(path), _) => device::replay_to_file(&tl, path).map_err(runtime)?,
                (None, Some(port)) => {
                    let frames = device::stream_timeline(&tl, device::MIN_STREAM_RATE_HZ, 0).map_err(runtime)?;
                    let mut sink = device::SerialSink::open(port, a.baud).map_err(runtime)?;
                    device::play(&frames, &mut sink, true).map_err(runtime)?
                }
                (None, None) => unreachable!("checked above"),
            };
            writeln!(out, "{n} frames").map_err(runtime)
        }
    }
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("wristguide").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["encode", "--cue", "arrived"]).0, EXIT_USAGE);
        assert_eq!(call(&["encode", "--cue", "pause", "--angle", "20", "--out", "x.csv"]).0, EXIT_USAGE);
        assert_eq!(call(&["encode", "--cue", "move-to", "--angle", "20", "--out", "x.csv"]).0, EXIT_USAGE);
        assert_eq!(call(&["device", "--replay", "t.csv"]).0, EXIT_USAGE);
        assert_eq!(call(&[]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn missing_input_is_runtime_error() {
        let (code, _, err) = call(&["decode", "--in", "/nonexistent/t.csv"]);
        assert_eq!(code, EXIT_RUNTIME);
        assert!(err.contains("nonexistent"));
    }

    #[test]
    fn print_config_lists_defaults() {
        let (code, out, _) = call(&["--print-config"]);
        assert_eq!(code, EXIT_OK);
        for key in ["plane_margin = 5", "interval_far = 1", "zone_t1 = 90", "participants = 27", "v_max = 3"] {
            assert!(out.contains(key), "{key}");
        }
        assert!(ExperimentSpec::from_manifest_text(&out).is_ok());
    }

    #[test]
    fn encode_then_decode() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let ps = p.to_str().unwrap();
        let (code, _, err) = call(&["encode", "--cue", "move-to", "--angle", "-40", "--tier", "close", "--duration", "1.2", "--out", ps]);
        assert_eq!(code, EXIT_OK, "{err}");
        let (code, out, _) = call(&["decode", "--in", ps]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.trim(), "move_to angle=330.000 tier=close confidence=1.000");
    }
}
