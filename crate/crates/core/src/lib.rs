//! Wrist-worn vibrotactile guidance: a 12-motor ring, phantom-sensation
//! interpolation, cue timelines, a closed-loop guidance controller, a
//! simulated targeting experiment, a serial wire format and a live session
//! service.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator;
pub mod cli;
pub mod config;
pub mod controller;
pub mod device;
pub mod cue;
pub mod geometry;
pub mod harness;
pub mod output;
pub mod recognition;
pub mod seeding;
pub mod session;
