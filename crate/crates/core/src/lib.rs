//! Digital twin of a miniaturized free-space laser-communication terminal.
//!
//! The crate is organised by subsystem:
//!
//! - [`geometry`]: platform kinematics, link geometry, passes, point-ahead
//! - [`optics`]: telescope gain, divergence, Strehl, pointing and coupling
//! - [`amplifier`]: EDFA thermal-power model and calibration
//! - [`link_budget`]: itemized dB ledger and receiver sensitivity
//! - [`pat`]: pointing, acquisition and tracking simulation
//! - [`runner`]: scenario files, orchestration, CSV/JSON output and CLI

pub mod amplifier;
pub mod geometry;
pub mod link_budget;
pub mod optics;
pub mod pat;
pub mod runner;
