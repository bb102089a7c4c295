//! Discrete-time pointing, acquisition and tracking.
//!
//! Angles live in the terminal's two tracking axes, measured relative to the
//! ephemeris-predicted line of sight. The gimbal is driven open-loop along
//! the predicted line-of-sight rate plus a PI correction from the coarse
//! detector; the fine-pointing mirror (FPM) removes what is left using the
//! fine detector. The point-ahead mirror (PAM) only offsets the transmit
//! beam.
//!
//! All loops share one clock at the FPM rate; the gimbal loop runs every
//! `fpm_rate / gimbal_rate` ticks.

mod config;
mod control;
mod disturbance;
mod sim;

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::Vector2;
use serde::Serialize;
use thiserror::Error;

pub use config::{PatConfig, PiGains, FPM_BANDWIDTH_HZ, GIMBAL_BANDWIDTH_HZ};
pub use control::{PatInput, PatState};
pub use disturbance::{DisturbanceModel, DisturbanceProcess, Sinusoid};
pub use sim::{
    run, run_with, LineOfSight, LosSample, PatSample, PatSimulator, PatTimeSeries, RunSpec, StaticLos,
};

use crate::geometry::GeometryError;

/// Two-axis small angle, radians.
pub type Angle2 = Vector2<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatError {
    #[error("invalid PAT configuration {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("{op} called in mode {found}")]
    WrongMode { op: &'static str, found: Mode },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("line-of-sight provider failed: {0}")]
    LineOfSight(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Idle,
    Acquire,
    CoarseTrack,
    FineTrack,
    Linked,
    Lost,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Idle,
        Mode::Acquire,
        Mode::CoarseTrack,
        Mode::FineTrack,
        Mode::Linked,
        Mode::Lost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Idle => "IDLE",
            Mode::Acquire => "ACQUIRE",
            Mode::CoarseTrack => "COARSE_TRACK",
            Mode::FineTrack => "FINE_TRACK",
            Mode::Linked => "LINKED",
            Mode::Lost => "LOST",
        }
    }

    pub fn is_tracking(self) -> bool {
        matches!(self, Mode::CoarseTrack | Mode::FineTrack | Mode::Linked)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

/// Every allowed mode transition.
pub fn mode_graph() -> BTreeSet<(Mode, Mode)> {
    use Mode::*;
    let mut g: BTreeSet<_> = [
        (Idle, Acquire),
        (Acquire, CoarseTrack),
        (CoarseTrack, FineTrack),
        (FineTrack, Linked),
        (Linked, FineTrack),
        (FineTrack, CoarseTrack),
        (Lost, Acquire),
    ]
    .into_iter()
    .collect();
    for m in Mode::ALL {
        if m != Lost {
            g.insert((m, Lost));
        }
    }
    g
}
