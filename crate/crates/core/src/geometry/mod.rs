//! Platform kinematics: circular-orbit propagation, static and waypoint
//! platforms, inter-platform link geometry, pass prediction and the
//! point-ahead angle.
//!
//! Frame: Earth-centred, spherical Earth of radius [`EARTH_RADIUS_M`]. With
//! [`EarthRotation::Off`] (the default) the Earth-fixed frame is inertial and
//! every Earth-fixed platform is static. With [`EarthRotation::On`] states are
//! expressed in the inertial frame and Earth-fixed platforms (ground, HAPS,
//! drone, GEO) co-rotate at [`EARTH_ROTATION_RAD_S`].

mod link;
mod passes;
mod platform;

pub use link::{
    azimuth_elevation, earth_blocks, link_geometry, point_ahead_light_time, point_ahead_series,
    tangent_components, LinkGeometry, PointAheadSample,
};
pub use passes::{elevation_at, predict_passes, PassWindow};
pub use platform::{propagate, PlatformKind, PlatformSpec, PlatformState, Waypoint};

use nalgebra::Vector3;
use thiserror::Error;

/// Mean Earth radius, metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
/// Earth gravitational parameter, m³/s².
pub const EARTH_MU: f64 = 3.986004418e14;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Sidereal rotation rate of the Earth, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_0e-5;
/// Geostationary altitude above the mean Earth radius, metres.
pub const GEO_ALTITUDE_M: f64 = 35_786_000.0;

pub type Vec3 = Vector3<f64>;

/// Whether Earth-fixed platforms rotate with the Earth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EarthRotation {
    #[default]
    Off,
    On,
}

impl EarthRotation {
    pub fn rate(self) -> f64 {
        match self {
            EarthRotation::Off => 0.0,
            EarthRotation::On => EARTH_ROTATION_RAD_S,
        }
    }
}

impl From<bool> for EarthRotation {
    fn from(on: bool) -> Self {
        if on {
            EarthRotation::On
        } else {
            EarthRotation::Off
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid platform: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate geometry: platforms are coincident")]
    Degenerate,
}

/// Orbital period of a circular orbit with semi-major axis `a` (metres).
pub fn orbital_period(semi_major_axis_m: f64) -> f64 {
    2.0 * std::f64::consts::PI * (semi_major_axis_m.powi(3) / EARTH_MU).sqrt()
}
