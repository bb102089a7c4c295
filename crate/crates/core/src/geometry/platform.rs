use super::{EarthRotation, GeometryError, Vec3, EARTH_MU, EARTH_RADIUS_M, GEO_ALTITUDE_M};

pub const LEO_ALTITUDE_RANGE_M: (f64, f64) = (200_000.0, 2_000_000.0);
pub const HAPS_ALTITUDE_RANGE_M: (f64, f64) = (15_000.0, 25_000.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlatformKind {
    GroundSite,
    Haps,
    Drone,
    LeoCircular,
    Geo,
}

impl PlatformKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlatformKind::GroundSite => "GROUND_SITE",
            PlatformKind::Haps => "HAPS",
            PlatformKind::Drone => "DRONE",
            PlatformKind::LeoCircular => "LEO_CIRCULAR",
            PlatformKind::Geo => "GEO",
        }
    }

    /// Platforms that sit inside the absorbing atmosphere.
    pub fn is_sub_atmospheric(self) -> bool {
        matches!(self, PlatformKind::GroundSite | PlatformKind::Drone)
    }
}

impl std::str::FromStr for PlatformKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "GROUND_SITE" => PlatformKind::GroundSite,
            "HAPS" => PlatformKind::Haps,
            "DRONE" => PlatformKind::Drone,
            "LEO_CIRCULAR" => PlatformKind::LeoCircular,
            "GEO" => PlatformKind::Geo,
            other => {
                return Err(GeometryError::InvalidSpec(format!(
                    "unknown platform kind {other:?}"
                )))
            }
        })
    }
}

/// One point of a drone track. The drone flies straight (in latitude and
/// longitude) between consecutive waypoints and holds at the ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t_s: f64,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlatformSpec {
    GroundSite {
        latitude_deg: f64,
        longitude_deg: f64,
        altitude_m: f64,
    },
    Haps {
        latitude_deg: f64,
        longitude_deg: f64,
        altitude_m: f64,
    },
    Drone {
        altitude_m: f64,
        waypoints: Vec<Waypoint>,
    },
    LeoCircular {
        altitude_m: f64,
        inclination_deg: f64,
        raan_deg: f64,
        phase_deg: f64,
    },
    Geo {
        longitude_deg: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformState {
    pub t_s: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

impl PlatformSpec {
    pub fn kind(&self) -> PlatformKind {
        match self {
            PlatformSpec::GroundSite { .. } => PlatformKind::GroundSite,
            PlatformSpec::Haps { .. } => PlatformKind::Haps,
            PlatformSpec::Drone { .. } => PlatformKind::Drone,
            PlatformSpec::LeoCircular { .. } => PlatformKind::LeoCircular,
            PlatformSpec::Geo { .. } => PlatformKind::Geo,
        }
    }

    pub fn altitude_m(&self) -> f64 {
        match *self {
            PlatformSpec::GroundSite { altitude_m, .. }
            | PlatformSpec::Haps { altitude_m, .. }
            | PlatformSpec::Drone { altitude_m, .. }
            | PlatformSpec::LeoCircular { altitude_m, .. } => altitude_m,
            PlatformSpec::Geo { .. } => GEO_ALTITUDE_M,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidSpec(msg));
        let alt = self.altitude_m();
        if !alt.is_finite() || alt < 0.0 {
            return bad(format!("altitude {alt} m must be >= 0"));
        }
        match self {
            PlatformSpec::GroundSite {
                latitude_deg,
                longitude_deg,
                ..
            } => check_lat_lon(*latitude_deg, *longitude_deg),
            PlatformSpec::Haps {
                latitude_deg,
                longitude_deg,
                altitude_m,
            } => {
                let (lo, hi) = HAPS_ALTITUDE_RANGE_M;
                if !(lo..=hi).contains(altitude_m) {
                    return bad(format!("HAPS altitude {altitude_m} m outside [{lo}, {hi}] m"));
                }
                check_lat_lon(*latitude_deg, *longitude_deg)
            }
            PlatformSpec::Drone { waypoints, .. } => {
                if waypoints.is_empty() {
                    return bad("drone track needs at least one waypoint".into());
                }
                for w in waypoints {
                    check_lat_lon(w.latitude_deg, w.longitude_deg)?;
                    if !w.t_s.is_finite() {
                        return bad("waypoint time must be finite".into());
                    }
                }
                if waypoints.windows(2).any(|p| p[1].t_s <= p[0].t_s) {
                    return bad("waypoint times must be strictly increasing".into());
                }
                Ok(())
            }
            PlatformSpec::LeoCircular {
                altitude_m,
                inclination_deg,
                raan_deg,
                phase_deg,
            } => {
                let (lo, hi) = LEO_ALTITUDE_RANGE_M;
                if !(lo..=hi).contains(altitude_m) {
                    return bad(format!("LEO altitude {altitude_m} m outside [{lo}, {hi}] m"));
                }
                if !(0.0..=180.0).contains(inclination_deg) {
                    return bad(format!("inclination {inclination_deg} deg outside [0, 180]"));
                }
                if !raan_deg.is_finite() || !phase_deg.is_finite() {
                    return bad("orbit angles must be finite".into());
                }
                Ok(())
            }
            PlatformSpec::Geo { longitude_deg } => check_lat_lon(0.0, *longitude_deg),
        }
    }
}

fn check_lat_lon(lat: f64, lon: f64) -> Result<(), GeometryError> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(GeometryError::InvalidSpec(format!(
            "latitude {lat} deg outside [-90, 90]"
        )));
    }
    if !(-180.0..180.0).contains(&lon) {
        return Err(GeometryError::InvalidSpec(format!(
            "longitude {lon} deg outside [-180, 180)"
        )));
    }
    Ok(())
}

/// Earth-fixed point at geocentric latitude/longitude (radians) and radius,
/// rotated by the Earth angle at `t`.
fn earth_fixed(lat: f64, lon: f64, radius: f64, t: f64, rotation: EarthRotation) -> (Vec3, Vec3) {
    let w = rotation.rate();
    let lon = lon + w * t;
    let (slat, clat) = lat.sin_cos();
    let (slon, clon) = lon.sin_cos();
    let pos = Vec3::new(radius * clat * clon, radius * clat * slon, radius * slat);
    let vel = Vec3::new(-w * pos.y, w * pos.x, 0.0);
    (pos, vel)
}

/// State of a platform at time `t` seconds.
pub fn propagate(
    spec: &PlatformSpec,
    t: f64,
    rotation: EarthRotation,
) -> Result<PlatformState, GeometryError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(GeometryError::InvalidArgument(format!(
            "propagation time {t} s must be finite and >= 0"
        )));
    }
    spec.validate()?;
    let (position, velocity) = match spec {
        PlatformSpec::GroundSite {
            latitude_deg,
            longitude_deg,
            altitude_m,
        }
        | PlatformSpec::Haps {
            latitude_deg,
            longitude_deg,
            altitude_m,
        } => earth_fixed(
            latitude_deg.to_radians(),
            longitude_deg.to_radians(),
            EARTH_RADIUS_M + altitude_m,
            t,
            rotation,
        ),
        PlatformSpec::Geo { longitude_deg } => earth_fixed(
            0.0,
            longitude_deg.to_radians(),
            EARTH_RADIUS_M + GEO_ALTITUDE_M,
            t,
            rotation,
        ),
        PlatformSpec::Drone {
            altitude_m,
            waypoints,
        } => drone_state(waypoints, *altitude_m, t, rotation),
        PlatformSpec::LeoCircular {
            altitude_m,
            inclination_deg,
            raan_deg,
            phase_deg,
        } => circular_orbit(
            EARTH_RADIUS_M + altitude_m,
            inclination_deg.to_radians(),
            raan_deg.to_radians(),
            phase_deg.to_radians(),
            t,
        ),
    };
    Ok(PlatformState {
        t_s: t,
        position,
        velocity,
    })
}

fn circular_orbit(a: f64, inc: f64, raan: f64, phase: f64, t: f64) -> (Vec3, Vec3) {
    let n = (EARTH_MU / (a * a * a)).sqrt();
    let u = phase + n * t;
    let (su, cu) = u.sin_cos();
    let (si, ci) = inc.sin_cos();
    let (so, co) = raan.sin_cos();
    // In-plane unit vectors along the ascending node and 90 deg ahead of it.
    let p = Vec3::new(co, so, 0.0);
    let q = Vec3::new(-so * ci, co * ci, si);
    let pos = (p * cu + q * su) * a;
    let vel = (q * cu - p * su) * (a * n);
    (pos, vel)
}

fn drone_state(waypoints: &[Waypoint], alt: f64, t: f64, rotation: EarthRotation) -> (Vec3, Vec3) {
    let r = EARTH_RADIUS_M + alt;
    let first = waypoints[0];
    let last = waypoints[waypoints.len() - 1];
    let (lat, lon, dlat, dlon) = if t <= first.t_s {
        (first.latitude_deg, first.longitude_deg, 0.0, 0.0)
    } else if t >= last.t_s {
        (last.latitude_deg, last.longitude_deg, 0.0, 0.0)
    } else {
        let i = waypoints.partition_point(|w| w.t_s <= t) - 1;
        let (w0, w1) = (waypoints[i], waypoints[i + 1]);
        let span = w1.t_s - w0.t_s;
        let f = (t - w0.t_s) / span;
        let dlat = (w1.latitude_deg - w0.latitude_deg) / span;
        let dlon = (w1.longitude_deg - w0.longitude_deg) / span;
        (
            w0.latitude_deg + f * (w1.latitude_deg - w0.latitude_deg),
            w0.longitude_deg + f * (w1.longitude_deg - w0.longitude_deg),
            dlat,
            dlon,
        )
    };
    let (lat, dlat) = (lat.to_radians(), dlat.to_radians());
    let (lon0, dlon) = (lon.to_radians(), dlon.to_radians());
    let (pos, rot_vel) = earth_fixed(lat, lon0, r, t, rotation);
    // Track velocity in the Earth-fixed frame, rotated into the output frame.
    let lon = lon0 + rotation.rate() * t;
    let (slat, clat) = lat.sin_cos();
    let (slon, clon) = lon.sin_cos();
    let track = Vec3::new(
        r * (-slat * clon * dlat - clat * slon * dlon),
        r * (-slat * slon * dlat + clat * clon * dlon),
        r * clat * dlat,
    );
    (pos, rot_vel + track)
}
