use super::{
    propagate, EarthRotation, GeometryError, PlatformSpec, PlatformState, Vec3, EARTH_RADIUS_M,
    SPEED_OF_LIGHT,
};

/// Instantaneous geometry between two platforms, seen from `a` towards `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub range_m: f64,
    /// Elevation of the other platform above the local horizon of the lower
    /// (smaller geocentric radius) platform.
    pub elevation_rad: f64,
    /// Unit vector from `a` to `b`.
    pub line_of_sight: Vec3,
    /// Relative speed perpendicular to the line of sight.
    pub transverse_speed: f64,
    /// First-order point-ahead angle `2 v_t / c`.
    pub point_ahead_rad: f64,
    /// Unit vector perpendicular to the line of sight along the transverse
    /// relative velocity of `b` with respect to `a`; `None` when there is no
    /// transverse motion.
    pub point_ahead_dir: Option<Vec3>,
}

pub fn link_geometry(a: &PlatformState, b: &PlatformState) -> Result<LinkGeometry, GeometryError> {
    if (a.t_s - b.t_s).abs() > 1e-9 {
        return Err(GeometryError::InvalidArgument(format!(
            "states at different epochs ({} s vs {} s)",
            a.t_s, b.t_s
        )));
    }
    let delta = b.position - a.position;
    let range = delta.norm();
    if !(range > 1e-6) {
        return Err(GeometryError::Degenerate);
    }
    let los = delta / range;
    let v_rel = b.velocity - a.velocity;
    let v_perp = v_rel - los * v_rel.dot(&los);
    let v_t = v_perp.norm();
    let dir = (v_t > 0.0).then(|| v_perp / v_t);

    let (lower, towards_other) = if a.position.norm() <= b.position.norm() {
        (a.position, los)
    } else {
        (b.position, -los)
    };
    let up = lower / lower.norm();
    let elevation = up.dot(&towards_other).clamp(-1.0, 1.0).asin();

    Ok(LinkGeometry {
        range_m: range,
        elevation_rad: elevation,
        line_of_sight: los,
        transverse_speed: v_t,
        point_ahead_rad: 2.0 * v_t / SPEED_OF_LIGHT,
        point_ahead_dir: dir,
    })
}

/// Point-ahead angle from the light-time fixed points, assuming constant
/// relative velocity over the round trip.
///
/// The beam received at `a` left `b` one light time ago; the beam sent now
/// must meet `b` one light time ahead. The angle between those two relative
/// positions is the exact lead-ahead angle for straight-line relative motion.
pub fn point_ahead_light_time(a: &PlatformState, b: &PlatformState) -> Result<f64, GeometryError> {
    let p = b.position - a.position;
    if !(p.norm() > 1e-6) {
        return Err(GeometryError::Degenerate);
    }
    let v = b.velocity - a.velocity;
    let solve = |sign: f64| {
        let mut tau = p.norm() / SPEED_OF_LIGHT;
        for _ in 0..50 {
            let next = (p + v * (sign * tau)).norm() / SPEED_OF_LIGHT;
            if (next - tau).abs() <= 1e-18 * tau.max(1.0) {
                tau = next;
                break;
            }
            tau = next;
        }
        p + v * (sign * tau)
    };
    let retarded = solve(-1.0);
    let advanced = solve(1.0);
    Ok(retarded.cross(&advanced).norm().atan2(retarded.dot(&advanced)))
}

/// True when the straight segment between two positions passes below the
/// Earth's surface.
pub fn earth_blocks(a: &Vec3, b: &Vec3) -> bool {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return false;
    }
    let s = (-a.dot(&d) / len2).clamp(0.0, 1.0);
    let closest = a + d * s;
    // Endpoints on the surface (ground sites) do not count as blocking.
    let tol = 1.0;
    closest.norm() < EARTH_RADIUS_M - tol
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointAheadSample {
    pub t_s: f64,
    pub point_ahead_rad: f64,
    pub direction: Option<Vec3>,
}

/// Point-ahead angle sampled every `step` seconds over `[t0, t1]`.
pub fn point_ahead_series(
    a: &PlatformSpec,
    b: &PlatformSpec,
    rotation: EarthRotation,
    window: (f64, f64),
    step: f64,
) -> Result<Vec<PointAheadSample>, GeometryError> {
    let (t0, t1) = window;
    if !(step > 0.0) || !(t1 >= t0) {
        return Err(GeometryError::InvalidArgument(format!(
            "bad window [{t0}, {t1}] or step {step}"
        )));
    }
    let n = ((t1 - t0) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|k| {
            let t = t0 + k as f64 * step;
            let g = link_geometry(&propagate(a, t, rotation)?, &propagate(b, t, rotation)?)?;
            Ok(PointAheadSample {
                t_s: t,
                point_ahead_rad: g.point_ahead_rad,
                direction: g.point_ahead_dir,
            })
        })
        .collect()
}

/// Local east/north/up basis at a geocentric position.
pub(crate) fn local_basis(position: &Vec3) -> (Vec3, Vec3, Vec3) {
    let up = position / position.norm();
    let z = Vec3::z();
    let east = {
        let e = z.cross(&up);
        if e.norm() < 1e-12 {
            Vec3::y()
        } else {
            e.normalize()
        }
    };
    let north = up.cross(&east);
    (east, north, up)
}

/// Azimuth (from north, towards east) and elevation of `direction` seen from
/// `observer`.
pub fn azimuth_elevation(observer: &Vec3, direction: &Vec3) -> (f64, f64) {
    let (e, n, u) = local_basis(observer);
    let d = direction / direction.norm();
    let (de, dn, du) = (d.dot(&e), d.dot(&n), d.dot(&u));
    (de.atan2(dn), du.clamp(-1.0, 1.0).asin())
}

/// Components of a vector along the local azimuth and elevation unit vectors
/// of the line of sight at `(az, el)`, both expressed in the observer's
/// local frame.
pub fn tangent_components(observer: &Vec3, az: f64, el: f64, v: &Vec3) -> (f64, f64) {
    let (e, n, u) = local_basis(observer);
    let (sa, ca) = az.sin_cos();
    let (se, ce) = el.sin_cos();
    let az_hat = e * ca - n * sa;
    let el_hat = (e * sa + n * ca) * (-se) + u * ce;
    (v.dot(&az_hat), v.dot(&el_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PlatformSpec, GEO_ALTITUDE_M};

    fn state(p: Vec3, v: Vec3) -> PlatformState {
        PlatformState {
            t_s: 0.0,
            position: p,
            velocity: v,
        }
    }

    #[test]
    fn geo_at_zenith_range() {
        let site = PlatformSpec::GroundSite {
            latitude_deg: 0.0,
            longitude_deg: 120.0,
            altitude_m: 0.0,
        };
        let geo = PlatformSpec::Geo { longitude_deg: 120.0 };
        let g = link_geometry(
            &propagate(&site, 0.0, EarthRotation::Off).unwrap(),
            &propagate(&geo, 0.0, EarthRotation::Off).unwrap(),
        )
        .unwrap();
        assert!((g.range_m - 35_786_000.0).abs() < 1_000.0);
        assert!((g.elevation_rad - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert_eq!(g.point_ahead_rad, 0.0);
        assert!(g.point_ahead_dir.is_none());
    }

    #[test]
    fn static_pair_has_no_point_ahead() {
        let a = state(Vec3::new(EARTH_RADIUS_M, 0.0, 0.0), Vec3::zeros());
        let b = state(Vec3::new(EARTH_RADIUS_M, 1000.0, 0.0), Vec3::zeros());
        let g = link_geometry(&a, &b).unwrap();
        assert_eq!(g.transverse_speed, 0.0);
        assert_eq!(g.point_ahead_rad, 0.0);
    }

    #[test]
    fn point_ahead_for_7500_m_s() {
        // 2 * 7500 / 299792458 = 50.035 urad
        let a = state(Vec3::new(EARTH_RADIUS_M, 0.0, 0.0), Vec3::zeros());
        let b = state(
            Vec3::new(EARTH_RADIUS_M + 400_000.0, 0.0, 0.0),
            Vec3::new(0.0, 7_500.0, 0.0),
        );
        let g = link_geometry(&a, &b).unwrap();
        assert!((g.point_ahead_rad * 1e6 - 50.0).abs() < 0.1);
        let exact = point_ahead_light_time(&a, &b).unwrap();
        assert!((g.point_ahead_rad - exact).abs() / exact < 1e-6);
        assert_eq!(g.point_ahead_dir.unwrap(), Vec3::y());
    }

    #[test]
    fn coincident_positions_are_degenerate() {
        let a = state(Vec3::new(EARTH_RADIUS_M, 0.0, 0.0), Vec3::zeros());
        assert_eq!(link_geometry(&a, &a), Err(GeometryError::Degenerate));
    }

    #[test]
    fn earth_blocking() {
        let r = EARTH_RADIUS_M + GEO_ALTITUDE_M;
        let geo = Vec3::new(r, 0.0, 0.0);
        let leo_behind = Vec3::new(-(EARTH_RADIUS_M + 400_000.0), 0.0, 0.0);
        let leo_front = Vec3::new(EARTH_RADIUS_M + 400_000.0, 0.0, 0.0);
        assert!(earth_blocks(&geo, &leo_behind));
        assert!(!earth_blocks(&geo, &leo_front));
        let ground = Vec3::new(EARTH_RADIUS_M, 0.0, 0.0);
        assert!(!earth_blocks(&ground, &geo));
        assert!(earth_blocks(&ground, &leo_behind));
    }

    #[test]
    fn azimuth_elevation_of_local_axes() {
        let obs = Vec3::new(EARTH_RADIUS_M, 0.0, 0.0);
        // At lat 0, lon 0: east = +y, north = +z, up = +x.
        let (az, el) = azimuth_elevation(&obs, &Vec3::y());
        assert!((az - std::f64::consts::FRAC_PI_2).abs() < 1e-12 && el.abs() < 1e-12);
        let (_, el) = azimuth_elevation(&obs, &Vec3::x());
        assert!((el - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let (az, _) = azimuth_elevation(&obs, &Vec3::z());
        assert!(az.abs() < 1e-12);
    }
}
